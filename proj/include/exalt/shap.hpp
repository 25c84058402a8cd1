#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "exalt/matrix.hpp"
#include "exalt/surrogate.hpp"

namespace exalt {

struct ShapExplanation {
    double base_value = 0;       // expected model output over the background
    std::vector<double> phi;     // per-feature attribution
    double model_output = 0;     // base_value + sum(phi) up to 1e-6
    int explained_class = -1;
};

struct GlobalImportance {
    std::vector<double> mean_abs_phi;
    std::vector<std::size_t> ranking; // feature indices, descending importance

    bool operator==(const GlobalImportance&) const = default;
};

using PredictFn = std::function<double(std::span<const double>)>;

// KernelSHAP. v(S) = mean over background rows of predict with features in
// S taken from x, the rest from the row. All 2^d coalitions are enumerated
// when d <= 11 (exact Shapley values); larger d samples whole
// coalition-size levels outside-in (1, d-1, 2, d-2, ...) until nsamples is
// spent, so nsamples >= 2^d reproduces exact mode. Weighted least squares
// with Shapley-kernel weights, efficiency enforced by eliminating the last
// free attribution.
ShapExplanation kernel_shap(const PredictFn& predict, const Matrix& background,
                            std::span<const double> x, std::size_t nsamples = 2048,
                            std::uint64_t seed = 42);

// Path-dependent TreeSHAP over the tree's probability for explained_class,
// weighting untaken branches by training covers.
ShapExplanation tree_shap(const SurrogateTree& tree, std::span<const double> x,
                          int explained_class);

// Mean |phi| per feature and the descending importance ranking (ties toward
// the lowest feature index).
GlobalImportance global_importance(const std::vector<ShapExplanation>& explanations);

} // namespace exalt
