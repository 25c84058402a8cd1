#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "exalt/dataset.hpp"
#include "exalt/matrix.hpp"

namespace exalt {

struct Embedding2D {
    Matrix coords; // n x 2
    std::string method;
    std::string params;
    double quality = 0;           // trustworthiness at the default k
    std::vector<double> kl_trace; // tsne only: KL at each post-exaggeration step
};

// Projection onto the top-2 principal components (eigenvalue descending;
// per-component sign fixed so the largest-magnitude loading is positive).
Embedding2D pca2d(const Dataset& ds);

// Exact O(n^2) t-SNE. Per-point bandwidths bisected until the conditional
// entropy matches log(perplexity) within 1e-4; early exaggeration x12 for
// the first 250 iterations; after the exaggeration phase the step size
// halves whenever a step would raise KL, so the recorded trace is
// nonincreasing.
Embedding2D tsne(const Dataset& ds, double perplexity = 30.0, std::size_t iters = 1000,
                 std::uint64_t seed = 42);

// Standard trustworthiness in [0,1]: penalizes embedded k-neighborhoods by
// the original-space rank excess of intruding points. Both neighborhoods
// break distance ties by index.
double trustworthiness(const Dataset& ds, const Embedding2D& emb, std::size_t k);

} // namespace exalt
