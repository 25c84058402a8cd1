#ifndef EXALT_DATASET_HPP
#define EXALT_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exalt/matrix.hpp"

namespace exalt {

// Immutable n x d table with named features, optional ground-truth labels
// and optional per-row raw sequences (sequence datasets carry both the raw
// sequences and summary features so matrix algorithms apply unchanged).
struct Dataset {
    Matrix features;
    std::vector<std::string> feature_names;
    std::optional<std::vector<int>> truth;
    std::optional<std::vector<std::vector<double>>> sequences;

    std::size_t n() const { return features.rows(); }
    std::size_t dim() const { return features.cols(); }
};

struct ScalingParams {
    std::vector<double> mean;
    std::vector<double> stddev; // sigma = 0 recorded as 1 (feature passes through)
};

// CSV ingestion. First row is a header; feature cells parse as decimal
// reals, the label column (if named) as integers. Errors carry the file
// line number (header is line 1) and the column name.
Dataset load_csv(std::istream& in, const std::optional<std::string>& label_column = std::nullopt);

// Writes the feature matrix plus, when truth labels exist, a trailing
// `cluster` column. Same dialect as load_csv: comma separator, '.' decimal
// point, no quoting.
void write_csv(const Dataset& ds, std::ostream& out);

// Removes a feature column and returns it as integer labels. Used when a
// CSV carries both an assignment column and a truth column.
std::pair<Dataset, std::vector<int>> take_label_column(const Dataset& ds, const std::string& name);

// Per-feature zero-mean unit-variance scaling (population variance).
// Constant features pass through unchanged with sigma recorded as 1.
std::pair<Dataset, ScalingParams> standardize(const Dataset& ds);

// Isotropic Gaussian blobs (sigma=1) around centers whose minimum pairwise
// distance is exactly `separation`. Rows ordered cluster by cluster.
Dataset gen_blobs(std::size_t k, std::size_t per_cluster, std::size_t d,
                  double separation, std::uint64_t seed);

// Sequence family: each cluster is a sinusoid archetype with a distinct
// frequency; members are time-stretched renditions (length varies by up to
// +/- warp_frac) with additive Gaussian noise. Summary statistics
// (mean, std, min, max) form the feature matrix.
Dataset gen_event_sequences(std::size_t k, std::size_t per_cluster, std::size_t base_len,
                            double noise, std::uint64_t seed, double warp_frac = 0.2);

// Multi-stage process family: each cluster owns a row-stochastic
// stage-transition matrix; each row is a walk of fixed length and the
// features are the flattened empirical transition-count matrix.
Dataset gen_multistage(std::size_t k, std::size_t per_cluster, std::size_t stages,
                       std::uint64_t seed);

// Same, but with caller-supplied transition matrices (one per cluster) and
// an explicit walk length.
Dataset gen_multistage_walks(const std::vector<Matrix>& transition, std::size_t per_cluster,
                             std::size_t walk_len, std::uint64_t seed);

} // namespace exalt

#endif // EXALT_DATASET_HPP
