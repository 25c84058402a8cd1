#ifndef EXALT_DISTANCE_HPP
#define EXALT_DISTANCE_HPP

#include <cstddef>
#include <optional>
#include <span>
#include <string>

#include "exalt/dataset.hpp"
#include "exalt/matrix.hpp"

namespace exalt {

// Symmetric nonnegative n x n matrix with zero diagonal. Mirror entries are
// written from the same computation, so D(i,j) == D(j,i) bitwise.
struct DistanceMatrix {
    Matrix d;

    std::size_t n() const { return d.rows(); }
    double operator()(std::size_t i, std::size_t j) const { return d(i, j); }
};

enum class Metric { euclidean, dtw };

Metric metric_from_string(const std::string& name);
std::string to_string(Metric m);

double euclidean(std::span<const double> a, std::span<const double> b);

// Classic dynamic-time-warping cost: local cost |a_i - b_j|, steps
// {match, insert, delete}, no path normalization. `band` is a Sakoe-Chiba
// half-width; it must admit at least one path (band >= |len(a) - len(b)|).
// `normalize` divides the cost by len(a) + len(b); off by default and not
// used by pairwise.
double dtw(std::span<const double> a, std::span<const double> b,
           std::optional<std::size_t> band = std::nullopt, bool normalize = false);

// Full pairwise matrix; each unordered pair computed once. Metric::dtw
// requires the dataset to carry raw sequences.
DistanceMatrix pairwise(const Dataset& ds, Metric metric,
                        std::optional<std::size_t> dtw_band = std::nullopt);

// Pairwise Euclidean distances of an arbitrary row matrix.
DistanceMatrix pairwise_rows(const Matrix& rows);

} // namespace exalt

#endif // EXALT_DISTANCE_HPP
