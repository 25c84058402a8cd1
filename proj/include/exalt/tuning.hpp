#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "exalt/dataset.hpp"
#include "exalt/distance.hpp"

namespace exalt {

// Index of the interior curve point farthest (perpendicular) from the chord
// through the first and last points; ties -> lowest index. Fewer than three
// points falls back to index 0. This is the knee rule used by elbow_scan
// and by the pipeline when it reads an eps off a k-distance curve.
std::size_t knee_index(const std::vector<double>& xs, const std::vector<double>& ys);

// A parameter sweep: scores[i] belongs to values[i]; selected indexes both.
struct TuningCurve {
    std::vector<double> values;
    std::vector<double> scores;
    std::size_t selected = 0;

    bool operator==(const TuningCurve&) const = default;
};

// Inertia over k in [k_min, k_max]. Each k runs best-of-8 k-means++ restarts
// plus a warm start grown from the previous k's solution, so the curve is
// nonincreasing. The knee is the interior point with maximum perpendicular
// distance to the chord joining the endpoints; ties pick the smallest k.
TuningCurve elbow_scan(const Dataset& ds, std::size_t k_min, std::size_t k_max,
                       std::uint64_t seed);

// Mean silhouette of a k-means fit over k in [k_min, k_max]; selected =
// argmax score, ties toward the smallest k.
TuningCurve silhouette_scan(const Dataset& ds, std::size_t k_min, std::size_t k_max,
                            std::uint64_t seed);

// Distance to each point's min_pts-th nearest neighbor (self excluded),
// sorted ascending. Read the knee as a DBSCAN eps candidate.
std::vector<double> kdist_curve(const DistanceMatrix& dm, std::size_t min_pts);

} // namespace exalt
