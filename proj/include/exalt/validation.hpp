#ifndef EXALT_VALIDATION_HPP
#define EXALT_VALIDATION_HPP

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "exalt/dataset.hpp"
#include "exalt/distance.hpp"
#include "exalt/labeling.hpp"

namespace exalt {

struct ValidationScores {
    double silhouette = 0.0;        // [-1, 1]
    double davies_bouldin = 0.0;    // >= 0, lower is better
    double calinski_harabasz = 0.0; // >= 0, higher is better
    std::optional<double> ari;      // present iff truth labels supplied
    std::optional<double> nmi;
    std::size_t n_noise_excluded = 0;

    bool operator==(const ValidationScores&) const = default;
};

// Mean silhouette and per-point values s(i) = (b-a)/max(a,b). Noise points
// are excluded from the mean and get 0 in the per-point vector; singleton
// clusters score 0 by convention. Needs >= 2 non-noise clusters.
std::pair<double, std::vector<double>> silhouette(const DistanceMatrix& dm, const Labeling& labels);

// Mean over clusters of the worst (S_i + S_j) / M_ij ratio, with S the mean
// Euclidean distance to the centroid and M the centroid distance. Errors on
// coincident centroids, naming the cluster pair.
double davies_bouldin(const Dataset& ds, const Labeling& labels);

// [BSS / (k-1)] / [WSS / (n-k)]. Errors when WSS is zero (undefined ratio).
double calinski_harabasz(const Dataset& ds, const Labeling& labels);

// Chance-corrected partition agreement; noise is treated as a cluster of
// its own. 1.0 iff the partitions are identical up to renaming.
double adjusted_rand(const Labeling& a, const Labeling& b);

// I(a;b) / sqrt(H(a) H(b)) with natural logs. Both partitions single-cluster
// gives 1.0 (H = 0 convention); exactly one single-cluster gives 0.0.
double nmi(const Labeling& a, const Labeling& b);

// All applicable scores in one record: internal indices on (dm, ds) plus
// ARI/NMI against truth when available.
ValidationScores compute_scores(const Dataset& ds, const DistanceMatrix& dm,
                                const Labeling& labels,
                                const std::optional<std::vector<int>>& truth);

} // namespace exalt

#endif // EXALT_VALIDATION_HPP
