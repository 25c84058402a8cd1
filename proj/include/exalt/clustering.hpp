#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exalt/dataset.hpp"
#include "exalt/distance.hpp"
#include "exalt/labeling.hpp"
#include "exalt/matrix.hpp"

namespace exalt {

struct KMeansModel {
    Matrix centroids;   // k x d
    double inertia = 0; // sum of squared distances to assigned centroid
    std::size_t iterations = 0;
    std::uint64_t seed = 0;
};

struct DbscanParams {
    double eps = 0.5;
    std::size_t min_pts = 5;
};

struct GmmModel {
    Matrix means;       // k x d
    Matrix variances;   // k x d, diagonal covariance
    std::vector<double> weights;
    std::vector<double> loglik_trace; // total data log-likelihood per EM iteration
    std::size_t iterations = 0;
    bool converged = false;
};

// Hard k-means. k-means++ seeding, Lloyd iterations, best of `restarts`
// independent runs by inertia. Empty clusters are repaired by stealing the
// point farthest from its centroid among clusters with more than one member.
std::pair<KMeansModel, Labeling> kmeans_fit(const Dataset& ds, std::size_t k,
                                            std::size_t max_iter = 300,
                                            std::size_t restarts = 8,
                                            std::uint64_t seed = 42);

Labeling kmeans_predict(const KMeansModel& model, const Dataset& ds);

// Lloyd iterations from caller-supplied initial centroids (warm start).
// Final inertia never exceeds the inertia of the initial assignment.
std::pair<KMeansModel, Labeling> kmeans_refine(const Dataset& ds, const Matrix& init_centroids,
                                               std::size_t max_iter = 300);

// Density clustering over a precomputed distance matrix. Cluster ids are
// assigned in ascending order of the seed point's row index; expansion
// visits neighbors in ascending index order. Non-core unreachable points
// get kNoise.
Labeling dbscan_fit(const DistanceMatrix& dm, const DbscanParams& params);

// Diagonal-covariance Gaussian mixture via EM. Initialized from a k-means
// run on the same seed. Log-likelihood is nondecreasing across iterations
// (up to 1e-9); stops when the improvement drops below tol.
std::tuple<GmmModel, Labeling, Matrix> gmm_fit(const Dataset& ds, std::size_t k,
                                               std::size_t max_iter = 300,
                                               double tol = 1e-6,
                                               std::uint64_t seed = 42);

// Per-row posterior responsibilities, rows sum to 1.
Matrix gmm_predict_proba(const GmmModel& model, const Dataset& ds);

// One config for every algorithm so pipelines can hold a single value.
struct ClusterAlgoConfig {
    std::string algorithm = "kmeans"; // kmeans | dbscan | gmm
    std::size_t k = 3;
    std::size_t max_iter = 300;
    std::size_t restarts = 8;
    double tol = 1e-6;
    DbscanParams dbscan;
    Metric metric = Metric::euclidean;
    std::optional<std::size_t> dtw_band;
};

// Runs the configured algorithm. DBSCAN ignores `seed`. Returns the
// labeling plus the fitted k-means model when algorithm == "kmeans"
// and the fitted GMM when algorithm == "gmm".
struct ClusterResult {
    Labeling labels;
    std::optional<KMeansModel> kmeans;
    std::optional<GmmModel> gmm;
    std::optional<Matrix> responsibilities;
};

ClusterResult run_clustering(const Dataset& ds, const DistanceMatrix& dm,
                             const ClusterAlgoConfig& cfg, std::uint64_t seed);

// Same, computing the distance matrix internally when the algorithm
// actually consumes one (DBSCAN only).
ClusterResult run_clustering(const Dataset& ds, const ClusterAlgoConfig& cfg,
                             std::uint64_t seed);

} // namespace exalt
