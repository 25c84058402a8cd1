#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "exalt/clustering.hpp"
#include "exalt/dataset.hpp"
#include "exalt/labeling.hpp"

namespace exalt {

struct StabilityReport {
    double global_stability = 0;       // mean pairwise ARI across perturbed labelings
    std::vector<double> per_point;     // co-cluster Jaccard vs reference, mean over runs
    std::size_t runs = 0;
    double noise_scale = 0;
    double fragile_threshold = 0.5;
    std::vector<std::size_t> fragile_points; // per_point below threshold
};

struct AlternativeEntry {
    Labeling labels;
    double quality = 0;   // silhouette on the original data
    double diversity = 0; // 1 - ARI vs the incumbent labeling
    std::string provenance;
};

struct AlternativeSet {
    std::vector<AlternativeEntry> entries; // sorted by quality descending
    bool empty_pool = false;               // pool vanished after dedup
};

// Additive Gaussian noise, per-feature sigma = noise_scale x that feature's
// std. Truth labels carry through. Sequence datasets also get element-wise
// noise scaled by the overall sequence std, so sequence metrics feel the
// perturbation too. noise_scale 0 returns the input unchanged.
Dataset perturb(const Dataset& ds, double noise_scale, std::uint64_t seed);

// Reference fit on ds, then `runs` fits on perturbed copies. Every fit uses
// the same algorithm seed; only the perturbation stream varies, so a
// noise_scale of 0 scores exactly 1. Per-point score i = Jaccard similarity
// of i's co-cluster set (reference vs perturbed), empty sets matching only
// each other, averaged over runs.
StabilityReport stability_analysis(const Dataset& ds, const ClusterAlgoConfig& cfg,
                                   std::size_t runs, double noise_scale, std::uint64_t seed,
                                   double fragile_threshold = 0.5);

// Candidate pool from seed and parameter variation (k +/- 2 over 3 seeds for
// kmeans/gmm, eps x {0.5, 0.75, 1.25, 1.5} for dbscan). Candidates matching
// the incumbent or an already-kept entry at ARI = 1 are dropped; the
// quality/diversity Pareto front is kept first, then filled by quality until
// `count` entries.
AlternativeSet alternatives(const Dataset& ds, const Labeling& incumbent,
                            const ClusterAlgoConfig& cfg, std::size_t count,
                            std::uint64_t seed);

} // namespace exalt
