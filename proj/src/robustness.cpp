#include "exalt/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

#include "exalt/distance.hpp"
#include "exalt/parallel.hpp"
#include "exalt/rng.hpp"
#include "exalt/validation.hpp"

namespace exalt {

namespace {

std::vector<double> feature_stds(const Matrix& x) {
    const std::size_t n = x.rows(), d = x.cols();
    std::vector<double> mean(d, 0.0), sd(d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) mean[j] += x(i, j);
    for (double& m : mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) {
            double diff = x(i, j) - mean[j];
            sd[j] += diff * diff;
        }
    for (double& v : sd) v = std::sqrt(v / static_cast<double>(n));
    return sd;
}

// Mean over runs of the co-cluster Jaccard between reference and run labels.
void accumulate_jaccard(const Labeling& ref, const Labeling& run, std::vector<double>& acc) {
    const std::size_t n = ref.size();
    std::map<int, std::size_t> ref_count, run_count;
    std::map<std::pair<int, int>, std::size_t> joint;
    for (std::size_t i = 0; i < n; ++i) {
        ++ref_count[ref[i]];
        ++run_count[run[i]];
        ++joint[{ref[i], run[i]}];
    }
    for (std::size_t i = 0; i < n; ++i) {
        double size_a = ref[i] == kNoise ? 0.0 : static_cast<double>(ref_count[ref[i]] - 1);
        double size_b = run[i] == kNoise ? 0.0 : static_cast<double>(run_count[run[i]] - 1);
        double inter = (ref[i] == kNoise || run[i] == kNoise)
                           ? 0.0
                           : static_cast<double>(joint[{ref[i], run[i]}] - 1);
        double uni = size_a + size_b - inter;
        acc[i] += uni == 0.0 ? 1.0 : inter / uni;
    }
}

} // namespace

Dataset perturb(const Dataset& ds, double noise_scale, std::uint64_t seed) {
    if (noise_scale < 0.0) throw std::invalid_argument("perturb: noise_scale must be >= 0");
    Dataset out = ds;
    if (noise_scale == 0.0 || ds.n() == 0) return out;

    Rng rng(seed);
    auto sd = feature_stds(ds.features);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < ds.dim(); ++j)
            out.features(i, j) += noise_scale * sd[j] * rng.normal();

    if (ds.sequences) {
        double mean = 0.0, var = 0.0;
        std::size_t total = 0;
        for (const auto& s : *ds.sequences)
            for (double v : s) {
                mean += v;
                ++total;
            }
        if (total > 0) {
            mean /= static_cast<double>(total);
            for (const auto& s : *ds.sequences)
                for (double v : s) var += (v - mean) * (v - mean);
            double seq_sd = std::sqrt(var / static_cast<double>(total));
            for (auto& s : *out.sequences)
                for (double& v : s) v += noise_scale * seq_sd * rng.normal();
        }
    }
    return out;
}

StabilityReport stability_analysis(const Dataset& ds, const ClusterAlgoConfig& cfg,
                                   std::size_t runs, double noise_scale, std::uint64_t seed,
                                   double fragile_threshold) {
    if (runs < 2) throw std::invalid_argument("stability_analysis: need runs >= 2");
    const std::size_t n = ds.n();

    const std::uint64_t fit_seed = derive_seed(seed, 0x51ab1e);
    Labeling reference = run_clustering(ds, cfg, fit_seed).labels;

    std::vector<Labeling> perturbed(runs);
    parallel_for(runs, [&](std::size_t r) {
        Dataset copy = perturb(ds, noise_scale, derive_seed(seed, r + 1));
        perturbed[r] = run_clustering(copy, cfg, fit_seed).labels;
    });

    StabilityReport report;
    report.runs = runs;
    report.noise_scale = noise_scale;
    report.fragile_threshold = fragile_threshold;

    double ari_sum = 0.0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < runs; ++a)
        for (std::size_t b = a + 1; b < runs; ++b) {
            ari_sum += adjusted_rand(perturbed[a], perturbed[b]);
            ++pairs;
        }
    report.global_stability = ari_sum / static_cast<double>(pairs);

    report.per_point.assign(n, 0.0);
    for (std::size_t r = 0; r < runs; ++r)
        accumulate_jaccard(reference, perturbed[r], report.per_point);
    for (double& v : report.per_point) v /= static_cast<double>(runs);

    for (std::size_t i = 0; i < n; ++i)
        if (report.per_point[i] < fragile_threshold) report.fragile_points.push_back(i);
    return report;
}

AlternativeSet alternatives(const Dataset& ds, const Labeling& incumbent,
                            const ClusterAlgoConfig& cfg, std::size_t count,
                            std::uint64_t seed) {
    if (incumbent.size() != ds.n())
        throw std::invalid_argument("alternatives: incumbent length does not match dataset");
    const std::size_t n = ds.n();

    struct Candidate {
        ClusterAlgoConfig cfg;
        std::uint64_t seed = 0;
        std::string provenance;
    };
    std::vector<Candidate> pool;
    if (cfg.algorithm == "dbscan") {
        for (double f : {0.5, 0.75, 1.25, 1.5}) {
            Candidate c{cfg, 0, ""};
            c.cfg.dbscan.eps = cfg.dbscan.eps * f;
            c.provenance = "dbscan eps=" + std::to_string(c.cfg.dbscan.eps) +
                           " min_pts=" + std::to_string(cfg.dbscan.min_pts);
            pool.push_back(std::move(c));
        }
    } else {
        std::vector<std::size_t> ks;
        for (long long dk = -2; dk <= 2; ++dk) {
            long long k = static_cast<long long>(cfg.k) + dk;
            k = std::max<long long>(2, std::min<long long>(k, static_cast<long long>(n) - 1));
            if (std::find(ks.begin(), ks.end(), static_cast<std::size_t>(k)) == ks.end())
                ks.push_back(static_cast<std::size_t>(k));
        }
        std::sort(ks.begin(), ks.end());
        for (std::size_t k : ks)
            for (std::size_t s = 0; s < 3; ++s) {
                Candidate c{cfg, derive_seed(seed, 100 + k * 8 + s), ""};
                c.cfg.k = k;
                c.provenance = cfg.algorithm + " k=" + std::to_string(k) + " seed#" +
                               std::to_string(s);
                pool.push_back(std::move(c));
            }
    }

    DistanceMatrix dm = pairwise(ds, cfg.metric, cfg.dtw_band);

    std::vector<AlternativeEntry> kept;
    for (const auto& cand : pool) {
        Labeling labels;
        double quality = 0.0;
        try {
            labels = run_clustering(ds, dm, cand.cfg, cand.seed).labels;
            quality = silhouette(dm, labels).first;
        } catch (const std::invalid_argument&) {
            continue; // degenerate candidate (single cluster / all noise)
        }
        if (adjusted_rand(labels, incumbent) == 1.0) continue;
        bool dup = false;
        for (const auto& entry : kept)
            if (adjusted_rand(labels, entry.labels) == 1.0) {
                dup = true;
                break;
            }
        if (dup) continue;
        AlternativeEntry entry;
        entry.labels = std::move(labels);
        entry.quality = quality;
        entry.diversity = 1.0 - adjusted_rand(entry.labels, incumbent);
        entry.provenance = cand.provenance;
        kept.push_back(std::move(entry));
    }

    AlternativeSet result;
    if (kept.empty()) {
        result.empty_pool = true;
        return result;
    }

    std::vector<bool> on_front(kept.size(), true);
    for (std::size_t i = 0; i < kept.size(); ++i)
        for (std::size_t j = 0; j < kept.size(); ++j) {
            if (i == j) continue;
            bool ge = kept[j].quality >= kept[i].quality && kept[j].diversity >= kept[i].diversity;
            bool gt = kept[j].quality > kept[i].quality || kept[j].diversity > kept[i].diversity;
            if (ge && gt) {
                on_front[i] = false;
                break;
            }
        }

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < kept.size(); ++i)
        if (on_front[i]) order.push_back(i);
    for (std::size_t i = 0; i < kept.size(); ++i)
        if (!on_front[i]) order.push_back(i);

    auto by_quality = [&](std::size_t a, std::size_t b) {
        if (kept[a].quality != kept[b].quality) return kept[a].quality > kept[b].quality;
        if (kept[a].diversity != kept[b].diversity) return kept[a].diversity > kept[b].diversity;
        return a < b;
    };
    std::size_t front_size = static_cast<std::size_t>(
        std::count(on_front.begin(), on_front.end(), true));
    std::stable_sort(order.begin(), order.begin() + front_size, by_quality);
    std::stable_sort(order.begin() + front_size, order.end(), by_quality);

    std::size_t take = std::min(count, order.size());
    for (std::size_t i = 0; i < take; ++i) result.entries.push_back(std::move(kept[order[i]]));
    std::stable_sort(result.entries.begin(), result.entries.end(),
                     [](const AlternativeEntry& a, const AlternativeEntry& b) {
                         return a.quality > b.quality;
                     });
    return result;
}

} // namespace exalt
