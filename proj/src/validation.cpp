#include "exalt/validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>

namespace exalt {

namespace {

// label -> member row indices, noise excluded, keys ascending.
std::map<int, std::vector<std::size_t>> group_members(const Labeling& labels) {
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != kNoise) groups[labels[i]].push_back(i);
    return groups;
}

std::vector<std::vector<double>> centroids_of(const Dataset& ds,
                                              const std::map<int, std::vector<std::size_t>>& groups) {
    std::vector<std::vector<double>> cents;
    cents.reserve(groups.size());
    for (const auto& [label, members] : groups) {
        std::vector<double> c(ds.dim(), 0.0);
        for (std::size_t i : members)
            for (std::size_t j = 0; j < ds.dim(); ++j) c[j] += ds.features(i, j);
        for (double& v : c) v /= static_cast<double>(members.size());
        cents.push_back(std::move(c));
    }
    return cents;
}

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

double comb2(double x) { return x * (x - 1.0) / 2.0; }

} // namespace

std::pair<double, std::vector<double>> silhouette(const DistanceMatrix& dm, const Labeling& labels) {
    const std::size_t n = dm.n();
    if (labels.size() != n) throw std::invalid_argument("silhouette: labels length mismatch");

    auto groups = group_members(labels);
    if (groups.size() < 2)
        throw std::invalid_argument("silhouette: need at least 2 non-noise clusters, have " +
                                    std::to_string(groups.size()));

    std::vector<double> per_point(n, 0.0);
    double total = 0.0;
    std::size_t counted = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == kNoise) continue;
        const auto& own = groups.at(labels[i]);
        ++counted;
        if (own.size() == 1) continue; // singleton convention: s = 0

        double a = 0.0;
        for (std::size_t j : own)
            if (j != i) a += dm(i, j);
        a /= static_cast<double>(own.size() - 1);

        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, members] : groups) {
            if (label == labels[i]) continue;
            double mean = 0.0;
            for (std::size_t j : members) mean += dm(i, j);
            mean /= static_cast<double>(members.size());
            b = std::min(b, mean);
        }

        double denom = std::max(a, b);
        double s = denom > 0.0 ? (b - a) / denom : 0.0;
        per_point[i] = s;
        total += s;
    }
    return {counted ? total / static_cast<double>(counted) : 0.0, per_point};
}

double davies_bouldin(const Dataset& ds, const Labeling& labels) {
    if (labels.size() != ds.n()) throw std::invalid_argument("davies_bouldin: labels length mismatch");
    auto groups = group_members(labels);
    if (groups.size() < 2)
        throw std::invalid_argument("davies_bouldin: need at least 2 non-noise clusters");

    auto cents = centroids_of(ds, groups);
    std::vector<int> names;
    for (const auto& [label, members] : groups) names.push_back(label);

    std::vector<double> scatter(groups.size(), 0.0);
    std::size_t g = 0;
    for (const auto& [label, members] : groups) {
        for (std::size_t i : members)
            scatter[g] += std::sqrt(sq_dist(ds.features.row(i), cents[g]));
        scatter[g] /= static_cast<double>(members.size());
        ++g;
    }

    const std::size_t k = groups.size();
    double db = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double worst = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            if (j == i) continue;
            double m = std::sqrt(sq_dist(cents[i], cents[j]));
            if (m == 0.0)
                throw std::invalid_argument("davies_bouldin: coincident centroids for clusters " +
                                            std::to_string(names[i]) + " and " + std::to_string(names[j]));
            worst = std::max(worst, (scatter[i] + scatter[j]) / m);
        }
        db += worst;
    }
    return db / static_cast<double>(k);
}

double calinski_harabasz(const Dataset& ds, const Labeling& labels) {
    if (labels.size() != ds.n()) throw std::invalid_argument("calinski_harabasz: labels length mismatch");
    auto groups = group_members(labels);
    const std::size_t k = groups.size();
    std::size_t n = 0;
    for (const auto& [label, members] : groups) n += members.size();
    if (k < 2 || k > n - 1)
        throw std::invalid_argument("calinski_harabasz: need 2 <= k <= n-1 non-noise clusters");

    std::vector<double> overall(ds.dim(), 0.0);
    for (const auto& [label, members] : groups)
        for (std::size_t i : members)
            for (std::size_t j = 0; j < ds.dim(); ++j) overall[j] += ds.features(i, j);
    for (double& v : overall) v /= static_cast<double>(n);

    auto cents = centroids_of(ds, groups);
    double bss = 0.0, wss = 0.0;
    std::size_t g = 0;
    for (const auto& [label, members] : groups) {
        bss += static_cast<double>(members.size()) * sq_dist(cents[g], overall);
        for (std::size_t i : members) wss += sq_dist(ds.features.row(i), cents[g]);
        ++g;
    }
    if (wss == 0.0) throw std::invalid_argument("calinski_harabasz: zero within-cluster dispersion");
    return (bss / static_cast<double>(k - 1)) / (wss / static_cast<double>(n - k));
}

double adjusted_rand(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size()) throw std::invalid_argument("adjusted_rand: length mismatch");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("adjusted_rand: need at least 2 points");

    std::map<std::pair<int, int>, std::size_t> joint;
    std::map<int, std::size_t> ca, cb;
    for (std::size_t i = 0; i < n; ++i) {
        ++joint[{a[i], b[i]}];
        ++ca[a[i]];
        ++cb[b[i]];
    }

    double index = 0.0;
    for (const auto& [cell, count] : joint) index += comb2(static_cast<double>(count));
    double sum_a = 0.0, sum_b = 0.0;
    for (const auto& [label, count] : ca) sum_a += comb2(static_cast<double>(count));
    for (const auto& [label, count] : cb) sum_b += comb2(static_cast<double>(count));

    double expected = sum_a * sum_b / comb2(static_cast<double>(n));
    double max_index = 0.5 * (sum_a + sum_b);
    double denom = max_index - expected;
    if (denom == 0.0) return 1.0; // both partitions structurally identical
    return (index - expected) / denom;
}

double nmi(const Labeling& a, const Labeling& b) {
    if (a.size() != b.size()) throw std::invalid_argument("nmi: length mismatch");
    const auto n = static_cast<double>(a.size());
    if (a.empty()) throw std::invalid_argument("nmi: empty labelings");

    std::map<std::pair<int, int>, std::size_t> joint;
    std::map<int, std::size_t> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ++joint[{a[i], b[i]}];
        ++ca[a[i]];
        ++cb[b[i]];
    }

    auto entropy = [n](const std::map<int, std::size_t>& counts) {
        double h = 0.0;
        for (const auto& [label, count] : counts) {
            double p = static_cast<double>(count) / n;
            h -= p * std::log(p);
        }
        return h;
    };
    double ha = entropy(ca), hb = entropy(cb);
    if (ha == 0.0 && hb == 0.0) return 1.0;
    if (ha == 0.0 || hb == 0.0) return 0.0;

    double mi = 0.0;
    for (const auto& [cell, count] : joint) {
        double pij = static_cast<double>(count) / n;
        double pi = static_cast<double>(ca.at(cell.first)) / n;
        double pj = static_cast<double>(cb.at(cell.second)) / n;
        mi += pij * std::log(pij / (pi * pj));
    }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

ValidationScores compute_scores(const Dataset& ds, const DistanceMatrix& dm,
                                const Labeling& labels,
                                const std::optional<std::vector<int>>& truth) {
    ValidationScores scores;
    scores.silhouette = silhouette(dm, labels).first;
    scores.davies_bouldin = davies_bouldin(ds, labels);
    scores.calinski_harabasz = calinski_harabasz(ds, labels);
    scores.n_noise_excluded = count_noise(labels);
    if (truth) {
        scores.ari = adjusted_rand(labels, *truth);
        scores.nmi = nmi(labels, *truth);
    }
    return scores;
}

} // namespace exalt
