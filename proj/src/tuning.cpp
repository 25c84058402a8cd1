#include "exalt/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "exalt/clustering.hpp"
#include "exalt/rng.hpp"
#include "exalt/validation.hpp"

namespace exalt {

std::size_t knee_index(const std::vector<double>& xs, const std::vector<double>& ys) {
    const std::size_t m = xs.size();
    if (m < 3) return 0;
    double dx = xs[m - 1] - xs[0];
    double dy = ys[m - 1] - ys[0];
    std::size_t best = 1;
    double best_dist = -1.0;
    for (std::size_t i = 1; i + 1 < m; ++i) {
        double cross = dx * (ys[i] - ys[0]) - dy * (xs[i] - xs[0]);
        double dist = std::abs(cross); // common 1/|chord| factor dropped
        if (dist > best_dist) {
            best_dist = dist;
            best = i;
        }
    }
    return best;
}

namespace {

double far_point_sq(const Dataset& ds, const Matrix& cents, const Labeling& labels,
                    std::size_t* out_idx) {
    double far_d = -1.0;
    std::size_t far_i = 0;
    for (std::size_t i = 0; i < ds.n(); ++i) {
        double s = 0.0;
        auto xi = ds.features.row(i);
        auto c = cents.row(static_cast<std::size_t>(labels[i]));
        for (std::size_t j = 0; j < xi.size(); ++j) {
            double diff = xi[j] - c[j];
            s += diff * diff;
        }
        if (s > far_d) {
            far_d = s;
            far_i = i;
        }
    }
    *out_idx = far_i;
    return far_d;
}

} // namespace

TuningCurve elbow_scan(const Dataset& ds, std::size_t k_min, std::size_t k_max,
                       std::uint64_t seed) {
    if (k_min < 1 || k_min >= k_max || k_max > ds.n())
        throw std::invalid_argument("elbow_scan: need 1 <= k_min < k_max <= n, got [" +
                                    std::to_string(k_min) + ", " + std::to_string(k_max) +
                                    "] with n = " + std::to_string(ds.n()));

    TuningCurve curve;
    KMeansModel prev_model;
    Labeling prev_labels;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        auto [model, labels] = kmeans_fit(ds, k, 300, 8, derive_seed(seed, k));
        if (k > k_min) {
            // grow the previous solution by one centroid at its farthest
            // point; keeps the curve nonincreasing in k
            Matrix init(k, ds.dim());
            for (std::size_t c = 0; c + 1 < k; ++c)
                for (std::size_t j = 0; j < ds.dim(); ++j) init(c, j) = prev_model.centroids(c, j);
            std::size_t far_i = 0;
            far_point_sq(ds, prev_model.centroids, prev_labels, &far_i);
            for (std::size_t j = 0; j < ds.dim(); ++j) init(k - 1, j) = ds.features(far_i, j);
            auto [warm_model, warm_labels] = kmeans_refine(ds, init, 300);
            if (warm_model.inertia <= model.inertia) {
                model = std::move(warm_model);
                labels = std::move(warm_labels);
            }
        }
        curve.values.push_back(static_cast<double>(k));
        curve.scores.push_back(model.inertia);
        prev_model = std::move(model);
        prev_labels = std::move(labels);
    }
    curve.selected = knee_index(curve.values, curve.scores);
    return curve;
}

TuningCurve silhouette_scan(const Dataset& ds, std::size_t k_min, std::size_t k_max,
                            std::uint64_t seed) {
    if (k_min < 2 || k_min >= k_max || k_max + 1 > ds.n())
        throw std::invalid_argument("silhouette_scan: need 2 <= k_min < k_max <= n-1, got [" +
                                    std::to_string(k_min) + ", " + std::to_string(k_max) +
                                    "] with n = " + std::to_string(ds.n()));

    DistanceMatrix dm = pairwise_rows(ds.features);
    TuningCurve curve;
    for (std::size_t k = k_min; k <= k_max; ++k) {
        auto [model, labels] = kmeans_fit(ds, k, 300, 8, derive_seed(seed, k));
        curve.values.push_back(static_cast<double>(k));
        curve.scores.push_back(silhouette(dm, labels).first);
    }
    curve.selected = 0;
    for (std::size_t i = 1; i < curve.scores.size(); ++i)
        if (curve.scores[i] > curve.scores[curve.selected]) curve.selected = i;
    return curve;
}

std::vector<double> kdist_curve(const DistanceMatrix& dm, std::size_t min_pts) {
    const std::size_t n = dm.n();
    if (min_pts == 0) throw std::invalid_argument("kdist_curve: min_pts must be >= 1");
    if (min_pts >= n)
        throw std::invalid_argument("kdist_curve: min_pts = " + std::to_string(min_pts) +
                                    " must be below n = " + std::to_string(n));

    std::vector<double> out(n);
    std::vector<double> row;
    for (std::size_t i = 0; i < n; ++i) {
        row.clear();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) row.push_back(dm(i, j));
        std::nth_element(row.begin(), row.begin() + (min_pts - 1), row.end());
        out[i] = row[min_pts - 1];
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace exalt
