#include "exalt/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>
#include <tuple>

#include "exalt/error.hpp"
#include "exalt/parallel.hpp"
#include "exalt/rng.hpp"

namespace exalt {

namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        double d = a[j] - b[j];
        s += d * d;
    }
    return s;
}

// Nearest centroid, ties toward the lowest index.
std::size_t nearest(const Matrix& cents, std::span<const double> x) {
    std::size_t best = 0;
    double best_d = sq_dist(cents.row(0), x);
    for (std::size_t c = 1; c < cents.rows(); ++c) {
        double d = sq_dist(cents.row(c), x);
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return best;
}

struct KmRun {
    Matrix centroids;
    Labeling labels;
    double inertia = 0;
    std::size_t iterations = 0;
};

Matrix seed_pp(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows();
    Matrix cents(k, x.cols());
    auto put = [&](std::size_t c, std::size_t i) {
        for (std::size_t j = 0; j < x.cols(); ++j) cents(c, j) = x(i, j);
    };
    put(0, rng.uniform_int(n));

    std::vector<double> d2(n, std::numeric_limits<double>::infinity());
    for (std::size_t c = 1; c < k; ++c) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            d2[i] = std::min(d2[i], sq_dist(x.row(i), cents.row(c - 1)));
            total += d2[i];
        }
        if (total <= 0.0) {
            // all remaining mass on already-chosen points (duplicates)
            put(c, rng.uniform_int(n));
            continue;
        }
        double r = rng.uniform() * total;
        double acc = 0.0;
        std::size_t pick = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            acc += d2[i];
            if (r < acc) {
                pick = i;
                break;
            }
        }
        put(c, pick);
    }
    return cents;
}

KmRun lloyd_loop(const Matrix& x, Matrix init, std::size_t max_iter) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t k = init.rows();

    KmRun run;
    run.centroids = std::move(init);
    run.labels.assign(n, -1);

    std::vector<std::size_t> counts(k, 0);
    for (std::size_t iter = 0; iter < std::max<std::size_t>(max_iter, 1); ++iter) {
        bool changed = false;
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            int c = static_cast<int>(nearest(run.centroids, x.row(i)));
            if (c != run.labels[i]) {
                run.labels[i] = c;
                changed = true;
            }
            ++counts[static_cast<std::size_t>(c)];
        }

        // empty clusters steal the point currently farthest from its centroid
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far_i = n;
            double far_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                auto own = static_cast<std::size_t>(run.labels[i]);
                if (counts[own] <= 1) continue;
                double dist = sq_dist(x.row(i), run.centroids.row(own));
                if (dist > far_d) {
                    far_d = dist;
                    far_i = i;
                }
            }
            if (far_i == n) break; // only singletons left; duplicates beyond capacity
            --counts[static_cast<std::size_t>(run.labels[far_i])];
            run.labels[far_i] = static_cast<int>(c);
            ++counts[c];
            changed = true;
        }

        run.iterations = iter + 1;
        if (!changed) break;

        Matrix next(k, d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            auto c = static_cast<std::size_t>(run.labels[i]);
            for (std::size_t j = 0; j < d; ++j) next(c, j) += x(i, j);
        }
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < d; ++j) next(c, j) /= static_cast<double>(counts[c]);
        run.centroids = std::move(next);
    }

    run.inertia = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        run.inertia += sq_dist(x.row(i), run.centroids.row(static_cast<std::size_t>(run.labels[i])));
    return run;
}

KmRun kmeans_single(const Matrix& x, std::size_t k, std::size_t max_iter, std::uint64_t seed) {
    Rng rng(seed);
    return lloyd_loop(x, seed_pp(x, k, rng), max_iter);
}

double log_sum_exp(std::span<const double> v) {
    double m = -std::numeric_limits<double>::infinity();
    for (double x : v) m = std::max(m, x);
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

constexpr double kVarFloor = 1e-6;
constexpr double kLog2Pi = 1.8378770664093453;

// Fills resp with posteriors for the current params; returns total loglik.
double gmm_e_step(const Matrix& x, const GmmModel& m, Matrix& resp) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t k = m.weights.size();

    std::vector<double> log_w(k), log_norm(k, 0.0);
    for (std::size_t c = 0; c < k; ++c) {
        log_w[c] = std::log(m.weights[c]);
        for (std::size_t j = 0; j < d; ++j)
            log_norm[c] -= 0.5 * (kLog2Pi + std::log(m.variances(c, j)));
    }

    std::vector<double> partial(n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        std::vector<double> lp(k);
        for (std::size_t c = 0; c < k; ++c) {
            double quad = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                double diff = x(i, j) - m.means(c, j);
                quad += diff * diff / m.variances(c, j);
            }
            lp[c] = log_w[c] + log_norm[c] - 0.5 * quad;
        }
        double lse = log_sum_exp(lp);
        for (std::size_t c = 0; c < k; ++c) resp(i, c) = std::exp(lp[c] - lse);
        partial[i] = lse;
    });

    double loglik = 0.0;
    for (double v : partial) loglik += v;
    return loglik;
}

void gmm_m_step(const Matrix& x, const Matrix& resp, GmmModel& m) {
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    const std::size_t k = m.weights.size();

    std::vector<double> nk(k, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c) nk[c] += resp(i, c);

    Matrix means(k, d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < d; ++j) means(c, j) += resp(i, c) * x(i, j);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < d; ++j) means(c, j) /= nk[c];

    Matrix vars(k, d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < k; ++c)
            for (std::size_t j = 0; j < d; ++j) {
                double diff = x(i, j) - means(c, j);
                vars(c, j) += resp(i, c) * diff * diff;
            }
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t j = 0; j < d; ++j) vars(c, j) = vars(c, j) / nk[c] + kVarFloor;

    for (std::size_t c = 0; c < k; ++c) m.weights[c] = nk[c] / static_cast<double>(n);
    m.means = std::move(means);
    m.variances = std::move(vars);
}

} // namespace

std::pair<KMeansModel, Labeling> kmeans_fit(const Dataset& ds, std::size_t k,
                                            std::size_t max_iter, std::size_t restarts,
                                            std::uint64_t seed) {
    const std::size_t n = ds.n();
    if (k == 0) throw std::invalid_argument("kmeans_fit: k must be at least 1");
    if (k > n)
        throw std::invalid_argument("kmeans_fit: k = " + std::to_string(k) + " exceeds n = " +
                                    std::to_string(n));
    restarts = std::max<std::size_t>(restarts, 1);

    std::vector<KmRun> runs(restarts);
    parallel_for(restarts, [&](std::size_t r) {
        runs[r] = kmeans_single(ds.features, k, max_iter, derive_seed(seed, r));
    });

    std::size_t best = 0;
    for (std::size_t r = 1; r < restarts; ++r)
        if (runs[r].inertia < runs[best].inertia) best = r;

    KMeansModel model;
    model.centroids = std::move(runs[best].centroids);
    model.inertia = runs[best].inertia;
    model.iterations = runs[best].iterations;
    model.seed = seed;
    return {std::move(model), std::move(runs[best].labels)};
}

std::pair<KMeansModel, Labeling> kmeans_refine(const Dataset& ds, const Matrix& init_centroids,
                                               std::size_t max_iter) {
    const std::size_t k = init_centroids.rows();
    if (k == 0 || k > ds.n())
        throw std::invalid_argument("kmeans_refine: need 1 <= k <= n initial centroids");
    if (init_centroids.cols() != ds.dim())
        throw std::invalid_argument("kmeans_refine: centroid dimension mismatch");

    KmRun run = lloyd_loop(ds.features, init_centroids, max_iter);
    KMeansModel model;
    model.centroids = std::move(run.centroids);
    model.inertia = run.inertia;
    model.iterations = run.iterations;
    model.seed = 0;
    return {std::move(model), std::move(run.labels)};
}

Labeling kmeans_predict(const KMeansModel& model, const Dataset& ds) {
    if (ds.dim() != model.centroids.cols())
        throw std::invalid_argument("kmeans_predict: point dimension " + std::to_string(ds.dim()) +
                                    " does not match model dimension " +
                                    std::to_string(model.centroids.cols()));
    Labeling labels(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i)
        labels[i] = static_cast<int>(nearest(model.centroids, ds.features.row(i)));
    return labels;
}

Labeling dbscan_fit(const DistanceMatrix& dm, const DbscanParams& params) {
    if (params.eps <= 0.0) throw std::invalid_argument("dbscan_fit: eps must be > 0");
    if (params.min_pts == 0) throw std::invalid_argument("dbscan_fit: min_pts must be >= 1");
    const std::size_t n = dm.n();

    // neighborhoods include the point itself and come out index-ascending
    std::vector<std::vector<std::size_t>> nbrs(n);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = 0; j < n; ++j)
            if (dm(i, j) <= params.eps) nbrs[i].push_back(j);
    });

    Labeling labels(n, kNoise);
    int cluster = 0;
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != kNoise || nbrs[i].size() < params.min_pts) continue;
        labels[i] = cluster;
        queue.assign(1, i);
        while (!queue.empty()) {
            std::size_t p = queue.front();
            queue.pop_front();
            if (nbrs[p].size() < params.min_pts) continue; // border point, no expansion
            for (std::size_t q : nbrs[p]) {
                if (labels[q] != kNoise) continue;
                labels[q] = cluster;
                queue.push_back(q);
            }
        }
        ++cluster;
    }
    return labels;
}

std::tuple<GmmModel, Labeling, Matrix> gmm_fit(const Dataset& ds, std::size_t k,
                                               std::size_t max_iter, double tol,
                                               std::uint64_t seed) {
    const std::size_t n = ds.n();
    const std::size_t d = ds.dim();
    if (k == 0) throw std::invalid_argument("gmm_fit: k must be at least 1");
    if (k > n)
        throw std::invalid_argument("gmm_fit: k = " + std::to_string(k) + " exceeds n = " +
                                    std::to_string(n));

    auto [km, km_labels] = kmeans_fit(ds, k, 100, 4, seed);

    GmmModel model;
    model.means = km.centroids;
    model.variances = Matrix(k, d, 0.0);
    model.weights.assign(k, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) ++counts[static_cast<std::size_t>(km_labels[i])];
    for (std::size_t i = 0; i < n; ++i) {
        auto c = static_cast<std::size_t>(km_labels[i]);
        for (std::size_t j = 0; j < d; ++j) {
            double diff = ds.features(i, j) - model.means(c, j);
            model.variances(c, j) += diff * diff;
        }
    }
    for (std::size_t c = 0; c < k; ++c) {
        model.weights[c] = static_cast<double>(counts[c]) / static_cast<double>(n);
        for (std::size_t j = 0; j < d; ++j)
            model.variances(c, j) = model.variances(c, j) / static_cast<double>(counts[c]) + kVarFloor;
    }

    Matrix resp(n, k);
    for (std::size_t iter = 0; iter < max_iter; ++iter) {
        double loglik = gmm_e_step(ds.features, model, resp);
        model.loglik_trace.push_back(loglik);
        std::size_t t = model.loglik_trace.size();
        if (t >= 2 && loglik - model.loglik_trace[t - 2] < tol) {
            model.converged = true;
            break;
        }
        gmm_m_step(ds.features, resp, model);
    }
    if (!model.converged) {
        // max_iter exhausted; sync responsibilities with the final params
        model.loglik_trace.push_back(gmm_e_step(ds.features, model, resp));
    }
    model.iterations = model.loglik_trace.size();

    Labeling labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < k; ++c)
            if (resp(i, c) > resp(i, best)) best = c;
        labels[i] = static_cast<int>(best);
    }
    return {std::move(model), std::move(labels), std::move(resp)};
}

Matrix gmm_predict_proba(const GmmModel& model, const Dataset& ds) {
    if (ds.dim() != model.means.cols())
        throw std::invalid_argument("gmm_predict_proba: point dimension " +
                                    std::to_string(ds.dim()) + " does not match model dimension " +
                                    std::to_string(model.means.cols()));
    Matrix resp(ds.n(), model.weights.size());
    gmm_e_step(ds.features, model, resp);
    return resp;
}

ClusterResult run_clustering(const Dataset& ds, const DistanceMatrix& dm,
                             const ClusterAlgoConfig& cfg, std::uint64_t seed) {
    ClusterResult result;
    if (cfg.algorithm == "kmeans") {
        auto [model, labels] = kmeans_fit(ds, cfg.k, cfg.max_iter, cfg.restarts, seed);
        result.kmeans = std::move(model);
        result.labels = std::move(labels);
    } else if (cfg.algorithm == "dbscan") {
        result.labels = dbscan_fit(dm, cfg.dbscan);
    } else if (cfg.algorithm == "gmm") {
        auto [model, labels, resp] = gmm_fit(ds, cfg.k, cfg.max_iter, cfg.tol, seed);
        result.gmm = std::move(model);
        result.labels = std::move(labels);
        result.responsibilities = std::move(resp);
    } else {
        throw ConfigError("unknown clustering algorithm '" + cfg.algorithm + "'");
    }
    return result;
}

ClusterResult run_clustering(const Dataset& ds, const ClusterAlgoConfig& cfg,
                             std::uint64_t seed) {
    DistanceMatrix dm;
    if (cfg.algorithm == "dbscan") dm = pairwise(ds, cfg.metric, cfg.dtw_band);
    return run_clustering(ds, dm, cfg, seed);
}

} // namespace exalt
