#include "exalt/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

#include "exalt/parallel.hpp"
#include "exalt/rng.hpp"

namespace exalt {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// eigenvalues; eigenvectors end up in the columns of `vecs`.
std::vector<double> jacobi_eigen(Matrix a, Matrix& vecs) {
    const std::size_t n = a.rows();
    vecs = Matrix(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) vecs(i, i) = 1.0;

    for (std::size_t sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-24) break;

        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0) continue;
                double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t i = 0; i < n; ++i) {
                    double aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * aiq;
                    a(i, q) = s * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * aqi;
                    a(q, i) = s * api + c * aqi;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = vecs(i, p), viq = vecs(i, q);
                    vecs(i, p) = c * vip - s * viq;
                    vecs(i, q) = s * vip + c * viq;
                }
            }
    }
    std::vector<double> vals(n);
    for (std::size_t i = 0; i < n; ++i) vals[i] = a(i, i);
    return vals;
}

Matrix centered(const Matrix& x) {
    Matrix out = x;
    const std::size_t n = x.rows(), d = x.cols();
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += x(i, j);
        mean /= static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) out(i, j) -= mean;
    }
    return out;
}

Matrix sq_dists(const Matrix& x) {
    const std::size_t n = x.rows();
    Matrix d2(n, n, 0.0);
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t f = 0; f < x.cols(); ++f) {
                double diff = x(i, f) - x(j, f);
                s += diff * diff;
            }
            d2(i, j) = s;
            d2(j, i) = s;
        }
    });
    return d2;
}

} // namespace

Embedding2D pca2d(const Dataset& ds) {
    const std::size_t n = ds.n(), d = ds.dim();
    if (n < 3) throw std::invalid_argument("pca2d: need at least 3 rows");
    if (d < 2) throw std::invalid_argument("pca2d: need at least 2 features");

    Matrix xc = centered(ds.features);
    Matrix cov(d, d, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t p = 0; p < d; ++p)
            for (std::size_t q = p; q < d; ++q) cov(p, q) += xc(i, p) * xc(i, q);
    double total_var = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
        for (std::size_t q = p; q < d; ++q) {
            cov(p, q) /= static_cast<double>(n);
            cov(q, p) = cov(p, q);
        }
        total_var += cov(p, p);
    }
    if (total_var == 0.0) throw std::invalid_argument("pca2d: all rows identical (rank 0)");

    Matrix vecs;
    std::vector<double> vals = jacobi_eigen(cov, vecs);
    std::vector<std::size_t> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] > vals[b]; });

    Embedding2D emb;
    emb.method = "pca";
    emb.params = "components=2";
    emb.coords = Matrix(n, 2, 0.0);
    for (std::size_t comp = 0; comp < 2; ++comp) {
        std::size_t col = order[comp];
        // sign convention: largest-magnitude loading positive
        std::size_t arg = 0;
        for (std::size_t j = 1; j < d; ++j)
            if (std::abs(vecs(j, col)) > std::abs(vecs(arg, col))) arg = j;
        double sign = vecs(arg, col) < 0.0 ? -1.0 : 1.0;
        for (std::size_t i = 0; i < n; ++i) {
            double proj = 0.0;
            for (std::size_t j = 0; j < d; ++j) proj += xc(i, j) * vecs(j, col);
            emb.coords(i, comp) = sign * proj;
        }
    }
    std::size_t tk = std::min<std::size_t>(10, (n - 1) / 2);
    emb.quality = trustworthiness(ds, emb, tk);
    return emb;
}

namespace {

// Conditional affinities for one point via bandwidth bisection.
void p_conditional_row(const Matrix& d2, std::size_t i, double log_perp,
                       std::vector<double>& row) {
    const std::size_t n = d2.rows();
    double beta = 1.0;
    double beta_lo = 0.0, beta_hi = std::numeric_limits<double>::infinity();

    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) dmin = std::min(dmin, d2(i, j));

    for (std::size_t it = 0; it < 100; ++it) {
        double sum = 0.0, weighted = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) {
                row[j] = 0.0;
                continue;
            }
            double e = d2(i, j) - dmin; // shift-invariant entropy
            double w = std::exp(-beta * e);
            row[j] = w;
            sum += w;
            weighted += e * w;
        }
        double h = std::log(sum) + beta * weighted / sum;
        double diff = h - log_perp;
        if (std::abs(diff) < 1e-4) break;
        if (diff > 0) {
            beta_lo = beta;
            beta = std::isinf(beta_hi) ? beta * 2.0 : (beta + beta_hi) / 2.0;
        } else {
            beta_hi = beta;
            beta = (beta + beta_lo) / 2.0;
        }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) sum += row[j];
    for (std::size_t j = 0; j < n; ++j) row[j] /= sum;
}

double kl_divergence(const Matrix& p, const Matrix& y, Matrix& w, double* z_out) {
    const std::size_t n = y.rows();
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double dx = y(i, 0) - y(j, 0), dy = y(i, 1) - y(j, 1);
            double v = 1.0 / (1.0 + dx * dx + dy * dy);
            w(i, j) = v;
            w(j, i) = v;
            z += 2.0 * v;
        }
    double kl = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            double q = std::max(w(i, j) / z, 1e-12);
            kl += p(i, j) * std::log(p(i, j) / q);
        }
    *z_out = z;
    return kl;
}

} // namespace

Embedding2D tsne(const Dataset& ds, double perplexity, std::size_t iters, std::uint64_t seed) {
    const std::size_t n = ds.n();
    if (n < 10) throw std::invalid_argument("tsne: need at least 10 rows");
    if (perplexity < 1.0 || perplexity > static_cast<double>(n - 1) / 3.0)
        throw std::invalid_argument("tsne: perplexity " + std::to_string(perplexity) +
                                    " infeasible for n = " + std::to_string(n) +
                                    " (need 1 <= perplexity <= (n-1)/3)");

    Matrix d2 = sq_dists(ds.features);
    Matrix pc(n, n, 0.0);
    const double log_perp = std::log(perplexity);
    {
        std::vector<std::vector<double>> rows(n, std::vector<double>(n, 0.0));
        parallel_for(n, [&](std::size_t i) { p_conditional_row(d2, i, log_perp, rows[i]); });
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                pc(i, j) = std::max((rows[i][j] + rows[j][i]) / (2.0 * static_cast<double>(n)),
                                    i == j ? 0.0 : 1e-12);
    }

    Rng rng(seed);
    Matrix y(n, 2), update(n, 2, 0.0), grad(n, 2, 0.0), w(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < 2; ++c) y(i, c) = 1e-4 * rng.normal();

    const std::size_t exagg_until = std::min<std::size_t>(250, iters);
    const double exaggeration = 12.0;
    double eta = 200.0;
    Matrix p_run = pc; // current target (exaggerated during the first phase)
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) p_run(i, j) = pc(i, j) * exaggeration;

    Embedding2D emb;
    emb.method = "tsne";
    {
        char buf[128];
        std::snprintf(buf, sizeof buf, "perplexity=%g iters=%zu seed=%llu", perplexity, iters,
                      static_cast<unsigned long long>(seed));
        emb.params = buf;
    }

    double z = 0.0;
    double kl_prev = kl_divergence(p_run, y, w, &z);
    for (std::size_t iter = 0; iter < iters; ++iter) {
        if (iter == exagg_until && exagg_until != iters) {
            p_run = pc;
            kl_prev = kl_divergence(p_run, y, w, &z);
        }
        double momentum = iter < 250 ? 0.5 : 0.8;

        // gradient at current y (w and z already match y)
        for (std::size_t i = 0; i < n; ++i) {
            grad(i, 0) = 0.0;
            grad(i, 1) = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                double q = std::max(w(i, j) / z, 1e-12);
                double mult = 4.0 * (p_run(i, j) - q) * w(i, j);
                grad(i, 0) += mult * (y(i, 0) - y(j, 0));
                grad(i, 1) += mult * (y(i, 1) - y(j, 1));
            }
        }

        bool enforced = iter >= exagg_until;
        Matrix y_prev = y;
        for (;;) {
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t c = 0; c < 2; ++c) {
                    double step = momentum * update(i, c) - eta * grad(i, c);
                    update(i, c) = step;
                    y(i, c) = y_prev(i, c) + step;
                }
            double mean0 = 0.0, mean1 = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                mean0 += y(i, 0);
                mean1 += y(i, 1);
            }
            mean0 /= static_cast<double>(n);
            mean1 /= static_cast<double>(n);
            for (std::size_t i = 0; i < n; ++i) {
                y(i, 0) -= mean0;
                y(i, 1) -= mean1;
            }
            double kl = kl_divergence(p_run, y, w, &z);
            if (!enforced || kl <= kl_prev + 1e-9 || eta < 1e-12) {
                kl_prev = kl;
                break;
            }
            // reject: restore, halve the step, drop momentum memory
            y = y_prev;
            eta /= 2.0;
            for (auto& v : update.data()) v = 0.0;
        }
        if (enforced) emb.kl_trace.push_back(kl_prev);
        if (eta < 1e-12 && enforced) break; // step size exhausted, converged
    }
    // w/z correspond to the final y

    emb.coords = std::move(y);
    std::size_t tk = std::min<std::size_t>(10, (n - 1) / 2);
    emb.quality = trustworthiness(ds, emb, tk);
    return emb;
}

double trustworthiness(const Dataset& ds, const Embedding2D& emb, std::size_t k) {
    const std::size_t n = ds.n();
    if (emb.coords.rows() != n)
        throw std::invalid_argument("trustworthiness: embedding size mismatch");
    if (k == 0 || 2 * k >= n)
        throw std::invalid_argument("trustworthiness: need 1 <= k < n/2, got k = " +
                                    std::to_string(k) + " with n = " + std::to_string(n));

    Matrix d2_orig = sq_dists(ds.features);
    Matrix d2_emb = sq_dists(emb.coords);

    // rank_orig(i, j) = 1-based rank of j among i's original-space
    // distances; ties broken by index
    Matrix rank_orig(n, n, 0.0);
    std::vector<std::vector<std::size_t>> knn_orig(n), knn_emb(n);
    parallel_for(n, [&](std::size_t i) {
        std::vector<std::size_t> order;
        order.reserve(n - 1);
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) order.push_back(j);
        auto by = [&](const Matrix& d) {
            return [&d, i](std::size_t a, std::size_t b) {
                if (d(i, a) != d(i, b)) return d(i, a) < d(i, b);
                return a < b;
            };
        };
        std::sort(order.begin(), order.end(), by(d2_orig));
        for (std::size_t r = 0; r < order.size(); ++r)
            rank_orig(i, order[r]) = static_cast<double>(r + 1);
        knn_orig[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));

        std::sort(order.begin(), order.end(), by(d2_emb));
        knn_emb[i].assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
    });

    double penalty = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j : knn_emb[i]) {
            bool in_orig = std::find(knn_orig[i].begin(), knn_orig[i].end(), j) !=
                           knn_orig[i].end();
            if (!in_orig) penalty += rank_orig(i, j) - static_cast<double>(k);
        }
    }
    double nf = static_cast<double>(n), kf = static_cast<double>(k);
    return 1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * penalty;
}

} // namespace exalt
