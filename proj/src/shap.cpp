#include "exalt/shap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_set>

#include "exalt/rng.hpp"

namespace exalt {

namespace {

double binom(std::size_t n, std::size_t k) {
    if (k > n) return 0.0;
    k = std::min(k, n - k);
    double r = 1.0;
    for (std::size_t i = 1; i <= k; ++i)
        r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
    return r;
}

// Coalition-size order 1, d-1, 2, d-2, ... so truncation keeps the
// highest-weight levels complete.
std::vector<std::size_t> level_order(std::size_t d) {
    std::vector<std::size_t> order;
    std::size_t lo = 1, hi = d - 1;
    while (lo < hi) {
        order.push_back(lo++);
        order.push_back(hi--);
    }
    if (lo == hi) order.push_back(lo);
    return order;
}

void masks_of_size(std::size_t d, std::size_t s, std::vector<std::uint64_t>& out) {
    // lexicographic enumeration via Gosper's hack
    std::uint64_t mask = (s == 0) ? 0 : ((1ULL << s) - 1);
    std::uint64_t limit = 1ULL << d;
    while (mask < limit) {
        out.push_back(mask);
        if (mask == 0) break;
        std::uint64_t c = mask & (~mask + 1);
        std::uint64_t r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
}

// Solves A x = b in place; A is row-major m x m.
std::vector<double> solve_linear(std::vector<double> a, std::vector<double> b) {
    const std::size_t m = b.size();
    for (std::size_t col = 0; col < m; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < m; ++r)
            if (std::abs(a[r * m + col]) > std::abs(a[piv * m + col])) piv = r;
        if (std::abs(a[piv * m + col]) < 1e-12)
            throw std::runtime_error("kernel_shap: singular regression system");
        if (piv != col) {
            for (std::size_t j = 0; j < m; ++j) std::swap(a[col * m + j], a[piv * m + j]);
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < m; ++r) {
            double f = a[r * m + col] / a[col * m + col];
            if (f == 0.0) continue;
            for (std::size_t j = col; j < m; ++j) a[r * m + j] -= f * a[col * m + j];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(m, 0.0);
    for (std::size_t r = m; r-- > 0;) {
        double s = b[r];
        for (std::size_t j = r + 1; j < m; ++j) s -= a[r * m + j] * x[j];
        x[r] = s / (a[r * m + r]);
    }
    return x;
}

} // namespace

ShapExplanation kernel_shap(const PredictFn& predict, const Matrix& background,
                            std::span<const double> x, std::size_t nsamples,
                            std::uint64_t seed) {
    const std::size_t d = x.size();
    const std::size_t nb = background.rows();
    if (nb == 0) throw std::invalid_argument("kernel_shap: empty background");
    if (background.cols() != d)
        throw std::invalid_argument("kernel_shap: background has " +
                                    std::to_string(background.cols()) + " features, x has " +
                                    std::to_string(d));
    if (d == 0) throw std::invalid_argument("kernel_shap: x has no features");
    if (d > 63) throw std::invalid_argument("kernel_shap: more than 63 features unsupported");

    auto check = [](double v) {
        if (!std::isfinite(v)) throw std::runtime_error("kernel_shap: predict returned a non-finite value");
        return v;
    };

    std::vector<double> z(d);
    auto value_of = [&](std::uint64_t mask) {
        double total = 0.0;
        for (std::size_t b = 0; b < nb; ++b) {
            for (std::size_t j = 0; j < d; ++j)
                z[j] = (mask >> j) & 1ULL ? x[j] : background(b, j);
            total += check(predict(z));
        }
        return total / static_cast<double>(nb);
    };

    ShapExplanation out;
    out.phi.assign(d, 0.0);
    out.base_value = value_of(0);
    out.model_output = check(predict(std::vector<double>(x.begin(), x.end())));
    const double delta = out.model_output - out.base_value;

    if (d == 1) {
        out.phi[0] = delta;
        return out;
    }

    const bool exact = d <= 11;

    // choose coalitions: (mask, kernel weight)
    std::vector<std::pair<std::uint64_t, double>> coalitions;
    std::vector<std::uint64_t> level;
    if (exact) {
        for (std::size_t s = 1; s < d; ++s) {
            double w = static_cast<double>(d - 1) /
                       (binom(d, s) * static_cast<double>(s) * static_cast<double>(d - s));
            level.clear();
            masks_of_size(d, s, level);
            for (std::uint64_t m : level) coalitions.emplace_back(m, w);
        }
    } else {
        if (nsamples < 2 * d)
            throw std::invalid_argument("kernel_shap: nsamples must be at least 2*d for sampled mode");
        Rng rng(seed);
        std::size_t budget = nsamples;
        for (std::size_t s : level_order(d)) {
            if (budget == 0) break;
            double w = static_cast<double>(d - 1) /
                       (binom(d, s) * static_cast<double>(s) * static_cast<double>(d - s));
            double level_size = binom(d, s);
            if (level_size <= static_cast<double>(budget)) {
                level.clear();
                masks_of_size(d, s, level);
                for (std::uint64_t m : level) coalitions.emplace_back(m, w);
                budget -= level.size();
                continue;
            }
            // partial level: sample distinct masks of size s
            std::unordered_set<std::uint64_t> seen;
            std::vector<std::size_t> idx(d);
            while (seen.size() < budget) {
                for (std::size_t j = 0; j < d; ++j) idx[j] = j;
                std::uint64_t mask = 0;
                for (std::size_t j = 0; j < s; ++j) {
                    std::size_t pick = j + static_cast<std::size_t>(rng.uniform_int(d - j));
                    std::swap(idx[j], idx[pick]);
                    mask |= 1ULL << idx[j];
                }
                if (seen.insert(mask).second) coalitions.emplace_back(mask, w);
            }
            budget = 0;
        }
    }

    // weighted least squares on phi[0..d-2]; phi[d-1] eliminated by the
    // efficiency constraint sum(phi) = delta
    const std::size_t m = d - 1;
    std::vector<double> ata(m * m, 0.0), atb(m, 0.0), c(m);
    for (const auto& [mask, w] : coalitions) {
        double ind = (mask >> (d - 1)) & 1ULL ? 1.0 : 0.0;
        for (std::size_t j = 0; j < m; ++j) c[j] = ((mask >> j) & 1ULL ? 1.0 : 0.0) - ind;
        double target = value_of(mask) - out.base_value - ind * delta;
        for (std::size_t p = 0; p < m; ++p) {
            if (c[p] == 0.0) continue;
            atb[p] += w * c[p] * target;
            for (std::size_t q = 0; q < m; ++q) ata[p * m + q] += w * c[p] * c[q];
        }
    }
    std::vector<double> head = solve_linear(std::move(ata), std::move(atb));
    double tail = delta;
    for (std::size_t j = 0; j < m; ++j) {
        out.phi[j] = head[j];
        tail -= head[j];
    }
    out.phi[d - 1] = tail;
    return out;
}

namespace {

struct PathElement {
    int feature = -1;
    double zero_fraction = 0;
    double one_fraction = 0;
    double pweight = 0;
};

void extend_path(std::vector<PathElement>& m, double pz, double po, int pi) {
    const std::size_t l = m.size();
    m.push_back({pi, pz, po, l == 0 ? 1.0 : 0.0});
    for (std::size_t i = l; i-- > 0;) {
        m[i + 1].pweight += po * m[i].pweight * static_cast<double>(i + 1) /
                            static_cast<double>(l + 1);
        m[i].pweight = pz * m[i].pweight * static_cast<double>(l - i) /
                       static_cast<double>(l + 1);
    }
}

void unwind_path(std::vector<PathElement>& m, std::size_t i) {
    const std::size_t l = m.size() - 1;
    const double o = m[i].one_fraction;
    const double z = m[i].zero_fraction;
    double carry = m[l].pweight;
    for (std::size_t j = l; j-- > 0;) {
        if (o != 0.0) {
            double t = m[j].pweight;
            m[j].pweight = carry * static_cast<double>(l + 1) /
                           (static_cast<double>(j + 1) * o);
            carry = t - m[j].pweight * z * static_cast<double>(l - j) /
                            static_cast<double>(l + 1);
        } else {
            m[j].pweight = m[j].pweight * static_cast<double>(l + 1) /
                           (z * static_cast<double>(l - j));
        }
    }
    for (std::size_t j = i; j < l; ++j) {
        m[j].feature = m[j + 1].feature;
        m[j].zero_fraction = m[j + 1].zero_fraction;
        m[j].one_fraction = m[j + 1].one_fraction;
    }
    m.pop_back();
}

double unwound_path_sum(const std::vector<PathElement>& m, std::size_t i) {
    const std::size_t l = m.size() - 1;
    const double o = m[i].one_fraction;
    const double z = m[i].zero_fraction;
    double total = 0.0;
    if (o != 0.0) {
        double carry = m[l].pweight;
        for (std::size_t j = l; j-- > 0;) {
            double t = carry * static_cast<double>(l + 1) / (static_cast<double>(j + 1) * o);
            total += t;
            carry = m[j].pweight - t * z * static_cast<double>(l - j) /
                                       static_cast<double>(l + 1);
        }
    } else {
        for (std::size_t j = l; j-- > 0;)
            total += m[j].pweight * static_cast<double>(l + 1) /
                     (z * static_cast<double>(l - j));
    }
    return total;
}

struct TreeShapCtx {
    const SurrogateTree* tree = nullptr;
    std::span<const double> x;
    std::size_t cls = 0;
    std::vector<double>* phi = nullptr;
};

void ts_recurse(const TreeShapCtx& ctx, int idx, std::vector<PathElement> m, double pz,
                double po, int pi) {
    const TreeNode& node = ctx.tree->nodes[static_cast<std::size_t>(idx)];
    extend_path(m, pz, po, pi);

    if (node.feature < 0) {
        double value = node.distribution[ctx.cls];
        for (std::size_t i = 1; i < m.size(); ++i) {
            double w = unwound_path_sum(m, i);
            (*ctx.phi)[static_cast<std::size_t>(m[i].feature)] +=
                w * (m[i].one_fraction - m[i].zero_fraction) * value;
        }
        return;
    }

    auto f = static_cast<std::size_t>(node.feature);
    int hot = ctx.x[f] <= node.threshold ? node.left : node.right;
    int cold = hot == node.left ? node.right : node.left;
    double cover = static_cast<double>(node.cover);
    double hot_frac = static_cast<double>(ctx.tree->nodes[static_cast<std::size_t>(hot)].cover) / cover;
    double cold_frac = static_cast<double>(ctx.tree->nodes[static_cast<std::size_t>(cold)].cover) / cover;

    double iz = 1.0, io = 1.0;
    for (std::size_t k = 1; k < m.size(); ++k)
        if (m[k].feature == node.feature) {
            iz = m[k].zero_fraction;
            io = m[k].one_fraction;
            unwind_path(m, k);
            break;
        }

    ts_recurse(ctx, hot, m, iz * hot_frac, io, node.feature);
    ts_recurse(ctx, cold, std::move(m), iz * cold_frac, 0.0, node.feature);
}

double expected_value(const SurrogateTree& tree, int idx, std::size_t cls) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
    if (node.feature < 0) return node.distribution[cls];
    double cover = static_cast<double>(node.cover);
    double left = static_cast<double>(tree.nodes[static_cast<std::size_t>(node.left)].cover);
    double right = static_cast<double>(tree.nodes[static_cast<std::size_t>(node.right)].cover);
    return left / cover * expected_value(tree, node.left, cls) +
           right / cover * expected_value(tree, node.right, cls);
}

} // namespace

ShapExplanation tree_shap(const SurrogateTree& tree, std::span<const double> x,
                          int explained_class) {
    if (tree.nodes.empty()) throw std::invalid_argument("tree_shap: empty tree");
    if (x.size() != tree.n_features)
        throw std::invalid_argument("tree_shap: point dimension " + std::to_string(x.size()) +
                                    " does not match tree dimension " +
                                    std::to_string(tree.n_features));
    if (explained_class < 0 || static_cast<std::size_t>(explained_class) >= tree.n_classes)
        throw std::invalid_argument("tree_shap: explained class " +
                                    std::to_string(explained_class) + " out of range");
    for (const auto& node : tree.nodes)
        if (node.cover == 0) throw std::invalid_argument("tree_shap: zero-cover node");

    ShapExplanation out;
    out.explained_class = explained_class;
    out.phi.assign(tree.n_features, 0.0);
    auto cls = static_cast<std::size_t>(explained_class);
    out.base_value = expected_value(tree, 0, cls);
    out.model_output = tree_predict_proba1(tree, x, explained_class);

    TreeShapCtx ctx{&tree, x, cls, &out.phi};
    ts_recurse(ctx, 0, {}, 1.0, 1.0, -1);
    return out;
}

GlobalImportance global_importance(const std::vector<ShapExplanation>& explanations) {
    if (explanations.empty())
        throw std::invalid_argument("global_importance: no explanations supplied");
    const std::size_t d = explanations.front().phi.size();
    GlobalImportance gi;
    gi.mean_abs_phi.assign(d, 0.0);
    for (const auto& e : explanations) {
        if (e.phi.size() != d)
            throw std::invalid_argument("global_importance: inconsistent feature counts");
        for (std::size_t j = 0; j < d; ++j) gi.mean_abs_phi[j] += std::abs(e.phi[j]);
    }
    for (double& v : gi.mean_abs_phi) v /= static_cast<double>(explanations.size());

    gi.ranking.resize(d);
    for (std::size_t j = 0; j < d; ++j) gi.ranking[j] = j;
    std::stable_sort(gi.ranking.begin(), gi.ranking.end(), [&](std::size_t a, std::size_t b) {
        return gi.mean_abs_phi[a] > gi.mean_abs_phi[b];
    });
    return gi;
}

} // namespace exalt
