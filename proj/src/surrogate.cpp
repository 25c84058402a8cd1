#include "exalt/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace exalt {

namespace {

double gini(const std::vector<std::size_t>& counts, std::size_t total) {
    if (total == 0) return 0.0;
    double g = 1.0;
    for (std::size_t c : counts) {
        double p = static_cast<double>(c) / static_cast<double>(total);
        g -= p * p;
    }
    return g;
}

struct Split {
    bool found = false;
    std::size_t feature = 0;
    double threshold = 0;
    double decrease = 0;
};

Split best_split(const Matrix& x, const Labeling& y, const std::vector<std::size_t>& rows,
                 std::size_t n_classes, std::size_t min_leaf) {
    const std::size_t m = rows.size();
    std::vector<std::size_t> parent_counts(n_classes, 0);
    for (std::size_t r : rows) ++parent_counts[static_cast<std::size_t>(y[r])];
    double parent_gini = gini(parent_counts, m);

    Split best;
    std::vector<std::size_t> order(rows);
    std::vector<std::size_t> left_counts(n_classes);
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            if (x(a, f) != x(b, f)) return x(a, f) < x(b, f);
            return a < b;
        });
        std::fill(left_counts.begin(), left_counts.end(), 0);
        for (std::size_t pos = 0; pos + 1 < m; ++pos) {
            ++left_counts[static_cast<std::size_t>(y[order[pos]])];
            double v = x(order[pos], f);
            double next = x(order[pos + 1], f);
            if (v == next) continue; // not a boundary between distinct values
            std::size_t n_left = pos + 1;
            std::size_t n_right = m - n_left;
            if (n_left < min_leaf || n_right < min_leaf) continue;

            double g_left = gini(left_counts, n_left);
            double g_right;
            {
                double g = 1.0;
                for (std::size_t c = 0; c < n_classes; ++c) {
                    double p = static_cast<double>(parent_counts[c] - left_counts[c]) /
                               static_cast<double>(n_right);
                    g -= p * p;
                }
                g_right = g;
            }
            double weighted = (static_cast<double>(n_left) * g_left +
                               static_cast<double>(n_right) * g_right) /
                              static_cast<double>(m);
            // ties (within fp noise) keep the earlier feature/threshold
            double decrease = parent_gini - weighted;
            if (decrease > best.decrease + 1e-15) {
                best.found = true;
                best.feature = f;
                best.threshold = v + (next - v) / 2.0;
                best.decrease = decrease;
            }
        }
    }
    return best;
}

} // namespace

std::size_t SurrogateTree::depth() const {
    if (nodes.empty()) return 0;
    std::function<std::size_t(int)> walk = [&](int idx) -> std::size_t {
        const TreeNode& node = nodes[static_cast<std::size_t>(idx)];
        if (node.feature < 0) return 0;
        return 1 + std::max(walk(node.left), walk(node.right));
    };
    return walk(0);
}

std::size_t SurrogateTree::leaf_count() const {
    std::size_t count = 0;
    for (const auto& node : nodes)
        if (node.feature < 0) ++count;
    return count;
}

SurrogateTree tree_fit(const Dataset& ds, const Labeling& labels, std::size_t max_depth,
                       std::size_t min_leaf) {
    const std::size_t n = ds.n();
    if (labels.size() != n) throw std::invalid_argument("tree_fit: labels length mismatch");
    if (n == 0) throw std::invalid_argument("tree_fit: empty dataset");
    if (min_leaf == 0) min_leaf = std::max<std::size_t>(5, n / 100);

    int max_label = 0;
    for (int l : labels) {
        if (l < 0)
            throw std::invalid_argument("tree_fit: NOISE labels present; map them to a class first");
        max_label = std::max(max_label, l);
    }
    const std::size_t n_classes = static_cast<std::size_t>(max_label) + 1;

    if (n < 2 * min_leaf)
        throw std::invalid_argument("tree_fit: n = " + std::to_string(n) +
                                    " is below 2*min_leaf = " + std::to_string(2 * min_leaf));

    SurrogateTree tree;
    tree.n_classes = n_classes;
    tree.n_features = ds.dim();
    tree.max_depth = max_depth;
    tree.min_leaf = min_leaf;

    std::function<int(std::vector<std::size_t>, std::size_t)> build =
        [&](std::vector<std::size_t> rows, std::size_t depth) -> int {
        TreeNode node;
        node.cover = rows.size();
        std::vector<std::size_t> counts(n_classes, 0);
        for (std::size_t r : rows) ++counts[static_cast<std::size_t>(labels[r])];
        bool pure = std::count(counts.begin(), counts.end(), rows.size()) == 1;

        Split split;
        if (!pure && depth < max_depth && rows.size() >= 2 * min_leaf)
            split = best_split(ds.features, labels, rows, n_classes, min_leaf);

        int idx = static_cast<int>(tree.nodes.size());
        if (!split.found) {
            node.distribution.resize(n_classes);
            for (std::size_t c = 0; c < n_classes; ++c)
                node.distribution[c] =
                    static_cast<double>(counts[c]) / static_cast<double>(rows.size());
            tree.nodes.push_back(std::move(node));
            return idx;
        }

        node.feature = static_cast<int>(split.feature);
        node.threshold = split.threshold;
        tree.nodes.push_back(std::move(node));

        std::vector<std::size_t> left_rows, right_rows;
        for (std::size_t r : rows)
            (ds.features(r, split.feature) <= split.threshold ? left_rows : right_rows)
                .push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        int left = build(std::move(left_rows), depth + 1);
        int right = build(std::move(right_rows), depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].left = left;
        tree.nodes[static_cast<std::size_t>(idx)].right = right;
        return idx;
    };

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    build(std::move(all), 0);
    return tree;
}

namespace {

const TreeNode& route(const SurrogateTree& tree, std::span<const double> x) {
    const TreeNode* node = &tree.nodes[0];
    while (node->feature >= 0) {
        int next = x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left
                                                                                 : node->right;
        node = &tree.nodes[static_cast<std::size_t>(next)];
    }
    return *node;
}

} // namespace

std::pair<Labeling, Matrix> tree_predict(const SurrogateTree& tree, const Dataset& ds) {
    if (ds.dim() != tree.n_features)
        throw std::invalid_argument("tree_predict: point dimension " + std::to_string(ds.dim()) +
                                    " does not match tree dimension " +
                                    std::to_string(tree.n_features));
    const std::size_t n = ds.n();
    Labeling labels(n);
    Matrix probs(n, tree.n_classes);
    for (std::size_t i = 0; i < n; ++i) {
        const TreeNode& leaf = route(tree, ds.features.row(i));
        std::size_t best = 0;
        for (std::size_t c = 0; c < tree.n_classes; ++c) {
            probs(i, c) = leaf.distribution[c];
            if (leaf.distribution[c] > leaf.distribution[best]) best = c;
        }
        labels[i] = static_cast<int>(best);
    }
    return {std::move(labels), std::move(probs)};
}

double tree_predict_proba1(const SurrogateTree& tree, std::span<const double> x, int cls) {
    if (x.size() != tree.n_features)
        throw std::invalid_argument("tree_predict_proba1: dimension mismatch");
    if (cls < 0 || static_cast<std::size_t>(cls) >= tree.n_classes)
        throw std::invalid_argument("tree_predict_proba1: class out of range");
    return route(tree, x).distribution[static_cast<std::size_t>(cls)];
}

RuleList tree_rules(const SurrogateTree& tree) {
    RuleList rules;

    struct Bound {
        std::optional<double> lower, upper;
    };
    std::function<void(int, std::vector<std::pair<std::size_t, Bound>>&)> walk =
        [&](int idx, std::vector<std::pair<std::size_t, Bound>>& bounds) {
            const TreeNode& node = tree.nodes[static_cast<std::size_t>(idx)];
            if (node.feature < 0) {
                Rule rule;
                for (const auto& [f, b] : bounds) {
                    if (!b.lower && !b.upper) continue;
                    rule.conditions.push_back({f, b.lower, b.upper});
                }
                std::sort(rule.conditions.begin(), rule.conditions.end(),
                          [](const RuleCondition& a, const RuleCondition& b) {
                              return a.feature < b.feature;
                          });
                std::size_t best = 0;
                for (std::size_t c = 1; c < node.distribution.size(); ++c)
                    if (node.distribution[c] > node.distribution[best]) best = c;
                rule.label = static_cast<int>(best);
                rule.confidence = node.distribution[best];
                rule.cover = node.cover;
                rules.push_back(std::move(rule));
                return;
            }

            auto f = static_cast<std::size_t>(node.feature);
            auto it = std::find_if(bounds.begin(), bounds.end(),
                                   [f](const auto& p) { return p.first == f; });
            if (it == bounds.end()) {
                bounds.push_back({f, {}});
                it = bounds.end() - 1;
            }
            std::size_t pos = static_cast<std::size_t>(it - bounds.begin());

            Bound saved = bounds[pos].second;
            // left: f <= t tightens the upper bound
            if (!saved.upper || node.threshold < *saved.upper)
                bounds[pos].second.upper = node.threshold;
            walk(node.left, bounds);
            bounds[pos].second = saved;

            // right: f > t tightens the lower bound
            if (!saved.lower || node.threshold > *saved.lower)
                bounds[pos].second.lower = node.threshold;
            walk(node.right, bounds);
            bounds[pos].second = saved;
        };

    std::vector<std::pair<std::size_t, Bound>> bounds;
    walk(0, bounds);
    std::stable_sort(rules.begin(), rules.end(),
                     [](const Rule& a, const Rule& b) { return a.cover > b.cover; });
    return rules;
}

std::string rule_to_string(const Rule& rule, const std::vector<std::string>& feature_names) {
    auto fname = [&](std::size_t f) {
        return f < feature_names.size() ? feature_names[f] : "f" + std::to_string(f);
    };
    auto num = [](double v) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.6g", v);
        return std::string(buf);
    };
    std::string text;
    for (const auto& cond : rule.conditions) {
        if (!text.empty()) text += " and ";
        if (cond.lower && cond.upper)
            text += num(*cond.lower) + " < " + fname(cond.feature) + " <= " + num(*cond.upper);
        else if (cond.upper)
            text += fname(cond.feature) + " <= " + num(*cond.upper);
        else
            text += fname(cond.feature) + " > " + num(*cond.lower);
    }
    if (text.empty()) text = "always";
    char buf[96];
    std::snprintf(buf, sizeof buf, " => cluster %d (confidence %.3f, cover %zu)", rule.label,
                  rule.confidence, rule.cover);
    return text + buf;
}

double tree_fidelity(const SurrogateTree& tree, const Dataset& ds, const Labeling& labels) {
    if (labels.size() != ds.n()) throw std::invalid_argument("tree_fidelity: labels length mismatch");
    if (ds.n() == 0) return 0.0;
    auto [pred, probs] = tree_predict(tree, ds);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ds.n(); ++i)
        if (pred[i] == labels[i]) ++hits;
    return static_cast<double>(hits) / static_cast<double>(ds.n());
}

std::string tree_to_json(const SurrogateTree& tree) {
    nlohmann::json j;
    j["n_classes"] = tree.n_classes;
    j["n_features"] = tree.n_features;
    j["max_depth"] = tree.max_depth;
    j["min_leaf"] = tree.min_leaf;
    auto nodes = nlohmann::json::array();
    for (const auto& node : tree.nodes) {
        nlohmann::json nj;
        nj["feature"] = node.feature;
        nj["cover"] = node.cover;
        if (node.feature >= 0) {
            nj["threshold"] = node.threshold;
            nj["left"] = node.left;
            nj["right"] = node.right;
        } else {
            nj["distribution"] = node.distribution;
        }
        nodes.push_back(std::move(nj));
    }
    j["nodes"] = std::move(nodes);
    return j.dump(2) + "\n";
}

SurrogateTree tree_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("tree_from_json: ") + e.what());
    }
    try {
        SurrogateTree tree;
        tree.n_classes = j.at("n_classes").get<std::size_t>();
        tree.n_features = j.at("n_features").get<std::size_t>();
        tree.max_depth = j.at("max_depth").get<std::size_t>();
        tree.min_leaf = j.at("min_leaf").get<std::size_t>();
        for (const auto& nj : j.at("nodes")) {
            TreeNode node;
            node.feature = nj.at("feature").get<int>();
            node.cover = nj.at("cover").get<std::size_t>();
            if (node.feature >= 0) {
                node.threshold = nj.at("threshold").get<double>();
                node.left = nj.at("left").get<int>();
                node.right = nj.at("right").get<int>();
            } else {
                node.distribution = nj.at("distribution").get<std::vector<double>>();
            }
            tree.nodes.push_back(std::move(node));
        }
        if (tree.nodes.empty()) throw std::invalid_argument("tree_from_json: no nodes");
        for (const auto& node : tree.nodes) {
            if (node.feature >= 0) {
                bool left_ok = node.left >= 0 && std::size_t(node.left) < tree.nodes.size();
                bool right_ok = node.right >= 0 && std::size_t(node.right) < tree.nodes.size();
                if (!left_ok || !right_ok)
                    throw std::invalid_argument("tree_from_json: child index out of range");
                if (std::size_t(node.feature) >= tree.n_features)
                    throw std::invalid_argument("tree_from_json: feature index out of range");
            } else if (node.distribution.size() != tree.n_classes) {
                throw std::invalid_argument("tree_from_json: distribution size mismatch");
            }
        }
        return tree;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("tree_from_json: ") + e.what());
    }
}

} // namespace exalt
