#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "exalt/dataset.hpp"
#include "exalt/labeling.hpp"
#include "exalt/matrix.hpp"

namespace exalt {

// Axis-aligned binary tree node. feature == -1 marks a leaf. Internal
// nodes route x[feature] <= threshold to the left child. Every node keeps
// its training-row cover; leaves keep the class distribution.
struct TreeNode {
    int feature = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    std::size_t cover = 0;
    std::vector<double> distribution; // leaves only; sums to 1
};

struct SurrogateTree {
    std::vector<TreeNode> nodes; // preorder, nodes[0] is the root
    std::size_t n_classes = 0;
    std::size_t n_features = 0;
    std::size_t max_depth = 0; // configured bound, not realized depth
    std::size_t min_leaf = 0;

    std::size_t depth() const;      // realized depth
    std::size_t leaf_count() const;
};

// One interval condition: lower < x[feature] <= upper (either bound may be
// absent).
struct RuleCondition {
    std::size_t feature = 0;
    std::optional<double> lower;
    std::optional<double> upper;

    bool operator==(const RuleCondition&) const = default;
};

struct Rule {
    std::vector<RuleCondition> conditions; // ascending feature index
    int label = 0;
    double confidence = 0; // max leaf probability
    std::size_t cover = 0;

    bool operator==(const Rule&) const = default;
};

using RuleList = std::vector<Rule>;

// CART with Gini impurity. Splits scan midpoints of consecutive sorted
// unique values, require min_leaf rows on both sides and a strict impurity
// decrease; ties pick the lowest feature index, then the lowest threshold.
// Labels must be noise-free (map NOISE to an extra class first).
SurrogateTree tree_fit(const Dataset& ds, const Labeling& labels, std::size_t max_depth = 4,
                       std::size_t min_leaf = 0); // 0 = max(5, n/100)

// Route rows through the tree. Labels are the argmax of the leaf
// distribution (ties toward the lowest label); probabilities are the leaf
// distributions, one row per point.
std::pair<Labeling, Matrix> tree_predict(const SurrogateTree& tree, const Dataset& ds);

// Tree output for one point and one class.
double tree_predict_proba1(const SurrogateTree& tree, std::span<const double> x, int cls);

// One rule per leaf with per-feature conditions merged into intervals,
// ordered by cover descending.
RuleList tree_rules(const SurrogateTree& tree);

std::string rule_to_string(const Rule& rule, const std::vector<std::string>& feature_names);

// Fraction of rows whose tree prediction matches `labels`.
double tree_fidelity(const SurrogateTree& tree, const Dataset& ds, const Labeling& labels);

// JSON form: an object with n_classes, n_features, max_depth, min_leaf and
// a "nodes" array in storage order. Each node carries feature, threshold,
// left, right, cover; leaves carry distribution instead of
// threshold/left/right. Round trips exactly (thresholds use full precision).
std::string tree_to_json(const SurrogateTree& tree);
SurrogateTree tree_from_json(const std::string& text);

} // namespace exalt
