#include <cmath>
#include <vector>

#include "doctest.h"

#include "exalt/shap.hpp"
#include "exalt/rng.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace exalt;

namespace {

void check_efficiency(const ShapExplanation& e, double tol = 1e-6) {
    double total = e.base_value;
    for (double p : e.phi) total += p;
    CHECK(std::abs(total - e.model_output) < tol);
}

// Random tree over random labels; min_leaf 1 keeps small leaves legal.
SurrogateTree random_tree(Rng& rng, std::size_t d, std::size_t depth) {
    std::size_t n = 24 + rng.uniform_int(16);
    std::vector<std::vector<double>> rows(n);
    Labeling labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        rows[i].resize(d);
        for (std::size_t j = 0; j < d; ++j) rows[i][j] = rng.uniform(-4, 4);
        labels[i] = int(rng.uniform_int(3));
    }
    for (int c = 0; c < 3; ++c) labels[std::size_t(c)] = c;
    return tree_fit(make_ds(rows), labels, depth, 1);
}

} // namespace

TEST_CASE("kernel_shap on a linear model with a zero background") {
    PredictFn f = [](std::span<const double> x) { return 2 * x[0] + 3 * x[1]; };
    Matrix bg = Matrix::from_rows({{0.0, 0.0}});
    std::vector<double> x{1.0, 1.0};
    ShapExplanation e = kernel_shap(f, bg, x);
    CHECK(e.base_value == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(e.phi[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(e.phi[1] == doctest::Approx(3.0).epsilon(1e-9));
    check_efficiency(e);
}

TEST_CASE("kernel_shap attributes nothing when x is the background") {
    PredictFn f = [](std::span<const double> x) { return x[0] * x[1] + 5; };
    Matrix bg = Matrix::from_rows({{2.0, 3.0}});
    std::vector<double> x{2.0, 3.0};
    ShapExplanation e = kernel_shap(f, bg, x);
    CHECK(e.base_value == doctest::Approx(11.0));
    for (double p : e.phi) CHECK(std::abs(p) < 1e-9);
    CHECK(e.model_output == doctest::Approx(11.0));
}

TEST_CASE("kernel_shap single-feature shortcut") {
    PredictFn f = [](std::span<const double> x) { return x[0] * x[0]; };
    Matrix bg = Matrix::from_rows({{1.0}, {3.0}});
    ShapExplanation e = kernel_shap(f, bg, std::vector<double>{2.0});
    CHECK(e.base_value == doctest::Approx(5.0)); // mean of 1 and 9
    CHECK(e.phi[0] == doctest::Approx(-1.0));
    check_efficiency(e);
}

TEST_CASE("kernel_shap matches Shapley enumeration on random trees") {
    Rng rng(404);
    for (int t = 0; t < 10; ++t) {
        std::size_t d = 2 + rng.uniform_int(5);
        SurrogateTree tree = random_tree(rng, d, 3);
        Matrix bg(4, d);
        for (std::size_t i = 0; i < 4; ++i)
            for (std::size_t j = 0; j < d; ++j) bg(i, j) = rng.uniform(-4, 4);
        std::vector<double> x(d);
        for (auto& v : x) v = rng.uniform(-4, 4);
        int cls = int(rng.uniform_int(tree.n_classes));

        PredictFn f = [&](std::span<const double> z) { return tree_predict_proba1(tree, z, cls); };
        ShapExplanation e = kernel_shap(f, bg, x);
        auto [base, phi] = oracle::shapley(d, oracle::background_game(f, bg, x));
        CHECK(std::abs(e.base_value - base) < 1e-9);
        for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(e.phi[j] - phi[j]) < 1e-6);
        check_efficiency(e);
    }
}

TEST_CASE("kernel_shap symmetry and dummy properties") {
    PredictFn sym = [](std::span<const double> x) { return x[0] * x[1] + x[0] + x[1]; };
    Matrix bg = Matrix::from_rows({{0.0, 0.0}, {1.0, 1.0}, {-2.0, -2.0}});
    ShapExplanation e = kernel_shap(sym, bg, std::vector<double>{3.0, 3.0});
    CHECK(std::abs(e.phi[0] - e.phi[1]) < 1e-9);

    PredictFn partial = [](std::span<const double> x) { return 2 * x[0]; };
    Matrix bg3 = Matrix::from_rows({{0.5, 1.0, -1.0}, {1.5, 2.0, 4.0}});
    ShapExplanation d3 = kernel_shap(partial, bg3, std::vector<double>{2.0, 9.0, -7.0});
    CHECK(std::abs(d3.phi[1]) < 1e-9);
    CHECK(std::abs(d3.phi[2]) < 1e-9);
    check_efficiency(d3);
}

TEST_CASE("sampled mode is exact for additive models") {
    // d = 12 is past the enumeration cutoff, so this exercises sampling.
    const std::size_t d = 12;
    std::vector<double> w(d), x(d);
    Rng rng(7);
    for (std::size_t j = 0; j < d; ++j) {
        w[j] = rng.uniform(-2, 2);
        x[j] = rng.uniform(-2, 2);
    }
    PredictFn f = [&w](std::span<const double> z) {
        double s = 0;
        for (std::size_t j = 0; j < z.size(); ++j) s += w[j] * z[j];
        return s;
    };
    Matrix bg(3, d);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < d; ++j) bg(i, j) = rng.uniform(-2, 2);
    std::vector<double> bmean(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
        bmean[j] = (bg(0, j) + bg(1, j) + bg(2, j)) / 3.0;

    for (std::size_t nsamples : {std::size_t(24), std::size_t(200), std::size_t(4096)}) {
        ShapExplanation e = kernel_shap(f, bg, x, nsamples, 3);
        for (std::size_t j = 0; j < d; ++j)
            CHECK(e.phi[j] == doctest::Approx(w[j] * (x[j] - bmean[j])).epsilon(1e-6));
        check_efficiency(e);
    }
}

TEST_CASE("full-budget sampling reproduces enumeration") {
    // With nsamples >= 2^d every level fits, so the sampled design equals
    // the exhaustive one. Compare against the enumeration oracle.
    const std::size_t d = 12;
    Rng rng(31);
    PredictFn f = [](std::span<const double> z) {
        double s = 1;
        s += z[0] * z[1];
        s += z[2] > 0 ? z[3] : -z[3];
        for (std::size_t j = 4; j < z.size(); ++j) s += 0.5 * z[j];
        return s;
    };
    Matrix bg(2, d);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < d; ++j) bg(i, j) = rng.uniform(-1, 1);
    std::vector<double> x(d);
    for (auto& v : x) v = rng.uniform(-1, 1);

    ShapExplanation e = kernel_shap(f, bg, x, 4096, 5);
    auto [base, phi] = oracle::shapley(d, oracle::background_game(f, bg, x));
    for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(e.phi[j] - phi[j]) < 1e-6);
}

TEST_CASE("kernel_shap input guards") {
    PredictFn f = [](std::span<const double> x) { return x[0]; };
    Matrix bg = Matrix::from_rows({{0.0, 0.0}});
    CHECK_THROWS_AS(kernel_shap(f, Matrix{}, std::vector<double>{1.0}), std::invalid_argument);
    CHECK_THROWS_AS(kernel_shap(f, bg, std::vector<double>{1.0}), std::invalid_argument);

    Matrix wide(1, 12);
    std::vector<double> x12(12, 0.0);
    CHECK_THROWS_AS(kernel_shap(f, wide, x12, 23), std::invalid_argument); // below 2*d

    Matrix huge(1, 64);
    std::vector<double> x64(64, 0.0);
    CHECK_THROWS_AS(kernel_shap(f, huge, x64), std::invalid_argument);
}

TEST_CASE("tree_shap on a root leaf attributes nothing") {
    Dataset ds = make_ds({{0}, {1}, {10}, {11}});
    SurrogateTree tree = tree_fit(ds, Labeling{0, 0, 1, 1}, 0, 1);
    ShapExplanation e = tree_shap(tree, std::vector<double>{4.0}, 0);
    CHECK(e.base_value == 0.5);
    CHECK(e.phi == std::vector<double>{0.0});
    CHECK(e.model_output == 0.5);
    CHECK(e.explained_class == 0);
}

TEST_CASE("tree_shap splits the depth-1 tree evenly") {
    Dataset ds = make_ds({{0}, {1}, {10}, {11}});
    SurrogateTree tree = tree_fit(ds, Labeling{0, 0, 1, 1}, 4, 1);
    ShapExplanation left = tree_shap(tree, std::vector<double>{1.0}, 1);
    CHECK(left.base_value == doctest::Approx(0.5));
    CHECK(left.phi[0] == doctest::Approx(-0.5));
    CHECK(left.model_output == doctest::Approx(0.0));
    ShapExplanation right = tree_shap(tree, std::vector<double>{10.0}, 1);
    CHECK(right.phi[0] == doctest::Approx(0.5));
    CHECK(right.model_output == doctest::Approx(1.0));
}

TEST_CASE("tree_shap matches Shapley enumeration of the cover game") {
    Rng rng(505);
    for (int t = 0; t < 12; ++t) {
        std::size_t d = 2 + rng.uniform_int(7);
        SurrogateTree tree = random_tree(rng, d, 1 + rng.uniform_int(4));
        std::vector<double> x(d);
        for (auto& v : x) v = rng.uniform(-4, 4);
        int cls = int(rng.uniform_int(tree.n_classes));

        ShapExplanation e = tree_shap(tree, x, cls);
        auto [base, phi] = oracle::shapley(d, oracle::tree_game(tree, x, cls));
        CHECK(std::abs(e.base_value - base) < 1e-9);
        for (std::size_t j = 0; j < d; ++j) CHECK(std::abs(e.phi[j] - phi[j]) < 1e-6);
        check_efficiency(e);
    }
}

TEST_CASE("kernel and tree explanations coincide on depth-1 trees") {
    // With the training rows as background the cover weights equal the
    // empirical split frequencies, so both games agree.
    Rng rng(606);
    for (int t = 0; t < 5; ++t) {
        Dataset ds = make_ds({{0, 5}, {1, 6}, {10, 7}, {11, 8}});
        SurrogateTree t1 = tree_fit(ds, Labeling{0, 0, 1, 1}, 1, 1);
        std::vector<double> x{rng.uniform(-2, 13), rng.uniform(4, 9)};
        for (std::size_t cls = 0; cls < 2; ++cls) {
            ShapExplanation te = tree_shap(t1, x, int(cls));
            PredictFn f = [&](std::span<const double> z) {
                return tree_predict_proba1(t1, z, int(cls));
            };
            ShapExplanation ke = kernel_shap(f, ds.features, x);
            CHECK(std::abs(te.base_value - ke.base_value) < 1e-9);
            for (std::size_t j = 0; j < 2; ++j) CHECK(std::abs(te.phi[j] - ke.phi[j]) < 1e-6);
        }
    }
}

TEST_CASE("tree_shap input guards") {
    Dataset ds = make_ds({{0}, {1}, {10}, {11}});
    SurrogateTree tree = tree_fit(ds, Labeling{0, 0, 1, 1}, 4, 1);
    CHECK_THROWS_AS(tree_shap(tree, std::vector<double>{1.0, 2.0}, 0), std::invalid_argument);
    CHECK_THROWS_AS(tree_shap(tree, std::vector<double>{1.0}, 7), std::invalid_argument);
}

TEST_CASE("global_importance aggregates absolute attributions") {
    ShapExplanation a;
    a.phi = {2.0, -3.0};
    GlobalImportance gi = global_importance({a});
    CHECK(gi.mean_abs_phi == std::vector<double>{2.0, 3.0});
    CHECK(gi.ranking == std::vector<std::size_t>{1, 0});

    ShapExplanation b;
    b.phi = {0.0, 1.0};
    GlobalImportance two = global_importance({a, b});
    CHECK(two.mean_abs_phi == std::vector<double>{1.0, 2.0});

    // Duplicating the explanation list is a no-op.
    CHECK(global_importance({a, b, a, b}) == two);

    // Unused feature stays at zero; equal scores rank by feature index.
    ShapExplanation c;
    c.phi = {1.0, 1.0, 0.0};
    GlobalImportance three = global_importance({c});
    CHECK(three.mean_abs_phi[2] == 0.0);
    CHECK(three.ranking == std::vector<std::size_t>{0, 1, 2});

    CHECK_THROWS_AS(global_importance({}), std::invalid_argument);
}
