#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "exalt/clustering.hpp"
#include "exalt/rng.hpp"
#include "exalt/validation.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace exalt;

namespace {

Dataset line4() { return make_ds({{0}, {1}, {10}, {11}}); }

} // namespace

TEST_CASE("kmeans separates the two pairs on the line") {
    auto [model, labels] = kmeans_fit(line4(), 2);
    CHECK(model.inertia == doctest::Approx(1.0).epsilon(1e-12));
    std::vector<double> cents{model.centroids(0, 0), model.centroids(1, 0)};
    std::sort(cents.begin(), cents.end());
    CHECK(cents[0] == doctest::Approx(0.5));
    CHECK(cents[1] == doctest::Approx(10.5));
    CHECK(labels[0] == labels[1]);
    CHECK(labels[2] == labels[3]);
    CHECK(labels[0] != labels[2]);
}

TEST_CASE("kmeans degenerate k") {
    Dataset ds = line4();
    auto [m1, l1] = kmeans_fit(ds, 1);
    CHECK(m1.centroids(0, 0) == doctest::Approx(5.5));
    CHECK(l1 == Labeling{0, 0, 0, 0});

    auto [mn, ln] = kmeans_fit(ds, 4);
    CHECK(mn.inertia == 0.0);

    CHECK_THROWS_AS(kmeans_fit(ds, 0), std::invalid_argument);
    CHECK_THROWS_AS(kmeans_fit(ds, 5), std::invalid_argument);
}

TEST_CASE("kmeans is deterministic in the seed") {
    Dataset ds = gen_blobs(3, 30, 3, 4.0, 17);
    auto [m1, l1] = kmeans_fit(ds, 3, 100, 4, 9);
    auto [m2, l2] = kmeans_fit(ds, 3, 100, 4, 9);
    CHECK(m1.centroids == m2.centroids);
    CHECK(l1 == l2);
}

TEST_CASE("kmeans_predict ties go to the lowest centroid index") {
    KMeansModel m;
    m.centroids = Matrix::from_rows({{2.0}, {2.0}});
    Dataset ds = make_ds({{5.0}, {2.0}});
    Labeling got = kmeans_predict(m, ds);
    CHECK(got == Labeling{0, 0});
}

TEST_CASE("kmeans_predict reproduces training labels") {
    Dataset ds = gen_blobs(3, 25, 2, 6.0, 4);
    auto [model, labels] = kmeans_fit(ds, 3);
    CHECK(kmeans_predict(model, ds) == labels);
}

TEST_CASE("kmeans_refine repairs empty clusters and never worsens inertia") {
    Dataset ds = line4();
    // Both points assign to the first centroid, leaving the second empty.
    Matrix init = Matrix::from_rows({{0.5}, {100.0}});
    auto [model, labels] = kmeans_refine(ds, init);
    CHECK(num_clusters(labels) == 2);
    CHECK(model.inertia == doctest::Approx(1.0));

    Rng rng(31);
    Dataset blob = gen_blobs(2, 20, 2, 3.0, 8);
    for (int t = 0; t < 5; ++t) {
        Matrix start(2, 2);
        for (std::size_t i = 0; i < 2; ++i)
            for (std::size_t j = 0; j < 2; ++j) start(i, j) = rng.uniform(-5, 5);
        // Inertia of the assignment induced by the starting centroids.
        double init_inertia = 0;
        for (std::size_t i = 0; i < blob.n(); ++i) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < 2; ++c) {
                double d = euclidean(blob.features.row(i), start.row(c));
                best = std::min(best, d * d);
            }
            init_inertia += best;
        }
        auto [m, l] = kmeans_refine(blob, start);
        CHECK(m.inertia <= init_inertia + 1e-9);
    }
}

TEST_CASE("dbscan trivial regimes") {
    Dataset ds = gen_blobs(2, 10, 2, 8.0, 12);
    DistanceMatrix dm = pairwise(ds, Metric::euclidean);

    Labeling all_noise = dbscan_fit(dm, {1e-12, 5});
    for (int v : all_noise) CHECK(v == kNoise);

    Labeling no_noise = dbscan_fit(dm, {1e-12, 1});
    for (int v : no_noise) CHECK(v != kNoise);

    Labeling two = dbscan_fit(dm, {3.0, 3});
    REQUIRE(ds.truth.has_value());
    CHECK(adjusted_rand(two, *ds.truth) == doctest::Approx(1.0));
}

TEST_CASE("dbscan labels are contiguous and noise is -1") {
    Dataset ds = make_ds({{0}, {0.5}, {1}, {50}, {50.5}, {51}, {1000}});
    DistanceMatrix dm = pairwise(ds, Metric::euclidean);
    Labeling labels = dbscan_fit(dm, {1.0, 2});
    CHECK(labels == Labeling{0, 0, 0, 1, 1, 1, kNoise});
}

TEST_CASE("dbscan border point joins the first cluster that reaches it") {
    // Point 2 is within eps of cores 1 and 3 but is not core itself
    // (min_pts 3 needs 2 same-side neighbors). Cluster 0 expands first.
    Dataset ds = make_ds({{0}, {1}, {2}, {3}, {4}});
    DistanceMatrix dm = pairwise(ds, Metric::euclidean);
    Labeling labels = dbscan_fit(dm, {1.0, 3});
    CHECK(labels[2] == labels[1]);
    CHECK(labels[1] == labels[0]);
}

TEST_CASE("gmm k=1 recovers the closed form") {
    Dataset ds = make_ds({{1}, {2}, {3}, {4}});
    auto [model, labels, resp] = gmm_fit(ds, 1);
    CHECK(model.means(0, 0) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(model.variances(0, 0) == doctest::Approx(1.25 + 1e-6).epsilon(1e-12));
    CHECK(model.weights[0] == doctest::Approx(1.0));
    CHECK(labels == Labeling{0, 0, 0, 0});
}

TEST_CASE("gmm log-likelihood never decreases") {
    Rng rng(55);
    for (int t = 0; t < 10; ++t) {
        std::vector<std::vector<double>> rows;
        std::size_t n = 20 + rng.uniform_int(20);
        for (std::size_t i = 0; i < n; ++i)
            rows.push_back({rng.uniform(-4, 4), rng.uniform(-4, 4)});
        auto [model, labels, resp] = gmm_fit(make_ds(rows), 1 + rng.uniform_int(3), 50, 1e-7, t);
        for (std::size_t i = 1; i < model.loglik_trace.size(); ++i)
            CHECK(model.loglik_trace[i] >= model.loglik_trace[i - 1] - 1e-9);
    }
}

TEST_CASE("gmm separates far blobs") {
    Dataset ds = gen_blobs(2, 40, 2, 12.0, 33);
    auto [model, labels, resp] = gmm_fit(ds, 2);
    CHECK(adjusted_rand(labels, *ds.truth) == doctest::Approx(1.0));
    for (std::size_t i = 0; i < resp.rows(); ++i) {
        double s = resp(i, 0) + resp(i, 1);
        CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("gmm rejects bad k") {
    Dataset ds = line4();
    CHECK_THROWS_AS(gmm_fit(ds, 0), std::invalid_argument);
    CHECK_THROWS_AS(gmm_fit(ds, 5), std::invalid_argument);
}

TEST_CASE("gmm_predict_proba is confident at a far component mean") {
    Dataset ds = gen_blobs(2, 50, 2, 15.0, 77);
    auto [model, labels, resp] = gmm_fit(ds, 2);
    Dataset at_mean = make_ds({model.means.row_copy(0)});
    Matrix p = gmm_predict_proba(model, at_mean);
    CHECK(p(0, 0) > 0.99);
}

TEST_CASE("gmm_predict_proba splits identical components evenly") {
    GmmModel m;
    m.means = Matrix::from_rows({{0.0}, {0.0}, {0.0}});
    m.variances = Matrix::from_rows({{1.0}, {1.0}, {1.0}});
    m.weights = {1.0 / 3, 1.0 / 3, 1.0 / 3};
    Matrix p = gmm_predict_proba(m, make_ds({{0.7}, {-2.0}}));
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            CHECK(p(i, j) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("run_clustering dispatches and reports models") {
    Dataset ds = gen_blobs(2, 20, 2, 10.0, 3);
    ClusterAlgoConfig cfg;
    cfg.algorithm = "kmeans";
    cfg.k = 2;
    ClusterResult km = run_clustering(ds, cfg, 5);
    CHECK(km.kmeans.has_value());
    CHECK_FALSE(km.gmm.has_value());
    CHECK(adjusted_rand(km.labels, *ds.truth) == doctest::Approx(1.0));

    cfg.algorithm = "gmm";
    ClusterResult gm = run_clustering(ds, cfg, 5);
    CHECK(gm.gmm.has_value());
    CHECK(gm.responsibilities.has_value());

    cfg.algorithm = "dbscan";
    cfg.dbscan = {3.0, 3};
    ClusterResult db1 = run_clustering(ds, cfg, 5);
    ClusterResult db2 = run_clustering(ds, cfg, 999);
    CHECK(db1.labels == db2.labels); // dbscan ignores the seed
    CHECK_FALSE(db1.kmeans.has_value());
}
