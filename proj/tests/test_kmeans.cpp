#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include <deepstdp/kmeans.hpp>

using namespace deepstdp;

namespace {

DenseTensor random_points(std::size_t n, std::size_t d, RngStream& rng, double spread = 1.0) {
    DenseTensor X = DenseTensor::matrix(n, d);
    for (double& v : X.data()) v = spread * rng.normal();
    return X;
}

}  // namespace

TEST_CASE("assign_step: zero-distance point lands on its centroid") {
    RngStream rng(1);
    DenseTensor C = random_points(5, 3, rng);
    DenseTensor X = DenseTensor::matrix(1, 3);
    for (std::size_t j = 0; j < 3; ++j) X(0, j) = C(3, j);
    auto a = assign_step(X, C);
    CHECK(a[0] == 3);
}

TEST_CASE("assign_step: equidistant ties break to the lower index") {
    DenseTensor C = DenseTensor::matrix(3, 1);
    C(0, 0) = 5.0;   // a decoy far away
    C(1, 0) = -1.0;  // tied pair straddling the point
    C(2, 0) = 1.0;
    DenseTensor X = DenseTensor::matrix(1, 1);
    X(0, 0) = 0.0;
    auto a = assign_step(X, C);
    CHECK(a[0] == 1);
}

TEST_CASE("assign_step: matches an exhaustive scan on a random instance") {
    RngStream rng(2);
    DenseTensor X = random_points(50, 4, rng);
    DenseTensor C = random_points(6, 4, rng);
    auto a = assign_step(X, C);
    for (std::size_t p = 0; p < 50; ++p) {
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < 6; ++j) {
            double dist = 0.0;
            for (std::size_t m = 0; m < 4; ++m)
                dist += (X(p, m) - C(j, m)) * (X(p, m) - C(j, m));
            if (dist < best_dist) {
                best_dist = dist;
                best = static_cast<int>(j);
            }
        }
        CHECK(a[p] == best);
    }
}

TEST_CASE("kmeans_fit: k=1 recovers the column mean and the scatter objective") {
    RngStream rng(3);
    DenseTensor X = random_points(30, 4, rng);
    KMeansParams params{1, 3, 0.0};
    KMeansResult res = kmeans_fit(X, params, rng);

    std::vector<double> mean(4, 0.0);
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 4; ++j) mean[j] += X(i, j) / 30.0;
    for (std::size_t j = 0; j < 4; ++j)
        CHECK(res.centroids(0, j) == doctest::Approx(mean[j]).epsilon(1e-12));

    double scatter = 0.0;
    for (std::size_t i = 0; i < 30; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            scatter += (X(i, j) - mean[j]) * (X(i, j) - mean[j]);
    CHECK(res.objective == doctest::Approx(scatter).epsilon(1e-12));
}

TEST_CASE("kmeans_fit: the classic 1-D two-cluster instance") {
    DenseTensor X = DenseTensor::matrix(4, 1);
    X(0, 0) = 0.0;
    X(1, 0) = 1.0;
    X(2, 0) = 10.0;
    X(3, 0) = 11.0;
    RngStream rng(4);
    KMeansParams params{2, 10, 0.0};
    KMeansResult res = kmeans_fit(X, params, rng);
    double lo = std::min(res.centroids(0, 0), res.centroids(1, 0));
    double hi = std::max(res.centroids(0, 0), res.centroids(1, 0));
    CHECK(lo == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hi == doctest::Approx(10.5).epsilon(1e-12));
    CHECK(res.objective == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kmeans_fit: objective sequence is nonincreasing over random instances") {
    RngStream meta(5);
    int checked = 0;
    for (int trial = 0; trial < 100; ++trial) {
        RngStream rng = meta.substream("trial", trial);
        std::size_t n = 40 + meta.below(40);
        std::size_t d = 2 + meta.below(4);
        std::size_t k = 2 + meta.below(5);
        DenseTensor X = random_points(n, d, rng);
        KMeansParams params{k, 12, 0.0};
        KMeansResult res = kmeans_fit(X, params, rng);
        if (res.reseed_count > 0) continue;  // reseeds are outside Lloyd's guarantee
        ++checked;
        for (std::size_t t = 1; t < res.objective_history.size(); ++t)
            CHECK(res.objective_history[t] <= res.objective_history[t - 1] + 1e-9);
    }
    CHECK(checked > 50);
}

TEST_CASE("kmeans_fit: final assignments are nearest-centroid and recomputable") {
    RngStream rng(6);
    DenseTensor X = random_points(60, 3, rng);
    KMeansParams params{4, 8, 0.0};
    KMeansResult res = kmeans_fit(X, params, rng);

    auto expect = assign_step(X, res.centroids);
    CHECK(res.assignments == expect);

    double obj = 0.0;
    for (std::size_t p = 0; p < 60; ++p) {
        auto j = static_cast<std::size_t>(res.assignments[p]);
        for (std::size_t m = 0; m < 3; ++m)
            obj += (X(p, m) - res.centroids(j, m)) * (X(p, m) - res.centroids(j, m));
    }
    CHECK(res.objective == doctest::Approx(obj).epsilon(1e-9));
}

TEST_CASE("kmeans_fit: member means never raise the objective (update optimality)") {
    RngStream rng(7);
    DenseTensor X = random_points(50, 3, rng);
    KMeansParams params{3, 6, 0.0};
    KMeansResult res = kmeans_fit(X, params, rng);

    auto assign = assign_step(X, res.centroids);
    std::vector<std::vector<double>> sums(3, std::vector<double>(3, 0.0));
    std::vector<std::size_t> counts(3, 0);
    for (std::size_t p = 0; p < 50; ++p) {
        auto j = static_cast<std::size_t>(assign[p]);
        ++counts[j];
        for (std::size_t m = 0; m < 3; ++m) sums[j][m] += X(p, m);
    }
    for (std::size_t j = 0; j < 3; ++j) {
        if (counts[j] == 0) continue;
        for (std::size_t m = 0; m < 3; ++m) sums[j][m] /= static_cast<double>(counts[j]);
    }
    // feeding the means back as centroids must not raise the objective
    DenseTensor C = DenseTensor::matrix(3, 3);
    for (std::size_t j = 0; j < 3; ++j)
        for (std::size_t m = 0; m < 3; ++m) C(j, m) = counts[j] ? sums[j][m] : res.centroids(j, m);
    std::vector<double> dists;
    assign_step(X, C, nullptr, &dists);
    double improved = 0.0;
    for (double v : dists) improved += v;
    CHECK(improved <= res.objective + 1e-9);
}

TEST_CASE("kmeans_fit: instrumented op counts match the closed form exactly") {
    RngStream meta(8);
    for (int trial = 0; trial < 10; ++trial) {
        RngStream rng = meta.substream("ops", trial);
        unsigned long long n = 30 + meta.below(30);
        unsigned long long d = 2 + meta.below(5);
        unsigned long long k = 2 + meta.below(4);
        unsigned long long it = 3 + meta.below(6);
        DenseTensor X = random_points(n, d, rng);
        KMeansParams params{static_cast<std::size_t>(k), static_cast<std::size_t>(it), 0.0};
        KMeansResult res = kmeans_fit(X, params, rng);
        if (res.reseed_count > 0) continue;
        CHECK(res.op_count.mults == k * d * it * n);
        CHECK(res.op_count.adds == (k * (2 * d - 1) + d) * it * n);
        CHECK(res.iterations_run == it);
    }
}

TEST_CASE("kmeans_fit: early stopping honors the tolerance") {
    RngStream rng(9);
    DenseTensor X = random_points(80, 2, rng, 0.1);  // one tight blob converges immediately
    KMeansParams params{2, 50, 1e-9};
    KMeansResult res = kmeans_fit(X, params, rng);
    CHECK(res.iterations_run < 50);
}

TEST_CASE("kmeans_fit: error paths") {
    RngStream rng(10);
    DenseTensor X = random_points(3, 2, rng);
    KMeansParams params{5, 3, 0.0};
    CHECK_THROWS_AS(kmeans_fit(X, params, rng), std::invalid_argument);
    DenseTensor bad = random_points(10, 2, rng);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    KMeansParams ok{2, 3, 0.0};
    CHECK_THROWS_AS(kmeans_fit(bad, ok, rng), std::invalid_argument);
}
