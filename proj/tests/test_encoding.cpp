#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include <deepstdp/encoding.hpp>

using namespace deepstdp;

namespace {

DenseTensor two_sign_clusters() {
    RngStream rng(17);
    DenseTensor X = DenseTensor::matrix(40, 6);
    for (std::size_t i = 0; i < 40; ++i) {
        double center = i < 20 ? 10.0 : -10.0;
        X(i, 0) = center + 0.01 * rng.normal();
        for (std::size_t j = 1; j < 6; ++j) X(i, j) = 0.01 * rng.normal();
    }
    return X;
}

}  // namespace

TEST_CASE("preprocess: dominant axis separates sign clusters") {
    DenseTensor X = two_sign_clusters();
    ProcessedFeatures f = preprocess(X, 2, false);
    double sign0 = f.X(0, 0) > 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < 40; ++i) {
        double expected = i < 20 ? sign0 : -sign0;
        CHECK(f.X(i, 0) * expected > 0);
    }
}

TEST_CASE("preprocess: rows have unit norm or are zero") {
    DenseTensor X = two_sign_clusters();
    ProcessedFeatures f = preprocess(X, 4, false);
    for (std::size_t i = 0; i < f.count(); ++i) {
        double n = norm(f.X.row(i));
        CHECK((std::abs(n - 1.0) < 1e-9 || n == 0.0));
    }
}

TEST_CASE("preprocess: full-dimension projection spans the centered data") {
    RngStream rng(31);
    DenseTensor X = DenseTensor::matrix(25, 5);
    for (double& v : X.data()) v = rng.normal();

    PcaModel model = pca_fit(X, 5, false);
    // residual of centered rows after projecting onto the component span
    for (std::size_t i = 0; i < X.rows(); ++i) {
        std::vector<double> centered(5);
        for (std::size_t j = 0; j < 5; ++j) centered[j] = X(i, j) - model.mean[j];
        std::vector<double> recon(5, 0.0);
        for (std::size_t c = 0; c < 5; ++c) {
            double coef = dot(model.components.row(c), centered);
            for (std::size_t j = 0; j < 5; ++j) recon[j] += coef * model.components(c, j);
        }
        for (std::size_t j = 0; j < 5; ++j) CHECK(std::abs(recon[j] - centered[j]) < 1e-8);
    }
}

TEST_CASE("encode: zero vector yields an empty train") {
    RngStream rng(1);
    std::vector<double> f(8, 0.0);
    SpikeTrain train = encode(f, 1.0, 50, rng);
    for (auto b : train.plus) CHECK(b == 0);
    for (auto b : train.minus) CHECK(b == 0);
}

TEST_CASE("encode: saturated negative rate fires the minus channel every step") {
    RngStream rng(2);
    std::vector<double> f{-0.5};
    SpikeTrain train = encode(f, 2.0, 100, rng);
    for (std::size_t t = 0; t < 100; ++t) {
        CHECK(train.s_minus(t, 0) == 1);
        CHECK(train.s_plus(t, 0) == 0);
    }
}

TEST_CASE("encode: empirical rate matches the Bernoulli rate") {
    RngStream rng(3);
    std::vector<double> f{0.3};
    const std::size_t T = 10000;
    SpikeTrain train = encode(f, 1.0, T, rng);
    std::size_t count = 0;
    for (std::size_t t = 0; t < T; ++t) count += train.s_plus(t, 0);
    double rate = static_cast<double>(count) / T;
    double sigma = std::sqrt(0.3 * 0.7 / T);
    CHECK(std::abs(rate - 0.3) < 3.0 * sigma);
}

TEST_CASE("encode: channel exclusivity over random features") {
    RngStream rng(4);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> f(12);
        for (double& x : f) x = rng.uniform(-1.5, 1.5);
        RngStream enc = rng.substream("enc", trial);
        SpikeTrain train = encode(f, rng.uniform(0.0, 3.0), 40, enc);
        for (std::size_t t = 0; t < train.T; ++t)
            for (std::size_t i = 0; i < train.d; ++i)
                CHECK(train.s_plus(t, i) * train.s_minus(t, i) == 0);
    }
}

TEST_CASE("encode: per-component monotonicity under a shared stream") {
    RngStream rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<double> lo(10), hi(10);
        for (std::size_t i = 0; i < 10; ++i) {
            lo[i] = rng.uniform(-1.0, 1.0);
            hi[i] = lo[i] * rng.uniform(1.0, 2.0);  // same sign, larger magnitude
        }
        RngStream s1 = rng.substream("mono", trial);
        RngStream s2 = rng.substream("mono", trial);
        SpikeTrain a = encode(lo, 1.0, 200, s1);
        SpikeTrain b = encode(hi, 1.0, 200, s2);
        for (std::size_t i = 0; i < 10; ++i) {
            std::size_t ca = 0, cb = 0;
            for (std::size_t t = 0; t < 200; ++t) {
                ca += a.s_plus(t, i) + a.s_minus(t, i);
                cb += b.s_plus(t, i) + b.s_minus(t, i);
            }
            CHECK(cb >= ca);
        }
    }
}

TEST_CASE("encode: reproducible for identical seeds") {
    std::vector<double> f{0.2, -0.7, 0.0, 0.9};
    RngStream a(77), b(77);
    SpikeTrain ta = encode(f, 1.3, 64, a);
    SpikeTrain tb = encode(f, 1.3, 64, b);
    CHECK(ta.plus == tb.plus);
    CHECK(ta.minus == tb.minus);
}

TEST_CASE("encode: rejects bad inputs") {
    RngStream rng(6);
    std::vector<double> f{0.5};
    CHECK_THROWS_AS(encode(f, -1.0, 10, rng), std::invalid_argument);
    CHECK_THROWS_AS(encode(f, 1.0, 0, rng), std::invalid_argument);
    std::vector<double> bad{std::nan("")};
    CHECK_THROWS_AS(encode(bad, 1.0, 10, rng), std::invalid_argument);
}
