#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <vector>

#include <deepstdp/metrics.hpp>

using namespace deepstdp;

namespace {

NetShape probe_shape() {
    NetShape s;
    s.in_channels = 1;
    s.height = 8;
    s.width = 8;
    s.c1 = 2;
    s.c2 = 4;
    s.d_feat = 8;
    s.classes = 4;
    return s;
}

std::vector<int> random_assignment(std::size_t n, int k, RngStream& rng) {
    std::vector<int> y(n);
    for (int& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(k)));
    return y;
}

}  // namespace

TEST_CASE("nmi: identical non-trivial partitions score 1") {
    std::vector<int> y{0, 0, 1, 1, 2, 2};
    CHECK(nmi(y, y) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nmi: relabeling leaves the score at 1") {
    std::vector<int> a{0, 0, 1, 1, 2, 2};
    std::vector<int> b{5, 5, 0, 0, 3, 3};
    CHECK(nmi(a, b) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("nmi: the independent 2x2 case scores 0") {
    std::vector<int> a{0, 0, 1, 1};
    std::vector<int> b{0, 1, 0, 1};
    CHECK(nmi(a, b) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("nmi: zero-entropy conventions") {
    std::vector<int> flat{0, 0, 0, 0};
    std::vector<int> split{0, 0, 1, 1};
    CHECK(nmi(flat, flat) == 1.0);
    CHECK(nmi(flat, split) == 0.0);
    CHECK(nmi(split, flat) == 0.0);
    std::vector<int> one{3};
    CHECK(nmi(one, one) == 1.0);
}

TEST_CASE("nmi: symmetry and range over random pairs") {
    RngStream rng(40);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 5 + rng.below(40);
        auto a = random_assignment(n, 2 + static_cast<int>(rng.below(5)), rng);
        auto b = random_assignment(n, 2 + static_cast<int>(rng.below(5)), rng);
        double ab = nmi(a, b);
        double ba = nmi(b, a);
        CHECK(std::abs(ab - ba) < 1e-12);
        CHECK(ab >= 0.0);
        CHECK(ab <= 1.0);
    }
    std::vector<int> a{0, 1};
    std::vector<int> mismatched{0, 1, 2};
    CHECK_THROWS_AS(nmi(a, mismatched), std::invalid_argument);
}

TEST_CASE("purity: exact, uniform confusion, brute force, relabel invariance") {
    std::vector<int> truth{0, 0, 1, 1, 2, 2};
    CHECK(purity(truth, truth) == doctest::Approx(1.0).epsilon(1e-12));

    // every cluster split evenly over 2 classes
    std::vector<int> y{0, 0, 1, 1};
    std::vector<int> t2{0, 1, 0, 1};
    CHECK(purity(y, t2) == doctest::Approx(0.5).epsilon(1e-12));

    RngStream rng(41);
    auto yy = random_assignment(20, 4, rng);
    auto tt = random_assignment(20, 3, rng);
    // brute-force per-cluster majority recount
    double expected = 0.0;
    for (int c = 0; c < 4; ++c) {
        std::vector<int> counts(3, 0);
        for (std::size_t i = 0; i < 20; ++i)
            if (yy[i] == c) ++counts[static_cast<std::size_t>(tt[i])];
        expected += *std::max_element(counts.begin(), counts.end());
    }
    expected /= 20.0;
    CHECK(purity(yy, tt) == doctest::Approx(expected).epsilon(1e-12));

    // relabeling the cluster ids changes nothing
    std::vector<int> relabeled(20);
    for (std::size_t i = 0; i < 20; ++i) relabeled[i] = 7 - yy[i];
    CHECK(purity(relabeled, tt) == doctest::Approx(purity(yy, tt)).epsilon(1e-12));
}

TEST_CASE("fim_trace: saturated softmax gives exactly zero") {
    NetShape s = probe_shape();
    RngStream rng(42);
    NetParams p = NetParams::init(s, rng);
    DenseTensor images({3, 1, 8, 8});
    for (double& v : images.data()) v = rng.normal();
    std::vector<int> labels{1, 1, 1};
    p.values[s.head_b_off() + 1] = 1e4;
    CHECK(fim_trace(p, images, labels) == 0.0);
}

TEST_CASE("fim_trace: matches a brute-force per-sample recomputation") {
    NetShape s = probe_shape();
    RngStream rng(43);
    NetParams p = NetParams::init(s, rng);
    const std::size_t n = 50;
    DenseTensor images({n, 1, 8, 8});
    for (double& v : images.data()) v = rng.normal();
    std::vector<int> labels(n);
    for (int& l : labels) l = static_cast<int>(rng.below(4));

    double fim = fim_trace(p, images, labels);

    double brute = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        DenseTensor one({1, 1, 8, 8});
        auto src = images.slice(i);
        std::copy(src.begin(), src.end(), one.slice(0).begin());
        std::vector<int> single{labels[i]};
        BatchGrads g = loss_and_grads(p, one, single);
        double norm2 = 0.0;
        for (double v : g.grads) norm2 += v * v;
        brute += norm2;
    }
    brute /= static_cast<double>(n);
    CHECK(fim == doctest::Approx(brute).epsilon(1e-10));
    CHECK(fim >= 0.0);
}

TEST_CASE("fim_trace: single sample agrees with finite differences coordinatewise") {
    NetShape s = probe_shape();
    RngStream rng(44);
    NetParams p = NetParams::init(s, rng);
    DenseTensor image({1, 1, 8, 8});
    for (double& v : image.data()) v = rng.normal();
    std::vector<int> label{2};

    BatchGrads g = loss_and_grads(p, image, label);
    const double h = 1e-5;
    double norm2 = 0.0;
    for (std::size_t c = 0; c < s.param_count(); ++c) {
        NetParams q = p;
        q.values[c] += h;
        double up = loss_and_grads(q, image, label).loss;
        q.values[c] -= 2 * h;
        double dn = loss_and_grads(q, image, label).loss;
        double num = (up - dn) / (2 * h);
        double rel = std::abs(num - g.grads[c]) /
                     std::max(std::abs(num) + std::abs(g.grads[c]), 1e-6);
        CHECK(rel < 1e-4);
        norm2 += num * num;
    }
    CHECK(fim_trace(p, image, label) == doctest::Approx(norm2).epsilon(1e-4));
}

TEST_CASE("fim_trace: masks and the sampled variant behave") {
    NetShape s = probe_shape();
    RngStream rng(45);
    NetParams p = NetParams::init(s, rng);
    DenseTensor images({6, 1, 8, 8});
    for (double& v : images.data()) v = rng.normal();
    std::vector<int> labels{0, 1, 2, 3, 0, 1};

    double full = fim_trace(p, images, labels);
    FimOptions feat_only;
    feat_only.mask.head = false;
    FimOptions head_only;
    head_only.mask = LayerMask{false, false, false, true};
    double a = fim_trace(p, images, labels, feat_only);
    double b = fim_trace(p, images, labels, head_only);
    CHECK(a + b == doctest::Approx(full).epsilon(1e-10));

    RngStream s1(7), s2(7);
    FimOptions samp1;
    samp1.sample_labels = true;
    samp1.rng = &s1;
    FimOptions samp2;
    samp2.sample_labels = true;
    samp2.rng = &s2;
    double fs1 = fim_trace(p, images, labels, samp1);
    double fs2 = fim_trace(p, images, labels, samp2);
    CHECK(fs1 == fs2);  // same stream, same draw
    CHECK(fs1 >= 0.0);
}

TEST_CASE("linear_probe: separable two-class blobs reach 0.95") {
    RngStream rng(46);
    const std::size_t n = 200, d = 8;
    DenseTensor X = DenseTensor::matrix(n, d);
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) {
        int c = i % 2;
        truth[i] = c;
        for (std::size_t j = 0; j < d; ++j)
            X(i, j) = (c == 0 ? 2.0 : -2.0) * (j == 0 ? 1.0 : 0.2) + 0.3 * rng.normal();
    }
    ProbeConfig cfg;
    cfg.seed = 5;
    CHECK(linear_probe(X, truth, cfg) >= 0.95);
}

TEST_CASE("linear_probe: pure noise with 5 classes sits near chance") {
    RngStream rng(47);
    const std::size_t n = 500, d = 16;
    DenseTensor X = DenseTensor::matrix(n, d);
    for (double& v : X.data()) v = rng.normal();
    std::vector<int> truth(n);
    for (std::size_t i = 0; i < n; ++i) truth[i] = static_cast<int>(i % 5);
    ProbeConfig cfg;
    cfg.seed = 6;
    double acc = linear_probe(X, truth, cfg);
    CHECK(acc >= 0.05);
    CHECK(acc <= 0.35);
}

TEST_CASE("linear_probe: a memorizable table is classified perfectly") {
    const std::size_t reps = 40;
    DenseTensor X = DenseTensor::matrix(3 * reps, 2);
    std::vector<int> truth(3 * reps);
    const double protos[3][2] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, -1.0}};
    for (std::size_t i = 0; i < 3 * reps; ++i) {
        std::size_t c = i % 3;
        X(i, 0) = protos[c][0];
        X(i, 1) = protos[c][1];
        truth[i] = static_cast<int>(c);
    }
    ProbeConfig cfg;
    cfg.seed = 7;
    CHECK(linear_probe(X, truth, cfg) == doctest::Approx(1.0));
}

TEST_CASE("linear_probe: degenerate single-class truth is rejected") {
    DenseTensor X = DenseTensor::matrix(10, 3);
    std::vector<int> truth(10, 2);
    CHECK_THROWS_AS(linear_probe(X, truth), std::invalid_argument);
}
