#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <deepstdp/convnet.hpp>

using namespace deepstdp;

namespace {

NetShape tiny_shape() {
    NetShape s;
    s.in_channels = 1;
    s.height = 12;
    s.width = 12;
    s.c1 = 3;
    s.c2 = 6;
    s.d_feat = 16;
    s.classes = 5;
    return s;  // 1163 parameters
}

DenseTensor random_images(const NetShape& s, std::size_t n, RngStream& rng) {
    DenseTensor t({n, s.in_channels, s.height, s.width});
    for (double& v : t.data()) v = rng.normal();
    return t;
}

/// Central finite difference of the batch loss w.r.t. one parameter.
double numeric_grad(NetParams p, const DenseTensor& images, std::span<const int> labels,
                    std::size_t coord, double h) {
    p.values[coord] += h;
    double up = loss_and_grads(p, images, labels).loss;
    p.values[coord] -= 2 * h;
    double dn = loss_and_grads(p, images, labels).loss;
    return (up - dn) / (2 * h);
}

}  // namespace

TEST_CASE("shape bookkeeping: parameter count covers every block exactly") {
    NetShape s = tiny_shape();
    CHECK(s.param_count() ==
          s.conv1_w_size() + s.c1 + s.conv2_w_size() + s.c2 + s.fc_w_size() + s.d_feat +
              s.head_w_size() + s.classes);
    CHECK(s.param_count() >= 1000);
    CHECK(s.flat() == s.c2 * (s.height / 4) * (s.width / 4));
}

TEST_CASE("forward: zero weights give zero features and logits") {
    NetShape s = tiny_shape();
    NetParams p;
    p.shape = s;
    p.values.assign(s.param_count(), 0.0);
    RngStream rng(1);
    DenseTensor img({1, s.in_channels, s.height, s.width});
    for (double& v : img.data()) v = rng.normal();
    auto feat = forward_features(p, img.slice(0));
    for (double f : feat) CHECK(f == 0.0);
    auto logits = forward_logits(p, img.slice(0));
    for (double l : logits) CHECK(l == 0.0);
}

TEST_CASE("forward: center-tap convolutions propagate a constant image analytically") {
    NetShape s = tiny_shape();
    NetParams p;
    p.shape = s;
    p.values.assign(s.param_count(), 0.0);

    const double a1 = 0.5, a2 = 0.25, fc = 0.1, img_val = 2.0;
    // conv1: each output channel taps only the center of input channel 0
    for (std::size_t oc = 0; oc < s.c1; ++oc)
        p.values[s.conv1_w_off() + (oc * s.in_channels + 0) * 9 + 4] = a1;
    // conv2: center tap on input channel 0 only
    for (std::size_t oc = 0; oc < s.c2; ++oc)
        p.values[s.conv2_w_off() + (oc * s.c1 + 0) * 9 + 4] = a2;
    for (std::size_t j = 0; j < s.fc_w_size(); ++j) p.values[s.fc_w_off() + j] = fc;

    DenseTensor img({1, s.in_channels, s.height, s.width});
    for (double& v : img.data()) v = img_val;
    auto feat = forward_features(p, img.slice(0));
    double expected = fc * static_cast<double>(s.flat()) * (img_val * a1 * a2);
    for (double f : feat) CHECK(f == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("loss: uniform logits cost ln(k)") {
    NetShape s = tiny_shape();
    NetParams p;
    p.shape = s;
    p.values.assign(s.param_count(), 0.0);
    RngStream rng(2);
    DenseTensor batch = random_images(s, 3, rng);
    std::vector<int> labels{0, 2, 4};
    BatchGrads bg = loss_and_grads(p, batch, labels);
    CHECK(bg.loss == doctest::Approx(std::log(5.0)).epsilon(1e-12));
}

TEST_CASE("loss: saturated correct prediction has an exactly zero gradient") {
    NetShape s = tiny_shape();
    RngStream rng(3);
    NetParams p = NetParams::init(s, rng);
    // a huge bias on the labeled class saturates the softmax to 1
    p.values[s.head_b_off() + 2] = 1e4;
    DenseTensor batch = random_images(s, 2, rng);
    std::vector<int> labels{2, 2};
    BatchGrads bg = loss_and_grads(p, batch, labels);
    CHECK(bg.per_sample_sq_grad_norm[0] == 0.0);
    CHECK(bg.per_sample_sq_grad_norm[1] == 0.0);
}

TEST_CASE("gradients: full central-difference sweep on a >=1e3 parameter net") {
    NetShape s = tiny_shape();
    RngStream rng(4);
    NetParams p = NetParams::init(s, rng);
    DenseTensor batch = random_images(s, 3, rng);
    std::vector<int> labels{1, 3, 0};

    BatchGrads bg = loss_and_grads(p, batch, labels);
    const double h = 1e-5;
    double worst = 0.0;
    for (std::size_t coord = 0; coord < s.param_count(); ++coord) {
        double num = numeric_grad(p, batch, labels, coord, h);
        double ana = bg.grads[coord];
        double rel = std::abs(ana - num) / std::max(std::abs(ana) + std::abs(num), 1e-6);
        worst = std::max(worst, rel);
    }
    CHECK(worst < 1e-4);
}

TEST_CASE("gradients: batch mean of per-sample gradients equals the returned average") {
    NetShape s = tiny_shape();
    RngStream rng(5);
    NetParams p = NetParams::init(s, rng);
    DenseTensor batch = random_images(s, 5, rng);
    std::vector<int> labels{0, 1, 2, 3, 4};

    BatchGrads bg = loss_and_grads(p, batch, labels);
    std::vector<double> mean(s.param_count(), 0.0);
    for (std::size_t i = 0; i < 5; ++i) {
        DenseTensor one({1, s.in_channels, s.height, s.width});
        auto src = batch.slice(i);
        std::copy(src.begin(), src.end(), one.slice(0).begin());
        std::vector<int> single{labels[i]};
        BatchGrads gi = loss_and_grads(p, one, single);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += gi.grads[j] / 5.0;
        // per-sample norms agree with the single-sample gradient norm
        double norm2 = 0.0;
        for (double g : gi.grads) norm2 += g * g;
        CHECK(bg.per_sample_sq_grad_norm[i] == doctest::Approx(norm2).epsilon(1e-10));
    }
    for (std::size_t j = 0; j < mean.size(); ++j)
        CHECK(bg.grads[j] == doctest::Approx(mean[j]).epsilon(1e-10));
}

TEST_CASE("loss: batch order leaves the averaged loss unchanged") {
    NetShape s = tiny_shape();
    RngStream rng(6);
    NetParams p = NetParams::init(s, rng);
    DenseTensor batch = random_images(s, 4, rng);
    std::vector<int> labels{0, 1, 2, 3};

    DenseTensor reversed(batch.dims());
    std::vector<int> rlabels(4);
    for (std::size_t i = 0; i < 4; ++i) {
        auto src = batch.slice(3 - i);
        std::copy(src.begin(), src.end(), reversed.slice(i).begin());
        rlabels[i] = labels[3 - i];
    }
    double a = loss_and_grads(p, batch, labels).loss;
    double b = loss_and_grads(p, reversed, rlabels).loss;
    CHECK(a == doctest::Approx(b).epsilon(1e-12));
}

TEST_CASE("sgd_step: zero rate is identity; half steps compose; descent on a toy") {
    NetShape s = tiny_shape();
    RngStream rng(7);
    NetParams p = NetParams::init(s, rng);
    DenseTensor batch = random_images(s, 2, rng);
    std::vector<int> labels{1, 2};
    BatchGrads bg = loss_and_grads(p, batch, labels);

    NetParams frozen = p;
    sgd_step(frozen, bg.grads, 0.0);
    CHECK(frozen.values == p.values);

    NetParams full = p, halves = p;
    sgd_step(full, bg.grads, 0.2);
    sgd_step(halves, bg.grads, 0.1);
    sgd_step(halves, bg.grads, 0.1);
    for (std::size_t i = 0; i < full.values.size(); ++i)
        CHECK(halves.values[i] == doctest::Approx(full.values[i]).epsilon(1e-13));

    NetParams stepped = p;
    sgd_step(stepped, bg.grads, 1e-2);
    double after = loss_and_grads(stepped, batch, labels).loss;
    CHECK(after < bg.loss);
}

TEST_CASE("reinit_head: feature layers untouched, head redrawn deterministically") {
    NetShape s = tiny_shape();
    RngStream rng(8);
    NetParams p = NetParams::init(s, rng);
    NetParams q = p;

    RngStream h1(99), h2(99), h3(100);
    reinit_head(p, h1);
    reinit_head(q, h2);
    CHECK(p.values == q.values);
    for (std::size_t i = 0; i < s.head_w_off(); ++i) CHECK(p.values[i] == q.values[i]);

    // a different head changes logits on a fixed input
    NetParams r = p;
    reinit_head(r, h3);
    RngStream img_rng(9);
    DenseTensor img = random_images(s, 1, img_rng);
    auto la = forward_logits(p, img.slice(0));
    auto lb = forward_logits(r, img.slice(0));
    double diff = 0.0;
    for (std::size_t o = 0; o < la.size(); ++o) diff += (la[o] - lb[o]) * (la[o] - lb[o]);
    CHECK(diff > 0.0);
    // while features are identical
    auto fa = forward_features(p, img.slice(0));
    auto fb = forward_features(r, img.slice(0));
    CHECK(fa == fb);
}

TEST_CASE("errors: label range and shape mismatches are rejected") {
    NetShape s = tiny_shape();
    RngStream rng(10);
    NetParams p = NetParams::init(s, rng);
    DenseTensor batch = random_images(s, 1, rng);
    std::vector<int> bad{7};
    CHECK_THROWS_AS(loss_and_grads(p, batch, bad), std::invalid_argument);
    std::vector<double> small(5, 0.0);
    CHECK_THROWS_AS(forward_features(p, small), std::invalid_argument);
}
