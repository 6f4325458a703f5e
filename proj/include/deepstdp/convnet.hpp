#pragma once

// Small convolutional feature extractor with a removable classifier head,
// trained by explicit backpropagation. Layer stack:
//
//   conv 3x3 (pad 1) -> ReLU -> maxpool 2 -> conv 3x3 (pad 1) -> ReLU ->
//   maxpool 2 -> flatten -> fully-connected features -> fully-connected head
//
// All parameters live in one flat f64 vector so per-sample gradients, SGD,
// finite-difference checks and checkpointing all work on plain arrays.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "rng.hpp"
#include "tensor.hpp"

namespace deepstdp {

struct NetShape {
    std::size_t in_channels = 1;
    std::size_t height = 16;
    std::size_t width = 16;
    std::size_t c1 = 8;
    std::size_t c2 = 16;
    std::size_t d_feat = 64;
    std::size_t classes = 10;

    void validate() const {
        if (height % 4 != 0 || width % 4 != 0)
            throw std::invalid_argument("NetShape: height and width must be multiples of 4");
        if (in_channels < 1 || c1 < 1 || c2 < 1 || d_feat < 1 || classes < 1)
            throw std::invalid_argument("NetShape: all extents must be >= 1");
    }

    std::size_t h2() const { return height / 2; }
    std::size_t w2() const { return width / 2; }
    std::size_t h4() const { return height / 4; }
    std::size_t w4() const { return width / 4; }
    std::size_t flat() const { return c2 * h4() * w4(); }

    std::size_t conv1_w_size() const { return c1 * in_channels * 9; }
    std::size_t conv2_w_size() const { return c2 * c1 * 9; }
    std::size_t fc_w_size() const { return d_feat * flat(); }
    std::size_t head_w_size() const { return classes * d_feat; }

    std::size_t conv1_w_off() const { return 0; }
    std::size_t conv1_b_off() const { return conv1_w_off() + conv1_w_size(); }
    std::size_t conv2_w_off() const { return conv1_b_off() + c1; }
    std::size_t conv2_b_off() const { return conv2_w_off() + conv2_w_size(); }
    std::size_t fc_w_off() const { return conv2_b_off() + c2; }
    std::size_t fc_b_off() const { return fc_w_off() + fc_w_size(); }
    std::size_t head_w_off() const { return fc_b_off() + d_feat; }
    std::size_t head_b_off() const { return head_w_off() + head_w_size(); }
    std::size_t param_count() const { return head_b_off() + classes; }

    std::size_t image_size() const { return in_channels * height * width; }

    bool operator==(const NetShape&) const = default;
};

struct NetParams {
    NetShape shape;
    std::vector<double> values;

    static NetParams init(const NetShape& shape, RngStream& rng) {
        shape.validate();
        NetParams p;
        p.shape = shape;
        p.values.resize(shape.param_count());
        auto fill = [&](std::size_t off, std::size_t count, std::size_t fan_in) {
            double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (std::size_t i = 0; i < count; ++i)
                p.values[off + i] = rng.uniform(-bound, bound);
        };
        fill(shape.conv1_w_off(), shape.conv1_w_size() + shape.c1, shape.in_channels * 9);
        fill(shape.conv2_w_off(), shape.conv2_w_size() + shape.c2, shape.c1 * 9);
        fill(shape.fc_w_off(), shape.fc_w_size() + shape.d_feat, shape.flat());
        fill(shape.head_w_off(), shape.head_w_size() + shape.classes, shape.d_feat);
        return p;
    }

    std::span<const double> head_range() const {
        return {values.data() + shape.head_w_off(), shape.head_w_size() + shape.classes};
    }
};

/// Selects which parameter blocks contribute to gradient norms.
struct LayerMask {
    bool conv1 = true;
    bool conv2 = true;
    bool fc = true;
    bool head = true;
};

/// Intermediate activations of one forward pass, reusable across samples.
struct ForwardCache {
    std::vector<double> z1, a1, p1;
    std::vector<std::size_t> idx1;
    std::vector<double> z2, a2, p2;
    std::vector<std::size_t> idx2;
    std::vector<double> feat, logits;

    void resize(const NetShape& s) {
        z1.assign(s.c1 * s.height * s.width, 0.0);
        a1.assign(z1.size(), 0.0);
        p1.assign(s.c1 * s.h2() * s.w2(), 0.0);
        idx1.assign(p1.size(), 0);
        z2.assign(s.c2 * s.h2() * s.w2(), 0.0);
        a2.assign(z2.size(), 0.0);
        p2.assign(s.c2 * s.h4() * s.w4(), 0.0);
        idx2.assign(p2.size(), 0);
        feat.assign(s.d_feat, 0.0);
        logits.assign(s.classes, 0.0);
    }
};

namespace detail {

inline void conv3x3_forward(std::span<const double> in, std::size_t cin, std::size_t h,
                            std::size_t w, std::span<const double> weights,
                            std::span<const double> bias, std::size_t cout,
                            std::span<double> out) {
    for (std::size_t oc = 0; oc < cout; ++oc) {
        for (std::size_t y = 0; y < h; ++y) {
            for (std::size_t x = 0; x < w; ++x) {
                double acc = bias[oc];
                for (std::size_t ic = 0; ic < cin; ++ic) {
                    const double* wbase = weights.data() + (oc * cin + ic) * 9;
                    const double* ibase = in.data() + ic * h * w;
                    for (int r = -1; r <= 1; ++r) {
                        std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + r;
                        if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
                        for (int s = -1; s <= 1; ++s) {
                            std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + s;
                            if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                            acc += wbase[(r + 1) * 3 + (s + 1)] * ibase[yy * w + xx];
                        }
                    }
                }
                out[(oc * h + y) * w + x] = acc;
            }
        }
    }
}

inline void maxpool2_forward(std::span<const double> in, std::size_t c, std::size_t h,
                             std::size_t w, std::span<double> out,
                             std::span<std::size_t> argmax) {
    std::size_t ho = h / 2, wo = w / 2;
    for (std::size_t ch = 0; ch < c; ++ch) {
        const double* ibase = in.data() + ch * h * w;
        for (std::size_t y = 0; y < ho; ++y) {
            for (std::size_t x = 0; x < wo; ++x) {
                std::size_t best = (2 * y) * w + 2 * x;
                double bv = ibase[best];
                for (int dy = 0; dy < 2; ++dy)
                    for (int dx = 0; dx < 2; ++dx) {
                        std::size_t pos = (2 * y + dy) * w + (2 * x + dx);
                        if (ibase[pos] > bv) {
                            bv = ibase[pos];
                            best = pos;
                        }
                    }
                out[(ch * ho + y) * wo + x] = bv;
                argmax[(ch * ho + y) * wo + x] = best;
            }
        }
    }
}

}  // namespace detail

/// Full forward pass, recording every intermediate needed for backprop.
inline void forward_cached(const NetParams& p, std::span<const double> image, ForwardCache& c) {
    const NetShape& s = p.shape;
    if (image.size() != s.image_size())
        throw std::invalid_argument("forward: image size mismatch");
    c.resize(s);
    const double* v = p.values.data();

    detail::conv3x3_forward(image, s.in_channels, s.height, s.width,
                            {v + s.conv1_w_off(), s.conv1_w_size()}, {v + s.conv1_b_off(), s.c1},
                            s.c1, c.z1);
    for (std::size_t i = 0; i < c.z1.size(); ++i) c.a1[i] = std::max(c.z1[i], 0.0);
    detail::maxpool2_forward(c.a1, s.c1, s.height, s.width, c.p1, c.idx1);

    detail::conv3x3_forward(c.p1, s.c1, s.h2(), s.w2(),
                            {v + s.conv2_w_off(), s.conv2_w_size()}, {v + s.conv2_b_off(), s.c2},
                            s.c2, c.z2);
    for (std::size_t i = 0; i < c.z2.size(); ++i) c.a2[i] = std::max(c.z2[i], 0.0);
    detail::maxpool2_forward(c.a2, s.c2, s.h2(), s.w2(), c.p2, c.idx2);

    for (std::size_t j = 0; j < s.d_feat; ++j) {
        const double* wr = v + s.fc_w_off() + j * s.flat();
        double acc = v[s.fc_b_off() + j];
        for (std::size_t f = 0; f < s.flat(); ++f) acc += wr[f] * c.p2[f];
        c.feat[j] = acc;
    }
    for (std::size_t o = 0; o < s.classes; ++o) {
        const double* wr = v + s.head_w_off() + o * s.d_feat;
        double acc = v[s.head_b_off() + o];
        for (std::size_t j = 0; j < s.d_feat; ++j) acc += wr[j] * c.feat[j];
        c.logits[o] = acc;
    }
}

/// Feature vector of one image; the classifier head is not applied.
inline std::vector<double> forward_features(const NetParams& p, std::span<const double> image) {
    ForwardCache c;
    forward_cached(p, image, c);
    return c.feat;
}

inline std::vector<double> forward_logits(const NetParams& p, std::span<const double> image) {
    ForwardCache c;
    forward_cached(p, image, c);
    return c.logits;
}

/// Numerically stable softmax probabilities from logits.
inline std::vector<double> softmax(std::span<const double> logits) {
    double mx = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - mx);
        sum += out[i];
    }
    for (double& x : out) x /= sum;
    return out;
}

/// Cross-entropy loss of the cached forward pass against `label`, writing the
/// per-sample parameter gradient (overwriting) into grad_out. Returns the
/// loss. grad_out must have param_count entries.
inline double backward_from_label(const NetParams& p, const ForwardCache& c,
                                  std::span<const double> image, int label,
                                  std::span<double> grad_out) {
    const NetShape& s = p.shape;
    if (label < 0 || static_cast<std::size_t>(label) >= s.classes)
        throw std::invalid_argument("backward: label out of range");
    if (grad_out.size() != s.param_count())
        throw std::invalid_argument("backward: gradient buffer size mismatch");
    std::fill(grad_out.begin(), grad_out.end(), 0.0);
    const double* v = p.values.data();

    double mx = *std::max_element(c.logits.begin(), c.logits.end());
    double sum = 0.0;
    for (double l : c.logits) sum += std::exp(l - mx);
    double lse = mx + std::log(sum);
    double loss = lse - c.logits[static_cast<std::size_t>(label)];

    std::vector<double> dlogits(s.classes);
    for (std::size_t o = 0; o < s.classes; ++o)
        dlogits[o] = std::exp(c.logits[o] - lse) - (static_cast<std::size_t>(label) == o ? 1.0 : 0.0);

    // head
    std::vector<double> dfeat(s.d_feat, 0.0);
    for (std::size_t o = 0; o < s.classes; ++o) {
        double g = dlogits[o];
        double* dw = grad_out.data() + s.head_w_off() + o * s.d_feat;
        const double* wr = v + s.head_w_off() + o * s.d_feat;
        for (std::size_t j = 0; j < s.d_feat; ++j) {
            dw[j] += g * c.feat[j];
            dfeat[j] += g * wr[j];
        }
        grad_out[s.head_b_off() + o] += g;
    }

    // feature fully-connected layer
    std::vector<double> dp2(s.flat(), 0.0);
    for (std::size_t j = 0; j < s.d_feat; ++j) {
        double g = dfeat[j];
        double* dw = grad_out.data() + s.fc_w_off() + j * s.flat();
        const double* wr = v + s.fc_w_off() + j * s.flat();
        for (std::size_t f = 0; f < s.flat(); ++f) {
            dw[f] += g * c.p2[f];
            dp2[f] += g * wr[f];
        }
        grad_out[s.fc_b_off() + j] += g;
    }

    // unpool + ReLU gate into conv2 pre-activations
    std::vector<double> dz2(s.c2 * s.h2() * s.w2(), 0.0);
    for (std::size_t cell = 0; cell < dp2.size(); ++cell) {
        std::size_t ch = cell / (s.h4() * s.w4());
        std::size_t src = ch * s.h2() * s.w2() + c.idx2[cell];
        if (c.z2[src] > 0.0) dz2[src] += dp2[cell];
    }

    // conv2 parameter gradients and gradient w.r.t. its input p1
    std::vector<double> dp1(s.c1 * s.h2() * s.w2(), 0.0);
    {
        const std::size_t h = s.h2(), w = s.w2();
        for (std::size_t oc = 0; oc < s.c2; ++oc) {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    double g = dz2[(oc * h + y) * w + x];
                    if (g == 0.0) continue;
                    grad_out[s.conv2_b_off() + oc] += g;
                    for (std::size_t ic = 0; ic < s.c1; ++ic) {
                        double* dw = grad_out.data() + s.conv2_w_off() + (oc * s.c1 + ic) * 9;
                        const double* wbase = v + s.conv2_w_off() + (oc * s.c1 + ic) * 9;
                        const double* ibase = c.p1.data() + ic * h * w;
                        double* dibase = dp1.data() + ic * h * w;
                        for (int r = -1; r <= 1; ++r) {
                            std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + r;
                            if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (int sx = -1; sx <= 1; ++sx) {
                                std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + sx;
                                if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                                std::size_t widx = (r + 1) * 3 + (sx + 1);
                                dw[widx] += g * ibase[yy * w + xx];
                                dibase[yy * w + xx] += g * wbase[widx];
                            }
                        }
                    }
                }
            }
        }
    }

    // unpool + ReLU gate into conv1 pre-activations
    std::vector<double> dz1(s.c1 * s.height * s.width, 0.0);
    for (std::size_t cell = 0; cell < dp1.size(); ++cell) {
        std::size_t ch = cell / (s.h2() * s.w2());
        std::size_t src = ch * s.height * s.width + c.idx1[cell];
        if (c.z1[src] > 0.0) dz1[src] += dp1[cell];
    }

    // conv1 parameter gradients (input gradient not needed)
    {
        const std::size_t h = s.height, w = s.width;
        for (std::size_t oc = 0; oc < s.c1; ++oc) {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    double g = dz1[(oc * h + y) * w + x];
                    if (g == 0.0) continue;
                    grad_out[s.conv1_b_off() + oc] += g;
                    for (std::size_t ic = 0; ic < s.in_channels; ++ic) {
                        double* dw = grad_out.data() + s.conv1_w_off() + (oc * s.in_channels + ic) * 9;
                        const double* ibase = image.data() + ic * h * w;
                        for (int r = -1; r <= 1; ++r) {
                            std::ptrdiff_t yy = static_cast<std::ptrdiff_t>(y) + r;
                            if (yy < 0 || yy >= static_cast<std::ptrdiff_t>(h)) continue;
                            for (int sx = -1; sx <= 1; ++sx) {
                                std::ptrdiff_t xx = static_cast<std::ptrdiff_t>(x) + sx;
                                if (xx < 0 || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                                dw[(r + 1) * 3 + (sx + 1)] += g * ibase[yy * w + xx];
                            }
                        }
                    }
                }
            }
        }
    }

    return loss;
}

inline double masked_sq_norm(const NetShape& s, std::span<const double> grad,
                             const LayerMask& mask) {
    auto block = [&](std::size_t off, std::size_t count) {
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) acc += grad[off + i] * grad[off + i];
        return acc;
    };
    double total = 0.0;
    if (mask.conv1) total += block(s.conv1_w_off(), s.conv1_w_size() + s.c1);
    if (mask.conv2) total += block(s.conv2_w_off(), s.conv2_w_size() + s.c2);
    if (mask.fc) total += block(s.fc_w_off(), s.fc_w_size() + s.d_feat);
    if (mask.head) total += block(s.head_w_off(), s.head_w_size() + s.classes);
    return total;
}

struct BatchGrads {
    double loss = 0.0;                          // mean cross-entropy over the batch
    std::vector<double> grads;                  // batch-averaged parameter gradient
    std::vector<double> per_sample_sq_grad_norm;  // full-parameter norms per sample
};

/// Cross-entropy loss and gradients for a batch of images (B x C x H x W).
/// Gradients are averaged over the batch; per-sample squared gradient norms
/// of the label log-likelihood are reported for Fisher-information use.
inline BatchGrads loss_and_grads(const NetParams& p, const DenseTensor& images,
                                 std::span<const int> labels) {
    const NetShape& s = p.shape;
    const std::size_t b = images.dim(0);
    if (labels.size() != b) throw std::invalid_argument("loss_and_grads: label count mismatch");

    BatchGrads out;
    out.grads.assign(s.param_count(), 0.0);
    out.per_sample_sq_grad_norm.assign(b, 0.0);
    std::vector<double> sample_grad(s.param_count(), 0.0);
    ForwardCache cache;
    for (std::size_t i = 0; i < b; ++i) {
        auto image = images.slice(i);
        forward_cached(p, image, cache);
        out.loss += backward_from_label(p, cache, image, labels[i], sample_grad);
        for (std::size_t j = 0; j < sample_grad.size(); ++j) out.grads[j] += sample_grad[j];
        out.per_sample_sq_grad_norm[i] = masked_sq_norm(s, sample_grad, LayerMask{});
    }
    if (b > 0) {
        out.loss /= static_cast<double>(b);
        for (double& g : out.grads) g /= static_cast<double>(b);
    }
    return out;
}

/// Plain gradient-descent update: p <- p - lr * grads.
inline void sgd_step(NetParams& p, std::span<const double> grads, double lr) {
    if (grads.size() != p.values.size()) throw std::invalid_argument("sgd_step: size mismatch");
    for (std::size_t i = 0; i < grads.size(); ++i) p.values[i] -= lr * grads[i];
}

/// Redraw the classifier head (uniform +-1/sqrt(fan_in)); feature layers are
/// left untouched.
inline void reinit_head(NetParams& p, RngStream& rng) {
    const NetShape& s = p.shape;
    double bound = 1.0 / std::sqrt(static_cast<double>(s.d_feat));
    for (std::size_t i = s.head_w_off(); i < s.param_count(); ++i)
        p.values[i] = rng.uniform(-bound, bound);
}

}  // namespace deepstdp
