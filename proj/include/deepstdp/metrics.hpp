#pragma once

// Evaluation instruments: normalized mutual information between assignments,
// cluster purity against ground truth, the empirical Fisher-information
// trace from per-sample gradients, and a frozen-feature linear probe.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "convnet.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace deepstdp {

struct ContingencyTable {
    DenseTensor counts;  // a x b co-occurrence counts
    std::size_t total = 0;
};

inline ContingencyTable contingency(std::span<const int> ya, std::span<const int> yb) {
    if (ya.size() != yb.size()) throw std::invalid_argument("contingency: length mismatch");
    int amax = 0, bmax = 0;
    for (std::size_t i = 0; i < ya.size(); ++i) {
        if (ya[i] < 0 || yb[i] < 0) throw std::invalid_argument("contingency: negative label");
        amax = std::max(amax, ya[i]);
        bmax = std::max(bmax, yb[i]);
    }
    ContingencyTable t;
    t.counts = DenseTensor::matrix(static_cast<std::size_t>(amax) + 1,
                                   static_cast<std::size_t>(bmax) + 1);
    for (std::size_t i = 0; i < ya.size(); ++i)
        t.counts(static_cast<std::size_t>(ya[i]), static_cast<std::size_t>(yb[i])) += 1.0;
    t.total = ya.size();
    return t;
}

/// Normalized mutual information, I(a;b) / sqrt(H(a) H(b)), natural logs.
/// When either entropy vanishes: 1 if the two partitions are identical as
/// partitions (both trivial), else 0.
inline double nmi(std::span<const int> ya, std::span<const int> yb) {
    if (ya.empty()) throw std::invalid_argument("nmi: empty assignments");
    ContingencyTable t = contingency(ya, yb);
    const std::size_t a = t.counts.rows(), b = t.counts.cols();
    const double n = static_cast<double>(t.total);

    std::vector<double> ra(a, 0.0), cb(b, 0.0);
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j) {
            ra[i] += t.counts(i, j);
            cb[j] += t.counts(i, j);
        }

    auto entropy = [&](const std::vector<double>& m) {
        double h = 0.0;
        for (double c : m)
            if (c > 0) h -= (c / n) * std::log(c / n);
        return h;
    };
    double ha = entropy(ra), hb = entropy(cb);
    if (ha <= 0.0 || hb <= 0.0) return (ha <= 0.0 && hb <= 0.0) ? 1.0 : 0.0;

    double mi = 0.0;
    for (std::size_t i = 0; i < a; ++i)
        for (std::size_t j = 0; j < b; ++j) {
            double c = t.counts(i, j);
            if (c > 0) mi += (c / n) * std::log(c * n / (ra[i] * cb[j]));
        }
    return std::clamp(mi / std::sqrt(ha * hb), 0.0, 1.0);
}

/// Fraction of samples covered by the majority true class of their cluster.
inline double purity(std::span<const int> y, std::span<const int> truth) {
    if (y.size() != truth.size()) throw std::invalid_argument("purity: length mismatch");
    if (y.empty()) throw std::invalid_argument("purity: empty assignments");
    ContingencyTable t = contingency(y, truth);
    double correct = 0.0;
    for (std::size_t i = 0; i < t.counts.rows(); ++i) {
        double best = 0.0;
        for (std::size_t j = 0; j < t.counts.cols(); ++j) best = std::max(best, t.counts(i, j));
        correct += best;
    }
    return correct / static_cast<double>(t.total);
}

struct FimOptions {
    LayerMask mask;               // which parameter blocks enter the norm
    bool sample_labels = false;   // draw y ~ softmax instead of the given labels
    RngStream* rng = nullptr;     // required when sample_labels is set
};

/// Empirical Fisher-information trace: the mean squared l2 norm of the
/// per-sample log-likelihood gradient at the assigned label (or at a label
/// sampled from the model when so configured).
inline double fim_trace(const NetParams& p, const DenseTensor& images, std::span<const int> labels,
                        const FimOptions& opts = {}) {
    const std::size_t n = images.dim(0);
    if (labels.size() != n) throw std::invalid_argument("fim_trace: label count mismatch");
    if (opts.sample_labels && opts.rng == nullptr)
        throw std::invalid_argument("fim_trace: sampled variant needs an RngStream");

    std::vector<double> grad(p.shape.param_count(), 0.0);
    ForwardCache cache;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        auto image = images.slice(i);
        forward_cached(p, image, cache);
        int y = labels[i];
        if (opts.sample_labels) {
            std::vector<double> probs = softmax(cache.logits);
            double u = opts.rng->uniform();
            double acc = 0.0;
            y = static_cast<int>(probs.size()) - 1;
            for (std::size_t o = 0; o < probs.size(); ++o) {
                acc += probs[o];
                if (u < acc) {
                    y = static_cast<int>(o);
                    break;
                }
            }
        }
        backward_from_label(p, cache, image, y, grad);
        total += masked_sq_norm(p.shape, grad, opts.mask);
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

struct ProbeConfig {
    std::size_t epochs = 100;
    double lr = 0.01;
    std::size_t batch = 32;
    bool standardize = true;
    std::uint64_t seed = 1;
};

/// Multinomial logistic regression on frozen features with an 80/20
/// train/eval split by seeded shuffle; returns eval top-1 accuracy.
inline double linear_probe(const DenseTensor& features, std::span<const int> truth,
                           const ProbeConfig& cfg = {}) {
    const std::size_t n = features.rows();
    const std::size_t d = features.cols();
    if (truth.size() != n) throw std::invalid_argument("linear_probe: label count mismatch");
    int cmax = 0;
    for (int t : truth) {
        if (t < 0) throw std::invalid_argument("linear_probe: negative label");
        cmax = std::max(cmax, t);
    }
    const std::size_t classes = static_cast<std::size_t>(cmax) + 1;
    std::vector<std::size_t> class_seen(classes, 0);
    for (int t : truth) class_seen[static_cast<std::size_t>(t)] = 1;
    std::size_t distinct = 0;
    for (std::size_t s : class_seen) distinct += s;
    if (distinct < 2) throw std::invalid_argument("linear_probe: single-class truth is degenerate");
    if (n < classes) throw std::invalid_argument("linear_probe: fewer samples than classes");

    RngStream rng(cfg.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    std::size_t n_train = std::clamp<std::size_t>((n * 4) / 5, 1, n - 1);

    // standardization fitted on the train split only
    std::vector<double> mean(d, 0.0), stdev(d, 1.0);
    if (cfg.standardize) {
        for (std::size_t i = 0; i < n_train; ++i) {
            auto r = features.row(order[i]);
            for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
        }
        for (double& m : mean) m /= static_cast<double>(n_train);
        std::vector<double> var(d, 0.0);
        for (std::size_t i = 0; i < n_train; ++i) {
            auto r = features.row(order[i]);
            for (std::size_t j = 0; j < d; ++j) {
                double c = r[j] - mean[j];
                var[j] += c * c;
            }
        }
        for (std::size_t j = 0; j < d; ++j)
            stdev[j] = std::max(std::sqrt(var[j] / static_cast<double>(n_train)), 1e-12);
    } else {
        std::fill(mean.begin(), mean.end(), 0.0);
    }
    auto standardized = [&](std::size_t sample, std::vector<double>& buf) {
        auto r = features.row(sample);
        for (std::size_t j = 0; j < d; ++j) buf[j] = (r[j] - mean[j]) / stdev[j];
    };

    std::vector<double> w(classes * d, 0.0), bias(classes, 0.0);
    std::vector<double> gw(classes * d, 0.0), gb(classes, 0.0);
    std::vector<double> x(d, 0.0), logits(classes, 0.0);
    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(train_idx);
        for (std::size_t start = 0; start < n_train; start += cfg.batch) {
            std::size_t stop = std::min(start + cfg.batch, n_train);
            std::fill(gw.begin(), gw.end(), 0.0);
            std::fill(gb.begin(), gb.end(), 0.0);
            for (std::size_t i = start; i < stop; ++i) {
                std::size_t sample = train_idx[i];
                standardized(sample, x);
                for (std::size_t o = 0; o < classes; ++o)
                    logits[o] = bias[o] + dot({w.data() + o * d, d}, x);
                std::vector<double> probs = softmax(logits);
                probs[static_cast<std::size_t>(truth[sample])] -= 1.0;
                for (std::size_t o = 0; o < classes; ++o) {
                    double g = probs[o];
                    gb[o] += g;
                    double* gwr = gw.data() + o * d;
                    for (std::size_t j = 0; j < d; ++j) gwr[j] += g * x[j];
                }
            }
            double scale = cfg.lr / static_cast<double>(stop - start);
            for (std::size_t j = 0; j < w.size(); ++j) w[j] -= scale * gw[j];
            for (std::size_t o = 0; o < classes; ++o) bias[o] -= scale * gb[o];
        }
    }

    std::size_t hits = 0;
    for (std::size_t i = n_train; i < n; ++i) {
        std::size_t sample = order[i];
        standardized(sample, x);
        std::size_t best = 0;
        double bv = -std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < classes; ++o) {
            double l = bias[o] + dot({w.data() + o * d, d}, x);
            if (l > bv) {
                bv = l;
                best = o;
            }
        }
        if (best == static_cast<std::size_t>(truth[sample])) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(n - n_train);
}

}  // namespace deepstdp
