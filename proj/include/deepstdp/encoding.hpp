#pragma once

// Signed Poisson rate coding. Real-valued feature rows (PCA-reduced and
// l2-normalized) become per-timestep Bernoulli spike rasters, with positive
// components spiking on the plus channel and negative components on the minus
// channel.

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "pca.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace deepstdp {

struct ProcessedFeatures {
    DenseTensor X;  // N x d, each row unit norm or exactly zero

    std::size_t count() const { return X.rows(); }
    std::size_t dim() const { return X.cols(); }
};

/// One encoded sample: T x d binary rasters for the two input channels. A
/// component never spikes on both channels in the same timestep.
struct SpikeTrain {
    std::size_t T = 0;
    std::size_t d = 0;
    std::vector<std::uint8_t> plus;   // T*d, row-major (t, i)
    std::vector<std::uint8_t> minus;

    SpikeTrain() = default;
    SpikeTrain(std::size_t T_, std::size_t d_) : T(T_), d(d_), plus(T_ * d_, 0), minus(T_ * d_, 0) {}

    std::uint8_t s_plus(std::size_t t, std::size_t i) const { return plus[t * d + i]; }
    std::uint8_t s_minus(std::size_t t, std::size_t i) const { return minus[t * d + i]; }
    std::span<const std::uint8_t> plus_row(std::size_t t) const { return {plus.data() + t * d, d}; }
    std::span<const std::uint8_t> minus_row(std::size_t t) const { return {minus.data() + t * d, d}; }
};

/// PCA-reduce each row of raw to d_pca dims, then l2-normalize each row.
inline ProcessedFeatures preprocess(const DenseTensor& raw, std::size_t d_pca, bool whiten) {
    PcaModel model = pca_fit(raw, d_pca, whiten);
    DenseTensor X = model.transform(raw);
    l2_normalize_rows(X);
    return ProcessedFeatures{std::move(X)};
}

/// Rate-encode one feature vector. Every (timestep, component) pair consumes
/// exactly one uniform draw whether or not it spikes, so two encodings with
/// the same seed stay aligned draw-for-draw.
inline SpikeTrain encode(std::span<const double> f, double gain, std::size_t T, RngStream& rng) {
    if (!(gain >= 0.0) || !std::isfinite(gain))
        throw std::invalid_argument("encode: gain must be finite and >= 0");
    if (T < 1) throw std::invalid_argument("encode: T must be >= 1");
    for (double x : f)
        if (!std::isfinite(x)) throw std::invalid_argument("encode: non-finite feature");

    SpikeTrain train(T, f.size());
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t i = 0; i < f.size(); ++i) {
            double p = std::min(1.0, std::abs(f[i]) * gain);
            bool spike = rng.bernoulli(p);
            if (!spike || f[i] == 0.0) continue;
            if (f[i] > 0.0)
                train.plus[t * train.d + i] = 1;
            else
                train.minus[t * train.d + i] = 1;
        }
    }
    return train;
}

}  // namespace deepstdp
