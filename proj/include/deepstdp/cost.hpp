#pragma once

// Analytic energy model: closed-form ADD/MULT counts for k-means and STDP
// clustering, priced at 45 nm CMOS float-operation energies.

#include <cmath>
#include <cstdint>
#include <stdexcept>

namespace deepstdp {

struct OpCount {
    unsigned long long adds = 0;
    unsigned long long mults = 0;

    OpCount& operator+=(const OpCount& o) {
        adds += o.adds;
        mults += o.mults;
        return *this;
    }
    bool operator==(const OpCount&) const = default;
};

struct EnergyReport {
    unsigned long long adds = 0;
    unsigned long long mults = 0;

    static constexpr double kAddPj = 0.9;   // 45 nm float ADD
    static constexpr double kMultPj = 3.7;  // 45 nm float MULT

    double energy_pj() const {
        return static_cast<double>(adds) * kAddPj + static_cast<double>(mults) * kMultPj;
    }
    double energy_mj() const { return energy_pj() * 1e-9; }
};

inline EnergyReport price_ops(const OpCount& ops) { return EnergyReport{ops.adds, ops.mults}; }

/// Mean spiking probabilities and synapse counts of one clustering epoch.
struct SpikeStats {
    double p_input = 0.0;  // mean input-spike probability per neuron per timestep
    double p_exc = 0.0;    // same for the excitatory layer
    unsigned long long w_exc_count = 0;  // input-to-excitatory synapses (per channel sign)
    unsigned long long w_inh_count = 0;  // recurrent inhibitory connections
};

namespace detail {

inline unsigned long long checked_mul(unsigned long long a, unsigned long long b) {
    unsigned long long r = 0;
    if (__builtin_mul_overflow(a, b, &r))
        throw std::overflow_error("operation count overflows 64 bits");
    return r;
}

inline unsigned long long checked_add(unsigned long long a, unsigned long long b) {
    unsigned long long r = 0;
    if (__builtin_add_overflow(a, b, &r))
        throw std::overflow_error("operation count overflows 64 bits");
    return r;
}

inline unsigned long long round_count(double x) {
    if (!(x >= 0.0) || x > 9.0e18) throw std::overflow_error("operation count out of range");
    return static_cast<unsigned long long>(std::llround(x));
}

}  // namespace detail

/// Lloyd's algorithm cost: mults = k*d*it*N squarings, adds = [k(2d-1)+d]*it*N
/// covering per-dimension subtraction, the distance summation tree, and the
/// centroid re-centering.
inline EnergyReport kmeans_energy(unsigned long long k, unsigned long long d,
                                  unsigned long long it, unsigned long long n) {
    if (k < 1 || d < 1 || it < 1 || n < 1)
        throw std::invalid_argument("kmeans_energy: all arguments must be >= 1");
    using detail::checked_add;
    using detail::checked_mul;
    unsigned long long it_n = checked_mul(it, n);
    EnergyReport r;
    r.mults = checked_mul(checked_mul(k, d), it_n);
    // k*(2d-1) + d adds per point per iteration
    unsigned long long per_point =
        checked_add(checked_mul(k, checked_mul(2, d) - 1), d);
    r.adds = checked_mul(per_point, it_n);
    return r;
}

/// STDP clustering cost. Spike arithmetic reduces to conditional additions:
/// feedforward input integration, the pre- and post-synaptic trace updates,
/// and lateral inhibition. No multiplications are counted.
inline EnergyReport stdp_energy(const SpikeStats& stats, unsigned long long T,
                                unsigned long long n) {
    if (!(stats.p_input >= 0.0 && stats.p_input <= 1.0) ||
        !(stats.p_exc >= 0.0 && stats.p_exc <= 1.0))
        throw std::invalid_argument("stdp_energy: probabilities must lie in [0, 1]");
    double w_exc = static_cast<double>(stats.w_exc_count);
    double w_inh = static_cast<double>(stats.w_inh_count);
    double per_step = stats.p_input * w_exc + (stats.p_input + stats.p_exc) * w_exc +
                      stats.p_exc * w_inh;
    double total = per_step * static_cast<double>(T) * static_cast<double>(n);
    EnergyReport r;
    r.adds = detail::round_count(total);
    r.mults = 0;
    return r;
}

/// Assemble SpikeStats from raw spike counters of a clustering epoch over
/// n samples, T timesteps, d inputs and k excitatory neurons.
inline SpikeStats spike_stats_from_counts(unsigned long long input_spikes,
                                          unsigned long long exc_spikes, std::size_t n,
                                          std::size_t T, std::size_t d, std::size_t k) {
    SpikeStats s;
    double steps = static_cast<double>(n) * static_cast<double>(T);
    s.p_input = (steps > 0 && d > 0) ? static_cast<double>(input_spikes) / (steps * d) : 0.0;
    s.p_exc = (steps > 0 && k > 0) ? static_cast<double>(exc_spikes) / (steps * k) : 0.0;
    s.w_exc_count = static_cast<unsigned long long>(d) * k;
    s.w_inh_count = static_cast<unsigned long long>(k) * (k > 0 ? k - 1 : 0);
    return s;
}

}  // namespace deepstdp
