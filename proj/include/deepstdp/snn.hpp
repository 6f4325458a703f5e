#pragma once

// Winner-take-all layer of leaky integrate-and-fire neurons trained by
// trace-based signed STDP. Input features arrive as two-channel Poisson spike
// rasters; positive and negative weight maps are learnt separately so the
// layer can match signed feature patterns. Lateral inhibition plus an
// adaptive firing threshold keep single neurons from dominating, and the most
// active neuron per sample becomes its pseudo-label.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cost.hpp"
#include "encoding.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace deepstdp {

enum class LabelPass { Inline, Separate };

struct SnnConfig {
    std::size_t k = 100;       // excitatory neurons
    std::size_t d = 0;         // input dimension, set per run
    double v_rest = -65.0;
    double v_reset = -60.0;
    double v_thr = -52.0;
    double v_decay = 20.0;     // membrane decay constant
    int refractory = 5;        // timesteps a neuron stays silent after firing
    double trace_peak = 1.0;   // trace value at the firing instant
    double trace_decay = 100.0;
    double thr_step = 0.45;    // adaptive threshold increment per spike
    double thr_decay = 1e7;    // adaptive threshold decay constant
    double lr_pre = 1e-3;      // pre-synaptic (depression-side) learning rate
    double lr_post = 1e-6;     // post-synaptic (potentiation-side) learning rate
    double w_inh = -1.0;       // fixed lateral inhibition weight
    std::size_t timesteps = 400;
    double w_max = 1.0;        // weight magnitude clamp
    LabelPass label_pass = LabelPass::Separate;
    bool normalize_weights = false;  // optional per-neuron input normalization

    void validate() const {
        if (!(v_reset < v_thr)) throw std::invalid_argument("SnnConfig: v_reset must be < v_thr");
        if (!(v_rest <= v_reset))
            throw std::invalid_argument("SnnConfig: v_rest must be <= v_reset");
        if (refractory < 0) throw std::invalid_argument("SnnConfig: refractory must be >= 0");
        if (!(v_decay > 0) || !(trace_decay > 0) || !(thr_decay > 0))
            throw std::invalid_argument("SnnConfig: decay constants must be > 0");
        if (lr_pre < 0 || lr_post < 0)
            throw std::invalid_argument("SnnConfig: learning rates must be >= 0");
        if (w_inh > 0) throw std::invalid_argument("SnnConfig: w_inh must be <= 0");
        if (!(w_max > 0)) throw std::invalid_argument("SnnConfig: w_max must be > 0");
        if (k < 1 || timesteps < 1)
            throw std::invalid_argument("SnnConfig: k and timesteps must be >= 1");
    }
};

struct SnnState {
    DenseTensor w_plus;   // d x k, entries in [0, w_max]
    DenseTensor w_minus;  // d x k, entries in [-w_max, 0]
    std::vector<double> v;            // k membrane potentials
    std::vector<double> thr_offset;   // k adaptive threshold offsets, >= 0
    std::vector<int> refractory;      // k countdowns
    std::vector<double> trace_pre_plus;   // d
    std::vector<double> trace_pre_minus;  // d
    std::vector<double> trace_post;       // k
};

struct SampleActivity {
    std::vector<int> spike_counts;  // k
    std::vector<double> final_v;    // k
    std::size_t winner = 0;
};

struct PseudoLabels {
    std::vector<int> labels;  // one entry per sample, each in [0, k)
};

struct PairStdpParams {
    double a_plus = 1.0;
    double a_minus = 1.0;
    double beta_plus = 1.0;
    double beta_minus = 1.0;
};

/// Classic pair-based STDP curve as a function of post-minus-pre spike time.
/// Kept as a reference/diagnostic; the trained path uses spike traces.
inline double pair_stdp_kernel(double dt, const PairStdpParams& p) {
    if (!(p.a_plus > 0 && p.a_minus > 0 && p.beta_plus > 0 && p.beta_minus > 0))
        throw std::invalid_argument("pair_stdp_kernel: params must be positive");
    if (dt == 0.0) throw std::invalid_argument("pair_stdp_kernel: dt = 0 is undefined");
    if (dt > 0) return p.a_plus * std::exp(-dt / p.beta_plus);
    return -p.a_minus * std::exp(dt / p.beta_minus);
}

/// Conditional-addition counters for the energy cross-check. Only work gated
/// on spikes is tracked, mirroring the closed-form cost model.
struct SnnOpCounters {
    unsigned long long feedforward_adds = 0;
    unsigned long long learning_adds = 0;
    unsigned long long inhibition_adds = 0;

    unsigned long long total() const {
        return feedforward_adds + learning_adds + inhibition_adds;
    }
};

/// Fresh network: weights uniform on the lower 30% of their magnitude range,
/// potentials at rest, no adaptive threshold, no refractory carry-over.
inline SnnState init_network(const SnnConfig& cfg, RngStream& rng) {
    cfg.validate();
    SnnState st;
    st.w_plus = DenseTensor::matrix(cfg.d, cfg.k);
    st.w_minus = DenseTensor::matrix(cfg.d, cfg.k);
    for (double& w : st.w_plus.data()) w = rng.uniform(0.0, 0.3 * cfg.w_max);
    for (double& w : st.w_minus.data()) w = rng.uniform(-0.3 * cfg.w_max, 0.0);
    st.v.assign(cfg.k, cfg.v_rest);
    st.thr_offset.assign(cfg.k, 0.0);
    st.refractory.assign(cfg.k, 0);
    st.trace_pre_plus.assign(cfg.d, 0.0);
    st.trace_pre_minus.assign(cfg.d, 0.0);
    st.trace_post.assign(cfg.k, 0.0);
    return st;
}

/// Advance the layer by one timestep given the input spike rasters for that
/// step. `learn` gates the STDP weight updates, `adapt` gates the adaptive
/// threshold dynamics (both off during the frozen labeling pass).
inline std::vector<std::uint8_t> step_timestep(SnnState& state,
                                               std::span<const std::uint8_t> s_plus,
                                               std::span<const std::uint8_t> s_minus,
                                               const SnnConfig& cfg, bool learn, bool adapt,
                                               SnnOpCounters* ops = nullptr) {
    const std::size_t d = cfg.d;
    const std::size_t k = cfg.k;
    if (s_plus.size() != d || s_minus.size() != d || state.v.size() != k ||
        state.w_plus.rows() != d || state.w_plus.cols() != k)
        throw std::invalid_argument("step_timestep: dimension mismatch");

    const double trace_factor = std::exp(-1.0 / cfg.trace_decay);
    const double thr_factor = std::exp(-1.0 / cfg.thr_decay);
    const double v_factor = std::exp(-1.0 / cfg.v_decay);

    // (1) incoming spikes reset the matching pre-synaptic traces to the peak
    for (std::size_t i = 0; i < d; ++i) {
        if (s_plus[i]) state.trace_pre_plus[i] = cfg.trace_peak;
        if (s_minus[i]) state.trace_pre_minus[i] = cfg.trace_peak;
    }

    // (2) all traces decay
    for (double& t : state.trace_pre_plus) t *= trace_factor;
    for (double& t : state.trace_pre_minus) t *= trace_factor;
    for (double& t : state.trace_post) t *= trace_factor;

    // (3) adaptive threshold decay
    if (adapt)
        for (double& e : state.thr_offset) e *= thr_factor;

    // (4) membrane leak toward rest
    for (double& v : state.v) v = cfg.v_rest + v_factor * (v - cfg.v_rest);

    // (5) refractory countdown
    for (int& l : state.refractory) l = std::max(l - 1, 0);

    // (6) integrate input spikes into non-refractory neurons
    std::vector<double> drive(k, 0.0);
    std::size_t n_in = 0;
    for (std::size_t i = 0; i < d; ++i) {
        if (s_plus[i]) {
            auto row = state.w_plus.row(i);
            for (std::size_t j = 0; j < k; ++j) drive[j] += row[j];
            ++n_in;
        }
        if (s_minus[i]) {
            auto row = state.w_minus.row(i);
            for (std::size_t j = 0; j < k; ++j) drive[j] += row[j];
            ++n_in;
        }
    }
    std::size_t active = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (state.refractory[j] == 0) {
            state.v[j] += drive[j];
            ++active;
        }
    }
    if (ops) ops->feedforward_adds += static_cast<unsigned long long>(n_in) * active;

    // (7) threshold test; (8) spike side effects
    std::vector<std::uint8_t> spikes(k, 0);
    std::size_t n_fire = 0;
    for (std::size_t j = 0; j < k; ++j) {
        if (state.refractory[j] == 0 && state.v[j] > cfg.v_thr + state.thr_offset[j]) {
            spikes[j] = 1;
            ++n_fire;
            state.refractory[j] = cfg.refractory;
            state.v[j] = cfg.v_reset;
            if (adapt) state.thr_offset[j] += cfg.thr_step;
            state.trace_post[j] = cfg.trace_peak;
        }
    }

    // (9) STDP weight updates: depression from pre-spikes against the
    // post-synaptic trace, potentiation from post-spikes against the
    // pre-synaptic traces; clamped to the signed weight ranges.
    if (learn) {
        for (std::size_t i = 0; i < d; ++i) {
            if (s_plus[i]) {
                auto row = state.w_plus.row(i);
                for (std::size_t j = 0; j < k; ++j)
                    row[j] = std::clamp(row[j] - cfg.lr_pre * state.trace_post[j], 0.0, cfg.w_max);
                if (ops) ops->learning_adds += k;
            }
            if (s_minus[i]) {
                auto row = state.w_minus.row(i);
                for (std::size_t j = 0; j < k; ++j)
                    row[j] = std::clamp(row[j] + cfg.lr_pre * state.trace_post[j], -cfg.w_max, 0.0);
                if (ops) ops->learning_adds += k;
            }
        }
        if (n_fire > 0) {
            for (std::size_t j = 0; j < k; ++j) {
                if (!spikes[j]) continue;
                for (std::size_t i = 0; i < d; ++i) {
                    state.w_plus(i, j) = std::clamp(
                        state.w_plus(i, j) + cfg.lr_post * state.trace_pre_plus[i], 0.0, cfg.w_max);
                    state.w_minus(i, j) =
                        std::clamp(state.w_minus(i, j) + cfg.lr_post * state.trace_pre_minus[i],
                                   -cfg.w_max, 0.0);
                }
                if (ops) ops->learning_adds += d;
            }
        }
    }

    // (10) lateral inhibition: every spike depresses all other neurons
    if (n_fire > 0) {
        for (std::size_t j = 0; j < k; ++j) {
            double hits = static_cast<double>(n_fire - (spikes[j] ? 1 : 0));
            state.v[j] += cfg.w_inh * hits;
        }
        if (ops) ops->inhibition_adds += static_cast<unsigned long long>(n_fire) * (k - 1);
    }

    return spikes;
}

namespace detail {

/// Optional per-neuron input normalization (off by default): rescales each
/// neuron's positive and negative weight columns to a fixed l1 budget of
/// 0.15 * d * w_max, the expected column sum at initialization.
inline void normalize_columns(SnnState& state, const SnnConfig& cfg) {
    const double target = 0.15 * static_cast<double>(cfg.d) * cfg.w_max;
    for (std::size_t j = 0; j < cfg.k; ++j) {
        double sum_p = 0.0, sum_m = 0.0;
        for (std::size_t i = 0; i < cfg.d; ++i) {
            sum_p += state.w_plus(i, j);
            sum_m += -state.w_minus(i, j);
        }
        if (sum_p > 1e-12) {
            double s = target / sum_p;
            for (std::size_t i = 0; i < cfg.d; ++i)
                state.w_plus(i, j) = std::min(state.w_plus(i, j) * s, cfg.w_max);
        }
        if (sum_m > 1e-12) {
            double s = target / sum_m;
            for (std::size_t i = 0; i < cfg.d; ++i)
                state.w_minus(i, j) = std::max(state.w_minus(i, j) * s, -cfg.w_max);
        }
    }
}

}  // namespace detail

/// Run one encoded sample through the layer. Membrane potentials, refractory
/// counters and traces reset per sample; weights and adaptive thresholds
/// persist. Winner is the neuron with the most spikes, ties broken by higher
/// final potential, then by lower index.
inline SampleActivity simulate_sample(SnnState& state, const SpikeTrain& train,
                                      const SnnConfig& cfg, bool learn, bool adapt,
                                      SnnOpCounters* ops = nullptr) {
    if (train.T != cfg.timesteps) throw std::invalid_argument("simulate_sample: T mismatch");
    if (train.d != cfg.d) throw std::invalid_argument("simulate_sample: dimension mismatch");

    std::fill(state.v.begin(), state.v.end(), cfg.v_rest);
    std::fill(state.refractory.begin(), state.refractory.end(), 0);
    std::fill(state.trace_pre_plus.begin(), state.trace_pre_plus.end(), 0.0);
    std::fill(state.trace_pre_minus.begin(), state.trace_pre_minus.end(), 0.0);
    std::fill(state.trace_post.begin(), state.trace_post.end(), 0.0);

    SampleActivity act;
    act.spike_counts.assign(cfg.k, 0);
    for (std::size_t t = 0; t < train.T; ++t) {
        auto spikes = step_timestep(state, train.plus_row(t), train.minus_row(t), cfg, learn,
                                    adapt, ops);
        for (std::size_t j = 0; j < cfg.k; ++j) act.spike_counts[j] += spikes[j];
    }
    act.final_v = state.v;

    act.winner = 0;
    for (std::size_t j = 1; j < cfg.k; ++j) {
        if (act.spike_counts[j] > act.spike_counts[act.winner] ||
            (act.spike_counts[j] == act.spike_counts[act.winner] &&
             act.final_v[j] > act.final_v[act.winner]))
            act.winner = j;
    }
    return act;
}

struct ClusterEpochResult {
    PseudoLabels labels;
    SnnState state;
    SpikeStats stats;        // measured over the training pass
    SnnOpCounters op_counts; // conditional adds actually executed while training
};

/// One full clustering epoch per the STDP procedure: a fresh network is
/// trained over all samples, then labels are assigned either inline during
/// training or by a second frozen pass (weights and thresholds fixed).
inline ClusterEpochResult cluster_epoch(const ProcessedFeatures& features, const SnnConfig& cfg,
                                        double gain, RngStream& rng) {
    if (features.dim() != cfg.d)
        throw std::invalid_argument("cluster_epoch: feature dimension mismatch");
    const std::size_t n = features.count();

    ClusterEpochResult out;
    out.state = init_network(cfg, rng);
    out.labels.labels.assign(n, 0);

    unsigned long long input_spikes = 0;
    unsigned long long exc_spikes = 0;
    for (std::size_t s = 0; s < n; ++s) {
        SpikeTrain train = encode(features.X.row(s), gain, cfg.timesteps, rng);
        SampleActivity act =
            simulate_sample(out.state, train, cfg, /*learn=*/true, /*adapt=*/true, &out.op_counts);
        if (cfg.label_pass == LabelPass::Inline)
            out.labels.labels[s] = static_cast<int>(act.winner);
        for (std::uint8_t b : train.plus) input_spikes += b;
        for (std::uint8_t b : train.minus) input_spikes += b;
        for (int c : act.spike_counts) exc_spikes += c;
        if (cfg.normalize_weights) detail::normalize_columns(out.state, cfg);
    }
    out.stats = spike_stats_from_counts(input_spikes, exc_spikes, n, cfg.timesteps, cfg.d, cfg.k);

    if (cfg.label_pass == LabelPass::Separate) {
        for (std::size_t s = 0; s < n; ++s) {
            SpikeTrain train = encode(features.X.row(s), gain, cfg.timesteps, rng);
            SampleActivity act =
                simulate_sample(out.state, train, cfg, /*learn=*/false, /*adapt=*/false);
            out.labels.labels[s] = static_cast<int>(act.winner);
        }
    }
    return out;
}

/// Mean l1 distance between each feature row and the combined signed weight
/// column of its assigned neuron.
inline double clustering_objective(const ProcessedFeatures& features, const SnnState& state,
                                   const PseudoLabels& labels) {
    const std::size_t n = features.count();
    const std::size_t d = features.dim();
    if (labels.labels.size() != n)
        throw std::invalid_argument("clustering_objective: label count mismatch");
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        auto x = features.X.row(s);
        auto j = static_cast<std::size_t>(labels.labels[s]);
        for (std::size_t i = 0; i < d; ++i)
            total += std::abs(x[i] - (state.w_plus(i, j) + state.w_minus(i, j)));
    }
    return n == 0 ? 0.0 : total / static_cast<double>(n);
}

}  // namespace deepstdp
