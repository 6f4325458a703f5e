#pragma once

// Deep clustering orchestration: every epoch extracts features with the
// current (headless) network, preprocesses them, clusters them into
// pseudo-labels with either the STDP layer or k-means, reinitializes the
// classifier head, and trains the full network on the pseudo-labels. Metrics
// (consecutive-assignment NMI, Fisher trace, clustering objective, energy,
// optional linear probe) are logged per epoch.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "convnet.hpp"
#include "cost.hpp"
#include "dataset.hpp"
#include "encoding.hpp"
#include "kmeans.hpp"
#include "metrics.hpp"
#include "rng.hpp"
#include "snn.hpp"
#include "tensor.hpp"

namespace deepstdp {

enum class Method { Stdp, Kmeans };

struct TrainConfig {
    double lr = 1e-2;
    std::size_t epochs_per_reassign = 1;  // SGD passes between reassignments
    std::size_t batch = 32;
    bool head_reinit = true;

    void validate() const {
        if (!(lr > 0)) throw std::invalid_argument("TrainConfig: lr must be > 0");
        if (batch < 1) throw std::invalid_argument("TrainConfig: batch must be >= 1");
    }
};

struct RunConfig {
    Method method = Method::Stdp;
    std::size_t epochs = 20;
    std::size_t reassign_freq = 0;  // clustering passes per epoch; 0 = method default
    std::size_t cluster_multiple = 10;  // clusters per true class
    SnnConfig snn;
    KMeansParams kmeans;
    TrainConfig train;
    double gain = 1.0;
    std::size_t d_pca = 16;
    bool whiten = false;
    std::uint64_t seed = 42;
    std::size_t probe_every = 5;  // 0 disables the probe
    ProbeConfig probe;
    std::size_t net_c1 = 8;
    std::size_t net_c2 = 16;
    std::size_t net_d_feat = 64;
    bool balance_pseudo_classes = false;

    std::size_t effective_reassign_freq() const {
        if (reassign_freq > 0) return reassign_freq;
        return method == Method::Stdp ? 1 : 2;
    }
};

struct EpochRecord {
    std::size_t epoch = 0;                 // 1-based
    std::optional<double> nmi_prev;        // absent on the first epoch
    double fim_trace = 0.0;
    double objective = 0.0;
    std::optional<double> probe_acc;
    double energy_mj = 0.0;
    std::optional<double> wall_ms;         // excluded from logs unless timing is requested
    std::optional<double> p_input;
    std::optional<double> p_exc;
};

struct RunLog {
    std::vector<EpochRecord> epochs;
};

struct ClusterOutcome {
    PseudoLabels labels;
    double objective = 0.0;
    EnergyReport energy;
    std::optional<SpikeStats> stats;            // stdp only
    std::optional<SnnOpCounters> snn_ops;       // stdp only
};

/// Cluster one batch of processed features into k pseudo-classes, repeating
/// `reassign_freq` times with the last assignment winning. STDP starts from a
/// fresh network on every repetition.
inline ClusterOutcome cluster_features(const ProcessedFeatures& features, const RunConfig& cfg,
                                       std::size_t k, RngStream& rng) {
    ClusterOutcome out;
    const std::size_t reps = cfg.effective_reassign_freq();
    unsigned long long adds = 0, mults = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        if (cfg.method == Method::Stdp) {
            SnnConfig snn = cfg.snn;
            snn.k = k;
            snn.d = features.dim();
            ClusterEpochResult res = cluster_epoch(features, snn, cfg.gain, rng);
            EnergyReport e = stdp_energy(res.stats, snn.timesteps, features.count());
            adds += e.adds;
            mults += e.mults;
            if (rep + 1 == reps) {
                out.objective = clustering_objective(features, res.state, res.labels);
                out.stats = res.stats;
                out.snn_ops = res.op_counts;
                out.labels = std::move(res.labels);
            }
        } else {
            KMeansParams params = cfg.kmeans;
            params.k = k;
            KMeansResult res = kmeans_fit(features.X, params, rng);
            OpCount total = res.op_count;
            total += res.reseed_ops;
            EnergyReport e = price_ops(total);
            adds += e.adds;
            mults += e.mults;
            if (rep + 1 == reps) {
                out.objective = res.objective;
                out.labels.labels = std::move(res.assignments);
            }
        }
    }
    out.energy = EnergyReport{adds, mults};
    return out;
}

/// Pseudo-label dispatch used by the `cluster` command; label space size is
/// cfg.snn.k / cfg.kmeans.k depending on the method.
inline PseudoLabels generate_pseudo_labels(const ProcessedFeatures& features,
                                           const RunConfig& cfg, RngStream& rng) {
    std::size_t k = cfg.method == Method::Stdp ? cfg.snn.k : cfg.kmeans.k;
    return cluster_features(features, cfg, k, rng).labels;
}

namespace detail {

inline DenseTensor extract_features(const NetParams& net, const DenseTensor& images) {
    const std::size_t n = images.dim(0);
    DenseTensor out = DenseTensor::matrix(n, net.shape.d_feat);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> f = forward_features(net, images.slice(i));
        std::copy(f.begin(), f.end(), out.row(i).begin());
    }
    return out;
}

inline DenseTensor gather_batch(const DenseTensor& images, std::span<const std::size_t> idx) {
    std::vector<std::size_t> dims = images.dims();
    dims[0] = idx.size();
    DenseTensor out(dims);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        auto src = images.slice(idx[i]);
        auto dst = out.slice(i);
        std::copy(src.begin(), src.end(), dst.begin());
    }
    return out;
}

}  // namespace detail

/// Full deep-clustering run. Ground-truth labels are consumed only by the
/// linear probe diagnostic; clustering and network training never see them.
/// `on_epoch`, when set, fires as soon as each epoch record is complete.
inline RunLog run_deep_cluster(const RunConfig& cfg, const Dataset& dataset,
                               NetParams* final_net = nullptr,
                               const std::function<void(const EpochRecord&)>& on_epoch = {}) {
    if (cfg.epochs < 1) throw std::invalid_argument("run_deep_cluster: epochs must be >= 1");
    if (cfg.cluster_multiple < 1)
        throw std::invalid_argument("run_deep_cluster: cluster_multiple must be >= 1");
    dataset.validate();
    cfg.train.validate();
    const std::size_t n = dataset.count();
    if (n == 0) throw std::invalid_argument("run_deep_cluster: empty dataset");

    const std::size_t k = cfg.cluster_multiple * dataset.class_count;
    NetShape shape;
    shape.in_channels = dataset.images.dim(1);
    shape.height = dataset.images.dim(2);
    shape.width = dataset.images.dim(3);
    shape.c1 = cfg.net_c1;
    shape.c2 = cfg.net_c2;
    shape.d_feat = cfg.net_d_feat;
    shape.classes = k;

    RngStream root(cfg.seed);
    RngStream init_rng = root.substream("net-init");
    NetParams net = NetParams::init(shape, init_rng);

    RunLog log;
    std::vector<int> prev_labels;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto t0 = std::chrono::steady_clock::now();
        EpochRecord rec;
        rec.epoch = epoch;

        // (1) features from the current extractor, head unused
        DenseTensor raw = detail::extract_features(net, dataset.images);

        // (2) PCA + l2 preprocessing
        ProcessedFeatures features = preprocess(raw, cfg.d_pca, cfg.whiten);

        // (3) pseudo-labels
        RngStream cluster_rng = root.substream("cluster", epoch);
        ClusterOutcome clustered = cluster_features(features, cfg, k, cluster_rng);
        rec.objective = clustered.objective;
        rec.energy_mj = clustered.energy.energy_mj();
        if (clustered.stats) {
            rec.p_input = clustered.stats->p_input;
            rec.p_exc = clustered.stats->p_exc;
        }

        // (4) fresh classifier head
        if (cfg.train.head_reinit) {
            RngStream head_rng = root.substream("head", epoch);
            reinit_head(net, head_rng);
        }

        // (5) supervised-style training on the pseudo-labels
        RngStream order_rng = root.substream("order", epoch);
        for (std::size_t pass = 0; pass < cfg.train.epochs_per_reassign; ++pass) {
            std::vector<std::size_t> order(n);
            for (std::size_t i = 0; i < n; ++i) order[i] = i;
            if (cfg.balance_pseudo_classes) {
                // uniform-over-pseudo-class resampling (optional, off by default)
                std::vector<std::vector<std::size_t>> byclass(k);
                for (std::size_t i = 0; i < n; ++i)
                    byclass[static_cast<std::size_t>(clustered.labels.labels[i])].push_back(i);
                std::vector<std::size_t> nonempty;
                for (std::size_t c = 0; c < k; ++c)
                    if (!byclass[c].empty()) nonempty.push_back(c);
                for (std::size_t i = 0; i < n; ++i) {
                    const auto& members =
                        byclass[nonempty[static_cast<std::size_t>(order_rng.below(nonempty.size()))]];
                    order[i] = members[static_cast<std::size_t>(order_rng.below(members.size()))];
                }
            } else {
                order_rng.shuffle(order);
            }
            for (std::size_t start = 0; start < n; start += cfg.train.batch) {
                std::size_t stop = std::min(start + cfg.train.batch, n);
                std::span<const std::size_t> idx(order.data() + start, stop - start);
                DenseTensor batch = detail::gather_batch(dataset.images, idx);
                std::vector<int> batch_labels(idx.size());
                for (std::size_t i = 0; i < idx.size(); ++i)
                    batch_labels[i] = clustered.labels.labels[idx[i]];
                BatchGrads bg = loss_and_grads(net, batch, batch_labels);
                sgd_step(net, bg.grads, cfg.train.lr);
            }
        }

        // (6) per-epoch diagnostics
        rec.fim_trace = fim_trace(net, dataset.images, clustered.labels.labels);
        if (!prev_labels.empty()) rec.nmi_prev = nmi(clustered.labels.labels, prev_labels);
        if (cfg.probe_every > 0 && (epoch % cfg.probe_every == 0 || epoch == cfg.epochs)) {
            DenseTensor probe_features = detail::extract_features(net, dataset.images);
            ProbeConfig pc = cfg.probe;
            pc.seed = root.substream("probe", epoch).seed();
            rec.probe_acc = linear_probe(probe_features, dataset.labels, pc);
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(
                          std::chrono::steady_clock::now() - t0)
                          .count();

        prev_labels = clustered.labels.labels;
        log.epochs.push_back(rec);
        if (on_epoch) on_epoch(rec);
    }

    if (final_net) *final_net = std::move(net);
    return log;
}

}  // namespace deepstdp
