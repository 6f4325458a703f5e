#pragma once

// Translation between parsed config files and the typed run configuration,
// plus network checkpoints in the tensor container format.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "config.hpp"
#include "convnet.hpp"
#include "pipeline.hpp"
#include "tensor_file.hpp"

namespace deepstdp {

inline RunConfig to_run_config(const Config& cfg) {
    RunConfig rc;
    rc.method = cfg.get_choice("method") == "stdp" ? Method::Stdp : Method::Kmeans;
    rc.epochs = cfg.get_count("epochs");
    rc.reassign_freq = cfg.get_count("reassign_freq");
    rc.cluster_multiple = cfg.get_count("cluster_multiple");
    rc.d_pca = cfg.get_count("d_pca");
    rc.whiten = cfg.get_flag("whiten");
    rc.gain = cfg.get_real("gain");
    rc.seed = cfg.get_count("seed");

    rc.snn.k = cfg.get_count("snn.k");
    rc.snn.v_rest = cfg.get_real("snn.v_rest");
    rc.snn.v_reset = cfg.get_real("snn.v_reset");
    rc.snn.v_decay = cfg.get_real("snn.v_decay");
    rc.snn.v_thr = cfg.get_real("snn.v_thr");
    rc.snn.refractory = static_cast<int>(cfg.get_count("snn.refractory"));
    rc.snn.trace_peak = cfg.get_real("snn.trace_peak");
    rc.snn.trace_decay = cfg.get_real("snn.trace_decay");
    rc.snn.thr_step = cfg.get_real("snn.thr_step");
    rc.snn.thr_decay = cfg.get_real("snn.thr_decay");
    rc.snn.lr_pre = cfg.get_real("snn.lr_pre");
    rc.snn.lr_post = cfg.get_real("snn.lr_post");
    rc.snn.w_inh = cfg.get_real("snn.w_inh");
    rc.snn.timesteps = cfg.get_count("snn.timesteps");
    rc.snn.w_max = cfg.get_real("snn.w_max");
    rc.snn.label_pass =
        cfg.get_choice("snn.label_pass") == "inline" ? LabelPass::Inline : LabelPass::Separate;
    rc.snn.normalize_weights = cfg.get_flag("snn.normalize_weights");

    rc.kmeans.k = cfg.get_count("snn.k");  // standalone clustering shares the cluster count
    rc.kmeans.it = cfg.get_count("kmeans.it");
    rc.kmeans.tol = cfg.get_real("kmeans.tol");

    rc.train.lr = cfg.get_real("train.lr");
    rc.train.batch = cfg.get_count("train.batch");
    rc.train.epochs_per_reassign = cfg.get_count("train.epochs_per_reassign");
    rc.train.head_reinit = cfg.get_flag("train.head_reinit");

    rc.net_c1 = cfg.get_count("net.c1");
    rc.net_c2 = cfg.get_count("net.c2");
    rc.net_d_feat = cfg.get_count("net.d_feat");

    rc.probe_every = cfg.get_count("probe.every");
    rc.probe.epochs = cfg.get_count("probe.epochs");
    rc.probe.lr = cfg.get_real("probe.lr");
    rc.probe.batch = cfg.get_count("probe.batch");
    rc.probe.standardize = cfg.get_flag("probe.standardize");

    rc.balance_pseudo_classes = cfg.get_flag("pipeline.balance_classes");
    return rc;
}

/// Checkpoint layout: a 1-D f64 tensor whose first seven entries are the
/// shape (in_channels, height, width, c1, c2, d_feat, classes) followed by
/// the flat parameter vector.
inline void save_net(const std::filesystem::path& path, const NetParams& net) {
    const NetShape& s = net.shape;
    DenseTensor t({7 + net.values.size()});
    t(0) = static_cast<double>(s.in_channels);
    t(1) = static_cast<double>(s.height);
    t(2) = static_cast<double>(s.width);
    t(3) = static_cast<double>(s.c1);
    t(4) = static_cast<double>(s.c2);
    t(5) = static_cast<double>(s.d_feat);
    t(6) = static_cast<double>(s.classes);
    for (std::size_t i = 0; i < net.values.size(); ++i) t(7 + i) = net.values[i];
    write_tensor(path, t, Dtype::f64);
}

inline NetParams load_net(const std::filesystem::path& path) {
    DenseTensor t = read_tensor(path);
    if (t.ndim() != 1 || t.size() < 7) throw std::runtime_error("net checkpoint: bad layout");
    NetParams net;
    net.shape.in_channels = static_cast<std::size_t>(t(0));
    net.shape.height = static_cast<std::size_t>(t(1));
    net.shape.width = static_cast<std::size_t>(t(2));
    net.shape.c1 = static_cast<std::size_t>(t(3));
    net.shape.c2 = static_cast<std::size_t>(t(4));
    net.shape.d_feat = static_cast<std::size_t>(t(5));
    net.shape.classes = static_cast<std::size_t>(t(6));
    net.shape.validate();
    if (t.size() != 7 + net.shape.param_count())
        throw std::runtime_error("net checkpoint: parameter count mismatch");
    net.values.assign(t.data().begin() + 7, t.data().end());
    return net;
}

}  // namespace deepstdp
