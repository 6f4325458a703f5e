#pragma once

// Command-line entry points. Exit codes: 0 success, 1 usage error, 2
// data/config error. Every failure prints a single-line diagnostic on stderr.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "config.hpp"
#include "cost.hpp"
#include "dataset.hpp"
#include "encoding.hpp"
#include "idx.hpp"
#include "kmeans.hpp"
#include "log_io.hpp"
#include "metrics.hpp"
#include "pipeline.hpp"
#include "run_config_io.hpp"
#include "snn.hpp"
#include "synth.hpp"
#include "tensor_file.hpp"

namespace deepstdp {

namespace cli_detail {

inline std::string one_line(std::string msg) {
    std::replace(msg.begin(), msg.end(), '\n', ';');
    return msg;
}

inline Config load_config(const std::string& path, const std::optional<std::uint64_t>& seed) {
    Config cfg = path.empty() ? Config(&run_config_registry())
                              : Config::parse_file(path, run_config_registry());
    if (seed) cfg.set("seed", std::to_string(*seed));
    return cfg;
}

inline nlohmann::ordered_json energy_json(const EnergyReport& r) {
    nlohmann::ordered_json j;
    j["adds"] = r.adds;
    j["mults"] = r.mults;
    j["energy_pj"] = r.energy_pj();
    j["energy_mj"] = r.energy_mj();
    return j;
}

}  // namespace cli_detail

inline int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"STDP-driven deep clustering toolkit"};
    app.require_subcommand(1);

    // ---- gen-synth ----
    auto* gen = app.add_subcommand("gen-synth", "generate a synthetic dataset");
    std::string gen_kind = "blobs";
    SynthSpec spec;
    std::string gen_out;
    gen->add_option("--kind", gen_kind, "blobs | images")
        ->check(CLI::IsMember({"blobs", "images"}));
    gen->add_option("--classes", spec.classes);
    gen->add_option("--per-class", spec.per_class);
    gen->add_option("--d", spec.d, "feature dimension (blobs)");
    gen->add_option("--height", spec.height);
    gen->add_option("--width", spec.width);
    gen->add_option("--sigma", spec.sigma);
    gen->add_option("--seed", spec.seed);
    gen->add_option("--out", gen_out, "output directory")->required();

    // ---- cluster ----
    auto* cluster = app.add_subcommand("cluster", "cluster a feature matrix into pseudo-labels");
    std::string cl_method, cl_in, cl_config, cl_out;
    std::optional<std::uint64_t> cl_seed;
    cluster->add_option("--method", cl_method)->required()->check(
        CLI::IsMember({"stdp", "kmeans"}));
    cluster->add_option("--in", cl_in, "features tensor file")->required();
    cluster->add_option("--config", cl_config);
    cluster->add_option("--out", cl_out, "labels tensor file")->required();
    cluster->add_option("--seed", cl_seed, "override the config seed");

    // ---- train ----
    auto* train = app.add_subcommand("train", "run the full deep-clustering pipeline");
    std::string tr_config, tr_data, tr_log, tr_save_net;
    std::optional<std::uint64_t> tr_seed;
    bool tr_timing = false;
    train->add_option("--config", tr_config);
    train->add_option("--data", tr_data, "dataset directory")->required();
    train->add_option("--log", tr_log, "JSON-lines output")->required();
    train->add_option("--seed", tr_seed, "override the config seed");
    train->add_option("--save-net", tr_save_net, "write the final network checkpoint");
    train->add_flag("--timing", tr_timing, "include wall_ms in the log");

    // ---- probe ----
    auto* probe = app.add_subcommand("probe", "linear probe on frozen features");
    std::string pr_features, pr_labels, pr_config;
    std::optional<std::uint64_t> pr_seed;
    probe->add_option("--features", pr_features)->required();
    probe->add_option("--labels", pr_labels)->required();
    probe->add_option("--config", pr_config);
    probe->add_option("--seed", pr_seed);

    // ---- metrics ----
    auto* metrics = app.add_subcommand("metrics", "evaluation metrics");
    metrics->require_subcommand(1);
    auto* m_nmi = metrics->add_subcommand("nmi", "normalized mutual information");
    std::string nmi_a, nmi_b;
    m_nmi->add_option("--a", nmi_a)->required();
    m_nmi->add_option("--b", nmi_b)->required();
    auto* m_pur = metrics->add_subcommand("purity", "cluster purity vs ground truth");
    std::string pur_y, pur_truth;
    m_pur->add_option("--y", pur_y)->required();
    m_pur->add_option("--truth", pur_truth)->required();
    auto* m_fim = metrics->add_subcommand("fim", "Fisher information trace");
    std::string fim_data, fim_labels, fim_net;
    bool fim_sampled = false, fim_no_head = false, fim_head_only = false;
    std::optional<std::uint64_t> fim_seed;
    m_fim->add_option("--data", fim_data, "dataset directory")->required();
    m_fim->add_option("--labels", fim_labels, "labels tensor file")->required();
    m_fim->add_option("--net", fim_net, "network checkpoint")->required();
    m_fim->add_flag("--sampled", fim_sampled, "draw labels from the model instead");
    m_fim->add_flag("--features-only", fim_no_head, "exclude the head from the trace");
    m_fim->add_flag("--head-only", fim_head_only, "restrict the trace to the head");
    m_fim->add_option("--seed", fim_seed);

    // ---- cost ----
    auto* cost = app.add_subcommand("cost", "closed-form energy model");
    cost->require_subcommand(1);
    auto* c_km = cost->add_subcommand("kmeans", "k-means clustering cost");
    std::uint64_t ck_k = 0, ck_d = 0, ck_it = 0, ck_n = 0;
    c_km->add_option("--k", ck_k)->required();
    c_km->add_option("--d", ck_d)->required();
    c_km->add_option("--it", ck_it)->required();
    c_km->add_option("--n", ck_n)->required();
    auto* c_st = cost->add_subcommand("stdp", "STDP clustering cost");
    double cs_p_input = 0.0, cs_p_exc = 0.0;
    std::uint64_t cs_t = 0, cs_n = 0;
    std::optional<std::uint64_t> cs_d, cs_k, cs_w_exc, cs_w_inh;
    c_st->add_option("--p-input", cs_p_input)->required();
    c_st->add_option("--p-exc", cs_p_exc)->required();
    c_st->add_option("--t", cs_t)->required();
    c_st->add_option("--n", cs_n)->required();
    c_st->add_option("--d", cs_d, "input dimension (with --k)");
    c_st->add_option("--k", cs_k, "neuron count (with --d)");
    c_st->add_option("--w-exc", cs_w_exc, "explicit excitatory synapse count");
    c_st->add_option("--w-inh", cs_w_inh, "explicit inhibitory connection count");

    // ---- export-weights ----
    auto* exportw = app.add_subcommand("export-weights",
                                       "train the STDP layer once and export its weight map");
    std::string ex_in, ex_config, ex_out;
    std::optional<std::uint64_t> ex_seed;
    exportw->add_option("--in", ex_in, "features tensor file")->required();
    exportw->add_option("--config", ex_config);
    exportw->add_option("--out", ex_out, "weight tensor file (d x k)")->required();
    exportw->add_option("--seed", ex_seed);

    // ---- import-idx ----
    auto* import = app.add_subcommand("import-idx", "convert IDX image/label files");
    std::string idx_images, idx_labels, idx_out;
    import->add_option("--images", idx_images)->required();
    import->add_option("--labels", idx_labels)->required();
    import->add_option("--out", idx_out, "output dataset directory")->required();

    std::vector<const char*> argv;
    argv.push_back("deepstdp");
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: usage: " << cli_detail::one_line(e.what()) << "\n";
        return 1;
    }

    try {
        if (gen->parsed()) {
            spec.kind = gen_kind == "blobs" ? SynthKind::Blobs : SynthKind::Images;
            write_synth_dataset(gen_out, spec);
            nlohmann::ordered_json j;
            j["out"] = gen_out;
            j["kind"] = gen_kind;
            j["samples"] = spec.classes * spec.per_class;
            std::cout << j.dump() << "\n";
        } else if (cluster->parsed()) {
            Config cfg = cli_detail::load_config(cl_config, cl_seed);
            cfg.set("method", cl_method);
            RunConfig rc = to_run_config(cfg);
            DenseTensor raw = read_tensor(cl_in);
            if (raw.ndim() != 2) throw std::runtime_error("cluster: features must be 2-D");
            ProcessedFeatures features = preprocess(raw, rc.d_pca, rc.whiten);
            RngStream rng = RngStream(rc.seed).substream("cluster");
            std::size_t k = rc.method == Method::Stdp ? rc.snn.k : rc.kmeans.k;
            ClusterOutcome outcome = cluster_features(features, rc, k, rng);
            write_labels(cl_out, outcome.labels.labels);
            nlohmann::ordered_json j;
            j["method"] = cl_method;
            j["n"] = features.count();
            j["k"] = k;
            j["objective"] = outcome.objective;
            j["energy_mj"] = outcome.energy.energy_mj();
            if (outcome.stats) {
                j["p_input"] = outcome.stats->p_input;
                j["p_exc"] = outcome.stats->p_exc;
            }
            std::cout << j.dump() << "\n";
        } else if (train->parsed()) {
            Config cfg = cli_detail::load_config(tr_config, tr_seed);
            RunConfig rc = to_run_config(cfg);
            Dataset ds = load_dataset(tr_data);
            RunLogWriter writer(tr_log, tr_timing);
            NetParams net;
            run_deep_cluster(rc, ds, &net,
                             [&](const EpochRecord& rec) { writer.write(rec); });
            if (!tr_save_net.empty()) save_net(tr_save_net, net);
            nlohmann::ordered_json j;
            j["log"] = tr_log;
            j["epochs"] = rc.epochs;
            std::cout << j.dump() << "\n";
        } else if (probe->parsed()) {
            Config cfg = cli_detail::load_config(pr_config, pr_seed);
            DenseTensor features = read_tensor(pr_features);
            std::vector<int> truth = read_labels(pr_labels);
            ProbeConfig pc;
            pc.epochs = cfg.get_count("probe.epochs");
            pc.lr = cfg.get_real("probe.lr");
            pc.batch = cfg.get_count("probe.batch");
            pc.standardize = cfg.get_flag("probe.standardize");
            pc.seed = RngStream(cfg.get_count("seed")).substream("probe").seed();
            nlohmann::ordered_json j;
            j["accuracy"] = linear_probe(features, truth, pc);
            std::cout << j.dump() << "\n";
        } else if (m_nmi->parsed()) {
            std::vector<int> a = read_labels(nmi_a), b = read_labels(nmi_b);
            nlohmann::ordered_json j;
            j["nmi"] = nmi(a, b);
            std::cout << j.dump() << "\n";
        } else if (m_pur->parsed()) {
            std::vector<int> y = read_labels(pur_y), truth = read_labels(pur_truth);
            nlohmann::ordered_json j;
            j["purity"] = purity(y, truth);
            std::cout << j.dump() << "\n";
        } else if (m_fim->parsed()) {
            Dataset ds = load_dataset(fim_data);
            std::vector<int> labels = read_labels(fim_labels);
            NetParams net = load_net(fim_net);
            FimOptions opts;
            if (fim_no_head && fim_head_only)
                throw std::runtime_error("fim: --features-only and --head-only conflict");
            if (fim_no_head) opts.mask.head = false;
            if (fim_head_only) opts.mask = LayerMask{false, false, false, true};
            RngStream rng(fim_seed.value_or(42));
            if (fim_sampled) {
                opts.sample_labels = true;
                opts.rng = &rng;
            }
            nlohmann::ordered_json j;
            j["fim_trace"] = fim_trace(net, ds.images, labels, opts);
            std::cout << j.dump() << "\n";
        } else if (c_km->parsed()) {
            std::cout << cli_detail::energy_json(kmeans_energy(ck_k, ck_d, ck_it, ck_n)).dump()
                      << "\n";
        } else if (c_st->parsed()) {
            SpikeStats stats;
            stats.p_input = cs_p_input;
            stats.p_exc = cs_p_exc;
            if (cs_w_exc && cs_w_inh) {
                stats.w_exc_count = *cs_w_exc;
                stats.w_inh_count = *cs_w_inh;
            } else if (cs_d && cs_k) {
                stats.w_exc_count = *cs_d * *cs_k;
                stats.w_inh_count = *cs_k * (*cs_k - 1);
            } else {
                throw std::runtime_error("cost stdp: give --d and --k, or --w-exc and --w-inh");
            }
            std::cout << cli_detail::energy_json(stdp_energy(stats, cs_t, cs_n)).dump() << "\n";
        } else if (exportw->parsed()) {
            Config cfg = cli_detail::load_config(ex_config, ex_seed);
            RunConfig rc = to_run_config(cfg);
            DenseTensor raw = read_tensor(ex_in);
            if (raw.ndim() != 2) throw std::runtime_error("export-weights: features must be 2-D");
            ProcessedFeatures features = preprocess(raw, rc.d_pca, rc.whiten);
            SnnConfig snn = rc.snn;
            snn.d = features.dim();
            RngStream rng = RngStream(rc.seed).substream("cluster");
            ClusterEpochResult res = cluster_epoch(features, snn, rc.gain, rng);
            DenseTensor combined = DenseTensor::matrix(snn.d, snn.k);
            for (std::size_t i = 0; i < snn.d; ++i)
                for (std::size_t j = 0; j < snn.k; ++j)
                    combined(i, j) = res.state.w_plus(i, j) + res.state.w_minus(i, j);
            write_tensor(ex_out, combined, Dtype::f64);
            nlohmann::ordered_json j;
            j["out"] = ex_out;
            j["d"] = snn.d;
            j["k"] = snn.k;
            std::cout << j.dump() << "\n";
        } else if (import->parsed()) {
            DenseTensor images = read_idx_images(idx_images);
            std::vector<int> labels = read_idx_labels(idx_labels);
            if (labels.size() != images.dim(0))
                throw std::runtime_error("import-idx: image/label count mismatch");
            int cmax = 0;
            for (int l : labels) cmax = std::max(cmax, l);
            std::filesystem::create_directories(idx_out);
            write_tensor(std::filesystem::path(idx_out) / "images.dstp", images, Dtype::f64);
            write_labels(std::filesystem::path(idx_out) / "labels.dstp", labels);
            Config manifest(&manifest_registry());
            manifest.set("kind", "images");
            manifest.set("classes", std::to_string(cmax + 1));
            manifest.set("per_class", "0");
            manifest.set("height", std::to_string(images.dim(2)));
            manifest.set("width", std::to_string(images.dim(3)));
            manifest.set("sigma", "0");
            manifest.set("seed", "0");
            detail::atomic_write(std::filesystem::path(idx_out) / "manifest.txt",
                                 manifest.serialize());
            nlohmann::ordered_json j;
            j["out"] = idx_out;
            j["samples"] = images.dim(0);
            std::cout << j.dump() << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << cli_detail::one_line(e.what()) << "\n";
        return 2;
    }
    return 0;
}

}  // namespace deepstdp
