#pragma once

// Synthetic dataset generation: Gaussian blob features for clustering runs
// and class-distinct procedural textures (oriented gratings plus noise) for
// the end-to-end image pipeline. Datasets are written as tensor files plus a
// plain-text manifest.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"
#include "dataset.hpp"
#include "rng.hpp"
#include "tensor.hpp"
#include "tensor_file.hpp"

namespace deepstdp {

enum class SynthKind { Blobs, Images };

struct SynthSpec {
    SynthKind kind = SynthKind::Blobs;
    std::size_t classes = 3;
    std::size_t per_class = 100;
    std::size_t d = 16;        // blob feature dimension
    std::size_t height = 16;   // image extents
    std::size_t width = 16;
    double sigma = 0.05;       // per-coordinate Gaussian noise
    std::uint64_t seed = 7;

    void validate() const {
        if (classes < 2) throw std::invalid_argument("gen_synth: needs at least 2 classes");
        if (per_class < 1) throw std::invalid_argument("gen_synth: per_class must be >= 1");
        if (sigma < 0) throw std::invalid_argument("gen_synth: sigma must be >= 0");
        if (kind == SynthKind::Blobs && d < 1)
            throw std::invalid_argument("gen_synth: d must be >= 1");
        if (kind == SynthKind::Images && (height < 1 || width < 1))
            throw std::invalid_argument("gen_synth: image extents must be >= 1");
    }
};

struct SynthData {
    DenseTensor features;     // blobs: N x d
    DenseTensor images;       // images: N x 1 x H x W
    std::vector<int> labels;  // N
    SynthKind kind = SynthKind::Blobs;
    std::size_t classes = 0;
};

namespace detail {

/// Well-separated unit-norm class centers; a center is redrawn while it sits
/// closer than 1.0 to any earlier one.
inline std::vector<std::vector<double>> blob_centers(std::size_t classes, std::size_t d,
                                                     RngStream& rng) {
    std::vector<std::vector<double>> centers;
    while (centers.size() < classes) {
        std::vector<double> c(d);
        for (double& x : c) x = rng.normal();
        double n = 0.0;
        for (double x : c) n += x * x;
        n = std::sqrt(n);
        if (n < 1e-9) continue;
        for (double& x : c) x /= n;
        bool ok = true;
        for (const auto& prev : centers) {
            double dist = 0.0;
            for (std::size_t i = 0; i < d; ++i) dist += (c[i] - prev[i]) * (c[i] - prev[i]);
            if (std::sqrt(dist) < 1.0) {
                ok = false;
                break;
            }
        }
        if (ok) centers.push_back(std::move(c));
    }
    return centers;
}

}  // namespace detail

inline SynthData gen_synth(const SynthSpec& spec) {
    spec.validate();
    RngStream root(spec.seed);
    const std::size_t n = spec.classes * spec.per_class;

    SynthData out;
    out.kind = spec.kind;
    out.classes = spec.classes;
    out.labels.resize(n);

    if (spec.kind == SynthKind::Blobs) {
        RngStream centers_rng = root.substream("centers");
        auto centers = detail::blob_centers(spec.classes, spec.d, centers_rng);
        RngStream noise = root.substream("noise");
        out.features = DenseTensor::matrix(n, spec.d);
        for (std::size_t c = 0; c < spec.classes; ++c) {
            for (std::size_t s = 0; s < spec.per_class; ++s) {
                std::size_t i = c * spec.per_class + s;
                out.labels[i] = static_cast<int>(c);
                auto row = out.features.row(i);
                for (std::size_t j = 0; j < spec.d; ++j)
                    row[j] = centers[c][j] + spec.sigma * noise.normal();
            }
        }
    } else {
        // one fixed grating per class; samples vary only by additive noise
        RngStream phase_rng = root.substream("phases");
        std::vector<double> phases(spec.classes);
        for (double& p : phases) p = phase_rng.uniform(0.0, 2.0 * 3.141592653589793);
        RngStream noise = root.substream("noise");
        const double cycles = 2.0;
        const double span = static_cast<double>(std::max(spec.height, spec.width));
        out.images = DenseTensor({n, 1, spec.height, spec.width});
        for (std::size_t c = 0; c < spec.classes; ++c) {
            double theta = 3.141592653589793 * static_cast<double>(c) /
                           static_cast<double>(spec.classes);
            double cs = std::cos(theta), sn = std::sin(theta);
            for (std::size_t s = 0; s < spec.per_class; ++s) {
                std::size_t i = c * spec.per_class + s;
                out.labels[i] = static_cast<int>(c);
                for (std::size_t y = 0; y < spec.height; ++y) {
                    for (std::size_t x = 0; x < spec.width; ++x) {
                        double phase = 2.0 * 3.141592653589793 * cycles *
                                           (cs * static_cast<double>(x) +
                                            sn * static_cast<double>(y)) /
                                           span +
                                       phases[c];
                        out.images(i, 0, y, x) = std::cos(phase) + spec.sigma * noise.normal();
                    }
                }
            }
        }
    }

    // one global shuffle so class blocks do not bias order-sensitive consumers
    RngStream shuffle_rng = root.substream("shuffle");
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    shuffle_rng.shuffle(order);

    std::vector<int> labels(n);
    if (spec.kind == SynthKind::Blobs) {
        DenseTensor shuffled = DenseTensor::matrix(n, spec.d);
        for (std::size_t i = 0; i < n; ++i) {
            auto src = out.features.row(order[i]);
            std::copy(src.begin(), src.end(), shuffled.row(i).begin());
            labels[i] = out.labels[order[i]];
        }
        out.features = std::move(shuffled);
    } else {
        DenseTensor shuffled({n, 1, spec.height, spec.width});
        for (std::size_t i = 0; i < n; ++i) {
            auto src = out.images.slice(order[i]);
            auto dst = shuffled.slice(i);
            std::copy(src.begin(), src.end(), dst.begin());
            labels[i] = out.labels[order[i]];
        }
        out.images = std::move(shuffled);
    }
    out.labels = std::move(labels);
    return out;
}

/// Write the generated dataset into `dir`: data tensor, labels tensor and a
/// manifest.txt in the config grammar.
inline void write_synth_dataset(const std::filesystem::path& dir, const SynthSpec& spec) {
    SynthData data = gen_synth(spec);
    std::filesystem::create_directories(dir);

    Config manifest(&manifest_registry());
    manifest.set("classes", std::to_string(spec.classes));
    manifest.set("per_class", std::to_string(spec.per_class));
    manifest.set("sigma", [&] {
        std::ostringstream ss;
        ss << spec.sigma;
        return ss.str();
    }());
    manifest.set("seed", std::to_string(spec.seed));
    manifest.set("labels", "labels.dstp");

    if (spec.kind == SynthKind::Blobs) {
        manifest.set("kind", "blobs");
        manifest.set("d", std::to_string(spec.d));
        write_tensor(dir / "features.dstp", data.features, Dtype::f64);
    } else {
        manifest.set("kind", "images");
        manifest.set("height", std::to_string(spec.height));
        manifest.set("width", std::to_string(spec.width));
        write_tensor(dir / "images.dstp", data.images, Dtype::f64);
    }
    write_labels(dir / "labels.dstp", data.labels);

    detail::atomic_write(dir / "manifest.txt", manifest.serialize());
}

inline Config read_manifest(const std::filesystem::path& dir) {
    return Config::parse_file(dir / "manifest.txt", manifest_registry());
}

/// Load an image dataset directory for the training pipeline.
inline Dataset load_dataset(const std::filesystem::path& dir) {
    Config manifest = read_manifest(dir);
    if (manifest.get_choice("kind") != "images")
        throw std::runtime_error("dataset at " + dir.string() +
                                 " has no images; the training pipeline needs kind = images");
    Dataset ds;
    ds.images = read_tensor(dir / manifest.get_choice("images"));
    ds.labels = read_labels(dir / manifest.get_choice("labels"));
    ds.class_count = manifest.get_count("classes");
    ds.validate();
    return ds;
}

/// Load a feature-matrix dataset (blobs) with its labels.
inline std::pair<DenseTensor, std::vector<int>> load_features(const std::filesystem::path& dir) {
    Config manifest = read_manifest(dir);
    if (manifest.get_choice("kind") != "blobs")
        throw std::runtime_error("dataset at " + dir.string() + " is not a feature dataset");
    return {read_tensor(dir / manifest.get_choice("features")),
            read_labels(dir / manifest.get_choice("labels"))};
}

}  // namespace deepstdp
