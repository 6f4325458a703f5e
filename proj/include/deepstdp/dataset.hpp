#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

#include "tensor.hpp"

namespace deepstdp {

/// Labeled image dataset. Labels are diagnostics only (probe, purity); the
/// training path never sees them.
struct Dataset {
    DenseTensor images;       // N x C x H x W
    std::vector<int> labels;  // N ground-truth class ids
    std::size_t class_count = 0;

    std::size_t count() const { return images.ndim() > 0 ? images.dim(0) : 0; }

    void validate() const {
        if (images.ndim() != 4) throw std::invalid_argument("Dataset: images must be N x C x H x W");
        if (labels.size() != images.dim(0))
            throw std::invalid_argument("Dataset: label count mismatch");
        for (int l : labels)
            if (l < 0 || static_cast<std::size_t>(l) >= class_count)
                throw std::invalid_argument("Dataset: label out of range");
    }
};

}  // namespace deepstdp
