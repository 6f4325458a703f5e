#pragma once

// Optional ingestion path for IDX-format image/label files (the MNIST family
// layout): big-endian magic, dimension sizes, then raw payload.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensor.hpp"
#include "tensor_file.hpp"

namespace deepstdp {

namespace detail {

inline std::uint32_t get_u32_be(const std::string& buf, std::size_t pos) {
    if (pos + 4 > buf.size()) throw std::runtime_error("idx file: truncated header");
    return (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos])) << 24) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 1])) << 16) |
           (static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 2])) << 8) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + 3]));
}

}  // namespace detail

/// Read an IDX u8 image file as N x 1 x H x W, values scaled to [0, 1].
inline DenseTensor read_idx_images(const std::filesystem::path& path) {
    std::string buf = detail::read_all(path);
    if (detail::get_u32_be(buf, 0) != 0x00000803)
        throw std::runtime_error("idx file: bad image magic in " + path.string());
    std::size_t n = detail::get_u32_be(buf, 4);
    std::size_t h = detail::get_u32_be(buf, 8);
    std::size_t w = detail::get_u32_be(buf, 12);
    if (buf.size() != 16 + n * h * w)
        throw std::runtime_error("idx file: payload length mismatch in " + path.string());
    DenseTensor t({n, 1, h, w});
    for (std::size_t i = 0; i < n * h * w; ++i)
        t(i) = static_cast<unsigned char>(buf[16 + i]) / 255.0;
    return t;
}

/// Read an IDX u8 label file.
inline std::vector<int> read_idx_labels(const std::filesystem::path& path) {
    std::string buf = detail::read_all(path);
    if (detail::get_u32_be(buf, 0) != 0x00000801)
        throw std::runtime_error("idx file: bad label magic in " + path.string());
    std::size_t n = detail::get_u32_be(buf, 4);
    if (buf.size() != 8 + n)
        throw std::runtime_error("idx file: payload length mismatch in " + path.string());
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<unsigned char>(buf[8 + i]);
    return labels;
}

}  // namespace deepstdp
