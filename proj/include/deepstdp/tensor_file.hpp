#pragma once

// Binary tensor container: magic "DSTP", version u32, dtype u8, ndim u32,
// dims u32 each, then the row-major payload, everything little-endian.
// Writes go through a temp file and an atomic rename.

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace deepstdp {

enum class Dtype : std::uint8_t { f32 = 1, f64 = 2, u8 = 3, i32 = 4 };

inline std::size_t dtype_size(Dtype t) {
    switch (t) {
        case Dtype::f32: return 4;
        case Dtype::f64: return 8;
        case Dtype::u8: return 1;
        case Dtype::i32: return 4;
    }
    throw std::runtime_error("tensor file: unknown dtype");
}

namespace detail {

inline void put_u32(std::string& buf, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline std::uint32_t get_u32(const std::string& buf, std::size_t& pos) {
    if (pos + 4 > buf.size()) throw std::runtime_error("tensor file: truncated header");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
        v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
}

template <typename T>
inline void put_scalar_le(std::string& buf, T v) {
    unsigned char raw[sizeof(T)];
    std::memcpy(raw, &v, sizeof(T));
    // this library targets little-endian hosts; keep the byte order explicit
    for (std::size_t i = 0; i < sizeof(T); ++i) buf.push_back(static_cast<char>(raw[i]));
}

inline void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return bytes;
}

}  // namespace detail

/// Serialize a tensor, converting values to the requested storage dtype.
inline void write_tensor(const std::filesystem::path& path, const DenseTensor& t,
                         Dtype dtype = Dtype::f64) {
    std::string buf;
    buf.append("DSTP");
    detail::put_u32(buf, 1);
    buf.push_back(static_cast<char>(dtype));
    detail::put_u32(buf, static_cast<std::uint32_t>(t.ndim()));
    for (std::size_t d : t.dims()) {
        if (d > 0xFFFFFFFFull) throw std::runtime_error("tensor file: dimension exceeds u32");
        detail::put_u32(buf, static_cast<std::uint32_t>(d));
    }
    for (double v : t.data()) {
        switch (dtype) {
            case Dtype::f32: detail::put_scalar_le(buf, static_cast<float>(v)); break;
            case Dtype::f64: detail::put_scalar_le(buf, v); break;
            case Dtype::u8: buf.push_back(static_cast<char>(static_cast<std::uint8_t>(v))); break;
            case Dtype::i32: detail::put_scalar_le(buf, static_cast<std::int32_t>(v)); break;
        }
    }
    detail::atomic_write(path, buf);
}

struct LoadedTensor {
    DenseTensor tensor;
    Dtype dtype = Dtype::f64;
};

inline LoadedTensor read_tensor_typed(const std::filesystem::path& path) {
    std::string buf = detail::read_all(path);
    if (buf.size() < 13 || buf.compare(0, 4, "DSTP") != 0)
        throw std::runtime_error("tensor file: bad magic in " + path.string());
    std::size_t pos = 4;
    std::uint32_t version = detail::get_u32(buf, pos);
    if (version != 1) throw std::runtime_error("tensor file: unsupported version");
    auto dtype = static_cast<Dtype>(static_cast<unsigned char>(buf[pos++]));
    std::size_t elem = dtype_size(dtype);
    std::uint32_t ndim = detail::get_u32(buf, pos);
    std::vector<std::size_t> dims(ndim);
    std::size_t count = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
        dims[i] = detail::get_u32(buf, pos);
        count *= dims[i];
    }
    if (buf.size() - pos != count * elem)
        throw std::runtime_error("tensor file: payload length mismatch in " + path.string());

    DenseTensor t(dims);
    for (std::size_t i = 0; i < count; ++i) {
        const char* src = buf.data() + pos + i * elem;
        switch (dtype) {
            case Dtype::f32: {
                float v;
                std::memcpy(&v, src, 4);
                t(i) = v;
                break;
            }
            case Dtype::f64: {
                double v;
                std::memcpy(&v, src, 8);
                t(i) = v;
                break;
            }
            case Dtype::u8: t(i) = static_cast<unsigned char>(*src); break;
            case Dtype::i32: {
                std::int32_t v;
                std::memcpy(&v, src, 4);
                t(i) = v;
                break;
            }
        }
    }
    return {std::move(t), dtype};
}

inline DenseTensor read_tensor(const std::filesystem::path& path) {
    return read_tensor_typed(path).tensor;
}

inline void write_labels(const std::filesystem::path& path, std::span<const int> labels) {
    DenseTensor t({labels.size()});
    for (std::size_t i = 0; i < labels.size(); ++i) t(i) = labels[i];
    write_tensor(path, t, Dtype::i32);
}

inline std::vector<int> read_labels(const std::filesystem::path& path) {
    LoadedTensor lt = read_tensor_typed(path);
    if (lt.tensor.ndim() != 1) throw std::runtime_error("labels file must be 1-D");
    std::vector<int> labels(lt.tensor.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        labels[i] = static_cast<int>(lt.tensor(i));
    return labels;
}

}  // namespace deepstdp
