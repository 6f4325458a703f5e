#pragma once

// Row-major dense tensor of 64-bit floats plus the handful of linear-algebra
// primitives the rest of the library builds on.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

namespace deepstdp {

class DenseTensor {
public:
    DenseTensor() = default;

    explicit DenseTensor(std::vector<std::size_t> dims)
        : dims_(std::move(dims)), data_(element_count(dims_), 0.0) {}

    DenseTensor(std::vector<std::size_t> dims, std::vector<double> data)
        : dims_(std::move(dims)), data_(std::move(data)) {
        if (data_.size() != element_count(dims_))
            throw std::invalid_argument("DenseTensor: data length does not match dims");
    }

    static DenseTensor matrix(std::size_t rows, std::size_t cols) {
        return DenseTensor({rows, cols});
    }

    std::size_t ndim() const { return dims_.size(); }
    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t dim(std::size_t i) const { return dims_.at(i); }
    std::size_t size() const { return data_.size(); }
    std::size_t rows() const { return dim(0); }
    std::size_t cols() const { return dim(1); }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    double& operator()(std::size_t i) { return data_[i]; }
    double operator()(std::size_t i) const { return data_[i]; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * dims_[1] + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * dims_[1] + j]; }

    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }

    double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
        return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
        return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
    }

    /// Row of a 2-D tensor.
    std::span<double> row(std::size_t i) { return {data_.data() + i * dims_[1], dims_[1]}; }
    std::span<const double> row(std::size_t i) const {
        return {data_.data() + i * dims_[1], dims_[1]};
    }

    /// Contiguous slice along the leading dimension (e.g. one sample of an
    /// N x C x H x W batch).
    std::span<const double> slice(std::size_t i) const {
        std::size_t stride = dims_[0] == 0 ? 0 : data_.size() / dims_[0];
        return {data_.data() + i * stride, stride};
    }
    std::span<double> slice(std::size_t i) {
        std::size_t stride = dims_[0] == 0 ? 0 : data_.size() / dims_[0];
        return {data_.data() + i * stride, stride};
    }

    bool all_finite() const {
        for (double v : data_)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const DenseTensor& other) const {
        return dims_ == other.dims_ && data_ == other.data_;
    }

private:
    static std::size_t element_count(const std::vector<std::size_t>& dims) {
        std::size_t n = 1;
        for (std::size_t d : dims) n *= d;
        return n;
    }

    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_norm(std::span<const double> v) { return dot(v, v); }

inline double norm(std::span<const double> v) { return std::sqrt(squared_norm(v)); }

/// y = A x for a 2-D tensor A.
inline std::vector<double> matvec(const DenseTensor& A, std::span<const double> x) {
    if (A.ndim() != 2 || A.cols() != x.size())
        throw std::invalid_argument("matvec: shape mismatch");
    std::vector<double> y(A.rows(), 0.0);
    for (std::size_t i = 0; i < A.rows(); ++i) y[i] = dot(A.row(i), x);
    return y;
}

/// B += scale * (u outer v) for a 2-D tensor B of shape |u| x |v|.
inline void add_outer(DenseTensor& B, double scale, std::span<const double> u,
                      std::span<const double> v) {
    if (B.rows() != u.size() || B.cols() != v.size())
        throw std::invalid_argument("add_outer: shape mismatch");
    for (std::size_t i = 0; i < u.size(); ++i) {
        double s = scale * u[i];
        auto r = B.row(i);
        for (std::size_t j = 0; j < v.size(); ++j) r[j] += s * v[j];
    }
}

}  // namespace deepstdp
