#pragma once

// Principal component analysis backed by a self-contained cyclic Jacobi
// eigensolver, plus l2 normalization. Covariance matrices here are at most a
// few hundred square, a regime where Jacobi is robust and fast enough.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "tensor.hpp"

namespace deepstdp {

struct EighResult {
    std::vector<double> values;  // nonincreasing
    DenseTensor vectors;         // row i is the unit eigenvector for values[i]
};

/// Symmetric eigendecomposition by cyclic Jacobi rotations. Sweeps until the
/// off-diagonal Frobenius norm drops below tol * ||A||_F or max_sweeps is hit.
inline EighResult jacobi_eigh(const DenseTensor& A, double tol = 1e-12, int max_sweeps = 100) {
    if (A.ndim() != 2 || A.rows() != A.cols())
        throw std::invalid_argument("jacobi_eigh: matrix must be square");
    const std::size_t n = A.rows();
    std::vector<double> a(A.data());
    std::vector<double> v(n * n, 0.0);  // accumulated rotations, columns are eigenvectors
    for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

    double frob = 0.0;
    for (double x : a) frob += x * x;
    frob = std::sqrt(frob);

    auto off_norm = [&]() {
        double s = 0.0;
        for (std::size_t p = 0; p < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q) s += 2.0 * a[p * n + q] * a[p * n + q];
        return std::sqrt(s);
    };

    for (int sweep = 0; sweep < max_sweeps && n > 1; ++sweep) {
        if (off_norm() <= tol * std::max(frob, 1e-300)) break;
        for (std::size_t p = 0; p < n - 1; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                double apq = a[p * n + q];
                if (apq == 0.0) continue;
                double app = a[p * n + p];
                double aqq = a[q * n + q];
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;

                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    if (i == p || i == q) continue;
                    double aip = a[i * n + p];
                    double aiq = a[i * n + q];
                    a[i * n + p] = c * aip - s * aiq;
                    a[p * n + i] = a[i * n + p];
                    a[i * n + q] = s * aip + c * aiq;
                    a[q * n + i] = a[i * n + q];
                }
                for (std::size_t i = 0; i < n; ++i) {
                    double vip = v[i * n + p];
                    double viq = v[i * n + q];
                    v[i * n + p] = c * vip - s * viq;
                    v[i * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return a[i * n + i] > a[j * n + j]; });

    EighResult r;
    r.values.resize(n);
    r.vectors = DenseTensor::matrix(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        std::size_t src = order[k];
        r.values[k] = a[src * n + src];
        for (std::size_t i = 0; i < n; ++i) r.vectors(k, i) = v[i * n + src];
    }
    return r;
}

struct PcaModel {
    std::vector<double> mean;        // d_in
    DenseTensor components;          // d_out x d_in, orthonormal rows
    std::vector<double> eigenvalues; // d_out, nonincreasing, clamped >= 0
    bool whiten = false;

    static constexpr double kWhitenEps = 1e-8;

    std::size_t input_dim() const { return mean.size(); }
    std::size_t output_dim() const { return eigenvalues.size(); }

    void transform_row(std::span<const double> x, std::span<double> out) const {
        for (std::size_t j = 0; j < output_dim(); ++j) {
            double s = 0.0;
            auto c = components.row(j);
            for (std::size_t i = 0; i < input_dim(); ++i) s += c[i] * (x[i] - mean[i]);
            if (whiten) s /= std::sqrt(eigenvalues[j] + kWhitenEps);
            out[j] = s;
        }
    }

    DenseTensor transform(const DenseTensor& X) const {
        if (X.cols() != input_dim()) throw std::invalid_argument("PcaModel: dimension mismatch");
        DenseTensor Y = DenseTensor::matrix(X.rows(), output_dim());
        for (std::size_t n = 0; n < X.rows(); ++n) transform_row(X.row(n), Y.row(n));
        return Y;
    }

    /// Map component-space coordinates back to the input space (adds the mean
    /// back and undoes whitening).
    std::vector<double> inverse_row(std::span<const double> y) const {
        std::vector<double> x(mean);
        for (std::size_t j = 0; j < output_dim(); ++j) {
            double s = whiten ? y[j] * std::sqrt(eigenvalues[j] + kWhitenEps) : y[j];
            auto c = components.row(j);
            for (std::size_t i = 0; i < input_dim(); ++i) x[i] += s * c[i];
        }
        return x;
    }
};

/// Fit a PCA model on the rows of X. Eigenvalues use the 1/(N-1) sample
/// covariance; tiny negatives from roundoff are clamped to zero.
inline PcaModel pca_fit(const DenseTensor& X, std::size_t d_out, bool whiten) {
    if (X.ndim() != 2) throw std::invalid_argument("pca_fit: X must be 2-D");
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n < 2) throw std::invalid_argument("pca_fit: need at least 2 rows");
    if (d_out > std::min(n, d))
        throw std::invalid_argument("pca_fit: d_out exceeds min(rows, cols)");
    if (!X.all_finite()) throw std::invalid_argument("pca_fit: non-finite input");

    PcaModel model;
    model.whiten = whiten;
    model.mean.assign(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = X.row(i);
        for (std::size_t j = 0; j < d; ++j) model.mean[j] += r[j];
    }
    for (double& m : model.mean) m /= static_cast<double>(n);

    DenseTensor cov = DenseTensor::matrix(d, d);
    std::vector<double> centered(d);
    for (std::size_t i = 0; i < n; ++i) {
        auto r = X.row(i);
        for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - model.mean[j];
        for (std::size_t p = 0; p < d; ++p) {
            double cp = centered[p];
            for (std::size_t q = p; q < d; ++q) cov(p, q) += cp * centered[q];
        }
    }
    const double scale = 1.0 / static_cast<double>(n - 1);
    for (std::size_t p = 0; p < d; ++p)
        for (std::size_t q = p; q < d; ++q) {
            cov(p, q) *= scale;
            cov(q, p) = cov(p, q);
        }

    EighResult eig = jacobi_eigh(cov);
    model.components = DenseTensor::matrix(d_out, d);
    model.eigenvalues.resize(d_out);
    for (std::size_t k = 0; k < d_out; ++k) {
        model.eigenvalues[k] = std::max(eig.values[k], 0.0);
        for (std::size_t i = 0; i < d; ++i) model.components(k, i) = eig.vectors(k, i);
    }
    return model;
}

/// v / max(||v||, 1e-12); inputs with norm below 1e-12 map to the zero vector.
inline std::vector<double> l2_normalize(std::span<const double> v) {
    std::vector<double> out(v.begin(), v.end());
    double n = norm(v);
    if (n < 1e-12) {
        std::fill(out.begin(), out.end(), 0.0);
        return out;
    }
    for (double& x : out) x /= n;
    return out;
}

inline void l2_normalize_rows(DenseTensor& X) {
    for (std::size_t i = 0; i < X.rows(); ++i) {
        auto r = X.row(i);
        double n = norm(r);
        if (n < 1e-12) {
            std::fill(r.begin(), r.end(), 0.0);
        } else {
            for (double& x : r) x /= n;
        }
    }
}

}  // namespace deepstdp
