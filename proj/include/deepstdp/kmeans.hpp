#pragma once

// Lloyd's k-means with exact operation accounting. Each assignment step
// counts k*(2d-1) adds and k*d squaring mults per point, each update step d
// adds per point, matching the closed-form cost model. Empty clusters are
// reseeded to the point currently farthest from its centroid; that recovery
// path is tracked separately so formula checks can exclude it.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "cost.hpp"
#include "rng.hpp"
#include "tensor.hpp"

namespace deepstdp {

struct KMeansParams {
    std::size_t k = 100;
    std::size_t it = 20;   // iteration budget
    double tol = 0.0;      // relative objective-improvement stop; 0 runs all iterations

    void validate() const {
        if (k < 1 || it < 1) throw std::invalid_argument("KMeansParams: k and it must be >= 1");
        if (tol < 0) throw std::invalid_argument("KMeansParams: tol must be >= 0");
    }
};

struct KMeansResult {
    DenseTensor centroids;              // k x d
    std::vector<int> assignments;       // N, nearest centroid under final centroids
    double objective = 0.0;             // sum of squared distances to assigned centroids
    std::size_t iterations_run = 0;
    OpCount op_count;                   // assignment + update arithmetic
    OpCount reseed_ops;                 // empty-cluster recovery, excluded from formulas
    std::size_t reseed_count = 0;
    std::vector<double> objective_history;  // objective at each assignment step
};

/// Nearest-centroid assignment (squared Euclidean), ties to the lowest
/// centroid index. Optionally reports per-point distances and accrues the
/// distance arithmetic into `ops`.
inline std::vector<int> assign_step(const DenseTensor& X, const DenseTensor& centroids,
                                    OpCount* ops = nullptr,
                                    std::vector<double>* min_dists = nullptr) {
    if (X.ndim() != 2 || centroids.ndim() != 2 || X.cols() != centroids.cols())
        throw std::invalid_argument("assign_step: shape mismatch");
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    const std::size_t k = centroids.rows();

    std::vector<int> assign(n, 0);
    if (min_dists) min_dists->assign(n, 0.0);
    for (std::size_t p = 0; p < n; ++p) {
        auto x = X.row(p);
        double best = std::numeric_limits<double>::infinity();
        int best_j = 0;
        for (std::size_t j = 0; j < k; ++j) {
            auto c = centroids.row(j);
            double dist = 0.0;
            for (std::size_t m = 0; m < d; ++m) {
                double diff = x[m] - c[m];
                dist += diff * diff;
            }
            if (dist < best) {
                best = dist;
                best_j = static_cast<int>(j);
            }
        }
        assign[p] = best_j;
        if (min_dists) (*min_dists)[p] = best;
    }
    if (ops) {
        // d subtractions + (d-1) summation adds per centroid; d squarings
        ops->adds += static_cast<unsigned long long>(n) * k * (2 * d - 1);
        ops->mults += static_cast<unsigned long long>(n) * k * d;
    }
    return assign;
}

/// Lloyd iterations with centroids initialized from k distinct data points.
inline KMeansResult kmeans_fit(const DenseTensor& X, const KMeansParams& params, RngStream& rng) {
    params.validate();
    if (X.ndim() != 2) throw std::invalid_argument("kmeans_fit: X must be 2-D");
    const std::size_t n = X.rows();
    const std::size_t d = X.cols();
    if (n < params.k) throw std::invalid_argument("kmeans_fit: fewer points than clusters");
    if (!X.all_finite()) throw std::invalid_argument("kmeans_fit: non-finite input");

    KMeansResult res;
    res.centroids = DenseTensor::matrix(params.k, d);

    // sample k distinct points without replacement
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t j = 0; j < params.k; ++j) {
        std::size_t pick = j + static_cast<std::size_t>(rng.below(n - j));
        std::swap(idx[j], idx[pick]);
        auto src = X.row(idx[j]);
        std::copy(src.begin(), src.end(), res.centroids.row(j).begin());
    }

    std::vector<double> dists;
    std::vector<unsigned long long> counts(params.k, 0);
    double prev_obj = std::numeric_limits<double>::infinity();

    for (std::size_t iter = 0; iter < params.it; ++iter) {
        res.assignments = assign_step(X, res.centroids, &res.op_count, &dists);
        double obj = 0.0;
        for (double v : dists) obj += v;
        res.objective_history.push_back(obj);
        res.iterations_run = iter + 1;

        if (iter > 0 && params.tol > 0.0) {
            double improvement = (prev_obj - obj) / std::max(std::abs(prev_obj), 1e-300);
            if (improvement < params.tol) break;
        }
        prev_obj = obj;

        // update step: re-center every cluster on the mean of its members
        std::fill(res.centroids.data().begin(), res.centroids.data().end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t p = 0; p < n; ++p) {
            auto c = res.centroids.row(static_cast<std::size_t>(res.assignments[p]));
            auto x = X.row(p);
            for (std::size_t m = 0; m < d; ++m) c[m] += x[m];
            ++counts[static_cast<std::size_t>(res.assignments[p])];
        }
        res.op_count.adds += static_cast<unsigned long long>(n) * d;
        for (std::size_t j = 0; j < params.k; ++j) {
            if (counts[j] == 0) continue;
            auto c = res.centroids.row(j);
            for (std::size_t m = 0; m < d; ++m) c[m] /= static_cast<double>(counts[j]);
        }

        // reseed empty clusters to the points farthest from their centroids;
        // lookup reuses the distances from the assignment step
        std::vector<char> taken(n, 0);
        for (std::size_t j = 0; j < params.k; ++j) {
            if (counts[j] > 0) continue;
            std::size_t far = 0;
            double far_dist = -1.0;
            for (std::size_t p = 0; p < n; ++p) {
                if (!taken[p] && dists[p] > far_dist) {
                    far_dist = dists[p];
                    far = p;
                }
            }
            taken[far] = 1;
            auto src = X.row(far);
            std::copy(src.begin(), src.end(), res.centroids.row(j).begin());
            ++res.reseed_count;
        }
    }

    // readout pass: sync assignments and objective to the final centroids
    res.assignments = assign_step(X, res.centroids, nullptr, &dists);
    res.objective = 0.0;
    for (double v : dists) res.objective += v;
    res.objective_history.push_back(res.objective);
    return res;
}

}  // namespace deepstdp
