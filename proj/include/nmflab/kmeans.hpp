#pragma once

#include <limits>
#include <random>
#include <vector>

#include "matrix.hpp"

namespace nmflab {

struct KMeansResult {
    Matrix centroids; // d x k, columns are centroids
    std::vector<int> assignments;
};

/// Lloyd's k-means on the columns of `points` with k-means++ seeding.
/// Deterministic for a fixed seed. An emptied cluster is re-seeded with
/// the point farthest from its current centroid.
inline KMeansResult kmeans(const Matrix& points, Index k, std::uint64_t seed,
                           int max_iter = 100) {
    const Index n = points.cols();
    if (k < 1 || k > n)
        throw config_error("kmeans: k=" + std::to_string(k) + " out of range for " +
                           std::to_string(n) + " points");

    std::mt19937_64 rng(seed);
    Matrix centroids(points.rows(), k);

    // k-means++ seeding
    std::uniform_int_distribution<Index> first(0, n - 1);
    centroids.col(0) = points.col(first(rng));
    Vector d2 = (points.colwise() - centroids.col(0)).colwise().squaredNorm().transpose();
    for (Index c = 1; c < k; ++c) {
        const double total = d2.sum();
        Index pick = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng), acc = 0.0;
            for (Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (acc >= target) { pick = i; break; }
            }
        } else {
            pick = first(rng);
        }
        centroids.col(c) = points.col(pick);
        d2 = d2.cwiseMin(
            (points.colwise() - centroids.col(c)).colwise().squaredNorm().transpose());
    }

    std::vector<int> assign(static_cast<std::size_t>(n), 0);
    for (int it = 0; it < max_iter; ++it) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            Index best = 0;
            double bestd = std::numeric_limits<double>::infinity();
            for (Index c = 0; c < k; ++c) {
                const double d = (points.col(i) - centroids.col(c)).squaredNorm();
                if (d < bestd) { bestd = d; best = c; }
            }
            if (assign[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
                assign[static_cast<std::size_t>(i)] = static_cast<int>(best);
                changed = true;
            }
        }
        if (!changed && it > 0) break;

        Matrix sums = Matrix::Zero(points.rows(), k);
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            sums.col(assign[static_cast<std::size_t>(i)]) += points.col(i);
            ++counts[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])];
        }
        for (Index c = 0; c < k; ++c) {
            if (counts[static_cast<std::size_t>(c)] > 0) {
                centroids.col(c) = sums.col(c) / static_cast<double>(counts[static_cast<std::size_t>(c)]);
            } else {
                // farthest point from its assigned centroid
                Index far = 0;
                double fard = -1.0;
                for (Index i = 0; i < n; ++i) {
                    const double d =
                        (points.col(i) - centroids.col(assign[static_cast<std::size_t>(i)])).squaredNorm();
                    if (d > fard) { fard = d; far = i; }
                }
                centroids.col(c) = points.col(far);
            }
        }
    }
    return {std::move(centroids), std::move(assign)};
}

} // namespace nmflab
