#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "kmeans.hpp"
#include "matrix.hpp"

// Covariate construction: direct (pass-through) designs, Gaussian-kernel
// designs with median-heuristic bandwidth, and the Nystrom landmark
// approximation. Feature-vector lists are d x n matrices with samples in
// columns, matching the conventions in matrix.hpp.

namespace nmflab {

enum class DesignKind { Direct, GaussianFull, GaussianNystrom };

/// How covariate columns are built for any input sample.
/// For the Gaussian kinds, `anchors` holds the training samples
/// (GaussianFull) or the k-means landmarks (GaussianNystrom) as columns.
struct KernelDesign {
    DesignKind kind = DesignKind::Direct;
    double beta = 0.0;
    Matrix anchors; // d x M, empty for Direct
    Index feature_dim = 0;

    static KernelDesign direct(Index dim) {
        KernelDesign d;
        d.kind = DesignKind::Direct;
        d.feature_dim = dim;
        return d;
    }

    static KernelDesign gaussian(Matrix anchor_points, double beta,
                                 DesignKind kind = DesignKind::GaussianFull) {
        if (!(beta > 0.0) || !std::isfinite(beta))
            throw config_error("kernel design requires finite beta > 0");
        if (anchor_points.cols() < 1)
            throw config_error("kernel design requires at least one anchor");
        KernelDesign d;
        d.kind = kind;
        d.beta = beta;
        d.feature_dim = anchor_points.rows();
        d.anchors = std::move(anchor_points);
        return d;
    }

    /// Covariate dimension R of the design.
    Index covariate_dim() const {
        return kind == DesignKind::Direct ? feature_dim : anchors.cols();
    }
};

/// Gaussian (RBF) kernel exp(-beta * ||u - v||^2).
inline double gaussian_kernel(const Vector& u, const Vector& v, double beta) {
    if (u.size() != v.size())
        throw shape_error("gaussian_kernel: dimension mismatch " +
                          std::to_string(u.size()) + " vs " + std::to_string(v.size()));
    if (!(beta > 0.0))
        throw config_error("gaussian_kernel: beta must be > 0");
    return std::exp(-beta * (u - v).squaredNorm());
}

namespace detail {

/// All pairwise squared distances between columns of a (d x m) and b (d x n).
inline Matrix pairwise_sq_dist(const Matrix& a, const Matrix& b) {
    const Vector an = a.colwise().squaredNorm().transpose();
    const Vector bn = b.colwise().squaredNorm().transpose();
    Matrix d = (-2.0 * a.transpose() * b);
    d.colwise() += an;
    d.rowwise() += bn.transpose();
    return d.cwiseMax(0.0);
}

} // namespace detail

/// Covariate matrix for a list of samples: anchors-count rows, one column
/// per sample. Direct designs pass the samples through unchanged and
/// require non-negative values.
inline NonNegMatrix build_covariates(const KernelDesign& design, const Matrix& samples) {
    if (samples.rows() != design.feature_dim)
        throw shape_error("build_covariates: samples have dimension " +
                          std::to_string(samples.rows()) + ", design expects " +
                          std::to_string(design.feature_dim));
    if (design.kind == DesignKind::Direct) {
        if (samples.size() > 0 && samples.minCoeff() < 0.0)
            throw domain_error("direct design requires non-negative feature values");
        return NonNegMatrix(samples);
    }
    Matrix k = (-design.beta * detail::pairwise_sq_dist(design.anchors, samples))
                   .array().exp().matrix();
    return NonNegMatrix(std::move(k), NonNegMatrix::unchecked);
}

/// Median-heuristic bandwidth: beta = 1 / median of pairwise *squared*
/// distances, so the median-distance pair has kernel value 1/e. Above
/// `exact_cap` samples the median is taken over a fixed-seed subsample.
inline double median_heuristic_beta(const Matrix& samples, Index exact_cap = 2000,
                                    std::uint64_t seed = 0) {
    const Index n = samples.cols();
    if (n < 2)
        throw config_error("median_heuristic_beta needs at least 2 samples");

    Matrix sub = samples;
    if (n > exact_cap) {
        std::vector<Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::mt19937_64 rng(seed);
        std::shuffle(idx.begin(), idx.end(), rng);
        sub.resize(samples.rows(), exact_cap);
        for (Index i = 0; i < exact_cap; ++i)
            sub.col(i) = samples.col(idx[static_cast<std::size_t>(i)]);
    }

    const Index m = sub.cols();
    std::vector<double> d2;
    d2.reserve(static_cast<std::size_t>(m * (m - 1) / 2));
    for (Index i = 0; i < m; ++i)
        for (Index j = i + 1; j < m; ++j)
            d2.push_back((sub.col(i) - sub.col(j)).squaredNorm());

    const auto mid = d2.begin() + static_cast<std::ptrdiff_t>(d2.size() / 2);
    std::nth_element(d2.begin(), mid, d2.end());
    double median = *mid;
    if (d2.size() % 2 == 0) {
        const double lo = *std::max_element(d2.begin(), mid);
        median = 0.5 * (median + lo);
    }
    if (!(median > 0.0))
        throw degenerate_error("median_heuristic_beta: all samples coincide");
    return 1.0 / median;
}

/// Four-point bandwidth grid beta_median * {1e-2, 1e-1, 1, 10}.
inline std::vector<double> beta_grid(double beta_median) {
    if (!(beta_median > 0.0))
        throw config_error("beta_grid: beta_median must be > 0");
    return {beta_median * 1e-2, beta_median * 1e-1, beta_median, beta_median * 10.0};
}

/// M landmark points as k-means centroids of the samples. Above
/// `subset_cap` samples, k-means runs on a fixed-seed uniform subsample.
inline Matrix select_landmarks(const Matrix& samples, Index m, std::uint64_t seed,
                               Index subset_cap = 10000) {
    const Index n = samples.cols();
    if (m < 1 || m > n)
        throw config_error("select_landmarks: m=" + std::to_string(m) +
                           " out of range for " + std::to_string(n) + " samples");
    Matrix pool = samples;
    if (n > subset_cap && subset_cap >= m) {
        std::vector<Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
        std::shuffle(idx.begin(), idx.end(), rng);
        pool.resize(samples.rows(), subset_cap);
        for (Index i = 0; i < subset_cap; ++i)
            pool.col(i) = samples.col(idx[static_cast<std::size_t>(i)]);
    }
    return kmeans(pool, m, seed).centroids;
}

struct NystromFactors {
    NonNegMatrix c; // N x M, kernel between samples and landmarks
    NonNegMatrix w; // M x M, kernel among landmarks
};

/// The C and W blocks of the Nystrom approximation K ~= C W^-1 C^T.
inline NystromFactors nystrom_design(const Matrix& samples, const Matrix& landmarks,
                                     double beta) {
    if (landmarks.cols() < 1)
        throw config_error("nystrom_design: landmarks must be non-empty");
    if (samples.rows() != landmarks.rows())
        throw shape_error("nystrom_design: feature dimension mismatch");
    Matrix c = (-beta * detail::pairwise_sq_dist(samples, landmarks)).array().exp().matrix();
    Matrix w = (-beta * detail::pairwise_sq_dist(landmarks, landmarks)).array().exp().matrix();
    return {NonNegMatrix(std::move(c), NonNegMatrix::unchecked),
            NonNegMatrix(std::move(w), NonNegMatrix::unchecked)};
}

/// Explicit approximate kernel C (W + ridge I)^-1 C^T. Only needed when the
/// caller asks for the approximate K itself; the solver path replaces A by
/// C^T and never inverts W. ridge < 0 selects the default 1e-8 tr(W)/M.
inline Matrix nystrom_kernel(const NystromFactors& f, double ridge = -1.0) {
    const Index m = f.w.rows();
    if (ridge < 0.0)
        ridge = 1e-8 * f.w.data().trace() / static_cast<double>(m);
    Matrix w = f.w.data() + ridge * Matrix::Identity(m, m);
    Eigen::LDLT<Matrix> solver(w);
    return f.c.data() * solver.solve(f.c.data().transpose());
}

} // namespace nmflab
