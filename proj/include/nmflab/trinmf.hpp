#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "kernel.hpp"
#include "kmeans.hpp"
#include "matrix.hpp"

// Tri-factorization Y ~= X Theta A with known covariates A, fitted by
// multiplicative updates under a column-stochastic constraint on X.
// Covers both the forward (regression) problem, where Y holds observed
// curves and A holds known covariates, and the inverse classification
// problem, where Y is a label matrix and A is feature-derived.

namespace nmflab {

enum class InitMode { Identity, KMeansCentroids, Random };

struct TriNmfConfig {
    Index rank_q = 0; // 0: resolved to y.rows() by fit()
    int max_iter = 5000;
    double rel_tol = 1e-6;
    double eps = 1e-12;
    InitMode init_mode = InitMode::Identity;
    std::uint64_t seed = 0;
    bool record_trajectory = true;
};

/// Fitted triple (X, Theta) plus the covariate design needed to build
/// columns of A for new samples. class_names is set in label mode.
struct TriNmfModel {
    NonNegMatrix x;     // P x Q, column-stochastic
    NonNegMatrix theta; // Q x R
    KernelDesign design;
    std::vector<std::string> class_names;
};

struct FitReport {
    std::vector<double> losses; // per-iteration, including the initial loss
    int iterations_run = 0;
    bool converged = false;
    double final_loss = 0.0;
    Vector b_column_sums; // sums of B = Theta A columns, before normalization
};

namespace detail {

/// One multiplicative update sweep: X-update, column-normalize X with the
/// scale absorbed into Theta (keeps X Theta A unchanged, so both halves
/// stay valid descent steps), refresh Yhat, Theta-update, refresh Yhat.
/// An X column that collapses to zero becomes uniform with its Theta row
/// zeroed, which leaves the product consistent.
inline void update_step_inplace(const Matrix& y, Matrix& yhat, Matrix& x,
                                Matrix& theta, const Matrix& a, double eps) {
    const Index p = x.rows();

    Matrix b = theta * a; // Q x N
    const Matrix bt = b.transpose();
    x = (x.array() * (y * bt).array() / ((yhat * bt).array() + eps)).matrix();

    for (Index q = 0; q < x.cols(); ++q) {
        const double s = x.col(q).sum();
        if (s > 0.0) {
            x.col(q) /= s;
            theta.row(q) *= s;
        } else {
            x.col(q).setConstant(1.0 / static_cast<double>(p));
            theta.row(q).setZero();
        }
    }
    yhat = x * (theta * a);

    const Matrix num = (x.transpose() * y) * a.transpose();
    const Matrix den = (x.transpose() * yhat) * a.transpose();
    theta = (theta.array() * num.array() / (den.array() + eps)).matrix();
    yhat = x * (theta * a);
}

inline void check_fit_inputs(const NonNegMatrix& y, const NonNegMatrix& a,
                             const TriNmfConfig& cfg, Index q) {
    if (y.cols() != a.cols())
        throw shape_error("fit: Y has " + std::to_string(y.cols()) +
                          " columns but A has " + std::to_string(a.cols()));
    if (q < 1 || q > std::min(y.rows(), y.cols()))
        throw config_error("fit: rank_q=" + std::to_string(q) +
                           " outside [1, min(P,N)] for P=" + std::to_string(y.rows()) +
                           " N=" + std::to_string(y.cols()));
    if (cfg.max_iter < 1 || !(cfg.rel_tol > 0.0) || !(cfg.eps > 0.0))
        throw config_error("fit: max_iter >= 1, rel_tol > 0 and eps > 0 required");
}

} // namespace detail

/// Initial factors. Identity requires rank_q == y.rows(). Theta starts
/// uniform-positive (a zero entry would stay zero under multiplicative
/// updates) and is scaled so that mean(X0 Theta0 A) matches mean(Y).
inline std::pair<NonNegMatrix, NonNegMatrix>
init_factors(const NonNegMatrix& y, const NonNegMatrix& a, const TriNmfConfig& cfg) {
    const Index p = y.rows();
    const Index q = cfg.rank_q > 0 ? cfg.rank_q : p;
    const Index r = a.rows();
    detail::check_fit_inputs(y, a, cfg, q);

    Matrix x0;
    switch (cfg.init_mode) {
    case InitMode::Identity:
        if (q != p)
            throw config_error("Identity init requires rank_q == rows(Y)");
        x0 = Matrix::Identity(p, p);
        break;
    case InitMode::KMeansCentroids: {
        x0 = kmeans(y.data(), q, cfg.seed).centroids;
        break;
    }
    case InitMode::Random: {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        x0.resize(p, q);
        for (Index c = 0; c < q; ++c)
            for (Index i = 0; i < p; ++i)
                x0(i, c) = u(rng);
        break;
    }
    }
    if (cfg.init_mode != InitMode::Identity) {
        for (Index c = 0; c < x0.cols(); ++c) {
            const double s = x0.col(c).sum();
            if (s > 0.0)
                x0.col(c) /= s;
            else
                x0.col(c).setConstant(1.0 / static_cast<double>(p));
        }
    }

    const double mean_base = (x0 * Matrix::Ones(q, r) * a.data()).mean();
    const double scale = mean_base > 0.0 ? y.data().mean() / mean_base : 1.0;
    Matrix theta0 = Matrix::Constant(q, r, std::max(scale, 1e-12));

    return {NonNegMatrix(std::move(x0), NonNegMatrix::unchecked),
            NonNegMatrix(std::move(theta0), NonNegMatrix::unchecked)};
}

/// One public multiplicative update step; returns the updated, normalized
/// factors.
inline std::pair<NonNegMatrix, NonNegMatrix>
update_step(const NonNegMatrix& y, const NonNegMatrix& yhat, const NonNegMatrix& x,
            const NonNegMatrix& theta, const NonNegMatrix& a, double eps = 1e-12) {
    if (x.cols() != theta.rows() || theta.cols() != a.rows() ||
        y.rows() != x.rows() || y.cols() != a.cols() ||
        yhat.rows() != y.rows() || yhat.cols() != y.cols())
        throw shape_error("update_step: inconsistent factor shapes");
    Matrix xm = x.data(), tm = theta.data(), yh = yhat.data();
    detail::update_step_inplace(y.data(), yh, xm, tm, a.data(), eps);
    return {NonNegMatrix(std::move(xm), NonNegMatrix::unchecked),
            NonNegMatrix(std::move(tm), NonNegMatrix::unchecked)};
}

/// Fit Y ~= X Theta A. Stops when the relative loss change drops below
/// cfg.rel_tol or after cfg.max_iter sweeps. The recorded loss sequence is
/// non-increasing (up to floating-point noise near convergence).
inline std::pair<TriNmfModel, FitReport>
fit(const NonNegMatrix& y, const NonNegMatrix& a, const TriNmfConfig& cfg) {
    auto [x0, theta0] = init_factors(y, a, cfg);
    Matrix x = x0.data(), theta = theta0.data();
    Matrix yhat = x * (theta * a.data());

    FitReport report;
    double prev = (y.data() - yhat).squaredNorm();
    if (cfg.record_trajectory) report.losses.push_back(prev);

    int it = 0;
    for (; it < cfg.max_iter; ++it) {
        detail::update_step_inplace(y.data(), yhat, x, theta, a.data(), cfg.eps);
        const double loss = (y.data() - yhat).squaredNorm();
        if (cfg.record_trajectory) report.losses.push_back(loss);
        const double rel = std::abs(prev - loss) / std::max(prev, 1e-30);
        prev = loss;
        if (rel < cfg.rel_tol) {
            report.converged = true;
            ++it;
            break;
        }
    }
    report.iterations_run = it;
    report.final_loss = prev;
    report.b_column_sums = (theta * a.data()).colwise().sum().transpose();

    TriNmfModel model{NonNegMatrix(std::move(x), NonNegMatrix::unchecked),
                      NonNegMatrix(std::move(theta), NonNegMatrix::unchecked),
                      KernelDesign::direct(a.rows()),
                      {}};
    return {std::move(model), std::move(report)};
}

/// X Theta a for new covariate columns.
inline NonNegMatrix reconstruct(const TriNmfModel& model, const NonNegMatrix& a) {
    if (a.rows() != model.theta.cols())
        throw shape_error("reconstruct: covariates have " + std::to_string(a.rows()) +
                          " rows, model expects " + std::to_string(model.theta.cols()));
    return NonNegMatrix(model.x.data() * (model.theta.data() * a.data()),
                        NonNegMatrix::unchecked);
}

} // namespace nmflab
