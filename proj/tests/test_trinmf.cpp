#include <catch_amalgamated.hpp>

#include <random>

#include "nmflab/trinmf.hpp"

using namespace nmflab;

namespace {

NonNegMatrix random_nonneg(Index rows, Index cols, std::uint64_t seed, double lo = 0.0,
                           double hi = 1.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = u(rng);
    return NonNegMatrix(std::move(m), NonNegMatrix::unchecked);
}

NonNegMatrix column_stochastic(Index rows, Index cols, std::uint64_t seed) {
    Matrix m = random_nonneg(rows, cols, seed, 0.05, 1.0).data();
    for (Index j = 0; j < cols; ++j) m.col(j) /= m.col(j).sum();
    return NonNegMatrix(std::move(m), NonNegMatrix::unchecked);
}

} // namespace

TEST_CASE("exactly factorizable identity instance is recovered") {
    const NonNegMatrix y = NonNegMatrix::identity(3);
    const NonNegMatrix a = NonNegMatrix::identity(3);
    TriNmfConfig cfg;
    cfg.rank_q = 3;
    auto [model, report] = fit(y, a, cfg);
    CHECK(report.final_loss < 1e-6);
    // X Theta must be (close to) the identity
    const Matrix prod = model.x.data() * model.theta.data();
    CHECK((prod - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("planted factorization is fitted to near-zero loss") {
    const NonNegMatrix x0 = column_stochastic(6, 3, 42);
    const NonNegMatrix t0 = random_nonneg(3, 4, 43, 0.2, 2.0);
    const NonNegMatrix a0 = random_nonneg(4, 10, 44, 0.1, 1.0);
    const NonNegMatrix y = matmul(x0, matmul(t0, a0));

    TriNmfConfig cfg;
    cfg.rank_q = 3;
    cfg.init_mode = InitMode::Random;
    cfg.seed = 7;
    cfg.max_iter = 20000;
    cfg.rel_tol = 1e-12;
    auto [model, report] = fit(y, a0, cfg);
    CHECK(report.final_loss <= 1e-4 * y.data().squaredNorm());
}

TEST_CASE("update_step fixed point and scalar case") {
    // strictly positive exact fit: one step changes nothing
    const NonNegMatrix x(Matrix::Constant(2, 2, 0.5), NonNegMatrix::unchecked);
    const NonNegMatrix theta(Matrix::Constant(2, 3, 1.0), NonNegMatrix::unchecked);
    const NonNegMatrix a = random_nonneg(3, 5, 1, 0.2, 1.0);
    const NonNegMatrix y = matmul(x, matmul(theta, a));
    auto [x2, t2] = update_step(y, y, x, theta, a);
    CHECK((x2.data() - x.data()).cwiseAbs().maxCoeff() < 1e-6);
    CHECK((t2.data() - theta.data()).cwiseAbs().maxCoeff() < 1e-6);

    // scalar instance y=2, x=1, theta=1, a=1: theta' = 2, loss 1 -> 0
    const NonNegMatrix ys(Matrix::Constant(1, 1, 2.0), NonNegMatrix::unchecked);
    const NonNegMatrix one(Matrix::Constant(1, 1, 1.0), NonNegMatrix::unchecked);
    auto [xs, ts] = update_step(ys, one, one, one, one, 0.0);
    CHECK(xs(0, 0) == 1.0);
    CHECK(ts(0, 0) == Catch::Approx(2.0));
    CHECK(frobenius_loss(ys, matmul(xs, matmul(ts, one))) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("a zero row of Y drives the matching X row down monotonically") {
    Matrix ym = random_nonneg(4, 8, 5, 0.2, 1.0).data();
    ym.row(2).setZero();
    const NonNegMatrix y(std::move(ym), NonNegMatrix::unchecked);
    const NonNegMatrix a = random_nonneg(3, 8, 6, 0.1, 1.0);

    TriNmfConfig cfg;
    cfg.rank_q = 3;
    cfg.init_mode = InitMode::Random;
    cfg.seed = 9;
    Matrix x = init_factors(y, a, cfg).first.data();
    Matrix theta = init_factors(y, a, cfg).second.data();
    Matrix yhat = x * (theta * a.data());
    double prev_row_sum = x.row(2).sum();
    for (int it = 0; it < 30; ++it) {
        detail::update_step_inplace(y.data(), yhat, x, theta, a.data(), cfg.eps);
        const double row_sum = x.row(2).sum();
        CHECK(row_sum <= prev_row_sum + 1e-12);
        prev_row_sum = row_sum;
    }
}

TEST_CASE("init_factors modes") {
    const NonNegMatrix y = NonNegMatrix::identity(3);
    const NonNegMatrix a = random_nonneg(2, 3, 3, 0.1, 1.0);
    TriNmfConfig cfg;
    cfg.rank_q = 3;

    auto [xi, ti] = init_factors(y, a, cfg);
    CHECK(xi.data() == Matrix::Identity(3, 3));

    cfg.init_mode = InitMode::Random;
    cfg.seed = 7;
    auto [xr1, tr1] = init_factors(y, a, cfg);
    auto [xr2, tr2] = init_factors(y, a, cfg);
    CHECK(xr1.data() == xr2.data());
    CHECK(tr1.data() == tr2.data());

    // Q=N k-means puts each sample in its own cluster: the init columns are
    // the normalized Y columns up to permutation
    cfg.init_mode = InitMode::KMeansCentroids;
    auto [xk, tk] = init_factors(y, a, cfg);
    for (Index j = 0; j < 3; ++j) {
        bool found = false;
        for (Index c = 0; c < 3; ++c)
            if ((xk.data().col(c) - y.data().col(j)).cwiseAbs().maxCoeff() < 1e-12)
                found = true;
        CHECK(found);
    }

    cfg.init_mode = InitMode::Identity;
    cfg.rank_q = 2;
    CHECK_THROWS_AS(init_factors(y, a, cfg), config_error);
    cfg.rank_q = 99;
    CHECK_THROWS_AS(init_factors(y, a, cfg), config_error);
}

TEST_CASE("loss descends monotonically and X stays column-stochastic") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const NonNegMatrix y = random_nonneg(5, 12, seed * 3 + 1, 0.0, 2.0);
        const NonNegMatrix a = random_nonneg(4, 12, seed * 3 + 2, 0.0, 1.0);
        TriNmfConfig cfg;
        cfg.rank_q = 3;
        cfg.init_mode = InitMode::Random;
        cfg.seed = seed;
        cfg.max_iter = 60;
        cfg.rel_tol = 1e-14;
        auto [model, report] = fit(y, a, cfg);

        for (std::size_t i = 1; i < report.losses.size(); ++i)
            CHECK(report.losses[i] <= report.losses[i - 1] + 1e-9);
        for (Index c = 0; c < model.x.cols(); ++c)
            CHECK(model.x.data().col(c).sum() == Catch::Approx(1.0).margin(1e-9));
    }
}

TEST_CASE("reconstruct handles one-hot and zero covariate columns") {
    const NonNegMatrix y = random_nonneg(3, 6, 21, 0.1, 1.0);
    const NonNegMatrix a = random_nonneg(4, 6, 22, 0.1, 1.0);
    TriNmfConfig cfg;
    cfg.rank_q = 3;
    auto [model, report] = fit(y, a, cfg);

    Matrix cols = Matrix::Zero(4, 2);
    cols(2, 0) = 1.0; // e_3 picks column 3 of X Theta
    const NonNegMatrix out = reconstruct(model, NonNegMatrix(cols, NonNegMatrix::unchecked));
    const Matrix xt = model.x.data() * model.theta.data();
    CHECK((out.data().col(0) - xt.col(2)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(out.data().col(1).isZero());

    CHECK_THROWS_AS(reconstruct(model, NonNegMatrix(3, 1, 1.0)), shape_error);
}
