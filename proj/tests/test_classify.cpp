#include <catch_amalgamated.hpp>

#include <random>

#include "nmflab/classify.hpp"

using namespace nmflab;

TEST_CASE("unique_classes keeps first-appearance order") {
    const std::vector<std::string> labels{"b", "a", "b", "c", "a"};
    CHECK(unique_classes(labels) == std::vector<std::string>{"b", "a", "c"});
}

TEST_CASE("encode_hard") {
    const LabelEncoding enc = encode_hard({"a", "b", "a"}, {"a", "b"});
    Matrix want(2, 3);
    want << 1, 0, 1, 0, 1, 0;
    CHECK(enc.columns.data() == want);

    const LabelEncoding single = encode_hard({"x", "x", "x"});
    CHECK(single.columns.rows() == 1);
    CHECK(single.columns.data() == Matrix::Ones(1, 3));

    CHECK_THROWS_AS(encode_hard({"a", "z"}, {"a", "b"}), domain_error);
}

TEST_CASE("encode_soft") {
    // r = 1 reproduces encode_hard bitwise
    const std::vector<std::string> labels{"a", "b", "c", "a"};
    const auto names = unique_classes(labels);
    CHECK(encode_soft(labels, names, 1.0).columns.data() ==
          encode_hard(labels, names).columns.data());

    // r = 0.4, P = 3: (0.4, 0.3, 0.3) with 0.4 at the true class
    const auto soft = encode_soft(labels, names, 0.4);
    CHECK(soft.columns(0, 0) == Catch::Approx(0.4));
    CHECK(soft.columns(1, 0) == Catch::Approx(0.3));
    CHECK(soft.columns(2, 0) == Catch::Approx(0.3));
    CHECK(soft.columns(1, 1) == Catch::Approx(0.4));

    // r = 0, P = 3: zero at the true class, 0.5 elsewhere
    const auto inverted = encode_soft(labels, names, 0.0);
    CHECK(inverted.columns(0, 0) == 0.0);
    CHECK(inverted.columns(1, 0) == Catch::Approx(0.5));
    CHECK(inverted.columns(2, 0) == Catch::Approx(0.5));

    for (Index j = 0; j < soft.columns.cols(); ++j)
        CHECK(soft.columns.data().col(j).sum() == Catch::Approx(1.0));

    CHECK_THROWS_AS(encode_soft(labels, names, 1.5), config_error);
    CHECK_THROWS_AS(encode_soft({"a"}, {"a"}, 0.5), config_error);
}

TEST_CASE("encode_unlabeled") {
    CHECK(encode_unlabeled(3, {"a", "b"}).columns.data() == Matrix::Constant(2, 3, 0.5));
    CHECK(encode_unlabeled(2, {"a", "b", "c", "d"}).columns.data() ==
          Matrix::Constant(4, 2, 0.25));
}

namespace {

TriNmfModel make_model(Matrix x, Matrix theta, std::vector<std::string> names) {
    const Index r = theta.cols();
    return TriNmfModel{NonNegMatrix(std::move(x), NonNegMatrix::unchecked),
                       NonNegMatrix(std::move(theta), NonNegMatrix::unchecked),
                       KernelDesign::direct(r), std::move(names)};
}

} // namespace

TEST_CASE("membership_probabilities") {
    // X = I2, Theta = I2: probabilities are just the normalized covariates
    TriNmfModel model = make_model(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                   {"male", "female"});
    Matrix a(2, 1);
    a << 0.3, 0.7;
    const auto pred = membership_probabilities(model, NonNegMatrix(a));
    CHECK(pred.probabilities(0, 0) == Catch::Approx(0.3));
    CHECK(pred.probabilities(1, 0) == Catch::Approx(0.7));
    CHECK(pred.predicted_class[0] == "female");

    // zero covariate column: uniform probabilities, tie goes to class index 0
    const auto zero = membership_probabilities(
        model, NonNegMatrix(Matrix::Zero(2, 1), NonNegMatrix::unchecked));
    CHECK(zero.probabilities(0, 0) == 0.5);
    CHECK(zero.predicted_class[0] == "male");

    // columns are always on the simplex
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Matrix x(3, 3), theta(3, 4), cov(4, 7);
    for (Index j = 0; j < 3; ++j)
        for (Index i = 0; i < 3; ++i) x(i, j) = u(rng);
    for (Index j = 0; j < 3; ++j) x.col(j) /= x.col(j).sum();
    for (Index i = 0; i < theta.size(); ++i) theta(i) = u(rng);
    for (Index i = 0; i < cov.size(); ++i) cov(i) = u(rng);
    TriNmfModel big = make_model(x, theta, {"a", "b", "c"});
    const auto p = membership_probabilities(big, NonNegMatrix(cov));
    for (Index j = 0; j < p.probabilities.cols(); ++j)
        CHECK(p.probabilities.data().col(j).sum() == Catch::Approx(1.0).margin(1e-9));

    // argmax is invariant to positive rescaling of the covariate column
    const auto scaled = membership_probabilities(big, NonNegMatrix(Matrix(37.5 * cov)));
    CHECK(scaled.predicted_class == p.predicted_class);
}

TEST_CASE("confusion_matrix") {
    TriNmfModel model = make_model(Matrix::Identity(2, 2), Matrix::Identity(2, 2),
                                   {"m", "f"});
    Matrix a(2, 4);
    a << 1, 0, 1, 0, 0, 1, 0, 1; // predicted m f m f
    const auto pred = membership_probabilities(model, NonNegMatrix(a));

    const auto perfect = confusion_matrix(pred, {"m", "f", "m", "f"});
    CHECK(perfect.accuracy == 1.0);
    CHECK(perfect.counts(0, 0) == 2);
    CHECK(perfect.counts(1, 1) == 2);
    CHECK(perfect.counts(0, 1) == 0);

    const auto half = confusion_matrix(pred, {"m", "f", "f", "m"});
    CHECK(half.accuracy == 0.5);
    CHECK(half.counts(0, 1) == 1); // predicted m, true f
    CHECK(half.counts(1, 0) == 1);

    CHECK_THROWS_AS(confusion_matrix(pred, {"m"}), shape_error);
}

TEST_CASE("assign_bases_to_classes") {
    Matrix perm(2, 2);
    perm << 0.1, 0.9, 0.9, 0.1; // basis 1 -> class 2, basis 2 -> class 1
    const auto a = assign_bases_to_classes(NonNegMatrix(perm));
    CHECK(a.is_permutation);
    CHECK(a.basis_class == std::vector<Index>{1, 0});

    Matrix collapsed(2, 2);
    collapsed << 0.9, 0.8, 0.1, 0.2; // both bases claim class 1
    CHECK_FALSE(assign_bases_to_classes(NonNegMatrix(collapsed)).is_permutation);
}
