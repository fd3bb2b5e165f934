#include <catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <set>

#include "nmflab/modelsel.hpp"

using namespace nmflab;

namespace {

std::vector<std::string> balanced_labels(int per_class, std::vector<std::string> names) {
    std::vector<std::string> out;
    for (int i = 0; i < per_class; ++i)
        for (const auto& n : names) out.push_back(n);
    return out;
}

Matrix two_blob_features(const std::vector<std::string>& labels, std::uint64_t seed,
                         double gap = 4.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    Matrix m(2, static_cast<Index>(labels.size()));
    for (Index j = 0; j < m.cols(); ++j) {
        const double center = labels[static_cast<std::size_t>(j)] == labels[0] ? 0.0 : gap;
        m(0, j) = center + g(rng);
        m(1, j) = center + g(rng);
    }
    return m;
}

} // namespace

TEST_CASE("stratified_split sizes, coverage and determinism") {
    SplitSpec spec;
    spec.seed = 5;

    // one class of 10 at 40/40/20 -> 4/4/2
    const auto one = stratified_split(balanced_labels(10, {"a"}), spec);
    CHECK(one.train.size() == 4);
    CHECK(one.valid.size() == 4);
    CHECK(one.test.size() == 2);

    // two balanced classes: each part is balanced within one sample
    const auto labels = balanced_labels(50, {"a", "b"});
    const auto two = stratified_split(labels, spec);
    for (const auto* part : {&two.train, &two.valid, &two.test}) {
        int na = 0;
        for (Index i : *part)
            if (labels[static_cast<std::size_t>(i)] == "a") ++na;
        const int nb = static_cast<int>(part->size()) - na;
        CHECK(std::abs(na - nb) <= 1);
    }

    // disjoint and exhaustive
    std::set<Index> seen;
    for (const auto* part : {&two.train, &two.valid, &two.test})
        for (Index i : *part) CHECK(seen.insert(i).second);
    CHECK(seen.size() == labels.size());

    // deterministic
    const auto again = stratified_split(labels, spec);
    CHECK(again.train == two.train);
    CHECK(again.valid == two.valid);
    CHECK(again.test == two.test);

    // tiny class cannot be split three ways
    CHECK_THROWS_AS(stratified_split({"a", "a", "a", "b", "b"}, spec), degenerate_error);
    spec.train_frac = 0.6;
    CHECK_THROWS_AS(stratified_split(labels, spec), config_error);
}

TEST_CASE("kfold_cv_kernel: singleton grid, leakage dimensions, determinism") {
    const auto labels = balanced_labels(5, {"a", "b"});
    const Matrix feats = two_blob_features(labels, 11);
    const LabelEncoding enc = encode_hard(labels);
    TriNmfConfig cfg;
    cfg.max_iter = 200;

    const auto single = kfold_cv_kernel(feats, enc, {0.5}, 5, cfg, Criterion::FrobeniusLoss);
    REQUIRE(single.candidates.size() == 1);
    CHECK(single.chosen == 0);
    CHECK(single.candidates[0].beta == 0.5);
    CHECK(single.candidates[0].mean_loss >= 0.0);

    // leakage guard: each fold's training design is (N - fold) x (N - fold)
    const auto folds = detail::make_folds(10, 5, 0, nullptr);
    std::vector<Index> all(10);
    std::iota(all.begin(), all.end(), Index{0});
    const Matrix kmat = build_covariates(KernelDesign::gaussian(feats, 0.5), feats).data();
    for (const auto& held : folds) {
        std::vector<Index> train;
        std::set_difference(all.begin(), all.end(), held.begin(), held.end(),
                            std::back_inserter(train));
        const Matrix a_tr = detail::select_block(kmat, train, train);
        CHECK(a_tr.rows() == 10 - static_cast<Index>(held.size()));
        CHECK(a_tr.cols() == 10 - static_cast<Index>(held.size()));
        // no training entry involves a held-out sample
        for (Index i : held) {
            CHECK(std::find(train.begin(), train.end(), i) == train.end());
        }
    }

    const auto a1 = kfold_cv_kernel(feats, enc, {0.1, 0.5, 2.0}, 5, cfg,
                                    Criterion::Accuracy, 3);
    const auto a2 = kfold_cv_kernel(feats, enc, {0.1, 0.5, 2.0}, 5, cfg,
                                    Criterion::Accuracy, 3);
    CHECK(a1.chosen == a2.chosen);
    for (std::size_t i = 0; i < a1.candidates.size(); ++i) {
        CHECK(a1.candidates[i].mean_loss == a2.candidates[i].mean_loss);
        CHECK(a1.candidates[i].mean_accuracy == a2.candidates[i].mean_accuracy);
    }

    CHECK_THROWS_AS(kfold_cv_kernel(feats, enc, {}, 5, cfg, Criterion::FrobeniusLoss),
                    config_error);
    CHECK_THROWS_AS(kfold_cv_kernel(feats, enc, {0.5}, 1, cfg, Criterion::FrobeniusLoss),
                    config_error);
}

TEST_CASE("grid_search picks the kernel design on non-separable data") {
    // XOR-style layout: direct (linear) covariates cannot separate it
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g(0.0, 0.15);
    std::vector<std::string> labels;
    Matrix feats(2, 40);
    for (Index j = 0; j < 40; ++j) {
        const int corner = static_cast<int>(j) % 4;
        const double cx = (corner & 1) ? 1.0 : 0.0;
        const double cy = (corner & 2) ? 1.0 : 0.0;
        feats(0, j) = cx + g(rng);
        feats(1, j) = cy + g(rng);
        labels.push_back(((corner == 0) || (corner == 3)) ? "same" : "diff");
    }
    feats = feats.cwiseMax(0.0); // keep the direct design admissible

    SplitSpec spec;
    spec.seed = 2;
    const auto split = stratified_split(labels, spec);
    const auto tr_labels = detail::select(labels, split.train);
    const auto va_labels = detail::select(labels, split.valid);

    DesignSpec direct;
    direct.kind = DesignKind::Direct;
    DesignSpec kernel;
    kernel.kind = DesignKind::GaussianFull;

    TriNmfConfig cfg;
    cfg.max_iter = 500;
    const auto gs = grid_search(detail::select_columns(feats, split.train),
                                encode_hard(tr_labels, unique_classes(labels)),
                                detail::select_columns(feats, split.valid), va_labels,
                                {direct, kernel}, cfg, Criterion::Accuracy);
    REQUIRE(gs.cv.candidates.size() == 2);
    CHECK(gs.cv.chosen == 1);
    CHECK(gs.cv.candidates[1].mean_accuracy > gs.cv.candidates[0].mean_accuracy);

    // single candidate: it wins and the refit model is usable
    const auto solo = grid_search(detail::select_columns(feats, split.train),
                                  encode_hard(tr_labels, unique_classes(labels)),
                                  detail::select_columns(feats, split.valid), va_labels,
                                  {kernel}, cfg, Criterion::Accuracy);
    CHECK(solo.cv.chosen == 0);
    const NonNegMatrix a_test =
        build_covariates(solo.model.design, detail::select_columns(feats, split.test));
    CHECK(membership_probabilities(solo.model, a_test).predicted_class.size() ==
          split.test.size());

    // deterministic: same call, same choice and scores
    const auto rerun = grid_search(detail::select_columns(feats, split.train),
                                   encode_hard(tr_labels, unique_classes(labels)),
                                   detail::select_columns(feats, split.valid), va_labels,
                                   {direct, kernel}, cfg, Criterion::Accuracy);
    CHECK(rerun.cv.chosen == gs.cv.chosen);
    CHECK(rerun.cv.candidates[1].mean_accuracy == gs.cv.candidates[1].mean_accuracy);
}

TEST_CASE("repeated_evaluation aggregates and conventions") {
    const auto labels = balanced_labels(20, {"a", "b"});
    SplitSpec spec;
    spec.seed = 1;

    // constant pipeline predicting one class: balanced data gives ~50%
    const Pipeline constant = [&](const SplitIndices& split, std::uint64_t) {
        int correct = 0;
        for (Index i : split.test)
            if (labels[static_cast<std::size_t>(i)] == "a") ++correct;
        return static_cast<double>(correct) / static_cast<double>(split.test.size());
    };
    const auto res = repeated_evaluation(labels, spec, 50, constant);
    CHECK(res.per_repeat.size() == 50);
    CHECK(res.mean_accuracy == Catch::Approx(0.5).margin(0.05));

    // repeats = 1: sd is 0 by convention
    const auto one = repeated_evaluation(labels, spec, 1, constant);
    CHECK(one.sd_accuracy == 0.0);

    CHECK_THROWS_AS(repeated_evaluation(labels, spec, 0, constant), config_error);
}

TEST_CASE("full protocol drives accuracy high on separable blobs") {
    const auto labels = balanced_labels(15, {"a", "b"});
    const Matrix feats = two_blob_features(labels, 31);

    PipelineSpec pipe;
    pipe.cfg.max_iter = 300;
    DesignSpec kernel;
    kernel.kind = DesignKind::GaussianFull;
    pipe.designs = {kernel};

    SplitSpec spec;
    spec.seed = 4;
    const auto res = repeated_evaluation(feats, labels, spec, 5, pipe);
    CHECK(res.mean_accuracy > 0.9);
    CHECK(res.confusion.sum() == 5 * 6); // 6 test samples per repeat
    CHECK(res.class_names == std::vector<std::string>{"a", "b"});
}
