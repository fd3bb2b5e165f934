#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "classify.hpp"
#include "kernel.hpp"
#include "matrix.hpp"
#include "trinmf.hpp"

// Hyperparameter selection and evaluation: stratified splits, k-fold
// cross-validation that is leakage-safe for kernel designs (held-out rows
// AND columns are removed from the training kernel), grid search with
// refit on train+valid, and the repeated split/HPO/test protocol.

namespace nmflab {

struct SplitSpec {
    double train_frac = 0.4;
    double valid_frac = 0.4;
    double test_frac = 0.2;
    bool stratified = true;
    std::uint64_t seed = 0;
};

struct SplitIndices {
    std::vector<Index> train, valid, test;
};

enum class Criterion { FrobeniusLoss, Accuracy };

/// Candidate covariate design for grid search. beta == 0 means "resolve
/// via the median heuristic on the training samples, times beta_scale".
struct DesignSpec {
    DesignKind kind = DesignKind::GaussianFull;
    double beta = 0.0;
    double beta_scale = 1.0; // multiplier on the median heuristic when beta == 0
    Index landmarks = 0;     // GaussianNystrom only
    std::uint64_t seed = 0;
};

struct CvCandidate {
    DesignSpec spec;
    double beta = 0.0; // resolved value
    double mean_loss = 0.0;
    double mean_accuracy = 0.0;
    bool failed = false;
};

struct CvResult {
    std::vector<CvCandidate> candidates;
    int chosen = -1;
    Criterion criterion = Criterion::FrobeniusLoss;
};

namespace detail {

inline std::mt19937_64 seeded_rng(std::uint64_t seed) { return std::mt19937_64(seed); }

inline void sort_indices(std::vector<Index>& v) { std::sort(v.begin(), v.end()); }

/// Round a fraction split of n into three non-negative part sizes that sum
/// to n, each within one sample of its target, and (for n >= 3) none empty.
inline std::array<Index, 3> part_sizes(Index n, const SplitSpec& spec) {
    Index n_tr = static_cast<Index>(std::llround(spec.train_frac * static_cast<double>(n)));
    Index n_va = static_cast<Index>(std::llround(spec.valid_frac * static_cast<double>(n)));
    n_tr = std::clamp<Index>(n_tr, 0, n);
    n_va = std::clamp<Index>(n_va, 0, n - n_tr);
    Index n_te = n - n_tr - n_va;
    if (n >= 3) {
        auto largest = [&]() -> Index& {
            if (n_tr >= n_va && n_tr >= n_te) return n_tr;
            return n_va >= n_te ? n_va : n_te;
        };
        while (n_tr == 0 || n_va == 0 || n_te == 0) {
            Index& big = largest();
            --big;
            if (n_tr == 0) ++n_tr;
            else if (n_va == 0) ++n_va;
            else ++n_te;
        }
    }
    return {n_tr, n_va, n_te};
}

inline bool is_hard_encoding(const LabelEncoding& enc) {
    for (Index j = 0; j < enc.columns.cols(); ++j)
        for (Index i = 0; i < enc.columns.rows(); ++i) {
            const double v = enc.columns(i, j);
            if (v != 0.0 && v != 1.0) return false;
        }
    return true;
}

inline std::vector<Index> argmax_labels(const NonNegMatrix& columns) {
    std::vector<Index> out;
    out.reserve(static_cast<std::size_t>(columns.cols()));
    for (Index j = 0; j < columns.cols(); ++j) {
        Index best = 0;
        columns.data().col(j).maxCoeff(&best);
        out.push_back(best);
    }
    return out;
}

/// k folds of 0..n-1; stratified per label when labels are provided.
inline std::vector<std::vector<Index>> make_folds(Index n, int k, std::uint64_t seed,
                                                  const std::vector<Index>* labels) {
    std::vector<std::vector<Index>> folds(static_cast<std::size_t>(k));
    auto rng = seeded_rng(seed);
    if (labels) {
        const Index nclass = *std::max_element(labels->begin(), labels->end()) + 1;
        int next = 0;
        for (Index c = 0; c < nclass; ++c) {
            std::vector<Index> idx;
            for (Index i = 0; i < n; ++i)
                if ((*labels)[static_cast<std::size_t>(i)] == c) idx.push_back(i);
            std::shuffle(idx.begin(), idx.end(), rng);
            for (Index i : idx) {
                folds[static_cast<std::size_t>(next)].push_back(i);
                next = (next + 1) % k;
            }
        }
    } else {
        std::vector<Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Index{0});
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < idx.size(); ++i)
            folds[i % static_cast<std::size_t>(k)].push_back(idx[i]);
    }
    for (auto& f : folds) sort_indices(f);
    return folds;
}

inline Matrix select_columns(const Matrix& m, const std::vector<Index>& idx) {
    Matrix out(m.rows(), static_cast<Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        out.col(static_cast<Index>(i)) = m.col(idx[i]);
    return out;
}

inline Matrix select_block(const Matrix& m, const std::vector<Index>& rows,
                           const std::vector<Index>& cols) {
    Matrix out(static_cast<Index>(rows.size()), static_cast<Index>(cols.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j)
            out(static_cast<Index>(i), static_cast<Index>(j)) = m(rows[i], cols[j]);
    return out;
}

template <typename T>
inline std::vector<T> select(const std::vector<T>& v, const std::vector<Index>& idx) {
    std::vector<T> out;
    out.reserve(idx.size());
    for (Index i : idx) out.push_back(v[static_cast<std::size_t>(i)]);
    return out;
}

inline TriNmfConfig resolve_rank(TriNmfConfig cfg, Index p) {
    if (cfg.rank_q == 0) cfg.rank_q = p;
    return cfg;
}

/// Pick the best non-failed candidate; ties break toward smaller beta,
/// then earlier index.
inline int choose_candidate(const std::vector<CvCandidate>& cands, Criterion crit) {
    int best = -1;
    for (std::size_t i = 0; i < cands.size(); ++i) {
        if (cands[i].failed) continue;
        if (best < 0) { best = static_cast<int>(i); continue; }
        const auto& a = cands[i];
        const auto& b = cands[static_cast<std::size_t>(best)];
        bool better;
        if (crit == Criterion::FrobeniusLoss)
            better = a.mean_loss < b.mean_loss ||
                     (a.mean_loss == b.mean_loss && a.beta < b.beta);
        else
            better = a.mean_accuracy > b.mean_accuracy ||
                     (a.mean_accuracy == b.mean_accuracy && a.beta < b.beta);
        if (better) best = static_cast<int>(i);
    }
    return best;
}

} // namespace detail

/// Disjoint, exhaustive train/valid/test indices. With stratification,
/// per-class proportions stay within one sample of the target fractions.
inline SplitIndices stratified_split(const std::vector<std::string>& labels,
                                     const SplitSpec& spec) {
    auto in_unit = [](double f) { return f > 0.0 && f < 1.0; };
    if (!in_unit(spec.train_frac) || !in_unit(spec.valid_frac) || !in_unit(spec.test_frac) ||
        std::abs(spec.train_frac + spec.valid_frac + spec.test_frac - 1.0) > 1e-9)
        throw config_error("stratified_split: fractions must lie in (0,1) and sum to 1");
    const Index n = static_cast<Index>(labels.size());
    if (n < 1) throw config_error("stratified_split: empty label list");

    auto rng = detail::seeded_rng(spec.seed);
    SplitIndices out;
    auto distribute = [&](std::vector<Index> idx) {
        std::shuffle(idx.begin(), idx.end(), rng);
        const auto sizes = detail::part_sizes(static_cast<Index>(idx.size()), spec);
        std::size_t pos = 0;
        for (Index i = 0; i < sizes[0]; ++i) out.train.push_back(idx[pos++]);
        for (Index i = 0; i < sizes[1]; ++i) out.valid.push_back(idx[pos++]);
        for (Index i = 0; i < sizes[2]; ++i) out.test.push_back(idx[pos++]);
    };

    if (spec.stratified) {
        for (const auto& name : unique_classes(labels)) {
            std::vector<Index> idx;
            for (Index i = 0; i < n; ++i)
                if (labels[static_cast<std::size_t>(i)] == name) idx.push_back(i);
            if (static_cast<Index>(idx.size()) < 3)
                throw degenerate_error("stratified_split: class '" + name + "' has only " +
                                       std::to_string(idx.size()) +
                                       " samples, fewer than the 3 split parts");
            distribute(std::move(idx));
        }
    } else {
        std::vector<Index> idx(static_cast<std::size_t>(n));
        std::iota(idx.begin(), idx.end(), Index{0});
        distribute(std::move(idx));
    }
    detail::sort_indices(out.train);
    detail::sort_indices(out.valid);
    detail::sort_indices(out.test);
    return out;
}

/// Leakage-safe k-fold CV over bandwidth candidates. The full kernel is
/// built on all samples once per beta; each fold's training design drops
/// both the rows and the columns of the held-out samples, and validation
/// covariates are the kernel values between training anchors and held-out
/// samples only.
inline CvResult kfold_cv_kernel(const Matrix& features, const LabelEncoding& enc,
                                const std::vector<double>& betas, int k,
                                const TriNmfConfig& cfg, Criterion criterion,
                                std::uint64_t seed = 0) {
    const Index n = features.cols();
    if (k < 2 || k > n) throw config_error("kfold_cv_kernel: k must lie in [2, N]");
    if (betas.empty()) throw config_error("kfold_cv_kernel: empty beta list");
    if (enc.columns.cols() != n)
        throw shape_error("kfold_cv_kernel: label columns do not match sample count");

    const std::vector<Index> truth = detail::argmax_labels(enc.columns);
    const bool hard = detail::is_hard_encoding(enc);
    const auto folds = detail::make_folds(n, k, seed, hard ? &truth : nullptr);

    std::vector<Index> all(static_cast<std::size_t>(n));
    std::iota(all.begin(), all.end(), Index{0});
    const Matrix d2 = detail::pairwise_sq_dist(features, features);
    const TriNmfConfig fit_cfg = detail::resolve_rank(cfg, enc.columns.rows());

    CvResult result;
    result.criterion = criterion;
    for (double beta : betas) {
        const Matrix kmat = (-beta * d2).array().exp().matrix();
        double loss_sum = 0.0, acc_sum = 0.0;
        int acc_folds = 0;
        for (const auto& held : folds) {
            std::vector<Index> train;
            std::set_difference(all.begin(), all.end(), held.begin(), held.end(),
                                std::back_inserter(train));
            const NonNegMatrix a_tr(detail::select_block(kmat, train, train),
                                    NonNegMatrix::unchecked);
            const NonNegMatrix y_tr(detail::select_columns(enc.columns.data(), train),
                                    NonNegMatrix::unchecked);
            auto [model, report] = fit(y_tr, a_tr, fit_cfg);
            model.class_names = enc.class_names;

            const NonNegMatrix a_val(detail::select_block(kmat, train, held),
                                     NonNegMatrix::unchecked);
            const NonNegMatrix y_val(detail::select_columns(enc.columns.data(), held),
                                     NonNegMatrix::unchecked);
            loss_sum += frobenius_loss(y_val, reconstruct(model, a_val));

            const auto held_truth = detail::select(truth, held);
            const bool all_classes =
                [&] {
                    std::vector<bool> present(static_cast<std::size_t>(enc.columns.rows()), false);
                    for (Index t : held_truth) present[static_cast<std::size_t>(t)] = true;
                    return std::all_of(present.begin(), present.end(), [](bool b) { return b; });
                }();
            if (!all_classes && criterion == Criterion::Accuracy) {
                std::cerr << "nmflab: warning: fold missing a class, skipped for accuracy\n";
            }
            if (all_classes) {
                const auto pred = membership_probabilities(model, a_val);
                int correct = 0;
                for (std::size_t i = 0; i < held_truth.size(); ++i)
                    if (detail::class_index(pred.predicted_class[i], enc.class_names) ==
                        held_truth[i])
                        ++correct;
                acc_sum += static_cast<double>(correct) / static_cast<double>(held.size());
                ++acc_folds;
            }
        }
        CvCandidate cand;
        cand.spec.kind = DesignKind::GaussianFull;
        cand.spec.beta = beta;
        cand.spec.seed = seed;
        cand.beta = beta;
        cand.mean_loss = loss_sum / static_cast<double>(k);
        cand.mean_accuracy = acc_folds > 0 ? acc_sum / static_cast<double>(acc_folds) : 0.0;
        result.candidates.push_back(cand);
    }
    result.chosen = detail::choose_candidate(result.candidates, criterion);
    if (result.chosen < 0) throw degenerate_error("kfold_cv_kernel: no usable candidate");
    return result;
}

/// Materialize a DesignSpec against concrete training samples.
inline KernelDesign resolve_design(const DesignSpec& spec, const Matrix& train_features) {
    switch (spec.kind) {
    case DesignKind::Direct:
        return KernelDesign::direct(train_features.rows());
    case DesignKind::GaussianFull: {
        const double beta = spec.beta > 0.0
                                ? spec.beta
                                : spec.beta_scale * median_heuristic_beta(train_features);
        return KernelDesign::gaussian(train_features, beta);
    }
    case DesignKind::GaussianNystrom: {
        const double beta = spec.beta > 0.0
                                ? spec.beta
                                : spec.beta_scale * median_heuristic_beta(train_features);
        Matrix lm = select_landmarks(train_features, spec.landmarks, spec.seed);
        return KernelDesign::gaussian(std::move(lm), beta, DesignKind::GaussianNystrom);
    }
    }
    throw config_error("resolve_design: unknown design kind");
}

struct GridSearchResult {
    CvResult cv;
    TriNmfModel model;   // winner refit on train + valid
    FitReport report;
};

/// Fit each candidate on train, score on valid, pick the best per the
/// criterion, then refit the winner on train+valid (validation labels
/// enter the refit hard-encoded).
inline GridSearchResult grid_search(const Matrix& feat_train, const LabelEncoding& enc_train,
                                    const Matrix& feat_valid,
                                    const std::vector<std::string>& labels_valid,
                                    const std::vector<DesignSpec>& specs,
                                    const TriNmfConfig& cfg, Criterion criterion) {
    if (specs.empty()) throw config_error("grid_search: empty candidate list");
    if (feat_train.cols() != enc_train.columns.cols())
        throw shape_error("grid_search: training features and labels disagree");
    if (feat_valid.cols() != static_cast<Index>(labels_valid.size()))
        throw shape_error("grid_search: validation features and labels disagree");

    const LabelEncoding enc_valid = encode_hard(labels_valid, enc_train.class_names);
    const TriNmfConfig fit_cfg = detail::resolve_rank(cfg, enc_train.columns.rows());

    CvResult cv;
    cv.criterion = criterion;
    std::vector<KernelDesign> designs;
    for (const auto& spec : specs) {
        CvCandidate cand;
        cand.spec = spec;
        try {
            KernelDesign design = resolve_design(spec, feat_train);
            cand.beta = design.beta;
            const NonNegMatrix a_tr = build_covariates(design, feat_train);
            auto [model, report] = fit(enc_train.columns, a_tr, fit_cfg);
            model.class_names = enc_train.class_names;
            model.design = design;

            const NonNegMatrix a_val = build_covariates(design, feat_valid);
            cand.mean_loss = frobenius_loss(enc_valid.columns, reconstruct(model, a_val));
            const auto pred = membership_probabilities(model, a_val);
            cand.mean_accuracy = confusion_matrix(pred, labels_valid).accuracy;
            designs.push_back(std::move(design));
        } catch (const error& e) {
            std::cerr << "nmflab: warning: candidate failed: " << e.what() << "\n";
            cand.failed = true;
            designs.push_back(KernelDesign{});
        }
        cv.candidates.push_back(cand);
    }
    cv.chosen = detail::choose_candidate(cv.candidates, criterion);
    if (cv.chosen < 0) throw degenerate_error("grid_search: all candidates failed");

    // refit on train + valid with the winning concrete bandwidth
    const auto& winner = cv.candidates[static_cast<std::size_t>(cv.chosen)];
    Matrix feat_all(feat_train.rows(), feat_train.cols() + feat_valid.cols());
    feat_all << feat_train, feat_valid;
    Matrix y_all(enc_train.columns.rows(), feat_all.cols());
    y_all << enc_train.columns.data(), enc_valid.columns.data();

    DesignSpec refit_spec = winner.spec;
    refit_spec.beta = winner.beta; // keep the resolved value, do not re-run the heuristic
    KernelDesign design = resolve_design(refit_spec, feat_all);
    const NonNegMatrix a_all = build_covariates(design, feat_all);
    auto [model, report] =
        fit(NonNegMatrix(std::move(y_all), NonNegMatrix::unchecked), a_all, fit_cfg);
    model.class_names = enc_train.class_names;
    model.design = std::move(design);
    return {std::move(cv), std::move(model), std::move(report)};
}

struct PipelineSpec {
    std::vector<DesignSpec> designs;
    TriNmfConfig cfg;
    Criterion criterion = Criterion::Accuracy;
    double soft_r = 1.0; // training-label smoothing; 1 = hard labels
};

struct EvalResult {
    double mean_accuracy = 0.0;
    double sd_accuracy = 0.0;
    std::vector<double> per_repeat;
    Eigen::MatrixXi confusion; // summed over the repeats' test sets
    std::vector<std::string> class_names;
};

/// Test accuracy for one split; repeat seeds are base_seed + repeat index.
using Pipeline = std::function<double(const SplitIndices&, std::uint64_t)>;

/// Generic protocol driver: split -> pipeline -> aggregate mean and
/// sample standard deviation (0 by convention for a single repeat).
inline EvalResult repeated_evaluation(const std::vector<std::string>& labels,
                                      SplitSpec spec, int repeats, const Pipeline& pipe) {
    if (repeats < 1) throw config_error("repeated_evaluation: repeats must be >= 1");
    EvalResult out;
    const std::uint64_t base = spec.seed;
    for (int rep = 0; rep < repeats; ++rep) {
        spec.seed = base + static_cast<std::uint64_t>(rep);
        try {
            out.per_repeat.push_back(pipe(stratified_split(labels, spec), spec.seed));
        } catch (const error& e) {
            throw error(e.code(), "repeat " + std::to_string(rep) + ": " + e.what());
        }
    }
    const double n = static_cast<double>(repeats);
    out.mean_accuracy =
        std::accumulate(out.per_repeat.begin(), out.per_repeat.end(), 0.0) / n;
    if (repeats > 1) {
        double ss = 0.0;
        for (double a : out.per_repeat) ss += (a - out.mean_accuracy) * (a - out.mean_accuracy);
        out.sd_accuracy = std::sqrt(ss / (n - 1.0));
    }
    return out;
}

/// Full NMF-LAB protocol: stratified split, label encoding (soft ratio r
/// on the training part only), grid search with refit on train+valid,
/// test-set accuracy. Also accumulates the test confusion matrix.
inline EvalResult repeated_evaluation(const Matrix& features,
                                      const std::vector<std::string>& labels,
                                      const SplitSpec& spec, int repeats,
                                      const PipelineSpec& pipe) {
    const auto class_names = unique_classes(labels);
    const Index p = static_cast<Index>(class_names.size());
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(p, p);

    auto run_one = [&](const SplitIndices& split, std::uint64_t) {
        const auto train_labels = detail::select(labels, split.train);
        const auto valid_labels = detail::select(labels, split.valid);
        const auto test_labels = detail::select(labels, split.test);
        const LabelEncoding enc_train =
            pipe.soft_r < 1.0 ? encode_soft(train_labels, class_names, pipe.soft_r)
                              : encode_hard(train_labels, class_names);
        auto gs = grid_search(detail::select_columns(features, split.train), enc_train,
                              detail::select_columns(features, split.valid), valid_labels,
                              pipe.designs, pipe.cfg, pipe.criterion);
        const NonNegMatrix a_test =
            build_covariates(gs.model.design, detail::select_columns(features, split.test));
        const auto pred = membership_probabilities(gs.model, a_test);
        const auto cm = confusion_matrix(pred, test_labels);
        confusion += cm.counts;
        return cm.accuracy;
    };

    EvalResult out = repeated_evaluation(labels, spec, repeats, run_one);
    out.confusion = std::move(confusion);
    out.class_names = class_names;
    return out;
}

} // namespace nmflab
