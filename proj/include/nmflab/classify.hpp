#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "matrix.hpp"
#include "trinmf.hpp"

// The inverse (label-matrix) layer: class labels as simplex columns,
// coefficient normalization into class-membership probabilities, and
// prediction scoring.

namespace nmflab {

/// Mapping between class names and simplex-valued label columns.
struct LabelEncoding {
    std::vector<std::string> class_names; // row order of `columns`
    NonNegMatrix columns;                 // P x N, every column on the simplex
};

/// Class names in first-appearance order.
inline std::vector<std::string> unique_classes(const std::vector<std::string>& labels) {
    std::vector<std::string> names;
    for (const auto& l : labels)
        if (std::find(names.begin(), names.end(), l) == names.end())
            names.push_back(l);
    return names;
}

namespace detail {

inline Index class_index(const std::string& label,
                         const std::vector<std::string>& class_names) {
    const auto it = std::find(class_names.begin(), class_names.end(), label);
    if (it == class_names.end())
        throw domain_error("unknown class label '" + label + "'");
    return static_cast<Index>(it - class_names.begin());
}

} // namespace detail

/// One-hot columns in class_names order.
inline LabelEncoding encode_hard(const std::vector<std::string>& labels,
                                 std::vector<std::string> class_names) {
    const Index p = static_cast<Index>(class_names.size());
    const Index n = static_cast<Index>(labels.size());
    if (p < 1 || n < 1)
        throw config_error("encode_hard: empty class list or label list");
    Matrix cols = Matrix::Zero(p, n);
    for (Index j = 0; j < n; ++j)
        cols(detail::class_index(labels[static_cast<std::size_t>(j)], class_names), j) = 1.0;
    return {std::move(class_names), NonNegMatrix(std::move(cols), NonNegMatrix::unchecked)};
}

inline LabelEncoding encode_hard(const std::vector<std::string>& labels) {
    return encode_hard(labels, unique_classes(labels));
}

/// Ratio-r smoothed columns: the true class gets r, each of the other
/// P-1 classes gets (1-r)/(P-1). r = 1 reproduces encode_hard bitwise.
inline LabelEncoding encode_soft(const std::vector<std::string>& labels,
                                 std::vector<std::string> class_names, double r) {
    const Index p = static_cast<Index>(class_names.size());
    if (r < 0.0 || r > 1.0)
        throw config_error("encode_soft: r must lie in [0, 1]");
    if (p < 2 && r < 1.0)
        throw config_error("encode_soft: P >= 2 required when r < 1");
    if (r == 1.0) return encode_hard(labels, std::move(class_names));

    const Index n = static_cast<Index>(labels.size());
    const double rest = (1.0 - r) / static_cast<double>(p - 1);
    Matrix cols = Matrix::Constant(p, n, rest);
    for (Index j = 0; j < n; ++j)
        cols(detail::class_index(labels[static_cast<std::size_t>(j)], class_names), j) = r;
    return {std::move(class_names), NonNegMatrix(std::move(cols), NonNegMatrix::unchecked)};
}

/// Uniform columns (1/P, ..., 1/P) for unlabeled samples.
inline LabelEncoding encode_unlabeled(Index count, std::vector<std::string> class_names) {
    const Index p = static_cast<Index>(class_names.size());
    if (p < 1 || count < 1)
        throw config_error("encode_unlabeled: empty class list or zero count");
    Matrix cols = Matrix::Constant(p, count, 1.0 / static_cast<double>(p));
    return {std::move(class_names), NonNegMatrix(std::move(cols), NonNegMatrix::unchecked)};
}

/// Per-sample class probabilities plus the argmax class. Ties break toward
/// the lowest class index.
struct ProbPrediction {
    NonNegMatrix probabilities; // P x N*, columns on the simplex
    std::vector<std::string> predicted_class;
    std::vector<std::string> class_names;
};

namespace detail {

inline std::vector<std::string> default_class_names(Index p) {
    std::vector<std::string> names;
    names.reserve(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i)
        names.push_back("class" + std::to_string(i + 1));
    return names;
}

} // namespace detail

/// B = Theta a_new, columns normalized onto the simplex (zero columns
/// become uniform), then Ytilde = X Btilde. Because X is column-stochastic
/// and Btilde columns are stochastic, every output column lies on the
/// simplex.
inline ProbPrediction membership_probabilities(const TriNmfModel& model,
                                               const NonNegMatrix& a_new) {
    if (a_new.rows() != model.theta.cols())
        throw shape_error("membership_probabilities: covariates have " +
                          std::to_string(a_new.rows()) + " rows, model expects " +
                          std::to_string(model.theta.cols()));
    const NonNegMatrix b(model.theta.data() * a_new.data(), NonNegMatrix::unchecked);
    const NonNegMatrix b_tilde = column_normalize(b).matrix;
    Matrix probs = model.x.data() * b_tilde.data();

    std::vector<std::string> names = model.class_names.empty()
                                         ? detail::default_class_names(model.x.rows())
                                         : model.class_names;
    if (static_cast<Index>(names.size()) != model.x.rows())
        throw config_error("membership_probabilities: class name count does not match P");

    std::vector<std::string> predicted;
    predicted.reserve(static_cast<std::size_t>(probs.cols()));
    for (Index j = 0; j < probs.cols(); ++j) {
        Index best = 0;
        probs.col(j).maxCoeff(&best); // Eigen returns the first maximum
        predicted.push_back(names[static_cast<std::size_t>(best)]);
    }
    return {NonNegMatrix(std::move(probs), NonNegMatrix::unchecked), std::move(predicted),
            std::move(names)};
}

/// P x P counts, rows = predicted, columns = true; accuracy = trace/total.
struct ConfusionMatrix {
    Eigen::MatrixXi counts;
    double accuracy = 0.0;
    std::vector<std::string> class_names;
};

inline ConfusionMatrix confusion_matrix(const ProbPrediction& pred,
                                        const std::vector<std::string>& truth) {
    if (pred.predicted_class.size() != truth.size())
        throw shape_error("confusion_matrix: " + std::to_string(pred.predicted_class.size()) +
                          " predictions vs " + std::to_string(truth.size()) + " truths");
    const Index p = static_cast<Index>(pred.class_names.size());
    Eigen::MatrixXi counts = Eigen::MatrixXi::Zero(p, p);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const Index pi = detail::class_index(pred.predicted_class[i], pred.class_names);
        const Index ti = detail::class_index(truth[i], pred.class_names);
        ++counts(pi, ti);
    }
    const double acc = truth.empty() ? 0.0
                                     : static_cast<double>(counts.trace()) /
                                           static_cast<double>(truth.size());
    return {std::move(counts), acc, pred.class_names};
}

/// Assign each basis column the class of its largest entry (used for
/// reporting when Q == P). `is_permutation` is false when two bases claim
/// the same class, i.e. X is far from a permuted identity.
struct BasisAssignment {
    std::vector<Index> basis_class;
    bool is_permutation = false;
};

inline BasisAssignment assign_bases_to_classes(const NonNegMatrix& x) {
    BasisAssignment out;
    std::vector<bool> seen(static_cast<std::size_t>(x.rows()), false);
    out.is_permutation = x.rows() == x.cols();
    for (Index q = 0; q < x.cols(); ++q) {
        Index best = 0;
        x.data().col(q).maxCoeff(&best);
        out.basis_class.push_back(best);
        if (seen[static_cast<std::size_t>(best)])
            out.is_permutation = false;
        seen[static_cast<std::size_t>(best)] = true;
    }
    return out;
}

} // namespace nmflab
