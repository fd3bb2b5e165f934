// nmflab command-line frontend: train / predict / cv / evaluate.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nmflab/nmflab.hpp"

namespace {

using namespace nmflab;

std::string resolve_data_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) return path;
    if (const char* dir = std::getenv("NMFLAB_DATA_DIR")) {
        const fs::path alt = fs::path(dir) / path;
        if (fs::exists(alt)) return alt.string();
    }
    return path; // let the loader report the error
}

void write_text_atomic(const std::string& path, const std::string& text) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw data_error("cannot write '" + tmp + "'");
        f << text;
        if (!f.good()) throw data_error("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw data_error("cannot rename '" + tmp + "' to '" + path + "'");
}

std::string fmt(double v, const char* spec = "%.15g") {
    char buf[40];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

DesignKind parse_design(const std::string& s) {
    if (s == "direct") return DesignKind::Direct;
    if (s == "kernel") return DesignKind::GaussianFull;
    if (s == "nystrom") return DesignKind::GaussianNystrom;
    throw config_error("unknown design '" + s + "'");
}

double parse_beta(const std::string& s, const Matrix& samples) {
    if (s == "median") return median_heuristic_beta(samples);
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos == s.size() && v > 0.0) return v;
    } catch (const std::exception&) {
    }
    throw config_error("--beta expects 'median' or a positive number, got '" + s + "'");
}

InitMode parse_init(const std::string& s, Index rank, Index p) {
    if (s == "identity") return InitMode::Identity;
    if (s == "kmeans") return InitMode::KMeansCentroids;
    if (s == "random") return InitMode::Random;
    if (s == "auto") return rank == p ? InitMode::Identity : InitMode::KMeansCentroids;
    throw config_error("unknown init mode '" + s + "'");
}

Criterion parse_criterion(const std::string& s) {
    if (s == "loss") return Criterion::FrobeniusLoss;
    if (s == "accuracy") return Criterion::Accuracy;
    throw config_error("--criterion expects 'loss' or 'accuracy'");
}

std::vector<double> parse_beta_grid(const std::string& spec, const Matrix& samples) {
    if (spec == "coarse") return beta_grid(median_heuristic_beta(samples));
    if (spec == "fine") {
        const double bmed = median_heuristic_beta(samples);
        std::vector<double> grid;
        for (int i = 0; i < 16; ++i)
            grid.push_back(bmed * std::pow(10.0, -2.0 + 3.0 * i / 15.0));
        return grid;
    }
    std::vector<double> grid;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const double v = std::stod(tok);
        if (!(v > 0.0)) throw config_error("beta grid values must be positive");
        grid.push_back(v);
    }
    if (grid.empty()) throw config_error("empty --beta-grid");
    return grid;
}

struct CommonOpts {
    std::string data;
    std::string label_column = "label";
    bool no_scale = false;
    std::uint64_t seed = 0;
    int max_iter = 5000;
    double tol = 1e-6;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool needs_labels = true) {
    cmd->add_option("--data", o.data, "input CSV file")->required();
    if (needs_labels)
        cmd->add_option("--label-column", o.label_column, "name of the class column");
    cmd->add_flag("--no-scale", o.no_scale, "skip min-max scaling of features");
    cmd->add_option("--seed", o.seed, "base random seed");
    cmd->add_option("--max-iter", o.max_iter, "maximum multiplicative-update sweeps");
    cmd->add_option("--tol", o.tol, "relative loss-change stopping threshold");
}

TriNmfConfig make_cfg(const CommonOpts& o, Index rank, const std::string& init, Index p) {
    TriNmfConfig cfg;
    cfg.rank_q = rank;
    cfg.max_iter = o.max_iter;
    cfg.rel_tol = o.tol;
    cfg.seed = o.seed;
    cfg.init_mode = parse_init(init, rank, p);
    return cfg;
}

void print_report(const FitReport& report) {
    std::cout << "final_loss " << fmt(report.final_loss) << "\n"
              << "iterations " << report.iterations_run << "\n"
              << "converged " << (report.converged ? "yes" : "no") << "\n";
    if (report.b_column_sums.size() > 0) {
        const double mean = report.b_column_sums.mean();
        std::cout << "b_column_sum_mean " << fmt(mean) << "\n";
    }
}

int cmd_train(const CommonOpts& o, const std::string& mode, const std::string& design_name,
              const std::string& beta_spec, Index landmarks, Index rank, double soft_r,
              const std::string& init, const std::string& output) {
    Dataset ds = load_csv(resolve_data_path(o.data), o.label_column, !o.no_scale);
    if (ds.dropped_rows > 0)
        std::cerr << "nmflab: dropped " << ds.dropped_rows << " rows with missing values\n";
    if (ds.labels.empty()) throw config_error("training requires a label column");

    ModelFile mf;
    mf.seed = o.seed;
    mf.feature_names = ds.feature_names;
    mf.scaling = ds.scaling;

    if (mode == "forward") {
        // Y = observed feature vectors (raw), A = one-hot class covariates
        Dataset raw = load_csv(resolve_data_path(o.data), o.label_column, false);
        const LabelEncoding enc = encode_hard(raw.labels);
        const NonNegMatrix y(raw.samples);
        const Index q = rank > 0 ? rank : std::min<Index>(enc.columns.rows(), y.rows());
        TriNmfConfig cfg = make_cfg(o, q, init, y.rows());
        auto [model, report] = fit(y, enc.columns, cfg);
        model.class_names = enc.class_names;
        model.design = KernelDesign::direct(enc.columns.rows());
        mf.mode = "forward";
        mf.scaling.clear();
        mf.model = std::move(model);
        mf.final_loss = report.final_loss;
        mf.iterations = report.iterations_run;
        save_model(mf, output);
        print_report(report);
        std::cout << "model written to " << output << "\n";
        return 0;
    }

    const auto class_names = unique_classes(ds.labels);
    const Index p = static_cast<Index>(class_names.size());
    const LabelEncoding enc = soft_r < 1.0 ? encode_soft(ds.labels, class_names, soft_r)
                                           : encode_hard(ds.labels, class_names);

    KernelDesign design;
    const DesignKind kind = parse_design(design_name);
    if (kind == DesignKind::Direct) {
        design = KernelDesign::direct(ds.samples.rows());
    } else if (kind == DesignKind::GaussianFull) {
        design = KernelDesign::gaussian(ds.samples, parse_beta(beta_spec, ds.samples));
    } else {
        Matrix lm = select_landmarks(ds.samples, landmarks, o.seed);
        design = KernelDesign::gaussian(std::move(lm), parse_beta(beta_spec, ds.samples),
                                        DesignKind::GaussianNystrom);
    }

    const NonNegMatrix a = build_covariates(design, ds.samples);
    const Index q = rank > 0 ? rank : p;
    TriNmfConfig cfg = make_cfg(o, q, init, p);
    auto [model, report] = fit(enc.columns, a, cfg);
    model.class_names = class_names;
    model.design = std::move(design);

    if (q == p && !assign_bases_to_classes(model.x).is_permutation)
        std::cerr << "nmflab: warning: basis-to-class assignment is not a permutation; "
                     "the fitted X is far from a permuted identity\n";

    mf.mode = "label";
    mf.model = std::move(model);
    mf.final_loss = report.final_loss;
    mf.iterations = report.iterations_run;
    save_model(mf, output);
    print_report(report);
    std::cout << "model written to " << output << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data_path,
                const std::string& label_column, const std::string& output) {
    const ModelFile mf = load_model(resolve_data_path(model_path));
    Dataset ds = load_csv(resolve_data_path(data_path), label_column, false, true);

    if (!ds.feature_names.empty() && !mf.feature_names.empty() &&
        ds.feature_names != mf.feature_names)
        throw data_error("feature columns do not match the model's training features");

    std::ostringstream os;
    if (mf.mode == "forward") {
        os << "sample_id";
        for (const auto& n : mf.feature_names) os << ',' << n;
        os << '\n';
        if (ds.samples.cols() > 0) {
            const NonNegMatrix a = build_covariates(mf.model.design, ds.samples);
            const NonNegMatrix yhat = reconstruct(mf.model, a);
            for (Index j = 0; j < yhat.cols(); ++j) {
                os << j;
                for (Index i = 0; i < yhat.rows(); ++i) os << ',' << fmt(yhat(i, j));
                os << '\n';
            }
        }
        write_text_atomic(output, os.str());
        std::cout << "predictions written to " << output << "\n";
        return 0;
    }

    os << "sample_id";
    for (const auto& n : mf.model.class_names) os << ',' << n;
    os << ",predicted\n";
    if (ds.samples.cols() > 0) {
        const Matrix scaled = apply_scaling(ds.samples, mf.scaling);
        const NonNegMatrix a = build_covariates(mf.model.design, scaled);
        const ProbPrediction pred = membership_probabilities(mf.model, a);
        for (Index j = 0; j < pred.probabilities.cols(); ++j) {
            os << j;
            for (Index i = 0; i < pred.probabilities.rows(); ++i)
                os << ',' << fmt(pred.probabilities(i, j));
            os << ',' << pred.predicted_class[static_cast<std::size_t>(j)] << '\n';
        }
    }
    write_text_atomic(output, os.str());
    std::cout << "predictions written to " << output << "\n";
    return 0;
}

int cmd_cv(const CommonOpts& o, int folds, const std::string& grid_spec,
           const std::string& criterion_name, double soft_r, const std::string& output) {
    Dataset ds = load_csv(resolve_data_path(o.data), o.label_column, !o.no_scale);
    if (ds.labels.empty()) throw config_error("cv requires a label column");
    const auto class_names = unique_classes(ds.labels);
    const LabelEncoding enc = soft_r < 1.0 ? encode_soft(ds.labels, class_names, soft_r)
                                           : encode_hard(ds.labels, class_names);
    const auto grid = parse_beta_grid(grid_spec, ds.samples);
    const Criterion crit = parse_criterion(criterion_name);

    TriNmfConfig cfg = make_cfg(o, static_cast<Index>(class_names.size()), "auto",
                                static_cast<Index>(class_names.size()));
    const CvResult cv = kfold_cv_kernel(ds.samples, enc, grid, folds, cfg, crit, o.seed);

    std::ostringstream os;
    os << "beta,mean_loss,mean_accuracy,chosen\n";
    for (std::size_t i = 0; i < cv.candidates.size(); ++i) {
        const auto& c = cv.candidates[i];
        os << fmt(c.beta) << ',' << fmt(c.mean_loss) << ',' << fmt(c.mean_accuracy) << ','
           << (static_cast<int>(i) == cv.chosen ? 1 : 0) << '\n';
    }
    std::cout << os.str();
    std::cout << "chosen beta "
              << fmt(cv.candidates[static_cast<std::size_t>(cv.chosen)].beta) << "\n";
    if (!output.empty()) {
        write_text_atomic(output, os.str());
        std::cout << "report written to " << output << "\n";
    }
    return 0;
}

int cmd_evaluate(const CommonOpts& o, const std::string& design_name, int repeats,
                 double soft_r, const std::string& criterion_name, Index landmarks,
                 bool full_data, const std::string& confusion_out) {
    Dataset ds = load_csv(resolve_data_path(o.data), o.label_column, !o.no_scale);
    if (ds.labels.empty()) throw config_error("evaluate requires a label column");
    const auto class_names = unique_classes(ds.labels);
    const Index p = static_cast<Index>(class_names.size());
    const DesignKind kind = parse_design(design_name);
    const Criterion crit = parse_criterion(criterion_name);
    TriNmfConfig cfg = make_cfg(o, p, "auto", p);

    Eigen::MatrixXi confusion;
    double mean = 0.0, sd = 0.0;

    if (full_data) {
        // Fit and score on the whole dataset (the Table-2-style protocol).
        const LabelEncoding enc = soft_r < 1.0 ? encode_soft(ds.labels, class_names, soft_r)
                                               : encode_hard(ds.labels, class_names);
        KernelDesign design;
        if (kind == DesignKind::Direct) {
            design = KernelDesign::direct(ds.samples.rows());
        } else {
            const auto grid = parse_beta_grid("fine", ds.samples);
            const CvResult cv =
                kfold_cv_kernel(ds.samples, enc, grid, 5, cfg, crit, o.seed);
            const double beta = cv.candidates[static_cast<std::size_t>(cv.chosen)].beta;
            std::cout << "cv_beta " << fmt(beta) << "\n";
            Matrix anchors = kind == DesignKind::GaussianNystrom
                                 ? select_landmarks(ds.samples, landmarks, o.seed)
                                 : ds.samples;
            design = KernelDesign::gaussian(std::move(anchors), beta, kind);
        }
        const NonNegMatrix a = build_covariates(design, ds.samples);
        auto [model, report] = fit(enc.columns, a, cfg);
        model.class_names = class_names;
        const auto pred = membership_probabilities(model, a);
        const auto cm = confusion_matrix(pred, ds.labels);
        confusion = cm.counts;
        mean = cm.accuracy;
    } else {
        PipelineSpec pipe;
        pipe.cfg = cfg;
        pipe.criterion = crit;
        pipe.soft_r = soft_r;
        if (kind == DesignKind::Direct) {
            DesignSpec spec;
            spec.kind = DesignKind::Direct;
            spec.seed = o.seed;
            pipe.designs = {spec};
        } else {
            for (double scale : {1e-2, 1e-1, 1.0, 10.0}) {
                DesignSpec spec;
                spec.kind = kind;
                spec.beta_scale = scale; // median heuristic per split, times this
                spec.landmarks = landmarks;
                spec.seed = o.seed;
                pipe.designs.push_back(spec);
            }
        }
        SplitSpec split;
        split.seed = o.seed;
        const EvalResult res = repeated_evaluation(ds.samples, ds.labels, split, repeats, pipe);
        mean = res.mean_accuracy;
        sd = res.sd_accuracy;
        confusion = res.confusion;
    }

    std::cout << "accuracy_mean " << fmt(mean * 100.0, "%.3f") << "\n";
    std::cout << "accuracy_sd " << fmt(sd * 100.0, "%.3f") << "\n";

    std::ostringstream os;
    os << "predicted";
    for (const auto& n : class_names) os << ",true_" << n;
    os << '\n';
    for (Index r = 0; r < confusion.rows(); ++r) {
        os << class_names[static_cast<std::size_t>(r)];
        for (Index c = 0; c < confusion.cols(); ++c) os << ',' << confusion(r, c);
        os << '\n';
    }
    std::cout << os.str();
    if (!confusion_out.empty()) {
        write_text_atomic(confusion_out, os.str());
        std::cout << "confusion matrix written to " << confusion_out << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"NMF with known covariates: tri-factorization regression and "
                 "label-matrix classification"};
    app.require_subcommand(1);

    CommonOpts train_o, cv_o, eval_o;
    std::string mode = "label", design = "kernel", beta = "median", init = "auto";
    std::string output = "model.nmflab";
    Index landmarks = 500, rank = 0;
    double soft_r = 1.0;

    auto* train = app.add_subcommand("train", "fit a model and write a model file");
    add_common(train, train_o);
    train->add_option("--mode", mode, "forward (regression) or label (classification)");
    train->add_option("--design", design, "direct | kernel | nystrom");
    train->add_option("--beta", beta, "'median' or a positive bandwidth value");
    train->add_option("--landmarks", landmarks, "landmark count for nystrom");
    train->add_option("--rank", rank, "factorization rank Q (default: class count)");
    train->add_option("--soft-r", soft_r, "soft-label ratio r in [0,1], 1 = hard");
    train->add_option("--init", init, "identity | kmeans | random | auto");
    train->add_option("-o,--output", output, "model file path");

    std::string model_path, pred_data, pred_labels, pred_out = "predictions.csv";
    auto* predict = app.add_subcommand("predict", "per-sample class probabilities");
    predict->add_option("--model", model_path, "model file")->required();
    predict->add_option("--data", pred_data, "input CSV file")->required();
    predict->add_option("--label-column", pred_labels,
                        "label column to ignore in the input, if present");
    predict->add_option("-o,--output", pred_out, "output CSV path");

    int folds = 5;
    std::string grid = "coarse", criterion = "loss", cv_out;
    double cv_soft_r = 1.0;
    auto* cv = app.add_subcommand("cv", "leakage-safe k-fold bandwidth selection");
    add_common(cv, cv_o);
    cv->add_option("--folds", folds, "number of folds");
    cv->add_option("--beta-grid", grid, "'coarse', 'fine', or comma-separated betas");
    cv->add_option("--criterion", criterion, "loss | accuracy");
    cv->add_option("--soft-r", cv_soft_r, "soft-label ratio for the training encoding");
    cv->add_option("-o,--output", cv_out, "report CSV path");

    int repeats = 50;
    std::string eval_design = "kernel", eval_criterion = "accuracy", confusion_out;
    double eval_soft_r = 1.0;
    Index eval_landmarks = 500;
    bool full_data = false;
    auto* evaluate = app.add_subcommand("evaluate", "repeated split/HPO/test protocol");
    add_common(evaluate, eval_o);
    evaluate->add_option("--design", eval_design, "direct | kernel | nystrom");
    evaluate->add_option("--repeats", repeats, "number of repeated splits");
    evaluate->add_option("--soft-r", eval_soft_r, "soft-label ratio for training labels");
    evaluate->add_option("--criterion", eval_criterion, "loss | accuracy");
    evaluate->add_option("--landmarks", eval_landmarks, "landmark count for nystrom");
    evaluate->add_flag("--full-data", full_data, "fit and score on the full dataset");
    evaluate->add_option("-o,--output", confusion_out, "confusion matrix CSV path");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed())
            return cmd_train(train_o, mode, design, beta, landmarks, rank, soft_r, init,
                             output);
        if (predict->parsed())
            return cmd_predict(model_path, pred_data, pred_labels, pred_out);
        if (cv->parsed())
            return cmd_cv(cv_o, folds, grid, criterion, cv_soft_r, cv_out);
        if (evaluate->parsed())
            return cmd_evaluate(eval_o, eval_design, repeats, eval_soft_r, eval_criterion,
                                eval_landmarks, full_data, confusion_out);
    } catch (const nmflab::error& e) {
        std::cerr << "error[" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error[internal]: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
