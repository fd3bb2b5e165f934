#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "dataset.hpp"
#include "trinmf.hpp"

// Model persistence. Self-describing line-oriented text format; matrix
// entries are written with 17 significant digits so that load(save(m))
// reproduces predictions bitwise.
//
//   nmflab-model 1
//   mode <label|forward>
//   classes <P> <name...>
//   design <direct|kernel|nystrom>
//   beta <value>
//   feature_dim <d>
//   scaling <d> (<min> <max>)*d          # line absent when data was unscaled
//   anchors <d> <M> followed by d rows   # Gaussian kinds only
//   x <P> <Q> followed by P rows
//   theta <Q> <R> followed by Q rows
//   meta final_loss <v> iterations <n> seed <s>

namespace nmflab {

struct ModelFile {
    int version = 1;
    std::string mode = "label"; // "label" or "forward"
    TriNmfModel model;
    std::vector<std::string> feature_names;
    std::vector<std::pair<double, double>> scaling;
    double final_loss = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
};

namespace detail {

inline std::string fmt17(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_matrix(std::ostream& os, const std::string& tag, const Matrix& m) {
    os << tag << ' ' << m.rows() << ' ' << m.cols() << '\n';
    for (Index r = 0; r < m.rows(); ++r) {
        for (Index c = 0; c < m.cols(); ++c)
            os << (c ? " " : "") << fmt17(m(r, c));
        os << '\n';
    }
}

inline Matrix read_matrix(std::istream& is, const std::string& tag) {
    std::string got;
    Index rows = 0, cols = 0;
    if (!(is >> got >> rows >> cols) || got != tag)
        throw data_error("model file: expected '" + tag + "' section");
    if (rows < 1 || cols < 1)
        throw data_error("model file: bad dimensions for '" + tag + "'");
    Matrix m(rows, cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            if (!(is >> m(r, c)))
                throw data_error("model file: truncated '" + tag + "' matrix");
    return m;
}

inline std::string design_name(DesignKind kind) {
    switch (kind) {
    case DesignKind::Direct: return "direct";
    case DesignKind::GaussianFull: return "kernel";
    case DesignKind::GaussianNystrom: return "nystrom";
    }
    return "direct";
}

inline DesignKind design_from_name(const std::string& name) {
    if (name == "direct") return DesignKind::Direct;
    if (name == "kernel") return DesignKind::GaussianFull;
    if (name == "nystrom") return DesignKind::GaussianNystrom;
    throw data_error("model file: unknown design '" + name + "'");
}

} // namespace detail

inline void save_model(const ModelFile& mf, const std::string& path) {
    std::ostringstream os;
    os << "nmflab-model " << mf.version << '\n';
    os << "mode " << mf.mode << '\n';
    os << "classes " << mf.model.class_names.size();
    for (const auto& n : mf.model.class_names) os << ' ' << n;
    os << '\n';
    os << "design " << detail::design_name(mf.model.design.kind) << '\n';
    os << "beta " << detail::fmt17(mf.model.design.beta) << '\n';
    os << "feature_dim " << mf.model.design.feature_dim << '\n';
    os << "features " << mf.feature_names.size();
    for (const auto& n : mf.feature_names) os << ' ' << n;
    os << '\n';
    if (!mf.scaling.empty()) {
        os << "scaling " << mf.scaling.size();
        for (const auto& [lo, hi] : mf.scaling)
            os << ' ' << detail::fmt17(lo) << ' ' << detail::fmt17(hi);
        os << '\n';
    }
    if (mf.model.design.kind != DesignKind::Direct)
        detail::write_matrix(os, "anchors", mf.model.design.anchors);
    detail::write_matrix(os, "x", mf.model.x.data());
    detail::write_matrix(os, "theta", mf.model.theta.data());
    os << "meta final_loss " << detail::fmt17(mf.final_loss) << " iterations "
       << mf.iterations << " seed " << mf.seed << '\n';

    // atomic: write a sibling temp file, then rename over the target
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::trunc);
        if (!f) throw data_error("cannot write '" + tmp + "'");
        f << os.str();
        if (!f.good()) throw data_error("write failed for '" + tmp + "'");
    }
    if (std::rename(tmp.c_str(), path.c_str()) != 0)
        throw data_error("cannot rename '" + tmp + "' to '" + path + "'");
}

inline ModelFile load_model(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw data_error("cannot open model file '" + path + "'");

    std::string magic;
    int version = 0;
    if (!(is >> magic >> version) || magic != "nmflab-model")
        throw data_error("'" + path + "' is not an nmflab model file");
    if (version != 1)
        throw data_error("model file version " + std::to_string(version) +
                         " not supported (expected 1)");

    ModelFile mf;
    mf.version = version;
    std::string key;
    if (!(is >> key >> mf.mode) || key != "mode" ||
        (mf.mode != "label" && mf.mode != "forward"))
        throw data_error("model file: bad mode line");

    std::size_t count = 0;
    if (!(is >> key >> count) || key != "classes")
        throw data_error("model file: bad classes line");
    std::vector<std::string> class_names(count);
    for (auto& n : class_names)
        if (!(is >> n)) throw data_error("model file: truncated class list");

    std::string design_name;
    if (!(is >> key >> design_name) || key != "design")
        throw data_error("model file: bad design line");
    const DesignKind kind = detail::design_from_name(design_name);

    double beta = 0.0;
    if (!(is >> key >> beta) || key != "beta")
        throw data_error("model file: bad beta line");
    Index feature_dim = 0;
    if (!(is >> key >> feature_dim) || key != "feature_dim")
        throw data_error("model file: bad feature_dim line");

    if (!(is >> key >> count) || key != "features")
        throw data_error("model file: bad features line");
    mf.feature_names.resize(count);
    for (auto& n : mf.feature_names)
        if (!(is >> n)) throw data_error("model file: truncated feature list");

    if (!(is >> key)) throw data_error("model file: truncated after features");
    if (key == "scaling") {
        if (!(is >> count)) throw data_error("model file: bad scaling line");
        mf.scaling.resize(count);
        for (auto& [lo, hi] : mf.scaling)
            if (!(is >> lo >> hi)) throw data_error("model file: truncated scaling list");
        if (!(is >> key)) throw data_error("model file: truncated after scaling");
    }

    KernelDesign design;
    if (kind == DesignKind::Direct) {
        design = KernelDesign::direct(feature_dim);
        is.seekg(-static_cast<std::streamoff>(key.size()), std::ios::cur);
    } else {
        if (key != "anchors") throw data_error("model file: expected anchors section");
        is.seekg(-static_cast<std::streamoff>(key.size()), std::ios::cur);
        Matrix anchors = detail::read_matrix(is, "anchors");
        design = KernelDesign::gaussian(std::move(anchors), beta, kind);
        if (design.feature_dim != feature_dim)
            throw data_error("model file: anchors do not match feature_dim");
    }

    Matrix x = detail::read_matrix(is, "x");
    Matrix theta = detail::read_matrix(is, "theta");

    double final_loss = 0.0;
    int iterations = 0;
    std::uint64_t seed = 0;
    std::string k1, k2, k3, k4;
    if (!(is >> k1 >> k2 >> final_loss >> k3 >> iterations >> k4 >> seed) ||
        k1 != "meta" || k2 != "final_loss" || k3 != "iterations" || k4 != "seed")
        throw data_error("model file: bad meta line");

    mf.model = TriNmfModel{NonNegMatrix(std::move(x)), NonNegMatrix(std::move(theta)),
                           std::move(design), std::move(class_names)};
    mf.final_loss = final_loss;
    mf.iterations = iterations;
    mf.seed = seed;
    return mf;
}

} // namespace nmflab
