#pragma once

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "matrix.hpp"

// CSV ingestion and min-max feature scaling.
//
// CSV contract: header row; one sample per row; features numeric; optional
// label column selected by name; empty cell = missing value. Rows with any
// missing cell are dropped (and counted). Quoted fields are not supported.

namespace nmflab {

struct Dataset {
    std::vector<std::string> feature_names;
    Matrix samples; // feature_dim x N, scaled to [0,1] when scaling was applied
    std::vector<std::string> labels; // empty when no label column was requested
    std::vector<std::pair<double, double>> scaling; // per-feature (min, max); empty if unscaled
    Index dropped_rows = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            cells.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    cells.push_back(cur);
    for (auto& c : cells) {
        const auto b = c.find_first_not_of(" \t");
        const auto e = c.find_last_not_of(" \t");
        c = b == std::string::npos ? std::string{} : c.substr(b, e - b + 1);
    }
    return cells;
}

inline bool parse_double(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size();
}

} // namespace detail

/// Min-max scale each feature (row) to [0,1], recording the (min, max)
/// pairs. A constant feature maps to all-zeros so it vanishes from direct
/// designs.
inline std::vector<std::pair<double, double>> fit_scaling(Matrix& samples) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(static_cast<std::size_t>(samples.rows()));
    for (Index r = 0; r < samples.rows(); ++r) {
        const double lo = samples.row(r).minCoeff();
        const double hi = samples.row(r).maxCoeff();
        pairs.emplace_back(lo, hi);
        if (hi > lo)
            samples.row(r) = (samples.row(r).array() - lo) / (hi - lo);
        else
            samples.row(r).setZero();
    }
    return pairs;
}

/// Apply recorded scaling pairs to new raw samples. Values outside the
/// recorded range map outside [0,1]; direct designs will reject negatives.
inline Matrix apply_scaling(const Matrix& raw,
                            const std::vector<std::pair<double, double>>& pairs) {
    if (pairs.empty()) return raw;
    if (raw.rows() != static_cast<Index>(pairs.size()))
        throw shape_error("apply_scaling: " + std::to_string(raw.rows()) +
                          " features vs " + std::to_string(pairs.size()) +
                          " recorded scaling pairs");
    Matrix out = raw;
    for (Index r = 0; r < out.rows(); ++r) {
        const auto [lo, hi] = pairs[static_cast<std::size_t>(r)];
        if (hi > lo)
            out.row(r) = (out.row(r).array() - lo) / (hi - lo);
        else
            out.row(r).setZero();
    }
    return out;
}

inline Dataset load_csv(const std::string& path, const std::string& label_column = "",
                        bool scale = true, bool allow_empty = false) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");

    std::string line;
    if (!std::getline(in, line)) throw data_error("'" + path + "' is empty");
    const auto header = detail::split_csv_line(line);

    Index label_idx = -1;
    Dataset ds;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (!label_column.empty() && header[i] == label_column)
            label_idx = static_cast<Index>(i);
        else
            ds.feature_names.push_back(header[i]);
    }
    if (!label_column.empty() && label_idx < 0)
        throw data_error("label column '" + label_column + "' not found in '" + path + "'");
    if (ds.feature_names.empty())
        throw data_error("'" + path + "' has no feature columns");

    std::vector<std::vector<double>> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw data_error(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " cells, got " +
                             std::to_string(cells.size()));
        bool missing = false;
        for (const auto& c : cells)
            if (c.empty()) { missing = true; break; }
        if (missing) {
            ++ds.dropped_rows;
            continue;
        }
        std::vector<double> feat;
        feat.reserve(ds.feature_names.size());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (static_cast<Index>(i) == label_idx) continue;
            double v;
            if (!detail::parse_double(cells[i], v))
                throw data_error(path + ":" + std::to_string(lineno) +
                                 ": non-numeric feature cell '" + cells[i] + "'");
            feat.push_back(v);
        }
        rows.push_back(std::move(feat));
        if (label_idx >= 0)
            ds.labels.push_back(cells[static_cast<std::size_t>(label_idx)]);
    }
    if (rows.empty()) {
        if (allow_empty) {
            ds.samples.resize(static_cast<Index>(ds.feature_names.size()), 0);
            return ds;
        }
        throw data_error("'" + path + "' has no usable data rows" +
                         (ds.dropped_rows > 0 ? " (all rows had missing values)" : ""));
    }

    const Index d = static_cast<Index>(ds.feature_names.size());
    const Index n = static_cast<Index>(rows.size());
    ds.samples.resize(d, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < d; ++i)
            ds.samples(i, j) = rows[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];

    if (scale) ds.scaling = fit_scaling(ds.samples);
    return ds;
}

} // namespace nmflab
