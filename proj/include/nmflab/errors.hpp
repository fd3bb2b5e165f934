#pragma once

#include <stdexcept>
#include <string>

namespace nmflab {

/// Base error. `code()` is a short machine-parsable tag, the what()
/// string is the human-readable message.
class error : public std::runtime_error {
public:
    error(std::string code, const std::string& msg)
        : std::runtime_error(msg), code_(std::move(code)) {}
    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

/// Incompatible matrix/vector dimensions.
class shape_error : public error {
public:
    explicit shape_error(const std::string& msg) : error("shape", msg) {}
};

/// Value outside the admissible domain (negative entries, NaN, ...).
class domain_error : public error {
public:
    explicit domain_error(const std::string& msg) : error("domain", msg) {}
};

/// Invalid configuration (rank out of range, bad fractions, ...).
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error("config", msg) {}
};

/// Degenerate input that admits no meaningful answer
/// (all samples identical, class smaller than the number of split parts).
class degenerate_error : public error {
public:
    explicit degenerate_error(const std::string& msg) : error("degenerate", msg) {}
};

/// File parsing / IO failures.
class data_error : public error {
public:
    explicit data_error(const std::string& msg) : error("data", msg) {}
};

} // namespace nmflab
