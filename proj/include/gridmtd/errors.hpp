#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gridmtd {

/// Syntax error in a case or config file. Carries the 1-based line and
/// column of the offending token.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string file, int line, int column, const std::string& what_arg)
        : std::runtime_error(file + ":" + std::to_string(line) + ":" +
                             std::to_string(column) + ": " + what_arg),
          file_(std::move(file)), line_(line), column_(column) {}

    const std::string& file() const { return file_; }
    int line() const { return line_; }
    int column() const { return column_; }

private:
    std::string file_;
    int line_ = 0;
    int column_ = 0;
};

/// A structurally well-formed input that violates a model invariant
/// (dangling bus reference, non-positive reactance, infeasible totals, ...).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Requested flow solve on a disconnected live graph. Carries the island
/// partition (groups of 0-based bus indices).
class IslandingError : public ValidationError {
public:
    IslandingError(const std::string& what_arg, std::vector<std::vector<int>> islands)
        : ValidationError(what_arg), islands_(std::move(islands)) {}

    const std::vector<std::vector<int>>& islands() const { return islands_; }

private:
    std::vector<std::vector<int>> islands_;
};

/// Tripping this branch disconnects its endpoints: no alternative path
/// exists, so no masking attack can be built against it.
class RadialTripError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Simple-path enumeration exceeded the configured cap.
class PathOverflowError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Numerical failure: singular system, LP breakdown, degenerate
/// equilibrium enumeration, and similar.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace gridmtd
