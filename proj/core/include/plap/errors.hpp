#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace plap {

/// Base of every exception thrown by plap_core.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration: bad grid extents, p <= 1, malformed problem file values.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// Two fields that must share a grid do not.
class GridMismatch : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// Expression or problem-file syntax error with a 1-based source position.
class ParseError : public Error {
public:
    ParseError(const std::string& message, int line, int column);

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    std::string detail_;
    int line_;
    int column_;
};

/// Expression evaluation failed (division by zero, 0^negative, missing binding, non-finite result).
class EvalError : public Error {
public:
    using Error::Error;
};

/// One entry of a nonlinear solver's iteration trace. damping is the accepted
/// Newton step length, or 0 for the record opening a stage and for Picard steps.
struct IterationRecord {
    int iter = 0;
    double residual = 0.0;
    double damping = 0.0;
};

/// A nonlinear solve did not reach its tolerance. Carries the residual history.
class SolverError : public Error {
public:
    SolverError(const std::string& message, std::vector<IterationRecord> history);

    const std::vector<IterationRecord>& history() const noexcept { return history_; }

private:
    std::vector<IterationRecord> history_;
};

/// A hypothesis on h or f failed at runtime (e.g. negative frozen base).
class HypothesisViolation : public Error {
public:
    using Error::Error;
};

/// A numerical invariant that the construction guarantees was broken
/// (set membership, stale gradient constant, monotone trap).
class InvariantViolation : public Error {
public:
    using Error::Error;
};

/// (λ, β) lies outside the admissible region; raised before any solve.
class OutOfRegion : public Error {
public:
    using Error::Error;
};

}  // namespace plap
