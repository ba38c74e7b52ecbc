#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpinn {

/// Shapes, option values or files that do not fit together.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or unusable input data.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A CSV row could not be parsed; carries the 1-based line number.
class IngestError : public DataError {
public:
    IngestError(std::size_t line, const std::string& what)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Argument outside the mathematical domain of a function (log of a non-positive variance, etc).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised by optimizers on non-finite input; `index` points at the offending coordinate.
class OptimizerError : public std::runtime_error {
public:
    OptimizerError(std::size_t index, const std::string& what)
        : std::runtime_error(what + " (index " + std::to_string(index) + ")"), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

/// Every candidate combination aborted during discovery.
class TrainingFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace cpinn
