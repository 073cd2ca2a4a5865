#pragma once

#include <stdexcept>
#include <string>

namespace fxvol {

/// Base class for every error raised by the library.
///
/// Errors split into two families that the CLI maps onto exit codes:
/// input problems (malformed files, bad shapes, bad configuration) exit with 1,
/// numeric problems (degenerate data, estimation failure) exit with 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    [[nodiscard]] virtual bool is_numeric() const noexcept { return false; }
};

class InputError : public Error {
public:
    using Error::Error;
};

class ParseError : public InputError {
public:
    ParseError(const std::string& what, std::size_t line)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

class ShapeError : public InputError {
public:
    using InputError::InputError;
};

class AlignmentError : public InputError {
public:
    using InputError::InputError;
};

class ConfigError : public InputError {
public:
    using InputError::InputError;
};

class InsufficientDataError : public InputError {
public:
    using InputError::InputError;
};

class NumericError : public Error {
public:
    using Error::Error;
    [[nodiscard]] bool is_numeric() const noexcept override { return true; }
};

/// Non-positive prices, non-positive forecasts and similar out-of-domain values.
class DomainError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Constant or zero-variance input where the statistic is undefined.
class DegenerateInputError : public NumericError {
public:
    using NumericError::NumericError;
};

class EstimationError : public NumericError {
public:
    using NumericError::NumericError;
};

}  // namespace fxvol
