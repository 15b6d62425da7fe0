#pragma once

#include <stdexcept>
#include <string>

namespace survgam {

// Bad input: malformed files, violated invariants, unusable configuration.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A cell in a delimited file could not be parsed.
class ParseError : public ValidationError {
public:
    ParseError(const std::string& what, std::size_t row)
        : ValidationError(what), row_(row) {}

    // 1-based data row (header excluded).
    std::size_t row() const noexcept { return row_; }

private:
    std::size_t row_;
};

// Iterations diverged, matrices lost definiteness, optimizers gave up.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace survgam
