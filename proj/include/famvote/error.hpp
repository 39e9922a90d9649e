#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace famvote {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
public:
    ParseError(const std::string& where, std::size_t line, const std::string& what)
        : Error(where + (line ? ":" + std::to_string(line) : std::string{}) + ": " + what),
          line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Well-formed input that violates a data invariant (duplicates, coverage gaps, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Bad arguments from a caller or the command line.
class UsageError : public Error {
public:
    using Error::Error;
};

/// A documented precondition was broken by library code.
class ContractViolation : public Error {
public:
    using Error::Error;
};

}  // namespace famvote
