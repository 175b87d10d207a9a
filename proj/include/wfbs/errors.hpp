#pragma once

#include <stdexcept>
#include <string>

namespace wfbs {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A parameter violates one of the admissible-range inequalities.
class OutOfRange : public Error {
public:
    OutOfRange(int index, std::string constraint, double value)
        : Error("parameter constraint violated for axis " + std::to_string(index) + ": " +
                constraint + " (got " + std::to_string(value) + ")"),
          index_(index), constraint_(std::move(constraint)) {}

    [[nodiscard]] int index() const noexcept { return index_; }
    [[nodiscard]] const std::string& constraint() const noexcept { return constraint_; }

private:
    int index_;
    std::string constraint_;
};

class DomainError : public Error {
public:
    using Error::Error;
};

/// Numerical integration did not reach its error target.
class QuadratureFailure : public Error {
public:
    using Error::Error;
};

class InvalidRect : public Error {
public:
    using Error::Error;
};

/// Covariance matrix could not be factored even at the largest jitter.
class NotPSD : public Error {
public:
    using Error::Error;
};

class TooFewReplications : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or command-line input.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace wfbs
