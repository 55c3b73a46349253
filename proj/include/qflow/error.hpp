#pragma once

#include <stdexcept>
#include <string>

namespace qflow {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape or dimension mismatch, or a dense operator larger than the configured cap.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Input that violates a documented precondition (non-Hermitian generator, bad site index, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A contraction plan could not be built or executed within the dense cap.
class ContractionError : public Error {
public:
    using Error::Error;
};

/// Run-configuration problem. `line()` is 0 when the location is unknown.
class ConfigError : public Error {
public:
    ConfigError(const std::string& message, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace qflow
