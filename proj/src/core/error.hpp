#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace emsf {

// Base of every error raised by the core. The C API maps each subclass to a
// status code, so new subclasses must be added there as well.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input bytes (CSV fields, timestamps, model files).
class ParseError : public Error {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    explicit ParseError(const std::string& what) : Error(what) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_ = 0;
};

// Well-formed input that violates a documented invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Invalid options or term specifications.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Non-finite values, rank problems, overflow guards.
class NumericError : public Error {
public:
    using Error::Error;
};

// An iterative method ran out of iterations. Carries the objective trace.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, std::vector<double> trace)
        : Error(what), trace_(std::move(trace)) {}

    const std::vector<double>& trace() const noexcept { return trace_; }

private:
    std::vector<double> trace_;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace emsf
