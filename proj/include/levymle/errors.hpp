#pragma once

#include <stdexcept>
#include <string>

namespace levymle {

/// Base class for every error raised by the library. `exit_code()` follows the
/// command-line contract: 1 usage/config, 2 data, 3 numerical failure.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual int exit_code() const noexcept { return 3; }
};

/// Stable-law or model parameter outside its admissible domain.
class ParameterDomainError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

/// Malformed configuration, schema violation or unsupported combination.
class ConfigError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 1; }
};

/// Bad input data: non-finite cells, non-uniform sampling, too few rows.
class DataError : public Error {
public:
    using Error::Error;
    int exit_code() const noexcept override { return 2; }
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class QuadratureError : public NumericalError {
public:
    QuadratureError(const std::string& what, double achieved)
        : NumericalError(what + " (achieved relative error " + std::to_string(achieved) + ")"),
          achieved_(achieved) {}
    double achieved_tolerance() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// A simulated path left the admissible state range.
class ExplosionError : public NumericalError {
public:
    ExplosionError(const std::string& what, std::size_t step)
        : NumericalError(what), step_(step) {}
    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class OptimizationError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace levymle
