#pragma once

#include <stdexcept>
#include <string>

namespace qpencil {

/// Base class for every failure raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The problem description violates a standing assumption or is malformed.
class validation_error : public error {
public:
    using error::error;
};

/// A numerical routine could not reach its accuracy target.
class numerical_error : public error {
public:
    using error::error;
};

/// Adaptive integration stalled; carries the position where the step size underflowed.
class integration_failure : public numerical_error {
public:
    integration_failure(const std::string& what, double x)
        : numerical_error(what + " at x=" + std::to_string(x)), x_(x) {}
    double position() const noexcept { return x_; }

private:
    double x_;
};

/// A step of the reconstruction algorithm cannot proceed with the data it was given.
class algorithm_error : public error {
public:
    algorithm_error(int step, const std::string& what) : error("step " + std::to_string(step) + ": " + what), step_(step) {}
    int step() const noexcept { return step_; }

private:
    int step_;
};

}  // namespace qpencil
