#pragma once

/// @file core.hpp
/// Dense types and the error hierarchy shared by every nplab module.

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace nplab {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Point = Eigen::VectorXd;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller supplied malformed input (dimension mismatch, empty context, ...).
class InputError : public Error {
public:
    using Error::Error;
};

/// A precondition on the numerical state was violated (schedule interval
/// does not cover the spectrum, ...).
class ContractError : public Error {
public:
    using Error::Error;
};

/// Duplicated or otherwise degenerate point configurations.
class DegenerateError : public Error {
public:
    using Error::Error;
};

/// A numerical routine failed: non-convergence, near-singular systems.
/// `value` carries the diagnostic quantity (residual norm, lambda_min, ...).
class NumericError : public Error {
public:
    NumericError(const std::string& what, double value)
        : Error(what + " (" + std::to_string(value) + ")"), value_(value) {}

    double value() const noexcept { return value_; }

private:
    double value_;
};

inline Point point1(double x) {
    Point p(1);
    p[0] = x;
    return p;
}

inline Point point2(double x, double y) {
    Point p(2);
    p << x, y;
    return p;
}

inline Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

}  // namespace nplab
