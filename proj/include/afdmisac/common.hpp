// common.hpp - shared numeric types and error classes for the AFDM-ISAC library.

#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace afdmisac {

using cd = std::complex<double>;

// Delay-Doppler matrices are stored row-major: row = delay bin, column = Doppler bin.
using CMatrix = Eigen::Matrix<cd, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a configuration or input violates a documented invariant.
/// `field()` names the offending field so callers can report it.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& what)
        : Error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// Wraps an angle into [-pi, pi).
inline double wrap_phase(double x) {
    double y = std::fmod(x + kPi, kTwoPi);
    if (y < 0.0) y += kTwoPi;
    double out = y - kPi;
    // fmod rounding can land exactly on +pi
    if (out >= kPi) out -= kTwoPi;
    return out;
}

inline double mean_square(const CMatrix& a) {
    return a.squaredNorm() / static_cast<double>(a.size());
}

}  // namespace afdmisac
