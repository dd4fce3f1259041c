#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hdgfwi {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

/// Physical or reference coordinates. Unused trailing components are zero.
using Point = Eigen::Vector3d;

inline constexpr double kPi = 3.14159265358979323846;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: configuration values, file schemas, arguments.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Singular pivots, non-finite values, failed factorizations.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Unreadable or unwritable files.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Internal bookkeeping inconsistency (layout mismatch, stale state).
class StructuralError : public Error {
 public:
  using Error::Error;
};

/// Complex frequency sigma = i*omega - s for a frequency in Hz and a
/// Laplace shift s >= 0.
Complex complex_frequency(double frequency_hz, double laplace_shift = 0.0);

/// Version string embedded in every artifact directory.
const char* version_string();

}  // namespace hdgfwi
