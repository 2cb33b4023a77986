#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace aits {

using cdouble = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rvec = Eigen::VectorXd;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kLn2 = std::numbers::ln2;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or unparsable configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Numerical breakdown (loss of definiteness, failed bracket, ...).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A linear system that needs a different branch (e.g. singular Q at eps = 0).
class SingularSystemError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class IoError : public Error {
public:
    using Error::Error;
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double dbm_to_milliwatts(double dbm) { return std::pow(10.0, dbm / 10.0); }
inline double milliwatts_to_dbm(double mw) { return 10.0 * std::log10(mw); }
inline double watts_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

inline cmat hermitian_part(const cmat& m) { return 0.5 * (m + m.adjoint()); }

/// log|A| for Hermitian positive definite A; throws NumericalError otherwise.
inline double log_det_hpd(const cmat& a, const char* what = "matrix") {
    Eigen::LLT<cmat> llt(hermitian_part(a));
    if (llt.info() != Eigen::Success) {
        throw NumericalError(std::string("log-det of non positive definite ") + what);
    }
    const cmat& l = llt.matrixLLT();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < l.rows(); ++i) acc += std::log(l(i, i).real());
    return 2.0 * acc;
}

}  // namespace aits
