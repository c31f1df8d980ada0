#pragma once

#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace qcl {

using Complex = std::complex<double>;
using CVector = Eigen::VectorXcd;
using RVector = Eigen::VectorXd;
using CMatrix = Eigen::MatrixXcd;
using RMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor>;
using Triplet = Eigen::Triplet<Complex>;

inline constexpr Complex kI{0.0, 1.0};

// Error hierarchy. The CLI maps these onto exit codes, so every failure the
// library can report falls into exactly one of these buckets.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A model violates one of the structural assumptions (bounds on the form
/// factor, mass gap, positivity of the external potential, ...).
class ModelError : public Error {
public:
    using Error::Error;
};

/// Requested instance exceeds a configured memory cap.
class InfeasibleError : public ModelError {
public:
    using ModelError::ModelError;
};

/// A field array was passed in the wrong representation (z vs eta).
class GaugeError : public Error {
public:
    using Error::Error;
};

class NormalizationError : public Error {
public:
    using Error::Error;
};

class SolverError : public Error {
public:
    SolverError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const { return residual_; }

private:
    double residual_;
};

/// Coherent-state or Fock truncation is too small for the requested accuracy.
class TruncationError : public Error {
public:
    TruncationError(const std::string& what, int required_n_max)
        : Error(what), required_n_max_(required_n_max) {}
    int required_n_max() const { return required_n_max_; }

private:
    int required_n_max_;
};

/// Two routes to the same quantity disagree beyond tolerance.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

/// Largest entry of |H - H^dagger|.
double max_asymmetry(const SparseMatrix& h);

}  // namespace qcl
