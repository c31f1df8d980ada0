#pragma once

#include <cstdint>
#include <functional>
#include <optional>

#include "qcl/types.hpp"

namespace qcl {

struct EigenOptions {
    double tolerance = 1e-9;  // on ||H v - E v|| with ||v|| = 1
    int krylov_dim = 80;
    int keep = 6;  // Ritz vectors retained across a thick restart
    int max_restarts = 400;
    std::uint64_t seed = 20240611;
    // Optional warm start; defaults to the all-ones vector plus a small seeded perturbation.
    std::optional<CVector> start;
};

struct EigenPair {
    double value = 0.0;
    CVector vector;  // unit Euclidean norm, phase-fixed
    double residual = 0.0;
    int matvecs = 0;
};

using LinearOperator = std::function<void(const CVector& in, CVector& out)>;

/// Lowest eigenpair of a Hermitian operator by thick-restart Lanczos with full
/// reorthogonalization. Throws SolverError when the residual does not reach the
/// tolerance within max_restarts cycles.
EigenPair lowest_eigenpair(const LinearOperator& apply, Eigen::Index dim, const EigenOptions& options = {});
EigenPair lowest_eigenpair(const SparseMatrix& h, const EigenOptions& options = {});

/// Rotates v so that its first component with modulus above 1e-8 ||v||_inf is real positive.
void fix_phase(CVector& v);

}  // namespace qcl
