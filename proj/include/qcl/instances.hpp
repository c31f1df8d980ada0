#pragma once

#include "qcl/model.hpp"

/// Reference model instances shared by tests, the acceptance suite, and the
/// shipped model files.
namespace qcl::instances {

/// Nelson, d = 1, N = 1, [-8, 8] with 64 points, W = x^2, one mode k = 0 with
/// lambda0 = 0.5 and omega = 1. The coupling is constant in x, so the particle
/// and field decouple: E_qc = E0(K0) - 0.25.
ModelSpec inst_a();

/// Same grid and trap as inst_a with one mode k = 1, lambda0 = 1, omega = 1:
/// V_z(x) = 2 Re(conj(z) e^{-ix}), a cosine potential for real z.
ModelSpec inst_b();

/// inst_a with lambda0 = 0.
ModelSpec decoupled();

/// Frozen particle with a single mode: H_eps = eps omega a^+a + sqrt(eps) g (a + a^+).
ModelSpec frozen_nelson(double g = 0.3, double omega = 2.0);

/// Frozen particle, Pauli-Fierz coupling with lambda0 = 0.5, e = 0.5, m = 0.5, omega = 1.
ModelSpec frozen_pauli_fierz();

/// Polaron, d = 1, [-6, 6] with 32 points, W = x^2, modes k in {-2, -1.5, ..., 2}.
ModelSpec polaron_1d(double alpha = 1.0);

/// Pauli-Fierz, d = 1, [-6, 6] with 32 points, W = x^2, modes k = +-1 with
/// omega = sqrt(1 + k^2), lambda0 = 0.5, e = 0.5, m = 0.5.
ModelSpec pauli_fierz_1d();

/// Two-particle Nelson, d = 1, [-4, 4] with 16 points per axis, W = x1^2 + x2^2,
/// one mode k = 1 with lambda0 = 0.5, omega = 1.
ModelSpec two_particle_nelson();

}  // namespace qcl::instances
