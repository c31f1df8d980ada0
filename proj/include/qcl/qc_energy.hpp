#pragma once

#include <vector>

#include "qcl/model.hpp"
#include "qcl/types.hpp"

namespace qcl {

inline constexpr double kNormTolerance = 1e-10;
inline constexpr double kHermiticityTolerance = 1e-12;

/// Particle wave function sampled on the N-particle grid. Norms carry the cell
/// volume h^(dN), so <phi|psi> = h^(dN) sum conj(phi) psi.
struct WaveFunction {
    CVector amplitudes;
    double cell_volume = 1.0;
    double norm_tolerance = kNormTolerance;

    static WaveFunction normalized(CVector amplitudes, double cell_volume);
    /// The lowest eigenvector from a solver (unit Euclidean norm) rescaled to unit L2 norm.
    static WaveFunction from_unit_vector(const CVector& v, double cell_volume);

    double norm_squared() const { return cell_volume * amplitudes.squaredNorm(); }
    Complex inner(const WaveFunction& other) const { return cell_volume * amplitudes.dot(other.amplitudes); }
    bool is_normalized() const { return std::abs(norm_squared() - 1.0) <= norm_tolerance; }
    void require_normalized() const;
};

enum class Gauge { z, eta };

/// Classical field configuration on the finite mode set; either z or eta = omega^(1/2) z.
struct FieldAmplitudes {
    CVector values;
    Gauge gauge = Gauge::z;

    static FieldAmplitudes z(CVector v) { return {std::move(v), Gauge::z}; }
    static FieldAmplitudes eta(CVector v) { return {std::move(v), Gauge::eta}; }
};

FieldAmplitudes to_eta(const FieldAmplitudes& field, const Dispersion& dispersion);
FieldAmplitudes to_z(const FieldAmplitudes& field, const Dispersion& dispersion);

/// w-weighted inner product <a|b> = sum_j w_j conj(a_j) b_j on the mode space.
Complex mode_inner(const FieldModes& modes, const CVector& a, const CVector& b);
double mode_norm_squared(const FieldModes& modes, const CVector& a);

/// Sparse Hermitian operator on the particle grid plus a scalar shift.
struct ParticleOperator {
    SparseMatrix matrix;
    double offset = 0.0;

    Eigen::Index dimension() const { return matrix.rows(); }
    CVector apply(const CVector& v) const { return matrix * v + offset * v; }
    double expectation(const WaveFunction& psi) const;
};

ParticleOperator assemble_k0(const ModelSpec& spec);

/// Nelson/polaron: per_particle[j] is the real potential V_z on the single-particle grid.
/// Pauli-Fierz: per_particle[j] is the classical vector potential a_z,j(x) entering
/// (-i grad_j + e a_z,j)^2; its square is the diamagnetic term.
struct EffectivePotential {
    bool minimal_coupling = false;
    std::vector<RVector> per_particle;
};

EffectivePotential effective_potential(const ModelSpec& spec, const FieldAmplitudes& z);
ParticleOperator assemble_hz(const ModelSpec& spec, const FieldAmplitudes& z);

/// <z|omega|z> on the w-weighted mode space.
double field_energy(const ModelSpec& spec, const FieldAmplitudes& z);

double qc_energy(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z);
double f_qc(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& eta);

/// m_j = w_j^-1 <psi| d/d conj(z_j) sum_i V_z(x_i) |psi>: the field source term of the
/// second Euler-Lagrange equation omega z + m = 0 (Wirtinger convention).
CVector field_source(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z);

/// Gradient of qc_energy in real coordinates: Re g_j = dE/dRe z_j, Im g_j = dE/dIm z_j.
CVector qc_field_gradient(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z);
/// Same for f_qc with respect to eta.
CVector f_qc_gradient(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& eta);

struct ELResiduals {
    double psi_residual = 0.0;
    double field_residual = 0.0;
    double multiplier = 0.0;
};

ELResiduals el_residual(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z);

// Grid helpers shared by the other modules.

/// Marginal probability of particle `particle` on its single-particle grid (sums to 1 for unit psi).
RVector particle_marginal(const WaveFunction& psi, const ParticleGrid& grid, int particle);
/// Central-difference momentum -i d/dx along the (1D) coordinate of `particle`, zero outside the box.
CVector apply_momentum(const CVector& v, const ParticleGrid& grid, int particle);
/// <psi| f(x_j) P_j + P_j f(x_j) |psi> for a complex single-particle function f.
Complex momentum_anticommutator_expectation(const WaveFunction& psi, const ParticleGrid& grid, int particle,
                                            const CVector& f);

}  // namespace qcl
