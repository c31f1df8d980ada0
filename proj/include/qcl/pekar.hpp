#pragma once

#include <cstddef>

#include "qcl/model.hpp"
#include "qcl/qc_energy.hpp"

namespace qcl {

/// Minimizing field eta_Pekar[psi] together with the conditioning of the solve
/// (1 for the closed-form Nelson/polaron case).
struct EtaSolution {
    FieldAmplitudes eta;
    double condition = 1.0;
};

EtaSolution eta_pekar_solve(const ModelSpec& spec, const WaveFunction& psi);
FieldAmplitudes eta_pekar(const ModelSpec& spec, const WaveFunction& psi);

/// Pauli-Fierz field functional restricted to fixed psi, written in the real
/// coordinates v = (Re eta, Im eta): F(v) = const + b.v + v^T Q v.
/// Q = diag(w, w) + T, with T the positive diamagnetic part.
struct PauliFierzEtaSystem {
    RVector b;
    RMatrix q;
    RVector w;  // diagonal of the free part, length 2K
};

PauliFierzEtaSystem pauli_fierz_eta_system(const ModelSpec& spec, const WaveFunction& psi);

struct FixedPointResult {
    FieldAmplitudes eta;
    int iterations = 0;
    bool converged = false;
};

/// Iterates eta <- -(b + T eta) / w for the Pauli-Fierz field equation.
FixedPointResult eta_pekar_fixed_point(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& start,
                                       double tolerance = 1e-14, int max_iter = 100000);

inline constexpr std::size_t kDefaultKernelCap = 16'000'000;

/// U(x, y) = <lambda(x)| omega^-1 |lambda(y)> on the single-particle grid (one per
/// particle pair when the form factor is per-particle), and the N-particle kernel
/// V_Pekar(X, Y) = -Re sum_ij U(x_i, y_j) when total_points^2 fits under the cap.
struct PekarKernel {
    CMatrix u;          // shared single-particle kernel (particle 0 table)
    RMatrix v_pekar;    // empty when above the cap
    bool dense = false;
};

PekarKernel pekar_kernel(const ModelSpec& spec, std::size_t cap = kDefaultKernelCap);

struct PekarEnergy {
    double energy = 0.0;
    double kernel_form = 0.0;  // <K0> + <|psi|^2, V_Pekar |psi|^2> (Nelson/polaron)
    double field_form = 0.0;   // f_qc(psi, eta_Pekar[psi])
};

/// Throws ConsistencyError when the kernel and field evaluations differ by more
/// than 1e-10 relative.
PekarEnergy pekar_energy(const ModelSpec& spec, const WaveFunction& psi, std::size_t cap = kDefaultKernelCap);

struct Density {
    RVector values;
    double site_volume = 1.0;  // h^d

    double integral() const { return values.sum() * site_volume; }
};

Density one_particle_density(const WaveFunction& psi, const ParticleGrid& grid);

/// eta_Pekar = -<rho | omega^-1/2 lambda>, valid for a shared form factor.
FieldAmplitudes eta_pekar_from_density(const ModelSpec& spec, const Density& rho);

struct ConvexityGap {
    double gap = 0.0;
    double prediction = 0.0;
};

ConvexityGap convexity_gap(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& eta1,
                           const FieldAmplitudes& eta2, double beta);

/// Low/high momentum split of the polaron potential V_z at cutoff rho:
/// V_z = sqrt(alpha) (V_low + div V_high), where V_high carries |k|^-(d+1)/2.
struct PolaronSplitting {
    double cutoff = 0.0;
    double low_sup = 0.0;
    double high_sup = 0.0;
    double reconstruction_error = 0.0;
    int low_modes = 0;
    int high_modes = 0;
};

PolaronSplitting polaron_splitting(const ModelSpec& spec, const FieldAmplitudes& z, double cutoff);

}  // namespace qcl
