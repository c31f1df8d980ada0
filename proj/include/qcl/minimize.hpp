#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qcl/eigensolver.hpp"
#include "qcl/model.hpp"
#include "qcl/qc_energy.hpp"

namespace qcl {

struct GroundState {
    double energy = 0.0;
    WaveFunction psi;
    double residual = 0.0;
};

/// Lowest eigenpair of a particle operator (offset included), as a unit-L2 wave function.
GroundState ground_eigenpair(const ParticleOperator& op, double cell_volume, const EigenOptions& options = {});

/// I[z] = inf_psi E_qc[psi, z].
double script_i(const ModelSpec& spec, const FieldAmplitudes& z, const EigenOptions& options = {});

struct TraceRow {
    int iteration = 0;
    double energy = 0.0;
    double psi_residual = 0.0;
    double field_residual = 0.0;
};

struct MinimizeOptions {
    double tol_e = 1e-10;
    double tol_r = 1e-7;
    int max_iter = 200;
    std::uint64_t seed = 1;  // used only for random initialization
    EigenOptions eigen;
};

struct MinimizeResult {
    WaveFunction psi_star;
    FieldAmplitudes z_star;
    double energy = 0.0;
    int iterations = 0;
    std::vector<TraceRow> energy_trace;
    ELResiduals el_residuals;
    bool converged = false;
};

/// Seeded random start: complex Gaussian psi, Gaussian eta scaled by sup ||omega^-1/2 lambda||.
WaveFunction random_wave_function(const ParticleGrid& grid, std::uint64_t seed);
FieldAmplitudes random_eta(const ModelSpec& spec, std::uint64_t seed);

/// Alternates psi <- ground state of H_z and eta <- eta_Pekar[psi]. Missing initial
/// data is drawn from options.seed; a given psi without eta starts from eta_Pekar[psi].
MinimizeResult alternating_minimize(const ModelSpec& spec, const MinimizeOptions& options,
                                    const std::optional<WaveFunction>& init_psi = std::nullopt,
                                    const std::optional<FieldAmplitudes>& init_eta = std::nullopt);

struct MultiStartReport {
    MinimizeResult best;
    std::size_t best_index = 0;
    std::vector<MinimizeResult> runs;  // ordered by start index
    double min_energy = 0.0;
    double max_energy = 0.0;
    // Pairwise distances between start i < j, row-major over pairs.
    std::vector<double> psi_distances;  // sqrt(2 - 2 |<psi_i|psi_j>|), invariant under global phase
    std::vector<double> z_distances;    // w-weighted norm of z_i - z_j
};

/// Start i uses derive_seed(seed, i); runs in parallel, merged in start order.
MultiStartReport multi_start(const ModelSpec& spec, int n_starts, std::uint64_t seed, MinimizeOptions options = {});

struct PekarOptions {
    double tol_r = 1e-7;  // on the Riemannian gradient norm
    int max_iter = 5000;
    int restart_interval = 25;  // eigen-restart period
    EigenOptions eigen;
};

struct PekarMinimizeResult {
    WaveFunction psi;
    FieldAmplitudes eta;
    double energy = 0.0;
    double gradient_norm = 0.0;
    int iterations = 0;
    std::vector<double> energy_trace;
    bool converged = false;
};

/// Minimizes E_Pekar over the unit sphere: projected gradient with Barzilai-Borwein
/// steps and a non-monotone Armijo safeguard, periodically replacing psi by the
/// ground state of H_{z_psi} when that lowers the energy.
PekarMinimizeResult pekar_minimize(const ModelSpec& spec, const PekarOptions& options = {},
                                   const std::optional<WaveFunction>& init_psi = std::nullopt);

struct EquivalenceReport {
    double e_qc = 0.0;
    double e_pekar = 0.0;
    double gap = 0.0;
    double pekar_at_qc = 0.0;   // E_Pekar[psi_qc]
    double fqc_at_pekar = 0.0;  // f_qc(psi_P, eta_Pekar[psi_P])
    double tolerance = 0.0;
    bool qc_converged = false;
    bool pekar_converged = false;
    bool passed = false;
    MultiStartReport qc;
    PekarMinimizeResult pekar;
};

/// Requires a trapping external potential.
EquivalenceReport equivalence_check(const ModelSpec& spec, double tolerance = 1e-6, int n_starts = 4,
                                    std::uint64_t seed = 1, const MinimizeOptions& options = {},
                                    const PekarOptions& pekar_options = {});

}  // namespace qcl
