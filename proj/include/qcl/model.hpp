#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "qcl/types.hpp"

namespace qcl {

enum class Family { Nelson, Polaron, PauliFierz };

std::string_view to_string(Family family);
Family family_from_string(std::string_view name);

inline constexpr std::size_t kDefaultPointCap = 1'000'000;

/// Uniform cell-centred grid on [-L, L]^(d N) with Dirichlet walls at +-L.
///
/// Points along an axis sit at x_i = -L + (i + 1/2) h, h = 2L / G. The N-particle
/// configuration index is row-major over (particle, axis), particle 0 slowest.
/// A "frozen" grid has a single site at the origin and no kinetic term; it is the
/// zero-dimensional particle used by the displaced-oscillator checks.
struct ParticleGrid {
    int dim = 1;
    int n_particles = 1;
    double extent = 0.0;
    int points_per_axis = 1;
    double spacing = 0.0;
    std::size_t total_points = 1;
    bool frozen = false;
    // Second-order Laplacian stencil {off, diag, off} / h^2; the boundary rows pick up
    // one extra diagonal unit from the antisymmetric ghost cell.
    std::array<double, 3> laplacian_stencil{0.0, 0.0, 0.0};

    std::size_t sites_per_particle() const;
    double cell_volume() const;
    double axis_coordinate(int index) const;
    std::array<double, 2> site_position(std::size_t site) const;

    /// Single-particle site occupied by `particle` in configuration `flat`.
    std::size_t particle_site(std::size_t flat, int particle) const;
    /// Flat-index stride of one step along `axis` of `particle`.
    std::size_t stride(int particle, int axis) const;
    /// Index along `axis` of `particle` in configuration `flat`.
    int axis_index(std::size_t flat, int particle, int axis) const;
};

ParticleGrid build_particle_grid(int dim, int n_particles, double extent, int points_per_axis,
                                 std::size_t point_cap = kDefaultPointCap);
ParticleGrid frozen_particle_grid(int dim = 1);

/// Finite set of field modes. momenta is K x d; weights approximate dk.
struct FieldModes {
    RMatrix momenta;
    RVector weights;

    int count() const { return static_cast<int>(momenta.rows()); }
    int dim() const { return static_cast<int>(momenta.cols()); }
    double momentum_norm(int mode) const { return momenta.row(mode).norm(); }
};

FieldModes make_modes(RMatrix momenta, RVector weights);
/// Uniform 1D lattice {k_min, ..., k_max} with trapezoid weights (weight 1 when count == 1).
FieldModes mode_lattice_1d(double k_min, double k_max, int count);
/// Tensor-product trapezoid lattice on [k_min, k_max]^2, optionally skipping k = 0.
FieldModes mode_lattice_2d(double k_min, double k_max, int count_per_axis, bool drop_zero);

struct Dispersion {
    RVector values;
    double mass_gap() const;
};

Dispersion constant_dispersion(int n_modes, double value);
/// omega(k) = sqrt(|k|^2 + mass^2).
Dispersion relativistic_dispersion(const FieldModes& modes, double mass);

/// Coupling table lambda(x; k_j): rows are single-particle sites, columns modes.
/// One shared table, or one table per particle (Pauli-Fierz with distinct charges).
struct FormFactor {
    std::vector<CMatrix> tables;

    bool per_particle() const { return tables.size() > 1; }
    const CMatrix& table(int particle) const {
        return tables.size() == 1 ? tables.front() : tables.at(static_cast<std::size_t>(particle));
    }
    int mode_count() const { return tables.empty() ? 0 : static_cast<int>(tables.front().cols()); }
};

FormFactor nelson_form_factor(const ParticleGrid& grid, const FieldModes& modes,
                              const Dispersion& dispersion, const CVector& lambda0);
FormFactor polaron_form_factor(const ParticleGrid& grid, const FieldModes& modes, double alpha);
/// Minimal-coupling form factor lambda_j(x; k) = lambda0_j(k) exp(-i k x), one list per particle
/// (a single list is shared by all particles).
FormFactor pauli_fierz_form_factor(const ParticleGrid& grid, const FieldModes& modes,
                                   const std::vector<CVector>& lambda0_per_particle);

enum class PotentialKind { Zero, Harmonic, Quartic };

/// W(X) = strength * sum_j |x_j|^p, p = 2 (harmonic) or 4 (quartic).
RVector builtin_potential(const ParticleGrid& grid, PotentialKind kind, double strength = 1.0);

struct ModelSpec {
    Family family = Family::Nelson;
    ParticleGrid grid;
    FieldModes modes;
    Dispersion dispersion;
    FormFactor form_factor;
    RVector external_potential;
    RVector masses;  // Pauli-Fierz only
    double charge = 0.0;
    double alpha = 0.0;  // polaron only

    /// Coefficient of -Delta_j in the free particle Hamiltonian (1, or 1/2m_j for Pauli-Fierz).
    double kinetic_coefficient(int particle) const;
};

struct BoundCheck {
    std::string name;
    double sup_norm_squared = 0.0;  // max_x sum_j w_j omega_j^p |lambda(x; k_j)|^2
    double sup_norm = 0.0;
    bool required = true;
    bool ok = true;
};

struct ValidationReport {
    std::vector<BoundCheck> bounds;
    std::vector<std::string> failures;
    double mass_gap = 0.0;
    bool trapping = false;
    bool passed = true;
};

/// max over particles and sites of sum_j w_j omega_j^power |lambda(x; k_j)|^2.
/// Returns +inf when omega_j = 0, power < 0, and lambda(., k_j) does not vanish.
double form_factor_sup_norm_squared(const FormFactor& ff, const FieldModes& modes,
                                    const Dispersion& dispersion, double omega_power);

ValidationReport validate_model(const ModelSpec& spec);

/// True when W is at least `threshold` on every configuration touching the box boundary.
bool is_trapping(const ModelSpec& spec, double threshold = 10.0);

/// Drops modes with omega_j = 0 on which the form factor vanishes identically.
ModelSpec drop_decoupled_massless_modes(ModelSpec spec);

/// Assembles a model, drops decoupled massless modes, and throws ModelError if the
/// family-specific validation fails.
ModelSpec make_model(Family family, ParticleGrid grid, FieldModes modes, Dispersion dispersion,
                     FormFactor form_factor, RVector external_potential, RVector masses = {},
                     double charge = 0.0, double alpha = 0.0);

}  // namespace qcl
