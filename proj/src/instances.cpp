#include "qcl/instances.hpp"

#include <cmath>

namespace qcl::instances {

namespace {

FieldModes single_mode(double k) { return make_modes(RMatrix::Constant(1, 1, k), RVector::Ones(1)); }

ModelSpec harmonic_nelson(double k, double lambda0) {
    const ParticleGrid grid = build_particle_grid(1, 1, 8.0, 64);
    const FieldModes modes = single_mode(k);
    const Dispersion omega = constant_dispersion(1, 1.0);
    const CVector l0 = CVector::Constant(1, Complex(lambda0, 0.0));
    return make_model(Family::Nelson, grid, modes, omega, nelson_form_factor(grid, modes, omega, l0),
                      builtin_potential(grid, PotentialKind::Harmonic));
}

}  // namespace

ModelSpec inst_a() { return harmonic_nelson(0.0, 0.5); }
ModelSpec inst_b() { return harmonic_nelson(1.0, 1.0); }
ModelSpec decoupled() { return harmonic_nelson(0.0, 0.0); }

ModelSpec frozen_nelson(double g, double omega) {
    const ParticleGrid grid = frozen_particle_grid(1);
    const FieldModes modes = single_mode(0.0);
    const Dispersion disp = constant_dispersion(1, omega);
    return make_model(Family::Nelson, grid, modes, disp,
                      nelson_form_factor(grid, modes, disp, CVector::Constant(1, Complex(g, 0.0))),
                      RVector::Zero(1));
}

ModelSpec frozen_pauli_fierz() {
    const ParticleGrid grid = frozen_particle_grid(1);
    const FieldModes modes = single_mode(1.0);
    const Dispersion disp = constant_dispersion(1, 1.0);
    return make_model(Family::PauliFierz, grid, modes, disp,
                      pauli_fierz_form_factor(grid, modes, {CVector::Constant(1, Complex(0.5, 0.0))}),
                      RVector::Zero(1), RVector::Constant(1, 0.5), 0.5);
}

ModelSpec polaron_1d(double alpha) {
    const ParticleGrid grid = build_particle_grid(1, 1, 6.0, 32);
    const FieldModes modes = mode_lattice_1d(-2.0, 2.0, 9);
    return make_model(Family::Polaron, grid, modes, constant_dispersion(modes.count(), 1.0),
                      polaron_form_factor(grid, modes, alpha), builtin_potential(grid, PotentialKind::Harmonic), {},
                      0.0, alpha);
}

ModelSpec pauli_fierz_1d() {
    const ParticleGrid grid = build_particle_grid(1, 1, 6.0, 32);
    RMatrix k(2, 1);
    k << -1.0, 1.0;
    const FieldModes modes = make_modes(k, RVector::Ones(2));
    return make_model(Family::PauliFierz, grid, modes, relativistic_dispersion(modes, 1.0),
                      pauli_fierz_form_factor(grid, modes, {CVector::Constant(2, Complex(0.5, 0.0))}),
                      builtin_potential(grid, PotentialKind::Harmonic), RVector::Constant(1, 0.5), 0.5);
}

ModelSpec two_particle_nelson() {
    const ParticleGrid grid = build_particle_grid(1, 2, 4.0, 16);
    const FieldModes modes = single_mode(1.0);
    const Dispersion omega = constant_dispersion(1, 1.0);
    return make_model(Family::Nelson, grid, modes, omega,
                      nelson_form_factor(grid, modes, omega, CVector::Constant(1, Complex(0.5, 0.0))),
                      builtin_potential(grid, PotentialKind::Harmonic));
}

}  // namespace qcl::instances
