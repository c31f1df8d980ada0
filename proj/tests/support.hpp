#pragma once

// Random model generators for property tests.

#include "oracles.hpp"
#include "qcl/model.hpp"

namespace support {

inline qcl::FieldModes random_modes(oracle::Gen& gen, int count) {
    qcl::RMatrix k(count, 1);
    qcl::RVector w(count);
    for (int j = 0; j < count; ++j) {
        k(j, 0) = -2.0 + 4.0 * (j + gen.uniform(0.1, 0.9)) / count;  // distinct by construction
        w(j) = gen.uniform(0.2, 1.0);
    }
    return qcl::make_modes(k, w);
}

/// Small random instance of `family` on a 1D grid with one or two particles.
inline qcl::ModelSpec random_model(qcl::Family family, oracle::Gen& gen, int n_particles = 1) {
    using namespace qcl;
    const int points = n_particles == 1 ? 16 : 8;
    const ParticleGrid grid = build_particle_grid(1, n_particles, gen.uniform(3.0, 5.0), points);
    const RVector w_ext = builtin_potential(grid, PotentialKind::Harmonic, gen.uniform(0.5, 2.0));
    const int count = gen.integer(1, 3);
    const FieldModes modes = random_modes(gen, count);
    switch (family) {
        case Family::Nelson: {
            Dispersion omega;
            omega.values.resize(count);
            for (int j = 0; j < count; ++j) omega.values(j) = gen.uniform(0.5, 2.0);
            const CVector l0 = gen.complex_vector(count, 0.5);
            return make_model(Family::Nelson, grid, modes, omega, nelson_form_factor(grid, modes, omega, l0), w_ext);
        }
        case Family::Polaron: {
            const double alpha = gen.uniform(0.2, 2.0);
            return make_model(Family::Polaron, grid, modes, constant_dispersion(count, 1.0),
                              polaron_form_factor(grid, modes, alpha), w_ext, {}, 0.0, alpha);
        }
        case Family::PauliFierz: {
            const Dispersion omega = relativistic_dispersion(modes, gen.uniform(0.5, 1.5));
            RVector masses(n_particles);
            for (int p = 0; p < n_particles; ++p) masses(p) = gen.uniform(0.3, 1.0);
            return make_model(Family::PauliFierz, grid, modes, omega,
                              pauli_fierz_form_factor(grid, modes, {gen.complex_vector(count, 0.5)}), w_ext, masses,
                              gen.uniform(0.2, 1.0));
        }
    }
    throw std::logic_error("unreachable");
}

inline constexpr qcl::Family kFamilies[] = {qcl::Family::Nelson, qcl::Family::Polaron, qcl::Family::PauliFierz};

}  // namespace support
