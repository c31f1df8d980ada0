#pragma once

// Independent reference values and helpers for the test suites. Nothing here
// calls into the operator assembly of the library: Hamiltonians are rebuilt
// from scratch as real tridiagonal matrices.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>

#include <Eigen/Eigenvalues>

#include "qcl/qc_energy.hpp"

namespace oracle {

// numpy/scipy dense eigensolve of the 64-point second-order Dirichlet
// discretization of -d^2/dx^2 + x^2 on [-8, 8].
inline constexpr double kHarmonicGroundEnergy = 0.996078309242658;

// Minimum over z of the lowest eigenvalue of -d^2/dx^2 + x^2 + 2 Re(conj(z) e^{-ix}) + |z|^2
// on the same grid: scipy scan on a 161 x 161 grid over [-2, 2]^2, ten zoom passes, then
// Nelder-Mead polish. Attained at z = -0.826504156.
inline constexpr double kInstBEnergy = 0.347031863960764;

/// Lowest Dirichlet eigenvalue 2(1 - cos(pi h / 2L)) / h^2 of the discrete Laplacian.
inline double box_ground_energy(int points, double extent) {
    const double h = 2.0 * extent / points;
    return 2.0 * (1.0 - std::cos(M_PI * h / (2.0 * extent))) / (h * h);
}

/// Lowest eigenvalue of -d^2/dx^2 + v(x) on the cell-centred 1D grid.
inline double lowest_1d(int points, double extent, const std::function<double(double)>& v) {
    const double h = 2.0 * extent / points;
    Eigen::VectorXd diag(points);
    Eigen::VectorXd off = Eigen::VectorXd::Constant(points - 1, -1.0 / (h * h));
    for (int i = 0; i < points; ++i) {
        const double x = -extent + (i + 0.5) * h;
        diag(i) = 2.0 / (h * h) + v(x);
    }
    diag(0) += 1.0 / (h * h);
    diag(points - 1) += 1.0 / (h * h);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

/// I[z] for the single-mode k = 1 harmonic instance with coupling lambda0.
inline double cosine_script_i(double re, double im, double lambda0 = 1.0) {
    return lowest_1d(64, 8.0, [&](double x) {
               return x * x + 2.0 * lambda0 * (re * std::cos(x) - im * std::sin(x));
           }) +
           re * re + im * im;
}

/// Brute-force minimum of cosine_script_i: scan of an n x n grid on [-2, 2]^2, then
/// repeated 21 x 21 zoom passes around the incumbent.
inline double cosine_scan_minimum(int n = 161, int zooms = 10) {
    double best = 1e300, bre = 0.0, bim = 0.0;
    double step = 4.0 / (n - 1);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double re = -2.0 + i * step, im = -2.0 + j * step;
            const double e = cosine_script_i(re, im);
            if (e < best) {
                best = e;
                bre = re;
                bim = im;
            }
        }
    }
    for (int z = 0; z < zooms; ++z) {
        const double cre = bre, cim = bim, inner = step / 5.0;
        for (int i = -10; i <= 10; ++i) {
            for (int j = -10; j <= 10; ++j) {
                const double re = cre + i * inner, im = cim + j * inner;
                const double e = cosine_script_i(re, im);
                if (e < best) {
                    best = e;
                    bre = re;
                    bim = im;
                }
            }
        }
        step = inner;
    }
    return best;
}

/// Hand-rolled generators for the property tests.
class Gen {
public:
    explicit Gen(std::uint64_t seed) : rng_(seed) {}

    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
    double normal() { return normal_(rng_); }
    qcl::Complex complex_normal() { return {normal(), normal()}; }

    qcl::CVector complex_vector(Eigen::Index n, double scale = 1.0) {
        qcl::CVector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = scale * complex_normal();
        return v;
    }

    qcl::WaveFunction wave_function(const qcl::ParticleGrid& grid) {
        return qcl::WaveFunction::normalized(complex_vector(static_cast<Eigen::Index>(grid.total_points)),
                                             grid.cell_volume());
    }

    /// Smooth random state: a Gaussian bump with random centre, width, and momentum,
    /// plus a little complex noise. Keeps kinetic energies moderate.
    qcl::WaveFunction smooth_wave_function(const qcl::ParticleGrid& grid) {
        qcl::CVector v(static_cast<Eigen::Index>(grid.total_points));
        const double c = uniform(-1.5, 1.5), w = uniform(0.6, 2.0), k = uniform(-1.5, 1.5);
        for (std::size_t flat = 0; flat < grid.total_points; ++flat) {
            qcl::Complex amp{1.0, 0.0};
            for (int p = 0; p < grid.n_particles; ++p) {
                const auto x = grid.site_position(grid.particle_site(flat, p));
                const double r2 = (x[0] - c) * (x[0] - c) + x[1] * x[1];
                amp *= std::exp(-r2 / (2.0 * w * w)) * std::exp(qcl::kI * (k * x[0]));
            }
            v(static_cast<Eigen::Index>(flat)) = amp + 0.05 * complex_normal();
        }
        return qcl::WaveFunction::normalized(std::move(v), grid.cell_volume());
    }

    std::mt19937_64& engine() { return rng_; }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_;
};

inline double relative_difference(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace oracle
