#include "qcl/pekar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

namespace qcl {

namespace {

void require_gap(const ModelSpec& spec, const char* what) {
    if (!(spec.dispersion.mass_gap() > 0.0)) throw ModelError(std::string(what) + " requires mass_gap > 0");
}

RVector inverse_sqrt_omega(const ModelSpec& spec) { return spec.dispersion.values.cwiseSqrt().cwiseInverse(); }

// Columns (Re, Im) of 2 w omega^-1/2 lambda_j(x; k): a_j = G_j v for v = (Re eta, Im eta).
RMatrix coupling_columns(const ModelSpec& spec, int particle) {
    const CMatrix& table = spec.form_factor.table(particle);
    const int k = spec.modes.count();
    const RVector scale = 2.0 * spec.modes.weights.cwiseProduct(inverse_sqrt_omega(spec));
    RMatrix g(table.rows(), 2 * k);
    g.leftCols(k) = table.real() * scale.asDiagonal();
    g.rightCols(k) = table.imag() * scale.asDiagonal();
    return g;
}

CVector join(const RVector& v, int k) {
    CVector eta(k);
    for (int j = 0; j < k; ++j) eta(j) = Complex(v(j), v(k + j));
    return eta;
}

RVector split(const CVector& eta) {
    const auto k = eta.size();
    RVector v(2 * k);
    v.head(k) = eta.real();
    v.tail(k) = eta.imag();
    return v;
}

double f_qc_at(const ModelSpec& spec, const WaveFunction& psi, const CVector& eta) {
    return f_qc(spec, psi, FieldAmplitudes::eta(eta));
}

}  // namespace

// ---------------------------------------------------------------------------
// eta_Pekar

PauliFierzEtaSystem pauli_fierz_eta_system(const ModelSpec& spec, const WaveFunction& psi) {
    if (spec.family != Family::PauliFierz) throw ModelError("the real-linear eta system is Pauli-Fierz only");
    require_gap(spec, "eta_pekar");
    psi.require_normalized();
    const int k = spec.modes.count();
    const double e = spec.charge;

    PauliFierzEtaSystem sys;
    sys.w.resize(2 * k);
    sys.w << spec.modes.weights, spec.modes.weights;
    sys.b = RVector::Zero(2 * k);
    sys.q = sys.w.asDiagonal();

    for (int p = 0; p < spec.grid.n_particles; ++p) {
        const double c = spec.kinetic_coefficient(p);
        const RMatrix g = coupling_columns(spec, p);
        const RVector rho = particle_marginal(psi, spec.grid, p);
        sys.q += c * e * e * (g.transpose() * rho.asDiagonal() * g);
        if (spec.grid.frozen) continue;
        for (int col = 0; col < 2 * k; ++col) {
            const CVector f = g.col(col).cast<Complex>();
            sys.b(col) += c * e * momentum_anticommutator_expectation(psi, spec.grid, p, f).real();
        }
    }
    return sys;
}

EtaSolution eta_pekar_solve(const ModelSpec& spec, const WaveFunction& psi) {
    require_gap(spec, "eta_pekar");
    psi.require_normalized();
    if (spec.family != Family::PauliFierz) {
        const CVector m = field_source(spec, psi, FieldAmplitudes::z(CVector::Zero(spec.modes.count())));
        return {FieldAmplitudes::eta(-m.cwiseProduct(inverse_sqrt_omega(spec).cast<Complex>())), 1.0};
    }

    const PauliFierzEtaSystem sys = pauli_fierz_eta_system(spec, psi);
    const Eigen::SelfAdjointEigenSolver<RMatrix> es(sys.q, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    const double condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
    if (!(lo > 0.0) || condition > 1e14) {
        std::ostringstream msg;
        msg << "Pauli-Fierz eta system is singular (condition estimate " << condition << ")";
        throw SolverError(msg.str(), condition);
    }
    const RVector v = -0.5 * sys.q.ldlt().solve(sys.b);
    return {FieldAmplitudes::eta(join(v, spec.modes.count())), condition};
}

FieldAmplitudes eta_pekar(const ModelSpec& spec, const WaveFunction& psi) { return eta_pekar_solve(spec, psi).eta; }

FixedPointResult eta_pekar_fixed_point(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& start,
                                       double tolerance, int max_iter) {
    if (start.gauge != Gauge::eta) throw GaugeError("fixed-point start must be in gauge eta");
    const PauliFierzEtaSystem sys = pauli_fierz_eta_system(spec, psi);
    const RMatrix t = sys.q - RMatrix(sys.w.asDiagonal());
    RVector v = split(start.values);
    FixedPointResult result;
    for (result.iterations = 1; result.iterations <= max_iter; ++result.iterations) {
        const RVector next = -(sys.b + 2.0 * t * v).cwiseQuotient(2.0 * sys.w);
        const double change = (next - v).lpNorm<Eigen::Infinity>();
        v = next;
        if (!v.allFinite()) break;
        if (change <= tolerance * std::max(1.0, v.lpNorm<Eigen::Infinity>())) {
            result.converged = true;
            break;
        }
    }
    result.iterations = std::min(result.iterations, max_iter);
    result.eta = FieldAmplitudes::eta(join(v, spec.modes.count()));
    return result;
}

// ---------------------------------------------------------------------------
// Kernel and energy

PekarKernel pekar_kernel(const ModelSpec& spec, std::size_t cap) {
    require_gap(spec, "pekar_kernel");
    const CMatrix& table = spec.form_factor.table(0);
    const RVector d = spec.modes.weights.cwiseQuotient(spec.dispersion.values);
    PekarKernel kernel;
    kernel.u = table.conjugate() * d.cast<Complex>().asDiagonal() * table.transpose();

    const auto& g = spec.grid;
    const double n = static_cast<double>(g.total_points);
    if (n * n > static_cast<double>(cap)) {
        if (g.n_particles == 1) {
            throw InfeasibleError("Pekar kernel of " + std::to_string(g.total_points) + "^2 entries exceeds the cap");
        }
        return kernel;
    }
    const RMatrix re_u = kernel.u.real();
    const auto total = static_cast<Eigen::Index>(g.total_points);
    kernel.v_pekar = RMatrix::Zero(total, total);
    for (Eigen::Index x = 0; x < total; ++x) {
        for (Eigen::Index y = 0; y < total; ++y) {
            double acc = 0.0;
            for (int i = 0; i < g.n_particles; ++i) {
                const auto si = static_cast<Eigen::Index>(g.particle_site(static_cast<std::size_t>(x), i));
                for (int j = 0; j < g.n_particles; ++j) {
                    acc += re_u(si, static_cast<Eigen::Index>(g.particle_site(static_cast<std::size_t>(y), j)));
                }
            }
            kernel.v_pekar(x, y) = -acc;
        }
    }
    kernel.dense = true;
    return kernel;
}

PekarEnergy pekar_energy(const ModelSpec& spec, const WaveFunction& psi, std::size_t cap) {
    psi.require_normalized();
    const FieldAmplitudes eta = eta_pekar(spec, psi);
    PekarEnergy out;
    out.field_form = f_qc(spec, psi, eta);
    if (spec.family == Family::PauliFierz) {
        out.energy = out.kernel_form = out.field_form;
        return out;
    }

    const double k0 = assemble_k0(spec).expectation(psi);
    const PekarKernel kernel = pekar_kernel(spec, cap);
    double interaction = 0.0;
    if (kernel.dense) {
        const RVector density = psi.amplitudes.cwiseAbs2() * psi.cell_volume;
        interaction = density.dot(kernel.v_pekar * density);
    } else {
        RVector rho = RVector::Zero(kernel.u.rows());
        for (int p = 0; p < spec.grid.n_particles; ++p) rho += particle_marginal(psi, spec.grid, p);
        interaction = -rho.dot(kernel.u.real() * rho);
    }
    out.kernel_form = k0 + interaction;
    out.energy = out.field_form;

    const double scale = std::max({1.0, std::abs(out.kernel_form), std::abs(out.field_form)});
    if (std::abs(out.kernel_form - out.field_form) > 1e-10 * scale) {
        std::ostringstream msg;
        msg.precision(17);
        msg << "Pekar energy routes disagree: kernel " << out.kernel_form << " vs field " << out.field_form;
        throw ConsistencyError(msg.str());
    }
    return out;
}

Density one_particle_density(const WaveFunction& psi, const ParticleGrid& grid) {
    psi.require_normalized();
    Density rho;
    rho.site_volume = grid.frozen ? 1.0 : std::pow(grid.spacing, grid.dim);
    rho.values = RVector::Zero(static_cast<Eigen::Index>(grid.sites_per_particle()));
    for (int p = 0; p < grid.n_particles; ++p) rho.values += particle_marginal(psi, grid, p);
    rho.values /= rho.site_volume;
    return rho;
}

FieldAmplitudes eta_pekar_from_density(const ModelSpec& spec, const Density& rho) {
    require_gap(spec, "eta_pekar");
    if (spec.form_factor.per_particle()) throw ModelError("density route needs a shared form factor");
    const CVector m = spec.form_factor.table(0).transpose() * (rho.values * rho.site_volume).cast<Complex>();
    return FieldAmplitudes::eta(-m.cwiseProduct(inverse_sqrt_omega(spec).cast<Complex>()));
}

// ---------------------------------------------------------------------------
// Diagnostics

ConvexityGap convexity_gap(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& eta1,
                           const FieldAmplitudes& eta2, double beta) {
    if (!(beta > 0.0 && beta < 1.0)) throw ModelError("convexity_gap needs beta in (0, 1)");
    if (eta1.gauge != Gauge::eta || eta2.gauge != Gauge::eta) throw GaugeError("convexity_gap expects eta fields");
    const CVector mixed = beta * eta1.values + (1.0 - beta) * eta2.values;
    ConvexityGap out;
    out.gap = beta * f_qc_at(spec, psi, eta1.values) + (1.0 - beta) * f_qc_at(spec, psi, eta2.values) -
              f_qc_at(spec, psi, mixed);

    const CVector delta = eta1.values - eta2.values;
    double q = mode_norm_squared(spec.modes, delta);
    if (spec.family == Family::PauliFierz) {
        const auto a = effective_potential(spec, to_z(FieldAmplitudes::eta(delta), spec.dispersion));
        for (int p = 0; p < spec.grid.n_particles; ++p) {
            const RVector rho = particle_marginal(psi, spec.grid, p);
            const RVector& ap = a.per_particle[static_cast<std::size_t>(p)];
            q += spec.kinetic_coefficient(p) * spec.charge * spec.charge * rho.dot(ap.cwiseAbs2());
        }
    }
    out.prediction = beta * (1.0 - beta) * q;
    return out;
}

PolaronSplitting polaron_splitting(const ModelSpec& spec, const FieldAmplitudes& z, double cutoff) {
    if (spec.family != Family::Polaron) throw ModelError("polaron_splitting applies to the polaron family");
    if (!(cutoff > 0.0)) throw ModelError("splitting cutoff must be positive");
    const auto potential = effective_potential(spec, z);
    const auto& g = spec.grid;
    const auto sites = static_cast<Eigen::Index>(g.sites_per_particle());
    const double root_alpha = std::sqrt(spec.alpha);
    const int d = g.dim;

    PolaronSplitting out;
    out.cutoff = cutoff;
    RVector low = RVector::Zero(sites);
    RMatrix high = RMatrix::Zero(sites, d);
    RVector div_high = RVector::Zero(sites);
    for (int j = 0; j < spec.modes.count(); ++j) {
        const double kn = spec.modes.momentum_norm(j);
        const Complex wz = spec.modes.weights(j) * std::conj(z.values(j));
        if (kn <= cutoff) {
            ++out.low_modes;
        } else {
            ++out.high_modes;
        }
        for (Eigen::Index s = 0; s < sites; ++s) {
            const auto x = g.site_position(static_cast<std::size_t>(s));
            double kx = spec.modes.momenta(j, 0) * x[0];
            if (d == 2) kx += spec.modes.momenta(j, 1) * x[1];
            const Complex phase = std::exp(-kI * kx);
            if (kn <= cutoff) {
                low(s) += 2.0 * (wz * phase).real() / std::pow(kn, 0.5 * (d - 1));
            } else {
                const Complex amp = wz * kI * phase / std::pow(kn, 0.5 * (d + 1));
                for (int a = 0; a < d; ++a) high(s, a) += 2.0 * (amp * (spec.modes.momenta(j, a) / kn)).real();
                // div of i k_hat |k|^-(d+1)/2 e^{-ikx} is |k|^-(d-1)/2 e^{-ikx}.
                div_high(s) += 2.0 * (wz * phase).real() / std::pow(kn, 0.5 * (d - 1));
            }
        }
    }
    out.low_sup = low.lpNorm<Eigen::Infinity>();
    out.high_sup = high.rowwise().norm().lpNorm<Eigen::Infinity>();
    out.reconstruction_error = (potential.per_particle.front() - root_alpha * (low + div_high)).lpNorm<Eigen::Infinity>();
    return out;
}

}  // namespace qcl
