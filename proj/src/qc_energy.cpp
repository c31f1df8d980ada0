#include "qcl/qc_energy.hpp"

#include <cmath>
#include <sstream>

namespace qcl {

// ---------------------------------------------------------------------------
// Wave functions and fields

WaveFunction WaveFunction::normalized(CVector amplitudes, double cell_volume) {
    const double n2 = cell_volume * amplitudes.squaredNorm();
    if (!(n2 > 0.0)) throw NormalizationError("cannot normalize a zero wave function");
    amplitudes /= std::sqrt(n2);
    return WaveFunction{std::move(amplitudes), cell_volume};
}

WaveFunction WaveFunction::from_unit_vector(const CVector& v, double cell_volume) {
    return WaveFunction{v / std::sqrt(cell_volume), cell_volume};
}

void WaveFunction::require_normalized() const {
    if (!is_normalized()) {
        std::ostringstream msg;
        msg << "wave function not normalized: ||psi||^2 = " << norm_squared();
        throw NormalizationError(msg.str());
    }
}

FieldAmplitudes to_eta(const FieldAmplitudes& field, const Dispersion& dispersion) {
    if (field.gauge == Gauge::eta) return field;
    return FieldAmplitudes::eta(field.values.cwiseProduct(dispersion.values.cwiseSqrt().cast<Complex>()));
}

FieldAmplitudes to_z(const FieldAmplitudes& field, const Dispersion& dispersion) {
    if (field.gauge == Gauge::z) return field;
    if (!(dispersion.mass_gap() > 0.0)) throw ModelError("omega^-1/2 requires mass_gap > 0");
    return FieldAmplitudes::z(field.values.cwiseQuotient(dispersion.values.cwiseSqrt().cast<Complex>()));
}

Complex mode_inner(const FieldModes& modes, const CVector& a, const CVector& b) {
    return a.dot(modes.weights.cast<Complex>().cwiseProduct(b));
}

double mode_norm_squared(const FieldModes& modes, const CVector& a) {
    return modes.weights.dot(a.cwiseAbs2());
}

namespace {

void require_gauge(const FieldAmplitudes& f, Gauge g, const ModelSpec& spec) {
    if (f.gauge != g) {
        throw GaugeError(g == Gauge::z ? "expected a field in gauge z, got eta" : "expected a field in gauge eta, got z");
    }
    if (f.values.size() != spec.modes.count()) throw GaugeError("field length differs from the mode count");
}

bool on_lower_wall(const ParticleGrid& g, std::size_t flat, int p, int a) { return g.axis_index(flat, p, a) == 0; }
bool on_upper_wall(const ParticleGrid& g, std::size_t flat, int p, int a) {
    return g.axis_index(flat, p, a) == g.points_per_axis - 1;
}

// Kinetic part sum_j c_j (-Delta_j) with antisymmetric ghost cells (walls at +-L).
void push_kinetic(const ModelSpec& spec, std::vector<Triplet>& triplets, RVector& diagonal) {
    const auto& g = spec.grid;
    if (g.frozen) return;
    const double inv_h2 = 1.0 / (g.spacing * g.spacing);
    for (std::size_t flat = 0; flat < g.total_points; ++flat) {
        const auto row = static_cast<Eigen::Index>(flat);
        for (int p = 0; p < g.n_particles; ++p) {
            const double c = spec.kinetic_coefficient(p) * inv_h2;
            for (int a = 0; a < g.dim; ++a) {
                const std::size_t s = g.stride(p, a);
                diagonal(row) += 2.0 * c;
                if (on_lower_wall(g, flat, p, a)) {
                    diagonal(row) += c;
                } else {
                    triplets.emplace_back(row, static_cast<Eigen::Index>(flat - s), Complex(-c, 0.0));
                }
                if (on_upper_wall(g, flat, p, a)) {
                    diagonal(row) += c;
                } else {
                    triplets.emplace_back(row, static_cast<Eigen::Index>(flat + s), Complex(-c, 0.0));
                }
            }
        }
    }
}

SparseMatrix finish(const ModelSpec& spec, std::vector<Triplet>& triplets, const RVector& diagonal) {
    const auto n = static_cast<Eigen::Index>(spec.grid.total_points);
    for (Eigen::Index i = 0; i < n; ++i) triplets.emplace_back(i, i, Complex(diagonal(i), 0.0));
    SparseMatrix m(n, n);
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

// Probability current density of `particle` marginalized onto its sites:
// cur(s) = sum_{X : x_j = s} 2 Re(conj(psi) P_j psi) h^(dN).
RVector particle_current(const WaveFunction& psi, const ParticleGrid& grid, int particle) {
    const CVector ppsi = apply_momentum(psi.amplitudes, grid, particle);
    RVector cur = RVector::Zero(static_cast<Eigen::Index>(grid.sites_per_particle()));
    for (std::size_t flat = 0; flat < grid.total_points; ++flat) {
        const auto i = static_cast<Eigen::Index>(flat);
        cur(static_cast<Eigen::Index>(grid.particle_site(flat, particle))) +=
            2.0 * (std::conj(psi.amplitudes(i)) * ppsi(i)).real() * psi.cell_volume;
    }
    return cur;
}

}  // namespace

double ParticleOperator::expectation(const WaveFunction& psi) const {
    const Complex raw = psi.amplitudes.dot(matrix * psi.amplitudes);
    return psi.cell_volume * raw.real() + offset * psi.norm_squared();
}

// ---------------------------------------------------------------------------
// Operators

ParticleOperator assemble_k0(const ModelSpec& spec) {
    std::vector<Triplet> triplets;
    RVector diagonal = spec.external_potential;
    push_kinetic(spec, triplets, diagonal);
    return ParticleOperator{finish(spec, triplets, diagonal), 0.0};
}

EffectivePotential effective_potential(const ModelSpec& spec, const FieldAmplitudes& z) {
    require_gauge(z, Gauge::z, spec);
    EffectivePotential out;
    out.minimal_coupling = spec.family == Family::PauliFierz;
    const CVector weighted_conj = spec.modes.weights.cast<Complex>().cwiseProduct(z.values.conjugate());
    for (int p = 0; p < spec.grid.n_particles; ++p) {
        out.per_particle.push_back(2.0 * (spec.form_factor.table(p) * weighted_conj).real());
    }
    return out;
}

double field_energy(const ModelSpec& spec, const FieldAmplitudes& z) {
    require_gauge(z, Gauge::z, spec);
    return spec.modes.weights.cwiseProduct(spec.dispersion.values).dot(z.values.cwiseAbs2());
}

ParticleOperator assemble_hz(const ModelSpec& spec, const FieldAmplitudes& z) {
    const EffectivePotential pot = effective_potential(spec, z);
    const auto& g = spec.grid;
    std::vector<Triplet> triplets;
    RVector diagonal = spec.external_potential;
    push_kinetic(spec, triplets, diagonal);

    if (!pot.minimal_coupling) {
        for (std::size_t flat = 0; flat < g.total_points; ++flat) {
            double v = 0.0;
            for (int p = 0; p < g.n_particles; ++p) {
                v += pot.per_particle[static_cast<std::size_t>(p)](static_cast<Eigen::Index>(g.particle_site(flat, p)));
            }
            diagonal(static_cast<Eigen::Index>(flat)) += v;
        }
    } else {
        // (1/2m_j) [ e (a_j P_j + P_j a_j) + e^2 a_j^2 ] with P_j the central difference.
        const double e = spec.charge;
        for (std::size_t flat = 0; flat < g.total_points; ++flat) {
            const auto row = static_cast<Eigen::Index>(flat);
            for (int p = 0; p < g.n_particles; ++p) {
                const auto& a = pot.per_particle[static_cast<std::size_t>(p)];
                const double c = spec.kinetic_coefficient(p);
                const double a_here = a(static_cast<Eigen::Index>(g.particle_site(flat, p)));
                diagonal(row) += c * e * e * a_here * a_here;
                if (g.frozen) continue;
                const std::size_t s = g.stride(p, 0);
                const double half_inv_h = 0.5 / g.spacing;
                if (!on_upper_wall(g, flat, p, 0)) {
                    const double a_next = a(static_cast<Eigen::Index>(g.particle_site(flat + s, p)));
                    triplets.emplace_back(row, static_cast<Eigen::Index>(flat + s),
                                          c * e * (a_here + a_next) * Complex(0.0, -half_inv_h));
                }
                if (!on_lower_wall(g, flat, p, 0)) {
                    const double a_prev = a(static_cast<Eigen::Index>(g.particle_site(flat - s, p)));
                    triplets.emplace_back(row, static_cast<Eigen::Index>(flat - s),
                                          c * e * (a_here + a_prev) * Complex(0.0, half_inv_h));
                }
            }
        }
    }
    return ParticleOperator{finish(spec, triplets, diagonal), field_energy(spec, z)};
}

// ---------------------------------------------------------------------------
// Energies

double qc_energy(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z) {
    psi.require_normalized();
    return assemble_hz(spec, z).expectation(psi);
}

double f_qc(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& eta) {
    require_gauge(eta, Gauge::eta, spec);
    if (!(spec.dispersion.mass_gap() > 0.0)) throw ModelError("f_qc requires mass_gap > 0");
    return qc_energy(spec, psi, to_z(eta, spec.dispersion));
}

CVector field_source(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z) {
    require_gauge(z, Gauge::z, spec);
    const auto& g = spec.grid;
    CVector m = CVector::Zero(spec.modes.count());
    if (spec.family != Family::PauliFierz) {
        for (int p = 0; p < g.n_particles; ++p) {
            const RVector rho = particle_marginal(psi, g, p);
            m += spec.form_factor.table(p).transpose() * rho.cast<Complex>();
        }
        return m;
    }
    const EffectivePotential pot = effective_potential(spec, z);
    const double e = spec.charge;
    for (int p = 0; p < g.n_particles; ++p) {
        const double c = spec.kinetic_coefficient(p);
        const RVector rho = particle_marginal(psi, g, p);
        const CMatrix& table = spec.form_factor.table(p);
        const RVector weight = 2.0 * e * e * rho.cwiseProduct(pot.per_particle[static_cast<std::size_t>(p)]);
        CVector contrib = table.transpose() * weight.cast<Complex>();
        if (!g.frozen) {
            const RVector cur = particle_current(psi, g, p);
            contrib += e * (table.transpose() * cur.cast<Complex>());
        }
        m += c * contrib;
    }
    return m;
}

CVector qc_field_gradient(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z) {
    const CVector m = field_source(spec, psi, z);
    const CVector stationarity = spec.dispersion.values.cast<Complex>().cwiseProduct(z.values) + m;
    return 2.0 * spec.modes.weights.cast<Complex>().cwiseProduct(stationarity);
}

CVector f_qc_gradient(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& eta) {
    require_gauge(eta, Gauge::eta, spec);
    const CVector gz = qc_field_gradient(spec, psi, to_z(eta, spec.dispersion));
    return gz.cwiseQuotient(spec.dispersion.values.cwiseSqrt().cast<Complex>());
}

ELResiduals el_residual(const ModelSpec& spec, const WaveFunction& psi, const FieldAmplitudes& z) {
    const ParticleOperator h = assemble_hz(spec, z);
    ELResiduals r;
    const CVector hpsi = h.apply(psi.amplitudes);
    r.multiplier = psi.cell_volume * psi.amplitudes.dot(hpsi).real() / psi.norm_squared();
    r.psi_residual = std::sqrt(psi.cell_volume) * (hpsi - r.multiplier * psi.amplitudes).norm();

    const CVector m = field_source(spec, psi, z);
    double acc = 0.0;
    for (int j = 0; j < spec.modes.count(); ++j) {
        const double omega = spec.dispersion.values(j);
        const double mag2 = std::norm(omega * z.values(j) + m(j));
        acc += spec.modes.weights(j) * (omega > 0.0 ? mag2 / omega : mag2);
    }
    r.field_residual = std::sqrt(acc);
    return r;
}

// ---------------------------------------------------------------------------
// Grid helpers

RVector particle_marginal(const WaveFunction& psi, const ParticleGrid& grid, int particle) {
    RVector rho = RVector::Zero(static_cast<Eigen::Index>(grid.sites_per_particle()));
    for (std::size_t flat = 0; flat < grid.total_points; ++flat) {
        rho(static_cast<Eigen::Index>(grid.particle_site(flat, particle))) +=
            std::norm(psi.amplitudes(static_cast<Eigen::Index>(flat))) * psi.cell_volume;
    }
    return rho;
}

CVector apply_momentum(const CVector& v, const ParticleGrid& grid, int particle) {
    CVector out = CVector::Zero(v.size());
    if (grid.frozen) return out;
    const std::size_t s = grid.stride(particle, 0);
    const Complex coeff(0.0, -0.5 / grid.spacing);
    for (std::size_t flat = 0; flat < grid.total_points; ++flat) {
        const int i = grid.axis_index(flat, particle, 0);
        Complex diff{};
        if (i + 1 < grid.points_per_axis) diff += v(static_cast<Eigen::Index>(flat + s));
        if (i > 0) diff -= v(static_cast<Eigen::Index>(flat - s));
        out(static_cast<Eigen::Index>(flat)) = coeff * diff;
    }
    return out;
}

Complex momentum_anticommutator_expectation(const WaveFunction& psi, const ParticleGrid& grid, int particle,
                                            const CVector& f) {
    const CVector ppsi = apply_momentum(psi.amplitudes, grid, particle);
    CVector fpsi(psi.amplitudes.size());
    CVector fppsi(psi.amplitudes.size());
    for (std::size_t flat = 0; flat < grid.total_points; ++flat) {
        const auto i = static_cast<Eigen::Index>(flat);
        const Complex fx = f(static_cast<Eigen::Index>(grid.particle_site(flat, particle)));
        fpsi(i) = fx * psi.amplitudes(i);
        fppsi(i) = fx * ppsi(i);
    }
    const CVector pfpsi = apply_momentum(fpsi, grid, particle);
    return psi.cell_volume * psi.amplitudes.dot(fppsi + pfpsi);
}

}  // namespace qcl
