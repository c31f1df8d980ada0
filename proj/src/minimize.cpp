#include "qcl/minimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>

#include "qcl/parallel.hpp"
#include "qcl/pekar.hpp"

namespace qcl {

GroundState ground_eigenpair(const ParticleOperator& op, double cell_volume, const EigenOptions& options) {
    const EigenPair pair = lowest_eigenpair(op.matrix, options);
    return {pair.value + op.offset, WaveFunction::from_unit_vector(pair.vector, cell_volume), pair.residual};
}

double script_i(const ModelSpec& spec, const FieldAmplitudes& z, const EigenOptions& options) {
    return ground_eigenpair(assemble_hz(spec, z), spec.grid.cell_volume(), options).energy;
}

WaveFunction random_wave_function(const ParticleGrid& grid, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    CVector v(static_cast<Eigen::Index>(grid.total_points));
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = Complex(normal(rng), normal(rng));
    return WaveFunction::normalized(std::move(v), grid.cell_volume());
}

FieldAmplitudes random_eta(const ModelSpec& spec, std::uint64_t seed) {
    std::mt19937_64 rng(seed ^ 0xA5A5A5A55A5A5A5AULL);
    std::normal_distribution<double> normal;
    const double scale =
        std::sqrt(form_factor_sup_norm_squared(spec.form_factor, spec.modes, spec.dispersion, -1.0));
    CVector eta(spec.modes.count());
    for (Eigen::Index j = 0; j < eta.size(); ++j) eta(j) = scale * Complex(normal(rng), normal(rng));
    return FieldAmplitudes::eta(std::move(eta));
}

namespace {

// Warm start: previous eigenvector nudged toward the default start so symmetry
// sectors absent from the previous iterate are still reachable.
EigenOptions warm_started(EigenOptions options, const WaveFunction& psi) {
    const auto n = psi.amplitudes.size();
    options.start = std::sqrt(psi.cell_volume) * psi.amplitudes +
                    CVector::Constant(n, Complex(1e-3 / std::sqrt(static_cast<double>(n)), 0.0));
    return options;
}

}  // namespace

MinimizeResult alternating_minimize(const ModelSpec& spec, const MinimizeOptions& options,
                                    const std::optional<WaveFunction>& init_psi,
                                    const std::optional<FieldAmplitudes>& init_eta) {
    WaveFunction psi = init_psi ? *init_psi : random_wave_function(spec.grid, options.seed);
    psi.require_normalized();
    FieldAmplitudes eta = init_eta ? to_eta(*init_eta, spec.dispersion)
                                   : (init_psi ? eta_pekar(spec, psi) : random_eta(spec, options.seed));

    MinimizeResult result;
    const double vol = spec.grid.cell_volume();
    double previous = 0.0;
    for (int t = 1; t <= options.max_iter; ++t) {
        const EigenOptions eig = t == 1 && !init_psi ? options.eigen : warm_started(options.eigen, psi);
        const GroundState gs = ground_eigenpair(assemble_hz(spec, to_z(eta, spec.dispersion)), vol, eig);
        psi = gs.psi;
        eta = eta_pekar(spec, psi);
        const FieldAmplitudes z = to_z(eta, spec.dispersion);
        const double energy = qc_energy(spec, psi, z);
        const ELResiduals res = el_residual(spec, psi, z);

        const double decrement = t == 1 ? gs.energy - energy : previous - energy;
        previous = energy;
        result.energy_trace.push_back({t, energy, res.psi_residual, res.field_residual});
        result.iterations = t;
        result.psi_star = psi;
        result.z_star = z;
        result.energy = energy;
        result.el_residuals = res;
        if (decrement < options.tol_e && res.psi_residual < options.tol_r && res.field_residual < options.tol_r) {
            result.converged = true;
            break;
        }
    }
    return result;
}

MultiStartReport multi_start(const ModelSpec& spec, int n_starts, std::uint64_t seed, MinimizeOptions options) {
    if (n_starts < 1) throw ModelError("multi_start needs n_starts >= 1");
    MultiStartReport report;
    report.runs.resize(static_cast<std::size_t>(n_starts));
    parallel_for(report.runs.size(), [&](std::size_t i) {
        MinimizeOptions local = options;
        local.seed = derive_seed(seed, i);
        report.runs[i] = alternating_minimize(spec, local);
    });

    const bool any_converged =
        std::any_of(report.runs.begin(), report.runs.end(), [](const auto& r) { return r.converged; });
    bool have_best = false;
    report.min_energy = report.max_energy = report.runs.front().energy;
    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        const auto& r = report.runs[i];
        report.min_energy = std::min(report.min_energy, r.energy);
        report.max_energy = std::max(report.max_energy, r.energy);
        if (any_converged && !r.converged) continue;
        if (!have_best || r.energy < report.runs[report.best_index].energy) {
            report.best_index = i;
            have_best = true;
        }
    }
    report.best = report.runs[report.best_index];

    for (std::size_t i = 0; i < report.runs.size(); ++i) {
        for (std::size_t j = i + 1; j < report.runs.size(); ++j) {
            const double overlap = std::abs(report.runs[i].psi_star.inner(report.runs[j].psi_star));
            report.psi_distances.push_back(std::sqrt(std::max(0.0, 2.0 - 2.0 * overlap)));
            report.z_distances.push_back(
                std::sqrt(mode_norm_squared(spec.modes, report.runs[i].z_star.values - report.runs[j].z_star.values)));
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Pekar side

namespace {

struct PekarPoint {
    CVector u;  // unit Euclidean vector, psi = u / sqrt(vol)
    double energy = 0.0;
    CVector gradient;
    ParticleOperator h;
    FieldAmplitudes eta;
};

PekarPoint evaluate(const ModelSpec& spec, CVector u) {
    const double vol = spec.grid.cell_volume();
    u /= u.norm();
    PekarPoint p;
    const WaveFunction psi = WaveFunction::from_unit_vector(u, vol);
    p.eta = eta_pekar(spec, psi);
    p.h = assemble_hz(spec, to_z(p.eta, spec.dispersion));
    const CVector hu = p.h.apply(u);
    p.energy = u.dot(hu).real();
    // Envelope theorem: eta is optimal for psi, so H_{z_psi} psi is the full gradient.
    p.gradient = hu - p.energy * u;
    p.u = std::move(u);
    return p;
}

double operator_scale(const ParticleOperator& h) {
    double worst = 0.0;
    for (int r = 0; r < h.matrix.outerSize(); ++r) {
        double row = 0.0;
        for (SparseMatrix::InnerIterator it(h.matrix, r); it; ++it) row += std::abs(it.value());
        worst = std::max(worst, row);
    }
    return worst + std::abs(h.offset);
}

}  // namespace

PekarMinimizeResult pekar_minimize(const ModelSpec& spec, const PekarOptions& options,
                                   const std::optional<WaveFunction>& init_psi) {
    const double vol = spec.grid.cell_volume();
    CVector u0;
    if (init_psi) {
        init_psi->require_normalized();
        u0 = std::sqrt(vol) * init_psi->amplitudes;
    } else {
        u0 = lowest_eigenpair(assemble_k0(spec).matrix, options.eigen).vector;
    }

    PekarPoint cur = evaluate(spec, u0);
    PekarMinimizeResult result;
    result.energy_trace.push_back(cur.energy);
    std::deque<double> recent{cur.energy};
    double tau = 1.0 / std::max(1e-12, operator_scale(cur.h));
    CVector prev_u, prev_g;

    auto eigen_restart = [&]() {
        const EigenPair gs = lowest_eigenpair(cur.h.matrix, warm_started(options.eigen, WaveFunction::from_unit_vector(cur.u, vol)));
        PekarPoint cand = evaluate(spec, gs.vector);
        if (cand.energy < cur.energy) {
            cur = std::move(cand);
            prev_u.resize(0);
            recent.assign(1, cur.energy);
        }
    };

    for (int it = 1; it <= options.max_iter; ++it) {
        result.iterations = it;
        if (cur.gradient.norm() <= options.tol_r) {
            result.converged = true;
            break;
        }
        if (options.restart_interval > 0 && it % options.restart_interval == 0) {
            eigen_restart();
            if (cur.gradient.norm() <= options.tol_r) {
                result.converged = true;
                break;
            }
        }
        if (prev_u.size() == cur.u.size()) {
            const CVector s = cur.u - prev_u;
            const CVector y = cur.gradient - prev_g;
            const double sy = s.dot(y).real();
            if (sy > 0.0) tau = std::clamp(s.squaredNorm() / sy, 1e-10, 1e6);
        }
        const double g2 = cur.gradient.squaredNorm();
        const double reference = *std::max_element(recent.begin(), recent.end());
        bool accepted = false;
        for (int backtrack = 0; backtrack < 60; ++backtrack) {
            PekarPoint trial = evaluate(spec, cur.u - tau * cur.gradient);
            if (trial.energy <= reference - 1e-4 * tau * g2) {
                prev_u = cur.u;
                prev_g = cur.gradient;
                cur = std::move(trial);
                accepted = true;
                break;
            }
            tau *= 0.5;
        }
        if (!accepted) break;  // no descent possible at working precision
        result.energy_trace.push_back(cur.energy);
        recent.push_back(cur.energy);
        if (recent.size() > 10) recent.pop_front();
    }

    eigen_restart();
    result.gradient_norm = cur.gradient.norm();
    result.converged = result.gradient_norm <= options.tol_r;
    result.energy = cur.energy;
    result.psi = WaveFunction::from_unit_vector(cur.u, vol);
    result.eta = cur.eta;
    if (result.energy_trace.back() != cur.energy) result.energy_trace.push_back(cur.energy);
    return result;
}

EquivalenceReport equivalence_check(const ModelSpec& spec, double tolerance, int n_starts, std::uint64_t seed,
                                    const MinimizeOptions& options, const PekarOptions& pekar_options) {
    if (!is_trapping(spec)) throw ModelError("equivalence_check requires a trapping external potential");
    EquivalenceReport report;
    report.tolerance = tolerance;
    report.qc = multi_start(spec, n_starts, seed, options);
    report.pekar = pekar_minimize(spec, pekar_options);
    report.e_qc = report.qc.best.energy;
    report.e_pekar = report.pekar.energy;
    report.gap = std::abs(report.e_qc - report.e_pekar);
    report.pekar_at_qc = pekar_energy(spec, report.qc.best.psi_star).energy;
    report.fqc_at_pekar = f_qc(spec, report.pekar.psi, eta_pekar(spec, report.pekar.psi));
    report.qc_converged = report.qc.best.converged;
    report.pekar_converged = report.pekar.converged;
    report.passed = report.gap <= tolerance && std::abs(report.pekar_at_qc - report.e_pekar) <= tolerance &&
                    std::abs(report.fqc_at_pekar - report.e_qc) <= tolerance;
    return report;
}

}  // namespace qcl
