#include "qcl/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "qcl/minimize.hpp"
#include "qcl/parallel.hpp"
#include "qcl/pekar.hpp"

namespace qcl {

void AtomicStateMeasure::validate() const {
    if (atoms.empty()) throw ModelError("atomic measure has no atoms");
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!(a.weight >= 0.0)) throw ModelError("atomic measure weights must be non-negative");
        total += a.weight;
        a.psi.require_normalized();
    }
    if (std::abs(total - 1.0) > 1e-12) throw ModelError("atomic measure weights must sum to 1");
}

AtomicStateMeasure dirac_measure(const WaveFunction& psi, const FieldAmplitudes& z) {
    return AtomicStateMeasure{{Atom{1.0, z, psi}}};
}

AtomicStateMeasure mixture(const AtomicStateMeasure& m1, const AtomicStateMeasure& m2, double beta) {
    if (!(beta >= 0.0 && beta <= 1.0)) throw ModelError("mixture weight must lie in [0, 1]");
    AtomicStateMeasure out;
    for (auto a : m1.atoms) {
        a.weight *= beta;
        out.atoms.push_back(std::move(a));
    }
    for (auto a : m2.atoms) {
        a.weight *= 1.0 - beta;
        out.atoms.push_back(std::move(a));
    }
    return out;
}

double e_svm(const ModelSpec& spec, const AtomicStateMeasure& measure) {
    measure.validate();
    double e = 0.0;
    for (const auto& a : measure.atoms) e += a.weight * qc_energy(spec, a.psi, a.z);
    return e;
}

double e_pm(const ModelSpec& spec, const WaveFunction& psi, const std::vector<double>& weights,
            const std::vector<FieldAmplitudes>& points) {
    if (weights.size() != points.size() || weights.empty()) throw ModelError("e_pm needs one weight per point");
    AtomicStateMeasure m;
    for (std::size_t i = 0; i < weights.size(); ++i) m.atoms.push_back({weights[i], points[i], psi});
    return e_svm(spec, m);
}

namespace {

CVector gaussian(Eigen::Index n, std::mt19937_64& rng) {
    std::normal_distribution<double> normal;
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = Complex(normal(rng), normal(rng));
    return v;
}

WaveFunction perturbed(const WaveFunction& psi, double size, std::mt19937_64& rng) {
    CVector noise = gaussian(psi.amplitudes.size(), rng);
    noise /= std::sqrt(psi.cell_volume) * noise.norm();
    return WaveFunction::normalized(psi.amplitudes + size * noise, psi.cell_volume);
}

std::vector<double> random_weights(std::size_t n, std::mt19937_64& rng) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) total += (x = expo(rng));
    for (auto& x : w) x /= total;
    return w;
}

struct Sample {
    AtomicStateMeasure measure;
    double e_svm = 0.0;
    double e_pm = 0.0;
    double min_script_i = std::numeric_limits<double>::infinity();
};

}  // namespace

AtomicBoundReport atomic_bound_check(const ModelSpec& spec, const QcReference& ref, int n_samples,
                                     std::uint64_t seed, const AtomicBoundOptions& options) {
    if (n_samples < 1) throw ModelError("atomic_bound_check needs n_samples >= 1");
    ref.psi.require_normalized();
    const double z_scale = std::max(1.0, ref.z.values.cwiseAbs().maxCoeff());
    const double lower = ref.e_qc - options.tolerance;

    std::vector<Sample> samples(static_cast<std::size_t>(n_samples));
    parallel_for(samples.size(), [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(seed, i));
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        auto log_size = [&] { return std::pow(10.0, -4.0 * unit(rng)); };
        const auto n_atoms = 1 + static_cast<std::size_t>(rng() % 5);
        const auto weights = random_weights(n_atoms, rng);
        Sample& s = samples[i];
        for (std::size_t k = 0; k < n_atoms; ++k) {
            Atom a;
            a.weight = weights[k];
            a.psi = unit(rng) < 0.5 ? perturbed(ref.psi, log_size(), rng)
                                    : random_wave_function(spec.grid, rng());
            a.z = FieldAmplitudes::z(ref.z.values + log_size() * z_scale * gaussian(ref.z.values.size(), rng));
            s.measure.atoms.push_back(std::move(a));
        }
        s.e_svm = e_svm(spec, s.measure);
        std::vector<FieldAmplitudes> points;
        for (const auto& a : s.measure.atoms) {
            points.push_back(a.z);
            s.min_script_i = std::min(s.min_script_i, script_i(spec, a.z));
        }
        s.e_pm = e_pm(spec, s.measure.atoms.front().psi, weights, points);
    });

    AtomicBoundReport report;
    report.n_samples = n_samples;
    report.e_qc = ref.e_qc;
    report.min_e_svm = report.min_e_pm = report.min_script_i = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) {
        report.min_e_svm = std::min(report.min_e_svm, s.e_svm);
        report.min_e_pm = std::min(report.min_e_pm, s.e_pm);
        report.min_script_i = std::min(report.min_script_i, s.min_script_i);
        if (s.e_svm < lower || s.e_pm < lower || s.min_script_i < lower) report.witnesses.push_back(s.measure);
    }

    report.e_svm_dirac = e_svm(spec, dirac_measure(ref.psi, ref.z));
    report.e_pm_dirac = e_pm(spec, ref.psi, {1.0}, {ref.z});
    report.e_pekar = pekar_energy(spec, ref.psi).energy;

    const CVector far = ref.z.values + CVector::Constant(ref.z.values.size(), Complex(3.0 * z_scale, 0.0));
    report.adversarial =
        e_svm(spec, mixture(dirac_measure(ref.psi, ref.z), dirac_measure(ref.psi, FieldAmplitudes::z(far)), 0.5));

    // Near-minimizing measure: atoms spread around the minimizer with heavy-tailed
    // radii, scaled by bisection until the excess energy is delta / 2.
    std::mt19937_64 rng(derive_seed(seed, static_cast<std::size_t>(n_samples) + 1));
    std::lognormal_distribution<double> radius(0.0, 1.5);
    const auto m = static_cast<std::size_t>(options.near_minimizing_atoms);
    const auto weights = random_weights(m, rng);
    std::vector<double> radii(m);
    std::vector<CVector> psi_dirs(m), z_dirs(m);
    for (std::size_t k = 0; k < m; ++k) {
        radii[k] = radius(rng);
        psi_dirs[k] = gaussian(ref.psi.amplitudes.size(), rng);
        psi_dirs[k] /= std::sqrt(ref.psi.cell_volume) * psi_dirs[k].norm();
        z_dirs[k] = gaussian(ref.z.values.size(), rng);
    }
    auto build = [&](double t) {
        AtomicStateMeasure near;
        for (std::size_t k = 0; k < m; ++k) {
            const double r = t * radii[k];
            near.atoms.push_back({weights[k], FieldAmplitudes::z(ref.z.values + r * z_dirs[k]),
                                  WaveFunction::normalized(ref.psi.amplitudes + r * psi_dirs[k], ref.psi.cell_volume)});
        }
        return near;
    };
    const double target = 0.5 * options.delta;
    double lo = 0.0, hi = 1e-3;
    while (e_svm(spec, build(hi)) - ref.e_qc < target && hi < 1e6) hi *= 2.0;
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        (e_svm(spec, build(mid)) - ref.e_qc < target ? lo : hi) = mid;
    }
    const AtomicStateMeasure near = build(hi);
    report.delta = options.delta;
    report.near_minimizing_e_svm = e_svm(spec, near);
    std::vector<double> atom_energy;
    for (const auto& a : near.atoms) atom_energy.push_back(qc_energy(spec, a.psi, a.z));
    bool concentration_ok = report.near_minimizing_e_svm <= ref.e_qc + options.delta;
    for (int k = options.k_min; k <= options.k_max; ++k) {
        ConcentrationTally tally;
        tally.k = k;
        for (std::size_t i = 0; i < near.atoms.size(); ++i) {
            if (atom_energy[i] >= ref.e_qc + k * options.delta) tally.weight += near.atoms[i].weight;
        }
        tally.ok = tally.weight < 1.0 / k;
        concentration_ok = concentration_ok && tally.ok;
        report.concentration.push_back(tally);
    }

    const double tol = options.tolerance;
    report.passed = report.witnesses.empty() && std::abs(report.e_svm_dirac - ref.e_qc) <= tol &&
                    std::abs(report.e_pm_dirac - ref.e_qc) <= tol && std::abs(report.e_pekar - ref.e_qc) <= tol &&
                    report.min_script_i >= lower && report.adversarial > ref.e_qc && concentration_ok;
    return report;
}

}  // namespace qcl
