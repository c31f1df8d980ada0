#pragma once

#include <cstdint>
#include <vector>

#include "qcl/model.hpp"
#include "qcl/qc_energy.hpp"

namespace qcl {

struct Atom {
    double weight = 0.0;
    FieldAmplitudes z;
    WaveFunction psi;
};

/// Finite atomic state-valued measure sum_k lambda_k |psi_k><psi_k| delta_{z_k}.
struct AtomicStateMeasure {
    std::vector<Atom> atoms;

    /// Throws ModelError unless weights are non-negative and sum to 1 within 1e-12,
    /// and NormalizationError for a non-normalized state.
    void validate() const;
};

AtomicStateMeasure dirac_measure(const WaveFunction& psi, const FieldAmplitudes& z);
/// beta m1 + (1 - beta) m2 as a concatenation of reweighted atoms.
AtomicStateMeasure mixture(const AtomicStateMeasure& m1, const AtomicStateMeasure& m2, double beta);

double e_svm(const ModelSpec& spec, const AtomicStateMeasure& measure);
double e_pm(const ModelSpec& spec, const WaveFunction& psi, const std::vector<double>& weights,
            const std::vector<FieldAmplitudes>& points);

/// Minimizer data the bound check compares against.
struct QcReference {
    double e_qc = 0.0;
    WaveFunction psi;
    FieldAmplitudes z;
};

struct ConcentrationTally {
    int k = 0;
    double weight = 0.0;  // measure weight on atoms with E_qc[psi, z] >= E_qc + k delta
    bool ok = false;      // weight < 1/k
};

struct AtomicBoundReport {
    int n_samples = 0;
    double min_e_svm = 0.0;
    double min_e_pm = 0.0;
    double min_script_i = 0.0;  // over the sampled points
    double e_qc = 0.0;
    double e_svm_dirac = 0.0;
    double e_pm_dirac = 0.0;
    double e_pekar = 0.0;
    double adversarial = 0.0;  // one atom at the minimizer, one far away
    double delta = 0.0;
    double near_minimizing_e_svm = 0.0;
    std::vector<ConcentrationTally> concentration;
    std::vector<AtomicStateMeasure> witnesses;  // samples that violated the bound
    bool passed = false;
};

struct AtomicBoundOptions {
    double tolerance = 1e-8;
    double delta = 1e-2;
    int k_min = 2;
    int k_max = 10;
    int near_minimizing_atoms = 40;
};

AtomicBoundReport atomic_bound_check(const ModelSpec& spec, const QcReference& reference, int n_samples,
                                     std::uint64_t seed, const AtomicBoundOptions& options = {});

}  // namespace qcl
