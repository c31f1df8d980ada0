#pragma once

#include <cstddef>
#include <map>
#include <vector>

#include "qcl/eigensolver.hpp"
#include "qcl/model.hpp"
#include "qcl/qc_energy.hpp"

namespace qcl {

/// Bosonic occupation vectors with total excitation <= n_max, ordered by grade
/// and, within a grade, lexicographically descending. The basis for n_max is
/// therefore a leading block of the basis for n_max + 1.
class FockBasis {
public:
    FockBasis(int n_modes, int n_max);

    int n_modes() const { return n_modes_; }
    int n_max() const { return n_max_; }
    std::size_t dim() const { return states_.size(); }
    const std::vector<int>& state(std::size_t i) const { return states_[i]; }
    int grade(std::size_t i) const { return grades_[i]; }
    /// Index of an occupation vector, or -1 when it lies outside the truncation.
    long index_of(const std::vector<int>& occupation) const;

private:
    int n_modes_;
    int n_max_;
    std::vector<std::vector<int>> states_;
    std::vector<int> grades_;
    std::map<std::vector<int>, std::size_t> lookup_;
};

/// binomial(n_modes + n_max, n_max)
std::size_t fock_dimension(int n_modes, int n_max);

/// a_eps,j lowering mode j with amplitude sqrt(eps n_j); raising operators are the adjoints.
std::vector<SparseMatrix> ladder_operators(const FockBasis& basis, double epsilon);

/// eps sum_j omega_j n_j on the diagonal.
SparseMatrix dgamma(const FockBasis& basis, const Dispersion& dispersion, double epsilon);

inline constexpr std::size_t kDefaultFockDimensionCap = 4'000'000;

/// H_eps on grid (x) Fock, index X * basis.dim() + n. The field operator is
/// A(x) = sum_k sqrt(w_k) (lambda(x; k) a_k^+ + conj(lambda(x; k)) a_k).
SparseMatrix assemble_h_eps(const ModelSpec& spec, const FockBasis& basis, double epsilon,
                            std::size_t dimension_cap = kDefaultFockDimensionCap);

struct FockGround {
    double energy = 0.0;
    CVector vector;  // unit Euclidean norm
    double residual = 0.0;
    double top_shell_weight = 0.0;
};

FockGround ground_energy_eps(const SparseMatrix& h, const EigenOptions& options = {});
/// Squared norm of the n_max shell of a grid (x) Fock vector with unit Euclidean norm.
double top_shell_weight(const FockBasis& basis, const CVector& v);

/// Nelson lower bound -N^2 ||omega^-1/2 lambda||_inf^2 - ||lambda||_inf.
double nelson_lower_bound(const ModelSpec& spec);

/// Coherent amplitude c_k = sqrt(w_k) z_k / sqrt(eps) of the trial field; total
/// excitation of the product coherent state is Poisson(sum |c_k|^2).
CVector coherent_amplitudes(const ModelSpec& spec, const FieldAmplitudes& z, double epsilon);
/// P(Poisson(mean) > n_max).
double poisson_tail(double mean, int n_max);
/// Smallest n_max with P(Poisson(mean) > n_max) <= tail.
int required_n_max(double mean, double tail);
/// Smallest n_max >= ceil(mean) + 4 whose Poisson tail is <= 1e-8.
int shell_rule_n_max(double mean);

struct ProductState {
    CVector vector;  // over grid (x) Fock, sum vol |.|^2 = 1
    double tail_mass = 0.0;
    double mean_occupation = 0.0;  // sum_k |c_k|^2 before truncation
};

/// psi (x) coherent state, truncated and renormalized. Throws TruncationError when
/// the discarded mass exceeds tail_threshold.
ProductState coherent_product_state(const ModelSpec& spec, const FockBasis& basis, double epsilon,
                                    const WaveFunction& psi, const FieldAmplitudes& z,
                                    double tail_threshold = 1e-8);

struct TrialEnergy {
    double energy = 0.0;
    double qc = 0.0;
    double gap = 0.0;
    double tail_mass = 0.0;
};

TrialEnergy trial_energy(const ModelSpec& spec, const FockBasis& basis, double epsilon, const WaveFunction& psi,
                         const FieldAmplitudes& z);

/// Expectation of a grid (x) Fock operator in a state normalized with the particle cell volume.
double fock_expectation(const SparseMatrix& h, const CVector& state, double cell_volume);

/// Pauli-Fierz trial gap for a frozen particle: eps sum_j (e^2 / 2m_j) sum_k w_k |lambda_j(0; k)|^2.
double pauli_fierz_ordering_constant(const ModelSpec& spec);

struct SweepRow {
    double epsilon = 0.0;
    double e_eps = 0.0;
    double e_qc = 0.0;
    double abs_err = 0.0;
    int n_max = 0;
    double tail_mass = 0.0;  // top-shell weight of the ground vector
    double residual = 0.0;
    bool unreliable = false;
};

struct SweepOptions {
    // Fixed cutoff; when unset the shell rule is applied to reference_norm_squared / eps.
    int n_max = 0;
    double reference_norm_squared = 0.0;  // w-weighted ||z_ref||^2
    double slack = 1e-8;
    double converged_indicator = 1e-6;
    double unreliable_indicator = 1e-3;
    EigenOptions eigen;
};

struct SweepReport {
    std::vector<SweepRow> rows;
    bool monotone = true;  // non-increasing error (within slack) over converged rows
    bool any_unreliable = false;
};

SweepReport epsilon_sweep(const ModelSpec& spec, const std::vector<double>& eps_list, double e_qc_ref,
                          const SweepOptions& options = {});

}  // namespace qcl
