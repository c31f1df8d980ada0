#include "qcl/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "qcl/parallel.hpp"

namespace qcl {

// ---------------------------------------------------------------------------
// Basis

namespace {

void compositions(int remaining, int mode, std::vector<int>& current, std::vector<std::vector<int>>& out) {
    const int k = static_cast<int>(current.size());
    if (mode == k - 1) {
        current[static_cast<std::size_t>(mode)] = remaining;
        out.push_back(current);
        return;
    }
    for (int n = remaining; n >= 0; --n) {
        current[static_cast<std::size_t>(mode)] = n;
        compositions(remaining - n, mode + 1, current, out);
    }
}

}  // namespace

FockBasis::FockBasis(int n_modes, int n_max) : n_modes_(n_modes), n_max_(n_max) {
    if (n_modes < 1) throw ModelError("Fock basis needs at least one mode");
    if (n_max < 0) throw ModelError("Fock cutoff must be non-negative");
    std::vector<int> current(static_cast<std::size_t>(n_modes), 0);
    for (int g = 0; g <= n_max; ++g) {
        const std::size_t before = states_.size();
        compositions(g, 0, current, states_);
        grades_.insert(grades_.end(), states_.size() - before, g);
    }
    for (std::size_t i = 0; i < states_.size(); ++i) lookup_.emplace(states_[i], i);
}

long FockBasis::index_of(const std::vector<int>& occupation) const {
    const auto it = lookup_.find(occupation);
    return it == lookup_.end() ? -1 : static_cast<long>(it->second);
}

std::size_t fock_dimension(int n_modes, int n_max) {
    // binomial(n_modes + n_max, n_max), built incrementally so every step is exact
    std::size_t r = 1;
    for (int i = 1; i <= n_max; ++i) r = r * static_cast<std::size_t>(n_modes + i) / static_cast<std::size_t>(i);
    return r;
}

namespace {

struct Lowering {
    std::size_t from;
    std::size_t to;
    double amplitude;  // sqrt(eps n_j)
};

std::vector<std::vector<Lowering>> lowering_lists(const FockBasis& basis, double epsilon) {
    std::vector<std::vector<Lowering>> lists(static_cast<std::size_t>(basis.n_modes()));
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        std::vector<int> occ = basis.state(i);
        for (int j = 0; j < basis.n_modes(); ++j) {
            const int n = occ[static_cast<std::size_t>(j)];
            if (n == 0) continue;
            occ[static_cast<std::size_t>(j)] = n - 1;
            const long t = basis.index_of(occ);
            occ[static_cast<std::size_t>(j)] = n;
            lists[static_cast<std::size_t>(j)].push_back({i, static_cast<std::size_t>(t), std::sqrt(epsilon * n)});
        }
    }
    return lists;
}

SparseMatrix square_sparse(std::size_t n, std::vector<Triplet>& triplets) {
    SparseMatrix m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(triplets.begin(), triplets.end());
    m.makeCompressed();
    return m;
}

// A(x) = sum_k sqrt(w_k) (lambda b_k^+ + conj(lambda) b_k) on the given basis, one per site.
std::vector<SparseMatrix> field_operators(const ModelSpec& spec, int particle, const FockBasis& basis,
                                          double epsilon) {
    const auto lists = lowering_lists(basis, epsilon);
    const CMatrix& table = spec.form_factor.table(particle);
    std::vector<SparseMatrix> ops;
    ops.reserve(static_cast<std::size_t>(table.rows()));
    for (Eigen::Index s = 0; s < table.rows(); ++s) {
        std::vector<Triplet> t;
        for (int k = 0; k < basis.n_modes(); ++k) {
            const Complex lam = std::sqrt(spec.modes.weights(k)) * table(s, k);
            if (lam == Complex{}) continue;
            for (const auto& l : lists[static_cast<std::size_t>(k)]) {
                const auto from = static_cast<Eigen::Index>(l.from);
                const auto to = static_cast<Eigen::Index>(l.to);
                t.emplace_back(from, to, lam * l.amplitude);             // raising: to -> from
                t.emplace_back(to, from, std::conj(lam) * l.amplitude);  // lowering: from -> to
            }
        }
        ops.push_back(square_sparse(basis.dim(), t));
    }
    return ops;
}

void push_block(std::vector<Triplet>& out, std::size_t row_block, std::size_t col_block, std::size_t f,
                const SparseMatrix& block, Complex scale) {
    for (int r = 0; r < block.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(block, r); it; ++it) {
            out.emplace_back(static_cast<Eigen::Index>(row_block * f + static_cast<std::size_t>(it.row())),
                             static_cast<Eigen::Index>(col_block * f + static_cast<std::size_t>(it.col())),
                             scale * it.value());
        }
    }
}

}  // namespace

std::vector<SparseMatrix> ladder_operators(const FockBasis& basis, double epsilon) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ModelError("epsilon must lie in (0, 1]");
    const auto lists = lowering_lists(basis, epsilon);
    std::vector<SparseMatrix> ops;
    for (const auto& list : lists) {
        std::vector<Triplet> t;
        for (const auto& l : list) {
            t.emplace_back(static_cast<Eigen::Index>(l.to), static_cast<Eigen::Index>(l.from), Complex(l.amplitude, 0.0));
        }
        ops.push_back(square_sparse(basis.dim(), t));
    }
    return ops;
}

SparseMatrix dgamma(const FockBasis& basis, const Dispersion& dispersion, double epsilon) {
    if (dispersion.values.size() != basis.n_modes()) throw ModelError("dispersion length differs from the mode count");
    std::vector<Triplet> t;
    for (std::size_t i = 0; i < basis.dim(); ++i) {
        double e = 0.0;
        for (int j = 0; j < basis.n_modes(); ++j) e += dispersion.values(j) * basis.state(i)[static_cast<std::size_t>(j)];
        t.emplace_back(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i), Complex(epsilon * e, 0.0));
    }
    return square_sparse(basis.dim(), t);
}

// ---------------------------------------------------------------------------
// H_eps

SparseMatrix assemble_h_eps(const ModelSpec& spec, const FockBasis& basis, double epsilon, std::size_t dimension_cap) {
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw ModelError("epsilon must lie in (0, 1]");
    if (basis.n_modes() != spec.modes.count()) throw ModelError("Fock basis and model disagree on the mode count");
    const auto& g = spec.grid;
    const std::size_t f = basis.dim();
    const double total = static_cast<double>(g.total_points) * static_cast<double>(f);
    if (total > static_cast<double>(dimension_cap)) {
        std::ostringstream msg;
        msg << "H_eps dimension " << g.total_points << " x " << f << " exceeds the cap of " << dimension_cap;
        throw InfeasibleError(msg.str());
    }

    std::vector<Triplet> triplets;
    const SparseMatrix k0 = assemble_k0(spec).matrix;
    for (int r = 0; r < k0.outerSize(); ++r) {
        for (SparseMatrix::InnerIterator it(k0, r); it; ++it) {
            for (std::size_t n = 0; n < f; ++n) {
                triplets.emplace_back(static_cast<Eigen::Index>(static_cast<std::size_t>(it.row()) * f + n),
                                      static_cast<Eigen::Index>(static_cast<std::size_t>(it.col()) * f + n),
                                      it.value());
            }
        }
    }
    const SparseMatrix field = dgamma(basis, spec.dispersion, epsilon);
    for (std::size_t x = 0; x < g.total_points; ++x) push_block(triplets, x, x, f, field, 1.0);

    for (int p = 0; p < g.n_particles; ++p) {
        if (spec.family != Family::PauliFierz) {
            const auto a = field_operators(spec, p, basis, epsilon);
            for (std::size_t x = 0; x < g.total_points; ++x) {
                push_block(triplets, x, x, f, a[g.particle_site(x, p)], 1.0);
            }
            continue;
        }

        // A^2 built one shell higher and compressed, so the truncation acts on A^2 itself.
        const FockBasis wider(basis.n_modes(), basis.n_max() + 1);
        const auto a_wide = field_operators(spec, p, wider, epsilon);
        std::vector<SparseMatrix> a, a2;
        for (const auto& op : a_wide) {
            const auto n = static_cast<Eigen::Index>(f);
            a.push_back(op.topLeftCorner(n, n));
            const SparseMatrix sq = op * op;
            a2.push_back(sq.topLeftCorner(n, n));
        }
        const double c = spec.kinetic_coefficient(p);
        const double e = spec.charge;
        for (std::size_t x = 0; x < g.total_points; ++x) {
            const std::size_t sx = g.particle_site(x, p);
            push_block(triplets, x, x, f, a2[sx], c * e * e);
            if (g.frozen) continue;
            const std::size_t stride = g.stride(p, 0);
            const int i = g.axis_index(x, p, 0);
            const double half_inv_h = 0.5 / g.spacing;
            if (i + 1 < g.points_per_axis) {
                const std::size_t y = x + stride;
                const SparseMatrix sum = a[sx] + a[g.particle_site(y, p)];
                push_block(triplets, x, y, f, sum, c * e * Complex(0.0, -half_inv_h));
            }
            if (i > 0) {
                const std::size_t y = x - stride;
                const SparseMatrix sum = a[sx] + a[g.particle_site(y, p)];
                push_block(triplets, x, y, f, sum, c * e * Complex(0.0, half_inv_h));
            }
        }
    }

    const auto n = static_cast<Eigen::Index>(g.total_points * f);
    SparseMatrix h(n, n);
    h.setFromTriplets(triplets.begin(), triplets.end());
    h.makeCompressed();
    return h;
}

FockGround ground_energy_eps(const SparseMatrix& h, const EigenOptions& options) {
    const EigenPair pair = lowest_eigenpair(h, options);
    return {pair.value, pair.vector, pair.residual, 0.0};
}

double top_shell_weight(const FockBasis& basis, const CVector& v) {
    const std::size_t f = basis.dim();
    const auto points = static_cast<std::size_t>(v.size()) / f;
    double w = 0.0;
    for (std::size_t x = 0; x < points; ++x) {
        for (std::size_t n = 0; n < f; ++n) {
            if (basis.grade(n) == basis.n_max()) w += std::norm(v(static_cast<Eigen::Index>(x * f + n)));
        }
    }
    return w / v.squaredNorm();
}

double nelson_lower_bound(const ModelSpec& spec) {
    const double n = spec.grid.n_particles;
    const double inv = form_factor_sup_norm_squared(spec.form_factor, spec.modes, spec.dispersion, -1.0);
    const double plain = form_factor_sup_norm_squared(spec.form_factor, spec.modes, spec.dispersion, 0.0);
    return -n * n * inv - std::sqrt(plain);
}

// ---------------------------------------------------------------------------
// Coherent trial states

CVector coherent_amplitudes(const ModelSpec& spec, const FieldAmplitudes& z, double epsilon) {
    if (z.gauge != Gauge::z) throw GaugeError("coherent amplitudes expect a field in gauge z");
    return spec.modes.weights.cwiseSqrt().cast<Complex>().cwiseProduct(z.values) / std::sqrt(epsilon);
}

double poisson_tail(double mean, int n_max) {
    if (mean <= 0.0) return 0.0;
    double tail = 0.0;
    for (int j = n_max + 1;; ++j) {
        const double term = std::exp(-mean + j * std::log(mean) - std::lgamma(j + 1.0));
        tail += term;
        if (j > mean && term < 1e-18 * std::max(tail, 1e-300)) break;
        if (j > n_max + 10000) break;
    }
    return tail;
}

int required_n_max(double mean, double tail) {
    int n = 0;
    while (poisson_tail(mean, n) > tail) ++n;
    return n;
}

int shell_rule_n_max(double mean) {
    return std::max(static_cast<int>(std::ceil(mean)) + 4, required_n_max(mean, 1e-8));
}

ProductState coherent_product_state(const ModelSpec& spec, const FockBasis& basis, double epsilon,
                                    const WaveFunction& psi, const FieldAmplitudes& z, double tail_threshold) {
    psi.require_normalized();
    const CVector c = coherent_amplitudes(spec, z, epsilon);
    ProductState out;
    out.mean_occupation = c.squaredNorm();
    out.tail_mass = poisson_tail(out.mean_occupation, basis.n_max());
    if (out.tail_mass > tail_threshold) {
        std::ostringstream msg;
        msg << "coherent state tail mass " << out.tail_mass << " above " << tail_threshold << " at n_max "
            << basis.n_max();
        throw TruncationError(msg.str(), required_n_max(out.mean_occupation, tail_threshold));
    }

    const std::size_t f = basis.dim();
    CVector fock(static_cast<Eigen::Index>(f));
    for (std::size_t i = 0; i < f; ++i) {
        Complex amp(std::exp(-0.5 * out.mean_occupation), 0.0);
        for (int k = 0; k < basis.n_modes(); ++k) {
            const int n = basis.state(i)[static_cast<std::size_t>(k)];
            if (n > 0) amp *= std::pow(c(k), n) / std::sqrt(std::tgamma(n + 1.0));
        }
        fock(static_cast<Eigen::Index>(i)) = amp;
    }
    fock /= fock.norm();

    out.vector.resize(psi.amplitudes.size() * static_cast<Eigen::Index>(f));
    for (Eigen::Index x = 0; x < psi.amplitudes.size(); ++x) {
        out.vector.segment(x * static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(f)) = psi.amplitudes(x) * fock;
    }
    return out;
}

double fock_expectation(const SparseMatrix& h, const CVector& state, double cell_volume) {
    return cell_volume * state.dot(h * state).real();
}

TrialEnergy trial_energy(const ModelSpec& spec, const FockBasis& basis, double epsilon, const WaveFunction& psi,
                         const FieldAmplitudes& z) {
    const ProductState xi = coherent_product_state(spec, basis, epsilon, psi, z);
    const SparseMatrix h = assemble_h_eps(spec, basis, epsilon);
    TrialEnergy out;
    out.energy = fock_expectation(h, xi.vector, psi.cell_volume);
    out.qc = qc_energy(spec, psi, z);
    out.gap = std::abs(out.energy - out.qc);
    out.tail_mass = xi.tail_mass;
    return out;
}

double pauli_fierz_ordering_constant(const ModelSpec& spec) {
    if (spec.family != Family::PauliFierz) return 0.0;
    double slope = 0.0;
    for (int p = 0; p < spec.grid.n_particles; ++p) {
        const CMatrix& table = spec.form_factor.table(p);
        const double norm2 = spec.modes.weights.dot(table.row(0).transpose().cwiseAbs2());
        slope += spec.kinetic_coefficient(p) * spec.charge * spec.charge * norm2;
    }
    return slope;
}

// ---------------------------------------------------------------------------
// Sweep

SweepReport epsilon_sweep(const ModelSpec& spec, const std::vector<double>& eps_list, double e_qc_ref,
                          const SweepOptions& options) {
    if (eps_list.empty()) throw ModelError("eps_list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0 && eps_list[i] <= 1.0)) throw ModelError("eps values must lie in (0, 1]");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw ModelError("eps_list must be strictly decreasing");
    }

    SweepReport report;
    report.rows.resize(eps_list.size());
    parallel_for(eps_list.size(), [&](std::size_t i) {
        const double eps = eps_list[i];
        const int n_max = options.n_max > 0 ? options.n_max : shell_rule_n_max(options.reference_norm_squared / eps);
        const FockBasis basis(spec.modes.count(), n_max);
        const FockGround gs = ground_energy_eps(assemble_h_eps(spec, basis, eps), options.eigen);
        SweepRow& row = report.rows[i];
        row.epsilon = eps;
        row.e_eps = gs.energy;
        row.e_qc = e_qc_ref;
        row.abs_err = std::abs(gs.energy - e_qc_ref);
        row.n_max = n_max;
        row.tail_mass = top_shell_weight(basis, gs.vector);
        row.residual = gs.residual;
        row.unreliable = row.tail_mass > options.unreliable_indicator;
    });

    const SweepRow* last = nullptr;
    for (const auto& row : report.rows) {
        report.any_unreliable = report.any_unreliable || row.unreliable;
        if (row.tail_mass > options.converged_indicator) continue;
        if (last && row.abs_err > last->abs_err + options.slack) report.monotone = false;
        last = &row;
    }
    return report;
}

}  // namespace qcl
