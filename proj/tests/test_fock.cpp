#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcl/fock.hpp"
#include "qcl/instances.hpp"
#include "qcl/minimize.hpp"
#include "support.hpp"

using namespace qcl;

namespace {

double binomial(int n, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

SparseMatrix identity(Eigen::Index n) {
    SparseMatrix id(n, n);
    id.setIdentity();
    return id;
}

}  // namespace

TEST_CASE("Fock basis dimension and ordering") {
    for (int k = 1; k <= 4; ++k) {
        for (int n = 0; n <= 6; ++n) {
            const FockBasis b(k, n);
            CHECK(b.dim() == static_cast<std::size_t>(binomial(k + n, n)));
            CHECK(fock_dimension(k, n) == b.dim());
            for (std::size_t i = 1; i < b.dim(); ++i) {
                CHECK(b.grade(i) >= b.grade(i - 1));
                if (b.grade(i) == b.grade(i - 1)) CHECK(b.state(i) < b.state(i - 1));
            }
            for (std::size_t i = 0; i < b.dim(); ++i) CHECK(b.index_of(b.state(i)) == static_cast<long>(i));
            // the basis for n is a leading block of the basis for n + 1
            const FockBasis bigger(k, n + 1);
            for (std::size_t i = 0; i < b.dim(); ++i) CHECK(bigger.state(i) == b.state(i));
        }
    }
    const FockBasis b(2, 2);
    CHECK(b.state(0) == std::vector<int>{0, 0});
    CHECK(b.state(1) == std::vector<int>{1, 0});
    CHECK(b.state(2) == std::vector<int>{0, 1});
    CHECK(b.index_of({2, 1}) == -1);
    CHECK_THROWS_AS(FockBasis(0, 2), ModelError);
}

TEST_CASE("ladder operators obey the scaled commutation relation") {
    oracle::Gen gen(107);
    for (int draw = 0; draw < 10; ++draw) {
        const int k = gen.integer(1, 3), n = gen.integer(2, 6);
        const double eps = gen.uniform(0.05, 1.0);
        const FockBasis b(k, n);
        const auto a = ladder_operators(b, eps);
        REQUIRE(a.size() == static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j < k; ++j) {
                const CMatrix ai = CMatrix(a[static_cast<std::size_t>(i)]);
                const CMatrix aj = CMatrix(a[static_cast<std::size_t>(j)]);
                const CMatrix comm = ai * aj.adjoint() - aj.adjoint() * ai;
                for (std::size_t s = 0; s < b.dim(); ++s) {
                    if (b.grade(s) == n) continue;  // truncation edge
                    for (std::size_t t = 0; t < b.dim(); ++t) {
                        if (b.grade(t) == n) continue;
                        const double expected = (i == j && s == t) ? eps : 0.0;
                        CHECK(std::abs(comm(static_cast<Eigen::Index>(s), static_cast<Eigen::Index>(t)) - expected) <
                              1e-13);
                    }
                }
            }
        }
    }
}

TEST_CASE("second quantized dispersion") {
    const FockBasis b(1, 5);
    const auto d = dgamma(b, constant_dispersion(1, 2.0), 0.5);
    CHECK(d.coeff(0, 0).real() == 0.0);
    CHECK(d.coeff(3, 3).real() == doctest::Approx(3.0));
    CHECK_THROWS_AS(dgamma(b, constant_dispersion(2, 1.0), 0.5), ModelError);
}

TEST_CASE("decoupled H_eps has the particle ground energy for every eps") {
    const auto spec = instances::decoupled();
    for (double eps : {1.0, 0.5, 0.1}) {
        const FockBasis b(1, 4);
        const auto gs = ground_energy_eps(assemble_h_eps(spec, b, eps));
        CHECK(std::abs(gs.energy - oracle::kHarmonicGroundEnergy) < 1e-9);
    }
}

TEST_CASE("displaced oscillator is exact") {
    for (double g : {0.3, 1.0}) {
        for (double omega : {0.5, 2.0}) {
            const auto spec = instances::frozen_nelson(g, omega);
            for (double eps : {0.5, 0.25, 0.125, 0.0625}) {
                const int n_max = std::max(12, required_n_max(g * g / (omega * omega * eps), 1e-12));
                const auto gs = ground_energy_eps(assemble_h_eps(spec, FockBasis(1, n_max), eps));
                CHECK(std::abs(gs.energy + g * g / omega) <= 1e-8);
            }
        }
    }
    const auto spec = instances::frozen_nelson();
    const auto gs = ground_energy_eps(assemble_h_eps(spec, FockBasis(1, 12), 0.25));
    CHECK(std::abs(gs.energy + 0.045) <= 1e-8);
    const auto larger = ground_energy_eps(assemble_h_eps(spec, FockBasis(1, 16), 0.25));
    CHECK(std::abs(gs.energy - larger.energy) <= 1e-8);
}

TEST_CASE("frozen Pauli-Fierz squeezed oscillator") {
    // H = eps [omega a^+a + kappa (a + a^+)^2] with kappa = (e^2/2m) w |lambda|^2;
    // ground energy eps/2 (sqrt(omega^2 + 4 kappa omega) - omega).
    const auto spec = instances::frozen_pauli_fierz();
    const double kappa = 0.0625;
    CHECK(pauli_fierz_ordering_constant(spec) == doctest::Approx(kappa).epsilon(1e-14));
    for (double eps : {0.5, 0.25, 0.125}) {
        const auto gs = ground_energy_eps(assemble_h_eps(spec, FockBasis(1, 40), eps));
        CHECK(std::abs(gs.energy - 0.5 * eps * (std::sqrt(1.0 + 4.0 * kappa) - 1.0)) <= 1e-10);
    }
}

TEST_CASE("H_eps is Hermitian") {
    oracle::Gen gen(109);
    for (int draw = 0; draw < 9; ++draw) {
        const auto spec = support::random_model(support::kFamilies[draw % 3], gen);
        const auto h = assemble_h_eps(spec, FockBasis(spec.modes.count(), 3), gen.uniform(0.1, 1.0));
        CHECK(max_asymmetry(h) <= kHermiticityTolerance);
    }
    CHECK(max_asymmetry(assemble_h_eps(instances::pauli_fierz_1d(), FockBasis(2, 3), 0.5)) <= kHermiticityTolerance);
    CHECK_THROWS_AS(assemble_h_eps(instances::inst_b(), FockBasis(1, 3), 0.5, 10), InfeasibleError);
    CHECK_THROWS_AS(assemble_h_eps(instances::inst_b(), FockBasis(2, 3), 0.5), ModelError);
}

TEST_CASE("A-priori lower bound holds on Nelson instances") {
    CHECK(nelson_lower_bound(instances::inst_a()) == doctest::Approx(-0.75));
    for (const auto& spec : {instances::inst_a(), instances::inst_b(), instances::frozen_nelson(),
                             instances::two_particle_nelson()}) {
        const double bound = nelson_lower_bound(spec);
        for (double eps : {0.5, 0.25}) {
            const auto gs = ground_energy_eps(assemble_h_eps(spec, FockBasis(1, 8), eps));
            CHECK(gs.energy >= bound);
        }
    }
}

TEST_CASE("Poisson tails and the shell rule") {
    CHECK(poisson_tail(1.0, 0) == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-14));
    CHECK(poisson_tail(0.0, 0) == 0.0);
    double tail = 0.0, term = std::exp(-3.0);
    for (int n = 0; n <= 10; ++n) {
        if (n > 0) term *= 3.0 / n;
        tail += term;
    }
    CHECK(poisson_tail(3.0, 10) == doctest::Approx(1.0 - tail).epsilon(1e-9));
    for (double mean : {0.01, 0.25, 1.0, 4.0, 16.0}) {
        const int n = required_n_max(mean, 1e-8);
        CHECK(poisson_tail(mean, n) <= 1e-8);
        if (n > 0) CHECK(poisson_tail(mean, n - 1) > 1e-8);
        const int shell = shell_rule_n_max(mean);
        CHECK(shell >= static_cast<int>(std::ceil(mean)) + 4);
        CHECK(poisson_tail(mean, shell) <= 1e-8);
    }
}

TEST_CASE("coherent product states") {
    const auto spec = instances::frozen_nelson();
    const WaveFunction psi{CVector::Ones(1), 1.0};
    SUBCASE("zero field is the vacuum") {
        const FockBasis b(1, 6);
        const auto s = coherent_product_state(spec, b, 0.5, psi, FieldAmplitudes::z(CVector::Zero(1)));
        CHECK(std::abs(s.vector(0) - 1.0) < 1e-15);
        CHECK(s.vector.tail(6).norm() == 0.0);
    }
    SUBCASE("mean occupation and number expectation") {
        const Complex z(0.4, -0.3);
        const double eps = 0.125;
        const double mean = std::norm(z) / eps;
        const FockBasis b(1, shell_rule_n_max(mean));
        const auto s = coherent_product_state(spec, b, eps, psi, FieldAmplitudes::z(CVector::Constant(1, z)));
        CHECK(s.mean_occupation == doctest::Approx(mean).epsilon(1e-14));
        CHECK(s.tail_mass <= 1e-8);
        const auto number = dgamma(b, constant_dispersion(1, 1.0), eps);
        CHECK(std::abs(fock_expectation(number, s.vector, 1.0) - std::norm(z)) <= 1e-8);
        const auto a = ladder_operators(b, eps);
        const Complex amp = s.vector.dot(a[0] * s.vector);
        CHECK(std::abs(amp - z) <= 1e-7);
    }
    SUBCASE("truncation error names the required cutoff") {
        const FockBasis b(1, 3);
        try {
            coherent_product_state(spec, b, 0.1, psi, FieldAmplitudes::z(CVector::Constant(1, 1.0)));
            FAIL("expected TruncationError");
        } catch (const TruncationError& e) {
            CHECK(e.required_n_max() == required_n_max(10.0, 1e-8));
        }
    }
}

TEST_CASE("trial energies") {
    SUBCASE("decoupled vacuum has no gap") {
        const auto spec = instances::decoupled();
        const auto psi = ground_eigenpair(assemble_k0(spec), spec.grid.cell_volume()).psi;
        const auto t = trial_energy(spec, FockBasis(1, 4), 0.5, psi, FieldAmplitudes::z(CVector::Zero(1)));
        CHECK(std::abs(t.gap) < 1e-12);
    }
    SUBCASE("ground energy lies below the trial energy") {
        const auto spec = instances::inst_b();
        const auto r = alternating_minimize(spec, {});
        for (double eps : {0.5, 0.25}) {
            const FockBasis b(1, shell_rule_n_max(mode_norm_squared(spec.modes, r.z_star.values) / eps));
            const auto t = trial_energy(spec, b, eps, r.psi_star, r.z_star);
            CHECK(std::abs(t.qc - r.energy) < 1e-12);
            CHECK(ground_energy_eps(assemble_h_eps(spec, b, eps)).energy <= t.energy + 1e-9);
        }
    }
    SUBCASE("Pauli-Fierz gap is linear in eps with the ordering constant") {
        const auto spec = instances::frozen_pauli_fierz();
        const WaveFunction psi{CVector::Ones(1), 1.0};
        const auto z = FieldAmplitudes::z(CVector::Constant(1, Complex(0.3, 0.2)));
        for (double eps : {0.5, 0.25, 0.125, 0.0625}) {
            const FockBasis b(1, shell_rule_n_max(std::norm(z.values(0)) / eps));
            const auto t = trial_energy(spec, b, eps, psi, z);
            CHECK(std::abs(t.gap - eps * pauli_fierz_ordering_constant(spec)) <= 1e-7);
        }
    }
}

TEST_CASE("epsilon sweeps") {
    const std::vector<double> eps{0.5, 0.25, 0.125, 0.0625};
    SUBCASE("decoupled instance") {
        SweepOptions o;
        o.n_max = 4;
        const auto r = epsilon_sweep(instances::decoupled(), eps, oracle::kHarmonicGroundEnergy, o);
        for (const auto& row : r.rows) CHECK(row.abs_err <= 1e-9);
        CHECK(r.monotone);
        CHECK_FALSE(r.any_unreliable);
    }
    SUBCASE("displaced oscillator is flat") {
        SweepOptions o;
        o.n_max = 12;
        const auto r = epsilon_sweep(instances::frozen_nelson(), eps, -0.045, o);
        for (const auto& row : r.rows) {
            CHECK(row.abs_err <= 1e-8);
            CHECK(row.n_max == 12);
        }
    }
    SUBCASE("shell rule follows the reference norm") {
        SweepOptions o;
        o.reference_norm_squared = 0.25;
        const auto r = epsilon_sweep(instances::inst_a(), eps, oracle::kHarmonicGroundEnergy - 0.25, o);
        for (std::size_t i = 0; i < eps.size(); ++i) {
            CHECK(r.rows[i].n_max == shell_rule_n_max(0.25 / eps[i]));
            CHECK(r.rows[i].abs_err <= 1e-7);
            CHECK(r.rows[i].tail_mass <= 1e-6);
        }
        CHECK(r.monotone);
    }
    SUBCASE("too small a cutoff is flagged") {
        SweepOptions o;
        o.n_max = 2;
        const auto r = epsilon_sweep(instances::frozen_nelson(1.5, 1.0), eps, -2.25, o);
        CHECK(r.any_unreliable);
        CHECK(r.rows.back().unreliable);
    }
    SUBCASE("eps list validation") {
        CHECK_THROWS_AS(epsilon_sweep(instances::inst_a(), {}, 0.0), ModelError);
        CHECK_THROWS_AS(epsilon_sweep(instances::inst_a(), {0.25, 0.5}, 0.0), ModelError);
        CHECK_THROWS_AS(epsilon_sweep(instances::inst_a(), {1.5}, 0.0), ModelError);
    }
}
