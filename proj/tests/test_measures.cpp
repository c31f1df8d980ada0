#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "qcl/instances.hpp"
#include "qcl/measures.hpp"
#include "qcl/minimize.hpp"

using namespace qcl;

namespace {

struct Fixture {
    ModelSpec spec = instances::inst_a();
    MinimizeResult min = alternating_minimize(spec, {});
    QcReference ref{min.energy, min.psi_star, min.z_star};
};

}  // namespace

TEST_CASE("Dirac measures reproduce the quasi-classical energy") {
    oracle::Gen gen(113);
    const auto spec = instances::inst_b();
    for (int draw = 0; draw < 20; ++draw) {
        const auto psi = gen.smooth_wave_function(spec.grid);
        const auto z = FieldAmplitudes::z(gen.complex_vector(1));
        const double e = qc_energy(spec, psi, z);
        CHECK(e_svm(spec, dirac_measure(psi, z)) == doctest::Approx(e).epsilon(1e-14));
        CHECK(e_pm(spec, psi, {1.0}, {z}) == doctest::Approx(e).epsilon(1e-14));
        AtomicStateMeasure doubled{{Atom{0.5, z, psi}, Atom{0.5, z, psi}}};
        CHECK(e_svm(spec, doubled) == doctest::Approx(e).epsilon(1e-14));
    }
}

TEST_CASE("e_svm is affine under mixtures") {
    oracle::Gen gen(127);
    const auto spec = instances::inst_b();
    for (int draw = 0; draw < 50; ++draw) {
        auto random_measure = [&] {
            AtomicStateMeasure m;
            const int n = gen.integer(1, 4);
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                m.atoms.push_back({gen.uniform(0.1, 1.0), FieldAmplitudes::z(gen.complex_vector(1)),
                                   gen.smooth_wave_function(spec.grid)});
                total += m.atoms.back().weight;
            }
            for (auto& a : m.atoms) a.weight /= total;
            return m;
        };
        const auto m1 = random_measure(), m2 = random_measure();
        const double beta = gen.uniform(0.0, 1.0);
        const double mixed = e_svm(spec, mixture(m1, m2, beta));
        const double expected = beta * e_svm(spec, m1) + (1.0 - beta) * e_svm(spec, m2);
        CHECK(std::abs(mixed - expected) <= 1e-12 * std::max(1.0, std::abs(expected)));
    }
}

TEST_CASE("measure validation") {
    const auto spec = instances::inst_b();
    const auto psi = random_wave_function(spec.grid, 1);
    const auto z = FieldAmplitudes::z(CVector::Zero(1));
    CHECK_THROWS_AS(e_svm(spec, AtomicStateMeasure{}), ModelError);
    CHECK_THROWS_AS(e_svm(spec, AtomicStateMeasure{{Atom{0.7, z, psi}}}), ModelError);
    CHECK_THROWS_AS(e_svm(spec, AtomicStateMeasure{{Atom{1.5, z, psi}, Atom{-0.5, z, psi}}}), ModelError);
    WaveFunction bad = psi;
    bad.amplitudes *= 2.0;
    CHECK_THROWS_AS(e_svm(spec, dirac_measure(bad, z)), NormalizationError);
    CHECK_THROWS_AS(e_pm(spec, psi, {0.5, 0.5}, {z}), ModelError);
    CHECK_THROWS_AS(mixture(dirac_measure(psi, z), dirac_measure(psi, z), 1.5), ModelError);
}

TEST_CASE("random atomic measures never beat the minimum") {
    Fixture f;
    oracle::Gen gen(131);
    for (int draw = 0; draw < 100; ++draw) {
        AtomicStateMeasure m;
        const int n = gen.integer(1, 5);
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            const auto psi = draw % 2 ? gen.smooth_wave_function(f.spec.grid) : gen.wave_function(f.spec.grid);
            m.atoms.push_back({gen.uniform(0.0, 1.0), FieldAmplitudes::z(gen.complex_vector(1, 0.7)), psi});
            total += m.atoms.back().weight;
        }
        for (auto& a : m.atoms) a.weight /= total;
        CHECK(e_svm(f.spec, m) >= f.ref.e_qc - 1e-8);
    }
}

TEST_CASE("atomic bound check on the decoupled and constant-coupling instances") {
    for (const auto& spec : {instances::decoupled(), instances::inst_a()}) {
        const auto r = alternating_minimize(spec, {});
        const auto report = atomic_bound_check(spec, {r.energy, r.psi_star, r.z_star}, 200, 3);
        CHECK(report.passed);
        CHECK(report.witnesses.empty());
        CHECK(report.min_e_svm >= r.energy - 1e-8);
        CHECK(report.min_e_pm >= r.energy - 1e-8);
        CHECK(report.min_script_i >= r.energy - 1e-8);
        CHECK(std::abs(report.e_svm_dirac - r.energy) <= 1e-8);
        CHECK(std::abs(report.e_pekar - r.energy) <= 1e-8);
        CHECK(report.adversarial > r.energy);
        CHECK(report.near_minimizing_e_svm <= r.energy + report.delta);
        REQUIRE(report.concentration.size() == 9);
        for (const auto& t : report.concentration) {
            CHECK(t.ok);
            CHECK(t.weight < 1.0 / t.k);
        }
    }
}

TEST_CASE("atomic bound check is deterministic for a fixed seed") {
    Fixture f;
    const auto r1 = atomic_bound_check(f.spec, f.ref, 30, 17);
    const auto r2 = atomic_bound_check(f.spec, f.ref, 30, 17);
    CHECK(r1.min_e_svm == r2.min_e_svm);
    CHECK(r1.near_minimizing_e_svm == r2.near_minimizing_e_svm);
}

TEST_CASE("a shifted reference is caught with witnesses") {
    Fixture f;
    QcReference wrong = f.ref;
    wrong.e_qc += 0.1;  // claims a minimum higher than the true one
    const auto report = atomic_bound_check(f.spec, wrong, 50, 5);
    CHECK_FALSE(report.passed);
}
