#include "qcl/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qcl {

double max_asymmetry(const SparseMatrix& h) {
    SparseMatrix diff = h - SparseMatrix(h.adjoint());
    double worst = 0.0;
    for (int outer = 0; outer < diff.outerSize(); ++outer) {
        for (SparseMatrix::InnerIterator it(diff, outer); it; ++it) {
            worst = std::max(worst, std::abs(it.value()));
        }
    }
    return worst;
}

std::string_view to_string(Family family) {
    switch (family) {
        case Family::Nelson: return "Nelson";
        case Family::Polaron: return "Polaron";
        case Family::PauliFierz: return "PauliFierz";
    }
    return "?";
}

Family family_from_string(std::string_view name) {
    if (name == "Nelson") return Family::Nelson;
    if (name == "Polaron") return Family::Polaron;
    if (name == "PauliFierz") return Family::PauliFierz;
    throw ModelError("unknown model family '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// ParticleGrid

namespace {

std::size_t ipow(std::size_t base, int exponent) {
    std::size_t r = 1;
    for (int i = 0; i < exponent; ++i) r *= base;
    return r;
}

}  // namespace

std::size_t ParticleGrid::sites_per_particle() const {
    return frozen ? 1 : ipow(static_cast<std::size_t>(points_per_axis), dim);
}

double ParticleGrid::cell_volume() const {
    return frozen ? 1.0 : std::pow(spacing, dim * n_particles);
}

double ParticleGrid::axis_coordinate(int index) const {
    if (frozen) return 0.0;
    return -extent + (index + 0.5) * spacing;
}

std::array<double, 2> ParticleGrid::site_position(std::size_t site) const {
    if (frozen) return {0.0, 0.0};
    const auto g = static_cast<std::size_t>(points_per_axis);
    if (dim == 1) return {axis_coordinate(static_cast<int>(site)), 0.0};
    return {axis_coordinate(static_cast<int>(site / g)), axis_coordinate(static_cast<int>(site % g))};
}

std::size_t ParticleGrid::particle_site(std::size_t flat, int particle) const {
    const std::size_t s = sites_per_particle();
    return (flat / ipow(s, n_particles - 1 - particle)) % s;
}

std::size_t ParticleGrid::stride(int particle, int axis) const {
    return ipow(sites_per_particle(), n_particles - 1 - particle) *
           ipow(static_cast<std::size_t>(points_per_axis), dim - 1 - axis);
}

int ParticleGrid::axis_index(std::size_t flat, int particle, int axis) const {
    return static_cast<int>((flat / stride(particle, axis)) % static_cast<std::size_t>(points_per_axis));
}

ParticleGrid build_particle_grid(int dim, int n_particles, double extent, int points_per_axis,
                                 std::size_t point_cap) {
    if (dim != 1 && dim != 2) throw ModelError("grid dimension must be 1 or 2");
    if (n_particles < 1) throw ModelError("need at least one particle");
    if (!(extent > 0.0) || !std::isfinite(extent)) throw ModelError("grid extent must be positive");
    if (points_per_axis < 8 || points_per_axis % 2 != 0) {
        throw ModelError("points_per_axis must be even and at least 8");
    }
    std::size_t total = 1;
    for (int i = 0; i < dim * n_particles; ++i) {
        total *= static_cast<std::size_t>(points_per_axis);
        if (total > point_cap) {
            std::ostringstream msg;
            msg << "infeasible grid: " << points_per_axis << "^" << dim * n_particles
                << " points exceeds the cap of " << point_cap;
            throw InfeasibleError(msg.str());
        }
    }
    ParticleGrid g;
    g.dim = dim;
    g.n_particles = n_particles;
    g.extent = extent;
    g.points_per_axis = points_per_axis;
    g.spacing = 2.0 * extent / points_per_axis;
    g.total_points = total;
    const double inv_h2 = 1.0 / (g.spacing * g.spacing);
    g.laplacian_stencil = {-inv_h2, 2.0 * inv_h2, -inv_h2};
    return g;
}

ParticleGrid frozen_particle_grid(int dim) {
    if (dim != 1 && dim != 2) throw ModelError("grid dimension must be 1 or 2");
    ParticleGrid g;
    g.dim = dim;
    g.n_particles = 1;
    g.frozen = true;
    return g;
}

// ---------------------------------------------------------------------------
// Modes and dispersion

FieldModes make_modes(RMatrix momenta, RVector weights) {
    const auto k = momenta.rows();
    if (k < 1) throw ModelError("need at least one field mode");
    if (momenta.cols() != 1 && momenta.cols() != 2) throw ModelError("mode momenta must be 1D or 2D");
    if (weights.size() != k) throw ModelError("one quadrature weight per mode required");
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(weights(i) > 0.0) || !std::isfinite(weights(i))) {
            throw ModelError("quadrature weights must be positive");
        }
        if (!momenta.row(i).allFinite()) throw ModelError("mode momenta must be finite");
        for (Eigen::Index j = 0; j < i; ++j) {
            if (momenta.row(i) == momenta.row(j)) throw ModelError("mode momenta must be distinct");
        }
    }
    return FieldModes{std::move(momenta), std::move(weights)};
}

FieldModes mode_lattice_1d(double k_min, double k_max, int count) {
    if (count < 1) throw ModelError("mode lattice needs at least one point");
    RMatrix momenta(count, 1);
    RVector weights(count);
    if (count == 1) {
        momenta(0, 0) = k_min;
        weights(0) = 1.0;
        return make_modes(std::move(momenta), std::move(weights));
    }
    if (!(k_max > k_min)) throw ModelError("mode lattice requires k_max > k_min");
    const double dk = (k_max - k_min) / (count - 1);
    for (int i = 0; i < count; ++i) {
        momenta(i, 0) = k_min + i * dk;
        weights(i) = (i == 0 || i == count - 1) ? 0.5 * dk : dk;
    }
    return make_modes(std::move(momenta), std::move(weights));
}

FieldModes mode_lattice_2d(double k_min, double k_max, int count_per_axis, bool drop_zero) {
    const FieldModes axis = mode_lattice_1d(k_min, k_max, count_per_axis);
    std::vector<std::array<double, 3>> rows;
    for (int i = 0; i < count_per_axis; ++i) {
        for (int j = 0; j < count_per_axis; ++j) {
            const double kx = axis.momenta(i, 0);
            const double ky = axis.momenta(j, 0);
            if (drop_zero && kx == 0.0 && ky == 0.0) continue;
            rows.push_back({kx, ky, axis.weights(i) * axis.weights(j)});
        }
    }
    RMatrix momenta(static_cast<Eigen::Index>(rows.size()), 2);
    RVector weights(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto i = static_cast<Eigen::Index>(r);
        momenta(i, 0) = rows[r][0];
        momenta(i, 1) = rows[r][1];
        weights(i) = rows[r][2];
    }
    return make_modes(std::move(momenta), std::move(weights));
}

double Dispersion::mass_gap() const {
    return values.size() == 0 ? 0.0 : values.minCoeff();
}

Dispersion constant_dispersion(int n_modes, double value) {
    if (!(value >= 0.0)) throw ModelError("dispersion must be non-negative");
    return Dispersion{RVector::Constant(n_modes, value)};
}

Dispersion relativistic_dispersion(const FieldModes& modes, double mass) {
    RVector omega(modes.count());
    for (int j = 0; j < modes.count(); ++j) {
        omega(j) = std::sqrt(modes.momenta.row(j).squaredNorm() + mass * mass);
    }
    return Dispersion{std::move(omega)};
}

// ---------------------------------------------------------------------------
// Form factors

namespace {

double dot_position(const FieldModes& modes, int mode, const std::array<double, 2>& x) {
    double r = modes.momenta(mode, 0) * x[0];
    if (modes.dim() == 2) r += modes.momenta(mode, 1) * x[1];
    return r;
}

void check_mode_dim(const ParticleGrid& grid, const FieldModes& modes) {
    if (modes.dim() != grid.dim) throw ModelError("mode momenta dimension does not match the grid");
}

CMatrix plane_wave_table(const ParticleGrid& grid, const FieldModes& modes, const CVector& amplitude) {
    const auto sites = static_cast<Eigen::Index>(grid.sites_per_particle());
    CMatrix table(sites, modes.count());
    for (Eigen::Index s = 0; s < sites; ++s) {
        const auto x = grid.site_position(static_cast<std::size_t>(s));
        for (int j = 0; j < modes.count(); ++j) {
            table(s, j) = amplitude(j) * std::exp(-kI * dot_position(modes, j, x));
        }
    }
    return table;
}

}  // namespace

FormFactor nelson_form_factor(const ParticleGrid& grid, const FieldModes& modes,
                              const Dispersion& dispersion, const CVector& lambda0) {
    check_mode_dim(grid, modes);
    if (lambda0.size() != modes.count()) throw ModelError("one lambda0 value per mode required");
    if (!lambda0.allFinite()) throw ModelError("lambda0 must be finite");
    if (dispersion.values.size() != modes.count()) throw ModelError("one frequency per mode required");
    for (int j = 0; j < modes.count(); ++j) {
        if (dispersion.values(j) == 0.0 && lambda0(j) != Complex{}) {
            throw ModelError("bound omega^-1/2 lambda in L^inf violated: mode " + std::to_string(j) +
                             " has zero frequency and nonzero coupling");
        }
    }
    return FormFactor{{plane_wave_table(grid, modes, lambda0)}};
}

FormFactor polaron_form_factor(const ParticleGrid& grid, const FieldModes& modes, double alpha) {
    check_mode_dim(grid, modes);
    if (!(alpha > 0.0)) throw ModelError("polaron coupling alpha must be positive");
    CVector amplitude(modes.count());
    const double exponent = 0.5 * (grid.dim - 1);
    for (int j = 0; j < modes.count(); ++j) {
        const double k = modes.momentum_norm(j);
        if (grid.dim >= 2 && k == 0.0) {
            throw ModelError("singular polaron form factor: mode k = 0 is not allowed for d >= 2");
        }
        amplitude(j) = std::sqrt(alpha) / std::pow(k, exponent);
    }
    return FormFactor{{plane_wave_table(grid, modes, amplitude)}};
}

FormFactor pauli_fierz_form_factor(const ParticleGrid& grid, const FieldModes& modes,
                                   const std::vector<CVector>& lambda0_per_particle) {
    check_mode_dim(grid, modes);
    if (lambda0_per_particle.empty() ||
        (lambda0_per_particle.size() != 1 &&
         lambda0_per_particle.size() != static_cast<std::size_t>(grid.n_particles))) {
        throw ModelError("Pauli-Fierz form factor needs one shared or one per-particle coupling list");
    }
    FormFactor ff;
    for (const auto& l0 : lambda0_per_particle) {
        if (l0.size() != modes.count() || !l0.allFinite()) throw ModelError("invalid lambda0 list");
        ff.tables.push_back(plane_wave_table(grid, modes, l0));
    }
    return ff;
}

RVector builtin_potential(const ParticleGrid& grid, PotentialKind kind, double strength) {
    RVector w = RVector::Zero(static_cast<Eigen::Index>(grid.total_points));
    if (kind == PotentialKind::Zero) return w;
    const double power = kind == PotentialKind::Harmonic ? 2.0 : 4.0;
    for (std::size_t flat = 0; flat < grid.total_points; ++flat) {
        double v = 0.0;
        for (int p = 0; p < grid.n_particles; ++p) {
            const auto x = grid.site_position(grid.particle_site(flat, p));
            const double r2 = x[0] * x[0] + x[1] * x[1];
            v += std::pow(r2, 0.5 * power);
        }
        w(static_cast<Eigen::Index>(flat)) = strength * v;
    }
    return w;
}

double ModelSpec::kinetic_coefficient(int particle) const {
    if (family == Family::PauliFierz) return 0.5 / masses(particle);
    return 1.0;
}

// ---------------------------------------------------------------------------
// Validation

double form_factor_sup_norm_squared(const FormFactor& ff, const FieldModes& modes,
                                    const Dispersion& dispersion, double omega_power) {
    double worst = 0.0;
    for (const auto& table : ff.tables) {
        for (Eigen::Index s = 0; s < table.rows(); ++s) {
            double acc = 0.0;
            for (int j = 0; j < modes.count(); ++j) {
                const double mag2 = std::norm(table(s, j));
                if (mag2 == 0.0) continue;
                const double omega = dispersion.values(j);
                if (omega == 0.0 && omega_power < 0.0) return std::numeric_limits<double>::infinity();
                acc += modes.weights(j) * std::pow(omega, omega_power) * mag2;
            }
            worst = std::max(worst, acc);
        }
    }
    return worst;
}

ValidationReport validate_model(const ModelSpec& spec) {
    ValidationReport report;
    auto fail = [&](std::string why) {
        report.failures.push_back(std::move(why));
        report.passed = false;
    };

    const auto& grid = spec.grid;
    const int k = spec.modes.count();
    const auto sites = static_cast<Eigen::Index>(grid.sites_per_particle());

    if (spec.modes.dim() != grid.dim) fail("mode momenta dimension does not match the grid");
    if (spec.dispersion.values.size() != k) fail("dispersion length differs from the mode count");
    if (spec.dispersion.values.size() > 0 &&
        (!spec.dispersion.values.allFinite() || spec.dispersion.values.minCoeff() < 0.0)) {
        fail("dispersion must be finite and non-negative");
    }
    if (spec.form_factor.tables.empty()) {
        fail("form factor table missing");
    } else if (spec.form_factor.tables.size() != 1 &&
               spec.form_factor.tables.size() != static_cast<std::size_t>(grid.n_particles)) {
        fail("form factor must have one shared or one per-particle table");
    }
    for (const auto& table : spec.form_factor.tables) {
        if (table.rows() != sites || table.cols() != k) fail("form factor table has the wrong shape");
        if (!table.allFinite()) fail("form factor has non-finite entries");
    }
    if (spec.external_potential.size() != static_cast<Eigen::Index>(grid.total_points)) {
        fail("external potential length differs from the grid size");
    } else if (!spec.external_potential.allFinite() || spec.external_potential.minCoeff() < 0.0) {
        fail("external potential must be finite and bounded below by 0");
    }
    if (!report.passed) return report;

    report.mass_gap = spec.dispersion.mass_gap();
    report.trapping = is_trapping(spec);

    auto bound = [&](std::string name, double power, bool required) {
        BoundCheck b;
        b.name = std::move(name);
        b.sup_norm_squared = form_factor_sup_norm_squared(spec.form_factor, spec.modes, spec.dispersion, power);
        b.sup_norm = std::sqrt(b.sup_norm_squared);
        b.required = required;
        b.ok = std::isfinite(b.sup_norm_squared);
        if (required && !b.ok) fail("bound " + b.name + " in L^inf violated");
        report.bounds.push_back(std::move(b));
    };

    bound("lambda", 0.0, true);
    bound("omega^-1/2 lambda", -1.0, true);

    switch (spec.family) {
        case Family::Nelson:
            break;
        case Family::Polaron:
            if (!(spec.alpha > 0.0)) fail("polaron requires alpha > 0");
            if ((spec.dispersion.values.array() != 1.0).any()) fail("polaron requires omega == 1");
            break;
        case Family::PauliFierz:
            bound("omega^+1/2 lambda", 1.0, true);
            if (!(report.mass_gap > 0.0)) fail("Pauli-Fierz requires mass_gap > 0 (omega^-1/2 requirement)");
            if (grid.dim != 1) fail("Pauli-Fierz is realized on d = 1 grids only");
            if (spec.masses.size() != grid.n_particles || (spec.masses.array() <= 0.0).any()) {
                fail("Pauli-Fierz requires one positive mass per particle");
            }
            if (!std::isfinite(spec.charge)) fail("charge must be finite");
            break;
    }
    return report;
}

bool is_trapping(const ModelSpec& spec, double threshold) {
    const auto& grid = spec.grid;
    if (grid.frozen) return true;
    double boundary_min = std::numeric_limits<double>::infinity();
    for (std::size_t flat = 0; flat < grid.total_points; ++flat) {
        bool on_boundary = false;
        for (int p = 0; p < grid.n_particles && !on_boundary; ++p) {
            for (int a = 0; a < grid.dim; ++a) {
                const int i = grid.axis_index(flat, p, a);
                if (i == 0 || i == grid.points_per_axis - 1) {
                    on_boundary = true;
                    break;
                }
            }
        }
        if (on_boundary) boundary_min = std::min(boundary_min, spec.external_potential(static_cast<Eigen::Index>(flat)));
    }
    return boundary_min >= threshold;
}

ModelSpec drop_decoupled_massless_modes(ModelSpec spec) {
    std::vector<int> keep;
    for (int j = 0; j < spec.modes.count(); ++j) {
        bool decoupled = true;
        for (const auto& table : spec.form_factor.tables) {
            if (!table.col(j).isZero(0.0)) decoupled = false;
        }
        if (!(spec.dispersion.values(j) == 0.0 && decoupled)) keep.push_back(j);
    }
    if (static_cast<int>(keep.size()) == spec.modes.count()) return spec;
    if (keep.empty()) throw ModelError("every mode is massless and decoupled; nothing left to model");

    const auto n = static_cast<Eigen::Index>(keep.size());
    RMatrix momenta(n, spec.modes.dim());
    RVector weights(n), omega(n);
    std::vector<CMatrix> tables;
    for (const auto& t : spec.form_factor.tables) tables.emplace_back(t.rows(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const int j = keep[static_cast<std::size_t>(i)];
        momenta.row(i) = spec.modes.momenta.row(j);
        weights(i) = spec.modes.weights(j);
        omega(i) = spec.dispersion.values(j);
        for (std::size_t t = 0; t < tables.size(); ++t) tables[t].col(i) = spec.form_factor.tables[t].col(j);
    }
    spec.modes = FieldModes{std::move(momenta), std::move(weights)};
    spec.dispersion = Dispersion{std::move(omega)};
    spec.form_factor = FormFactor{std::move(tables)};
    return spec;
}

ModelSpec make_model(Family family, ParticleGrid grid, FieldModes modes, Dispersion dispersion,
                     FormFactor form_factor, RVector external_potential, RVector masses, double charge,
                     double alpha) {
    ModelSpec spec;
    spec.family = family;
    spec.grid = std::move(grid);
    spec.modes = std::move(modes);
    spec.dispersion = std::move(dispersion);
    spec.form_factor = std::move(form_factor);
    spec.external_potential = std::move(external_potential);
    spec.masses = std::move(masses);
    spec.charge = charge;
    spec.alpha = alpha;
    if (spec.dispersion.values.size() == spec.modes.count()) spec = drop_decoupled_massless_modes(std::move(spec));

    const ValidationReport report = validate_model(spec);
    if (!report.passed) {
        std::string msg = "model validation failed:";
        for (const auto& f : report.failures) msg += " [" + f + "]";
        throw ModelError(msg);
    }
    return spec;
}

}  // namespace qcl
