#include "qcl/model_io.hpp"

#include <fstream>
#include <string>

namespace qcl {

using nlohmann::json;
using nlohmann::ordered_json;

ordered_json complex_array(const CVector& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back({v(i).real(), v(i).imag()});
    return a;
}

CVector complex_vector_from_json(const json& a) {
    if (!a.is_array()) throw ModelError("expected an array of [re, im] pairs");
    CVector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto& e = a[i];
        if (e.is_number()) {
            v(static_cast<Eigen::Index>(i)) = Complex(e.get<double>(), 0.0);
        } else if (e.is_array() && e.size() == 2) {
            v(static_cast<Eigen::Index>(i)) = Complex(e[0].get<double>(), e[1].get<double>());
        } else {
            throw ModelError("complex numbers are written as [re, im]");
        }
    }
    return v;
}

namespace {

ordered_json real_array(const RVector& v) {
    ordered_json a = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
    return a;
}

RVector real_vector_from_json(const json& a) {
    if (!a.is_array()) throw ModelError("expected an array of numbers");
    RVector v(static_cast<Eigen::Index>(a.size()));
    for (std::size_t i = 0; i < a.size(); ++i) v(static_cast<Eigen::Index>(i)) = a[i].get<double>();
    return v;
}

const json& required(const json& doc, const char* key) {
    if (!doc.contains(key)) throw ModelError(std::string("model document is missing '") + key + "'");
    return doc.at(key);
}

ParticleGrid grid_from_json(const json& g) {
    const int dim = g.value("dim", 1);
    if (g.value("frozen", false)) return frozen_particle_grid(dim);
    return build_particle_grid(dim, g.value("n_particles", 1), required(g, "extent").get<double>(),
                               required(g, "points_per_axis").get<int>(),
                               g.value("point_cap", kDefaultPointCap));
}

FieldModes modes_from_json(const json& m) {
    if (m.contains("lattice")) {
        const auto& l = m.at("lattice");
        return mode_lattice_1d(l.at("k_min").get<double>(), l.at("k_max").get<double>(), l.at("count").get<int>());
    }
    if (m.contains("lattice_2d")) {
        const auto& l = m.at("lattice_2d");
        return mode_lattice_2d(l.at("k_min").get<double>(), l.at("k_max").get<double>(),
                               l.at("count_per_axis").get<int>(), l.value("drop_zero", true));
    }
    const auto& rows = required(m, "momenta");
    if (!rows.is_array() || rows.empty()) throw ModelError("modes.momenta must be a non-empty array");
    const auto d = static_cast<Eigen::Index>(rows[0].size());
    RMatrix momenta(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != static_cast<std::size_t>(d)) throw ModelError("ragged modes.momenta");
        for (Eigen::Index a = 0; a < d; ++a) momenta(static_cast<Eigen::Index>(i), a) = rows[i][static_cast<std::size_t>(a)].get<double>();
    }
    return make_modes(std::move(momenta), real_vector_from_json(required(m, "weights")));
}

Dispersion dispersion_from_json(const json& d, const FieldModes& modes) {
    if (d.contains("constant")) return constant_dispersion(modes.count(), d.at("constant").get<double>());
    if (d.contains("relativistic_mass")) return relativistic_dispersion(modes, d.at("relativistic_mass").get<double>());
    return Dispersion{real_vector_from_json(required(d, "values"))};
}

FormFactor form_factor_from_json(const json& f, const ParticleGrid& grid, const FieldModes& modes,
                                 const Dispersion& disp, double alpha) {
    if (f.contains("tables")) {
        FormFactor ff;
        for (const auto& t : f.at("tables")) {
            if (!t.is_array()) throw ModelError("form_factor.tables entries must be arrays of rows");
            CMatrix table(static_cast<Eigen::Index>(t.size()), modes.count());
            for (std::size_t s = 0; s < t.size(); ++s) {
                const CVector row = complex_vector_from_json(t[s]);
                if (row.size() != modes.count()) throw ModelError("form factor row length differs from the mode count");
                table.row(static_cast<Eigen::Index>(s)) = row.transpose();
            }
            ff.tables.push_back(std::move(table));
        }
        return ff;
    }
    const std::string generator = required(f, "generator").get<std::string>();
    if (generator == "nelson") return nelson_form_factor(grid, modes, disp, complex_vector_from_json(required(f, "lambda0")));
    if (generator == "polaron") return polaron_form_factor(grid, modes, f.value("alpha", alpha));
    if (generator == "pauli_fierz") {
        std::vector<CVector> lists;
        const auto& l0 = required(f, "lambda0");
        const bool nested = l0.is_array() && !l0.empty() && l0[0].is_array() && !l0[0].empty() && l0[0][0].is_array();
        if (nested) {
            for (const auto& l : l0) lists.push_back(complex_vector_from_json(l));
        } else {
            lists.push_back(complex_vector_from_json(l0));
        }
        return pauli_fierz_form_factor(grid, modes, lists);
    }
    throw ModelError("unknown form factor generator '" + generator + "'");
}

RVector potential_from_json(const json& w, const ParticleGrid& grid) {
    if (w.is_array()) return real_vector_from_json(w);
    const std::string kind = required(w, "builtin").get<std::string>();
    const double strength = w.value("strength", 1.0);
    if (kind == "harmonic") return builtin_potential(grid, PotentialKind::Harmonic, strength);
    if (kind == "quartic") return builtin_potential(grid, PotentialKind::Quartic, strength);
    if (kind == "zero") return builtin_potential(grid, PotentialKind::Zero, strength);
    throw ModelError("unknown built-in potential '" + kind + "'");
}

}  // namespace

ordered_json model_to_json(const ModelSpec& spec) {
    ordered_json doc;
    doc["version"] = kModelSchemaVersion;
    doc["family"] = std::string(to_string(spec.family));
    const auto& g = spec.grid;
    if (g.frozen) {
        doc["grid"] = {{"dim", g.dim}, {"frozen", true}};
    } else {
        doc["grid"] = {{"dim", g.dim},
                       {"n_particles", g.n_particles},
                       {"extent", g.extent},
                       {"points_per_axis", g.points_per_axis}};
    }
    ordered_json momenta = ordered_json::array();
    for (int j = 0; j < spec.modes.count(); ++j) {
        ordered_json row = ordered_json::array();
        for (int a = 0; a < spec.modes.dim(); ++a) row.push_back(spec.modes.momenta(j, a));
        momenta.push_back(row);
    }
    doc["modes"] = {{"momenta", momenta}, {"weights", real_array(spec.modes.weights)}};
    doc["dispersion"] = {{"values", real_array(spec.dispersion.values)}};
    ordered_json tables = ordered_json::array();
    for (const auto& t : spec.form_factor.tables) {
        ordered_json rows = ordered_json::array();
        for (Eigen::Index s = 0; s < t.rows(); ++s) rows.push_back(complex_array(t.row(s).transpose()));
        tables.push_back(rows);
    }
    doc["form_factor"] = {{"tables", tables}};
    doc["external_potential"] = real_array(spec.external_potential);
    doc["masses"] = real_array(spec.masses);
    doc["charge"] = spec.charge;
    doc["alpha"] = spec.alpha;
    return doc;
}

ModelSpec model_from_json(const json& doc) {
    try {
        if (doc.contains("version") && doc.at("version").get<int>() != kModelSchemaVersion) {
            throw ModelError("unsupported model schema version " + doc.at("version").dump());
        }
        const Family family = family_from_string(required(doc, "family").get<std::string>());
        const double alpha = doc.value("alpha", 0.0);
        const ParticleGrid grid = grid_from_json(required(doc, "grid"));
        const FieldModes modes = modes_from_json(required(doc, "modes"));
        const Dispersion disp = dispersion_from_json(required(doc, "dispersion"), modes);
        FormFactor ff = form_factor_from_json(required(doc, "form_factor"), grid, modes, disp, alpha);
        RVector w = potential_from_json(required(doc, "external_potential"), grid);
        RVector masses = doc.contains("masses") ? real_vector_from_json(doc.at("masses")) : RVector();
        return make_model(family, grid, modes, disp, std::move(ff), std::move(w), std::move(masses),
                          doc.value("charge", 0.0), alpha);
    } catch (const json::exception& e) {
        throw ModelError(std::string("malformed model document: ") + e.what());
    }
}

ModelSpec load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot open model file " + path.string());
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        throw ModelError("cannot parse model file " + path.string() + ": " + e.what());
    }
    return model_from_json(doc);
}

void save_model(const ModelSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out << model_to_json(spec).dump(2) << '\n';
}

ordered_json measure_to_json(const ModelSpec& spec, const AtomicStateMeasure& measure) {
    ordered_json doc = model_to_json(spec);
    ordered_json atoms = ordered_json::array();
    for (const auto& a : measure.atoms) {
        atoms.push_back({{"weight", a.weight},
                         {"z", complex_array(a.z.values)},
                         {"psi", complex_array(a.psi.amplitudes)}});
    }
    doc["atoms"] = atoms;
    return doc;
}

}  // namespace qcl
