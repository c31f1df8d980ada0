#include "qcl/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <random>
#include <sstream>

#include "qcl/fock.hpp"
#include "qcl/measures.hpp"
#include "qcl/minimize.hpp"
#include "qcl/model_io.hpp"
#include "qcl/parallel.hpp"
#include "qcl/pekar.hpp"

namespace qcl::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// ---------------------------------------------------------------------------
// Config

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const double x = std::stod(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects a number, got '" + v + "'");
    }
}

long long parse_integer(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const long long x = std::stoll(v, &used);
        if (used != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects an integer, got '" + v + "'");
    }
}

int parse_int(const std::string& key, const std::string& v) { return static_cast<int>(parse_integer(key, v)); }

std::uint64_t parse_seed(const std::string& key, const std::string& v) {
    try {
        std::size_t used = 0;
        const unsigned long long x = std::stoull(v, &used);
        if (used != v.size() || v.front() == '-') throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "' expects an unsigned integer, got '" + v + "'");
    }
}

}  // namespace

RunConfig parse_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    RunConfig c;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "command") {
            c.command = value;
        } else if (key == "model") {
            c.model = value;
            c.model_path = path.parent_path() / value;
        } else if (key == "output_dir") {
            c.output_dir = value;
        } else if (key == "tol_e") {
            c.tol_e = parse_double(key, value);
        } else if (key == "tol_r") {
            c.tol_r = parse_double(key, value);
        } else if (key == "tol_equiv") {
            c.tol_equiv = parse_double(key, value);
        } else if (key == "seed") {
            c.seed = parse_seed(key, value);
        } else if (key == "n_starts") {
            c.n_starts = parse_int(key, value);
        } else if (key == "eps_list") {
            c.eps_list.clear();
            std::string item;
            std::stringstream ss(value);
            while (std::getline(ss, item, ',')) {
                item = trim(item);
                if (!item.empty()) c.eps_list.push_back(parse_double(key, item));
            }
        } else if (key == "n_max") {
            c.n_max = parse_int(key, value);
        } else if (key == "max_iter") {
            c.max_iter = parse_int(key, value);
        } else if (key == "n_samples") {
            c.n_samples = parse_int(key, value);
        } else if (key == "n_draws") {
            c.n_draws = parse_int(key, value);
        } else if (key == "threads") {
            c.threads = parse_int(key, value);
        } else {
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
        }
    }
    return c;
}

void validate_config(const RunConfig& c) {
    const auto& names = commands();
    if (std::find(names.begin(), names.end(), c.command) == names.end()) {
        throw ConfigError("unknown command '" + c.command + "'");
    }
    if (c.model.empty()) throw ConfigError("config does not name a model");
    if (!fs::exists(c.model_path)) throw ConfigError("model file " + c.model_path.string() + " does not exist");
    if (!(c.tol_e > 0.0) || !(c.tol_r > 0.0) || !(c.tol_equiv > 0.0)) throw ConfigError("tolerances must be > 0");
    if (c.n_starts < 1) throw ConfigError("n_starts must be >= 1");
    if (c.max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (c.n_samples < 1 || c.n_draws < 1) throw ConfigError("n_samples and n_draws must be >= 1");
    if (c.n_max < 0) throw ConfigError("n_max must be >= 0");
    if (c.eps_list.empty()) throw ConfigError("eps_list is empty");
    for (std::size_t i = 0; i < c.eps_list.size(); ++i) {
        if (!(c.eps_list[i] > 0.0 && c.eps_list[i] <= 1.0)) throw ConfigError("eps_list entries must lie in (0, 1]");
        if (i > 0 && !(c.eps_list[i] < c.eps_list[i - 1])) throw ConfigError("eps_list must be strictly decreasing");
    }
}

// ---------------------------------------------------------------------------
// Commands

namespace {

struct Outcome {
    ordered_json results;
    int code = kOk;
};

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
}

void write_trace(const fs::path& dir, const std::vector<TraceRow>& trace) {
    std::string csv = "iteration,E,psi_residual,field_residual\n";
    for (const auto& r : trace) {
        csv += std::to_string(r.iteration) + "," + format_number(r.energy) + "," + format_number(r.psi_residual) +
               "," + format_number(r.field_residual) + "\n";
    }
    write_text(dir / "trace.csv", csv);
}

MinimizeOptions minimize_options(const RunConfig& c) {
    MinimizeOptions o;
    o.tol_e = c.tol_e;
    o.tol_r = c.tol_r;
    o.max_iter = c.max_iter;
    return o;
}

ordered_json minimizer_json(const ModelSpec& spec, const MinimizeResult& r) {
    ordered_json j;
    j["energy"] = r.energy;
    j["converged"] = r.converged;
    j["iterations"] = r.iterations;
    j["psi_residual"] = r.el_residuals.psi_residual;
    j["field_residual"] = r.el_residuals.field_residual;
    j["multiplier"] = r.el_residuals.multiplier;
    j["z_star"] = complex_array(r.z_star.values);
    j["eta_star"] = complex_array(to_eta(r.z_star, spec.dispersion).values);
    return j;
}

ordered_json multi_start_json(const MultiStartReport& m) {
    ordered_json j;
    j["n_starts"] = m.runs.size();
    j["best_index"] = m.best_index;
    j["min_energy"] = m.min_energy;
    j["max_energy"] = m.max_energy;
    ordered_json energies = ordered_json::array();
    for (const auto& r : m.runs) energies.push_back(r.energy);
    j["energies"] = energies;
    j["psi_distances"] = m.psi_distances;
    j["z_distances"] = m.z_distances;
    return j;
}

Outcome qc_min(const ModelSpec& spec, const RunConfig& c) {
    const MultiStartReport m = multi_start(spec, c.n_starts, c.seed, minimize_options(c));
    Outcome o;
    o.results["minimizer"] = minimizer_json(spec, m.best);
    o.results["script_i_at_z_star"] = script_i(spec, m.best.z_star);
    o.results["multi_start"] = multi_start_json(m);
    write_trace(c.output_dir, m.best.energy_trace);
    o.code = m.best.converged ? kOk : kNonConvergence;
    return o;
}

Outcome pekar(const ModelSpec& spec, const RunConfig& c) {
    PekarOptions popts;
    popts.tol_r = c.tol_r;
    const PekarMinimizeResult p = pekar_minimize(spec, popts);
    const PekarEnergy e = pekar_energy(spec, p.psi);
    const EtaSolution eta = eta_pekar_solve(spec, p.psi);
    Outcome o;
    o.results["energy"] = p.energy;
    o.results["kernel_form"] = e.kernel_form;
    o.results["field_form"] = e.field_form;
    o.results["gradient_norm"] = p.gradient_norm;
    o.results["iterations"] = p.iterations;
    o.results["converged"] = p.converged;
    o.results["eta_pekar"] = complex_array(eta.eta.values);
    o.results["condition_estimate"] = eta.condition;

    std::string trace = "iteration,E\n";
    for (std::size_t i = 0; i < p.energy_trace.size(); ++i) {
        trace += std::to_string(i) + "," + format_number(p.energy_trace[i]) + "\n";
    }
    write_text(c.output_dir / "trace.csv", trace);

    if (spec.family != Family::PauliFierz) {
        const PekarKernel k = pekar_kernel(spec);
        std::string csv;
        if (k.dense) {
            csv = "X,Y,V_pekar\n";
            for (Eigen::Index x = 0; x < k.v_pekar.rows(); ++x) {
                for (Eigen::Index y = 0; y < k.v_pekar.cols(); ++y) {
                    csv += std::to_string(x) + "," + std::to_string(y) + "," + format_number(k.v_pekar(x, y)) + "\n";
                }
            }
        } else {
            csv = "x,y,re_U\n";
            for (Eigen::Index x = 0; x < k.u.rows(); ++x) {
                for (Eigen::Index y = 0; y < k.u.cols(); ++y) {
                    csv += std::to_string(x) + "," + std::to_string(y) + "," + format_number(k.u(x, y).real()) + "\n";
                }
            }
        }
        write_text(c.output_dir / "kernel.csv", csv);
    }
    o.code = p.converged ? kOk : kNonConvergence;
    return o;
}

Outcome equivalence(const ModelSpec& spec, const RunConfig& c) {
    PekarOptions popts;
    popts.tol_r = c.tol_r;
    const EquivalenceReport r = equivalence_check(spec, c.tol_equiv, c.n_starts, c.seed, minimize_options(c), popts);
    Outcome o;
    o.results["e_qc"] = r.e_qc;
    o.results["e_pekar"] = r.e_pekar;
    o.results["gap"] = r.gap;
    o.results["pekar_at_qc"] = r.pekar_at_qc;
    o.results["fqc_at_pekar"] = r.fqc_at_pekar;
    o.results["tolerance"] = r.tolerance;
    o.results["qc_converged"] = r.qc_converged;
    o.results["pekar_converged"] = r.pekar_converged;
    o.results["passed"] = r.passed;
    o.results["minimizer"] = minimizer_json(spec, r.qc.best);
    o.results["multi_start"] = multi_start_json(r.qc);
    o.results["pekar_iterations"] = r.pekar.iterations;
    o.results["pekar_gradient_norm"] = r.pekar.gradient_norm;
    write_trace(c.output_dir, r.qc.best.energy_trace);
    if (!r.passed) {
        o.code = kAssertion;
    } else if (!r.qc_converged || !r.pekar_converged) {
        o.code = kNonConvergence;
    }
    return o;
}

Outcome fock_sweep(const ModelSpec& spec, const RunConfig& c) {
    const MultiStartReport m = multi_start(spec, c.n_starts, c.seed, minimize_options(c));
    const MinimizeResult& best = m.best;
    SweepOptions sopts;
    sopts.n_max = c.n_max;
    sopts.reference_norm_squared = mode_norm_squared(spec.modes, best.z_star.values);
    const SweepReport sweep = epsilon_sweep(spec, c.eps_list, best.energy, sopts);

    const bool nelson_like = spec.family != Family::PauliFierz;
    const double bound = nelson_like ? nelson_lower_bound(spec) : 0.0;
    bool bound_ok = true;
    std::vector<TrialEnergy> trials(sweep.rows.size());
    parallel_for(trials.size(), [&](std::size_t i) {
        const double eps = sweep.rows[i].epsilon;
        const FockBasis basis(spec.modes.count(), shell_rule_n_max(sopts.reference_norm_squared / eps));
        trials[i] = trial_energy(spec, basis, eps, best.psi_star, best.z_star);
    });

    Outcome o;
    o.results["e_qc"] = best.energy;
    o.results["qc_converged"] = best.converged;
    o.results["n_max_rule"] = c.n_max > 0 ? "fixed" : "shell";
    ordered_json rows = ordered_json::array();
    std::string csv = "epsilon,E_eps,E_qc,abs_err,n_max,tail_mass\n";
    std::string plot = "# epsilon abs_err trial_gap\n";
    for (std::size_t i = 0; i < sweep.rows.size(); ++i) {
        const SweepRow& r = sweep.rows[i];
        ordered_json row;
        row["epsilon"] = r.epsilon;
        row["E_eps"] = r.e_eps;
        row["abs_err"] = r.abs_err;
        row["n_max"] = r.n_max;
        row["tail_mass"] = r.tail_mass;
        row["residual"] = r.residual;
        row["unreliable"] = r.unreliable;
        row["trial_energy"] = trials[i].energy;
        row["trial_gap"] = trials[i].gap;
        if (nelson_like) {
            row["lower_bound_ok"] = r.e_eps >= bound;
            bound_ok = bound_ok && r.e_eps >= bound;
        }
        rows.push_back(row);
        csv += format_number(r.epsilon) + "," + format_number(r.e_eps) + "," + format_number(r.e_qc) + "," +
               format_number(r.abs_err) + "," + std::to_string(r.n_max) + "," + format_number(r.tail_mass) + "\n";
        plot += format_number(r.epsilon) + " " + format_number(r.abs_err) + " " + format_number(trials[i].gap) + "\n";
    }
    o.results["rows"] = rows;
    if (nelson_like) o.results["lower_bound"] = bound;
    o.results["monotone"] = sweep.monotone;
    o.results["any_unreliable"] = sweep.any_unreliable;
    write_text(c.output_dir / "sweep.csv", csv);
    write_text(c.output_dir / "sweep.plot", plot);
    write_trace(c.output_dir, best.energy_trace);

    if (sweep.any_unreliable || !sweep.monotone || !bound_ok) {
        o.code = kAssertion;
    } else if (!best.converged) {
        o.code = kNonConvergence;
    }
    return o;
}

Outcome convexity(const ModelSpec& spec, const RunConfig& c) {
    const double scale =
        std::max(1.0, std::sqrt(form_factor_sup_norm_squared(spec.form_factor, spec.modes, spec.dispersion, -1.0)));
    std::vector<ConvexityGap> gaps(static_cast<std::size_t>(c.n_draws));
    parallel_for(gaps.size(), [&](std::size_t i) {
        std::mt19937_64 rng(derive_seed(c.seed, i));
        std::normal_distribution<double> normal;
        std::uniform_real_distribution<double> beta(0.05, 0.95);
        const WaveFunction psi = random_wave_function(spec.grid, rng());
        CVector e1(spec.modes.count()), e2(spec.modes.count());
        for (int j = 0; j < spec.modes.count(); ++j) {
            e1(j) = scale * Complex(normal(rng), normal(rng));
            e2(j) = scale * Complex(normal(rng), normal(rng));
        }
        gaps[i] = convexity_gap(spec, psi, FieldAmplitudes::eta(e1), FieldAmplitudes::eta(e2), beta(rng));
    });
    double min_gap = gaps.front().gap, max_rel = 0.0;
    for (const auto& g : gaps) {
        min_gap = std::min(min_gap, g.gap);
        max_rel = std::max(max_rel, std::abs(g.gap - g.prediction) / std::abs(g.prediction));
    }
    Outcome o;
    o.results["n_draws"] = c.n_draws;
    o.results["min_gap"] = min_gap;
    o.results["max_relative_error"] = max_rel;
    o.results["all_positive"] = min_gap > 0.0;
    o.results["passed"] = min_gap > 0.0 && max_rel <= 1e-10;
    o.code = min_gap > 0.0 && max_rel <= 1e-10 ? kOk : kAssertion;
    return o;
}

Outcome measures_check(const ModelSpec& spec, const RunConfig& c) {
    const MultiStartReport m = multi_start(spec, c.n_starts, c.seed, minimize_options(c));
    const QcReference ref{m.best.energy, m.best.psi_star, m.best.z_star};
    const AtomicBoundReport r = atomic_bound_check(spec, ref, c.n_samples, c.seed);
    Outcome o;
    o.results["e_qc"] = r.e_qc;
    o.results["e_svm_dirac"] = r.e_svm_dirac;
    o.results["e_pm_dirac"] = r.e_pm_dirac;
    o.results["e_pekar"] = r.e_pekar;
    o.results["min_script_i"] = r.min_script_i;
    o.results["min_e_svm"] = r.min_e_svm;
    o.results["min_e_pm"] = r.min_e_pm;
    o.results["n_samples"] = r.n_samples;
    o.results["adversarial"] = r.adversarial;
    o.results["delta"] = r.delta;
    o.results["near_minimizing_e_svm"] = r.near_minimizing_e_svm;
    ordered_json tallies = ordered_json::array();
    for (const auto& t : r.concentration) tallies.push_back({{"k", t.k}, {"weight", t.weight}, {"ok", t.ok}});
    o.results["concentration"] = tallies;
    ordered_json witnesses = ordered_json::array();
    for (const auto& w : r.witnesses) witnesses.push_back(measure_to_json(spec, w));
    o.results["witnesses"] = witnesses;
    o.results["qc_converged"] = m.best.converged;
    o.results["passed"] = r.passed;
    if (!r.passed) {
        o.code = kAssertion;
    } else if (!m.best.converged) {
        o.code = kNonConvergence;
    }
    return o;
}

}  // namespace

int run(const RunConfig& config, std::ostream& log) {
    ordered_json results;
    results["command"] = config.command;
    results["model"] = config.model;
    results["seed"] = config.seed;
    int code = kOk;
    try {
        validate_config(config);
        if (config.threads > 0) set_thread_count(config.threads);
        fs::create_directories(config.output_dir);
        const ModelSpec spec = load_model(config.model_path);
        results["family"] = std::string(to_string(spec.family));

        Outcome o;
        if (config.command == "qc-min") o = qc_min(spec, config);
        else if (config.command == "pekar") o = pekar(spec, config);
        else if (config.command == "equivalence") o = equivalence(spec, config);
        else if (config.command == "fock-sweep") o = fock_sweep(spec, config);
        else if (config.command == "convexity") o = convexity(spec, config);
        else o = measures_check(spec, config);
        for (auto it = o.results.begin(); it != o.results.end(); ++it) results[it.key()] = it.value();
        code = o.code;
    } catch (const SolverError& e) {
        code = kNonConvergence;
        results["error"] = e.what();
    } catch (const ConsistencyError& e) {
        code = kAssertion;
        results["error"] = e.what();
    } catch (const TruncationError& e) {
        code = kAssertion;
        results["error"] = e.what();
        results["required_n_max"] = e.required_n_max();
    } catch (const Error& e) {
        code = kValidation;
        results["error"] = e.what();
    }
    results["exit_code"] = code;
    if (code != kOk) log << "qcl " << config.command << ": exit " << code;
    if (results.contains("error")) log << ": " << results["error"].get<std::string>();
    if (code != kOk) log << '\n';

    std::error_code ec;
    fs::create_directories(config.output_dir, ec);
    if (!ec) {
        std::ofstream out(config.output_dir / "results.json", std::ios::binary);
        out << results.dump(2) << '\n';
    }
    return code;
}

}  // namespace qcl::cli
