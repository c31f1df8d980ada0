#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "qcl/cli.hpp"
#include "qcl/instances.hpp"
#include "qcl/minimize.hpp"
#include "qcl/model_io.hpp"

using namespace qcl;
namespace fs = std::filesystem;

namespace {

const fs::path kData = QCL_DATA_DIR;

struct TempDir {
    fs::path path;
    TempDir() {
        std::random_device rd;
        path = fs::temp_directory_path() / ("qcl_test_" + std::to_string(rd()));
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p, std::ios::binary) << text; }

bool same_model(const ModelSpec& a, const ModelSpec& b) {
    if (a.family != b.family || a.grid.total_points != b.grid.total_points || a.grid.frozen != b.grid.frozen) return false;
    if (a.form_factor.tables.size() != b.form_factor.tables.size()) return false;
    for (std::size_t t = 0; t < a.form_factor.tables.size(); ++t) {
        if ((a.form_factor.tables[t] - b.form_factor.tables[t]).cwiseAbs().maxCoeff() > 1e-15) return false;
    }
    return a.modes.momenta == b.modes.momenta && a.modes.weights == b.modes.weights &&
           (a.dispersion.values - b.dispersion.values).cwiseAbs().maxCoeff() <= 1e-15 &&
           a.external_potential == b.external_potential && a.masses == b.masses && a.charge == b.charge &&
           a.alpha == b.alpha;
}

cli::RunConfig config_for(const std::string& command, const std::string& model, const fs::path& out) {
    cli::RunConfig c;
    c.command = command;
    c.model = model;
    c.model_path = kData / "models" / model;
    c.output_dir = out;
    return c;
}

}  // namespace

TEST_CASE("shipped model files match the built-in instances") {
    const std::pair<const char*, ModelSpec> cases[] = {
        {"inst_a.json", instances::inst_a()},
        {"inst_b.json", instances::inst_b()},
        {"decoupled.json", instances::decoupled()},
        {"frozen_nelson.json", instances::frozen_nelson()},
        {"frozen_pauli_fierz.json", instances::frozen_pauli_fierz()},
        {"polaron_1d.json", instances::polaron_1d()},
        {"pauli_fierz_1d.json", instances::pauli_fierz_1d()},
        {"two_particle_nelson.json", instances::two_particle_nelson()},
    };
    for (const auto& [file, spec] : cases) {
        CAPTURE(file);
        CHECK(same_model(load_model(kData / "models" / file), spec));
    }
}

TEST_CASE("full model documents round-trip exactly") {
    TempDir tmp;
    for (const auto& spec : {instances::inst_b(), instances::polaron_1d(), instances::pauli_fierz_1d(),
                             instances::frozen_pauli_fierz(), instances::two_particle_nelson()}) {
        const auto doc = model_to_json(spec);
        CHECK(doc["version"] == kModelSchemaVersion);
        const auto back = model_from_json(nlohmann::json::parse(doc.dump()));
        CHECK(same_model(back, spec));
        CHECK(back.form_factor.tables[0] == spec.form_factor.tables[0]);
        save_model(spec, tmp.path / "m.json");
        CHECK(same_model(load_model(tmp.path / "m.json"), spec));
    }
}

TEST_CASE("malformed model documents are rejected") {
    auto doc = nlohmann::json::parse(model_to_json(instances::inst_a()).dump());
    SUBCASE("version") {
        doc["version"] = 2;
        CHECK_THROWS_AS(model_from_json(doc), ModelError);
    }
    SUBCASE("family") {
        doc.erase("family");
        CHECK_THROWS_AS(model_from_json(doc), ModelError);
    }
    SUBCASE("negative dispersion") {
        doc["dispersion"] = {{"values", {-1.0}}};
        CHECK_THROWS_AS(model_from_json(doc), ModelError);
    }
    SUBCASE("unknown generator") {
        doc["form_factor"] = {{"generator", "yukawa"}};
        CHECK_THROWS_AS(model_from_json(doc), ModelError);
    }
    SUBCASE("bad complex entry") {
        doc["form_factor"] = {{"generator", "nelson"}, {"lambda0", {{1.0, 2.0, 3.0}}}};
        CHECK_THROWS_AS(model_from_json(doc), ModelError);
    }
    TempDir tmp;
    write(tmp.path / "broken.json", "{ not json");
    CHECK_THROWS_AS(load_model(tmp.path / "broken.json"), ModelError);
    CHECK_THROWS_AS(load_model(tmp.path / "missing.json"), ModelError);
}

TEST_CASE("complex arrays and measure documents") {
    CVector v(2);
    v << Complex(1.0, -2.0), Complex(0.1, 0.0);
    CHECK(complex_vector_from_json(nlohmann::json::parse(complex_array(v).dump())) == v);
    const auto spec = instances::inst_b();
    const auto psi = random_wave_function(spec.grid, 3);
    const auto doc = measure_to_json(spec, dirac_measure(psi, FieldAmplitudes::z(v.head(1))));
    REQUIRE(doc["atoms"].size() == 1);
    CHECK(doc["atoms"][0]["weight"] == 1.0);
    CHECK(doc["atoms"][0]["psi"].size() == 64);
}

TEST_CASE("config parsing") {
    TempDir tmp;
    write(tmp.path / "run.cfg",
          "# comment line\n"
          "command = fock-sweep\n"
          "model = m.json   # trailing comment\n"
          "eps_list = 0.5, 0.2,0.1\n"
          "seed = 18446744073709551615\n"
          "n_max = 7\n"
          "tol_r = 1e-9\n");
    const auto c = cli::parse_config(tmp.path / "run.cfg");
    CHECK(c.command == "fock-sweep");
    CHECK(c.model_path == tmp.path / "m.json");
    CHECK(c.eps_list == std::vector<double>{0.5, 0.2, 0.1});
    CHECK(c.seed == 18446744073709551615ull);
    CHECK(c.n_max == 7);
    CHECK(c.tol_r == 1e-9);
    CHECK(c.output_dir == "out");

    write(tmp.path / "bad1.cfg", "colour = blue\n");
    CHECK_THROWS_AS(cli::parse_config(tmp.path / "bad1.cfg"), cli::ConfigError);
    write(tmp.path / "bad2.cfg", "tol_e = small\n");
    CHECK_THROWS_AS(cli::parse_config(tmp.path / "bad2.cfg"), cli::ConfigError);
    write(tmp.path / "bad3.cfg", "just words\n");
    CHECK_THROWS_AS(cli::parse_config(tmp.path / "bad3.cfg"), cli::ConfigError);
    write(tmp.path / "bad4.cfg", "seed = -3\n");
    CHECK_THROWS_AS(cli::parse_config(tmp.path / "bad4.cfg"), cli::ConfigError);
    CHECK_THROWS_AS(cli::parse_config(tmp.path / "absent.cfg"), cli::ConfigError);
}

TEST_CASE("config validation") {
    auto c = config_for("qc-min", "inst_a.json", "unused");
    CHECK_NOTHROW(cli::validate_config(c));
    auto bad = c;
    bad.command = "solve";
    CHECK_THROWS_AS(cli::validate_config(bad), cli::ConfigError);
    bad = c;
    bad.model_path = kData / "models" / "nope.json";
    CHECK_THROWS_AS(cli::validate_config(bad), cli::ConfigError);
    bad = c;
    bad.tol_e = 0.0;
    CHECK_THROWS_AS(cli::validate_config(bad), cli::ConfigError);
    bad = c;
    bad.eps_list = {0.5, 0.5};
    CHECK_THROWS_AS(cli::validate_config(bad), cli::ConfigError);
    bad = c;
    bad.eps_list = {2.0};
    CHECK_THROWS_AS(cli::validate_config(bad), cli::ConfigError);
}

TEST_CASE("number formatting") {
    CHECK(cli::format_number(0.1) == "0.10000000000000001");
    CHECK(cli::format_number(1.0) == "1");
    CHECK(std::stod(cli::format_number(oracle::kInstBEnergy)) == oracle::kInstBEnergy);
}

TEST_CASE("qc-min on the decoupled model") {
    TempDir tmp;
    std::ostringstream log;
    const auto c = config_for("qc-min", "decoupled.json", tmp.path);
    CHECK(cli::run(c, log) == cli::kOk);
    const auto r = nlohmann::json::parse(slurp(tmp.path / "results.json"));
    CHECK(r["exit_code"] == 0);
    CHECK(r["family"] == "Nelson");
    const double e = r["minimizer"]["energy"].get<double>();
    CHECK(std::abs(e - oracle::kHarmonicGroundEnergy) < 1e-10);

    // the reported energy is exactly what the library returns for the same seeds
    MinimizeOptions o;
    o.tol_e = c.tol_e;
    o.tol_r = c.tol_r;
    o.max_iter = c.max_iter;
    CHECK(e == multi_start(load_model(c.model_path), c.n_starts, c.seed, o).best.energy);

    const std::string trace = slurp(tmp.path / "trace.csv");
    CHECK(trace.rfind("iteration,E,psi_residual,field_residual\n", 0) == 0);
}

TEST_CASE("equivalence on the constant-coupling model") {
    TempDir tmp;
    std::ostringstream log;
    auto c = config_for("equivalence", "inst_a.json", tmp.path);
    c.tol_equiv = 1e-8;
    CHECK(cli::run(c, log) == cli::kOk);
    const auto r = nlohmann::json::parse(slurp(tmp.path / "results.json"));
    CHECK(r["gap"].get<double>() <= 1e-8);
    CHECK(r["passed"] == true);
}

TEST_CASE("fock-sweep with too small a cutoff fails the assertions") {
    TempDir tmp;
    std::ostringstream log;
    auto c = config_for("fock-sweep", "inst_a.json", tmp.path);
    c.n_max = 1;
    CHECK(cli::run(c, log) == cli::kAssertion);
    const auto r = nlohmann::json::parse(slurp(tmp.path / "results.json"));
    CHECK(r["any_unreliable"] == true);
    CHECK(r["rows"].back()["unreliable"] == true);
    CHECK(r["exit_code"] == 4);
    CHECK(slurp(tmp.path / "sweep.csv").rfind("epsilon,E_eps,E_qc,abs_err,n_max,tail_mass\n", 0) == 0);
    CHECK(fs::exists(tmp.path / "sweep.plot"));
}

TEST_CASE("validation failures exit with code 2 and still write results") {
    TempDir tmp;
    write(tmp.path / "bad.json", R"({"version": 1, "family": "Nelson"})");
    cli::RunConfig c;
    c.command = "qc-min";
    c.model = "bad.json";
    c.model_path = tmp.path / "bad.json";
    c.output_dir = tmp.path / "out";
    std::ostringstream log;
    CHECK(cli::run(c, log) == cli::kValidation);
    const auto r = nlohmann::json::parse(slurp(tmp.path / "out" / "results.json"));
    CHECK(r["exit_code"] == 2);
    CHECK(r.contains("error"));
    CHECK_FALSE(log.str().empty());
}

TEST_CASE("non-convergence exits with code 3") {
    TempDir tmp;
    std::ostringstream log;
    auto c = config_for("qc-min", "inst_b.json", tmp.path);
    c.max_iter = 1;
    CHECK(cli::run(c, log) == cli::kNonConvergence);
}

TEST_CASE("convexity and measures commands") {
    TempDir tmp;
    std::ostringstream log;
    auto c = config_for("convexity", "polaron_1d.json", tmp.path / "conv");
    c.n_draws = 20;
    CHECK(cli::run(c, log) == cli::kOk);
    auto m = config_for("measures-check", "inst_a.json", tmp.path / "meas");
    m.n_samples = 20;
    CHECK(cli::run(m, log) == cli::kOk);
    const auto r = nlohmann::json::parse(slurp(tmp.path / "meas" / "results.json"));
    CHECK(r["concentration"].size() == 9);
    CHECK(r["witnesses"].empty());
}

TEST_CASE("repeated in-process runs give identical bytes") {
    TempDir tmp;
    std::ostringstream log;
    for (const char* cmd : {"qc-min", "pekar"}) {
        auto c1 = config_for(cmd, "inst_b.json", tmp.path / "a");
        auto c2 = config_for(cmd, "inst_b.json", tmp.path / "b");
        REQUIRE(cli::run(c1, log) == cli::kOk);
        REQUIRE(cli::run(c2, log) == cli::kOk);
        CHECK(slurp(tmp.path / "a" / "results.json") == slurp(tmp.path / "b" / "results.json"));
        CHECK(slurp(tmp.path / "a" / "trace.csv") == slurp(tmp.path / "b" / "trace.csv"));
    }
}

TEST_CASE("command-line front end") {
    TempDir tmp;
    const std::string exe = QCL_CLI_PATH;
    const std::string cfg = (kData / "configs" / "qc_min_inst_b.cfg").string();
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " > /dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(status(exe + " qc-min --config " + cfg + " --out " + (tmp.path / "ok").string()) == 0);
    CHECK(fs::exists(tmp.path / "ok" / "results.json"));
    CHECK(status(exe + " solve --config " + cfg) == 2);
    CHECK(status(exe + " pekar --config " + cfg + " --out " + (tmp.path / "x").string()) == 2);
    CHECK(status(exe + " qc-min --config " + (tmp.path / "none.cfg").string()) == 2);
    CHECK(status(exe + " qc-min --config " + cfg + " --threads 0") == 2);

    CHECK(status(exe + " qc-min --config " + cfg + " --seed 9 --threads 1 --out " + (tmp.path / "s").string()) == 0);
    const auto r = nlohmann::json::parse(slurp(tmp.path / "s" / "results.json"));
    CHECK(r["seed"] == 9);
}
