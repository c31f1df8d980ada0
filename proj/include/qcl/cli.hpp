#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qcl/types.hpp"

namespace qcl::cli {

class ConfigError : public Error {
public:
    using Error::Error;
};

enum ExitCode : int { kOk = 0, kValidation = 2, kNonConvergence = 3, kAssertion = 4 };

inline const std::vector<std::string>& commands() {
    static const std::vector<std::string> names{"qc-min",     "pekar",     "equivalence",
                                                "fock-sweep", "convexity", "measures-check"};
    return names;
}

struct RunConfig {
    std::string command;
    std::string model;                  // as written in the config
    std::filesystem::path model_path;   // resolved against the config directory
    std::filesystem::path output_dir = "out";
    double tol_e = 1e-10;
    double tol_r = 1e-7;
    double tol_equiv = 1e-6;
    std::uint64_t seed = 1;
    int n_starts = 4;
    std::vector<double> eps_list{0.5, 0.25, 0.125, 0.0625};
    int n_max = 0;  // 0 selects the shell rule
    int max_iter = 200;
    int n_samples = 200;
    int n_draws = 100;
    int threads = 0;  // 0 keeps QCL_THREADS / hardware default
};

/// Parses a key = value file ('#' starts a comment). Throws ConfigError.
RunConfig parse_config(const std::filesystem::path& path);
/// Checks the invariants of a config (existing model file, positive tolerances,
/// strictly decreasing eps_list in (0, 1], ...). Throws ConfigError.
void validate_config(const RunConfig& config);

/// Executes one command, writing results.json and the command's CSV/plot files
/// into config.output_dir. Returns the process exit code.
int run(const RunConfig& config, std::ostream& log);

/// Formats a double with 17 significant digits.
std::string format_number(double x);

}  // namespace qcl::cli
