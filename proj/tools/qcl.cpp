#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "qcl/cli.hpp"
#include "qcl/parallel.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Quasi-classical particle-field energies and their Fock-space quantizations"};
    std::string command;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    int threads = 0;

    app.add_option("command", command, "qc-min | pekar | equivalence | fock-sweep | convexity | measures-check")
        ->required()
        ->check(CLI::IsMember(qcl::cli::commands()));
    app.add_option("--config", config_path, "key = value run configuration")->required()->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", out_dir, "output directory (overrides output_dir)");
    auto* seed_opt = app.add_option("--seed", seed, "base seed (overrides seed)");
    auto* threads_opt = app.add_option("--threads", threads, "worker cap (overrides threads and QCL_THREADS)")
                            ->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qcl::cli::kValidation;
    }

    qcl::cli::RunConfig config;
    try {
        config = qcl::cli::parse_config(config_path);
    } catch (const qcl::Error& e) {
        std::cerr << "qcl: " << e.what() << '\n';
        return qcl::cli::kValidation;
    }
    if (!config.command.empty() && config.command != command) {
        std::cerr << "qcl: config is for '" << config.command << "', not '" << command << "'\n";
        return qcl::cli::kValidation;
    }
    config.command = command;
    if (*out_opt) config.output_dir = out_dir;
    if (*seed_opt) config.seed = seed;
    if (*threads_opt) config.threads = threads;
    if (config.threads > 0) qcl::set_thread_count(config.threads);

    return qcl::cli::run(config, std::cerr);
}
