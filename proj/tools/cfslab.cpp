#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "cfslab/cli.hpp"

int main(int argc, char** argv) {
    namespace cli = cfslab::cli;
    CLI::App app{"Numerical toolkit for causal fermion systems, finite spectral triples and trace dynamics"};
    app.set_version_flag("--version", cli::kVersion);
    app.require_subcommand(1);

    cli::RunOptions opts;
    std::string config, out;
    std::uint64_t seed = 0;
    double tol = 0.0;
    app.add_option("--config", config, "JSON config file")->required()->check(CLI::ExistingFile);
    auto* out_opt = app.add_option("--out", out, "output directory (default $CFSLAB_OUT or ./cfslab-out)");
    auto* seed_opt = app.add_option("--seed", seed, "RNG seed, overrides the config");
    app.add_option("--threads", opts.threads, "OpenMP threads (0 = runtime default)");
    auto* tol_opt = app.add_option("--tol", tol, "tolerance override");
    app.fallthrough();

    const std::map<std::string, std::string> about{
        {"classify", "causal classes of every pair in a measure"},
        {"action", "causal action and constraint integrals of a measure"},
        {"minimize", "minimize the causal action over discrete measures"},
        {"spectral", "spectral action sweep, cutoff moments, grading check"},
        {"tracedyn", "integrate a trace Lagrangian"},
        {"clifford", "gamma-matrix identities in signatures (1,3), (3,1), (3,3)"},
        {"sea", "local correlation operators of a regularized 1+1D Dirac sea"}};
    for (const auto& name : cli::commands()) {
        app.add_subcommand(name, about.at(name))->callback([&opts, name] { opts.command = name; });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : cli::config_error;
    }
    opts.config_path = config;
    if (*out_opt) opts.out_dir = out;
    if (*seed_opt) opts.seed = seed;
    if (*tol_opt) opts.tol = tol;
    return cli::run(opts, std::cerr);
}
