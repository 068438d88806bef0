#include <weightopt/cli.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"Principal eigenvalue of the Neumann Laplacian with indefinite weight"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool quiet = false;
    app.add_option("--config", config_path, "Run configuration (JSON)")->required()->check(CLI::ExistingFile);
    auto* seed_opt = app.add_option("--seed", seed, "Override the configured seed");
    app.add_option("--out", out_dir, "Output directory (overrides the config)");
    app.add_flag("--quiet", quiet, "Suppress the summary line");
    app.fallthrough();

    app.add_subcommand("solve", "Principal eigenpair of the configured weight");
    app.add_subcommand("optimize", "Minimise lambda1 over the rearrangement class");
    app.add_subcommand("rearrange", "Profile, monotone rearrangement and oscillating ladder");
    app.add_subcommand("simulate", "Diffusive logistic equation");
    app.add_subcommand("verify", "Randomised invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : weightopt::exit_code_for(weightopt::ErrorCode::ParseError);
    }

    try {
        const auto command = weightopt::parse_command(app.get_subcommands().front()->get_name());
        const weightopt::RunConfig cfg = weightopt::parse_config(
            weightopt::io::read_file(config_path), std::filesystem::path(config_path).parent_path());
        weightopt::ExecOptions opts;
        opts.out_dir = out_dir;
        opts.quiet = quiet;
        if (*seed_opt) opts.seed = seed;
        return weightopt::execute(cfg, *command, opts);
    } catch (const weightopt::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return weightopt::exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
