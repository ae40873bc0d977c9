#include <CLI11.hpp>

#include "chordfam/cli_commands.hpp"

int main(int argc, char** argv) {
    CLI::App app{"chord families on energy hypersurfaces: solve, continue, diagnose"};
    app.require_subcommand(1);

    chordfam::CliArgs args;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "JSON run configuration")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("--seed-file", args.seed_path, "chord record overriding find_chord")
            ->check(CLI::ExistingFile);
        sub->add_option("--out", args.out_dir, "output directory override");
        sub->add_flag("--verbose", args.verbose, "extra per-item logging");
    };

    add_common(app.add_subcommand("contact-check",
                                  "sample the energy surface and test the contact condition"));
    add_common(app.add_subcommand("find-chord", "solve one chord from a guess or a scan"));
    add_common(app.add_subcommand("continue",
                                  "trace the chord family, detect events, probe limits"));
    add_common(app.add_subcommand("gradient-flow",
                                  "descend the action under a moving-parameter schedule"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        // CLI11 returns 0 for --help; anything else is a usage error.
        return code == 0 ? 0 : 2;
    }

    args.command = app.get_subcommands().front()->get_name();
    return chordfam::run_command(args);
}
