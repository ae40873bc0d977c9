#pragma once

#include <string>

namespace chordfam {

struct CliArgs {
    std::string command;  ///< contact-check | find-chord | continue | gradient-flow
    std::string config_path;
    std::string seed_path;  ///< optional chord record overriding find_chord
    std::string out_dir;    ///< optional override of the configured output dir
    bool verbose = false;
};

/// Runs one subcommand.  Exit codes:
///   0  computation finished and every check it ran passed
///   1  computation finished but a monitored property failed
///      (contact violations, no event to probe, parked or escaped flow)
///   2  usage or configuration error
///   3  solver failure (no convergence, collision, step underflow, ...)
int run_command(const CliArgs& args);

}  // namespace chordfam
