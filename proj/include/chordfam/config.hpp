#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chordfam/contact.hpp"
#include "chordfam/continuation.hpp"
#include "chordfam/gradient_flow.hpp"
#include "chordfam/system.hpp"

namespace chordfam {

/// Grid scan for chord seeds on the start plane.
struct ScanSpec {
    Vec u_lo, u_hi;
    std::vector<int> grid;  ///< points per u coordinate
    double t_max = 10.0;
    /// Direction in u-space along which starts are slid onto {H = 0};
    /// empty means the last u coordinate.
    Vec energy_dir;
    int max_hits = 8;
};

struct FindChordSpec {
    double mu = 0.0;
    std::optional<Vec> u;
    std::optional<double> tau;
    std::optional<ScanSpec> scan;
};

struct ContactSpec {
    SamplerConfig sampler;
    std::vector<double> mu_values;
};

struct ProbeSpec {
    OmegaProbeOptions opts;
    /// Index into the atlas event list; -1 picks the first fold, degeneracy,
    /// or stall, falling back to the first event of any kind.
    int event_index = -1;
    std::optional<CensusOptions> census;
};

struct GradientFlowSpec {
    std::optional<double> mu0;  ///< defaults to the seed chord's mu
    double mu1 = 0.0;
    std::vector<double> heights{1.0};
    double lead_in = 0.5;
    double escape_radius = 0.5;
    bool sweep = true;  ///< false runs a single descent with heights[0]
    /// Stabilized by default: the command reports where the flow parks, so
    /// it wants critical points attracting.
    DescentOptions descent{.mode = DescentMode::Stabilized};
};

struct RunConfig {
    std::string system_name;
    SystemDescriptor system;
    ShootOptions shoot;
    std::optional<ContactSpec> contact;
    std::optional<FindChordSpec> find_chord;
    bool has_continuation = false;
    ContinuationOptions continuation;
    std::optional<ProbeSpec> probe;
    std::optional<GradientFlowSpec> gradient;
    std::string out_dir = "out";
    std::string prefix = "family";
};

/// Parses and validates a JSON run configuration.  Unknown keys anywhere in
/// the document are rejected with the offending path in the message; all
/// failures throw InvalidArgument.
RunConfig load_config(const std::string& path);

}  // namespace chordfam
