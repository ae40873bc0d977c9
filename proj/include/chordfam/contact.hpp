#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "chordfam/system.hpp"
#include "chordfam/types.hpp"

namespace chordfam {

/// How to scatter candidate points before projecting them onto {H = 0}.
struct SamplerConfig {
    Vec box_lo;  ///< lower corner of the phase-space box (size 2n)
    Vec box_hi;  ///< upper corner
    /// Axis-aligned grid resolution per coordinate; 0 disables the grid.
    /// Odd values place points on the coordinate hyperplanes, which is where
    /// the Standard primitive tends to fail.
    int grid_per_dim = 0;
    int random_samples = 0;
    std::uint64_t seed = 1234567;
    int max_project_iter = 25;
    double project_tol = 1e-10;
    /// Samples the projection must survive (energy surface may miss part of
    /// the box).  A run that keeps fewer throws SamplingError.
    int min_accepted = 8;
    /// Optional region filter applied after projection.
    std::function<bool(const Vec&)> keep;
};

struct ContactReport {
    double mu = 0.0;
    int requested = 0;       ///< candidates before projection
    int sample_count = 0;    ///< accepted on-surface samples
    double f_min = 0.0;
    double f_max = 0.0;
    /// max(f_max, 1/f_min) clamped to [1, inf); +inf when violations exist.
    double kappa = 0.0;
    std::vector<PhaseState> violations;  ///< samples with f <= 0

    bool passed() const { return violations.empty(); }
};

/// Samples the energy surface {H(., mu) = 0} inside the configured box and
/// evaluates f = dH(Y) at every accepted sample.  Candidates are projected
/// onto the surface by damped Newton along grad H.
ContactReport contact_check(const SystemDescriptor& sys, double mu, const SamplerConfig& cfg);

/// contact_check at each mu; throws ContactFailed if any report has
/// violations (the report list, complete up to the failure, rides along in
/// the exception message).
std::vector<ContactReport> contact_sweep(const SystemDescriptor& sys,
                                         const std::vector<double>& mu_values,
                                         const SamplerConfig& cfg);

}  // namespace chordfam
