#pragma once

#include <optional>
#include <string>
#include <vector>

#include "chordfam/chord.hpp"
#include "chordfam/contact.hpp"
#include "chordfam/system.hpp"
#include "chordfam/types.hpp"

namespace chordfam {

enum class EventKind { Fold, Degeneracy, ContactViolation, CollisionStop, RangeEnd, Stall };

const char* event_kind_name(EventKind kind);
EventKind event_kind_from_name(const std::string& name);

/// One family member, light enough to persist: the full chord is recoverable
/// by shooting from (u, tau) at mu.
struct AtlasRow {
    double mu = 0.0;
    Vec u;
    double tau = 0.0;
    double action = 0.0;
    double sigma_min = 0.0;
    double shooting_jac_det = 0.0;
};

struct FamilyEvent {
    EventKind kind = EventKind::RangeEnd;
    double mu_estimate = 0.0;
    int row_lo = -1;  ///< last row on the incoming side
    int row_hi = -1;  ///< first row past the event (may equal row_lo at stops)
    /// Folds only: the same bracket also carries a degeneracy signature
    /// (jacobian determinant sign change or a sigma_min dip).
    bool coincident_degeneracy = false;
    std::string note;
};

struct FamilyAtlas {
    std::string system_id;
    Eigen::Index n = 0;
    std::vector<AtlasRow> rows;
    std::vector<FamilyEvent> events;
};

struct ContinuationOptions {
    double ds_init = 1e-3;
    double ds_min = 1e-7;
    double ds_max = 1e-2;
    int max_steps = 2000;
    int direction = +1;  ///< sign of d mu / ds at the seed
    /// Tracking window; empty (lo == hi) means the system's mu_range.
    Interval mu_window{0.0, 0.0};
    double corrector_tol = 1e-10;
    int corrector_max_iter = 10;
    double sigma_threshold = 1e-6;
    ShootOptions shoot;
    bool refine_events = true;
    double event_mu_tol = 1e-10;
    /// Every this many rows, run contact_check at the row's mu and stop with
    /// a contact_violation event on failure; 0 disables.
    int contact_stride = 0;
    SamplerConfig contact_sampler;
};

/// Pseudo-arclength tracking of the chord family through (u, tau, mu) from
/// a solved seed.  Rows are appended until the window, a collision, a stall,
/// or the step budget ends the branch; fold and degeneracy events are then
/// detected from the rows and refined on the curve.
FamilyAtlas continue_family(const SystemDescriptor& sys, const Chord& seed,
                            const ContinuationOptions& opts = {});

/// Scans rows for parameter-direction reversals and degeneracy signatures,
/// refines each bracketed event by bisection along the curve, and rewrites
/// atlas.events (terminal events already present are kept).
void detect_events(const SystemDescriptor& sys, FamilyAtlas& atlas,
                   const ContinuationOptions& opts = {});

/// max_i |a_i - b_i| + |tau_a - tau_b| over aligned normalized-time samples;
/// the working metric on chord space.
double surrogate_distance(const Chord& a, const Chord& b);

struct OmegaProbeOptions {
    int depth = 8;          ///< refinement levels past the first probe
    double delta = 1e-2;    ///< initial parameter gap
    double ratio = 0.5;     ///< geometric gap shrink per level
    /// Extrapolate in sqrt(gap) (fold scaling) instead of the gap itself;
    /// unset picks by event kind (sqrt for folds, degeneracies, stalls).
    std::optional<bool> sqrt_gap;
    ShootOptions shoot;
};

/// Limit diagnostics for one family event: chords at a geometric parameter
/// ladder approaching mu_estimate, their mutual distances (contraction test),
/// and Richardson extrapolation of the chord data and action to the limit.
struct OmegaProbe {
    double mu_limit = 0.0;
    bool sqrt_gap = true;
    std::vector<double> mus;
    std::vector<Chord> chords;
    std::vector<double> distances;    ///< consecutive surrogate distances
    std::vector<double> contraction;  ///< distances[k] / distances[k+1]
    std::vector<double> actions;
    double action_limit = 0.0;   ///< Richardson diagonal
    double action_spread = 0.0;  ///< last two diagonal entries' gap
    std::vector<double> jac_dets;
    Chord limit_chord;          ///< extrapolated (u, tau, samples) at mu_limit
    NondegReport limit_report;  ///< evaluated at the extrapolated chord
    bool limit_degenerate = false;
};

OmegaProbe omega_probe(const SystemDescriptor& sys, const FamilyAtlas& atlas,
                       const FamilyEvent& event, const OmegaProbeOptions& opts = {});

struct CensusOptions {
    double delta = 1e-3;        ///< parameter offset on each side of the limit
    double radius = 1e-2;       ///< neighborhood radius in the surrogate metric
    double distinct_tol = 1e-6; ///< chords closer than this count once
    int u_grid = 5;             ///< starts per u coordinate
    double u_span = 0.02;       ///< half-width of the start box around the limit
    int tau_grid = 7;
    double tau_span = 0.1;
    ShootOptions shoot;
};

/// Multi-start chord count near the limit chord on both sides of the event
/// parameter: solved chords within `radius` of the limit, deduplicated.
struct CensusResult {
    double mu_below = 0.0, mu_above = 0.0;
    std::vector<Chord> below, above;
    int count_below = 0, count_above = 0;
};

CensusResult two_sided_census(const SystemDescriptor& sys, const OmegaProbe& probe,
                              const CensusOptions& opts = {});

}  // namespace chordfam
