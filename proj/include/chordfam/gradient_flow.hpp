#pragma once

#include <vector>

#include "chordfam/chord.hpp"
#include "chordfam/system.hpp"
#include "chordfam/types.hpp"

namespace chordfam {

/// Even C^1 bump beta_R(s): zero far out, a plateau around s = 0 whose
/// height is min(R, 1) and whose width grows with R once R >= 1.  The ramps
/// are cubic smoothsteps over intervals of width 2, so |beta'| never
/// exceeds 3/4 of the plateau height.
class CutoffProfile {
public:
    explicit CutoffProfile(double height);

    double height() const { return height_; }
    /// Plateau value, min(height, 1).
    double plateau() const { return height_ < 1.0 ? height_ : 1.0; }
    /// Plateau half-width: beta is constant on [-plateau_radius, plateau_radius].
    double plateau_radius() const { return height_ < 1.0 ? 1.0 : height_; }
    /// Support half-width: beta vanishes for |s| >= support_radius.
    double support_radius() const { return plateau_radius() + 2.0; }

    double operator()(double s) const;

    /// Cubic smoothstep: 0 for s <= -1, 1 for s >= 1, C^1 across both knots.
    static double smoothstep(double s);

private:
    double height_;
};

/// Discrete flow variable: a polygonal arc with endpoints meant to ride the
/// two boundary planes, plus the period variable sigma.
struct DiscreteArc {
    std::vector<Vec> nodes;  ///< N + 1 points of R^{2n}
    double sigma = 0.0;
};

DiscreteArc arc_from_chord(const Chord& chord);

/// Action of the arc: same quadrature as for chords.
double discrete_action(const SystemDescriptor& sys, const DiscreteArc& arc, double mu);

/// Gradient of discrete_action in the weighted metric
///   <a, b> = sum_i c_i a_i . b_i + a_sigma b_sigma,
/// with trapezoid weights c_i = 1/N (halved at the ends).  Endpoint
/// components are projected onto their plane's tangent space, so descent
/// keeps the boundary condition exactly.  The returned norm is the metric
/// norm of the gradient.
struct ArcGradient {
    std::vector<Vec> nodes;
    double sigma = 0.0;
    double norm = 0.0;
};

ArcGradient discrete_gradient(const SystemDescriptor& sys, const DiscreteArc& arc, double mu);

/// max node distance plus the sigma gap; the arc-space counterpart of the
/// chord surrogate metric.
double arc_distance(const DiscreteArc& a, const DiscreteArc& b);

/// Parameter schedule mu(s) = mu0 + beta(s) (mu1 - mu0).
struct MuSchedule {
    double mu0 = 0.0;
    double mu1 = 0.0;
    CutoffProfile beta{1.0};

    double mu_at(double s) const { return mu0 + beta(s) * (mu1 - mu0); }
};

/// Stepping direction for descend().  Raw follows the negative gradient
/// exactly.  Every chord is a saddle of the discretized action (the
/// quadratic part has eigenvalues of both signs at all resolutions), so the
/// raw flow can only diverge from one; it is kept for identity and
/// monotonicity checks over short horizons.  Stabilized reverses the
/// direction on the Hessian's negative eigenspace, which turns
/// nondegenerate critical points into attractors while keeping the step
/// norm equal to the gradient norm, so the energy bookkeeping is the same.
enum class DescentMode { Raw, Stabilized };

struct DescentOptions {
    double s_start = 0.0;
    double s_end = 0.0;
    double ds_init = 1e-3;
    double ds_min = 1e-10;
    double ds_max = 5e-2;
    /// Cap on the metric-norm displacement of one step.
    double move_cap = 5e-2;
    double grad_tol = 1e-8;
    double sigma_floor = 1e-4;
    double blowup = 1e8;
    long max_steps = 2000000;
    int snapshot_stride = 20;
    DescentMode mode = DescentMode::Raw;
    /// Accepted steps between refreshes of the Hessian eigenframe
    /// (Stabilized mode only).
    int hessian_stride = 25;
};

enum class DescentOutcome { Converged, ReachedEnd, SigmaFloor, Diverged };

const char* descent_outcome_name(DescentOutcome o);

struct DescentSnapshot {
    double s = 0.0;
    double mu = 0.0;
    double sigma = 0.0;
    double action = 0.0;
    double grad_norm = 0.0;
    double energy = 0.0;  ///< cumulative integral of |grad|^2
    double dist_from_start = 0.0;
};

struct DescentRun {
    DescentOutcome outcome = DescentOutcome::ReachedEnd;
    DiscreteArc final_arc;
    double final_s = 0.0;
    double energy = 0.0;
    double sigma_max = 0.0;   ///< largest sigma the flow visited
    double dhdmu_max = 0.0;   ///< largest |dH/dmu| seen along visited nodes
    std::vector<DescentSnapshot> snapshots;

    /// Rethrows failure outcomes as the matching error type.
    void raise_if_failed() const;
};

/// Explicit negative-gradient descent of the action under the moving
/// parameter schedule, from s_start to s_end.  Steps adapt to the gradient
/// size; on plateaus (beta locally constant) a step that raises the action
/// is retried at half size, so the action decreases monotonically wherever
/// the parameter stands still.
DescentRun descend(const SystemDescriptor& sys, const DiscreteArc& start,
                   const MuSchedule& schedule, const DescentOptions& opts = {});

struct StretchOptions {
    std::vector<double> heights;  ///< cutoff heights R to sweep
    double lead_in = 0.5;         ///< flow starts at -(support_radius + lead_in)
    double escape_radius = 0.5;   ///< arc-distance ball around the seed
    /// Stabilized by default: the sweep wants the flow parked on the moving
    /// critical point, not the raw saddle runaway.
    DescentOptions descent{.mode = DescentMode::Stabilized};
};

struct StretchRow {
    double height = 0.0;
    DescentOutcome outcome = DescentOutcome::ReachedEnd;
    double mu_reached = 0.0;       ///< schedule value at the end state
    double final_sigma = 0.0;
    double final_action = 0.0;
    double final_grad_norm = 0.0;
    double plateau_grad_min = 0.0;  ///< min gradient norm while beta sat on its plateau
    double dist_from_seed = 0.0;    ///< at the end state
    double max_dist_plateau = 0.0;  ///< max excursion during the plateau
    bool escaped = false;           ///< excursion left the escape ball
    double energy = 0.0;
    double sigma_max = 0.0;
    double dhdmu_max = 0.0;
};

struct StretchReport {
    double mu0 = 0.0, mu1 = 0.0;
    std::vector<StretchRow> rows;
};

/// Sweeps cutoff heights: for each R the seed chord is flowed from far
/// before the bump to the plateau midpoint s = 0, recording where the
/// descent parks relative to the seed.
StretchReport stretching_experiment(const SystemDescriptor& sys, const Chord& seed, double mu1,
                                    const StretchOptions& opts);

}  // namespace chordfam
