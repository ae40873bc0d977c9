#pragma once

#include <utility>
#include <vector>

#include "chordfam/flow.hpp"
#include "chordfam/system.hpp"
#include "chordfam/types.hpp"

namespace chordfam {

/// A solved boundary-value arc: starts on lagrangians[0], ends on
/// lagrangians[1], lies on {H(., mu) = 0}.  Samples are uniform in the
/// normalized parameter t/tau, so samples.front() is the start point and
/// samples.back() the end point.
struct Chord {
    double mu = 0.0;
    double tau = 0.0;  ///< flow time from start to end
    Vec u;             ///< tangent coordinates of the start on lagrangians[0]
    std::vector<PhaseState> samples;
    double residual_norm = 0.0;  ///< shooting residual (sup norm) at acceptance
    double boundary_gap = 0.0;   ///< max endpoint distance from its plane
};

struct ShootOptions {
    double f_tol = 1e-10;
    int max_iter = 50;
    double tau_floor = 1e-4;  ///< Newton landing at tau <= this throws TauCollapsed
    int n_samples = 256;      ///< stored samples per chord (n_samples + 1 points)
    IntegrateOptions integ;
};

/// Residual and derivatives of the shooting map at (u, tau; mu):
///   F = (plane coordinates of phi^tau(x(u)) on L1, H(x(u), mu)).
struct ShootEval {
    Vec f;           ///< size n + 1
    Mat j;           ///< (n+1) x (n+1), derivative in (u, tau)
    Vec f_mu;        ///< size n + 1, derivative in mu (empty unless requested)
    Vec start_state;  ///< x(u) on lagrangians[0]
    Vec end_state;    ///< phi^tau(x(u))
    Mat monodromy;   ///< d phi^tau / dx at x(u)
    double jac_det = 0.0;
};

ShootEval eval_shoot_map(const SystemDescriptor& sys, double mu, const Vec& u, double tau,
                         const IntegrateOptions& integ, bool with_mu_column = false);

/// Newton on (u, tau) at fixed mu from the initial guess.  Throws
/// NoConvergence or TauCollapsed; flow-engine errors pass through.
Chord shoot(const SystemDescriptor& sys, double mu, const Vec& u0, double tau0,
            const ShootOptions& opts = {});

/// Verifies a chord record by re-running Newton from its own (u, tau);
/// returns the refreshed chord and the number of steps the repair took.
std::pair<Chord, int> reverify(const SystemDescriptor& sys, const Chord& chord,
                               const ShootOptions& opts = {});

struct NondegOptions {
    double sigma_threshold = 1e-6;
    IntegrateOptions integ;
};

struct NondegReport {
    /// Smallest singular value of the column-normalized transversality matrix
    /// [M B0' | B1'] built on the energy-reduced boundary tangents.  Pinned
    /// to 1 when n = 1, where those tangents are zero-dimensional.
    double sigma_min = 1.0;
    double shooting_jac_det = 0.0;
    bool degenerate = false;
};

/// Linearized transversality of the chord's boundary condition inside the
/// energy surface.  Throws DimensionError when a boundary plane is tangent
/// to the surface (grad H falls into the plane's normal frame).
NondegReport nondegeneracy(const SystemDescriptor& sys, const Chord& chord,
                           const NondegOptions& opts = {});

/// Same report computed from an existing shooting evaluation, saving the
/// re-integration when a monodromy is already in hand.
NondegReport nondegeneracy_from_eval(const SystemDescriptor& sys, double mu,
                                     const ShootEval& ev, double sigma_threshold = 1e-6);

/// The chord as a timed arc, t in [0, tau].
std::vector<std::pair<double, PhaseState>> reparametrize_to_period(const Chord& chord);

/// Moves u along `dir` (1-D Newton) until H(embed(u), mu) = 0.  Used to put
/// scan grids onto the energy surface.
Vec project_to_energy(const SystemDescriptor& sys, double mu, const Vec& u, const Vec& dir,
                      int max_iter = 50, double tol = 1e-12);

struct ScanHit {
    Vec u;
    double tau = 0.0;
    double gap = 0.0;  ///< plane distance at the near-crossing
};

/// Integrates from each grid start (row of u_grid, already on the surface)
/// and records local minima of the distance to lagrangians[1]; hits are
/// Newton seeds, best first.
std::vector<ScanHit> scan_crossings(const SystemDescriptor& sys, double mu, const Mat& u_grid,
                                    double t_max, const IntegrateOptions& integ = {},
                                    double gap_cut = 0.25);

}  // namespace chordfam
