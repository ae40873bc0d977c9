#pragma once

#include <vector>

#include "chordfam/chord.hpp"
#include "chordfam/system.hpp"
#include "chordfam/types.hpp"

namespace chordfam {

/// Matrix of the primitive as a bilinear map: lambda(x)(v) = x^T L v.
/// For both choices L - L^T equals the omega matrix (d lambda = omega).
Mat lambda_matrix(LambdaChoice lc, Eigen::Index n);

/// Action of a discrete arc: midpoint-rule integral of the primitive along
/// the nodes minus sigma times the mean of H over the midpoints.  For an
/// exact chord (sigma = tau) this converges to the period as the sampling is
/// refined, because the H term vanishes on the energy surface.
double action(const SystemDescriptor& sys, const std::vector<PhaseState>& nodes, double sigma,
              double mu);
double action(const SystemDescriptor& sys, const Chord& chord);

struct ActionBoundsRow {
    double mu = 0.0;
    double tau = 0.0;
    double action = 0.0;
    double lower = 0.0;  ///< tau / kappa
    double upper = 0.0;  ///< kappa * tau
    bool ok = false;
};

/// Checks tau/kappa <= action <= kappa*tau for one chord, with kappa taken
/// from a contact report over the region the chord lives in.
ActionBoundsRow action_bounds_check(const SystemDescriptor& sys, const Chord& chord,
                                    double kappa, double rel_slack = 1e-9);

struct MuDerivativeReport {
    double analytic = 0.0;           ///< -tau * mean of dH/dmu over the chord
    double finite_difference = 0.0;  ///< re-shot action difference quotient
    double rel_gap = 0.0;
};

MuDerivativeReport action_mu_derivative(const SystemDescriptor& sys, const Chord& chord,
                                        double dmu = 1e-5, const ShootOptions& opts = {});

struct EnvelopeRow {
    double mu = 0.0, action = 0.0, tau = 0.0;
    double mu_distance = 0.0;  ///< accumulated |d mu| from the anchor row
    double act_lo = 0.0, act_hi = 0.0;  ///< exp-clamped action envelope
    double tau_lo = 0.0, tau_hi = 0.0;  ///< period corollary window
    bool ok = false;
};

struct EnvelopeReport {
    double kappa_used = 0.0;  ///< inflated kappa the bounds were run with
    std::vector<EnvelopeRow> rows;
    bool all_ok = false;
    /// Smallest log-space slack over all rows and bounds; negative = breach.
    double worst_log_slack = 0.0;
};

/// Growth envelope along one family, anchored at the first row: the action
/// may drift at most exponentially in kappa^2 times the accumulated mu
/// variation, and the period stays inside the corresponding corollary
/// window [e^{-k^2 D} tau_a / k^2, k^2 e^{k^2 D} tau_a].  All comparisons
/// run in log space so steep families cannot overflow.
EnvelopeReport family_action_envelope(const std::vector<double>& mus,
                                      const std::vector<double>& actions,
                                      const std::vector<double>& taus, double kappa,
                                      double inflation = 0.05);

}  // namespace chordfam
