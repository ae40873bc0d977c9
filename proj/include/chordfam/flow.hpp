#pragma once

#include <utility>
#include <vector>

#include "chordfam/system.hpp"
#include "chordfam/types.hpp"

namespace chordfam {

struct IntegrateOptions {
    double rtol = 1e-10;
    double atol = 1e-12;
    double h_init = 0.0;  ///< 0 picks a starting step automatically
    double h_max = 0.0;   ///< 0 means the full interval
    long max_steps = 2000000;
    /// When nonempty, states are emitted exactly at these times (ascending,
    /// inside [0, t_final]) through the dense interpolant; otherwise every
    /// accepted step is emitted.
    std::vector<double> sample_times;
};

struct FlowResult {
    std::vector<std::pair<double, PhaseState>> states;
    Mat monodromy;  ///< d phi^t / d x at t_final; empty unless variational
    bool has_monodromy = false;
    long steps_accepted = 0;
    long steps_rejected = 0;
    /// max |H(x(t)) - H(x(0))| over accepted steps
    double max_h_drift = 0.0;
};

/// Flow of X_H from x0 over [0, t_final] with an embedded 5(4) pair and
/// fourth-order dense output.  Throws StepSizeUnderflow, NonFinite, or
/// CollisionFloor (when the system carries a separation floor).
FlowResult integrate(const SystemDescriptor& sys, const Vec& x0, double mu, double t_final,
                     const IntegrateOptions& opts = {});

/// Same flow with the variational equations M' = DX_H(x) M, M(0) = I carried
/// along; the 2n x 2n solution at t_final lands in FlowResult::monodromy.
FlowResult integrate_with_variational(const SystemDescriptor& sys, const Vec& x0, double mu,
                                      double t_final, const IntegrateOptions& opts = {});

}  // namespace chordfam
