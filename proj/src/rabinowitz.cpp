#include "chordfam/rabinowitz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace chordfam {

Mat lambda_matrix(LambdaChoice lc, Eigen::Index n) {
    Mat l = Mat::Zero(2 * n, 2 * n);
    if (lc == LambdaChoice::Standard) {
        l.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    } else {
        l.bottomLeftCorner(n, n) = 0.5 * Mat::Identity(n, n);
        l.topRightCorner(n, n) = -0.5 * Mat::Identity(n, n);
    }
    return l;
}

namespace {

/// Midpoint polygon sum of the primitive term and mean level over every
/// `stride`-th node; `stride` must divide the segment count.
std::pair<double, double> midpoint_sums(const SystemDescriptor& sys,
                                        const std::vector<PhaseState>& nodes, double mu,
                                        std::size_t stride) {
    const std::size_t nseg = (nodes.size() - 1) / stride;
    double lam = 0.0, hmean = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        const Vec& a = nodes[i * stride].z;
        const Vec& b = nodes[(i + 1) * stride].z;
        const Vec mid = 0.5 * (a + b);
        lam += lambda_value(sys.lambda_choice, mid, b - a);
        hmean += sys.h(mid, mu);
    }
    return {lam, hmean / double(nseg)};
}

}  // namespace

double action(const SystemDescriptor& sys, const std::vector<PhaseState>& nodes, double sigma,
              double mu) {
    if (nodes.size() < 2) throw InvalidArgument("action: need at least two nodes");
    const std::size_t nseg = nodes.size() - 1;
    const auto [lam1, h1] = midpoint_sums(sys, nodes, mu, 1);
    if (nseg % 2 != 0 || nseg < 4) return lam1 - sigma * h1;
    // Both sums converge at second order in the node spacing, so pairing the
    // full-resolution polygon with its stride-two subsample cancels the
    // leading error term.
    const auto [lam2, h2] = midpoint_sums(sys, nodes, mu, 2);
    const double lam = (4.0 * lam1 - lam2) / 3.0;
    const double hmean = (4.0 * h1 - h2) / 3.0;
    return lam - sigma * hmean;
}

double action(const SystemDescriptor& sys, const Chord& chord) {
    return action(sys, chord.samples, chord.tau, chord.mu);
}

ActionBoundsRow action_bounds_check(const SystemDescriptor& sys, const Chord& chord,
                                    double kappa, double rel_slack) {
    if (!(kappa >= 1.0)) throw InvalidArgument("action_bounds_check: kappa must be >= 1");
    ActionBoundsRow row;
    row.mu = chord.mu;
    row.tau = chord.tau;
    row.action = action(sys, chord);
    row.lower = chord.tau / kappa;
    row.upper = kappa * chord.tau;
    const double slack = rel_slack * std::max(1.0, std::abs(row.action));
    row.ok = row.action >= row.lower - slack && row.action <= row.upper + slack;
    return row;
}

MuDerivativeReport action_mu_derivative(const SystemDescriptor& sys, const Chord& chord,
                                        double dmu, const ShootOptions& opts) {
    if (!(dmu > 0.0)) throw InvalidArgument("action_mu_derivative: dmu must be positive");
    const std::size_t nseg = chord.samples.size() - 1;
    double dh = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        const Vec mid = 0.5 * (chord.samples[i].z + chord.samples[i + 1].z);
        dh += sys.dh_dmu(mid, chord.mu);
    }
    MuDerivativeReport rep;
    rep.analytic = -chord.tau * dh / double(nseg);

    // Difference quotient across the family: re-solve the boundary problem
    // at the shifted parameters, seeded from this chord.
    const double mu_p = chord.mu + dmu, mu_m = chord.mu - dmu;
    if (!sys.mu_range.contains(mu_p) || !sys.mu_range.contains(mu_m))
        throw InvalidArgument("action_mu_derivative: dmu leaves mu_range");
    const Chord cp = shoot(sys, mu_p, chord.u, chord.tau, opts);
    const Chord cm = shoot(sys, mu_m, chord.u, chord.tau, opts);
    rep.finite_difference = (action(sys, cp) - action(sys, cm)) / (2.0 * dmu);
    rep.rel_gap = std::abs(rep.analytic - rep.finite_difference) /
                  std::max({1e-12, std::abs(rep.analytic), std::abs(rep.finite_difference)});
    return rep;
}

EnvelopeReport family_action_envelope(const std::vector<double>& mus,
                                      const std::vector<double>& actions,
                                      const std::vector<double>& taus, double kappa,
                                      double inflation) {
    if (mus.size() != actions.size() || mus.size() != taus.size())
        throw InvalidArgument("family_action_envelope: column lengths differ");
    if (mus.empty()) throw InvalidArgument("family_action_envelope: empty family");
    if (!(kappa >= 1.0)) throw InvalidArgument("family_action_envelope: kappa must be >= 1");

    EnvelopeReport rep;
    rep.kappa_used = kappa * (1.0 + inflation);
    const double k2 = rep.kappa_used * rep.kappa_used;
    const double log_k2 = 2.0 * std::log(rep.kappa_used);
    const double act_a = actions.front(), tau_a = taus.front();

    rep.all_ok = act_a > 0.0 && tau_a > 0.0;
    rep.worst_log_slack = std::numeric_limits<double>::infinity();
    double dist = 0.0;
    auto clamp_exp = [](double e) { return std::exp(std::min(e, 700.0)); };

    for (std::size_t i = 0; i < mus.size(); ++i) {
        if (i > 0) dist += std::abs(mus[i] - mus[i - 1]);
        EnvelopeRow row;
        row.mu = mus[i];
        row.action = actions[i];
        row.tau = taus[i];
        row.mu_distance = dist;
        const double bound = k2 * dist;
        row.act_lo = act_a * clamp_exp(-bound);
        row.act_hi = act_a * clamp_exp(bound);
        row.tau_lo = tau_a * clamp_exp(-bound) / k2;
        row.tau_hi = tau_a * k2 * clamp_exp(bound);

        if (row.action > 0.0 && row.tau > 0.0 && act_a > 0.0 && tau_a > 0.0) {
            const double la = std::abs(std::log(row.action / act_a));
            const double lt = std::log(row.tau / tau_a);
            const double slack = std::min({bound - la, bound + log_k2 - lt,
                                           lt + bound + log_k2});
            rep.worst_log_slack = std::min(rep.worst_log_slack, slack);
            row.ok = slack >= -1e-12;
        } else {
            row.ok = false;
            rep.worst_log_slack = -std::numeric_limits<double>::infinity();
        }
        rep.all_ok = rep.all_ok && row.ok;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace chordfam
