#include "chordfam/continuation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "chordfam/rabinowitz.hpp"

namespace chordfam {

const char* event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::Fold: return "fold";
        case EventKind::Degeneracy: return "degeneracy";
        case EventKind::ContactViolation: return "contact_violation";
        case EventKind::CollisionStop: return "collision_stop";
        case EventKind::RangeEnd: return "range_end";
        case EventKind::Stall: return "stall";
    }
    return "unknown";
}

EventKind event_kind_from_name(const std::string& name) {
    if (name == "fold") return EventKind::Fold;
    if (name == "degeneracy") return EventKind::Degeneracy;
    if (name == "contact_violation") return EventKind::ContactViolation;
    if (name == "collision_stop") return EventKind::CollisionStop;
    if (name == "range_end") return EventKind::RangeEnd;
    if (name == "stall") return EventKind::Stall;
    throw InvalidArgument("unknown event kind '" + name + "'");
}

namespace {

/// A point of the solution curve in (u, tau, mu) with its linearization.
struct CurvePoint {
    Vec zeta;  ///< (u, tau, mu), size n + 2
    ShootEval ev;
    Vec tangent;  ///< unit kernel of [J | F_mu], oriented along the branch
};

Vec pack(const Vec& u, double tau, double mu) {
    Vec z(u.size() + 2);
    z << u, tau, mu;
    return z;
}

/// Unit tangent of the curve at a converged point: kernel of the bordered
/// Jacobian [dF/d(u,tau) | dF/dmu].
Vec curve_tangent(const ShootEval& ev, Eigen::Index n) {
    Mat a(n + 1, n + 2);
    a.leftCols(n + 1) = ev.j;
    a.col(n + 1) = ev.f_mu;
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeFullV);
    const Vec sv = svd.singularValues();
    if (sv[n] <= 1e-12 * std::max(1.0, sv[0]))
        throw SeedDegenerate("curve tangent undefined: bordered Jacobian is rank-deficient");
    return svd.matrixV().col(n + 1);
}

struct CorrectorResult {
    bool ok = false;
    int iters = 0;
    CurvePoint point;
};

/// Newton on [F(zeta); (zeta - zeta_pred) . t_hat] from the predicted point.
CorrectorResult correct(const SystemDescriptor& sys, const Vec& zeta_pred, const Vec& t_hat,
                        const ContinuationOptions& opts) {
    const Eigen::Index n = sys.n;
    Vec zeta = zeta_pred;
    CorrectorResult out;
    for (int it = 0; it <= opts.corrector_max_iter; ++it) {
        const Vec u = zeta.head(n);
        const double tau = zeta[n], mu = zeta[n + 1];
        if (!(tau > opts.shoot.tau_floor)) return out;
        if (!sys.mu_range.contains(mu)) return out;
        ShootEval ev = eval_shoot_map(sys, mu, u, tau, opts.shoot.integ, true);
        const double res = std::max(ev.f.lpNorm<Eigen::Infinity>(),
                                    std::abs((zeta - zeta_pred).dot(t_hat)));
        if (res < opts.corrector_tol) {
            out.ok = true;
            out.iters = it;
            out.point.zeta = zeta;
            out.point.ev = std::move(ev);
            return out;
        }
        Mat a(n + 2, n + 2);
        a.topLeftCorner(n + 1, n + 1) = ev.j;
        a.topRightCorner(n + 1, 1) = ev.f_mu;
        a.row(n + 1) = t_hat.transpose();
        Vec rhs(n + 2);
        rhs.head(n + 1) = -ev.f;
        rhs[n + 1] = -(zeta - zeta_pred).dot(t_hat);
        const Vec delta = a.partialPivLu().solve(rhs);
        if (!delta.allFinite()) return out;
        zeta += delta;
    }
    return out;
}

AtlasRow make_row(const SystemDescriptor& sys, const CurvePoint& pt,
                  const ContinuationOptions& opts) {
    const Eigen::Index n = sys.n;
    AtlasRow row;
    row.u = pt.zeta.head(n);
    row.tau = pt.zeta[n];
    row.mu = pt.zeta[n + 1];

    IntegrateOptions io = opts.shoot.integ;
    io.sample_times.resize(static_cast<std::size_t>(opts.shoot.n_samples) + 1);
    for (int i = 0; i <= opts.shoot.n_samples; ++i)
        io.sample_times[static_cast<std::size_t>(i)] =
            row.tau * double(i) / double(opts.shoot.n_samples);
    FlowResult fr = integrate(sys, sys.lagrangians[0].embed(row.u), row.mu, row.tau, io);
    std::vector<PhaseState> nodes;
    nodes.reserve(fr.states.size());
    for (auto& [t, st] : fr.states) nodes.push_back(std::move(st));
    row.action = action(sys, nodes, row.tau, row.mu);

    const NondegReport nd = nondegeneracy_from_eval(sys, row.mu, pt.ev, opts.sigma_threshold);
    row.sigma_min = nd.sigma_min;
    row.shooting_jac_det = nd.shooting_jac_det;
    return row;
}

int sgn(double x) { return (x > 0.0) - (x < 0.0); }

/// Steps along the curve from `from` by ds and corrects; tangent at the new
/// point is oriented to keep moving the same way.
bool curve_step(const SystemDescriptor& sys, const CurvePoint& from, double ds,
                const ContinuationOptions& opts, CurvePoint& out) {
    const Vec pred = from.zeta + ds * from.tangent;
    CorrectorResult cr;
    try {
        cr = correct(sys, pred, from.tangent, opts);
    } catch (const Error&) {
        return false;
    }
    if (!cr.ok) return false;
    out = std::move(cr.point);
    try {
        out.tangent = curve_tangent(out.ev, sys.n);
    } catch (const SeedDegenerate&) {
        return false;
    }
    if (out.tangent.dot(from.tangent) < 0.0) out.tangent = -out.tangent;
    return true;
}

/// Bisection along the curve between two oriented points until `value`
/// changes sign inside a bracket of curve length below `arc_tol`.  Returns
/// the best interior point found.
template <typename ValueFn>
CurvePoint refine_on_curve(const SystemDescriptor& sys, CurvePoint a, CurvePoint b,
                           const ContinuationOptions& opts, ValueFn value, double value_stop,
                           double arc_tol) {
    double va = value(a);
    CurvePoint best = std::abs(va) < std::abs(value(b)) ? a : b;
    for (int it = 0; it < 200; ++it) {
        const double arc = (b.zeta - a.zeta).norm();
        if (arc < arc_tol) break;
        CurvePoint mid;
        if (!curve_step(sys, a, 0.5 * arc, opts, mid)) {
            // Step failure on a refined bracket: fall back to the endpoint.
            break;
        }
        const double vm = value(mid);
        if (std::abs(vm) < std::abs(value(best))) best = mid;
        if (std::abs(vm) <= value_stop) return mid;
        if (sgn(vm) == sgn(va)) {
            a = std::move(mid);
            va = vm;
        } else {
            b = std::move(mid);
        }
    }
    return best;
}

CurvePoint point_at_row(const SystemDescriptor& sys, const FamilyAtlas& atlas, int idx,
                        const ContinuationOptions& opts, const Vec& travel) {
    const AtlasRow& row = atlas.rows[static_cast<std::size_t>(idx)];
    CurvePoint pt;
    pt.zeta = pack(row.u, row.tau, row.mu);
    pt.ev = eval_shoot_map(sys, row.mu, row.u, row.tau, opts.shoot.integ, true);
    pt.tangent = curve_tangent(pt.ev, sys.n);
    if (pt.tangent.dot(travel) < 0.0) pt.tangent = -pt.tangent;
    return pt;
}

}  // namespace

FamilyAtlas continue_family(const SystemDescriptor& sys, const Chord& seed,
                            const ContinuationOptions& opts) {
    const Eigen::Index n = sys.n;
    Interval window = opts.mu_window;
    if (window.lo == window.hi) window = sys.mu_range;
    if (!sys.mu_range.contains(window.lo) || !sys.mu_range.contains(window.hi))
        throw InvalidArgument("continue_family: mu_window leaves the system's mu_range");
    if (opts.direction != 1 && opts.direction != -1)
        throw InvalidArgument("continue_family: direction must be +1 or -1");

    FamilyAtlas atlas;
    atlas.system_id = sys.id;
    atlas.n = n;

    // Re-solve the seed so the first row sits on the curve to corrector
    // accuracy regardless of how the record was produced.
    const Chord seed_chord = shoot(sys, seed.mu, seed.u, seed.tau, opts.shoot);

    CurvePoint cur;
    cur.zeta = pack(seed_chord.u, seed_chord.tau, seed_chord.mu);
    cur.ev = eval_shoot_map(sys, seed_chord.mu, seed_chord.u, seed_chord.tau, opts.shoot.integ,
                            true);
    cur.tangent = curve_tangent(cur.ev, n);
    if (std::abs(cur.tangent[n + 1]) < 1e-12)
        throw SeedDegenerate("continue_family: seed sits at a parameter fold");
    if (sgn(cur.tangent[n + 1]) != opts.direction) cur.tangent = -cur.tangent;

    atlas.rows.push_back(make_row(sys, cur, opts));

    double ds = std::clamp(opts.ds_init, opts.ds_min, opts.ds_max);

    for (int step = 0; step < opts.max_steps; ++step) {
        CurvePoint next;
        bool ok = false;
        bool collision_seen = false;
        int iters = 0;
        // Shrink until the corrector lands or the step floor is hit.
        while (true) {
            const Vec pred = cur.zeta + ds * cur.tangent;
            CorrectorResult cr;
            bool threw = false;
            try {
                cr = correct(sys, pred, cur.tangent, opts);
            } catch (const CollisionFloor&) {
                collision_seen = true;
                threw = true;
            } catch (const Error&) {
                threw = true;
            }
            if (!threw && cr.ok) {
                next.zeta = cr.point.zeta;
                next.ev = std::move(cr.point.ev);
                iters = cr.iters;
                ok = true;
                break;
            }
            ds *= 0.5;
            if (ds < opts.ds_min) break;
        }
        if (!ok) {
            FamilyEvent ev;
            ev.kind = collision_seen ? EventKind::CollisionStop : EventKind::Stall;
            ev.mu_estimate = atlas.rows.back().mu;
            ev.row_lo = ev.row_hi = int(atlas.rows.size()) - 1;
            ev.note = collision_seen ? "trajectory under the separation floor"
                                     : "corrector failed at the minimum step";
            atlas.events.push_back(ev);
            break;
        }

        try {
            next.tangent = curve_tangent(next.ev, n);
        } catch (const SeedDegenerate&) {
            FamilyEvent ev;
            ev.kind = EventKind::Stall;
            ev.mu_estimate = atlas.rows.back().mu;
            ev.row_lo = ev.row_hi = int(atlas.rows.size()) - 1;
            ev.note = "curve tangent lost";
            atlas.events.push_back(ev);
            break;
        }
        if (next.tangent.dot(cur.tangent) < 0.0) next.tangent = -next.tangent;

        cur = std::move(next);
        atlas.rows.push_back(make_row(sys, cur, opts));
        const int last = int(atlas.rows.size()) - 1;
        const double mu_here = atlas.rows.back().mu;

        if (mu_here < window.lo || mu_here > window.hi) {
            FamilyEvent ev;
            ev.kind = EventKind::RangeEnd;
            ev.mu_estimate = mu_here < window.lo ? window.lo : window.hi;
            ev.row_lo = last - 1;
            ev.row_hi = last;
            atlas.events.push_back(ev);
            break;
        }
        if (opts.contact_stride > 0 && last % opts.contact_stride == 0) {
            const ContactReport rep = contact_check(sys, mu_here, opts.contact_sampler);
            if (!rep.passed()) {
                FamilyEvent ev;
                ev.kind = EventKind::ContactViolation;
                ev.mu_estimate = mu_here;
                ev.row_lo = last - 1;
                ev.row_hi = last;
                ev.note = "f_min=" + std::to_string(rep.f_min);
                atlas.events.push_back(ev);
                break;
            }
        }

        if (iters <= 3)
            ds = std::min(ds * 1.5, opts.ds_max);
        else if (iters > 6)
            ds = std::max(ds * 0.5, opts.ds_min);
    }

    detect_events(sys, atlas, opts);
    return atlas;
}

void detect_events(const SystemDescriptor& sys, FamilyAtlas& atlas,
                   const ContinuationOptions& opts) {
    std::vector<FamilyEvent> kept;
    for (const FamilyEvent& ev : atlas.events)
        if (ev.kind != EventKind::Fold && ev.kind != EventKind::Degeneracy)
            kept.push_back(ev);
    atlas.events = std::move(kept);
    const auto& rows = atlas.rows;
    if (rows.size() < 3) return;

    std::vector<FamilyEvent> found;

    // Parameter-direction reversals.
    for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
        const double d0 = rows[k].mu - rows[k - 1].mu;
        const double d1 = rows[k + 1].mu - rows[k].mu;
        if (d0 == 0.0 || d1 == 0.0 || sgn(d0) == sgn(d1)) continue;
        FamilyEvent ev;
        ev.kind = EventKind::Fold;
        ev.row_lo = int(k) - 1;
        ev.row_hi = int(k) + 1;
        ev.mu_estimate = rows[k].mu;  // refined below when possible
        const bool det_flip = sgn(rows[k - 1].shooting_jac_det) !=
                              sgn(rows[k + 1].shooting_jac_det);
        const double sig_dip = std::min({rows[k - 1].sigma_min, rows[k].sigma_min,
                                         rows[k + 1].sigma_min});
        ev.coincident_degeneracy = det_flip || sig_dip < opts.sigma_threshold;
        found.push_back(ev);
    }

    // Transversality losses between consecutive rows.
    for (std::size_t k = 1; k < rows.size(); ++k) {
        const bool det_flip =
            sgn(rows[k - 1].shooting_jac_det) != sgn(rows[k].shooting_jac_det) &&
            rows[k - 1].shooting_jac_det != 0.0;
        const bool sig_dip = rows[k].sigma_min < opts.sigma_threshold &&
                             rows[k - 1].sigma_min >= opts.sigma_threshold;
        if (!det_flip && !sig_dip) continue;
        FamilyEvent ev;
        ev.kind = EventKind::Degeneracy;
        ev.row_lo = int(k) - 1;
        ev.row_hi = int(k);
        ev.mu_estimate = 0.5 * (rows[k - 1].mu + rows[k].mu);
        ev.note = det_flip ? "jacobian determinant sign change" : "sigma_min dip";
        found.push_back(ev);
    }

    if (opts.refine_events) {
        for (FamilyEvent& ev : found) {
            try {
                const Vec travel =
                    pack(rows[size_t(ev.row_hi)].u, rows[size_t(ev.row_hi)].tau,
                         rows[size_t(ev.row_hi)].mu) -
                    pack(rows[size_t(ev.row_lo)].u, rows[size_t(ev.row_lo)].tau,
                         rows[size_t(ev.row_lo)].mu);
                CurvePoint a = point_at_row(sys, atlas, ev.row_lo, opts, travel);
                CurvePoint b = point_at_row(sys, atlas, ev.row_hi, opts, travel);
                const Eigen::Index n = sys.n;
                if (ev.kind == EventKind::Fold) {
                    auto t_mu = [n](const CurvePoint& p) { return p.tangent[n + 1]; };
                    if (sgn(t_mu(a)) == sgn(t_mu(b))) {
                        // One endpoint tangent points past the fold already;
                        // try the middle row as the opposite bracket end.
                        CurvePoint m = point_at_row(sys, atlas, (ev.row_lo + ev.row_hi) / 2,
                                                    opts, travel);
                        if (sgn(t_mu(m)) != sgn(t_mu(a)))
                            b = std::move(m);
                        else if (sgn(t_mu(m)) != sgn(t_mu(b)))
                            a = std::move(m);
                    }
                    if (sgn(t_mu(a)) != sgn(t_mu(b))) {
                        const CurvePoint at =
                            refine_on_curve(sys, a, b, opts, t_mu, 1e-9, 1e-12);
                        ev.mu_estimate = at.zeta[n + 1];
                    }
                } else {
                    auto det = [](const CurvePoint& p) { return p.ev.jac_det; };
                    if (sgn(det(a)) != sgn(det(b))) {
                        const double scale = std::max(std::abs(det(a)), std::abs(det(b)));
                        const CurvePoint at = refine_on_curve(sys, a, b, opts, det,
                                                              1e-12 * scale, 1e-10);
                        ev.mu_estimate = at.zeta[n + 1];
                    }
                }
            } catch (const Error&) {
                // Refinement is best-effort; the bracket estimate stands.
            }
        }
    }

    // Folds whose refined parameter matches a refined degeneracy are marked
    // coincident even when the row-level signature was too coarse to see it.
    for (FamilyEvent& ev : found) {
        if (ev.kind != EventKind::Fold || ev.coincident_degeneracy) continue;
        for (const FamilyEvent& other : found)
            if (other.kind == EventKind::Degeneracy &&
                std::abs(other.mu_estimate - ev.mu_estimate) <=
                    1e-6 * (1.0 + std::abs(ev.mu_estimate)))
                ev.coincident_degeneracy = true;
    }

    atlas.events.insert(atlas.events.end(), found.begin(), found.end());
    std::sort(atlas.events.begin(), atlas.events.end(),
              [](const FamilyEvent& x, const FamilyEvent& y) { return x.row_lo < y.row_lo; });
}

double surrogate_distance(const Chord& a, const Chord& b) {
    if (a.samples.size() != b.samples.size())
        throw SamplingError("surrogate_distance: sample counts differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.samples.size(); ++i)
        d = std::max(d, (a.samples[i].z - b.samples[i].z).norm());
    return d + std::abs(a.tau - b.tau);
}

namespace {

/// Neville table for values on the geometric ladder theta_k = theta_0 rho^k,
/// eliminating one power of theta per column; returns the diagonal.
std::vector<double> richardson_diagonal(const std::vector<double>& vals, double rho) {
    const std::size_t m = vals.size();
    std::vector<std::vector<double>> t(m);
    std::vector<double> diag(m);
    for (std::size_t i = 0; i < m; ++i) {
        t[i].resize(i + 1);
        t[i][0] = vals[i];
        double rk = 1.0;
        for (std::size_t k = 1; k <= i; ++k) {
            rk *= rho;
            t[i][k] = (t[i][k - 1] - rk * t[i - 1][k - 1]) / (1.0 - rk);
        }
        diag[i] = t[i][i];
    }
    return diag;
}

}  // namespace

OmegaProbe omega_probe(const SystemDescriptor& sys, const FamilyAtlas& atlas,
                       const FamilyEvent& event, const OmegaProbeOptions& opts) {
    if (atlas.rows.empty()) throw InvalidArgument("omega_probe: empty atlas");
    if (opts.depth < 2) throw InvalidArgument("omega_probe: depth must be at least 2");
    if (!(opts.ratio > 0.0 && opts.ratio < 1.0))
        throw InvalidArgument("omega_probe: ratio must lie in (0, 1)");

    OmegaProbe probe;
    probe.mu_limit = event.mu_estimate;
    probe.sqrt_gap = opts.sqrt_gap.value_or(event.kind != EventKind::RangeEnd);

    const int anchor = std::clamp(event.row_lo, 0, int(atlas.rows.size()) - 1);
    const double side = atlas.rows[size_t(anchor)].mu <= probe.mu_limit ? 1.0 : -1.0;

    // Seed the coarsest probe from the approach-side row nearest its mu.
    const double mu0 = probe.mu_limit - side * opts.delta;
    int seed_idx = anchor;
    for (int k = 0; k <= anchor; ++k)
        if (std::abs(atlas.rows[size_t(k)].mu - mu0) <
            std::abs(atlas.rows[size_t(seed_idx)].mu - mu0))
            seed_idx = k;

    const double rho = probe.sqrt_gap ? std::sqrt(opts.ratio) : opts.ratio;
    auto theta = [&](double mu) {
        const double gap = std::max(0.0, side * (probe.mu_limit - mu));
        return probe.sqrt_gap ? std::sqrt(gap) : gap;
    };

    Vec u_prev, u_prev2;
    double tau_prev = 0.0, tau_prev2 = 0.0, th_prev = 0.0, th_prev2 = 0.0;
    for (int k = 0; k <= opts.depth; ++k) {
        const double mu_k = probe.mu_limit - side * opts.delta * std::pow(opts.ratio, k);
        Vec u_guess;
        double tau_guess;
        if (k == 0) {
            u_guess = atlas.rows[size_t(seed_idx)].u;
            tau_guess = atlas.rows[size_t(seed_idx)].tau;
        } else if (k == 1) {
            u_guess = u_prev;
            tau_guess = tau_prev;
        } else {
            // Linear prediction in the gap coordinate keeps Newton on the
            // incoming branch even where the curve turns square-root steep.
            const double th = theta(mu_k);
            const double w = (th - th_prev) / (th_prev - th_prev2);
            u_guess = u_prev + w * (u_prev - u_prev2);
            tau_guess = tau_prev + w * (tau_prev - tau_prev2);
        }
        Chord c = shoot(sys, mu_k, u_guess, tau_guess, opts.shoot);
        ShootEval ev = eval_shoot_map(sys, mu_k, c.u, c.tau, opts.shoot.integ);
        probe.mus.push_back(mu_k);
        probe.actions.push_back(action(sys, c));
        probe.jac_dets.push_back(ev.jac_det);
        probe.chords.push_back(std::move(c));

        u_prev2 = u_prev;
        tau_prev2 = tau_prev;
        th_prev2 = th_prev;
        u_prev = probe.chords.back().u;
        tau_prev = probe.chords.back().tau;
        th_prev = theta(mu_k);
    }

    for (int k = 0; k < opts.depth; ++k)
        probe.distances.push_back(
            surrogate_distance(probe.chords[size_t(k)], probe.chords[size_t(k) + 1]));
    for (int k = 0; k + 1 < opts.depth; ++k)
        probe.contraction.push_back(probe.distances[size_t(k)] /
                                    std::max(probe.distances[size_t(k) + 1], 1e-300));

    const auto act_diag = richardson_diagonal(probe.actions, rho);
    probe.action_limit = act_diag.back();
    probe.action_spread = std::abs(act_diag.back() - act_diag[act_diag.size() - 2]);

    // Extrapolate the chord itself coordinate by coordinate.
    const Eigen::Index n = sys.n;
    const std::size_t n_nodes = probe.chords.front().samples.size();
    Chord limit;
    limit.mu = probe.mu_limit;
    {
        std::vector<double> vals(probe.chords.size());
        Vec u_lim(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < probe.chords.size(); ++k)
                vals[k] = probe.chords[k].u[i];
            u_lim[i] = richardson_diagonal(vals, rho).back();
        }
        for (std::size_t k = 0; k < probe.chords.size(); ++k)
            vals[k] = probe.chords[k].tau;
        limit.u = u_lim;
        limit.tau = richardson_diagonal(vals, rho).back();
        limit.samples.reserve(n_nodes);
        Vec node(2 * n);
        for (std::size_t j = 0; j < n_nodes; ++j) {
            for (Eigen::Index i = 0; i < 2 * n; ++i) {
                for (std::size_t k = 0; k < probe.chords.size(); ++k)
                    vals[k] = probe.chords[k].samples[j].z[i];
                node[i] = richardson_diagonal(vals, rho).back();
            }
            limit.samples.emplace_back(node);
        }
    }

    ShootEval lev = eval_shoot_map(sys, probe.mu_limit, limit.u, limit.tau, opts.shoot.integ);
    limit.residual_norm = lev.f.lpNorm<Eigen::Infinity>();
    limit.boundary_gap = std::max(sys.lagrangians[0].gap(lev.start_state),
                                  sys.lagrangians[1].gap(lev.end_state));
    probe.limit_chord = std::move(limit);
    probe.limit_report = nondegeneracy_from_eval(sys, probe.mu_limit, lev);

    if (n == 1) {
        double det_scale = 0.0;
        for (double d : probe.jac_dets) det_scale = std::max(det_scale, std::abs(d));
        probe.limit_degenerate = std::abs(lev.jac_det) < 0.1 * det_scale;
    } else {
        probe.limit_degenerate = probe.limit_report.degenerate;
    }
    return probe;
}

CensusResult two_sided_census(const SystemDescriptor& sys, const OmegaProbe& probe,
                              const CensusOptions& opts) {
    const Eigen::Index n = sys.n;
    const Chord& limit = probe.limit_chord;
    if (limit.samples.empty()) throw InvalidArgument("two_sided_census: probe has no limit");

    CensusResult res;
    res.mu_below = probe.mu_limit - opts.delta;
    res.mu_above = probe.mu_limit + opts.delta;

    // Start box around the limit chord, cartesian in u plus a tau ladder.
    std::vector<Vec> u_starts;
    {
        std::vector<int> idx(static_cast<std::size_t>(n), 0);
        const long total = static_cast<long>(std::pow(double(opts.u_grid), double(n)));
        for (long c = 0; c < total; ++c) {
            Vec u = limit.u;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double t = opts.u_grid == 1
                                     ? 0.5
                                     : double(idx[size_t(i)]) / double(opts.u_grid - 1);
                u[i] += (2.0 * t - 1.0) * opts.u_span;
            }
            u_starts.push_back(u);
            for (Eigen::Index i = 0; i < n; ++i) {
                auto& kk = idx[size_t(i)];
                if (++kk < opts.u_grid) break;
                kk = 0;
            }
        }
    }

    auto harvest = [&](double mu, std::vector<Chord>& sink) {
        if (!sys.mu_range.contains(mu)) return;
        for (const Vec& u0 : u_starts) {
            for (int j = 0; j < opts.tau_grid; ++j) {
                const double t = opts.tau_grid == 1 ? 0.5 : double(j) / double(opts.tau_grid - 1);
                const double tau0 = limit.tau + (2.0 * t - 1.0) * opts.tau_span;
                if (!(tau0 > opts.shoot.tau_floor)) continue;
                Chord c;
                try {
                    c = shoot(sys, mu, u0, tau0, opts.shoot);
                } catch (const Error&) {
                    continue;
                }
                if (surrogate_distance(c, limit) > opts.radius) continue;
                bool dup = false;
                for (const Chord& seen : sink)
                    if (surrogate_distance(c, seen) < opts.distinct_tol) {
                        dup = true;
                        break;
                    }
                if (!dup) sink.push_back(std::move(c));
            }
        }
    };

    harvest(res.mu_below, res.below);
    harvest(res.mu_above, res.above);
    res.count_below = int(res.below.size());
    res.count_above = int(res.above.size());
    return res;
}

}  // namespace chordfam
