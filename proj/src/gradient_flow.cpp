#include "chordfam/gradient_flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

#include "chordfam/rabinowitz.hpp"

namespace chordfam {

CutoffProfile::CutoffProfile(double height) : height_(height) {
    if (!(height >= 0.0) || !std::isfinite(height))
        throw InvalidArgument("CutoffProfile: height must be finite and nonnegative");
}

double CutoffProfile::smoothstep(double s) {
    if (s <= -1.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double u = 0.5 * (s + 1.0);
    return u * u * (3.0 - 2.0 * u);
}

double CutoffProfile::operator()(double s) const {
    const double a = std::abs(s);
    if (height_ < 1.0) return height_ * smoothstep(2.0 - a);
    return smoothstep(1.0 + height_ - a);
}

DiscreteArc arc_from_chord(const Chord& chord) {
    DiscreteArc arc;
    arc.nodes.reserve(chord.samples.size());
    for (const PhaseState& st : chord.samples) arc.nodes.push_back(st.z);
    arc.sigma = chord.tau;
    return arc;
}

double discrete_action(const SystemDescriptor& sys, const DiscreteArc& arc, double mu) {
    if (arc.nodes.size() < 2) throw InvalidArgument("discrete_action: need at least two nodes");
    const std::size_t nseg = arc.nodes.size() - 1;
    double lam = 0.0, hmean = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        const Vec mid = 0.5 * (arc.nodes[i] + arc.nodes[i + 1]);
        lam += lambda_value(sys.lambda_choice, mid, arc.nodes[i + 1] - arc.nodes[i]);
        hmean += sys.h(mid, mu);
    }
    return lam - arc.sigma * hmean / double(nseg);
}

ArcGradient discrete_gradient(const SystemDescriptor& sys, const DiscreteArc& arc, double mu) {
    const std::size_t m = arc.nodes.size();
    if (m < 2) throw InvalidArgument("discrete_gradient: need at least two nodes");
    const std::size_t nseg = m - 1;
    const double dt = 1.0 / double(nseg);
    const Mat lam = lambda_matrix(sys.lambda_choice, sys.n);
    const Mat lam_t = lam.transpose();

    ArcGradient g;
    g.nodes.assign(m, Vec::Zero(2 * sys.n));

    double hsum = 0.0;
    for (std::size_t i = 0; i < nseg; ++i) {
        const Vec mid = 0.5 * (arc.nodes[i] + arc.nodes[i + 1]);
        const Vec diff = arc.nodes[i + 1] - arc.nodes[i];
        // d/dw of mid^T Lam diff: the midpoint contributes Lam diff / 2 to
        // both nodes, the difference contributes -Lam^T mid and +Lam^T mid.
        const Vec half_ld = 0.5 * (lam * diff);
        const Vec ltm = lam_t * mid;
        const Vec hg = (arc.sigma * dt * 0.5) * sys.grad_h(mid, mu);
        g.nodes[i] += half_ld - ltm - hg;
        g.nodes[i + 1] += half_ld + ltm - hg;
        hsum += sys.h(mid, mu);
    }
    g.sigma = -hsum * dt;

    // Euclidean partials -> metric gradient, then keep endpoints tangent to
    // their planes.
    for (std::size_t i = 0; i < m; ++i) {
        const double c = (i == 0 || i == nseg) ? 0.5 * dt : dt;
        g.nodes[i] /= c;
    }
    const Mat& b0 = sys.lagrangians[0].tangent();
    const Mat& b1 = sys.lagrangians[1].tangent();
    g.nodes.front() = b0 * (b0.transpose() * g.nodes.front());
    g.nodes.back() = b1 * (b1.transpose() * g.nodes.back());

    double nrm2 = g.sigma * g.sigma;
    for (std::size_t i = 0; i < m; ++i) {
        const double c = (i == 0 || i == nseg) ? 0.5 * dt : dt;
        nrm2 += c * g.nodes[i].squaredNorm();
    }
    g.norm = std::sqrt(nrm2);
    return g;
}

double arc_distance(const DiscreteArc& a, const DiscreteArc& b) {
    if (a.nodes.size() != b.nodes.size())
        throw InvalidArgument("arc_distance: node counts differ");
    double d = 0.0;
    for (std::size_t i = 0; i < a.nodes.size(); ++i)
        d = std::max(d, (a.nodes[i] - b.nodes[i]).norm());
    return d + std::abs(a.sigma - b.sigma);
}

namespace {

/// Eigenframe of the action Hessian restricted to the admissible subspace
/// (interior nodes free, endpoint nodes confined to their plane tangents).
/// Columns of `basis` are orthonormal in the descent metric, so the
/// sign-flipped direction below has exactly the gradient's metric norm.
struct SignFrame {
    Mat basis;             ///< full-coordinate embedding, F x R
    Mat vecs;              ///< Hessian eigenvectors in basis coordinates
    Eigen::VectorXd sign;  ///< +-1 per eigenvector
    Eigen::VectorXd w;     ///< metric weights on full coordinates
    double lam_abs_max = 0.0;
};

Vec flatten(const std::vector<Vec>& nodes, double sigma) {
    const std::size_t m = nodes.size(), d = std::size_t(nodes[0].size());
    Vec out(m * d + 1);
    for (std::size_t i = 0; i < m; ++i) out.segment(i * d, d) = nodes[i];
    out[m * d] = sigma;
    return out;
}

void unflatten(const Vec& flat, std::vector<Vec>& nodes, double& sigma) {
    const std::size_t m = nodes.size(), d = std::size_t(nodes[0].size());
    for (std::size_t i = 0; i < m; ++i) nodes[i] = flat.segment(i * d, d);
    sigma = flat[m * d];
}

SignFrame build_sign_frame(const SystemDescriptor& sys, const DiscreteArc& y, double mu) {
    const std::size_t m = y.nodes.size(), d = std::size_t(2 * sys.n);
    const std::size_t F = m * d + 1;
    const double dt = 1.0 / double(m - 1);

    SignFrame fr;
    fr.w = Eigen::VectorXd::Ones(F);
    for (std::size_t i = 0; i < m; ++i)
        fr.w.segment(i * d, d).setConstant((i == 0 || i == m - 1) ? 0.5 * dt : dt);

    const std::size_t R = d * (m - 2) + 2 * std::size_t(sys.n) + 1;
    fr.basis = Mat::Zero(F, R);
    std::size_t col = 0;
    const double c_end = std::sqrt(0.5 * dt), c_int = std::sqrt(dt);
    for (int k = 0; k < sys.n; ++k)
        fr.basis.col(col++).segment(0, d) = sys.lagrangians[0].tangent().col(k) / c_end;
    for (std::size_t i = 1; i + 1 < m; ++i)
        for (std::size_t k = 0; k < d; ++k) fr.basis.col(col++)[i * d + k] = 1.0 / c_int;
    for (int k = 0; k < sys.n; ++k)
        fr.basis.col(col++).segment((m - 1) * d, d) =
            sys.lagrangians[1].tangent().col(k) / c_end;
    fr.basis.col(col)[F - 1] = 1.0;

    // Central differences of the gradient map along each basis direction.
    double scale = std::abs(y.sigma);
    for (const Vec& nz : y.nodes) scale = std::max(scale, nz.lpNorm<Eigen::Infinity>());
    const double h = 1e-5 * (1.0 + scale);
    Mat dg(F, R);
    DiscreteArc probe = y;
    const Vec y_flat = flatten(y.nodes, y.sigma);
    for (std::size_t k = 0; k < R; ++k) {
        const Vec dir = fr.basis.col(k);
        unflatten(y_flat + h * dir, probe.nodes, probe.sigma);
        const ArcGradient gp = discrete_gradient(sys, probe, mu);
        unflatten(y_flat - h * dir, probe.nodes, probe.sigma);
        const ArcGradient gm = discrete_gradient(sys, probe, mu);
        dg.col(k) = (flatten(gp.nodes, gp.sigma) - flatten(gm.nodes, gm.sigma)) / (2.0 * h);
    }
    Mat s = fr.basis.transpose() * fr.w.asDiagonal() * dg;
    s = 0.5 * (s + s.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Mat> es(s);
    fr.vecs = es.eigenvectors();
    fr.lam_abs_max = std::max(std::abs(es.eigenvalues().minCoeff()),
                              std::abs(es.eigenvalues().maxCoeff()));
    fr.sign = Eigen::VectorXd::Ones(R);
    const double floor_ = 1e-12 * std::max(1.0, fr.lam_abs_max);
    for (std::size_t k = 0; k < R; ++k)
        if (es.eigenvalues()[long(k)] < -floor_) fr.sign[long(k)] = -1.0;
    return fr;
}

/// Descent direction -sgn(Hess) grad, written into (d_nodes, d_sigma).
void flip_direction(const SignFrame& fr, const ArcGradient& g, std::vector<Vec>& d_nodes,
                    double& d_sigma) {
    const Vec gf = flatten(g.nodes, g.sigma);
    Vec ghat = fr.basis.transpose() * (fr.w.asDiagonal() * gf);
    Vec ev = fr.vecs.transpose() * ghat;
    ev.array() *= -fr.sign.array();
    const Vec df = fr.basis * (fr.vecs * ev);
    unflatten(df, d_nodes, d_sigma);
}

}  // namespace

const char* descent_outcome_name(DescentOutcome o) {
    switch (o) {
        case DescentOutcome::Converged: return "converged";
        case DescentOutcome::ReachedEnd: return "reached_end";
        case DescentOutcome::SigmaFloor: return "sigma_floor";
        case DescentOutcome::Diverged: return "diverged";
    }
    return "unknown";
}

void DescentRun::raise_if_failed() const {
    if (outcome == DescentOutcome::SigmaFloor)
        throw SigmaFloor("descent: sigma fell to " + std::to_string(final_arc.sigma));
    if (outcome == DescentOutcome::Diverged)
        throw Divergence("descent: arc norm or gradient blew up at s = " +
                         std::to_string(final_s));
}

DescentRun descend(const SystemDescriptor& sys, const DiscreteArc& start,
                   const MuSchedule& schedule, const DescentOptions& opts) {
    if (!(opts.s_end > opts.s_start))
        throw InvalidArgument("descend: s_end must exceed s_start");
    if (start.nodes.size() < 2) throw InvalidArgument("descend: arc has too few nodes");

    DescentRun run;
    DiscreteArc y = start;
    const DiscreteArc y0 = start;
    double s = opts.s_start;
    double ds = std::clamp(opts.ds_init, opts.ds_min, opts.ds_max);

    auto mu_ok = [&](double m) {
        return sys.mu_range.contains(m) ? m
                                        : std::clamp(m, sys.mu_range.lo, sys.mu_range.hi);
    };

    auto blown = [&](const DiscreteArc& arc, double gnorm) {
        if (!std::isfinite(gnorm) || gnorm > opts.blowup) return true;
        for (const Vec& w : arc.nodes)
            if (!w.allFinite() || w.norm() > opts.blowup) return true;
        return !std::isfinite(arc.sigma);
    };

    auto snap = [&](double mu, double act, double gnorm) {
        run.snapshots.push_back({s, mu, y.sigma, act, gnorm, run.energy,
                                 arc_distance(y, y0)});
    };

    const bool stabilized = opts.mode == DescentMode::Stabilized;
    std::optional<SignFrame> frame;
    long frame_age = 0;

    long accepted = 0;
    while (true) {
        const double mu = mu_ok(schedule.mu_at(s));
        const ArcGradient g = discrete_gradient(sys, y, mu);
        const double act = discrete_action(sys, y, mu);
        for (const Vec& w : y.nodes)
            run.dhdmu_max = std::max(run.dhdmu_max, std::abs(sys.dh_dmu(w, mu)));
        run.sigma_max = std::max(run.sigma_max, y.sigma);

        if (accepted % std::max(1, opts.snapshot_stride) == 0) snap(mu, act, g.norm);

        if (blown(y, g.norm)) {
            run.outcome = DescentOutcome::Diverged;
            break;
        }
        if (y.sigma <= opts.sigma_floor) {
            run.outcome = DescentOutcome::SigmaFloor;
            break;
        }
        if (g.norm < opts.grad_tol) {
            run.outcome = DescentOutcome::Converged;
            break;
        }
        if (s >= opts.s_end) {
            run.outcome = DescentOutcome::ReachedEnd;
            break;
        }
        if (accepted >= opts.max_steps) {
            run.outcome = DescentOutcome::ReachedEnd;
            break;
        }

        std::vector<Vec> dir = g.nodes;
        double dir_sigma = g.sigma;
        if (stabilized) {
            if (!frame || accepted - frame_age >= std::max(1, opts.hessian_stride)) {
                frame = build_sign_frame(sys, y, mu);
                frame_age = accepted;
            }
            flip_direction(*frame, g, dir, dir_sigma);
        } else {
            for (Vec& v : dir) v = -v;
            dir_sigma = -dir_sigma;
        }

        // Keep one step's displacement under the move cap; in stabilized
        // mode also under the explicit-step stability limit of the frame's
        // largest curvature.
        double step = std::min(ds, opts.s_end - s);
        if (g.norm * step > opts.move_cap) step = opts.move_cap / g.norm;
        if (stabilized && frame->lam_abs_max > 0.0)
            step = std::min(step, 1.0 / frame->lam_abs_max);
        step = std::max(step, opts.ds_min);

        auto mu_frozen = [&](double step_try) {
            return std::abs(schedule.mu_at(s + step_try) - schedule.mu_at(s)) <=
                   1e-14 * (1.0 + std::abs(mu));
        };
        bool plateau_here = mu_frozen(step);
        DiscreteArc y_new;
        int halvings = 0;
        while (true) {
            y_new = y;
            for (std::size_t i = 0; i < y.nodes.size(); ++i)
                y_new.nodes[i] += step * dir[i];
            y_new.sigma += step * dir_sigma;
            if (!plateau_here) break;
            // Backtracking Lyapunov test: the raw flow lowers the action,
            // the sign-flipped flow lowers the gradient norm.
            bool ok_step;
            if (stabilized) {
                const ArcGradient g_new = discrete_gradient(sys, y_new, mu);
                ok_step = g_new.norm <= g.norm * (1.0 + 1e-9) + 1e-15;
            } else {
                const double act_new = discrete_action(sys, y_new, mu);
                ok_step = act_new <= act + 1e-13 * std::max(1.0, std::abs(act));
            }
            if (ok_step) break;
            step *= 0.5;
            if (step < opts.ds_min || ++halvings > 60) break;
            plateau_here = mu_frozen(step);
        }

        y = std::move(y_new);
        run.energy += step * g.norm * g.norm;
        s += step;
        ++accepted;
        ds = std::min(std::max(step * 1.5, opts.ds_min), opts.ds_max);
    }

    // Final snapshot at the stopping state.
    {
        const double mu = mu_ok(schedule.mu_at(s));
        const ArcGradient g = discrete_gradient(sys, y, mu);
        snap(mu, discrete_action(sys, y, mu), g.norm);
    }
    run.final_arc = std::move(y);
    run.final_s = s;
    return run;
}

StretchReport stretching_experiment(const SystemDescriptor& sys, const Chord& seed, double mu1,
                                    const StretchOptions& opts) {
    if (opts.heights.empty())
        throw InvalidArgument("stretching_experiment: no cutoff heights given");
    StretchReport rep;
    rep.mu0 = seed.mu;
    rep.mu1 = mu1;
    const DiscreteArc seed_arc = arc_from_chord(seed);

    for (double r : opts.heights) {
        MuSchedule sched{seed.mu, mu1, CutoffProfile(r)};
        DescentOptions d = opts.descent;
        d.s_start = -(sched.beta.support_radius() + opts.lead_in);
        d.s_end = 0.0;
        d.snapshot_stride = std::max(1, std::min(d.snapshot_stride, 5));

        const DescentRun run = descend(sys, seed_arc, sched, d);

        StretchRow row;
        row.height = r;
        row.outcome = run.outcome;
        row.mu_reached = sched.mu_at(run.final_s);
        row.final_sigma = run.final_arc.sigma;
        row.final_action = discrete_action(sys, run.final_arc, row.mu_reached);
        row.final_grad_norm = run.snapshots.back().grad_norm;
        row.dist_from_seed = arc_distance(run.final_arc, seed_arc);
        row.energy = run.energy;
        row.sigma_max = run.sigma_max;
        row.dhdmu_max = run.dhdmu_max;

        const double plateau_start = -sched.beta.plateau_radius();
        row.plateau_grad_min = std::numeric_limits<double>::infinity();
        row.max_dist_plateau = 0.0;
        for (const DescentSnapshot& sn : run.snapshots) {
            if (sn.s < plateau_start) continue;
            row.plateau_grad_min = std::min(row.plateau_grad_min, sn.grad_norm);
            row.max_dist_plateau = std::max(row.max_dist_plateau, sn.dist_from_start);
        }
        if (!std::isfinite(row.plateau_grad_min)) row.plateau_grad_min = row.final_grad_norm;
        row.escaped = row.max_dist_plateau > opts.escape_radius;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace chordfam
