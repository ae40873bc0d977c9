#include "chordfam/chord.hpp"

#include <algorithm>
#include <cmath>

namespace chordfam {

namespace {

std::vector<double> uniform_times(double tau, int n_samples) {
    std::vector<double> ts(static_cast<std::size_t>(n_samples) + 1);
    for (int i = 0; i <= n_samples; ++i)
        ts[static_cast<std::size_t>(i)] = tau * double(i) / double(n_samples);
    ts.back() = tau;
    return ts;
}

Chord assemble_chord(const SystemDescriptor& sys, double mu, const Vec& u, double tau,
                     double residual, const ShootOptions& opts) {
    IntegrateOptions io = opts.integ;
    io.sample_times = uniform_times(tau, opts.n_samples);
    FlowResult fr = integrate(sys, sys.lagrangians[0].embed(u), mu, tau, io);

    Chord c;
    c.mu = mu;
    c.tau = tau;
    c.u = u;
    c.samples.reserve(fr.states.size());
    for (auto& [t, st] : fr.states) c.samples.push_back(std::move(st));
    c.residual_norm = residual;
    c.boundary_gap = std::max(sys.lagrangians[0].gap(c.samples.front().z),
                              sys.lagrangians[1].gap(c.samples.back().z));
    return c;
}

}  // namespace

ShootEval eval_shoot_map(const SystemDescriptor& sys, double mu, const Vec& u, double tau,
                         const IntegrateOptions& integ, bool with_mu_column) {
    const Eigen::Index n = sys.n;
    if (u.size() != n) throw InvalidArgument("eval_shoot_map: u must have size n");
    if (!(tau > 0.0)) throw InvalidArgument("eval_shoot_map: tau must be positive");

    const AffineLagrangian& l0 = sys.lagrangians[0];
    const AffineLagrangian& l1 = sys.lagrangians[1];
    const Vec x0 = l0.embed(u);

    FlowResult fr = integrate_with_variational(sys, x0, mu, tau, integ);
    const Vec xe = fr.states.back().second.z;

    ShootEval ev;
    ev.start_state = x0;
    ev.end_state = xe;
    ev.monodromy = fr.monodromy;
    ev.f.resize(n + 1);
    ev.f.head(n) = l1.plane_coords(xe);
    ev.f[n] = sys.h(x0, mu);

    const Vec xdot_end = hamiltonian_vector_field(sys, xe, mu);
    const Vec grad0 = sys.grad_h(x0, mu);
    ev.j.resize(n + 1, n + 1);
    ev.j.topLeftCorner(n, n) = l1.normal().transpose() * (fr.monodromy * l0.tangent());
    ev.j.topRightCorner(n, 1) = l1.normal().transpose() * xdot_end;
    ev.j.bottomLeftCorner(1, n) = (l0.tangent().transpose() * grad0).transpose();
    ev.j(n, n) = 0.0;
    ev.jac_det = ev.j.determinant();

    if (with_mu_column) {
        // Flow sensitivity to mu by central differences at fixed (u, tau);
        // the energy row is analytic.
        const double dmu = 1e-6 * std::max(1.0, std::abs(mu));
        double mu_p = mu + dmu, mu_m = mu - dmu;
        if (!sys.mu_range.contains(mu_p)) mu_p = mu;
        if (!sys.mu_range.contains(mu_m)) mu_m = mu;
        if (mu_p == mu_m)
            throw InvalidArgument("eval_shoot_map: mu_range too thin for a mu derivative");
        const Vec ep = integrate(sys, x0, mu_p, tau, integ).states.back().second.z;
        const Vec em = integrate(sys, x0, mu_m, tau, integ).states.back().second.z;
        ev.f_mu.resize(n + 1);
        ev.f_mu.head(n) = l1.normal().transpose() * ((ep - em) / (mu_p - mu_m));
        ev.f_mu[n] = sys.dh_dmu(x0, mu);
    }
    return ev;
}

Chord shoot(const SystemDescriptor& sys, double mu, const Vec& u0, double tau0,
            const ShootOptions& opts) {
    sys.require_mu(mu);
    Vec u = u0;
    double tau = tau0;
    if (!(tau > opts.tau_floor))
        throw TauCollapsed("shoot: initial tau " + std::to_string(tau) + " at or under floor");

    for (int it = 0; it < opts.max_iter; ++it) {
        ShootEval ev = eval_shoot_map(sys, mu, u, tau, opts.integ);
        const double res = ev.f.lpNorm<Eigen::Infinity>();
        if (res < opts.f_tol) return assemble_chord(sys, mu, u, tau, res, opts);

        Vec delta = ev.j.partialPivLu().solve(-ev.f);
        if (!delta.allFinite())
            throw NoConvergence("shoot: singular shooting system at iteration " +
                                std::to_string(it));
        // Cap the update; far-field guesses otherwise fling tau around.
        const double cap = 0.5 * std::max(1.0, std::abs(tau));
        const double dn = delta.lpNorm<Eigen::Infinity>();
        if (dn > cap) delta *= cap / dn;

        u += delta.head(sys.n);
        tau += delta[sys.n];
        if (!(tau > opts.tau_floor))
            throw TauCollapsed("shoot: tau collapsed to " + std::to_string(tau) +
                               " at iteration " + std::to_string(it));
    }
    throw NoConvergence("shoot: no convergence in " + std::to_string(opts.max_iter) +
                        " iterations (mu=" + std::to_string(mu) + ")");
}

std::pair<Chord, int> reverify(const SystemDescriptor& sys, const Chord& chord,
                               const ShootOptions& opts) {
    sys.require_mu(chord.mu);
    Vec u = chord.u;
    double tau = chord.tau;
    for (int it = 0; it <= opts.max_iter; ++it) {
        ShootEval ev = eval_shoot_map(sys, chord.mu, u, tau, opts.integ);
        const double res = ev.f.lpNorm<Eigen::Infinity>();
        if (res < opts.f_tol)
            return {assemble_chord(sys, chord.mu, u, tau, res, opts), it};
        Vec delta = ev.j.partialPivLu().solve(-ev.f);
        if (!delta.allFinite()) throw NoConvergence("reverify: singular shooting system");
        u += delta.head(sys.n);
        tau += delta[sys.n];
        if (!(tau > opts.tau_floor)) throw TauCollapsed("reverify: tau collapsed");
    }
    throw NoConvergence("reverify: record does not converge back");
}

namespace {

/// Orthonormal basis of the orthogonal complement of g inside R^m.
Mat complement_basis(const Vec& g) {
    const Eigen::Index m = g.size();
    Eigen::HouseholderQR<Mat> qr(g);
    Mat q = qr.householderQ();
    return q.rightCols(m - 1);
}

}  // namespace

NondegReport nondegeneracy(const SystemDescriptor& sys, const Chord& chord,
                           const NondegOptions& opts) {
    if (chord.samples.size() < 2) throw InvalidArgument("nondegeneracy: chord has no samples");
    ShootEval ev = eval_shoot_map(sys, chord.mu, chord.u, chord.tau, opts.integ);
    return nondegeneracy_from_eval(sys, chord.mu, ev, opts.sigma_threshold);
}

NondegReport nondegeneracy_from_eval(const SystemDescriptor& sys, double mu,
                                     const ShootEval& ev, double sigma_threshold) {
    const Eigen::Index n = sys.n;

    NondegReport rep;
    rep.shooting_jac_det = ev.jac_det;

    const Vec& x0 = ev.start_state;
    const Vec& x1 = ev.end_state;
    const Vec grads[2] = {sys.grad_h(x0, mu), sys.grad_h(x1, mu)};
    Mat reduced[2];
    for (int side = 0; side < 2; ++side) {
        const AffineLagrangian& plane = sys.lagrangians[static_cast<std::size_t>(side)];
        const Vec g = plane.tangent().transpose() * grads[side];
        if (g.norm() <= 1e-10 * std::max(1.0, grads[side].norm()))
            throw DimensionError(
                "nondegeneracy: boundary plane tangent to the energy surface (side " +
                std::to_string(side) + ")");
        if (n == 1) continue;  // complement inside the plane is zero-dimensional
        reduced[side] = plane.tangent() * complement_basis(g);
    }

    if (n == 1) {
        rep.sigma_min = 1.0;
        rep.degenerate = false;
        return rep;
    }

    Mat t(2 * n, 2 * (n - 1));
    t.leftCols(n - 1) = ev.monodromy * reduced[0];
    t.rightCols(n - 1) = reduced[1];
    for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const double nn = t.col(c).norm();
        if (nn > 0.0) t.col(c) /= nn;
    }
    Eigen::JacobiSVD<Mat> svd(t);
    rep.sigma_min = svd.singularValues().minCoeff();
    rep.degenerate = rep.sigma_min < sigma_threshold;
    return rep;
}

std::vector<std::pair<double, PhaseState>> reparametrize_to_period(const Chord& chord) {
    if (chord.samples.empty()) throw InvalidArgument("reparametrize_to_period: empty chord");
    std::vector<std::pair<double, PhaseState>> out;
    out.reserve(chord.samples.size());
    const double nseg = double(chord.samples.size() - 1);
    for (std::size_t i = 0; i < chord.samples.size(); ++i)
        out.emplace_back(chord.tau * double(i) / nseg, chord.samples[i]);
    return out;
}

Vec project_to_energy(const SystemDescriptor& sys, double mu, const Vec& u, const Vec& dir,
                      int max_iter, double tol) {
    if (dir.size() != u.size()) throw InvalidArgument("project_to_energy: dir size mismatch");
    const AffineLagrangian& l0 = sys.lagrangians[0];
    Vec v = u;
    for (int it = 0; it < max_iter; ++it) {
        const Vec x = l0.embed(v);
        const double hv = sys.h(x, mu);
        if (std::abs(hv) <= tol) return v;
        const double dh = sys.grad_h(x, mu).dot(l0.tangent() * dir);
        if (std::abs(dh) < 1e-14)
            throw NoConvergence("project_to_energy: level set tangent to the search line");
        v -= (hv / dh) * dir;
    }
    throw NoConvergence("project_to_energy: no convergence");
}

std::vector<ScanHit> scan_crossings(const SystemDescriptor& sys, double mu, const Mat& u_grid,
                                    double t_max, const IntegrateOptions& integ,
                                    double gap_cut) {
    if (u_grid.cols() != sys.n) throw InvalidArgument("scan_crossings: grid has wrong width");
    const AffineLagrangian& l1 = sys.lagrangians[1];
    std::vector<ScanHit> hits;

    for (Eigen::Index r = 0; r < u_grid.rows(); ++r) {
        const Vec u = u_grid.row(r).transpose();
        FlowResult fr;
        try {
            IntegrateOptions io = integ;
            const int nt = 2000;
            io.sample_times.resize(nt + 1);
            for (int i = 0; i <= nt; ++i) io.sample_times[size_t(i)] = t_max * i / double(nt);
            fr = integrate(sys, sys.lagrangians[0].embed(u), mu, t_max, io);
        } catch (const Error&) {
            continue;  // collisions or blowups just disqualify this start
        }
        std::vector<double> gap(fr.states.size());
        for (std::size_t i = 0; i < fr.states.size(); ++i)
            gap[i] = l1.gap(fr.states[i].second.z);
        for (std::size_t i = 1; i + 1 < fr.states.size(); ++i) {
            if (gap[i] <= gap[i - 1] && gap[i] <= gap[i + 1] && gap[i] < gap_cut &&
                fr.states[i].first > 1e-3)
                hits.push_back({u, fr.states[i].first, gap[i]});
        }
    }
    std::sort(hits.begin(), hits.end(),
              [](const ScanHit& a, const ScanHit& b) { return a.gap < b.gap; });
    return hits;
}

}  // namespace chordfam
