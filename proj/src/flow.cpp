#include "chordfam/flow.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace chordfam {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                 a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                 a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0,
                 a75 = -2187.0 / 6784.0, a76 = 11.0 / 84.0;
// b minus b-hat, for the embedded error estimate.
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                 e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
// Coefficients of the quartic dense-output polynomial.
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

using Rhs = std::function<void(const Vec&, Vec&)>;

/// One integration context: holds stage storage and the dense coefficients of
/// the most recent accepted step.
struct Stepper {
    Rhs rhs;
    Eigen::Index dim;
    Vec k1, k2, k3, k4, k5, k6, k7, ytmp;
    Vec rcont1, rcont2, rcont3, rcont4, rcont5;
    double t_old = 0.0, h_old = 0.0;

    explicit Stepper(Rhs f, Eigen::Index d) : rhs(std::move(f)), dim(d) {
        for (Vec* v : {&k1, &k2, &k3, &k4, &k5, &k6, &k7, &ytmp, &rcont1, &rcont2, &rcont3,
                       &rcont4, &rcont5})
            v->resize(dim);
    }

    /// Attempts the step (t, y) -> (t + h, ynew) with k1 already holding
    /// f(y).  Returns the weighted rms error of the embedded pair.
    double attempt(double t, const Vec& y, double h, Vec& ynew, double rtol, double atol) {
        ytmp = y + h * a21 * k1;
        rhs(ytmp, k2);
        ytmp = y + h * (a31 * k1 + a32 * k2);
        rhs(ytmp, k3);
        ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
        rhs(ytmp, k4);
        ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        rhs(ytmp, k5);
        ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        rhs(ytmp, k6);
        ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
        rhs(ynew, k7);

        double err = 0.0;
        for (Eigen::Index i = 0; i < dim; ++i) {
            const double ei =
                h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
            const double sc = atol + rtol * std::max(std::abs(y[i]), std::abs(ynew[i]));
            err += (ei / sc) * (ei / sc);
        }
        err = std::sqrt(err / static_cast<double>(dim));
        (void)t;
        return err;
    }

    /// Prepares dense-output coefficients for the step just accepted.
    void prepare_dense(double t, const Vec& y, double h, const Vec& ynew) {
        t_old = t;
        h_old = h;
        rcont1 = y;
        const Vec dy = ynew - y;
        rcont2 = dy;
        rcont3 = h * k1 - dy;
        rcont4 = dy - h * k7 - rcont3;
        rcont5 = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
    }

    /// Evaluates the interpolant inside the last accepted step.
    void dense_eval(double t, Vec& out) const {
        const double th = (t - t_old) / h_old;
        const double th1 = 1.0 - th;
        out = rcont1 +
              th * (rcont2 + th1 * (rcont3 + th * (rcont4 + th1 * rcont5)));
    }
};

double initial_step(const Rhs& rhs, const Vec& y0, const Vec& f0, double t_final, double rtol,
                    double atol) {
    const Eigen::Index dim = y0.size();
    double dnf = 0.0, dny = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double sc = atol + rtol * std::abs(y0[i]);
        dnf += (f0[i] / sc) * (f0[i] / sc);
        dny += (y0[i] / sc) * (y0[i] / sc);
    }
    double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * std::sqrt(dny / dnf);
    h = std::min(h, t_final);

    // One explicit Euler probe to bound the second derivative.
    Vec y1 = y0 + h * f0;
    Vec f1(dim);
    rhs(y1, f1);
    double der2 = 0.0;
    for (Eigen::Index i = 0; i < dim; ++i) {
        const double sc = atol + rtol * std::abs(y0[i]);
        der2 += ((f1[i] - f0[i]) / sc) * ((f1[i] - f0[i]) / sc);
    }
    der2 = std::sqrt(der2) / h;
    const double der_max = std::max(std::sqrt(dnf), der2);
    const double h1 = (der_max <= 1e-15) ? std::max(1e-6, h * 1e-3)
                                         : std::pow(0.01 / der_max, 0.2);
    return std::min({100.0 * h, h1, t_final});
}

struct Monitors {
    const SystemDescriptor* sys;
    double mu;
    double h0 = 0.0;
    double max_drift = 0.0;

    void init(const Vec& x) {
        h0 = sys->h(x, mu);
        check(x);
    }
    void check(const Vec& x) {
        if (!x.allFinite()) throw NonFinite("state left the finite range");
        if (sys->min_separation) {
            const double sep = sys->min_separation(x);
            if (sep < sys->collision_floor)
                throw CollisionFloor("separation " + std::to_string(sep) +
                                     " under floor " + std::to_string(sys->collision_floor));
        }
        max_drift = std::max(max_drift, std::abs(sys->h(x, mu) - h0));
    }
};

FlowResult run(const SystemDescriptor& sys, const Vec& x0, double mu, double t_final,
               const IntegrateOptions& opts, bool variational) {
    sys.require_mu(mu);
    const Eigen::Index two_n = 2 * sys.n;
    if (x0.size() != two_n)
        throw InvalidArgument("state dimension " + std::to_string(x0.size()) +
                              " does not match system dimension " + std::to_string(two_n));
    if (!(t_final >= 0.0) || !std::isfinite(t_final))
        throw InvalidArgument("integration time must be finite and nonnegative");

    const Eigen::Index dim = variational ? two_n + two_n * two_n : two_n;
    Vec y0(dim);
    y0.head(two_n) = x0;
    if (variational) {
        Mat id = Mat::Identity(two_n, two_n);
        y0.tail(two_n * two_n) = Eigen::Map<const Vec>(id.data(), two_n * two_n);
    }

    Rhs rhs = [&sys, mu, two_n, variational](const Vec& y, Vec& dy) {
        const Vec x = y.head(two_n);
        dy.head(two_n) = apply_j(sys.grad_h(x, mu));
        if (variational) {
            const Mat a = apply_j_matrix(sys.hess_h(x, mu));
            Eigen::Map<const Mat> m(y.data() + two_n, two_n, two_n);
            Eigen::Map<Mat> dm(dy.data() + two_n, two_n, two_n);
            dm = a * m;
        }
    };

    Monitors mon{&sys, mu};
    mon.init(x0);

    FlowResult res;
    auto emit = [&res, two_n](double t, const Vec& y) {
        res.states.emplace_back(t, PhaseState(y.head(two_n)));
    };

    const bool sampled = !opts.sample_times.empty();
    std::size_t next_sample = 0;
    if (sampled) {
        for (std::size_t i = 0; i < opts.sample_times.size(); ++i) {
            const double s = opts.sample_times[i];
            if (s < 0.0 || s > t_final + 1e-12 * std::max(1.0, t_final))
                throw InvalidArgument("sample time outside integration interval");
            if (i > 0 && s < opts.sample_times[i - 1])
                throw InvalidArgument("sample times must be ascending");
        }
        while (next_sample < opts.sample_times.size() && opts.sample_times[next_sample] <= 0.0) {
            emit(opts.sample_times[next_sample], y0);
            ++next_sample;
        }
    } else {
        emit(0.0, y0);
    }

    Stepper st(rhs, dim);
    Vec y = y0, ynew(dim), ysample(dim);
    double t = 0.0;
    rhs(y, st.k1);
    if (!st.k1.allFinite()) throw NonFinite("vector field not finite at the initial state");

    const double h_cap = opts.h_max > 0.0 ? opts.h_max : t_final;
    double h = opts.h_init > 0.0 ? std::min(opts.h_init, h_cap)
                                 : std::min(initial_step(rhs, y, st.k1, t_final, opts.rtol,
                                                         opts.atol),
                                            h_cap);
    double facold = 1e-4;

    if (t_final == 0.0) {
        if (sampled)
            for (; next_sample < opts.sample_times.size(); ++next_sample)
                emit(opts.sample_times[next_sample], y);
        if (variational) {
            res.monodromy = Eigen::Map<const Mat>(y.data() + two_n, two_n, two_n);
            res.has_monodromy = true;
        }
        return res;
    }

    long steps = 0;
    while (t < t_final) {
        if (++steps > opts.max_steps)
            throw NoConvergence("step budget exhausted at t = " + std::to_string(t));
        const double eps_t = 16.0 * std::numeric_limits<double>::epsilon() *
                             std::max(std::abs(t), 1.0);
        if (h < eps_t)
            throw StepSizeUnderflow("step size " + std::to_string(h) + " underflowed at t = " +
                                    std::to_string(t));
        bool last = false;
        if (t + h >= t_final) {
            h = t_final - t;
            last = true;
        }

        const double err = st.attempt(t, y, h, ynew, opts.rtol, opts.atol);
        if (!std::isfinite(err) || !ynew.allFinite()) {
            ++res.steps_rejected;
            h *= 0.25;
            continue;
        }

        if (err <= 1.0) {
            st.prepare_dense(t, y, h, ynew);
            const double t_new = t + h;
            if (sampled) {
                while (next_sample < opts.sample_times.size() &&
                       opts.sample_times[next_sample] <= t_new + 1e-14 * std::max(1.0, t_new)) {
                    st.dense_eval(std::min(opts.sample_times[next_sample], t_new), ysample);
                    emit(opts.sample_times[next_sample], ysample);
                    ++next_sample;
                }
            } else {
                emit(t_new, ynew);
            }
            y.swap(ynew);
            st.k1.swap(st.k7);  // first-same-as-last
            t = t_new;
            ++res.steps_accepted;
            mon.check(y.head(two_n));

            // Step controller with the usual stabilizing memory term.
            const double safe = 0.9, beta = 0.04, alpha = 0.2 - beta * 0.75;
            const double erre = std::max(err, 1e-32);
            double fac = std::pow(erre, alpha) / std::pow(facold, beta) / safe;
            fac = std::clamp(fac, 0.1, 5.0);
            facold = erre;
            h = std::min(h / fac, h_cap);
            if (last && t >= t_final) break;
        } else {
            ++res.steps_rejected;
            const double fac = std::max(0.1, 0.9 * std::pow(err, -0.2));
            h *= fac;
        }
    }

    if (sampled)
        for (; next_sample < opts.sample_times.size(); ++next_sample)
            emit(opts.sample_times[next_sample], y);

    res.max_h_drift = mon.max_drift;
    if (variational) {
        res.monodromy = Eigen::Map<const Mat>(y.data() + two_n, two_n, two_n);
        res.has_monodromy = true;
    }
    return res;
}

}  // namespace

FlowResult integrate(const SystemDescriptor& sys, const Vec& x0, double mu, double t_final,
                     const IntegrateOptions& opts) {
    return run(sys, x0, mu, t_final, opts, false);
}

FlowResult integrate_with_variational(const SystemDescriptor& sys, const Vec& x0, double mu,
                                      double t_final, const IntegrateOptions& opts) {
    return run(sys, x0, mu, t_final, opts, true);
}

}  // namespace chordfam
