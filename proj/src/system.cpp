#include "chordfam/system.hpp"

#include <cmath>

namespace chordfam {

AffineLagrangian::AffineLagrangian(Vec base_point, const Mat& span) {
    const Eigen::Index dim = base_point.size();
    if (dim == 0 || dim % 2 != 0)
        throw InvalidArgument("AffineLagrangian: ambient dimension must be positive and even");
    const Eigen::Index n = dim / 2;
    if (span.rows() != dim || span.cols() != n)
        throw InvalidArgument("AffineLagrangian: span must be 2n x n");
    if (!base_point.allFinite() || !span.allFinite())
        throw NonFinite("AffineLagrangian: non-finite frame data");

    Eigen::HouseholderQR<Mat> qr(span);
    Mat q = qr.householderQ() * Mat::Identity(dim, dim);
    Mat r = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
    for (Eigen::Index j = 0; j < n; ++j)
        if (std::abs(r(j, j)) < 1e-12 * std::max(1.0, span.col(j).norm()))
            throw InvalidArgument("AffineLagrangian: spanning vectors are linearly dependent");

    base_ = std::move(base_point);
    // An already-orthonormal span is kept verbatim so its tangent coordinates
    // mean what the caller wrote down; QR may flip column signs otherwise.
    if ((span.transpose() * span - Mat::Identity(n, n)).norm() < 1e-12)
        tangent_ = span;
    else
        tangent_ = q.leftCols(n);
    normal_ = q.rightCols(n);

    // isotropy: omega vanishes on the span
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (std::abs(symplectic_form(tangent_.col(i), tangent_.col(j))) > 1e-12)
                throw InvalidArgument("AffineLagrangian: span is not omega-isotropic");
}

double lambda_value(LambdaChoice lc, const Vec& x, const Vec& u) {
    const Eigen::Index n = x.size() / 2;
    const double p_dq = x.tail(n).dot(u.head(n));
    if (lc == LambdaChoice::Standard) return p_dq;
    return 0.5 * (p_dq - x.head(n).dot(u.tail(n)));
}

Vec liouville_field(LambdaChoice lc, const Vec& x) {
    const Eigen::Index n = x.size() / 2;
    Vec y = Vec::Zero(2 * n);
    if (lc == LambdaChoice::Standard) {
        y.tail(n) = x.tail(n);
    } else {
        y = 0.5 * x;
    }
    return y;
}

Vec hamiltonian_vector_field(const SystemDescriptor& sys, const Vec& x, double mu) {
    sys.require_mu(mu);
    if (x.size() != 2 * sys.n)
        throw InvalidArgument(sys.id + ": state dimension mismatch");
    return apply_j(sys.grad_h(x, mu));
}

double contact_function(const SystemDescriptor& sys, const Vec& x, double mu) {
    sys.require_mu(mu);
    return sys.grad_h(x, mu).dot(liouville_field(sys.lambda_choice, x));
}

bool lagrangian_exactness_check(LambdaChoice lc, const AffineLagrangian& plane) {
    const Eigen::Index n = plane.dof();
    for (Eigen::Index s = -1; s < n; ++s) {
        Vec x = plane.base();
        if (s >= 0) x += plane.tangent().col(s);
        for (Eigen::Index j = 0; j < n; ++j)
            if (std::abs(lambda_value(lc, x, plane.tangent().col(j))) > 1e-10)
                return false;
    }
    return true;
}

Vec fd_gradient(const SystemDescriptor& sys, const Vec& x, double mu, double step) {
    Vec g(x.size());
    Vec xp = x, xm = x;
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double h = step * std::max(1.0, std::abs(x[i]));
        xp[i] = x[i] + h;
        xm[i] = x[i] - h;
        g[i] = (sys.h(xp, mu) - sys.h(xm, mu)) / (2 * h);
        xp[i] = x[i];
        xm[i] = x[i];
    }
    return g;
}

namespace {

double take(const std::map<std::string, double>& params, const std::string& key, double dflt) {
    auto it = params.find(key);
    return it == params.end() ? dflt : it->second;
}

void reject_unknown(const std::string& name, const std::map<std::string, double>& params,
                    std::initializer_list<const char*> known) {
    for (const auto& [key, value] : params) {
        (void)value;
        bool ok = false;
        for (const char* k : known)
            if (key == k) ok = true;
        if (!ok) throw InvalidArgument(name + ": unknown parameter '" + key + "'");
    }
}

AffineLagrangian axis_plane(Eigen::Index dim, std::initializer_list<Eigen::Index> span_axes) {
    Mat span = Mat::Zero(dim, static_cast<Eigen::Index>(span_axes.size()));
    Eigen::Index c = 0;
    for (Eigen::Index a : span_axes) span(a, c++) = 1.0;
    return AffineLagrangian(Vec::Zero(dim), span);
}

SystemDescriptor make_harmonic(const std::map<std::string, double>& params) {
    reject_unknown("harmonic", params, {"mu_coupling"});
    const double c = take(params, "mu_coupling", 0.0);
    SystemDescriptor sys;
    sys.id = "harmonic";
    sys.n = 1;
    sys.h = [c](const Vec& x, double mu) {
        return 0.5 * (x[0] * x[0] + x[1] * x[1] - 1.0) - c * mu;
    };
    sys.grad_h = [](const Vec& x, double) { return x; };
    sys.hess_h = [](const Vec&, double) { return Mat::Identity(2, 2); };
    sys.dh_dmu = [c](const Vec&, double) { return -c; };
    sys.lambda_choice = LambdaChoice::Symmetric;
    sys.mu_range = {-0.4, 1.0};
    sys.lagrangians = {axis_plane(2, {0}), axis_plane(2, {1})};
    sys.params = {{"mu_coupling", c}};
    return sys;
}

SystemDescriptor make_henon_heiles(const std::map<std::string, double>& params) {
    reject_unknown("henon_heiles", params, {});
    SystemDescriptor sys;
    sys.id = "henon_heiles";
    sys.n = 2;
    sys.h = [](const Vec& x, double mu) {
        const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
        return 0.5 * (p1 * p1 + p2 * p2) + 0.5 * (q1 * q1 + q2 * q2) + q1 * q1 * q2 -
               q2 * q2 * q2 / 3.0 - mu;
    };
    sys.grad_h = [](const Vec& x, double) {
        const double q1 = x[0], q2 = x[1];
        Vec g(4);
        g << q1 + 2.0 * q1 * q2, q2 + q1 * q1 - q2 * q2, x[2], x[3];
        return g;
    };
    sys.hess_h = [](const Vec& x, double) {
        const double q1 = x[0], q2 = x[1];
        Mat hh = Mat::Identity(4, 4);
        hh(0, 0) = 1.0 + 2.0 * q2;
        hh(0, 1) = hh(1, 0) = 2.0 * q1;
        hh(1, 1) = 1.0 - 2.0 * q2;
        return hh;
    };
    sys.dh_dmu = [](const Vec&, double) { return -1.0; };
    sys.lambda_choice = LambdaChoice::Symmetric;
    sys.mu_range = {1e-3, 0.16};
    sys.lagrangians = {axis_plane(4, {1, 2}), axis_plane(4, {1, 2})};
    sys.params = {};
    return sys;
}

SystemDescriptor make_rtbp(const std::map<std::string, double>& params) {
    reject_unknown("rtbp_planar", params, {"mass_ratio"});
    const double m = take(params, "mass_ratio", 1e-3);
    if (!(m > 0.0 && m < 0.5))
        throw InvalidArgument("rtbp_planar: mass_ratio must lie in (0, 1/2)");
    SystemDescriptor sys;
    sys.id = "rtbp_planar";
    sys.n = 2;
    // primaries: mass 1-m at (-m, 0), mass m at (1-m, 0)
    sys.h = [m](const Vec& x, double mu) {
        const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
        const double r1 = std::hypot(q1 + m, q2);
        const double r2 = std::hypot(q1 - (1.0 - m), q2);
        return 0.5 * (p1 * p1 + p2 * p2) + q2 * p1 - q1 * p2 - (1.0 - m) / r1 - m / r2 +
               0.5 * mu;
    };
    sys.grad_h = [m](const Vec& x, double) {
        const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
        const double d1x = q1 + m, d2x = q1 - (1.0 - m);
        const double r1 = std::hypot(d1x, q2), r2 = std::hypot(d2x, q2);
        const double c1 = (1.0 - m) / (r1 * r1 * r1), c2 = m / (r2 * r2 * r2);
        Vec g(4);
        g << -p2 + c1 * d1x + c2 * d2x, p1 + (c1 + c2) * q2, p1 + q2, p2 - q1;
        return g;
    };
    sys.hess_h = [m](const Vec& x, double) {
        const double q1 = x[0], q2 = x[1];
        const double d1x = q1 + m, d2x = q1 - (1.0 - m);
        const double r1 = std::hypot(d1x, q2), r2 = std::hypot(d2x, q2);
        Mat hh = Mat::Zero(4, 4);
        // gravitational block: sum_b G_b (I/r^3 - 3 d d^T / r^5)
        auto add_body = [&hh](double gm, double dx, double dy, double r) {
            const double r3 = r * r * r, r5 = r3 * r * r;
            hh(0, 0) += gm * (1.0 / r3 - 3.0 * dx * dx / r5);
            hh(0, 1) += gm * (-3.0 * dx * dy / r5);
            hh(1, 1) += gm * (1.0 / r3 - 3.0 * dy * dy / r5);
        };
        add_body(1.0 - m, d1x, q2, r1);
        add_body(m, d2x, q2, r2);
        hh(1, 0) = hh(0, 1);
        hh(2, 2) = hh(3, 3) = 1.0;
        hh(0, 3) = hh(3, 0) = -1.0;
        hh(1, 2) = hh(2, 1) = 1.0;
        return hh;
    };
    sys.dh_dmu = [](const Vec&, double) { return 0.5; };
    sys.lambda_choice = LambdaChoice::Symmetric;
    sys.mu_range = {2.0, 5.0};
    sys.lagrangians = {axis_plane(4, {0, 3}), axis_plane(4, {0, 3})};
    sys.collision_floor = 1e-3;
    sys.min_separation = [m](const Vec& x) {
        return std::min(std::hypot(x[0] + m, x[1]), std::hypot(x[0] - (1.0 - m), x[1]));
    };
    sys.params = {{"mass_ratio", m}};
    return sys;
}

// V(q) = (q - a)(q - 1)((q + 2)^2 + 1) with a = coupling * (mu - 1/2); the
// level set {p^2 = -V} detaches from the q = 0 axis as mu crosses 1/2, which
// kills the two chords from the right turning point in a quadratic fold.
SystemDescriptor make_synthetic_fold(const std::map<std::string, double>& params) {
    reject_unknown("synthetic_fold", params, {"coupling"});
    const double eps = take(params, "coupling", 0.002);
    if (!(eps > 0.0 && eps <= 1.0))
        throw InvalidArgument("synthetic_fold: coupling must lie in (0, 1]");
    auto v = [eps](double q, double mu) {
        const double a = eps * (mu - 0.5);
        return (q - a) * (q - 1.0) * ((q + 2.0) * (q + 2.0) + 1.0);
    };
    auto vp = [eps](double q, double mu) {
        const double a = eps * (mu - 0.5);
        return 4.0 * q * q * q + 3.0 * (3.0 - a) * q * q + 2.0 * (1.0 - 3.0 * a) * q -
               (5.0 + a);
    };
    auto vpp = [eps](double q, double mu) {
        const double a = eps * (mu - 0.5);
        return 12.0 * q * q + 6.0 * (3.0 - a) * q + 2.0 * (1.0 - 3.0 * a);
    };
    SystemDescriptor sys;
    sys.id = "synthetic_fold";
    sys.n = 1;
    sys.h = [v](const Vec& x, double mu) { return 0.5 * (x[1] * x[1] + v(x[0], mu)); };
    sys.grad_h = [vp](const Vec& x, double mu) {
        Vec g(2);
        g << 0.5 * vp(x[0], mu), x[1];
        return g;
    };
    sys.hess_h = [vpp](const Vec& x, double mu) {
        Mat hh = Mat::Identity(2, 2);
        hh(0, 0) = 0.5 * vpp(x[0], mu);
        return hh;
    };
    sys.dh_dmu = [eps](const Vec& x, double) {
        const double q = x[0];
        return 0.5 * eps * (-q * q * q - 3.0 * q * q - q + 5.0);
    };
    sys.lambda_choice = LambdaChoice::Symmetric;
    sys.mu_range = {-0.5, 1.0};
    sys.lagrangians = {axis_plane(2, {0}), axis_plane(2, {1})};
    sys.params = {{"coupling", eps}};
    return sys;
}

}  // namespace

SystemDescriptor builtin_system(const std::string& name,
                                const std::map<std::string, double>& params) {
    if (name == "harmonic") return make_harmonic(params);
    if (name == "henon_heiles") return make_henon_heiles(params);
    if (name == "rtbp_planar") return make_rtbp(params);
    if (name == "synthetic_fold") return make_synthetic_fold(params);
    throw InvalidArgument("builtin_system: unknown system '" + name + "'");
}

}  // namespace chordfam
