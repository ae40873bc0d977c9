#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace chordfam {

/// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidArgument : Error { using Error::Error; };

// flow engine
struct StepSizeUnderflow : Error { using Error::Error; };
struct CollisionFloor : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };

// chord solver
struct NoConvergence : Error { using Error::Error; };
struct TauCollapsed : Error { using Error::Error; };
struct DimensionError : Error { using Error::Error; };

// contact / sampling
struct SamplingError : Error { using Error::Error; };
struct ContactFailed : Error { using Error::Error; };

// continuation / gradient flow
struct SeedDegenerate : Error { using Error::Error; };
struct SigmaFloor : Error { using Error::Error; };
struct Divergence : Error { using Error::Error; };

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Closed parameter interval [lo, hi].
struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Point of phase space R^{2n}, stored flat as (q_1..q_n, p_1..p_n).
struct PhaseState {
    Vec z;

    PhaseState() = default;
    explicit PhaseState(Vec state) : z(std::move(state)) {
        if (z.size() == 0 || z.size() % 2 != 0)
            throw InvalidArgument("PhaseState: state dimension must be positive and even");
        if (!z.allFinite())
            throw NonFinite("PhaseState: non-finite entry");
    }
    static PhaseState from_qp(const Vec& q, const Vec& p) {
        if (q.size() != p.size())
            throw InvalidArgument("PhaseState: q and p dimensions differ");
        Vec z(q.size() + p.size());
        z << q, p;
        return PhaseState(std::move(z));
    }

    Eigen::Index dof() const { return z.size() / 2; }
    auto q() const { return z.head(dof()); }
    auto p() const { return z.tail(dof()); }
};

/// omega(u, w) = sum_i dp_i ^ dq_i applied to the pair (u, w) = u_p.w_q - w_p.u_q.
inline double symplectic_form(const Vec& u, const Vec& w) {
    const Eigen::Index n = u.size() / 2;
    return u.tail(n).dot(w.head(n)) - w.tail(n).dot(u.head(n));
}

/// J(q, p) = (p, -q); the complex structure with omega(u, Ju) = |u|^2.
inline Vec apply_j(const Vec& u) {
    const Eigen::Index n = u.size() / 2;
    Vec out(2 * n);
    out.head(n) = u.tail(n);
    out.tail(n) = -u.head(n);
    return out;
}

/// J applied to each column of a 2n x 2n matrix.
inline Mat apply_j_matrix(const Mat& m) {
    const Eigen::Index n = m.rows() / 2;
    Mat out(m.rows(), m.cols());
    out.topRows(n) = m.bottomRows(n);
    out.bottomRows(n) = -m.topRows(n);
    return out;
}

/// Matrix O with u^T O w = omega(u, w): blocks [[0, -I], [I, 0]].
inline Mat omega_matrix(Eigen::Index n) {
    Mat o = Mat::Zero(2 * n, 2 * n);
    o.topRightCorner(n, n) = -Mat::Identity(n, n);
    o.bottomLeftCorner(n, n) = Mat::Identity(n, n);
    return o;
}

}  // namespace chordfam
