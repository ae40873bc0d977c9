#pragma once

#include <array>
#include <functional>
#include <map>
#include <string>

#include "chordfam/types.hpp"

namespace chordfam {

/// Primitive of omega used for actions and the contact test.
/// Standard:  lambda = p dq,            Liouville field Y = (0, p).
/// Symmetric: lambda = (p dq - q dp)/2, Liouville field Y = (q, p)/2.
enum class LambdaChoice { Standard, Symmetric };

/// Affine Lagrangian plane x = base + span(tangent columns).
///
/// The tangent frame is orthonormalized at construction; `normal` carries an
/// orthonormal basis of the Euclidean complement, so signed plane distances
/// are normal^T (x - base).  Construction rejects frames that are not
/// isotropic for omega.
class AffineLagrangian {
public:
    AffineLagrangian() = default;
    /// `span` holds one spanning vector per column (n columns of size 2n).
    AffineLagrangian(Vec base_point, const Mat& span);

    const Vec& base() const { return base_; }
    const Mat& tangent() const { return tangent_; }
    const Mat& normal() const { return normal_; }
    Eigen::Index dof() const { return tangent_.cols(); }

    /// Signed distances of x from the plane along the normal frame.
    Vec plane_coords(const Vec& x) const { return normal_.transpose() * (x - base_); }
    /// Euclidean distance of x from the plane.
    double gap(const Vec& x) const { return plane_coords(x).norm(); }
    /// Point of the plane with tangent coordinates u.
    Vec embed(const Vec& u) const { return base_ + tangent_ * u; }
    /// Tangent coordinates of the plane point nearest to x.
    Vec project_coords(const Vec& x) const { return tangent_.transpose() * (x - base_); }

private:
    Vec base_;
    Mat tangent_;
    Mat normal_;
};

/// A one-parameter Hamiltonian family on R^{2n} together with the boundary
/// data a chord problem needs.  Callables take the flat state (q, p) and mu.
struct SystemDescriptor {
    std::string id;
    Eigen::Index n = 0;
    std::function<double(const Vec&, double)> h;
    std::function<Vec(const Vec&, double)> grad_h;
    std::function<Mat(const Vec&, double)> hess_h;
    std::function<double(const Vec&, double)> dh_dmu;
    LambdaChoice lambda_choice = LambdaChoice::Symmetric;
    Interval mu_range;
    std::array<AffineLagrangian, 2> lagrangians;
    /// Minimum admissible value of `min_separation`; 0 disables the check.
    double collision_floor = 0.0;
    /// Distance to the nearest excluded set member (bodies for rtbp_planar).
    std::function<double(const Vec&)> min_separation;
    std::map<std::string, double> params;

    void require_mu(double mu) const {
        if (!mu_range.contains(mu))
            throw InvalidArgument(id + ": mu=" + std::to_string(mu) + " outside mu_range");
    }
};

/// lambda at x applied to a tangent vector u.
double lambda_value(LambdaChoice lc, const Vec& x, const Vec& u);

/// Liouville vector field Y with omega(Y, .) = lambda.
Vec liouville_field(LambdaChoice lc, const Vec& x);

/// X_H = (dH/dp, -dH/dq), the vector field with dH = omega(., X_H).
Vec hamiltonian_vector_field(const SystemDescriptor& sys, const Vec& x, double mu);

/// f = dH(Y); positive on the energy surface iff lambda restricts to a
/// contact form there.
double contact_function(const SystemDescriptor& sys, const Vec& x, double mu);

/// True iff lambda vanishes on the plane's tangent frame at base and at
/// base + b_j for every tangent basis vector b_j (tolerance 1e-10).
bool lagrangian_exactness_check(LambdaChoice lc, const AffineLagrangian& plane);

/// Central finite-difference gradient of h, for descriptor self-checks.
Vec fd_gradient(const SystemDescriptor& sys, const Vec& x, double mu, double step = 1e-6);

/// Built-in families.  Known names:
///   harmonic        params: mu_coupling (default 0)
///   henon_heiles    params: none
///   rtbp_planar     params: mass_ratio in (0, 1/2)
///   synthetic_fold  params: coupling (default 0.002)
/// Throws InvalidArgument for unknown names or parameters out of range.
SystemDescriptor builtin_system(const std::string& name,
                                const std::map<std::string, double>& params = {});

}  // namespace chordfam
