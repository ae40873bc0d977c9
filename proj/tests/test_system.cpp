#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "chordfam/contact.hpp"
#include "chordfam/system.hpp"

using namespace chordfam;

namespace {

Vec vec2(double a, double b) {
    Vec v(2);
    v << a, b;
    return v;
}

Vec vec4(double a, double b, double c, double d) {
    Vec v(4);
    v << a, b, c, d;
    return v;
}

Vec random_vec(std::mt19937_64& rng, Eigen::Index dim, double scale) {
    std::uniform_real_distribution<double> unit(-scale, scale);
    Vec v(dim);
    for (Eigen::Index i = 0; i < dim; ++i) v[i] = unit(rng);
    return v;
}

}  // namespace

TEST_CASE("phase state validation") {
    CHECK_THROWS_AS(PhaseState(Vec::Zero(3)), InvalidArgument);
    CHECK_THROWS_AS(PhaseState(Vec{}), InvalidArgument);
    Vec bad = Vec::Zero(2);
    bad[0] = std::nan("");
    CHECK_THROWS_AS(PhaseState{bad}, NonFinite);
    CHECK_THROWS_AS(PhaseState::from_qp(Vec::Zero(2), Vec::Zero(1)), InvalidArgument);

    const PhaseState st = PhaseState::from_qp(vec2(1.0, 2.0), vec2(3.0, 4.0));
    CHECK(st.dof() == 2);
    CHECK(st.q()[1] == 2.0);
    CHECK(st.p()[0] == 3.0);
}

TEST_CASE("symplectic conventions lock") {
    // omega = sum dp_i ^ dq_i and J(q, p) = (p, -q) have to satisfy
    // omega(u, Ju) = |u|^2 and u^T Omega w = omega(u, w).
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::Index n = 1 + (trial % 3);
        const Vec u = random_vec(rng, 2 * n, 2.0);
        const Vec w = random_vec(rng, 2 * n, 2.0);
        CHECK(symplectic_form(u, apply_j(u)) == doctest::Approx(u.squaredNorm()).epsilon(1e-12));
        CHECK(symplectic_form(u, w) ==
              doctest::Approx(u.dot(omega_matrix(n) * w)).epsilon(1e-12));
        CHECK(symplectic_form(u, w) == doctest::Approx(-symplectic_form(w, u)).epsilon(1e-12));
        // J^2 = -identity
        CHECK((apply_j(apply_j(u)) + u).norm() == doctest::Approx(0.0).epsilon(1e-15));
    }
    // apply_j_matrix agrees with apply_j column by column.
    Mat m = Mat::Random(4, 4);
    const Mat jm = apply_j_matrix(m);
    for (int c = 0; c < 4; ++c)
        CHECK((jm.col(c) - apply_j(m.col(c))).norm() == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("hamiltonian vector field convention: circle flow is clockwise") {
    // H = (q^2 + p^2 - 1)/2: X_H = (p, -q), so (1, 0) moves straight down.
    const SystemDescriptor sys = builtin_system("harmonic");
    const Vec x = vec2(1.0, 0.0);
    const Vec xdot = hamiltonian_vector_field(sys, x, 0.0);
    CHECK(xdot[0] == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(xdot[1] == doctest::Approx(-1.0).epsilon(1e-15));
    // dH = omega(., X_H)
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
        const Vec y = random_vec(rng, 2, 2.0);
        const Vec v = random_vec(rng, 2, 2.0);
        const double lhs = sys.grad_h(y, 0.0).dot(v);
        CHECK(lhs == doctest::Approx(symplectic_form(v, hamiltonian_vector_field(sys, y, 0.0)))
                         .epsilon(1e-12));
    }
}

TEST_CASE("liouville fields reproduce their primitive") {
    std::mt19937_64 rng(13);
    for (LambdaChoice lc : {LambdaChoice::Standard, LambdaChoice::Symmetric}) {
        for (int trial = 0; trial < 30; ++trial) {
            const Eigen::Index n = 1 + (trial % 3);
            const Vec x = random_vec(rng, 2 * n, 3.0);
            const Vec v = random_vec(rng, 2 * n, 3.0);
            // omega(Y(x), v) = lambda(x)(v)
            CHECK(symplectic_form(liouville_field(lc, x), v) ==
                  doctest::Approx(lambda_value(lc, x, v)).epsilon(1e-12));
        }
    }
    // Closed forms: standard p dq, symmetric (p dq - q dp)/2.
    const Vec x = vec4(1.0, 2.0, 3.0, 4.0);
    const Vec v = vec4(0.5, -1.0, 2.0, 0.25);
    CHECK(lambda_value(LambdaChoice::Standard, x, v) ==
          doctest::Approx(3.0 * 0.5 + 4.0 * -1.0).epsilon(1e-15));
    CHECK(lambda_value(LambdaChoice::Symmetric, x, v) ==
          doctest::Approx(0.5 * ((3.0 * 0.5 + 4.0 * -1.0) - (1.0 * 2.0 + 2.0 * 0.25)))
              .epsilon(1e-15));
    CHECK((liouville_field(LambdaChoice::Standard, x) - vec4(0, 0, 3, 4)).norm() ==
          doctest::Approx(0.0));
    CHECK((liouville_field(LambdaChoice::Symmetric, x) - 0.5 * x).norm() == doctest::Approx(0.0));
}

TEST_CASE("affine lagrangian frames") {
    // Non-orthonormal spans are orthonormalized and keep the same plane.
    Mat span(4, 2);
    span.col(0) = vec4(2.0, 0.0, 0.0, 0.0);
    span.col(1) = vec4(1.0, 1.0, 0.0, 0.0);  // q-plane of n = 2, skewed input
    const AffineLagrangian plane(Vec::Zero(4), span);
    CHECK((plane.tangent().transpose() * plane.tangent() - Mat::Identity(2, 2)).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK((plane.normal().transpose() * plane.tangent()).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));

    const Vec off = vec4(0.3, -0.7, 0.2, -0.4);
    CHECK(plane.gap(off) == doctest::Approx(std::hypot(0.2, 0.4)).epsilon(1e-12));
    CHECK(plane.gap(plane.embed(vec2(0.4, -2.0))) == doctest::Approx(0.0).epsilon(1e-12));
    // embed/project round trip
    const Vec u = vec2(1.25, -0.5);
    CHECK((plane.project_coords(plane.embed(u)) - u).norm() ==
          doctest::Approx(0.0).epsilon(1e-12));

    // A q-p mixed plane is not omega-isotropic.
    Mat bad(4, 2);
    bad.col(0) = vec4(1.0, 0.0, 0.0, 0.0);
    bad.col(1) = vec4(0.0, 0.0, 1.0, 0.0);  // omega(e_q1, e_p1) = 1
    CHECK_THROWS_AS(AffineLagrangian(Vec::Zero(4), bad), InvalidArgument);

    // Rank-deficient span.
    Mat dup(4, 2);
    dup.col(0) = vec4(1.0, 0.0, 0.0, 0.0);
    dup.col(1) = vec4(2.0, 0.0, 0.0, 0.0);
    CHECK_THROWS_AS(AffineLagrangian(Vec::Zero(4), dup), InvalidArgument);
}

TEST_CASE("exactness of the primitive on affine planes") {
    // {p = 0}: both primitives vanish on it.
    Mat qaxis(2, 1);
    qaxis(0, 0) = 1.0;
    qaxis(1, 0) = 0.0;
    const AffineLagrangian on_zero(vec2(0.0, 0.0), qaxis);
    CHECK(lagrangian_exactness_check(LambdaChoice::Standard, on_zero));
    CHECK(lagrangian_exactness_check(LambdaChoice::Symmetric, on_zero));

    // {p = 1}: lambda = p dq restricts to dq, not zero; same for symmetric.
    const AffineLagrangian shifted(vec2(0.0, 1.0), qaxis);
    CHECK_FALSE(lagrangian_exactness_check(LambdaChoice::Standard, shifted));
    CHECK_FALSE(lagrangian_exactness_check(LambdaChoice::Symmetric, shifted));

    // p-axis through the origin is exact for both.
    Mat paxis(2, 1);
    paxis(0, 0) = 0.0;
    paxis(1, 0) = 1.0;
    const AffineLagrangian vertical(vec2(0.0, 0.0), paxis);
    CHECK(lagrangian_exactness_check(LambdaChoice::Standard, vertical));
    CHECK(lagrangian_exactness_check(LambdaChoice::Symmetric, vertical));
}

TEST_CASE("builtin descriptors differentiate correctly") {
    // grad and hess against centered differences, dh_dmu against a mu
    // difference quotient, at fixed probe points per system.
    struct Probe {
        const char* name;
        std::map<std::string, double> params;
        Vec x;
        double mu;
    };
    std::vector<Probe> probes = {
        {"harmonic", {{"mu_coupling", 0.7}}, vec2(0.8, -0.6), 0.3},
        {"henon_heiles", {}, vec4(0.1, -0.2, 0.15, 0.05), 0.08},
        {"rtbp_planar", {{"mass_ratio", 1e-3}}, vec4(0.23, 0.1, -0.2, -2.0), 3.2},
        {"synthetic_fold", {}, vec2(0.6, 0.9), 0.2},
    };
    for (const Probe& pr : probes) {
        CAPTURE(pr.name);
        const SystemDescriptor sys = builtin_system(pr.name, pr.params);
        const Vec g = sys.grad_h(pr.x, pr.mu);
        const Vec g_fd = fd_gradient(sys, pr.x, pr.mu);
        CHECK((g - g_fd).norm() <= 1e-6 * std::max(1.0, g.norm()));

        const Mat hess = sys.hess_h(pr.x, pr.mu);
        CHECK((hess - hess.transpose()).norm() <= 1e-12 * std::max(1.0, hess.norm()));
        const double step = 1e-6;
        for (Eigen::Index i = 0; i < pr.x.size(); ++i) {
            Vec xp = pr.x, xm = pr.x;
            xp[i] += step;
            xm[i] -= step;
            const Vec col_fd = (sys.grad_h(xp, pr.mu) - sys.grad_h(xm, pr.mu)) / (2 * step);
            CHECK((hess.col(i) - col_fd).norm() <= 2e-5 * std::max(1.0, hess.norm()));
        }

        const double dmu = 1e-6;
        const double dh_fd = (sys.h(pr.x, pr.mu + dmu) - sys.h(pr.x, pr.mu - dmu)) / (2 * dmu);
        CHECK(sys.dh_dmu(pr.x, pr.mu) == doctest::Approx(dh_fd).epsilon(1e-6));

        // X_H = J grad H pointwise.
        CHECK((hamiltonian_vector_field(sys, pr.x, pr.mu) - apply_j(g)).norm() ==
              doctest::Approx(0.0).epsilon(1e-14));
    }
}

TEST_CASE("rtbp hamiltonian value against a literal rebuild") {
    const double m = 1e-3;
    const SystemDescriptor sys = builtin_system("rtbp_planar", {{"mass_ratio", m}});
    const Vec x = vec4(0.23, 0.11, -0.35, -2.05);
    const double mu = 3.3;
    const double q1 = x[0], q2 = x[1], p1 = x[2], p2 = x[3];
    const double r1 = std::hypot(q1 + m, q2);
    const double r2 = std::hypot(q1 - (1.0 - m), q2);
    const double expected = 0.5 * (p1 * p1 + p2 * p2) + q2 * p1 - q1 * p2 - (1.0 - m) / r1 -
                            m / r2 + 0.5 * mu;
    CHECK(sys.h(x, mu) == doctest::Approx(expected).epsilon(1e-15));
    // The separation monitor reports the distance to the nearer body.
    CHECK(sys.min_separation(x) == doctest::Approx(std::min(r1, r2)).epsilon(1e-15));
    CHECK(sys.collision_floor == 1e-3);
}

TEST_CASE("synthetic family: fixed start root and the level-set gate at the origin") {
    const SystemDescriptor sys = builtin_system("synthetic_fold");  // coupling 0.002
    const double eps = sys.params.at("coupling");
    CHECK(eps == doctest::Approx(0.002));
    for (double mu : {0.0, 0.2, 0.5, 0.8}) {
        // q = 1 is a potential root at every mu: H(1, 0) = 0 exactly.
        CHECK(std::abs(sys.h(vec2(1.0, 0.0), mu)) <= 1e-15);
        // The moving root sits at alpha = eps (mu - 1/2).
        const double alpha = eps * (mu - 0.5);
        CHECK(std::abs(sys.h(vec2(alpha, 0.0), mu)) <= 1e-12);
        // Origin value 5 alpha / 2: the sign gate the fold hinges on.
        CHECK(sys.h(vec2(0.0, 0.0), mu) == doctest::Approx(2.5 * alpha).epsilon(1e-12));
    }
    // Closed-form crossing parameter of the origin gate.
    CHECK(sys.h(vec2(0.0, 0.0), 0.5) == doctest::Approx(0.0));
}

TEST_CASE("builtin argument validation") {
    CHECK_THROWS_AS(builtin_system("no_such_system"), InvalidArgument);
    CHECK_THROWS_AS(builtin_system("harmonic", {{"bogus", 1.0}}), InvalidArgument);
    CHECK_THROWS_AS(builtin_system("rtbp_planar", {{"mass_ratio", 0.6}}), InvalidArgument);
    CHECK_THROWS_AS(builtin_system("rtbp_planar", {{"mass_ratio", 0.0}}), InvalidArgument);
    CHECK_THROWS_AS(builtin_system("synthetic_fold", {{"coupling", 0.0}}), InvalidArgument);
    CHECK_THROWS_AS(builtin_system("synthetic_fold", {{"coupling", 2.0}}), InvalidArgument);
    CHECK_THROWS_AS(builtin_system("henon_heiles", {{"mass_ratio", 0.1}}), InvalidArgument);

    const SystemDescriptor sys = builtin_system("harmonic");
    CHECK_THROWS_AS(hamiltonian_vector_field(sys, vec2(1.0, 0.0), 7.0), InvalidArgument);
}

TEST_CASE("contact function closed forms on the circle system") {
    SystemDescriptor sys = builtin_system("harmonic");
    // Symmetric: f = x . x / 2 everywhere, 1/2 on the unit circle.
    CHECK(contact_function(sys, vec2(1.0, 0.0), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(contact_function(sys, vec2(0.0, -1.0), 0.0) == doctest::Approx(0.5).epsilon(1e-15));
    const double s = std::sqrt(0.5);
    CHECK(contact_function(sys, vec2(s, s), 0.0) == doctest::Approx(0.5).epsilon(1e-12));

    // Standard: f = p^2, which dies on the p = 0 axis.
    sys.lambda_choice = LambdaChoice::Standard;
    CHECK(contact_function(sys, vec2(0.0, 1.0), 0.0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(contact_function(sys, vec2(1.0, 0.0), 0.0) == doctest::Approx(0.0));
}

TEST_CASE("contact_check: symmetric primitive passes with kappa 2, standard fails") {
    SamplerConfig cfg;
    cfg.box_lo = vec2(-1.2, -1.2);
    cfg.box_hi = vec2(1.2, 1.2);
    cfg.grid_per_dim = 11;  // odd: p = 0 candidates included
    cfg.random_samples = 64;
    cfg.min_accepted = 32;

    SystemDescriptor sys = builtin_system("harmonic");
    const ContactReport rep = contact_check(sys, 0.0, cfg);
    CHECK(rep.passed());
    CHECK(rep.sample_count >= 32);
    CHECK(rep.f_min == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rep.f_max == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(rep.kappa == doctest::Approx(2.0).epsilon(1e-9));

    sys.lambda_choice = LambdaChoice::Standard;
    const ContactReport bad = contact_check(sys, 0.0, cfg);
    CHECK_FALSE(bad.passed());
    CHECK(!bad.violations.empty());
    CHECK(std::isinf(bad.kappa));
    // The violations sit where the standard primitive degenerates: p near 0.
    for (const PhaseState& v : bad.violations) CHECK(std::abs(v.p()[0]) <= 1e-6);

    CHECK_THROWS_AS(contact_sweep(sys, {0.0}, cfg), ContactFailed);
}

TEST_CASE("contact_check: synthetic oval passes below the fold") {
    const SystemDescriptor sys = builtin_system("synthetic_fold");
    SamplerConfig cfg;
    cfg.box_lo = vec2(-0.1, -2.0);
    cfg.box_hi = vec2(1.1, 2.0);
    cfg.grid_per_dim = 15;
    cfg.random_samples = 128;
    cfg.min_accepted = 32;
    const ContactReport rep = contact_check(sys, 0.0, cfg);
    CHECK(rep.passed());
    CHECK(rep.kappa > 10.0);     // tight oval: the bound is genuinely large
    CHECK(rep.kappa < 1e5);
    CHECK(rep.f_min > 0.0);
}

TEST_CASE("contact_check: sampler guards") {
    const SystemDescriptor sys = builtin_system("harmonic");
    SamplerConfig cfg;
    cfg.box_lo = vec2(-1.0, -1.0);
    cfg.box_hi = vec2(1.0, 1.0);
    CHECK_THROWS_AS(contact_check(sys, 0.0, cfg), InvalidArgument);  // no candidates

    cfg.grid_per_dim = 5;
    cfg.min_accepted = 5;
    cfg.keep = [](const Vec&) { return false; };
    CHECK_THROWS_AS(contact_check(sys, 0.0, cfg), SamplingError);

    cfg.keep = nullptr;
    cfg.box_hi = vec2(-2.0, -2.0);  // empty box
    CHECK_THROWS_AS(contact_check(sys, 0.0, cfg), InvalidArgument);
}

TEST_CASE("mu range bookkeeping") {
    const SystemDescriptor harmonic = builtin_system("harmonic");
    CHECK(harmonic.mu_range.contains(0.0));
    CHECK(harmonic.mu_range.contains(-0.4));
    CHECK_FALSE(harmonic.mu_range.contains(1.5));
    const SystemDescriptor rtbp = builtin_system("rtbp_planar");
    CHECK(rtbp.mu_range.lo == doctest::Approx(2.0));
    CHECK(rtbp.mu_range.hi == doctest::Approx(5.0));
    const SystemDescriptor fold = builtin_system("synthetic_fold");
    CHECK(fold.mu_range.contains(0.5));
}
