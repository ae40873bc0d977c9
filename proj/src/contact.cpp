#include "chordfam/contact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace chordfam {

namespace {

/// Newton projection of x onto {H(., mu) = 0} along grad H.  Returns false
/// when the iteration stalls or leaves the finite range.
bool project_to_surface(const SystemDescriptor& sys, double mu, Vec& x, int max_iter,
                        double tol) {
    for (int it = 0; it < max_iter; ++it) {
        const double hv = sys.h(x, mu);
        if (std::abs(hv) <= tol) return true;
        const Vec g = sys.grad_h(x, mu);
        const double g2 = g.squaredNorm();
        if (!(g2 > 1e-24) || !std::isfinite(hv)) return false;
        Vec step = (hv / g2) * g;
        // Damp oversized corrections so candidates far off the surface do
        // not explode through the gradient's nonlinearity.
        const double cap = 1.0 + 0.5 * x.norm();
        if (step.norm() > cap) step *= cap / step.norm();
        x -= step;
        if (!x.allFinite()) return false;
    }
    return false;
}

}  // namespace

ContactReport contact_check(const SystemDescriptor& sys, double mu, const SamplerConfig& cfg) {
    sys.require_mu(mu);
    const Eigen::Index dim = 2 * sys.n;
    if (cfg.box_lo.size() != dim || cfg.box_hi.size() != dim)
        throw InvalidArgument("contact_check: sampler box must have dimension " +
                              std::to_string(dim));
    for (Eigen::Index i = 0; i < dim; ++i)
        if (!(cfg.box_lo[i] < cfg.box_hi[i]))
            throw InvalidArgument("contact_check: empty sampler box");
    if (cfg.grid_per_dim <= 0 && cfg.random_samples <= 0)
        throw InvalidArgument("contact_check: sampler draws no candidates");

    std::vector<Vec> candidates;
    if (cfg.grid_per_dim > 0) {
        const long total = static_cast<long>(
            std::llround(std::pow(double(cfg.grid_per_dim), double(dim))));
        if (total > 2000000)
            throw InvalidArgument("contact_check: grid of " + std::to_string(total) +
                                  " points is too large");
        candidates.reserve(static_cast<std::size_t>(total));
        Vec x(dim);
        std::vector<int> idx(static_cast<std::size_t>(dim), 0);
        for (long c = 0; c < total; ++c) {
            for (Eigen::Index i = 0; i < dim; ++i) {
                const double t = cfg.grid_per_dim == 1
                                     ? 0.5
                                     : double(idx[static_cast<std::size_t>(i)]) /
                                           double(cfg.grid_per_dim - 1);
                x[i] = cfg.box_lo[i] + t * (cfg.box_hi[i] - cfg.box_lo[i]);
            }
            candidates.push_back(x);
            for (Eigen::Index i = 0; i < dim; ++i) {
                auto& k = idx[static_cast<std::size_t>(i)];
                if (++k < cfg.grid_per_dim) break;
                k = 0;
            }
        }
    }
    if (cfg.random_samples > 0) {
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vec x(dim);
        for (int c = 0; c < cfg.random_samples; ++c) {
            for (Eigen::Index i = 0; i < dim; ++i)
                x[i] = cfg.box_lo[i] + unit(rng) * (cfg.box_hi[i] - cfg.box_lo[i]);
            candidates.push_back(x);
        }
    }

    ContactReport rep;
    rep.mu = mu;
    rep.requested = static_cast<int>(candidates.size());
    rep.f_min = std::numeric_limits<double>::infinity();
    rep.f_max = -std::numeric_limits<double>::infinity();

    for (Vec& x : candidates) {
        if (!project_to_surface(sys, mu, x, cfg.max_project_iter, cfg.project_tol)) continue;
        if (cfg.keep && !cfg.keep(x)) continue;
        if (sys.min_separation && sys.min_separation(x) < sys.collision_floor) continue;
        ++rep.sample_count;
        const double f = contact_function(sys, x, mu);
        rep.f_min = std::min(rep.f_min, f);
        rep.f_max = std::max(rep.f_max, f);
        if (f <= 0.0) rep.violations.emplace_back(x);
    }

    if (rep.sample_count < cfg.min_accepted)
        throw SamplingError("contact_check: only " + std::to_string(rep.sample_count) + " of " +
                            std::to_string(rep.requested) + " samples reached the surface (min " +
                            std::to_string(cfg.min_accepted) + ")");

    if (!rep.violations.empty())
        rep.kappa = std::numeric_limits<double>::infinity();
    else
        rep.kappa = std::max({1.0, rep.f_max, 1.0 / rep.f_min});
    return rep;
}

std::vector<ContactReport> contact_sweep(const SystemDescriptor& sys,
                                         const std::vector<double>& mu_values,
                                         const SamplerConfig& cfg) {
    std::vector<ContactReport> reports;
    reports.reserve(mu_values.size());
    for (double mu : mu_values) {
        reports.push_back(contact_check(sys, mu, cfg));
        if (!reports.back().passed()) {
            std::ostringstream msg;
            msg << sys.id << ": contact form fails at mu=" << mu << " (f_min="
                << reports.back().f_min << " over " << reports.back().sample_count
                << " samples)";
            throw ContactFailed(msg.str());
        }
    }
    return reports;
}

}  // namespace chordfam
