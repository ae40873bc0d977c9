#include "chordfam/cli_commands.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "chordfam/atlas_io.hpp"
#include "chordfam/config.hpp"
#include "chordfam/rabinowitz.hpp"

namespace chordfam {

namespace {

namespace fs = std::filesystem;

std::string out_path(const RunConfig& cfg, const std::string& suffix) {
    return (fs::path(cfg.out_dir) / (cfg.prefix + suffix)).string();
}

/// Seed resolution shared by find-chord, continue, and gradient-flow: an
/// explicit record file wins, then the configured guess, then a scan.
Chord resolve_seed(const RunConfig& cfg, const CliArgs& args) {
    if (!args.seed_path.empty()) {
        const Chord rec = read_chord_json(args.seed_path, cfg.system.id);
        return shoot(cfg.system, rec.mu, rec.u, rec.tau, cfg.shoot);
    }
    if (!cfg.find_chord)
        throw InvalidArgument("no seed: give --seed-file or a find_chord section");
    const FindChordSpec& f = *cfg.find_chord;
    if (f.u) return shoot(cfg.system, f.mu, *f.u, *f.tau, cfg.shoot);

    const ScanSpec& scan = *f.scan;
    const Eigen::Index n = cfg.system.n;
    Vec dir = scan.energy_dir;
    if (dir.size() == 0) {
        dir = Vec::Zero(n);
        dir[n - 1] = 1.0;
    }
    // Cartesian start grid, slid onto the energy surface.
    long total = 1;
    for (int g : scan.grid) total *= std::max(1, g);
    std::vector<Vec> starts;
    std::vector<int> idx(std::size_t(n), 0);
    for (long c = 0; c < total; ++c) {
        Vec u(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const int g = std::max(1, scan.grid[std::size_t(i)]);
            const double t = g == 1 ? 0.5 : double(idx[std::size_t(i)]) / double(g - 1);
            u[i] = scan.u_lo[i] + t * (scan.u_hi[i] - scan.u_lo[i]);
        }
        try {
            starts.push_back(project_to_energy(cfg.system, f.mu, u, dir));
        } catch (const Error&) {
            // Starts the surface does not reach are dropped silently.
        }
        for (Eigen::Index i = 0; i < n; ++i) {
            auto& k = idx[std::size_t(i)];
            if (++k < std::max(1, scan.grid[std::size_t(i)])) break;
            k = 0;
        }
    }
    if (starts.empty()) throw NoConvergence("scan: no start reaches the energy surface");
    Mat grid(Eigen::Index(starts.size()), n);
    for (std::size_t r = 0; r < starts.size(); ++r) grid.row(Eigen::Index(r)) = starts[r];

    const auto hits = scan_crossings(cfg.system, f.mu, grid, scan.t_max, cfg.shoot.integ);
    int tried = 0;
    for (const ScanHit& hit : hits) {
        if (tried++ >= scan.max_hits) break;
        try {
            return shoot(cfg.system, f.mu, hit.u, hit.tau, cfg.shoot);
        } catch (const Error&) {
        }
    }
    throw NoConvergence("scan: no crossing seed converged");
}

int cmd_contact_check(const RunConfig& cfg, const CliArgs& args) {
    if (!cfg.contact) throw InvalidArgument("contact-check needs a contact section");
    bool all_pass = true;
    std::ofstream report(out_path(cfg, "_contact.txt"));
    for (double mu : cfg.contact->mu_values) {
        const ContactReport rep = contact_check(cfg.system, mu, cfg.contact->sampler);
        std::ostringstream line;
        line << "mu=" << mu << " samples=" << rep.sample_count << " f_min=" << rep.f_min
             << " f_max=" << rep.f_max << " kappa=" << rep.kappa << ' '
             << (rep.passed() ? "PASS" : "FAIL");
        std::cout << line.str() << "\n";
        report << line.str() << "\n";
        if (args.verbose)
            for (const PhaseState& v : rep.violations)
                std::cout << "  violation at " << v.z.transpose() << "\n";
        all_pass = all_pass && rep.passed();
    }
    return all_pass ? 0 : 1;
}

int cmd_find_chord(const RunConfig& cfg, const CliArgs& args) {
    const Chord chord = resolve_seed(cfg, args);
    const NondegReport nd = nondegeneracy(cfg.system, chord,
                                          {cfg.continuation.sigma_threshold, cfg.shoot.integ});
    const double act = action(cfg.system, chord);
    std::cout << "chord mu=" << chord.mu << " tau=" << chord.tau << " action=" << act
              << " sigma_min=" << nd.sigma_min << " jac_det=" << nd.shooting_jac_det
              << " residual=" << chord.residual_norm << " boundary_gap=" << chord.boundary_gap
              << (nd.degenerate ? " DEGENERATE" : "") << "\n";
    if (args.verbose) std::cout << "  u = " << chord.u.transpose() << "\n";
    write_chord_json(out_path(cfg, "_chord.json"), cfg.system.id, chord);
    return 0;
}

int pick_event(const FamilyAtlas& atlas, int wanted) {
    if (wanted >= 0)
        return wanted < int(atlas.events.size()) ? wanted : -1;
    for (std::size_t i = 0; i < atlas.events.size(); ++i) {
        const EventKind k = atlas.events[i].kind;
        if (k == EventKind::Fold || k == EventKind::Degeneracy || k == EventKind::Stall)
            return int(i);
    }
    return atlas.events.empty() ? -1 : 0;
}

int cmd_continue(const RunConfig& cfg, const CliArgs& args) {
    if (!cfg.has_continuation) throw InvalidArgument("continue needs a continue section");
    const Chord seed = resolve_seed(cfg, args);
    const FamilyAtlas atlas = continue_family(cfg.system, seed, cfg.continuation);

    write_atlas(out_path(cfg, "_atlas.txt"), atlas);
    write_family_csv(out_path(cfg, ".csv"), atlas);
    write_gnuplot_script(out_path(cfg, ".gp"), {out_path(cfg, ".csv")});

    std::cout << "family rows=" << atlas.rows.size() << " mu in ["
              << std::min_element(atlas.rows.begin(), atlas.rows.end(),
                                  [](auto& a, auto& b) { return a.mu < b.mu; })
                     ->mu
              << ", "
              << std::max_element(atlas.rows.begin(), atlas.rows.end(),
                                  [](auto& a, auto& b) { return a.mu < b.mu; })
                     ->mu
              << "]\n";
    for (const FamilyEvent& e : atlas.events)
        std::cout << "event " << event_kind_name(e.kind) << " mu=" << e.mu_estimate
                  << " rows=" << e.row_lo << ":" << e.row_hi
                  << (e.coincident_degeneracy ? " coincident-degeneracy" : "")
                  << (e.note.empty() ? "" : " " + e.note) << "\n";

    if (!cfg.probe) return 0;
    const int ei = pick_event(atlas, cfg.probe->event_index);
    if (ei < 0) {
        std::cout << "probe requested but the family has no matching event\n";
        return 1;
    }
    const OmegaProbe probe = omega_probe(cfg.system, atlas, atlas.events[std::size_t(ei)],
                                         cfg.probe->opts);
    std::ofstream rep(out_path(cfg, "_probe.txt"));
    rep << "limit mu " << probe.mu_limit << "\n";
    rep << "sqrt_gap " << (probe.sqrt_gap ? 1 : 0) << "\n";
    for (std::size_t k = 0; k < probe.chords.size(); ++k)
        rep << "level " << k << " mu " << probe.mus[k] << " tau " << probe.chords[k].tau
            << " action " << probe.actions[k] << " jac_det " << probe.jac_dets[k] << "\n";
    for (std::size_t k = 0; k < probe.distances.size(); ++k)
        rep << "distance " << k << " " << probe.distances[k] << "\n";
    rep << "action_limit " << probe.action_limit << " spread " << probe.action_spread << "\n";
    rep << "limit tau " << probe.limit_chord.tau << " sigma_min "
        << probe.limit_report.sigma_min << " degenerate " << (probe.limit_degenerate ? 1 : 0)
        << "\n";
    std::cout << "probe mu_limit=" << probe.mu_limit << " action_limit=" << probe.action_limit
              << " spread=" << probe.action_spread
              << " limit_degenerate=" << (probe.limit_degenerate ? 1 : 0) << "\n";
    if (args.verbose)
        for (std::size_t k = 0; k < probe.contraction.size(); ++k)
            std::cout << "  contraction[" << k << "]=" << probe.contraction[k] << "\n";

    if (cfg.probe->census) {
        const CensusResult census = two_sided_census(cfg.system, probe, *cfg.probe->census);
        std::cout << "census below mu=" << census.mu_below << " count=" << census.count_below
                  << "; above mu=" << census.mu_above << " count=" << census.count_above
                  << "\n";
        rep << "census_below " << census.count_below << "\ncensus_above "
            << census.count_above << "\n";
    }
    return 0;
}

int cmd_gradient_flow(const RunConfig& cfg, const CliArgs& args) {
    if (!cfg.gradient) throw InvalidArgument("gradient-flow needs a gradient_flow section");
    const GradientFlowSpec& spec = *cfg.gradient;
    Chord seed = resolve_seed(cfg, args);
    if (spec.mu0 && std::abs(*spec.mu0 - seed.mu) > 1e-12)
        seed = shoot(cfg.system, *spec.mu0, seed.u, seed.tau, cfg.shoot);

    if (spec.sweep) {
        StretchOptions so;
        so.heights = spec.heights;
        so.lead_in = spec.lead_in;
        so.escape_radius = spec.escape_radius;
        so.descent = spec.descent;
        const StretchReport report = stretching_experiment(cfg.system, seed, spec.mu1, so);
        write_stretch_csv(out_path(cfg, "_stretch.csv"), report);
        for (const StretchRow& r : report.rows)
            std::cout << "R=" << r.height << " outcome=" << descent_outcome_name(r.outcome)
                      << " mu_reached=" << r.mu_reached << " dist=" << r.dist_from_seed
                      << " plateau_grad_min=" << r.plateau_grad_min
                      << " energy=" << r.energy << (r.escaped ? " ESCAPED" : "") << "\n";
        return 0;
    }

    MuSchedule sched{seed.mu, spec.mu1, CutoffProfile(spec.heights.front())};
    DescentOptions d = spec.descent;
    d.s_start = -(sched.beta.support_radius() + spec.lead_in);
    d.s_end = 0.0;
    const DescentRun run = descend(cfg.system, arc_from_chord(seed), sched, d);
    write_descent_csv(out_path(cfg, "_flow.csv"), run);
    run.raise_if_failed();

    const double dist = arc_distance(run.final_arc, arc_from_chord(seed));
    const bool escaped = dist > spec.escape_radius;
    std::cout << "flow outcome=" << descent_outcome_name(run.outcome)
              << " s=" << run.final_s << " sigma=" << run.final_arc.sigma
              << " dist_from_seed=" << dist << " energy=" << run.energy
              << (escaped ? " ESCAPED" : "") << "\n";
    if (run.outcome != DescentOutcome::Converged || escaped) return 1;
    return 0;
}

}  // namespace

int run_command(const CliArgs& args) {
    try {
        if (args.config_path.empty()) {
            std::cerr << "error: --config is required\n";
            return 2;
        }
        RunConfig cfg = load_config(args.config_path);
        if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
        std::error_code ec;
        fs::create_directories(cfg.out_dir, ec);
        if (ec && !fs::is_directory(cfg.out_dir)) {
            std::cerr << "error: cannot create output dir '" << cfg.out_dir << "'\n";
            return 2;
        }

        if (args.command == "contact-check") return cmd_contact_check(cfg, args);
        if (args.command == "find-chord") return cmd_find_chord(cfg, args);
        if (args.command == "continue") return cmd_continue(cfg, args);
        if (args.command == "gradient-flow") return cmd_gradient_flow(cfg, args);
        std::cerr << "error: unknown command '" << args.command << "'\n";
        return 2;
    } catch (const InvalidArgument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const ContactFailed& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 1;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    }
}

}  // namespace chordfam
