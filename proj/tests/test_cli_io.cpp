#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <chordfam/atlas_io.hpp>
#include <chordfam/chord.hpp>
#include <chordfam/config.hpp>
#include <chordfam/system.hpp>

namespace fs = std::filesystem;
using namespace chordfam;

namespace {

/// Fresh scratch directory per test-suite run; everything the CLI and the
/// writers produce lands under here.
const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "chordfam_cli_io_test";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string write_text(const std::string& name, const std::string& body) {
    const fs::path p = work_dir() / name;
    std::ofstream out(p);
    out << body;
    return p.string();
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const std::string& text) {
    return text.substr(0, text.find('\n'));
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

template <class F>
std::string thrown_message(F&& f) {
    try {
        f();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "(no exception)";
}

struct CliResult {
    int code = -1;
    std::string output;  ///< stdout and stderr, interleaved
};

/// Runs the installed binary with the given argument string, captures the
/// combined output, and decodes the exit status.
CliResult run_cli(const std::string& args) {
    static int counter = 0;
    const fs::path log = work_dir() / ("cli_" + std::to_string(counter++) + ".log");
    const std::string cmd =
        std::string(CHORDFAM_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    CliResult res;
    res.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    res.output = slurp(log);
    return res;
}

std::string shipped_config(const std::string& name) {
    return (fs::path(CHORDFAM_CONFIG_DIR) / name).string();
}

/// Two-row, two-event atlas exercising both u columns and awkward doubles.
FamilyAtlas sample_atlas() {
    FamilyAtlas a;
    a.system_id = "rtbp_planar";
    a.n = 2;
    AtlasRow r0;
    r0.mu = 0.1;  // not exactly representable
    r0.u = Vec(2);
    r0.u << 0.82, 0.92847063000000004;
    r0.tau = 3.1999810000000001;
    r0.action = 1.0 / 3.0;
    r0.sigma_min = 2.5e-17;
    r0.shooting_jac_det = -7.0711678118654755;
    AtlasRow r1;
    r1.mu = 0.30000000000000004;
    r1.u = Vec(2);
    r1.u << -1.0 / 7.0, 6.02e23;
    r1.tau = 3.1415926535897931;
    r1.action = -0.0001220703125;
    r1.sigma_min = 1e-12;
    r1.shooting_jac_det = 0.0;
    a.rows = {r0, r1};
    FamilyEvent fold;
    fold.kind = EventKind::Fold;
    fold.mu_estimate = 0.49999999999999994;
    fold.row_lo = 0;
    fold.row_hi = 1;
    fold.coincident_degeneracy = true;
    fold.note = "jacobian determinant sign change";
    FamilyEvent end;
    end.kind = EventKind::RangeEnd;
    end.mu_estimate = 0.30000000000000004;
    end.row_lo = 1;
    end.row_hi = 1;
    a.events = {fold, end};
    return a;
}

}  // namespace

TEST_CASE("config: minimal document gets the documented defaults") {
    const std::string p = write_text("minimal.json", R"({"system": {"name": "harmonic"}})");
    const RunConfig cfg = load_config(p);
    CHECK(cfg.system_name == "harmonic");
    CHECK(cfg.system.n == 1);
    CHECK(cfg.out_dir == "out");
    CHECK(cfg.prefix == "family");
    CHECK(!cfg.contact.has_value());
    CHECK(!cfg.find_chord.has_value());
    CHECK(!cfg.probe.has_value());
    CHECK(!cfg.gradient.has_value());
    CHECK(!cfg.has_continuation);
    CHECK(cfg.shoot.n_samples == 256);

    const std::string p2 = write_text("params.json", R"({
        "system": {"name": "harmonic", "params": {"mu_coupling": 0.25}},
        "output": {"dir": "elsewhere", "prefix": "run7"}
    })");
    const RunConfig cfg2 = load_config(p2);
    CHECK(cfg2.system.params.at("mu_coupling") == 0.25);
    CHECK(cfg2.out_dir == "elsewhere");
    CHECK(cfg2.prefix == "run7");
}

TEST_CASE("config: malformed documents are rejected with the offending path") {
    struct Bad {
        const char* name;
        const char* body;
        const char* needle;
    };
    const std::vector<Bad> table = {
        {"bad_top.json", R"({"system": {"name": "harmonic"}, "bogus": 1})",
         "$.bogus: unknown key"},
        {"bad_shoot.json", R"({"system": {"name": "harmonic"}, "shoot": {"bogus": 1}})",
         "$.shoot.bogus: unknown key"},
        {"bad_nosys.json", R"({"shoot": {}})", "$: system is required"},
        {"bad_noname.json", R"({"system": {"params": {}}})", "$.system: name is required"},
        {"bad_pair.json",
         R"({"system": {"name": "harmonic"}, "find_chord": {"mu": 0.0, "u": [1.0]}})",
         "u and tau must be given together"},
        {"bad_nomu.json", R"({"system": {"name": "harmonic"}, "find_chord": {"u": [1.0]}})",
         "$.find_chord: mu is required"},
        {"bad_noseed.json", R"({"system": {"name": "harmonic"}, "find_chord": {"mu": 0.0}})",
         "need either a (u, tau) guess or a scan"},
        {"bad_box.json", R"({"system": {"name": "harmonic"},
            "contact": {"box_lo": [0, 0, 0], "box_hi": [1, 1, 1], "mu_values": [0.0]}})",
         "$.contact: box dimensions must equal 2n = 2"},
        {"bad_nomuv.json", R"({"system": {"name": "harmonic"},
            "contact": {"box_lo": [0, 0], "box_hi": [1, 1]}})",
         "$.contact: mu_values is required"},
        {"bad_nomu1.json",
         R"({"system": {"name": "harmonic"}, "gradient_flow": {"heights": [1.0]}})",
         "$.gradient_flow: mu1 is required"},
        {"bad_mode.json",
         R"({"system": {"name": "harmonic"}, "gradient_flow": {"mu1": 0.5, "mode": "fancy"}})",
         "$.gradient_flow.mode: expected \"raw\" or \"stabilized\""},
        {"bad_window.json",
         R"({"system": {"name": "harmonic"}, "continue": {"mu_window": [1.0, 0.0]}})",
         "lo exceeds hi"},
        {"bad_ns.json", R"({"system": {"name": "harmonic"}, "shoot": {"n_samples": 1}})",
         "$.shoot.n_samples: need at least 2"},
        {"bad_ulen.json", R"({"system": {"name": "harmonic"},
            "find_chord": {"mu": 0.0, "u": [1.0, 2.0], "tau": 1.0}})",
         "$.find_chord.u: must have length n = 1"},
    };
    for (const Bad& b : table) {
        const std::string p = write_text(b.name, b.body);
        CHECK_THROWS_AS(load_config(p), InvalidArgument);
        const std::string msg = thrown_message([&] { load_config(p); });
        CHECK_MESSAGE(contains(msg, b.needle), b.name, ": ", msg);
    }

    const std::string syntax = write_text("bad_syntax.json", "{ this is not json");
    const std::string msg = thrown_message([&] { load_config(syntax); });
    CHECK(contains(msg, "config:"));
    CHECK(contains(msg, syntax));

    const std::string missing = thrown_message([] { load_config("/nonexistent/nope.json"); });
    CHECK(contains(missing, "cannot open"));
}

TEST_CASE("config: shoot settings propagate into continuation, probe, and census") {
    const std::string p = write_text("wired.json", R"({
        "system": {"name": "harmonic"},
        "shoot": {"n_samples": 48, "f_tol": 1e-09, "max_iter": 7},
        "continue": {},
        "probe": {"census": {}}
    })");
    const RunConfig cfg = load_config(p);
    CHECK(cfg.shoot.n_samples == 48);
    CHECK(cfg.shoot.f_tol == 1e-9);
    CHECK(cfg.shoot.max_iter == 7);
    CHECK(cfg.has_continuation);
    CHECK(cfg.continuation.shoot.n_samples == 48);
    CHECK(cfg.continuation.shoot.f_tol == 1e-9);
    REQUIRE(cfg.probe.has_value());
    CHECK(cfg.probe->opts.shoot.n_samples == 48);
    CHECK(cfg.probe->event_index == -1);
    REQUIRE(cfg.probe->census.has_value());
    CHECK(cfg.probe->census->shoot.n_samples == 48);
    CHECK(cfg.probe->census->delta == 1e-3);
    CHECK(cfg.probe->census->radius == 1e-2);
    CHECK(cfg.continuation.refine_events);
}

TEST_CASE("config: shipped configuration set parses") {
    const RunConfig harm = load_config(shipped_config("harmonic_family.json"));
    CHECK(harm.system_name == "harmonic");
    CHECK(harm.system.params.at("mu_coupling") == 0.7);
    REQUIRE(harm.contact.has_value());
    CHECK(harm.contact->mu_values.size() == 3);
    REQUIRE(harm.find_chord.has_value());
    CHECK(harm.find_chord->u->size() == 1);
    CHECK(harm.has_continuation);
    CHECK(harm.continuation.mu_window.lo == 0.0);
    CHECK(harm.continuation.mu_window.hi == 0.8);
    REQUIRE(harm.probe.has_value());
    CHECK(harm.probe->census.has_value());

    const RunConfig fold = load_config(shipped_config("synthetic_fold.json"));
    CHECK(fold.system_name == "synthetic_fold");
    REQUIRE(fold.probe.has_value());
    CHECK(fold.probe->opts.depth == 8);
    CHECK(fold.probe->opts.ratio == 0.25);
    REQUIRE(fold.probe->census.has_value());
    CHECK(fold.probe->census->delta == 1e-3);

    const RunConfig lo = load_config(shipped_config("rtbp_lower.json"));
    CHECK(lo.system.n == 2);
    CHECK(lo.continuation.direction == -1);
    CHECK(lo.continuation.mu_window.lo == 3.0);
    CHECK(lo.continuation.mu_window.hi == 3.4);
    CHECK(!lo.probe.has_value());

    const RunConfig up = load_config(shipped_config("rtbp_upper.json"));
    REQUIRE(up.probe.has_value());
    REQUIRE(up.probe->census.has_value());
    CHECK(up.probe->census->delta == 1e-5);
    CHECK(up.probe->census->radius == 0.1);

    const RunConfig st = load_config(shipped_config("synthetic_stretch.json"));
    REQUIRE(st.gradient.has_value());
    CHECK(st.gradient->mu0.value() == 0.1);
    CHECK(st.gradient->mu1 == 0.3);
    CHECK(st.gradient->heights.size() == 4);
    CHECK(st.gradient->sweep);
    CHECK(st.gradient->descent.mode == DescentMode::Stabilized);
}

TEST_CASE("atlas: write/read reproduces rows and events bit for bit") {
    const FamilyAtlas a = sample_atlas();
    const std::string p = (work_dir() / "round.atlas.txt").string();
    write_atlas(p, a);

    CHECK(first_line(slurp(p)) == "# chordfam-atlas v1");

    const FamilyAtlas b = read_atlas(p);
    CHECK(b.system_id == a.system_id);
    CHECK(b.n == a.n);
    REQUIRE(b.rows.size() == a.rows.size());
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        CHECK(b.rows[i].mu == a.rows[i].mu);
        CHECK(b.rows[i].tau == a.rows[i].tau);
        CHECK(b.rows[i].action == a.rows[i].action);
        CHECK(b.rows[i].sigma_min == a.rows[i].sigma_min);
        CHECK(b.rows[i].shooting_jac_det == a.rows[i].shooting_jac_det);
        REQUIRE(b.rows[i].u.size() == a.rows[i].u.size());
        for (Eigen::Index k = 0; k < a.rows[i].u.size(); ++k)
            CHECK(b.rows[i].u[k] == a.rows[i].u[k]);
    }
    REQUIRE(b.events.size() == a.events.size());
    for (std::size_t i = 0; i < a.events.size(); ++i) {
        CHECK(b.events[i].kind == a.events[i].kind);
        CHECK(b.events[i].mu_estimate == a.events[i].mu_estimate);
        CHECK(b.events[i].row_lo == a.events[i].row_lo);
        CHECK(b.events[i].row_hi == a.events[i].row_hi);
        CHECK(b.events[i].coincident_degeneracy == a.events[i].coincident_degeneracy);
        CHECK(b.events[i].note == a.events[i].note);
    }

    // a second write of the re-read atlas is byte-identical
    const std::string p2 = (work_dir() / "round2.atlas.txt").string();
    write_atlas(p2, b);
    CHECK(slurp(p) == slurp(p2));
}

TEST_CASE("atlas: malformed files are rejected") {
    struct Bad {
        const char* name;
        const char* body;
    };
    const std::vector<Bad> table = {
        {"bad_header.atlas", "# something else v9\nn 1\n"},
        {"row_before_n.atlas", "# chordfam-atlas v1\nrow 0 1 2 3 4 5\n"},
        {"colcount.atlas", "# chordfam-atlas v1\nsystem x\nn 1\nrow 1 2 3\n"},
        {"unknown_tag.atlas", "# chordfam-atlas v1\nn 1\nfrobnicate 1\n"},
        {"bad_number.atlas", "# chordfam-atlas v1\nn 1\nrow a b c d e f\n"},
        {"bad_event.atlas", "# chordfam-atlas v1\nn 1\nevent comet 0.5 1 2 0\n"},
    };
    for (const Bad& b : table) {
        const std::string p = write_text(b.name, b.body);
        CHECK_THROWS_AS(read_atlas(p), InvalidArgument);
    }
    // diagnostics carry file and line
    const std::string p = write_text("diag.atlas", "# chordfam-atlas v1\nsystem x\nn 1\nrow 1 2 3\n");
    const std::string msg = thrown_message([&] { read_atlas(p); });
    CHECK(contains(msg, p));
    CHECK(contains(msg, ":4"));
}

TEST_CASE("atlas: family csv and gnuplot script") {
    const FamilyAtlas a = sample_atlas();
    const fs::path dir = work_dir() / "plots";
    fs::create_directories(dir);
    const std::string csv = (dir / "alpha_family.csv").string();
    write_family_csv(csv, a);

    std::ifstream in(csv);
    std::string header;
    std::getline(in, header);
    CHECK(header == "mu,start_coordinate,tau,action,sigma_min");
    std::string line;
    std::vector<std::string> data;
    while (std::getline(in, line))
        if (!line.empty()) data.push_back(line);
    REQUIRE(data.size() == a.rows.size());
    // numbers survive a text round trip exactly
    double mu = 0, u0 = 0, tau = 0, act = 0, sig = 0;
    REQUIRE(std::sscanf(data[0].c_str(), "%lf,%lf,%lf,%lf,%lf", &mu, &u0, &tau, &act, &sig) == 5);
    CHECK(mu == a.rows[0].mu);
    CHECK(u0 == a.rows[0].u[0]);
    CHECK(tau == a.rows[0].tau);
    CHECK(act == a.rows[0].action);
    CHECK(sig == a.rows[0].sigma_min);

    const std::string gp = (dir / "alpha.gp").string();
    write_gnuplot_script(gp, {csv, (dir / "beta_family.csv").string()});
    const std::string script = slurp(gp);
    CHECK(contains(script, "set datafile separator ','"));
    CHECK(contains(script, "pngcairo"));
    CHECK(contains(script, "alpha_family.csv"));
    CHECK(contains(script, "alpha_family_branch.png"));
    CHECK(contains(script, "alpha_family_tau.png"));
    CHECK(contains(script, "alpha_family_action.png"));
    CHECK(contains(script, "beta_family.csv"));
    // the script must reference csv files relative to its own directory
    CHECK(!contains(script, dir.string()));
}

TEST_CASE("chord records: json round trip and system guard") {
    const SystemDescriptor sys = builtin_system("harmonic", {});
    Vec u0(1);
    u0 << 1.0;
    const Chord c = shoot(sys, 0.0, u0, 1.5);

    const std::string p = (work_dir() / "chord.json").string();
    write_chord_json(p, sys.id, c);
    const Chord r = read_chord_json(p, "harmonic");
    CHECK(r.mu == c.mu);
    CHECK(r.tau == c.tau);
    CHECK(r.residual_norm == c.residual_norm);
    CHECK(r.boundary_gap == c.boundary_gap);
    REQUIRE(r.u.size() == 1);
    CHECK(r.u[0] == c.u[0]);
    REQUIRE(r.samples.size() == c.samples.size());
    for (Eigen::Index k = 0; k < c.samples.front().z.size(); ++k) {
        CHECK(r.samples.front().z[k] == c.samples.front().z[k]);
        CHECK(r.samples.back().z[k] == c.samples.back().z[k]);
    }

    CHECK_NOTHROW(read_chord_json(p, ""));  // empty id accepts any system
    CHECK_THROWS_AS(read_chord_json(p, "rtbp_planar"), InvalidArgument);

    const std::string bare = (work_dir() / "chord_bare.json").string();
    write_chord_json(bare, sys.id, c, /*with_samples=*/false);
    CHECK(read_chord_json(bare, "harmonic").samples.empty());

    const std::string junk = write_text("chord_junk.json", R"({"foo": 1})");
    CHECK_THROWS_AS(read_chord_json(junk, ""), InvalidArgument);
}

TEST_CASE("cli: argument and configuration failures exit 2") {
    CHECK(run_cli("").code == 2);

    const CliResult help = run_cli("--help");
    CHECK(help.code == 0);
    CHECK(contains(help.output, "contact-check"));
    CHECK(contains(help.output, "find-chord"));
    CHECK(contains(help.output, "continue"));
    CHECK(contains(help.output, "gradient-flow"));

    CHECK(run_cli("frobnicate").code == 2);
    CHECK(run_cli("continue").code == 2);  // --config is required
    CHECK(run_cli("continue --config /definitely/not/here.json").code == 2);

    const std::string bad = write_text("cli_bad_key.json",
                                       R"({"system": {"name": "harmonic"}, "bogus": 1})");
    const CliResult r = run_cli("contact-check --config " + bad);
    CHECK(r.code == 2);
    CHECK(contains(r.output, "unknown key"));

    // a config without the section the command needs is a usage error too
    const std::string nosec = write_text("cli_nosec.json", R"({"system": {"name": "harmonic"}})");
    CHECK(run_cli("contact-check --config " + nosec).code == 2);
    CHECK(run_cli("gradient-flow --config " + nosec).code == 2);
}

TEST_CASE("cli: contact-check distinguishes passing and failing parameters") {
    const fs::path dir = work_dir() / "cc";
    const std::string pass = write_text("cli_cc_pass.json", R"({
        "system": {"name": "harmonic"},
        "contact": {"box_lo": [-1.8, -1.8], "box_hi": [1.8, 1.8],
                    "grid_per_dim": 9, "mu_values": [0.0, 0.4]},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "hp"}
    })");
    const CliResult ok = run_cli("contact-check --config " + pass);
    CHECK(ok.code == 0);
    CHECK(contains(ok.output, "PASS"));
    CHECK(!contains(ok.output, "FAIL"));
    CHECK(fs::exists(dir / "hp_contact.txt"));
    CHECK(contains(slurp(dir / "hp_contact.txt"), "PASS"));

    const std::string fail = write_text("cli_cc_fail.json", R"({
        "system": {"name": "synthetic_fold"},
        "contact": {"box_lo": [-0.05, -1.5], "box_hi": [1.05, 1.5],
                    "grid_per_dim": 21, "mu_values": [0.8]},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "sf"}
    })");
    const CliResult bad = run_cli("contact-check --config " + fail);
    CHECK(bad.code == 1);
    CHECK(contains(bad.output, "FAIL"));
    CHECK(contains(slurp(dir / "sf_contact.txt"), "FAIL"));
}

TEST_CASE("cli: find-chord writes a re-readable record") {
    const fs::path dir = work_dir() / "fc";
    const std::string guess = write_text("cli_fc_guess.json", R"({
        "system": {"name": "harmonic"},
        "find_chord": {"mu": 0.0, "u": [1.0], "tau": 1.5},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "g"}
    })");
    const CliResult r = run_cli("find-chord --config " + guess);
    CHECK(r.code == 0);
    CHECK(contains(r.output, "chord mu=0"));
    const Chord c = read_chord_json((dir / "g_chord.json").string(), "harmonic");
    CHECK(std::abs(c.tau - 1.5707963267948966) < 1e-9);
    CHECK(c.residual_norm < 1e-9);

    const std::string scan = write_text("cli_fc_scan.json", R"({
        "system": {"name": "harmonic"},
        "find_chord": {"mu": 0.0, "scan": {"u_lo": [0.2], "u_hi": [1.6], "grid": [9]}},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "s"}
    })");
    const CliResult rs = run_cli("find-chord --config " + scan);
    CHECK(rs.code == 0);
    const Chord cs = read_chord_json((dir / "s_chord.json").string(), "harmonic");
    CHECK(cs.tau > 0.2);
    CHECK(cs.residual_norm < 1e-8);

    // --out overrides the configured directory
    const fs::path other = work_dir() / "fc_other";
    CHECK(run_cli("find-chord --config " + guess + " --out " + other.string()).code == 0);
    CHECK(fs::exists(other / "g_chord.json"));

    // --seed-file replaces the find_chord section
    const std::string noseed = write_text("cli_fc_seed.json", R"({
        "system": {"name": "harmonic"},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "re"}
    })");
    const CliResult rf = run_cli("find-chord --config " + noseed + " --seed-file " +
                                 (dir / "g_chord.json").string());
    CHECK(rf.code == 0);
    CHECK(fs::exists(dir / "re_chord.json"));
}

TEST_CASE("cli: continue writes atlas, csv, script, and probe report") {
    const fs::path dir = work_dir() / "cont";
    const std::string cfg = write_text("cli_cont.json", R"({
        "system": {"name": "harmonic"},
        "shoot": {"n_samples": 64},
        "find_chord": {"mu": 0.1, "u": [1.0], "tau": 1.5707963267948966},
        "continue": {"mu_window": [0.1, 0.4]},
        "probe": {"depth": 4, "delta": 0.01, "ratio": 0.5, "census": {}},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "fam"}
    })");
    const CliResult r = run_cli("continue --config " + cfg);
    CHECK(r.code == 0);
    CHECK(contains(r.output, "family rows="));
    CHECK(contains(r.output, "event range_end"));
    CHECK(contains(r.output, "probe mu_limit=0.4"));
    CHECK(contains(r.output, "census below"));

    CHECK(fs::exists(dir / "fam_atlas.txt"));
    CHECK(fs::exists(dir / "fam.csv"));
    CHECK(fs::exists(dir / "fam.gp"));
    CHECK(fs::exists(dir / "fam_probe.txt"));

    const FamilyAtlas atlas = read_atlas((dir / "fam_atlas.txt").string());
    CHECK(atlas.system_id == "harmonic");
    CHECK(atlas.n == 1);
    CHECK(atlas.rows.size() >= 5);
    bool has_range_end = false;
    for (const FamilyEvent& e : atlas.events)
        if (e.kind == EventKind::RangeEnd && std::abs(e.mu_estimate - 0.4) < 1e-6)
            has_range_end = true;
    CHECK(has_range_end);
    // the default harmonic well does not move with mu: every member is the
    // quarter turn with action pi/4
    for (const AtlasRow& row : atlas.rows) {
        CHECK(row.mu >= 0.1 - 1e-9);
        CHECK(row.mu <= 0.41);  // the event bracket keeps one row past the window
        CHECK(std::abs(row.tau - 1.5707963267948966) < 1e-8);
        CHECK(std::abs(row.action - 0.78539816339744828) < 5e-8);
    }

    const std::string probe_report = slurp(dir / "fam_probe.txt");
    CHECK(contains(probe_report, "limit mu"));
    CHECK(contains(probe_report, "limit tau"));

    // a probe aimed at a nonexistent event is a reported failure
    const std::string cfg99 = write_text("cli_cont99.json", R"({
        "system": {"name": "harmonic"},
        "shoot": {"n_samples": 64},
        "find_chord": {"mu": 0.1, "u": [1.0], "tau": 1.5707963267948966},
        "continue": {"mu_window": [0.1, 0.15]},
        "probe": {"event_index": 99},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "none"}
    })");
    const CliResult r99 = run_cli("continue --config " + cfg99);
    CHECK(r99.code == 1);
    CHECK(contains(r99.output, "no matching event"));
}

TEST_CASE("cli: gradient-flow sweep, single descent, and raw divergence") {
    const fs::path dir = work_dir() / "gf";
    const std::string sweep = write_text("cli_gf_sweep.json", R"({
        "system": {"name": "synthetic_fold"},
        "shoot": {"n_samples": 64},
        "find_chord": {"mu": 0.1, "u": [1.0], "tau": 1.16},
        "gradient_flow": {"mu0": 0.1, "mu1": 0.2, "heights": [0.5], "sweep": true},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "sw"}
    })");
    const CliResult rs = run_cli("gradient-flow --config " + sweep);
    CHECK(rs.code == 0);
    CHECK(contains(rs.output, "outcome=reached_end"));
    CHECK(!contains(rs.output, "ESCAPED"));
    const std::string stretch = slurp(dir / "sw_stretch.csv");
    CHECK(first_line(stretch) ==
          "height,outcome,mu_reached,final_sigma,final_action,final_grad_norm,"
          "plateau_grad_min,dist_from_seed,max_dist_plateau,escaped,energy");
    CHECK(contains(stretch, "reached_end"));

    const std::string single = write_text("cli_gf_single.json", R"({
        "system": {"name": "harmonic"},
        "shoot": {"n_samples": 64},
        "find_chord": {"mu": 0.0, "u": [1.0], "tau": 1.5707963267948966},
        "gradient_flow": {"mu0": 0.0, "mu1": 0.0, "heights": [0.0], "lead_in": 40.0,
                          "sweep": false, "mode": "stabilized"},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "si"}
    })");
    const CliResult r1 = run_cli("gradient-flow --config " + single);
    CHECK(r1.code == 0);
    CHECK(contains(r1.output, "flow outcome=converged"));
    CHECK(first_line(slurp(dir / "si_flow.csv")) ==
          "s,mu,sigma,action,grad_norm,energy,dist_from_start");

    const std::string raw = write_text("cli_gf_raw.json", R"({
        "system": {"name": "harmonic"},
        "shoot": {"n_samples": 64},
        "find_chord": {"mu": 0.0, "u": [1.0], "tau": 1.5707963267948966},
        "gradient_flow": {"mu0": 0.0, "mu1": 0.0, "heights": [0.0], "lead_in": 40.0,
                          "sweep": false, "mode": "raw"},
        "output": {"dir": ")" + dir.string() + R"(", "prefix": "rw"}
    })");
    const CliResult r3 = run_cli("gradient-flow --config " + raw);
    CHECK(r3.code == 3);
    CHECK(contains(r3.output, "solver error"));
    CHECK(fs::exists(dir / "rw_flow.csv"));  // the trace is written before the failure raise
}
