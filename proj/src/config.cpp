#include "chordfam/config.hpp"

#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace chordfam {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw InvalidArgument("config: " + path + ": " + what);
}

void expect_keys(const json& j, const std::string& path, std::set<std::string> allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (const auto& item : j.items())
        if (!allowed.count(item.key())) fail(path + "." + item.key(), "unknown key");
}

double get_num(const json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) fail(path, "expected an integer");
    return j.get<int>();
}

bool get_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) fail(path, "expected a boolean");
    return j.get<bool>();
}

std::string get_str(const json& j, const std::string& path) {
    if (!j.is_string()) fail(path, "expected a string");
    return j.get<std::string>();
}

Vec get_vec(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
    Vec v(j.size());
    for (std::size_t i = 0; i < j.size(); ++i) v[Eigen::Index(i)] = get_num(j[i], path);
    return v;
}

std::vector<double> get_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) fail(path, "expected a nonempty array of numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(get_num(j[i], path));
    return v;
}

Interval get_interval(const json& j, const std::string& path) {
    if (!j.is_array() || j.size() != 2) fail(path, "expected [lo, hi]");
    Interval iv{get_num(j[0], path), get_num(j[1], path)};
    if (!(iv.lo <= iv.hi)) fail(path, "lo exceeds hi");
    return iv;
}

ShootOptions parse_shoot(const json& j, const std::string& path) {
    expect_keys(j, path, {"f_tol", "max_iter", "tau_floor", "n_samples", "rtol", "atol"});
    ShootOptions o;
    if (j.contains("f_tol")) o.f_tol = get_num(j["f_tol"], path + ".f_tol");
    if (j.contains("max_iter")) o.max_iter = get_int(j["max_iter"], path + ".max_iter");
    if (j.contains("tau_floor")) o.tau_floor = get_num(j["tau_floor"], path + ".tau_floor");
    if (j.contains("n_samples")) o.n_samples = get_int(j["n_samples"], path + ".n_samples");
    if (j.contains("rtol")) o.integ.rtol = get_num(j["rtol"], path + ".rtol");
    if (j.contains("atol")) o.integ.atol = get_num(j["atol"], path + ".atol");
    if (o.n_samples < 2) fail(path + ".n_samples", "need at least 2");
    return o;
}

ContactSpec parse_contact(const json& j, const std::string& path) {
    expect_keys(j, path,
                {"box_lo", "box_hi", "grid_per_dim", "random_samples", "seed", "min_accepted",
                 "mu_values"});
    ContactSpec c;
    if (!j.contains("box_lo") || !j.contains("box_hi"))
        fail(path, "box_lo and box_hi are required");
    c.sampler.box_lo = get_vec(j["box_lo"], path + ".box_lo");
    c.sampler.box_hi = get_vec(j["box_hi"], path + ".box_hi");
    if (j.contains("grid_per_dim"))
        c.sampler.grid_per_dim = get_int(j["grid_per_dim"], path + ".grid_per_dim");
    if (j.contains("random_samples"))
        c.sampler.random_samples = get_int(j["random_samples"], path + ".random_samples");
    if (j.contains("seed"))
        c.sampler.seed = std::uint64_t(get_int(j["seed"], path + ".seed"));
    if (j.contains("min_accepted"))
        c.sampler.min_accepted = get_int(j["min_accepted"], path + ".min_accepted");
    if (!j.contains("mu_values")) fail(path, "mu_values is required");
    c.mu_values = get_list(j["mu_values"], path + ".mu_values");
    return c;
}

ScanSpec parse_scan(const json& j, const std::string& path) {
    expect_keys(j, path, {"u_lo", "u_hi", "grid", "t_max", "energy_dir", "max_hits"});
    ScanSpec s;
    if (!j.contains("u_lo") || !j.contains("u_hi") || !j.contains("grid"))
        fail(path, "u_lo, u_hi, and grid are required");
    s.u_lo = get_vec(j["u_lo"], path + ".u_lo");
    s.u_hi = get_vec(j["u_hi"], path + ".u_hi");
    for (const auto& g : j["grid"]) s.grid.push_back(get_int(g, path + ".grid"));
    if (j.contains("t_max")) s.t_max = get_num(j["t_max"], path + ".t_max");
    if (j.contains("energy_dir")) s.energy_dir = get_vec(j["energy_dir"], path + ".energy_dir");
    if (j.contains("max_hits")) s.max_hits = get_int(j["max_hits"], path + ".max_hits");
    if (s.u_lo.size() != s.u_hi.size() || std::size_t(s.u_lo.size()) != s.grid.size())
        fail(path, "u_lo, u_hi, and grid must agree in length");
    return s;
}

FindChordSpec parse_find(const json& j, const std::string& path) {
    expect_keys(j, path, {"mu", "u", "tau", "scan"});
    FindChordSpec f;
    if (!j.contains("mu")) fail(path, "mu is required");
    f.mu = get_num(j["mu"], path + ".mu");
    if (j.contains("u")) f.u = get_vec(j["u"], path + ".u");
    if (j.contains("tau")) f.tau = get_num(j["tau"], path + ".tau");
    if (j.contains("scan")) f.scan = parse_scan(j["scan"], path + ".scan");
    if (f.u.has_value() != f.tau.has_value())
        fail(path, "u and tau must be given together");
    if (!f.u && !f.scan) fail(path, "need either a (u, tau) guess or a scan");
    return f;
}

ContinuationOptions parse_continue(const json& j, const std::string& path) {
    expect_keys(j, path,
                {"direction", "mu_window", "ds_init", "ds_min", "ds_max", "max_steps",
                 "corrector_tol", "corrector_max_iter", "sigma_threshold", "refine_events",
                 "event_mu_tol"});
    ContinuationOptions o;
    if (j.contains("direction")) o.direction = get_int(j["direction"], path + ".direction");
    if (j.contains("mu_window")) o.mu_window = get_interval(j["mu_window"], path + ".mu_window");
    if (j.contains("ds_init")) o.ds_init = get_num(j["ds_init"], path + ".ds_init");
    if (j.contains("ds_min")) o.ds_min = get_num(j["ds_min"], path + ".ds_min");
    if (j.contains("ds_max")) o.ds_max = get_num(j["ds_max"], path + ".ds_max");
    if (j.contains("max_steps")) o.max_steps = get_int(j["max_steps"], path + ".max_steps");
    if (j.contains("corrector_tol"))
        o.corrector_tol = get_num(j["corrector_tol"], path + ".corrector_tol");
    if (j.contains("corrector_max_iter"))
        o.corrector_max_iter = get_int(j["corrector_max_iter"], path + ".corrector_max_iter");
    if (j.contains("sigma_threshold"))
        o.sigma_threshold = get_num(j["sigma_threshold"], path + ".sigma_threshold");
    if (j.contains("refine_events"))
        o.refine_events = get_bool(j["refine_events"], path + ".refine_events");
    if (j.contains("event_mu_tol"))
        o.event_mu_tol = get_num(j["event_mu_tol"], path + ".event_mu_tol");
    return o;
}

CensusOptions parse_census(const json& j, const std::string& path) {
    expect_keys(j, path,
                {"delta", "radius", "distinct_tol", "u_grid", "u_span", "tau_grid", "tau_span"});
    CensusOptions c;
    if (j.contains("delta")) c.delta = get_num(j["delta"], path + ".delta");
    if (j.contains("radius")) c.radius = get_num(j["radius"], path + ".radius");
    if (j.contains("distinct_tol"))
        c.distinct_tol = get_num(j["distinct_tol"], path + ".distinct_tol");
    if (j.contains("u_grid")) c.u_grid = get_int(j["u_grid"], path + ".u_grid");
    if (j.contains("u_span")) c.u_span = get_num(j["u_span"], path + ".u_span");
    if (j.contains("tau_grid")) c.tau_grid = get_int(j["tau_grid"], path + ".tau_grid");
    if (j.contains("tau_span")) c.tau_span = get_num(j["tau_span"], path + ".tau_span");
    return c;
}

ProbeSpec parse_probe(const json& j, const std::string& path) {
    expect_keys(j, path, {"depth", "delta", "ratio", "sqrt_gap", "event_index", "census"});
    ProbeSpec p;
    if (j.contains("depth")) p.opts.depth = get_int(j["depth"], path + ".depth");
    if (j.contains("delta")) p.opts.delta = get_num(j["delta"], path + ".delta");
    if (j.contains("ratio")) p.opts.ratio = get_num(j["ratio"], path + ".ratio");
    if (j.contains("sqrt_gap")) p.opts.sqrt_gap = get_bool(j["sqrt_gap"], path + ".sqrt_gap");
    if (j.contains("event_index"))
        p.event_index = get_int(j["event_index"], path + ".event_index");
    if (j.contains("census")) p.census = parse_census(j["census"], path + ".census");
    return p;
}

GradientFlowSpec parse_gradient(const json& j, const std::string& path) {
    expect_keys(j, path,
                {"mu0", "mu1", "heights", "lead_in", "escape_radius", "sweep", "ds_init",
                 "ds_min", "ds_max", "move_cap", "grad_tol", "sigma_floor", "blowup",
                 "max_steps", "snapshot_stride", "mode", "hessian_stride"});
    GradientFlowSpec g;
    if (!j.contains("mu1")) fail(path, "mu1 is required");
    g.mu1 = get_num(j["mu1"], path + ".mu1");
    if (j.contains("mu0")) g.mu0 = get_num(j["mu0"], path + ".mu0");
    if (j.contains("heights")) g.heights = get_list(j["heights"], path + ".heights");
    if (j.contains("lead_in")) g.lead_in = get_num(j["lead_in"], path + ".lead_in");
    if (j.contains("escape_radius"))
        g.escape_radius = get_num(j["escape_radius"], path + ".escape_radius");
    if (j.contains("sweep")) g.sweep = get_bool(j["sweep"], path + ".sweep");
    auto& d = g.descent;
    if (j.contains("ds_init")) d.ds_init = get_num(j["ds_init"], path + ".ds_init");
    if (j.contains("ds_min")) d.ds_min = get_num(j["ds_min"], path + ".ds_min");
    if (j.contains("ds_max")) d.ds_max = get_num(j["ds_max"], path + ".ds_max");
    if (j.contains("move_cap")) d.move_cap = get_num(j["move_cap"], path + ".move_cap");
    if (j.contains("grad_tol")) d.grad_tol = get_num(j["grad_tol"], path + ".grad_tol");
    if (j.contains("sigma_floor"))
        d.sigma_floor = get_num(j["sigma_floor"], path + ".sigma_floor");
    if (j.contains("blowup")) d.blowup = get_num(j["blowup"], path + ".blowup");
    if (j.contains("max_steps")) d.max_steps = get_int(j["max_steps"], path + ".max_steps");
    if (j.contains("snapshot_stride"))
        d.snapshot_stride = get_int(j["snapshot_stride"], path + ".snapshot_stride");
    if (j.contains("hessian_stride"))
        d.hessian_stride = get_int(j["hessian_stride"], path + ".hessian_stride");
    if (j.contains("mode")) {
        const std::string m = get_str(j["mode"], path + ".mode");
        if (m == "raw")
            d.mode = DescentMode::Raw;
        else if (m == "stabilized")
            d.mode = DescentMode::Stabilized;
        else
            fail(path + ".mode", "expected \"raw\" or \"stabilized\"");
    }
    return g;
}

}  // namespace

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("config: cannot open '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw InvalidArgument("config: " + path + ": " + e.what());
    }

    expect_keys(doc, "$",
                {"system", "shoot", "contact", "find_chord", "continue", "probe",
                 "gradient_flow", "output"});
    if (!doc.contains("system")) fail("$", "system is required");
    expect_keys(doc["system"], "$.system", {"name", "params"});
    if (!doc["system"].contains("name")) fail("$.system", "name is required");

    RunConfig cfg;
    cfg.system_name = get_str(doc["system"]["name"], "$.system.name");
    std::map<std::string, double> params;
    if (doc["system"].contains("params")) {
        const json& pj = doc["system"]["params"];
        if (!pj.is_object()) fail("$.system.params", "expected an object");
        for (const auto& item : pj.items())
            params[item.key()] = get_num(item.value(), "$.system.params." + item.key());
    }
    cfg.system = builtin_system(cfg.system_name, params);

    if (doc.contains("shoot")) cfg.shoot = parse_shoot(doc["shoot"], "$.shoot");
    if (doc.contains("contact")) cfg.contact = parse_contact(doc["contact"], "$.contact");
    if (doc.contains("find_chord"))
        cfg.find_chord = parse_find(doc["find_chord"], "$.find_chord");
    if (doc.contains("continue")) {
        cfg.continuation = parse_continue(doc["continue"], "$.continue");
        cfg.has_continuation = true;
    }
    if (doc.contains("probe")) cfg.probe = parse_probe(doc["probe"], "$.probe");
    if (doc.contains("gradient_flow"))
        cfg.gradient = parse_gradient(doc["gradient_flow"], "$.gradient_flow");
    if (doc.contains("output")) {
        expect_keys(doc["output"], "$.output", {"dir", "prefix"});
        if (doc["output"].contains("dir"))
            cfg.out_dir = get_str(doc["output"]["dir"], "$.output.dir");
        if (doc["output"].contains("prefix"))
            cfg.prefix = get_str(doc["output"]["prefix"], "$.output.prefix");
    }

    // Wire the shared shooting knobs into the sections that carry their own.
    cfg.continuation.shoot = cfg.shoot;
    if (cfg.probe) {
        cfg.probe->opts.shoot = cfg.shoot;
        if (cfg.probe->census) cfg.probe->census->shoot = cfg.shoot;
    }
    const Eigen::Index dim = 2 * cfg.system.n;
    if (cfg.contact &&
        (cfg.contact->sampler.box_lo.size() != dim || cfg.contact->sampler.box_hi.size() != dim))
        fail("$.contact", "box dimensions must equal 2n = " + std::to_string(dim));
    if (cfg.find_chord && cfg.find_chord->u && cfg.find_chord->u->size() != cfg.system.n)
        fail("$.find_chord.u", "must have length n = " + std::to_string(cfg.system.n));
    return cfg;
}

}  // namespace chordfam
