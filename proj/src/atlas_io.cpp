#include "chordfam/atlas_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace chordfam {

namespace {

std::string g17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

double parse_num(const std::string& tok, const std::string& path) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument(tok);
        return v;
    } catch (const std::exception&) {
        throw InvalidArgument("atlas: " + path + ": bad number '" + tok + "'");
    }
}

}  // namespace

void write_atlas(const std::string& path, const FamilyAtlas& atlas) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_atlas: cannot open '" + path + "'");
    out << "# chordfam-atlas v1\n";
    out << "system " << atlas.system_id << "\n";
    out << "n " << atlas.n << "\n";
    out << "# row mu tau action sigma_min jac_det u...\n";
    for (const AtlasRow& r : atlas.rows) {
        out << "row " << g17(r.mu) << ' ' << g17(r.tau) << ' ' << g17(r.action) << ' '
            << g17(r.sigma_min) << ' ' << g17(r.shooting_jac_det);
        for (Eigen::Index i = 0; i < r.u.size(); ++i) out << ' ' << g17(r.u[i]);
        out << "\n";
    }
    for (const FamilyEvent& e : atlas.events) {
        out << "event " << event_kind_name(e.kind) << ' ' << g17(e.mu_estimate) << ' '
            << e.row_lo << ' ' << e.row_hi << ' ' << (e.coincident_degeneracy ? 1 : 0);
        if (!e.note.empty()) out << ' ' << e.note;
        out << "\n";
    }
    if (!out) throw InvalidArgument("write_atlas: write to '" + path + "' failed");
}

FamilyAtlas read_atlas(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("read_atlas: cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line) || line != "# chordfam-atlas v1")
        throw InvalidArgument("read_atlas: '" + path + "' lacks the atlas header");

    FamilyAtlas atlas;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::istringstream ss(line);
        std::string tag;
        ss >> tag;
        const std::string where = path + ":" + std::to_string(lineno);
        if (tag == "system") {
            ss >> atlas.system_id;
        } else if (tag == "n") {
            long n = 0;
            ss >> n;
            if (!ss || n <= 0) throw InvalidArgument("read_atlas: " + where + ": bad n");
            atlas.n = n;
        } else if (tag == "row") {
            std::vector<std::string> toks;
            std::string t;
            while (ss >> t) toks.push_back(t);
            if (atlas.n <= 0) throw InvalidArgument("read_atlas: " + where + ": n before rows");
            if (toks.size() != 5 + std::size_t(atlas.n))
                throw InvalidArgument("read_atlas: " + where + ": wrong column count");
            AtlasRow r;
            r.mu = parse_num(toks[0], where);
            r.tau = parse_num(toks[1], where);
            r.action = parse_num(toks[2], where);
            r.sigma_min = parse_num(toks[3], where);
            r.shooting_jac_det = parse_num(toks[4], where);
            r.u.resize(atlas.n);
            for (Eigen::Index i = 0; i < atlas.n; ++i)
                r.u[i] = parse_num(toks[5 + std::size_t(i)], where);
            atlas.rows.push_back(std::move(r));
        } else if (tag == "event") {
            FamilyEvent e;
            std::string kind, mu_tok;
            int coincident = 0;
            ss >> kind >> mu_tok >> e.row_lo >> e.row_hi >> coincident;
            if (!ss) throw InvalidArgument("read_atlas: " + where + ": bad event line");
            e.kind = event_kind_from_name(kind);
            e.mu_estimate = parse_num(mu_tok, where);
            e.coincident_degeneracy = coincident != 0;
            std::getline(ss, e.note);
            if (!e.note.empty() && e.note.front() == ' ') e.note.erase(0, 1);
            atlas.events.push_back(std::move(e));
        } else {
            throw InvalidArgument("read_atlas: " + where + ": unknown tag '" + tag + "'");
        }
    }
    return atlas;
}

void write_family_csv(const std::string& path, const FamilyAtlas& atlas) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_family_csv: cannot open '" + path + "'");
    out << "mu,start_coordinate,tau,action,sigma_min\n";
    for (const AtlasRow& r : atlas.rows)
        out << g17(r.mu) << ',' << g17(r.u.size() ? r.u[0] : 0.0) << ',' << g17(r.tau) << ','
            << g17(r.action) << ',' << g17(r.sigma_min) << "\n";
}

void write_gnuplot_script(const std::string& path, const std::vector<std::string>& csv_files) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_gnuplot_script: cannot open '" + path + "'");
    out << "# Rebuilds the family figures from the CSV files in this directory.\n"
        << "# Usage: gnuplot <this file>\n"
        << "set datafile separator ','\n"
        << "set terminal pngcairo size 1000,700\n"
        << "set grid\n";
    for (const std::string& csv : csv_files) {
        std::string base = csv;
        const auto slash = base.find_last_of('/');
        if (slash != std::string::npos) base = base.substr(slash + 1);
        const auto dot = base.find_last_of('.');
        if (dot != std::string::npos) base = base.substr(0, dot);
        out << "\nset output '" << base << "_branch.png'\n"
            << "set xlabel 'start coordinate'\nset ylabel 'mu'\n"
            << "plot '" << base << ".csv' skip 1 using 2:1 with lines title '" << base << "'\n";
        out << "set output '" << base << "_tau.png'\n"
            << "set xlabel 'mu'\nset ylabel 'tau'\n"
            << "plot '" << base << ".csv' skip 1 using 1:3 with lines title '" << base << "'\n";
        out << "set output '" << base << "_action.png'\n"
            << "set xlabel 'mu'\nset ylabel 'action'\n"
            << "plot '" << base << ".csv' skip 1 using 1:4 with lines title '" << base << "'\n";
    }
}

void write_chord_json(const std::string& path, const std::string& system_id, const Chord& chord,
                      bool with_samples) {
    nlohmann::json j;
    j["format"] = "chordfam-chord v1";
    j["system"] = system_id;
    j["mu"] = chord.mu;
    j["tau"] = chord.tau;
    j["u"] = std::vector<double>(chord.u.data(), chord.u.data() + chord.u.size());
    j["residual_norm"] = chord.residual_norm;
    j["boundary_gap"] = chord.boundary_gap;
    if (with_samples) {
        nlohmann::json rows = nlohmann::json::array();
        for (const PhaseState& st : chord.samples)
            rows.push_back(std::vector<double>(st.z.data(), st.z.data() + st.z.size()));
        j["samples"] = std::move(rows);
    }
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_chord_json: cannot open '" + path + "'");
    out << j.dump(2) << "\n";
}

Chord read_chord_json(const std::string& path, const std::string& expect_system_id) {
    std::ifstream in(path);
    if (!in) throw InvalidArgument("read_chord_json: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw InvalidArgument("read_chord_json: " + path + ": " + e.what());
    }
    if (!j.is_object() || j.value("format", "") != "chordfam-chord v1")
        throw InvalidArgument("read_chord_json: '" + path + "' is not a chord record");
    const std::string sys_id = j.value("system", "");
    if (!expect_system_id.empty() && sys_id != expect_system_id)
        throw InvalidArgument("read_chord_json: record is for system '" + sys_id +
                              "', expected '" + expect_system_id + "'");
    Chord c;
    if (!j.contains("mu") || !j.contains("tau") || !j.contains("u"))
        throw InvalidArgument("read_chord_json: " + path + ": mu, tau, and u are required");
    c.mu = j["mu"].get<double>();
    c.tau = j["tau"].get<double>();
    const auto uv = j["u"].get<std::vector<double>>();
    c.u = Eigen::Map<const Vec>(uv.data(), Eigen::Index(uv.size()));
    c.residual_norm = j.value("residual_norm", 0.0);
    c.boundary_gap = j.value("boundary_gap", 0.0);
    if (j.contains("samples"))
        for (const auto& row : j["samples"]) {
            const auto v = row.get<std::vector<double>>();
            c.samples.emplace_back(Eigen::Map<const Vec>(v.data(), Eigen::Index(v.size())));
        }
    return c;
}

void write_stretch_csv(const std::string& path, const StretchReport& report) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_stretch_csv: cannot open '" + path + "'");
    out << "height,outcome,mu_reached,final_sigma,final_action,final_grad_norm,"
           "plateau_grad_min,dist_from_seed,max_dist_plateau,escaped,energy\n";
    for (const StretchRow& r : report.rows)
        out << g17(r.height) << ',' << descent_outcome_name(r.outcome) << ','
            << g17(r.mu_reached) << ',' << g17(r.final_sigma) << ',' << g17(r.final_action)
            << ',' << g17(r.final_grad_norm) << ',' << g17(r.plateau_grad_min) << ','
            << g17(r.dist_from_seed) << ',' << g17(r.max_dist_plateau) << ','
            << (r.escaped ? 1 : 0) << ',' << g17(r.energy) << "\n";
}

void write_descent_csv(const std::string& path, const DescentRun& run) {
    std::ofstream out(path);
    if (!out) throw InvalidArgument("write_descent_csv: cannot open '" + path + "'");
    out << "s,mu,sigma,action,grad_norm,energy,dist_from_start\n";
    for (const DescentSnapshot& sn : run.snapshots)
        out << g17(sn.s) << ',' << g17(sn.mu) << ',' << g17(sn.sigma) << ',' << g17(sn.action)
            << ',' << g17(sn.grad_norm) << ',' << g17(sn.energy) << ','
            << g17(sn.dist_from_start) << "\n";
}

}  // namespace chordfam
