#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <json.hpp>

#ifndef JKRAIM_DATA_DIR
#define JKRAIM_DATA_DIR "data"
#endif
#ifndef JKRAIM_VERSION
#define JKRAIM_VERSION "0.0.0"
#endif

namespace jkraim::cli {

using nlohmann::json;

namespace {

class IoError : public Error { using Error::Error; };

json num(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

std::string lower(std::string s)
{
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

template <class T>
T parse_value(const std::string& key, const std::string& v)
{
    std::istringstream is(v);
    T x{};
    is >> x;
    if (!is || !(is >> std::ws).eof()) throw ParseError("config key '" + key + "': bad value '" + v + "'");
    return x;
}

bool parse_bool(const std::string& key, const std::string& v)
{
    const auto s = lower(v);
    if (s == "1" || s == "true" || s == "yes" || s == "on") return true;
    if (s == "0" || s == "false" || s == "no" || s == "off") return false;
    throw ParseError("config key '" + key + "': expected a boolean, got '" + v + "'");
}

template <class E>
E pick(const std::string& key, const std::string& v, std::initializer_list<std::pair<const char*, E>> opts)
{
    const auto s = lower(v);
    std::string names;
    for (const auto& [n, e] : opts) {
        if (s == n) return e;
        names += names.empty() ? n : std::string("|") + n;
    }
    throw ParseError("config key '" + key + "': expected " + names + ", got '" + v + "'");
}

std::vector<Constellation> parse_constellations(const std::string& key, const std::string& v)
{
    std::vector<Constellation> out;
    std::stringstream ss(v);
    for (std::string tok; std::getline(ss, tok, ',');) {
        tok.erase(0, tok.find_first_not_of(" \t"));
        tok.erase(tok.find_last_not_of(" \t") + 1);
        out.push_back(pick<Constellation>(key, tok, {{"gps", Constellation::GPS}, {"gal", Constellation::GAL},
                                                     {"galileo", Constellation::GAL}}));
    }
    if (out.empty()) throw ParseError("config key '" + key + "': empty constellation list");
    return out;
}

std::ifstream open_input(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open input file: " + path);
    return f;
}

void write_file(const std::string& path, const std::string& text)
{
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot write output file: " + path);
    f << text;
    if (!f) throw IoError("write failed: " + path);
}

const char* algo_name(Algorithm a) { return a == Algorithm::Baseline ? "baseline" : "jk"; }
const char* flavor_name(BoundFlavor f) { return f == BoundFlavor::Pgo ? "pgo" : "gaussian"; }

// ---------------------------------------------------------------- geometry

struct GeometryInput {
    LinearModel<double> model;
    std::vector<CompositeError> acc, ss;
    VecX<double> sigma;  // Gaussian-equivalent sigma for the baseline
    ThreatModel threat;
};

ErrorDistribution parse_dist(const json& e)
{
    const std::string type = lower(e.value("type", std::string("gaussian")));
    if (type == "gaussian") return Gaussian{e.at("sigma").get<double>()};
    if (type == "bgmm") return Bgmm{e.at("p1").get<double>(), e.at("sigma1").get<double>(), e.at("sigma2").get<double>()};
    if (type == "pgo") {
        const Bgmm b{e.at("p1").get<double>(), e.at("sigma1").get<double>(), e.at("sigma2").get<double>()};
        std::optional<double> xrp;
        if (e.contains("x_rp")) xrp = e.at("x_rp").get<double>();
        return build_pgo(b, xrp);
    }
    throw ParseError("unknown error type '" + type + "'");
}

GeometryInput load_geometry(const std::string& path, const SatelliteBoundTable* table, const ScenarioConfig& sc)
{
    auto f = open_input(path);
    json j;
    try {
        j = json::parse(f);
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
    try {
        GeometryInput g;
        MatX<double> G;
        std::vector<std::string> ids;
        std::vector<int> tags;
        std::vector<RangeErrorModel> ems;
        const bool gaussian = sc.algorithm == Algorithm::Baseline || sc.flavor == BoundFlavor::Gaussian;
        const auto flavor = gaussian ? BoundFlavor::Gaussian : BoundFlavor::Pgo;

        if (j.contains("satellites")) {
            const auto& sats = j.at("satellites");
            const Eigen::Index n = static_cast<Eigen::Index>(sats.size());
            std::set<int> present;
            for (const auto& s : sats)
                present.insert(static_cast<int>(lower(s.value("constellation", std::string("gps"))) == "gal"
                                                    ? Constellation::GAL
                                                    : Constellation::GPS));
            std::vector<int> clocks(present.begin(), present.end());
            G = MatX<double>::Zero(n, 3 + static_cast<Eigen::Index>(clocks.size()));
            std::map<int, int> ordinal;
            for (Eigen::Index i = 0; i < n; ++i) {
                const auto& s = sats[static_cast<size_t>(i)];
                const auto c = lower(s.value("constellation", std::string("gps"))) == "gal" ? Constellation::GAL
                                                                                           : Constellation::GPS;
                const double az = s.at("az_deg").get<double>() * M_PI / 180.0;
                const double el_deg = s.at("el_deg").get<double>();
                const double el = el_deg * M_PI / 180.0;
                G(i, 0) = std::cos(el) * std::sin(az);
                G(i, 1) = std::cos(el) * std::cos(az);
                G(i, 2) = std::sin(el);
                const int ci = static_cast<int>(std::find(clocks.begin(), clocks.end(), static_cast<int>(c)) -
                                                clocks.begin());
                G(i, 3 + ci) = 1.0;
                ids.push_back(s.value("id", std::string(to_string(c)) + std::to_string(i + 1)));
                tags.push_back(static_cast<int>(c));
                if (!table) throw ParseError("satellite geometry needs a bounds table");
                const SatBound* sb;
                if (s.contains("svn")) {
                    sb = &table->find(s.at("svn").get<std::string>());
                } else {
                    const auto rows = table->of(c);
                    if (rows.empty()) throw UnknownSatellite("no bound rows for constellation");
                    sb = rows[static_cast<size_t>(ordinal[static_cast<int>(c)]++) % rows.size()];
                }
                auto em = error_model(*sb, el_deg, flavor, sc.budget.b_nom, sc.pgo_construction);
                g.acc.push_back(em.acc);
                g.ss.push_back(sc.const_bound == ConstellationBound::Gaussian
                                   ? CompositeError{Gaussian{sb->gauss_sigma}, em.local_sigma}
                                   : em.acc);
                ems.push_back(em);
            }
        } else {
            const auto& rows = j.at("G");
            const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
            if (n == 0) throw ParseError(path + ": empty G");
            const Eigen::Index m = static_cast<Eigen::Index>(rows[0].size());
            G.resize(n, m);
            for (Eigen::Index i = 0; i < n; ++i) {
                if (static_cast<Eigen::Index>(rows[static_cast<size_t>(i)].size()) != m)
                    throw ParseError(path + ": ragged G");
                for (Eigen::Index c = 0; c < m; ++c) G(i, c) = rows[static_cast<size_t>(i)][static_cast<size_t>(c)];
                ids.push_back(std::to_string(i + 1));
            }
            for (Eigen::Index i = 0; i < n; ++i) {
                CompositeError ce;
                if (j.contains("sigma")) {
                    ce.base = Gaussian{j.at("sigma").at(static_cast<size_t>(i)).get<double>()};
                } else {
                    const auto& e = j.at("errors").at(static_cast<size_t>(i));
                    ce.base = parse_dist(e);
                    ce.gauss_sigma = e.value("local_sigma", 0.0);
                }
                validate(ce.base);
                g.acc.push_back(ce);
                g.ss.push_back(ce);
            }
            // clock columns after the first three, when present
            if (m > 3)
                for (Eigen::Index i = 0; i < n; ++i)
                    for (Eigen::Index c = 3; c < m; ++c)
                        if (G(i, c) == 1.0) tags.push_back(static_cast<int>(c - 3));
            if (static_cast<Eigen::Index>(tags.size()) != n) tags.clear();
        }

        const Eigen::Index n = G.rows();
        VecX<double> W(n), y = VecX<double>::Zero(n);
        g.sigma.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& ce = g.acc[static_cast<size_t>(i)];
            g.sigma(i) = std::sqrt(ce.variance());
            W(i) = ems.empty() ? 1.0 / ce.variance() : ems[static_cast<size_t>(i)].weight;
        }
        if (j.contains("weights"))
            for (Eigen::Index i = 0; i < n; ++i) W(i) = j.at("weights").at(static_cast<size_t>(i)).get<double>();
        if (j.contains("y"))
            for (Eigen::Index i = 0; i < n; ++i) y(i) = j.at("y").at(static_cast<size_t>(i)).get<double>();
        g.model = make_model<double>(G, W, y, ids, tags);

        ThreatParams tp = sc.budget.threat_params();
        tp.single_const_pconst = sc.single_const_pconst;
        if (j.contains("modes")) {
            const double ps = tp.P_sat;
            int id = 1;
            for (const auto& mj : j.at("modes")) {
                FaultMode fm;
                fm.id = id++;
                fm.excluded = mj.get<IndexSet>();
                const auto k = static_cast<double>(fm.excluded.size());
                fm.prior = std::pow(ps, k) * std::pow(1.0 - ps, static_cast<double>(n) - k);
                g.threat.modes.push_back(fm);
            }
            if (j.contains("priors"))
                for (size_t k = 0; k < g.threat.modes.size(); ++k)
                    g.threat.modes[k].prior = j.at("priors").at(k).get<double>();
            g.threat.k_max = j.value("k_max", 1);
            g.threat.P_H0 = j.value("P_H0", std::pow(1.0 - ps, static_cast<double>(n)));
            g.threat.P_not_monitored = j.value("P_not_monitored", 0.0);
        } else {
            const auto parts = constellation_partition(g.model);
            int k_max = j.value("k_max", 0);
            if (k_max == 0) k_max = determine_kmax(std::vector<int>(parts.size(), 24), tp).k_max;
            g.threat = enumerate_modes(static_cast<int>(n), k_max, parts, tp);
        }
        return g;
    } catch (const json::exception& e) {
        throw ParseError(path + ": " + e.what());
    }
}

json thresholds_json(const JackknifeDetector& det)
{
    json out = json::array();
    for (const auto& t : det.tests())
        out.push_back({{"mode", det.setups()[static_cast<size_t>(t.mode)].mode.label(&det.model())},
                       {"axis", t.axis},
                       {"threshold", t.threshold}});
    return out;
}

// ---------------------------------------------------------------- commands

struct Globals {
    std::string config;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = 0;
    bool quiet = false;
};

struct PlArgs {
    std::string geometry, bounds, algorithm, bound, allocation, axes;
    int grid_points = 0;
};

void apply_overrides(ScenarioConfig& sc, const PlArgs& a)
{
    if (!a.algorithm.empty())
        sc.algorithm = pick<Algorithm>("--algorithm", a.algorithm, {{"jk", Algorithm::Jackknife},
                                                                     {"baseline", Algorithm::Baseline}});
    if (!a.bound.empty())
        sc.flavor = pick<BoundFlavor>("--bound", a.bound, {{"gaussian", BoundFlavor::Gaussian},
                                                           {"pgo", BoundFlavor::Pgo}});
    if (!a.allocation.empty())
        sc.allocation = pick<Allocation>("--allocation", a.allocation, {{"total", Allocation::TotalRisk},
                                                                         {"equal", Allocation::EqualSplit}});
    if (!a.axes.empty())
        sc.axes = pick<DetectorAxes>("--axes", a.axes, {{"vertical", DetectorAxes::Vertical},
                                                        {"all", DetectorAxes::All}});
}

int cmd_pl(const Globals& gl, const PlArgs& a, bool detect_only, std::ostream& out)
{
    auto rc = load_config(gl.config);
    auto& sc = rc.scenario;
    apply_overrides(sc, a);
    const std::string bounds = a.bounds.empty() ? rc.files.bounds : a.bounds;
    std::optional<SatelliteBoundTable> table;
    {
        auto f = open_input(a.geometry);
        json probe = json::parse(f, nullptr, false);
        if (!probe.is_discarded() && probe.contains("satellites")) table = SatelliteBoundTable::load_csv(bounds);
    }
    const auto g = load_geometry(a.geometry, table ? &*table : nullptr, sc);

    PlOptions opt;
    opt.allocation = sc.allocation;
    if (a.grid_points > 0) opt.grid.points = a.grid_points;
    json j;
    j["algorithm"] = algo_name(sc.algorithm);
    j["bound"] = sc.algorithm == Algorithm::Baseline ? "gaussian" : flavor_name(sc.flavor);
    j["n"] = g.model.n();
    j["m"] = g.model.m();
    j["k_max"] = g.threat.k_max;
    j["n_modes"] = g.threat.N_fault_modes();

    if (sc.algorithm == Algorithm::Baseline) {
        BaselineAraim base(g.model, g.threat, g.sigma, sc.budget, opt);
        if (detect_only) {
            j["alert"] = base.detect(g.model.y);
        } else {
            const auto& r = base.result();
            j["vpl"] = num(r.vpl);
            j["hpl"] = num(r.hpl);
            j["pl"] = {num(r.pl[0]), num(r.pl[1]), num(r.pl[2])};
            j["iterations"] = r.iterations;
        }
    } else {
        DetectorConfig dc;
        dc.C_FA = sc.budget.C_REQ_FA();
        dc.axes = sc.axes;
        dc.grid = opt.grid;
        JackknifeDetector det(g.model, g.threat, g.acc, dc, &g.ss);
        if (detect_only) {
            const auto st = det.run(g.model.y);
            json tests = json::array();
            for (size_t t = 0; t < st.stat.size(); ++t) {
                const auto& dt = det.tests()[t];
                tests.push_back({{"mode", det.setups()[static_cast<size_t>(dt.mode)].mode.label(&det.model())},
                                 {"axis", dt.axis},
                                 {"stat", st.stat[t]},
                                 {"threshold", st.threshold[t]},
                                 {"flag", st.flag[t] != 0}});
            }
            j["tests"] = tests;
            j["alert"] = st.alert;
        } else {
            const auto r = jk_protection_levels(det, g.acc, g.ss, sc.budget, opt);
            j["vpl"] = num(r.vpl);
            j["hpl"] = num(r.hpl);
            j["pl"] = {num(r.pl[0]), num(r.pl[1]), num(r.pl[2])};
            j["binding"] = r.binding;
            j["iterations"] = r.iterations;
            j["thresholds"] = thresholds_json(det);
        }
    }
    out << j.dump(2) << '\n';
    return kOk;
}

int cmd_fit(const std::string& samples_path, const std::string& out_path, std::ostream& out)
{
    auto f = open_input(samples_path);
    std::vector<double> xs;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        std::string cell = line.substr(b, line.find_first_of(",\r", b) - b);
        try {
            size_t pos = 0;
            const double x = std::stod(cell, &pos);
            if (cell.find_first_not_of(" \t", pos) != std::string::npos) throw std::invalid_argument(cell);
            if (!std::isfinite(x)) throw std::invalid_argument(cell);
            xs.push_back(x);
        } catch (const std::exception&) {
            if (xs.empty() && lineno == 1) continue;  // header
            throw ParseError(samples_path + " line " + std::to_string(lineno) + ": not a number");
        }
    }
    if (xs.empty()) throw ParseError(samples_path + ": no samples");

    const double sg = fit_gaussian_overbound(xs);
    const auto bf = fit_bgmm(xs);
    json j;
    j["sample_count"] = xs.size();
    j["gaussian_sigma"] = sg;
    j["bgmm"] = {{"p1", bf.params.p1}, {"sigma1", bf.params.sigma1}, {"sigma2", bf.params.sigma2},
                 {"iterations", bf.iterations}, {"degenerate", bf.degenerate}};
    auto report = [](const OverboundReport& r) {
        return json{{"max_core_violation", r.max_core_violation},
                    {"max_tail_violation", r.max_tail_violation},
                    {"pass", r.max_violation() <= 1e-3}};
    };
    json dom;
    dom["gaussian"] = report(verify_overbound(Gaussian{sg}, xs));
    if (!bf.degenerate) {
        try {
            const Pgo p = build_pgo(bf.params);
            j["pgo"] = {{"p1", p.p1},         {"sigma1", p.sigma1},     {"sigma2", p.sigma2},
                        {"k_gain", p.k_gain}, {"c_offset", p.c_offset}, {"x_rp", p.x_rp}};
            dom["pgo"] = report(verify_overbound(p, xs));
        } catch (const Error& e) {
            j["pgo"] = nullptr;
            j["pgo_error"] = e.what();
        }
    } else {
        j["pgo"] = nullptr;
    }
    j["dominance"] = dom;
    const auto text = j.dump(2) + "\n";
    if (out_path.empty()) out << text;
    else write_file(out_path, text);
    return kOk;
}

int max_fault_modes(const std::vector<int>& sizes, int k_max)
{
    int n = 0;
    for (int s : sizes) n += s;
    double total = 0.0;
    for (int k = 1; k <= k_max; ++k) total += std::round(std::exp(std::lgamma(n + 1.0) - std::lgamma(k + 1.0) -
                                                                  std::lgamma(n - k + 1.0)));
    if (sizes.size() >= 2) total += static_cast<double>(sizes.size());
    return static_cast<int>(total);
}

int cmd_sim(const Globals& gl, const std::string& records, const std::string& summary, const std::string& manifest,
            std::ostream& out, std::ostream& err)
{
    auto rc = load_config(gl.config);
    auto& sc = rc.scenario;
    if (gl.seed_set) sc.seed = gl.seed;
    if (gl.threads > 0) sc.threads = gl.threads;
    if (!records.empty()) rc.files.records_out = records;
    if (!summary.empty()) rc.files.summary_out = summary;
    if (!manifest.empty()) rc.files.manifest_out = manifest;
    try {
        sc.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("invalid config: ") + e.what());
    }

    Manifest man;
    man.command = "sim";
    man.config_path = gl.config;
    man.seed = sc.seed;
    if (!gl.config.empty()) man.add_input(gl.config);

    std::vector<AlmanacEntry> alm;
    for (Constellation c : sc.constellations) {
        const auto& p = c == Constellation::GAL ? rc.files.galileo_almanac : rc.files.gps_almanac;
        open_input(p);
        man.add_input(p);
        for (auto& a : load_yuma(p))
            if (a.constellation == c) alm.push_back(a);
    }
    open_input(rc.files.bounds);
    man.add_input(rc.files.bounds);
    const auto table = SatelliteBoundTable::load_csv(rc.files.bounds);

    const auto sats = bind_satellites(sc, alm, table);
    const int k_max = determine_kmax(sats.per_constellation, sc.budget.threat_params()).k_max;
    const int nmodes = max_fault_modes(sats.per_constellation, k_max);

    ProgressFn progress;
    if (!gl.quiet)
        progress = [&err](std::size_t done, std::size_t total) {
            if (done % 500 == 0 || done == total) err << "\r" << done << "/" << total << " epochs" << std::flush;
        };
    const auto recs = run_scenario(sc, alm, table, progress);
    if (!gl.quiet) err << "\n";

    std::ostringstream csv;
    write_records_csv(csv, recs);
    write_file(rc.files.records_out, csv.str());
    const auto stats = aggregate(recs, sc.budget.VAL);
    write_file(rc.files.summary_out, summary_json(stats, config_echo_json(rc, k_max, nmodes)) + "\n");
    man.outputs = {rc.files.records_out, rc.files.summary_out, rc.files.manifest_out};
    write_file(rc.files.manifest_out, man.json() + "\n");

    if (!gl.quiet) {
        json j;
        j["records"] = stats.records;
        j["k_max"] = k_max;
        j["fault_modes"] = nmodes;
        json cov = json::array();
        for (size_t i = 0; i < stats.levels.size(); ++i)
            cov.push_back({{"level", stats.levels[i]}, {"weighted", stats.coverage_weighted[i]}});
        j["coverage"] = cov;
        j["missed_alerts"] = stats.missed_alerts;
        out << j.dump(2) << '\n';
    }
    return kOk;
}

} // namespace

// ---------------------------------------------------------------- config

RunConfig load_config(const std::string& path)
{
    RunConfig rc;
    rc.files.gps_almanac = std::string(JKRAIM_DATA_DIR) + "/gps_nominal.alm";
    rc.files.galileo_almanac = std::string(JKRAIM_DATA_DIR) + "/galileo_nominal.alm";
    rc.files.bounds = std::string(JKRAIM_DATA_DIR) + "/sat_bounds.csv";
    if (path.empty()) return rc;

    auto f = open_input(path);
    boost::property_tree::ptree pt;
    try {
        boost::property_tree::read_ini(f, pt);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ParseError(path + ": " + e.message() + " at line " + std::to_string(e.line()));
    }
    auto& s = rc.scenario;
    auto& b = s.budget;
    for (const auto& [section, tree] : pt) {
        if (tree.empty() && !tree.data().empty())
            throw ParseError(path + ": key '" + section + "' outside a section");
        for (const auto& [key, node] : tree) {
            const std::string k = section + "." + key;
            const std::string v = node.data();
            if (section == "scenario") {
                if (key == "grid_step_deg") s.grid_step_deg = parse_value<double>(k, v);
                else if (key == "epoch_step_s") s.epoch_step_s = parse_value<double>(k, v);
                else if (key == "duration_s") s.duration_s = parse_value<double>(k, v);
                else if (key == "t0_s") s.t0_s = parse_value<double>(k, v);
                else if (key == "mask_deg") s.mask_deg = parse_value<double>(k, v);
                else if (key == "constellations") s.constellations = parse_constellations(k, v);
                else if (key == "bound") s.flavor = pick<BoundFlavor>(k, v, {{"gaussian", BoundFlavor::Gaussian}, {"pgo", BoundFlavor::Pgo}});
                else if (key == "algorithm") s.algorithm = pick<Algorithm>(k, v, {{"jk", Algorithm::Jackknife}, {"baseline", Algorithm::Baseline}});
                else if (key == "seed") s.seed = parse_value<std::uint64_t>(k, v);
                else if (key == "allocation") s.allocation = pick<Allocation>(k, v, {{"total", Allocation::TotalRisk}, {"equal", Allocation::EqualSplit}});
                else if (key == "detector_axes") s.axes = pick<DetectorAxes>(k, v, {{"vertical", DetectorAxes::Vertical}, {"all", DetectorAxes::All}});
                else if (key == "constellation_bound") s.const_bound = pick<ConstellationBound>(k, v, {{"active", ConstellationBound::Active}, {"gaussian", ConstellationBound::Gaussian}});
                else if (key == "pgo_construction") s.pgo_construction = pick<PgoConstruction>(k, v, {{"cdf", PgoConstruction::CdfMatched}, {"density", PgoConstruction::DensityContinuous}});
                else if (key == "grid_points") s.grid_points = parse_value<int>(k, v);
                else if (key == "horizontal") s.horizontal = parse_bool(k, v);
                else if (key == "zero_noise") s.zero_noise = parse_bool(k, v);
                else if (key == "threads") s.threads = parse_value<int>(k, v);
                else throw ParseError(path + ": unknown key '" + k + "'");
            } else if (section == "budget") {
                if (key == "I_REQ_vert") b.I_REQ_vert = parse_value<double>(k, v);
                else if (key == "I_REQ_horiz_total") b.I_REQ_horiz_total = parse_value<double>(k, v);
                else if (key == "C_REQ_FA_vert") b.C_REQ_FA_vert = parse_value<double>(k, v);
                else if (key == "C_REQ_FA_horiz") b.C_REQ_FA_horiz = parse_value<double>(k, v);
                else if (key == "P_sat") b.P_sat = parse_value<double>(k, v);
                else if (key == "P_const") b.P_const = parse_value<double>(k, v);
                else if (key == "P_THRES") b.P_THRES = parse_value<double>(k, v);
                else if (key == "b_nom") b.b_nom = parse_value<double>(k, v);
                else if (key == "VAL") b.VAL = parse_value<double>(k, v);
                else if (key == "HAL") b.HAL = parse_value<double>(k, v);
                else if (key == "single_const_pconst") s.single_const_pconst = parse_value<double>(k, v);
                else throw ParseError(path + ": unknown key '" + k + "'");
            } else if (section == "files") {
                if (key == "gps_almanac") rc.files.gps_almanac = v;
                else if (key == "galileo_almanac") rc.files.galileo_almanac = v;
                else if (key == "bounds") rc.files.bounds = v;
                else if (key == "records") rc.files.records_out = v;
                else if (key == "summary") rc.files.summary_out = v;
                else if (key == "manifest") rc.files.manifest_out = v;
                else throw ParseError(path + ": unknown key '" + k + "'");
            } else {
                throw ParseError(path + ": unknown section '" + section + "'");
            }
        }
    }
    return rc;
}

std::string config_echo_json(const RunConfig& rc, int k_max, int max_modes)
{
    const auto& s = rc.scenario;
    const auto& b = s.budget;
    json c;
    for (auto k : s.constellations) c.push_back(to_string(k));
    json j = {{"grid_step_deg", s.grid_step_deg},
              {"epoch_step_s", s.epoch_step_s},
              {"duration_s", s.duration_s},
              {"t0_s", s.t0_s},
              {"mask_deg", s.mask_deg},
              {"constellations", c},
              {"bound", flavor_name(s.flavor)},
              {"algorithm", algo_name(s.algorithm)},
              {"seed", s.seed},
              {"allocation", s.allocation == Allocation::TotalRisk ? "total" : "equal"},
              {"detector_axes", s.axes == DetectorAxes::All ? "all" : "vertical"},
              {"constellation_bound", s.const_bound == ConstellationBound::Active ? "active" : "gaussian"},
              {"pgo_construction", s.pgo_construction == PgoConstruction::CdfMatched ? "cdf" : "density"},
              {"grid_points", s.grid_points},
              {"k_max", k_max},
              {"fault_modes", max_modes},
              {"budget",
               {{"I_REQ_vert", b.I_REQ_vert},
                {"I_REQ_horiz_total", b.I_REQ_horiz_total},
                {"C_REQ_FA_vert", b.C_REQ_FA_vert},
                {"C_REQ_FA_horiz", b.C_REQ_FA_horiz},
                {"P_sat", b.P_sat},
                {"P_const", b.P_const},
                {"P_THRES", b.P_THRES},
                {"b_nom", b.b_nom},
                {"VAL", b.VAL},
                {"HAL", b.HAL},
                {"single_const_pconst", s.single_const_pconst}}}};
    return j.dump();
}

// ---------------------------------------------------------------- manifest

std::string sha256_file(const std::string& path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f) throw ParseError("cannot open input file: " + path);
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (f.read(buf, sizeof buf) || f.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<size_t>(f.gcount()));
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx, md, &len);
    EVP_MD_CTX_free(ctx);
    std::ostringstream hex;
    for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
    return hex.str();
}

void Manifest::add_input(const std::string& path) { inputs.emplace_back(path, sha256_file(path)); }

std::string Manifest::json() const
{
    nlohmann::json j;
    j["command"] = command;
    j["config_path"] = config_path;
    nlohmann::json in = nlohmann::json::array();
    for (const auto& [p, d] : inputs) in.push_back({{"path", p}, {"sha256", d}});
    j["inputs"] = in;
    j["outputs"] = outputs;
    j["seed"] = seed;
    j["tool_version"] = JKRAIM_VERSION;
    return j.dump(2);
}

// ---------------------------------------------------------------- entry

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Jackknife ARAIM protection levels, detection and worldwide availability simulation"};
    app.require_subcommand(1);
    Globals gl;
    app.add_option("--config", gl.config, "key=value configuration file");
    app.add_option("--seed", gl.seed, "random seed")->each([&](const std::string&) { gl.seed_set = true; });
    app.add_option("--threads", gl.threads, "worker threads");
    app.add_flag("--quiet", gl.quiet, "machine output only");
    app.fallthrough();

    PlArgs pa;
    auto add_geom = [&](CLI::App* c) {
        c->add_option("--geometry", pa.geometry, "geometry JSON")->required();
        c->add_option("--bounds", pa.bounds, "satellite bound table CSV");
        c->add_option("--algorithm", pa.algorithm, "jk | baseline");
        c->add_option("--bound", pa.bound, "gaussian | pgo");
        c->add_option("--allocation", pa.allocation, "total | equal");
        c->add_option("--axes", pa.axes, "vertical | all");
        c->add_option("--grid-points", pa.grid_points, "convolution grid size");
    };
    auto* pl = app.add_subcommand("pl", "protection levels for one epoch");
    add_geom(pl);
    auto* det = app.add_subcommand("detect", "run the fault detector on one epoch");
    add_geom(det);

    std::string records, summary, manifest;
    auto* sim = app.add_subcommand("sim", "worldwide availability simulation");
    sim->add_option("--records", records, "records CSV output");
    sim->add_option("--summary", summary, "summary JSON output");
    sim->add_option("--manifest", manifest, "run manifest output");

    std::string samples, fit_out;
    auto* fit = app.add_subcommand("fit", "fit overbounds to error samples");
    fit->add_option("--samples", samples, "one-column sample CSV")->required();
    fit->add_option("--out", fit_out, "report path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    }

    try {
        if (pl->parsed()) return cmd_pl(gl, pa, false, out);
        if (det->parsed()) return cmd_pl(gl, pa, true, out);
        if (sim->parsed()) return cmd_sim(gl, records, summary, manifest, out, err);
        if (fit->parsed()) return cmd_fit(samples, fit_out, out);
    } catch (const IoError& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    } catch (const UnknownSatellite& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    } catch (const EmptySample& e) {
        err << "error: " << e.what() << '\n';
        return kParse;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kNumerical;
    }
    return kUsage;
}

} // namespace jkraim::cli
