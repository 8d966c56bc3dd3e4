#include "jkraim/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "jkraim/normal.hpp"

namespace jkraim {

namespace {

constexpr const char* kClassNames[kStanfordClasses] = {"NO", "MI", "SU", "SU&MI", "HMI"};

std::string fmt(double x)
{
    if (!std::isfinite(x)) return {};
    std::ostringstream s;
    s << std::setprecision(10) << x;
    return s.str();
}

double parse_cell(const std::string& c)
{
    if (c.empty()) return kUnavailable;
    size_t pos = 0;
    double x;
    try {
        x = std::stod(c, &pos);
    } catch (const std::exception&) {
        throw ParseError("bad numeric cell '" + c + "'");
    }
    if (pos != c.size()) throw ParseError("bad numeric cell '" + c + "'");
    return x;
}

} // namespace

const char* to_string(StanfordClass c) { return kClassNames[static_cast<int>(c)]; }

StanfordClass stanford_from_string(const std::string& s)
{
    for (int i = 0; i < kStanfordClasses; ++i)
        if (s == kClassNames[i]) return static_cast<StanfordClass>(i);
    throw ParseError("unknown Stanford class '" + s + "'");
}

void ScenarioConfig::validate() const
{
    if (!(grid_step_deg > 0) || std::abs(std::remainder(360.0, grid_step_deg)) > 1e-9)
        throw Error("grid step must divide 360");
    if (!(epoch_step_s > 0)) throw Error("epoch step must be positive");
    if (!(duration_s > 0)) throw Error("duration must be positive");
    if (mask_deg < 0 || mask_deg >= 90) throw Error("mask angle must lie in [0, 90)");
    if (constellations.empty()) throw Error("no constellations selected");
    if (grid_points < 64) throw Error("grid_points must be at least 64");
    if (threads < 1) throw Error("threads must be at least 1");
    if (!(budget.VAL > 0) || !(budget.HAL > 0)) throw Error("alert limits must be positive");
}

std::vector<UserLocation> user_grid(double step_deg)
{
    std::vector<UserLocation> out;
    const int nlat = static_cast<int>(std::lround(180.0 / step_deg));
    const int nlon = static_cast<int>(std::lround(360.0 / step_deg));
    for (int i = 0; i < nlat; ++i)
        for (int j = 0; j < nlon; ++j) out.push_back({-90.0 + (i + 0.5) * step_deg, -180.0 + j * step_deg});
    return out;
}

StanfordClass classify(double vpe, double vpl, double val, bool alert)
{
    if (alert) return StanfordClass::SU;
    if (!std::isfinite(vpl) || vpl > val) return vpe > vpl ? StanfordClass::SU_MI : StanfordClass::SU;
    if (vpe > val) return StanfordClass::HMI;
    if (vpe > vpl) return StanfordClass::MI;
    return StanfordClass::NO;
}

SatelliteSet bind_satellites(const ScenarioConfig& cfg, const std::vector<AlmanacEntry>& almanac,
                             const SatelliteBoundTable& table)
{
    SatelliteSet out;
    for (Constellation c : cfg.constellations) {
        const auto rows = table.of(c);
        int ordinal = 0;
        for (const auto& a : almanac) {
            if (a.constellation != c || !a.healthy()) continue;
            if (rows.empty()) throw UnknownSatellite(std::string("no bound rows for ") + to_string(c));
            out.entries.push_back(a);
            out.bounds.push_back(rows[static_cast<size_t>(ordinal) % rows.size()]);
            ++ordinal;
        }
        if (ordinal == 0) throw Error(std::string("almanac has no healthy ") + to_string(c) + " satellites");
        out.per_constellation.push_back(ordinal);
    }
    return out;
}

EpochRecord run_epoch(const ScenarioConfig& cfg, const SatelliteSet& sats, int k_max, const UserLocation& loc,
                      double t, int loc_id, int epoch_id)
{
    EpochRecord rec;
    rec.lat_deg = loc.lat_deg;
    rec.lon_deg = loc.lon_deg;
    rec.t_s = t;
    try {
        const Eigen::Vector3d user = llh_to_ecef(loc.lat_deg, loc.lon_deg);
        std::vector<SatelliteState> states;
        states.reserve(sats.entries.size());
        for (const auto& a : sats.entries) states.push_back({propagate(a, t), a.constellation, a.id()});
        Geometry geo = assemble_geometry(user, states, cfg.mask_deg);
        const auto n = geo.model.n();
        rec.n_vis = static_cast<int>(n);

        const bool gaussian = cfg.algorithm == Algorithm::Baseline || cfg.flavor == BoundFlavor::Gaussian;
        std::vector<CompositeError> acc, ss;
        VecX<double> W(n), sigma(n), y(n);
        std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                          static_cast<std::uint32_t>(loc_id), static_cast<std::uint32_t>(epoch_id)};
        std::mt19937_64 rng(seq);
        for (Eigen::Index i = 0; i < n; ++i) {
            const SatBound& sb = *sats.bounds[static_cast<size_t>(geo.source_index[static_cast<size_t>(i)])];
            const auto em = error_model(sb, geo.elevation_deg[static_cast<size_t>(i)],
                                        gaussian ? BoundFlavor::Gaussian : BoundFlavor::Pgo, cfg.budget.b_nom,
                                        cfg.pgo_construction);
            acc.push_back(em.acc);
            ss.push_back(cfg.const_bound == ConstellationBound::Gaussian
                             ? CompositeError{Gaussian{sb.gauss_sigma}, em.local_sigma}
                             : em.acc);
            W(i) = em.weight;
            sigma(i) = std::sqrt(em.acc.variance());
            y(i) = cfg.zero_noise ? 0.0 : em.sample(rng);
        }
        auto model = make_model<double>(geo.model.G, W, y, geo.model.sat_ids, geo.model.const_of);

        ThreatParams tp = cfg.budget.threat_params();
        tp.single_const_pconst = cfg.single_const_pconst;
        const auto threat = enumerate_modes(static_cast<int>(n), k_max, constellation_partition(model), tp);
        rec.n_modes = threat.N_fault_modes();

        PlOptions opt;
        opt.allocation = cfg.allocation;
        opt.horizontal = cfg.horizontal;
        opt.grid.points = cfg.grid_points;

        PlResult pl;
        if (cfg.algorithm == Algorithm::Baseline) {
            BaselineAraim base(model, threat, sigma, cfg.budget, opt);
            pl = base.result();
            rec.alert = base.detect(y);
        } else {
            DetectorConfig dc;
            dc.C_FA = cfg.budget.C_REQ_FA();
            dc.axes = cfg.axes;
            dc.grid = opt.grid;
            JackknifeDetector det(model, threat, acc, dc, &ss);
            pl = jk_protection_levels(det, acc, ss, cfg.budget, opt);
            rec.alert = det.run(y).alert;
        }
        const VecX<double> x = solution_matrix(model.G, model.W) * y;
        rec.vpe = std::abs(x(2));
        rec.hpe = std::hypot(x(0), x(1));
        rec.vpl = pl.vpl;
        rec.hpl = pl.hpl;
    } catch (const std::exception& e) {
        rec.error = e.what();
        rec.vpl = rec.hpl = kUnavailable;
    }
    rec.cls = classify(rec.vpe, rec.vpl, cfg.budget.VAL, rec.alert);
    return rec;
}

std::vector<EpochRecord> run_scenario(const ScenarioConfig& cfg, const std::vector<AlmanacEntry>& almanac,
                                      const SatelliteBoundTable& table, const ProgressFn& progress)
{
    cfg.validate();
    if (almanac.empty()) throw Error("empty almanac");
    const auto sats = bind_satellites(cfg, almanac, table);
    ThreatParams tp = cfg.budget.threat_params();
    const int k_max = determine_kmax(sats.per_constellation, tp).k_max;

    const auto locs = user_grid(cfg.grid_step_deg);
    const int n_epochs = static_cast<int>(std::floor(cfg.duration_s / cfg.epoch_step_s + 1e-9));
    const std::size_t total = locs.size() * static_cast<std::size_t>(n_epochs);
    std::vector<EpochRecord> out(total);

    std::atomic<std::size_t> next{0}, done{0};
    auto worker = [&] {
        for (std::size_t c; (c = next.fetch_add(1)) < total;) {
            const int li = static_cast<int>(c / static_cast<std::size_t>(n_epochs));
            const int ei = static_cast<int>(c % static_cast<std::size_t>(n_epochs));
            out[c] = run_epoch(cfg, sats, k_max, locs[static_cast<size_t>(li)], cfg.t0_s + ei * cfg.epoch_step_s,
                               li, ei);
            const auto d = done.fetch_add(1) + 1;
            if (progress) progress(d, total);
        }
    };
    std::vector<std::thread> pool;
    for (int i = 1; i < cfg.threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& th : pool) th.join();
    return out;
}

SummaryStats aggregate(const std::vector<EpochRecord>& records, double val, const std::vector<double>& levels)
{
    if (records.empty()) throw Error("no records to aggregate");
    SummaryStats s;
    s.levels = levels;
    s.records = records.size();

    std::map<std::pair<double, double>, std::vector<double>> by_loc;
    std::vector<std::pair<double, double>> order;
    for (const auto& r : records) {
        const auto key = std::make_pair(r.lat_deg, r.lon_deg);
        auto [it, fresh] = by_loc.try_emplace(key);
        if (fresh) order.push_back(key);
        it->second.push_back(r.vpl);
        ++s.stanford_counts[static_cast<size_t>(r.cls)];
        if (r.vpe > r.vpl && !r.alert) ++s.missed_alerts;
    }
    for (const auto& key : order) {
        auto v = by_loc[key];
        LocationSummary ls;
        ls.lat_deg = key.first;
        ls.lon_deg = key.second;
        ls.epochs = v.size();
        ls.availability =
            static_cast<double>(std::count_if(v.begin(), v.end(), [&](double p) { return p <= val; })) / v.size();
        // nearest rank; unavailable epochs sort last as +inf
        std::sort(v.begin(), v.end());
        const auto rank = static_cast<size_t>(std::ceil(0.995 * static_cast<double>(v.size())));
        ls.vpl_p995 = v[std::max<size_t>(rank, 1) - 1];
        s.locations.push_back(ls);
    }
    double wsum = 0.0;
    for (const auto& l : s.locations) wsum += std::cos(l.lat_deg * M_PI / 180.0);
    for (double lev : levels) {
        double w = 0.0;
        std::size_t c = 0;
        for (const auto& l : s.locations)
            if (l.availability >= lev) {
                w += std::cos(l.lat_deg * M_PI / 180.0);
                ++c;
            }
        s.coverage_weighted.push_back(wsum > 0 ? w / wsum : 0.0);
        s.coverage_unweighted.push_back(static_cast<double>(c) / s.locations.size());
    }
    return s;
}

void write_records_csv(std::ostream& out, const std::vector<EpochRecord>& records)
{
    out << kRecordCsvHeader << '\n';
    for (const auto& r : records)
        out << fmt(r.lat_deg) << ',' << fmt(r.lon_deg) << ',' << fmt(r.t_s) << ',' << r.n_vis << ',' << fmt(r.vpe)
            << ',' << fmt(r.hpe) << ',' << fmt(r.vpl) << ',' << fmt(r.hpl) << ',' << (r.alert ? 1 : 0) << ','
            << to_string(r.cls) << '\n';
}

std::vector<EpochRecord> read_records_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kRecordCsvHeader) throw ParseError("records CSV header mismatch");
    std::vector<EpochRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> c;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) c.push_back(cell);
        if (line.back() == ',') c.emplace_back();
        if (c.size() != 10) throw ParseError("records CSV row has " + std::to_string(c.size()) + " cells");
        EpochRecord r;
        r.lat_deg = parse_cell(c[0]);
        r.lon_deg = parse_cell(c[1]);
        r.t_s = parse_cell(c[2]);
        r.n_vis = static_cast<int>(parse_cell(c[3]));
        r.vpe = parse_cell(c[4]);
        r.hpe = parse_cell(c[5]);
        r.vpl = parse_cell(c[6]);
        r.hpl = parse_cell(c[7]);
        r.alert = c[8] == "1";
        r.cls = stanford_from_string(c[9]);
        out.push_back(r);
    }
    return out;
}

std::string summary_json(const SummaryStats& s, const std::string& config_echo_json)
{
    using nlohmann::json;
    auto num = [](double x) { return std::isfinite(x) ? json(x) : json(nullptr); };
    json j;
    json avail = json::array(), p995 = json::array();
    for (const auto& l : s.locations) {
        avail.push_back({{"lat_deg", l.lat_deg}, {"lon_deg", l.lon_deg}, {"epochs", l.epochs},
                         {"availability", l.availability}});
        p995.push_back({{"lat_deg", l.lat_deg}, {"lon_deg", l.lon_deg}, {"vpl_m", num(l.vpl_p995)}});
    }
    j["availability_by_location"] = avail;
    j["vpl_p995_by_location"] = p995;
    json cov = json::array();
    for (size_t i = 0; i < s.levels.size(); ++i)
        cov.push_back({{"level", s.levels[i]},
                       {"weighted", s.coverage_weighted[i]},
                       {"unweighted", s.coverage_unweighted[i]}});
    j["coverage"] = cov;
    json counts;
    for (int c = 0; c < kStanfordClasses; ++c) {
        const auto n = s.stanford_counts[static_cast<size_t>(c)];
        counts[kClassNames[c]] = {{"count", n}, {"percent", 100.0 * static_cast<double>(n) / s.records}};
    }
    j["stanford_counts"] = counts;
    j["records"] = s.records;
    j["missed_alerts"] = s.missed_alerts;
    j["config_echo"] = config_echo_json.empty() ? json::object() : json::parse(config_echo_json);
    return j.dump(2);
}

} // namespace jkraim
