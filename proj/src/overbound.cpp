#include "jkraim/overbound.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "jkraim/normal.hpp"

namespace jkraim {

namespace {

// Points with plotting position this close to 0.5 are not scored: there the
// ratio of a near-zero sample to a near-zero normal quantile is pure noise.
constexpr double kCentralBand = 0.05;

std::vector<double> centred_symmetric(const std::vector<double>& samples)
{
    if (samples.empty()) throw EmptySample("no samples");
    const double mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(samples.size());
    std::vector<double> s;
    s.reserve(2 * samples.size());
    for (double x : samples) {
        s.push_back(x - mean);
        s.push_back(mean - x);
    }
    std::sort(s.begin(), s.end());
    return s;
}

// mid-rank plotting positions; values tied to within rounding share the
// middle of their step
std::vector<double> plotting_positions(const std::vector<double>& s)
{
    const double N = static_cast<double>(s.size());
    std::vector<double> F(s.size());
    for (size_t i = 0; i < s.size();) {
        size_t j = i + 1;
        while (j < s.size() && s[j] - s[i] <= 1e-12 * std::max(1.0, std::abs(s[i]))) ++j;
        const double mid = (static_cast<double>(i + j)) / (2.0 * N);
        for (size_t k = i; k < j; ++k) F[k] = mid;
        i = j;
    }
    return F;
}

} // namespace

double fit_gaussian_overbound(const std::vector<double>& samples)
{
    const auto s = centred_symmetric(samples);
    const auto Fs = plotting_positions(s);
    // the symmetric set makes the right-side condition a mirror of the left one
    double sigma = 0.0;
    for (size_t i = 0; i < s.size() && s[i] < 0; ++i) {
        const double F = Fs[i];
        if (F >= 0.5 - kCentralBand) break;
        sigma = std::max(sigma, s[i] / norm_ppf(F));
    }
    if (!(sigma > 0) || !std::isfinite(sigma)) throw NonOverboundable("degenerate sample");
    return sigma;
}

BgmmFit fit_bgmm(const std::vector<double>& samples, const EmOptions& opt)
{
    if (samples.size() < 2) throw EmptySample("too few samples for EM");
    const Eigen::Index n = static_cast<Eigen::Index>(samples.size());
    Eigen::Map<const Eigen::ArrayXd> raw(samples.data(), n);
    const Eigen::ArrayXd x = raw - raw.mean();
    const Eigen::ArrayXd x2 = x.square();
    const double sd = std::sqrt(x2.mean());
    if (!(sd > 0)) throw EmptySample("zero-variance sample");

    double p1 = opt.p1_init, s1 = opt.sigma1_scale * sd, s2 = opt.sigma2_scale * sd;
    BgmmFit fit;
    double prev = -std::numeric_limits<double>::infinity();
    bool converged = false;
    for (int it = 0; it < opt.max_iter; ++it) {
        // E step
        Eigen::ArrayXd a = p1 / s1 * (-0.5 * x2 / (s1 * s1)).exp();
        Eigen::ArrayXd b = (1.0 - p1) / s2 * (-0.5 * x2 / (s2 * s2)).exp();
        Eigen::ArrayXd tot = (a + b).max(1e-300);
        const double ll = (tot * kInvSqrt2Pi).log().mean();
        fit.loglik.push_back(ll);
        fit.iterations = it + 1;
        Eigen::ArrayXd r = a / tot;
        // M step
        const double w1 = r.sum(), w2 = static_cast<double>(n) - w1;
        p1 = w1 / static_cast<double>(n);
        if (w1 <= 0 || w2 <= 0 || p1 < 1e-6 || p1 > 1.0 - 1e-6) {
            fit.degenerate = true;
            converged = true;
            p1 = std::clamp(p1, 1e-6, 1.0 - 1e-6);
            break;
        }
        s1 = std::sqrt((r * x2).sum() / w1);
        s2 = std::sqrt(((1.0 - r) * x2).sum() / w2);
        if (std::abs(ll - prev) < opt.tol) { converged = true; break; }
        prev = ll;
    }
    if (!converged) throw EmConvergenceFailure("EM did not converge");
    if (s1 > s2) {
        std::swap(s1, s2);
        p1 = 1.0 - p1;
    }
    if (s2 / s1 < 1.05) fit.degenerate = true;
    fit.params = {p1, s1, s2};
    return fit;
}

double auto_xrp(const Bgmm& b)
{
    const double lhs = std::log(b.p1 * b.sigma2 / ((1.0 - b.p1) * b.sigma1));
    const double k = 1.0 / (b.sigma1 * b.sigma1) - 1.0 / (b.sigma2 * b.sigma2);
    if (!(lhs > 0) || !(k > 0)) throw NoValidPartition("posterior weights never cross");
    return std::sqrt(2.0 * lhs / k);
}

Pgo build_pgo(const Bgmm& b, std::optional<double> x_rp, PgoConstruction how)
{
    const double x = x_rp ? *x_rp : auto_xrp(b);
    if (!(x > 0)) throw NoValidPartition("x_rp must be positive");
    const double Q1 = norm_sf(x / b.sigma1), Q2 = norm_sf(x / b.sigma2);
    const double f1 = norm_pdf(x / b.sigma1) / b.sigma1, f2 = norm_pdf(x / b.sigma2) / b.sigma2;
    double T, c;
    if (how == PgoConstruction::CdfMatched) {
        T = (b.p1 * Q1 + (1.0 - b.p1) * Q2) / Q2;
        c = (1.0 - b.p1) * (1.0 - 2.0 * Q2) / (2.0 * x);
    } else {
        T = (1.0 - b.p1 * (1.0 - 2.0 * Q1) + 2.0 * x * b.p1 * f1) / (2.0 * Q2 + 2.0 * x * f2);
        c = T * f2 - b.p1 * f1;
    }
    if (!(T > 0) || !std::isfinite(T)) throw NoValidPartition("negative tail coefficient");
    Pgo p{b.p1, b.sigma1, b.sigma2, T / (1.0 - b.p1) - 1.0, c, x};
    if (b.p1 * f1 + c < 0) throw NoValidPartition("negative core density");
    return p;
}

PairedBound apply_paired(const ErrorDistribution& d, double b_nom)
{
    if (b_nom < 0) throw Error("b_nom must be non-negative");
    return {d, b_nom};
}

OverboundReport verify_overbound(const ErrorDistribution& candidate, const std::vector<double>& samples)
{
    const auto s = centred_symmetric(samples);
    const auto Fs = plotting_positions(s);
    const double N = static_cast<double>(s.size());
    double core = core_extent(candidate);
    if (core <= 0) {
        double ss = 0;
        for (double v : s) ss += v * v;
        core = std::sqrt(ss / N);
    }
    OverboundReport rep;
    rep.fitted = candidate;
    rep.sample_count = samples.size();
    rep.max_core_violation = -1.0;
    rep.max_tail_violation = -1.0;
    for (size_t i = 0; i < s.size(); ++i) {
        const double F = Fs[i];
        if (std::abs(F - 0.5) < kCentralBand) continue;
        const double G = cdf(candidate, s[i]);
        // left of zero the bound must sit above, right of zero below
        const double v = s[i] < 0 ? F - G : G - F;
        double& slot = std::abs(s[i]) <= core ? rep.max_core_violation : rep.max_tail_violation;
        slot = std::max(slot, v);
    }
    return rep;
}

// ---------------------------------------------------------------------------

SatelliteBoundTable SatelliteBoundTable::parse_csv(std::istream& in)
{
    SatelliteBoundTable t;
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty bound table");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kBoundCsvHeader) throw ParseError("unexpected bound table header: " + line);
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::vector<std::string> f;
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        if (f.size() != 9) throw ParseError("bound table line " + std::to_string(lineno) + ": expected 9 fields");
        SatBound b;
        b.svn = f[0];
        if (f[1].size() != 1 || std::string("TOG").find(f[1][0]) == std::string::npos)
            throw ParseError("bound table line " + std::to_string(lineno) + ": category must be T, O or G");
        b.category = f[1][0];
        b.constellation = b.svn.rfind("GSAT", 0) == 0 ? Constellation::GAL : Constellation::GPS;
        try {
            b.mean_cm = std::stod(f[2]);
            b.std_cm = std::stod(f[3]);
            b.gauss_sigma = std::stod(f[4]);
            b.sigma1 = std::stod(f[5]);
            b.sigma2 = std::stod(f[6]);
            b.p1 = std::stod(f[7]);
            b.x_rp = std::stod(f[8]);
        } catch (const std::exception&) {
            throw ParseError("bound table line " + std::to_string(lineno) + ": bad number");
        }
        if (!(b.gauss_sigma > 0 && b.sigma1 > 0 && b.sigma2 > 0 && b.x_rp > 0 && b.p1 > 0 && b.p1 < 1))
            throw ParseError("bound table line " + std::to_string(lineno) + ": non-positive parameter");
        t.rows_.push_back(b);
    }
    return t;
}

SatelliteBoundTable SatelliteBoundTable::load_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open bound table: " + path);
    return parse_csv(in);
}

void SatelliteBoundTable::write_csv(std::ostream& out) const
{
    out << kBoundCsvHeader << '\n';
    for (const auto& b : rows_)
        out << b.svn << ',' << b.category << ',' << b.mean_cm << ',' << b.std_cm << ',' << b.gauss_sigma << ','
            << b.sigma1 << ',' << b.sigma2 << ',' << b.p1 << ',' << b.x_rp << '\n';
}

const SatBound& SatelliteBoundTable::find(const std::string& svn) const
{
    for (const auto& b : rows_)
        if (b.svn == svn) return b;
    throw UnknownSatellite("no bound entry for " + svn);
}

std::vector<const SatBound*> SatelliteBoundTable::of(Constellation c) const
{
    std::vector<const SatBound*> out;
    for (const auto& b : rows_)
        if (b.constellation == c) out.push_back(&b);
    return out;
}

} // namespace jkraim
