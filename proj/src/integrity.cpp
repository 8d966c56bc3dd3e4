#include "jkraim/integrity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "jkraim/normal.hpp"

namespace jkraim {

namespace {

double two_sided(const GridDistribution& d, double a)
{
    if (a <= 0) return 1.0;
    return std::min(1.0, 2.0 * d.sf(a));
}

// decreasing f; smallest x in [0, hi] with f(x) <= 0 to within tol
double bisect_down(const std::function<double(double)>& f, double hi, double tol, int* iters)
{
    int it = 0;
    if (f(hi) > 0) {
        if (iters) *iters = 1;
        return kUnavailable;
    }
    double lo = 0.0;
    if (f(lo) <= 0) {
        if (iters) *iters = 2;
        return 0.0;
    }
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        (f(mid) > 0 ? lo : hi) = mid;
        ++it;
    }
    if (iters) *iters = it;
    return hi;
}

// budget of state axis v; the vertical budget goes to the vertical state
double budget_of(const IntegrityBudget& b, Eigen::Index m, int v)
{
    return v == vertical_axis(m) ? b.axis_budget(2) : b.axis_budget(v);
}

// state axes to evaluate, vertical first
std::vector<int> pl_axes(Eigen::Index m, bool horizontal)
{
    if (m < 3) return {0};
    return horizontal ? std::vector<int>{2, 0, 1} : std::vector<int>{2};
}

} // namespace

AxisRisk jk_risk_terms(const JackknifeDetector& det, const std::vector<CompositeError>& int_errors,
                       const std::vector<CompositeError>& ss_errors, const IntegrityBudget& budget, int v,
                       const GridOptions& grid)
{
    const auto& model = det.model();
    const auto& threat = det.threat();
    const auto& S = det.S();
    AxisRisk out;

    double p_nm = threat.P_not_monitored;
    for (const auto& s : det.setups()) {
        if (s.path != ModeSetup::Path::Unmonitorable) continue;
        if (s.mode.prior > budget.P_THRES) out.bounded = false;
        p_nm += s.mode.prior;
    }
    out.budget = budget_of(budget, model.m(), v) * (1.0 - p_nm / budget.I_REQ());
    if (out.budget <= 0) out.bounded = false;

    // every monitored mode needs a test on this axis
    for (size_t k = 0; k < det.setups().size() && out.bounded; ++k)
        if (det.setups()[k].path != ModeSetup::Path::Unmonitorable && det.test_for(static_cast<int>(k), v) < 0)
            out.bounded = false;
    if (!out.bounded) return out;

    {
        RowX<double> s = S.row(v);
        out.terms.push_back({"H0", threat.P_H0, bias_projection(s, budget.b_nom),
                             scaled_convolve(s.transpose(), int_errors, grid)});
    }
    for (size_t k = 0; k < det.setups().size(); ++k) {
        const auto& st = det.setups()[k];
        if (st.path == ModeSetup::Path::Unmonitorable) continue;
        const auto& test = det.tests()[static_cast<size_t>(det.test_for(static_cast<int>(k), v))];
        const double b = bias_projection(st.ops.S.row(v), budget.b_nom);
        RiskTerm term;
        term.label = st.mode.label(&model);
        term.prior = st.mode.prior;
        if (st.path == ModeSetup::Path::Jackknife) {
            const RowX<double> q = q_vector(model, S, st.ops.S, st.mode.excluded, v);
            const double scale = st.mode.excluded.size() == 1 ? std::abs(S(v, st.mode.excluded.front())) : 1.0;
            term.offset = scale * test.threshold + b;
            term.dist = scaled_convolve(q.transpose(), int_errors, grid);
        } else {
            const RowX<double> sk = st.ops.S.row(v);
            term.offset = test.threshold + b;
            term.dist = scaled_convolve(sk.transpose(), ss_errors, grid);
        }
        out.terms.push_back(std::move(term));
    }
    return out;
}

double hmi_risk_eval(const AxisRisk& risk, double level)
{
    double r = 0.0;
    for (const auto& t : risk.terms) r += t.prior * two_sided(t.dist, level - t.offset);
    return r;
}

double pl_solve(const AxisRisk& risk, const PlOptions& opt, std::string* binding, int* iterations)
{
    if (!risk.bounded || risk.terms.empty()) return kUnavailable;
    if (opt.allocation == Allocation::EqualSplit) {
        const double share = risk.budget / static_cast<double>(risk.terms.size());
        double best = 0.0;
        size_t arg = 0;
        for (size_t k = 0; k < risk.terms.size(); ++k) {
            const auto& t = risk.terms[k];
            const double q = share / (2.0 * t.prior);
            const double pl = t.offset + (q >= 0.5 ? 0.0 : t.dist.isf(q));
            if (pl > best) {
                best = pl;
                arg = k;
            }
        }
        if (binding) *binding = risk.terms[arg].label;
        if (iterations) *iterations = 0;
        return best > opt.pl_max ? kUnavailable : best;
    }
    const double pl = bisect_down([&](double x) { return hmi_risk_eval(risk, x) - risk.budget; }, opt.pl_max,
                                  opt.tol, iterations);
    if (binding && std::isfinite(pl)) {
        double best = -1.0;
        for (const auto& t : risk.terms) {
            const double c = t.prior * two_sided(t.dist, pl - t.offset);
            if (c > best) {
                best = c;
                *binding = t.label;
            }
        }
    }
    return pl;
}

PlResult jk_protection_levels(const JackknifeDetector& det, const std::vector<CompositeError>& int_errors,
                              const std::vector<CompositeError>& ss_errors, const IntegrityBudget& budget,
                              const PlOptions& opt)
{
    PlResult r;
    const auto m = det.model().m();
    for (int v : pl_axes(m, opt.horizontal)) {
        const auto risk = jk_risk_terms(det, int_errors, ss_errors, budget, v, opt.grid);
        const auto slot = static_cast<size_t>(v == vertical_axis(m) ? 2 : v);
        int it = 0;
        r.pl[slot] = pl_solve(risk, opt, &r.binding[slot], &it);
        r.iterations += it;
    }
    r.vpl = r.pl[2];
    r.hpl = std::hypot(r.pl[0], r.pl[1]);
    return r;
}

ConstellationSs constellation_ss(const MatX<double>& S, const MatX<double>& Sk, const VecX<double>& sigma, int v,
                                 double C_alloc)
{
    ConstellationSs out;
    const VecX<double> var = sigma.cwiseAbs2();
    out.sigma_v = std::sqrt(Sk.row(v).cwiseAbs2().dot(var.transpose()));
    const double sss = std::sqrt((Sk.row(v) - S.row(v)).cwiseAbs2().dot(var.transpose()));
    out.D = sss * norm_isf(0.5 * C_alloc);
    return out;
}

// ---------------------------------------------------------------------------

BaselineAraim::BaselineAraim(const LinearModel<double>& model, const ThreatModel& threat, const VecX<double>& sigma,
                             const IntegrityBudget& budget, const PlOptions& opt)
{
    S_ = solution_matrix(model.G, model.W);
    const VecX<double> var = sigma.cwiseAbs2();
    double p_nm = threat.P_not_monitored;
    bool ok = true;
    for (const auto& fm : threat.modes) {
        SubsetOps<double> ops;
        try {
            ops = subset_ops(model, fm.excluded, true);
        } catch (const SubsetRankDeficient&) {
            if (fm.prior > budget.P_THRES) ok = false;
            p_nm += fm.prior;
            continue;
        }
        Mode m;
        m.Sk = ops.S;
        m.prior = fm.prior;
        modes_.push_back(std::move(m));
    }
    const double N = std::max<double>(1.0, static_cast<double>(modes_.size()));
    const double K_v = norm_isf(budget.C_REQ_FA_vert / (2.0 * N));
    const double K_h = norm_isf(budget.C_REQ_FA_horiz / (4.0 * N));
    for (auto& m : modes_) {
        for (int v = 0; v < std::min<int>(3, static_cast<int>(model.m())); ++v) {
            m.sigma[v] = std::sqrt(m.Sk.row(v).cwiseAbs2().dot(var.transpose()));
            const double sss = std::sqrt((m.Sk.row(v) - S_.row(v)).cwiseAbs2().dot(var.transpose()));
            m.T[v] = (v == vertical_axis(model.m()) ? K_v : K_h) * sss;
            m.bias[v] = bias_projection(m.Sk.row(v), budget.b_nom);
        }
    }

    const double deflate = 1.0 - p_nm / budget.I_REQ();
    for (int v : pl_axes(model.m(), opt.horizontal)) {
        const double sig0 = std::sqrt(S_.row(v).cwiseAbs2().dot(var.transpose()));
        const double b0 = bias_projection(S_.row(v), budget.b_nom);
        const double target = budget_of(budget, model.m(), v) * deflate;
        if (!ok || target <= 0) continue;
        auto f = [&](double pl) {
            double r = 2.0 * norm_sf((pl - b0) / sig0);
            for (const auto& m : modes_) r += m.prior * norm_sf((pl - m.T[v] - m.bias[v]) / m.sigma[v]);
            return r - target;
        };
        int it = 0;
        result_.pl[static_cast<size_t>(v == vertical_axis(model.m()) ? 2 : v)] =
            bisect_down(f, opt.pl_max, opt.tol, &it);
        result_.iterations += it;
    }
    result_.vpl = result_.pl[2];
    result_.hpl = std::hypot(result_.pl[0], result_.pl[1]);
}

bool BaselineAraim::detect(const VecX<double>& y) const
{
    const VecX<double> x0 = S_ * y;
    for (const auto& m : modes_) {
        const VecX<double> d = m.Sk * y - x0;
        for (Eigen::Index v = 0; v < std::min<Eigen::Index>(3, d.size()); ++v)
            if (std::abs(d(v)) > m.T[static_cast<size_t>(v)]) return true;
    }
    return false;
}

PlResult baseline_araim_pl(const LinearModel<double>& model, const ThreatModel& threat, const VecX<double>& sigma,
                           const IntegrityBudget& budget, const PlOptions& opt)
{
    return BaselineAraim(model, threat, sigma, budget, opt).result();
}

} // namespace jkraim
