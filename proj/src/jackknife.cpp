#include "jkraim/jackknife.hpp"

#include <cmath>

namespace jkraim {

double residual(const LinearModel<double>& model, const SubsetOps<double>& ops, int i)
{
    return model.y(i) - model.G.row(i) * (ops.S * model.y);
}

CombinedStat combined_stat(const LinearModel<double>& model, const MatX<double>& S, const SubsetOps<double>& ops,
                           const IndexSet& excluded, int v)
{
    const Eigen::Index n = model.n();
    CombinedStat out;
    out.coeffs = RowX<double>::Zero(n);
    const VecX<double> r = model.y - ops.P * model.y;
    if (excluded.size() == 1) {
        const int i = excluded.front();
        out.value = r(i);
        out.coeffs = -ops.P.row(i);
        out.coeffs(i) += 1.0;
        return out;
    }
    for (int i : excluded) {
        out.value += S(v, i) * r(i);
        RowX<double> row = -ops.P.row(i);
        row(i) += 1.0;
        out.coeffs += S(v, i) * row;
    }
    return out;
}

double bonferroni_threshold(const GridDistribution& stat, double C_FA, int n_tests, double P_H0)
{
    if (n_tests < 1) throw Error("no tests to allocate continuity to");
    return stat.isf(C_FA / (2.0 * n_tests * P_H0));
}

JackknifeDetector::JackknifeDetector(const LinearModel<double>& model, const ThreatModel& threat,
                                     const std::vector<CompositeError>& acc, const DetectorConfig& cfg,
                                     const std::vector<CompositeError>* ss_errors)
    : model_(model), threat_(threat), cfg_(cfg)
{
    if (static_cast<Eigen::Index>(acc.size()) != model.n()) throw Error("one error model per measurement required");
    const auto& ss = ss_errors ? *ss_errors : acc;
    S_ = solution_matrix(model.G, model.W);

    const int up = vertical_axis(model.m());
    const std::vector<int> all_axes = up == 2 ? std::vector<int>{0, 1, 2} : std::vector<int>{0}, vert{up};
    const auto& axes = cfg.axes == DetectorAxes::All ? all_axes : vert;

    by_mode_.resize(threat.modes.size());
    std::vector<const std::vector<CompositeError>*> errs;
    for (size_t k = 0; k < threat.modes.size(); ++k) {
        ModeSetup s;
        s.mode = threat.modes[k];
        const bool is_const = s.mode.kind == FaultMode::Kind::Constellation;
        try {
            if (is_const) throw SubsetRankDeficient("constellation mode");
            s.ops = subset_ops(model, s.mode.excluded);
            s.path = ModeSetup::Path::Jackknife;
        } catch (const SubsetRankDeficient&) {
            try {
                s.ops = subset_ops(model, s.mode.excluded, true);
                s.path = ModeSetup::Path::SolutionSeparation;
            } catch (const SubsetRankDeficient&) {
                s.path = ModeSetup::Path::Unmonitorable;
            }
        }
        setups_.push_back(std::move(s));
        const auto& st = setups_.back();
        if (st.path == ModeSetup::Path::Jackknife && st.mode.excluded.size() == 1) {
            auto cs = combined_stat(model, S_, st.ops, st.mode.excluded, up);
            tests_.push_back({static_cast<int>(k), -1, cs.coeffs, 0.0});
            errs.push_back(&acc);
        } else if (st.path == ModeSetup::Path::Jackknife) {
            for (int v : axes) {
                auto cs = combined_stat(model, S_, st.ops, st.mode.excluded, v);
                tests_.push_back({static_cast<int>(k), v, cs.coeffs, 0.0});
                errs.push_back(&acc);
            }
        } else if (st.path == ModeSetup::Path::SolutionSeparation) {
            for (int v : axes) {
                RowX<double> c = st.ops.S.row(v) - S_.row(v);
                tests_.push_back({static_cast<int>(k), v, c, 0.0});
                errs.push_back(&ss);
            }
        }
    }

    n_counted_ = 0;
    for (const auto& t : tests_)
        if (cfg.count_const_modes || setups_[static_cast<size_t>(t.mode)].mode.kind != FaultMode::Kind::Constellation)
            ++n_counted_;
    for (size_t j = 0; j < tests_.size(); ++j) {
        auto& t = tests_[j];
        by_mode_[static_cast<size_t>(t.mode)].push_back(static_cast<int>(j));
        const auto dist = scaled_convolve(t.coeffs.transpose(), *errs[j], cfg.grid);
        t.threshold = bonferroni_threshold(dist, cfg.C_FA, std::max(n_counted_, 1), threat.P_H0);
    }
}

int JackknifeDetector::test_for(int mode, int v) const
{
    for (int j : by_mode_[static_cast<size_t>(mode)]) {
        const auto& t = tests_[static_cast<size_t>(j)];
        if (t.axis == -1 || t.axis == v) return j;
    }
    return -1;
}

JkStatistics JackknifeDetector::run(const VecX<double>& y) const
{
    JkStatistics out;
    out.tau = cfg_.C_FA;
    for (const auto& t : tests_) {
        const double s = t.coeffs * y;
        out.stat.push_back(s);
        out.threshold.push_back(t.threshold);
        const bool f = std::abs(s) >= t.threshold;
        out.flag.push_back(f ? 1 : 0);
        out.alert = out.alert || f;
    }
    return out;
}

} // namespace jkraim
