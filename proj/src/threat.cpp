#include "jkraim/threat.hpp"

#include <cmath>
#include <numeric>

namespace jkraim {

std::string FaultMode::label(const LinearModel<double>* model) const
{
    std::string s = kind == Kind::Constellation ? "const:" : "sat:";
    if (kind == Kind::Constellation && model && !model->const_of.empty() && !excluded.empty())
        return s + to_string(static_cast<Constellation>(model->const_of[static_cast<size_t>(excluded.front())]));
    for (size_t i = 0; i < excluded.size(); ++i) {
        if (i) s += '+';
        const int k = excluded[i];
        s += model && static_cast<size_t>(k) < model->sat_ids.size() ? model->sat_ids[static_cast<size_t>(k)]
                                                                   : std::to_string(k + 1);
    }
    return s;
}

double binomial_tail(int n, int k, double p)
{
    if (k >= n || p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    double sum = 0.0;
    for (int i = k + 1; i <= n; ++i) {
        const double lc = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) - std::lgamma(n - i + 1.0);
        sum += std::exp(lc + i * std::log(p) + (n - i) * std::log1p(-p));
    }
    return sum;
}

namespace {

// constellation events nobody monitors
double const_unmonitored(int C, int n, const ThreatParams& tp)
{
    if (C <= 1) return C == 1 ? tp.single_const_pconst : 0.0;
    const double pc = tp.P_const;
    const double none = std::pow(1.0 - pc, C);
    const double one = C * pc * std::pow(1.0 - pc, C - 1);
    const double any_sat = -std::expm1(n * std::log1p(-tp.P_sat));
    return (1.0 - none - one) + one * any_sat;
}

} // namespace

KmaxResult determine_kmax(const std::vector<int>& n_sats_per_const, const ThreatParams& tp)
{
    const int n = std::accumulate(n_sats_per_const.begin(), n_sats_per_const.end(), 0);
    if (n < 1) throw Error("need at least one satellite");
    const int C = static_cast<int>(n_sats_per_const.size());
    KmaxResult r;
    for (int k = 1; k <= n; ++k) {
        if (binomial_tail(n, k, tp.P_sat) <= tp.P_THRES) {
            r.k_max = k;
            break;
        }
    }
    r.P_not_monitored = binomial_tail(n, r.k_max, tp.P_sat) + const_unmonitored(C, n, tp);
    return r;
}

std::vector<IndexSet> constellation_partition(const LinearModel<double>& model)
{
    const int nc = model.n_clock();
    std::vector<IndexSet> parts(static_cast<size_t>(std::max(nc, 1)));
    for (Eigen::Index i = 0; i < model.n(); ++i) {
        int c = 0;
        for (int j = 0; j < nc; ++j)
            if (model.G(i, 3 + j) == 1.0) c = j;
        parts[static_cast<size_t>(c)].push_back(static_cast<int>(i));
    }
    return parts;
}

ThreatModel enumerate_modes(int n, int k_max, const std::vector<IndexSet>& const_partition, const ThreatParams& tp)
{
    const int C = static_cast<int>(const_partition.size());
    const int m = 3 + std::max(C, 1);
    if (k_max < 1) throw Error("k_max must be at least 1");
    if (n - k_max < m) throw InsufficientRedundancy("not enough measurements to monitor k_max faults");

    ThreatModel t;
    t.k_max = k_max;
    int id = 1;
    IndexSet idx;
    // all subsets of size k in lexicographic order
    for (int k = 1; k <= k_max; ++k) {
        idx.resize(static_cast<size_t>(k));
        std::iota(idx.begin(), idx.end(), 0);
        const double prior = std::pow(tp.P_sat, k) * std::pow(1.0 - tp.P_sat, n - k);
        while (true) {
            t.modes.push_back({id++, FaultMode::Kind::SatSubset, idx, prior, -1});
            int i = k - 1;
            while (i >= 0 && idx[static_cast<size_t>(i)] == n - k + i) --i;
            if (i < 0) break;
            ++idx[static_cast<size_t>(i)];
            for (int j = i + 1; j < k; ++j) idx[static_cast<size_t>(j)] = idx[static_cast<size_t>(j - 1)] + 1;
        }
    }
    if (C >= 2) {
        const double prior = tp.P_const * std::pow(1.0 - tp.P_const, C - 1);
        for (int c = 0; c < C; ++c)
            if (!const_partition[static_cast<size_t>(c)].empty())
                t.modes.push_back({id++, FaultMode::Kind::Constellation, const_partition[static_cast<size_t>(c)], prior, c});
    }
    t.P_H0 = std::pow(1.0 - tp.P_sat, n) * std::pow(1.0 - tp.P_const, C >= 2 ? C : 0);
    if (C <= 1) t.P_H0 = std::pow(1.0 - tp.P_sat, n) * (1.0 - tp.single_const_pconst);
    t.P_not_monitored = binomial_tail(n, k_max, tp.P_sat) + const_unmonitored(C, n, tp);
    return t;
}

} // namespace jkraim
