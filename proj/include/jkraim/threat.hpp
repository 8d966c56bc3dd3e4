#pragma once

#include <string>
#include <vector>

#include "jkraim/model.hpp"

namespace jkraim {

struct FaultMode {
    enum class Kind { SatSubset, Constellation };

    int id = 0;                // 1-based; single-satellite modes occupy 1..n
    Kind kind = Kind::SatSubset;
    IndexSet excluded;
    double prior = 0.0;
    int constellation = -1;    // clock column index for constellation modes

    std::string label(const LinearModel<double>* model = nullptr) const;
};

struct ThreatModel {
    std::vector<FaultMode> modes;
    double P_H0 = 1.0;
    double P_not_monitored = 0.0;
    int k_max = 1;

    int N_fault_modes() const { return static_cast<int>(modes.size()); }
};

struct ThreatParams {
    double P_sat = 1e-5;
    double P_const = 1e-4;
    double P_THRES = 9e-8;
    // probability of a constellation-wide fault routed into P_not_monitored
    // when only one constellation is in view
    double single_const_pconst = 0.0;
};

struct KmaxResult {
    int k_max = 1;
    double P_not_monitored = 0.0;
};

// P(X > k) for X ~ Binomial(n, p), summed from the tail
double binomial_tail(int n, int k, double p);

KmaxResult determine_kmax(const std::vector<int>& n_sats_per_const, const ThreatParams& tp = {});

// const_partition: measurement indices per constellation present
ThreatModel enumerate_modes(int n, int k_max, const std::vector<IndexSet>& const_partition,
                            const ThreatParams& tp = {});

// partition of a model's rows by constellation clock column
std::vector<IndexSet> constellation_partition(const LinearModel<double>& model);

} // namespace jkraim
