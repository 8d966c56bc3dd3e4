#pragma once

#include <array>
#include <limits>
#include <string>
#include <vector>

#include "jkraim/distkit.hpp"
#include "jkraim/jackknife.hpp"
#include "jkraim/model.hpp"
#include "jkraim/threat.hpp"

namespace jkraim {

inline constexpr double kUnavailable = std::numeric_limits<double>::infinity();

struct IntegrityBudget {
    double I_REQ_vert = 9.8e-8;
    double I_REQ_horiz_total = 2e-9;
    double C_REQ_FA_vert = 3.9e-6;
    double C_REQ_FA_horiz = 9e-8;
    double P_sat = 1e-5;
    double P_const = 1e-4;
    double P_THRES = 9e-8;
    double b_nom = 0.75;
    double VAL = 35.0;
    double HAL = 40.0;

    double I_REQ() const { return I_REQ_vert + I_REQ_horiz_total; }
    double C_REQ_FA() const { return C_REQ_FA_vert + C_REQ_FA_horiz; }
    // integrity budget of axis v (0 east, 1 north, 2 up)
    double axis_budget(int v) const { return v == 2 ? I_REQ_vert : 0.5 * I_REQ_horiz_total; }
    ThreatParams threat_params() const { return {P_sat, P_const, P_THRES, 0.0}; }
};

enum class Allocation { TotalRisk, EqualSplit };

struct PlOptions {
    Allocation allocation = Allocation::TotalRisk;
    double pl_max = 1e4;
    double tol = 1e-3;
    bool horizontal = true;
    GridOptions grid;
};

struct PlResult {
    std::array<double, 3> pl{kUnavailable, kUnavailable, kUnavailable};
    double vpl = kUnavailable;
    double hpl = kUnavailable;
    std::array<std::string, 3> binding;
    int iterations = 0;

    bool vertical_available() const { return std::isfinite(vpl); }
};

// P(|X| + offset > level) * prior with X ~ dist
struct RiskTerm {
    std::string label;
    double prior = 1.0;
    double offset = 0.0;
    GridDistribution dist = GridDistribution::gaussian(1.0);
};

struct AxisRisk {
    bool bounded = true;       // false when some mode has no test on this axis
    double budget = 0.0;       // deflated allocation for this axis
    std::vector<RiskTerm> terms;
};

// Builds the H0, jackknife and solution-separation terms for axis v.
// int_errors model the jackknife-path errors, ss_errors the reduced-state
// constellation subsets.
AxisRisk jk_risk_terms(const JackknifeDetector& det, const std::vector<CompositeError>& int_errors,
                       const std::vector<CompositeError>& ss_errors, const IntegrityBudget& budget, int v,
                       const GridOptions& grid = {});

double hmi_risk_eval(const AxisRisk& risk, double level);

// PL for one axis; +inf when the budget cannot be met below pl_max
double pl_solve(const AxisRisk& risk, const PlOptions& opt, std::string* binding = nullptr, int* iterations = nullptr);

PlResult jk_protection_levels(const JackknifeDetector& det, const std::vector<CompositeError>& int_errors,
                              const std::vector<CompositeError>& ss_errors, const IntegrityBudget& budget,
                              const PlOptions& opt = {});

struct ConstellationSs {
    double sigma_v = 0.0;
    double D = 0.0;
};

// Gaussian solution separation for a reduced-state subset: sigma of the
// subset error and the separation threshold K_fa * sigma_ss.
ConstellationSs constellation_ss(const MatX<double>& S, const MatX<double>& Sk, const VecX<double>& sigma, int v,
                                 double C_alloc);

// Standard multiple-hypothesis solution-separation ARAIM with Gaussian
// bounds, used as the reference algorithm.
class BaselineAraim {
public:
    BaselineAraim(const LinearModel<double>& model, const ThreatModel& threat, const VecX<double>& sigma,
                  const IntegrityBudget& budget, const PlOptions& opt = {});

    const PlResult& result() const { return result_; }
    bool detect(const VecX<double>& y) const;

private:
    struct Mode {
        MatX<double> Sk;
        std::array<double, 3> sigma{}, bias{}, T{};
        double prior = 0.0;
    };
    MatX<double> S_;
    std::vector<Mode> modes_;
    PlResult result_;
};

PlResult baseline_araim_pl(const LinearModel<double>& model, const ThreatModel& threat, const VecX<double>& sigma,
                           const IntegrityBudget& budget, const PlOptions& opt = {});

} // namespace jkraim
