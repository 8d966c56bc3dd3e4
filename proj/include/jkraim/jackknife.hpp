#pragma once

#include <vector>

#include "jkraim/distkit.hpp"
#include "jkraim/model.hpp"
#include "jkraim/threat.hpp"

namespace jkraim {

// t_i^(k) = y_i - g_i S^(k) y
double residual(const LinearModel<double>& model, const SubsetOps<double>& ops, int i);

struct CombinedStat {
    double value = 0.0;
    RowX<double> coeffs;  // statistic = coeffs * eps when y = Gx + eps
};

// Single exclusion: the plain residual. Otherwise sum_{i in idx} S_vi t_i^(k).
CombinedStat combined_stat(const LinearModel<double>& model, const MatX<double>& S, const SubsetOps<double>& ops,
                           const IndexSet& excluded, int v);

// Two-sided Bonferroni threshold: P(|t| > T) = C_FA / (N P_H0)
double bonferroni_threshold(const GridDistribution& stat, double C_FA, int n_tests, double P_H0);

enum class DetectorAxes { Vertical, All };

struct DetectorConfig {
    double C_FA = 3.99e-6;
    DetectorAxes axes = DetectorAxes::Vertical;
    bool count_const_modes = true;
    GridOptions grid;
};

struct ModeSetup {
    enum class Path { Jackknife, SolutionSeparation, Unmonitorable };

    FaultMode mode;
    Path path = Path::Jackknife;
    SubsetOps<double> ops;
};

struct DetectorTest {
    int mode = 0;        // index into setups()
    int axis = -1;       // -1: single-fault residual, valid for every axis
    RowX<double> coeffs;
    double threshold = 0.0;
};

struct JkStatistics {
    std::vector<double> stat;
    std::vector<double> threshold;
    std::vector<char> flag;
    bool alert = false;
    double tau = 0.0;
};

// Builds subset operators, test statistics and thresholds for one epoch.
// Modes whose subset loses a clock state fall back to solution separation
// on the reduced state; ss_errors (if given) model those statistics.
class JackknifeDetector {
public:
    JackknifeDetector(const LinearModel<double>& model, const ThreatModel& threat,
                      const std::vector<CompositeError>& acc, const DetectorConfig& cfg = {},
                      const std::vector<CompositeError>* ss_errors = nullptr);

    const LinearModel<double>& model() const { return model_; }
    const ThreatModel& threat() const { return threat_; }
    const DetectorConfig& config() const { return cfg_; }
    const MatX<double>& S() const { return S_; }
    const std::vector<ModeSetup>& setups() const { return setups_; }
    const std::vector<DetectorTest>& tests() const { return tests_; }
    int n_tests() const { return n_counted_; }
    // index of the test guarding mode on axis v, or -1
    int test_for(int mode, int v) const;

    JkStatistics run(const VecX<double>& y) const;

private:
    LinearModel<double> model_;
    ThreatModel threat_;
    DetectorConfig cfg_;
    MatX<double> S_;
    std::vector<ModeSetup> setups_;
    std::vector<DetectorTest> tests_;
    std::vector<std::vector<int>> by_mode_;
    int n_counted_ = 0;
};

} // namespace jkraim
