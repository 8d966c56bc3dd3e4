#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "jkraim/distkit.hpp"
#include "jkraim/model.hpp"

namespace jkraim {

// How k and c of a PGO are pinned down for a given x_rp.
//  CdfMatched:        tail CDF equals the BGMM CDF at x_rp; c from unit mass
//  DensityContinuous: density continuous at x_rp; c from unit mass
enum class PgoConstruction { CdfMatched, DensityContinuous };

class NonOverboundable : public Error { using Error::Error; };

struct OverboundReport {
    ErrorDistribution fitted;
    double max_core_violation = 0.0;  // signed, > 0 means the bound is crossed
    double max_tail_violation = 0.0;
    std::size_t sample_count = 0;

    double max_violation() const { return std::max(max_core_violation, max_tail_violation); }
};

struct BgmmFit {
    Bgmm params;
    int iterations = 0;
    bool degenerate = false;
    std::vector<double> loglik;  // mean log-likelihood per iteration
};

struct EmOptions {
    double p1_init = 0.9;
    double sigma1_scale = 0.5;
    double sigma2_scale = 2.0;
    double tol = 1e-8;
    int max_iter = 500;
};

// Smallest sigma whose CDF dominates the (mean-centred, symmetrised) empirical
// CDF on both sides of zero. Mid-rank plotting positions; the central 10% of
// probability around the median is not scored.
double fit_gaussian_overbound(const std::vector<double>& samples);

BgmmFit fit_bgmm(const std::vector<double>& samples, const EmOptions& opt = {});

// abscissa where both component posteriors are equal
double auto_xrp(const Bgmm& b);

Pgo build_pgo(const Bgmm& b, std::optional<double> x_rp = std::nullopt,
              PgoConstruction how = PgoConstruction::CdfMatched);

PairedBound apply_paired(const ErrorDistribution& d, double b_nom);

// Core region: |x| <= x_rp for a PGO, else |x| <= one sample std. Scored on
// the same points as fit_gaussian_overbound.
OverboundReport verify_overbound(const ErrorDistribution& candidate, const std::vector<double>& samples);

struct SatBound {
    std::string svn;
    char category = 'G';  // T two-side heavy, O one-side heavy, G Gaussian-like
    Constellation constellation = Constellation::GPS;
    double mean_cm = 0.0;
    double std_cm = 0.0;
    double gauss_sigma = 0.0;
    double sigma1 = 0.0;
    double sigma2 = 0.0;
    double p1 = 0.0;
    double x_rp = 0.0;

    Bgmm bgmm() const { return {p1, sigma1, sigma2}; }
    Pgo pgo(PgoConstruction how = PgoConstruction::CdfMatched) const { return build_pgo(bgmm(), x_rp, how); }
};

class SatelliteBoundTable {
public:
    static SatelliteBoundTable parse_csv(std::istream& in);
    static SatelliteBoundTable load_csv(const std::string& path);
    void write_csv(std::ostream& out) const;

    const SatBound& find(const std::string& svn) const;
    std::vector<const SatBound*> of(Constellation c) const;
    const std::vector<SatBound>& rows() const { return rows_; }

    std::vector<SatBound> rows_;
};

inline constexpr const char* kBoundCsvHeader = "svn,category,mean_cm,std_cm,gauss_sigma_m,sigma1_m,sigma2_m,p1,xrp_m";

} // namespace jkraim
