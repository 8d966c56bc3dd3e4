#pragma once

#include <cstdint>
#include <random>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "jkraim/errors.hpp"

namespace jkraim {

struct Gaussian {
    double sigma = 1.0;
};

// zero-mean two-component mixture
struct Bgmm {
    double p1 = 0.9;
    double sigma1 = 1.0;
    double sigma2 = 3.0;
};

// Core |x| <= x_rp: p1 N(x; sigma1) + c_offset
// Tail |x| >  x_rp: (1 + k_gain)(1 - p1) N(x; sigma2)
struct Pgo {
    double p1 = 0.9;
    double sigma1 = 1.0;
    double sigma2 = 3.0;
    double k_gain = 0.0;
    double c_offset = 0.0;
    double x_rp = 1.0;

    double tail_coef() const { return (1.0 + k_gain) * (1.0 - p1); }
};

using ErrorDistribution = std::variant<Gaussian, Bgmm, Pgo>;

// Throws Error when parameters violate the type invariants.
void validate(const ErrorDistribution& d);

double pdf(const ErrorDistribution& d, double x);
double cdf(const ErrorDistribution& d, double x);
double sf(const ErrorDistribution& d, double x);
double variance(const ErrorDistribution& d);
// sigma of the widest Gaussian component
double wide_sigma(const ErrorDistribution& d);
double core_extent(const ErrorDistribution& d);
bool is_gaussian(const ErrorDistribution& d);

double quantile(const ErrorDistribution& d, double p);

// uniform on the open interval (0, 1), 53-bit
inline double uniform01(std::mt19937_64& rng)
{
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// inverse-CDF draw
double sample(const ErrorDistribution& d, std::mt19937_64& rng);

// Three-branch CDF: base shifted left by b_nom below -b_nom, plateau 0.5 on
// [-b_nom, b_nom], base shifted right above.
struct PairedBound {
    ErrorDistribution base = Gaussian{1.0};
    double b_nom = 0.0;

    double cdf(double x) const;
    double quantile(double p) const;
    double sample(std::mt19937_64& rng) const;
};

struct GridOptions {
    int points = 1 << 16;         // cells per term support
    int max_points = 1 << 22;
    double support_sigmas = 12.0;
    bool force_grid = false;      // skip the Gaussian closed-form short cut
};

// Symmetric zero-mean distribution on a uniform grid of cell masses with an
// analytic Gaussian continuation past the last cell. A pure Gaussian result
// is carried in closed form.
class GridDistribution {
public:
    static GridDistribution gaussian(double sigma);

    double cdf(double x) const;
    double sf(double x) const;
    double quantile(double p) const;
    // upper-tail inverse: smallest x >= 0 with sf(x) <= q
    double isf(double q) const;
    double variance() const;
    double total_mass() const;

    bool closed_form() const { return closed_; }
    double sigma() const { return sigma_; }
    double step() const { return h_; }
    double half_width() const { return edge_; }
    double tail_sigma() const { return tail_sigma_; }
    // cell masses for indices 0..J (index 0 is the centre cell)
    const std::vector<double>& half_masses() const { return mass_; }

private:
    friend GridDistribution scaled_convolve(const Eigen::Ref<const Eigen::VectorXd>&,
                                            const std::vector<ErrorDistribution>&, const GridOptions&);
    void finalize();

    bool closed_ = false;
    double sigma_ = 0.0;
    double h_ = 0.0;
    double edge_ = 0.0;
    double tail_sigma_ = 0.0;
    double tail_weight_ = 0.0;
    std::vector<double> mass_;  // centre cell j = 0 .. J
    std::vector<double> tail_;  // tail_[j] = sum_{i >= j} mass_[i]
};

// Distribution of sum_j coeffs[j] * eps_j for independent eps_j ~ dists[j].
GridDistribution scaled_convolve(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                 const std::vector<ErrorDistribution>& dists, const GridOptions& opt = {});

// A base distribution plus an independent zero-mean Gaussian (the per-range
// error model: SISRE bound plus troposphere and code noise/multipath).
struct CompositeError {
    ErrorDistribution base = Gaussian{1.0};
    double gauss_sigma = 0.0;

    double variance() const { return jkraim::variance(base) + gauss_sigma * gauss_sigma; }
};

GridDistribution scaled_convolve(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                 const std::vector<CompositeError>& errs, const GridOptions& opt = {});

} // namespace jkraim
