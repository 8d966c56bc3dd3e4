#include <doctest.h>

#include <algorithm>

#include "common.hpp"
#include "jkraim/distkit.hpp"
#include "jkraim/normal.hpp"
#include "jkraim/overbound.hpp"

using namespace jkraim;

namespace {

// SVN63 row of the bounds table
const Bgmm kSvn63{0.97, 0.419, 4.425};
const double kSvn63Xrp = 1.073;

Eigen::VectorXd vec(std::initializer_list<double> v)
{
    Eigen::VectorXd r(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) r(i++) = x;
    return r;
}

} // namespace

TEST_CASE("difference of two unit normals")
{
    const auto g = scaled_convolve(vec({1, -1}), std::vector<ErrorDistribution>{Gaussian{1}, Gaussian{1}});
    CHECK(g.closed_form());
    CHECK(std::abs(g.quantile(0.025) + 2.7718) < 1e-3);

    GridOptions grid;
    grid.force_grid = true;
    const auto h = scaled_convolve(vec({1, -1}), std::vector<ErrorDistribution>{Gaussian{1}, Gaussian{1}}, grid);
    CHECK(!h.closed_form());
    CHECK(std::abs(h.quantile(0.025) + 2.7718) < 1e-3);
    CHECK(std::abs(h.variance() / 2.0 - 1.0) < 1e-6);
    CHECK(std::abs(h.total_mass() - 1.0) < 1e-9);
}

TEST_CASE("zero coefficients are skipped")
{
    const Pgo p = build_pgo(kSvn63, kSvn63Xrp);
    const auto g = scaled_convolve(vec({1, 0}), std::vector<ErrorDistribution>{p, Gaussian{7}});
    for (double x : {0.1, 0.5, 1.0, 2.0, 5.0, 10.0})
        CHECK(std::abs(g.cdf(x) - cdf(ErrorDistribution{p}, x)) < 1e-6);
}

TEST_CASE("all-zero coefficients are rejected")
{
    CHECK_THROWS_AS(scaled_convolve(vec({0, 0}), std::vector<ErrorDistribution>{Gaussian{1}, Gaussian{1}}), Error);
}

TEST_CASE("standard normal quantiles")
{
    const ErrorDistribution n{Gaussian{1.0}};
    CHECK(std::abs(quantile(n, 1e-7) + 5.1993) < 1e-3);
    CHECK(quantile(n, 0.5) == 0.0);
    CHECK(std::abs(GridDistribution::gaussian(1.0).quantile(1e-7) + 5.1993) < 1e-3);
}

TEST_CASE("symmetric distributions have zero median")
{
    const Pgo p = build_pgo(kSvn63, kSvn63Xrp);
    CHECK(quantile(ErrorDistribution{p}, 0.5) == 0.0);
    CHECK(quantile(ErrorDistribution{kSvn63}, 0.5) == 0.0);
    const auto g = scaled_convolve(vec({0.5, 0.5}), std::vector<ErrorDistribution>{p, p});
    CHECK(std::abs(g.quantile(0.5)) < 1e-6);
}

TEST_CASE("PGO quantile lies between its core and tail Gaussian quantiles")
{
    const Pgo p = build_pgo(kSvn63, kSvn63Xrp);
    const double q = quantile(ErrorDistribution{p}, 1e-7);
    const double core = kSvn63.sigma1 * norm_ppf(1e-7);
    const double tail = kSvn63.sigma2 * norm_ppf(1e-7 / p.tail_coef());
    CHECK(q < core);
    CHECK(q >= tail - 1e-6);
    // direct check against a trapezoid integral of the density
    double mass = 0.0, x = -q;
    const double h = 1e-3;
    for (double t = x; t < 80.0; t += h)
        mass += 0.5 * h * (pdf(ErrorDistribution{p}, t) + pdf(ErrorDistribution{p}, t + h));
    CHECK(std::abs(mass - 1e-7) < 1e-9);
}

TEST_CASE("PGO self-convolution against Monte Carlo")
{
    const Pgo p = build_pgo(kSvn63, kSvn63Xrp);
    const auto g = scaled_convolve(vec({0.5, 0.5}), std::vector<ErrorDistribution>{p, p});
    std::mt19937_64 rng(99);
    std::vector<double> xs(1000000);
    for (auto& x : xs) x = 0.5 * sample(ErrorDistribution{p}, rng) + 0.5 * sample(ErrorDistribution{p}, rng);
    std::sort(xs.begin(), xs.end());
    // 1e6 draws: the 99.9% Kolmogorov band is about 1.95/sqrt(n)
    CHECK(test::ks_distance(xs, [&](double x) { return g.cdf(x); }) < 2e-3);
}

TEST_CASE("unit normal sampling")
{
    std::mt19937_64 rng(5);
    const ErrorDistribution n{Gaussian{1.0}};
    double s = 0, s2 = 0;
    const int N = 1000000;
    for (int i = 0; i < N; ++i) {
        const double x = sample(n, rng);
        s += x;
        s2 += x * x;
    }
    const double mean = s / N;
    CHECK(std::abs(std::sqrt(s2 / N - mean * mean) - 1.0) < 3e-3);
}

TEST_CASE("paired bound sampling stays inside the bias envelope")
{
    const PairedBound pb{Gaussian{1.0}, 0.75};
    std::mt19937_64 rng(6);
    const int N = 100000;
    double s = 0, s2 = 0;
    for (int i = 0; i < N; ++i) {
        const double x = pb.sample(rng);
        s += x;
        s2 += x * x;
    }
    const double mean = s / N;
    const double mc = std::sqrt((s2 / N - mean * mean) / N);
    CHECK(std::abs(mean) <= 0.75 + 3 * mc);
}

TEST_CASE("sampling is reproducible per seed")
{
    const Pgo p = build_pgo(kSvn63, kSvn63Xrp);
    std::mt19937_64 a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(sample(ErrorDistribution{p}, a) == sample(ErrorDistribution{p}, b));
}

TEST_CASE("grid and closed-form Gaussian agree")
{
    GridOptions grid;
    grid.force_grid = true;
    const auto c = vec({0.3, -1.2, 0.7, 2.0});
    std::vector<ErrorDistribution> d{Gaussian{1.0}, Gaussian{0.5}, Gaussian{2.0}, Gaussian{0.8}};
    const auto closed = scaled_convolve(c, d);
    const auto numeric = scaled_convolve(c, d, grid);
    REQUIRE(closed.closed_form());
    CHECK(std::abs(numeric.variance() / closed.variance() - 1.0) < 1e-6);
    for (double p : {1e-2, 1e-4, 1e-7}) CHECK(std::abs(numeric.quantile(p) / closed.quantile(p) - 1.0) < 1e-3);
}

TEST_CASE("cdf and quantile round trip")
{
    const Pgo p = build_pgo(kSvn63, kSvn63Xrp);
    const ErrorDistribution d{p};
    const auto g = scaled_convolve(vec({0.6, 0.8}), std::vector<ErrorDistribution>{p, Bgmm{0.9, 1, 3}});
    for (double q : {1e-9, 1e-8, 1e-7, 1e-5, 1e-3, 0.1, 0.3, 0.5}) {
        CHECK(std::abs(cdf(d, quantile(d, q)) - q) <= std::max(1e-9, 1e-3 * q));
        CHECK(std::abs(g.cdf(g.quantile(q)) - q) <= std::max(1e-9, 1e-3 * q));
    }
}

TEST_CASE("quantiles are antisymmetric and monotone")
{
    const auto g = scaled_convolve(vec({0.6, 0.8}),
                                   std::vector<ErrorDistribution>{build_pgo(kSvn63, kSvn63Xrp), Bgmm{0.9, 1, 3}});
    double prev = -1e300;
    for (double q : {1e-9, 1e-7, 1e-4, 1e-2, 0.2, 0.4}) {
        const double lo = g.quantile(q), hi = g.quantile(1 - q);
        CHECK(std::abs(lo + hi) <= 1e-6 * std::abs(lo) + 1e-6);
        CHECK(lo > prev);
        prev = lo;
    }
}

TEST_CASE("grid is symmetric, non-negative and conserves mass")
{
    const auto g = scaled_convolve(vec({1.0, 0.4, -0.7}), std::vector<ErrorDistribution>{
                                                               build_pgo(kSvn63, kSvn63Xrp), Bgmm{0.9, 1, 3},
                                                               Gaussian{0.6}});
    CHECK(std::abs(g.total_mass() - 1.0) < 1e-9);
    for (double m : g.half_masses()) CHECK(m >= 0.0);
    for (double x : {0.05, 0.5, 2.0, 8.0, 30.0}) CHECK(std::abs(g.cdf(-x) - g.sf(x)) < 1e-9);
    double prev = 0.0;
    for (double x = -40; x <= 40; x += 0.25) {
        CHECK(g.cdf(x) >= prev);
        prev = g.cdf(x);
    }
}

TEST_CASE("deep tail queries stay finite")
{
    const auto g = scaled_convolve(vec({1.0, 1.0}),
                                   std::vector<ErrorDistribution>{build_pgo(kSvn63, kSvn63Xrp), Gaussian{0.5}});
    const double t = g.isf(1e-9);
    CHECK(std::isfinite(t));
    CHECK(t > 0.0);
    CHECK(std::abs(g.sf(t) - 1e-9) <= 1e-12);
}

TEST_CASE("invalid parameters are rejected")
{
    CHECK_THROWS_AS(validate(Gaussian{0.0}), Error);
    CHECK_THROWS_AS(validate(Bgmm{1.0, 1, 2}), Error);
    CHECK_THROWS_AS(validate(Bgmm{0.5, -1, 2}), Error);
    CHECK_NOTHROW(validate(build_pgo(kSvn63, kSvn63Xrp)));
}
