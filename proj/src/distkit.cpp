#include "jkraim/distkit.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <unsupported/Eigen/FFT>

#include "jkraim/normal.hpp"

namespace jkraim {

namespace {

// F(-a) for a >= 0
double lower_tail(const ErrorDistribution& d, double a)
{
    return std::visit(
        [a](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return norm_sf(a / v.sigma);
            } else if constexpr (std::is_same_v<T, Bgmm>) {
                return v.p1 * norm_sf(a / v.sigma1) + (1.0 - v.p1) * norm_sf(a / v.sigma2);
            } else {
                if (a > v.x_rp) return v.tail_coef() * norm_sf(a / v.sigma2);
                return v.tail_coef() * norm_sf(v.x_rp / v.sigma2) +
                       v.p1 * (norm_sf(a / v.sigma1) - norm_sf(v.x_rp / v.sigma1)) + v.c_offset * (v.x_rp - a);
            }
        },
        d);
}

double density(const ErrorDistribution& d, double x)
{
    const double a = std::abs(x);
    return std::visit(
        [a](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return norm_pdf(a / v.sigma) / v.sigma;
            } else if constexpr (std::is_same_v<T, Bgmm>) {
                return v.p1 * norm_pdf(a / v.sigma1) / v.sigma1 + (1.0 - v.p1) * norm_pdf(a / v.sigma2) / v.sigma2;
            } else {
                if (a > v.x_rp) return v.tail_coef() * norm_pdf(a / v.sigma2) / v.sigma2;
                return v.p1 * norm_pdf(a / v.sigma1) / v.sigma1 + v.c_offset;
            }
        },
        d);
}

// second moment of N(0, s) restricted to |x| > a
double gauss_tail_m2(double s, double a)
{
    const double r = a / s;
    return 2.0 * s * s * (norm_sf(r) + r * norm_pdf(r));
}

// solve F(-a) = p for a >= 0, p in (0, 0.5)
double solve_lower(const ErrorDistribution& d, double p)
{
    if (const auto* g = std::get_if<Gaussian>(&d)) return g->sigma * norm_isf(p);
    double lo = 0.0, hi = wide_sigma(d) * std::max(1.0, norm_isf(p)) + core_extent(d);
    while (lower_tail(d, hi) > p) {
        lo = hi;
        hi *= 2.0;
        if (!std::isfinite(hi)) throw TailUnresolved("quantile search diverged");
    }
    // Newton on log F(-a), kept inside [lo, hi]
    double a = 0.5 * (lo + hi);
    const double lp = std::log(p);
    for (int it = 0; it < 100; ++it) {
        const double F = lower_tail(d, a);
        if (F > p) lo = a; else hi = a;
        if (hi - lo <= 1e-13 * std::max(1.0, hi)) break;
        const double f = density(d, a);
        double next = (F > 0.0 && f > 0.0) ? a + (std::log(F) - lp) * F / f : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - a) <= 1e-14 * std::max(1.0, a)) { a = next; break; }
        a = next;
    }
    return a;
}

} // namespace

void validate(const ErrorDistribution& d)
{
    std::visit(
        [](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                if (!(v.sigma > 0)) throw Error("Gaussian sigma must be positive");
            } else {
                if (!(v.sigma1 > 0 && v.sigma2 > 0)) throw Error("mixture sigmas must be positive");
                if (!(v.p1 > 0 && v.p1 < 1)) throw Error("p1 must lie in (0, 1)");
                if constexpr (std::is_same_v<T, Pgo>) {
                    if (!(v.x_rp > 0)) throw Error("x_rp must be positive");
                    if (!(v.tail_coef() > 0)) throw Error("PGO tail coefficient must be positive");
                    if (v.p1 * norm_pdf(v.x_rp / v.sigma1) / v.sigma1 + v.c_offset < 0)
                        throw Error("PGO core density is negative");
                    const double mass = 2.0 * (v.tail_coef() * norm_sf(v.x_rp / v.sigma2) +
                                               v.p1 * (0.5 - norm_sf(v.x_rp / v.sigma1)) + v.c_offset * v.x_rp);
                    if (std::abs(mass - 1.0) > 1e-9) throw Error("PGO does not integrate to one");
                }
            }
        },
        d);
}

double pdf(const ErrorDistribution& d, double x) { return density(d, x); }

double cdf(const ErrorDistribution& d, double x)
{
    return x <= 0 ? lower_tail(d, -x) : 1.0 - lower_tail(d, x);
}

double sf(const ErrorDistribution& d, double x) { return cdf(d, -x); }

double variance(const ErrorDistribution& d)
{
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian>) {
                return v.sigma * v.sigma;
            } else if constexpr (std::is_same_v<T, Bgmm>) {
                return v.p1 * v.sigma1 * v.sigma1 + (1.0 - v.p1) * v.sigma2 * v.sigma2;
            } else {
                const double core = v.sigma1 * v.sigma1 - gauss_tail_m2(v.sigma1, v.x_rp);
                return v.tail_coef() * gauss_tail_m2(v.sigma2, v.x_rp) + v.p1 * core +
                       v.c_offset * 2.0 * v.x_rp * v.x_rp * v.x_rp / 3.0;
            }
        },
        d);
}

double wide_sigma(const ErrorDistribution& d)
{
    return std::visit(
        [](const auto& v) -> double {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Gaussian>) return v.sigma;
            else return std::max(v.sigma1, v.sigma2);
        },
        d);
}

double core_extent(const ErrorDistribution& d)
{
    if (const auto* p = std::get_if<Pgo>(&d)) return p->x_rp;
    return 0.0;
}

bool is_gaussian(const ErrorDistribution& d) { return std::holds_alternative<Gaussian>(d); }

double quantile(const ErrorDistribution& d, double p)
{
    if (!(p > 0.0 && p < 1.0)) throw Error("quantile probability must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    return p < 0.5 ? -solve_lower(d, p) : solve_lower(d, 1.0 - p);
}

double sample(const ErrorDistribution& d, std::mt19937_64& rng)
{
    const double u = uniform01(rng);
    if (const auto* g = std::get_if<Gaussian>(&d)) return g->sigma * norm_ppf(u);
    if (u == 0.5) return 0.0;
    return u < 0.5 ? -solve_lower(d, u) : solve_lower(d, 1.0 - u);
}

double PairedBound::cdf(double x) const
{
    if (x < -b_nom) return jkraim::cdf(base, x + b_nom);
    if (x > b_nom) return jkraim::cdf(base, x - b_nom);
    return 0.5;
}

double PairedBound::quantile(double p) const
{
    const double q = jkraim::quantile(base, p);
    if (p < 0.5) return q - b_nom;
    if (p > 0.5) return q + b_nom;
    return 0.0;
}

double PairedBound::sample(std::mt19937_64& rng) const
{
    const double z = jkraim::sample(base, rng);
    return z < 0 ? z - b_nom : z + b_nom;
}

// ---------------------------------------------------------------------------

GridDistribution GridDistribution::gaussian(double sigma)
{
    if (!(sigma > 0)) throw Error("Gaussian sigma must be positive");
    GridDistribution g;
    g.closed_ = true;
    g.sigma_ = sigma;
    g.tail_sigma_ = sigma;
    return g;
}

void GridDistribution::finalize()
{
    const size_t J = mass_.size();
    double sum = 0.0;
    for (size_t j = 1; j < J; ++j) sum += mass_[j];
    const double beyond = std::max(0.0, 0.5 * (1.0 - mass_[0]) - sum);
    tail_.assign(J + 1, 0.0);
    tail_[J] = beyond;
    for (size_t j = J; j-- > 0;) tail_[j] = tail_[j + 1] + mass_[j];
    edge_ = (static_cast<double>(J) - 0.5) * h_;
    const double qe = norm_sf(edge_ / tail_sigma_);
    tail_weight_ = qe > 0 ? beyond / qe : 0.0;
}

double GridDistribution::sf(double x) const
{
    if (closed_) return norm_sf(x / sigma_);
    if (x < 0) return 1.0 - sf(-x);
    if (x >= edge_) return tail_weight_ * norm_sf(x / tail_sigma_);
    const size_t j = static_cast<size_t>(std::floor(x / h_ + 0.5));
    const double right = (static_cast<double>(j) + 0.5) * h_;
    return tail_[j + 1] + mass_[j] * (right - x) / h_;
}

double GridDistribution::cdf(double x) const { return x < 0 ? sf(-x) : 1.0 - sf(x); }

double GridDistribution::isf(double q) const
{
    if (!(q > 0.0)) throw TailUnresolved("tail probability must be positive");
    if (q >= 0.5) return 0.0;
    if (closed_) return sigma_ * norm_isf(q);
    const size_t J = mass_.size();
    if (q <= tail_[J]) {
        if (tail_weight_ <= 0.0 || q > tail_weight_) throw TailUnresolved("tail probability below grid resolution");
        return tail_sigma_ * norm_isf(q / tail_weight_);
    }
    // first index with tail_[j] < q, tail_ is non-increasing
    auto it = std::lower_bound(tail_.begin(), tail_.end(), q, [](double a, double b) { return a >= b; });
    const size_t k = static_cast<size_t>(it - tail_.begin());
    const size_t j = k - 1;
    if (mass_[j] <= 0.0) return (static_cast<double>(j) - 0.5) * h_;
    return (static_cast<double>(j) + 0.5) * h_ - (q - tail_[j + 1]) / mass_[j] * h_;
}

double GridDistribution::quantile(double p) const
{
    if (!(p > 0.0 && p < 1.0)) throw Error("quantile probability must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    return p < 0.5 ? -isf(p) : isf(1.0 - p);
}

double GridDistribution::variance() const
{
    if (closed_) return sigma_ * sigma_;
    double v = 0.0;
    for (size_t j = 1; j < mass_.size(); ++j) {
        const double x = static_cast<double>(j) * h_;
        v += 2.0 * mass_[j] * x * x;
    }
    return v;
}

double GridDistribution::total_mass() const
{
    if (closed_) return 1.0;
    return 2.0 * tail_[0] - mass_[0];
}

GridDistribution scaled_convolve(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                 const std::vector<ErrorDistribution>& dists, const GridOptions& opt)
{
    if (static_cast<size_t>(coeffs.size()) != dists.size()) throw Error("coefficient/distribution count mismatch");

    struct Term { double a; const ErrorDistribution* d; };
    std::vector<Term> terms;
    double gvar = 0.0, wide2 = 0.0, extent = 0.0;
    bool any = false;
    for (Eigen::Index j = 0; j < coeffs.size(); ++j) {
        const double a = std::abs(coeffs(j));
        if (a < 1e-14) continue;
        any = true;
        const auto& d = dists[static_cast<size_t>(j)];
        const double w = wide_sigma(d);
        wide2 += a * a * w * w;
        extent += a * core_extent(d);
        if (is_gaussian(d) && !opt.force_grid) gvar += a * a * w * w;
        else terms.push_back({a, &d});
    }
    if (!any) throw Error("all coefficients are zero");
    if (terms.empty()) return GridDistribution::gaussian(std::sqrt(gvar));
    if (opt.points < 16 || opt.points > opt.max_points) throw GridOverflow("grid size outside configured range");

    const ErrorDistribution merged = Gaussian{std::sqrt(std::max(gvar, 0.0))};
    if (gvar > 0) terms.push_back({1.0, &merged});

    const double L = opt.support_sigmas * std::sqrt(wide2) + extent;
    const int J = opt.points / 2 - 1;
    const double h = L / (J + 0.5);
    const int N = 2 * opt.points;

    // half-grid cell masses of one scaled term, exact CDF differences
    auto term_masses = [&](const Term& t) {
        std::vector<double> m(static_cast<size_t>(J + 1), 0.0);
        double prev = lower_tail(*t.d, 0.5 * h / t.a);
        m[0] = 1.0 - 2.0 * prev;
        for (int j = 1; j <= J; ++j) {
            const double cur = lower_tail(*t.d, (j + 0.5) * h / t.a);
            m[static_cast<size_t>(j)] = prev - cur;
            prev = cur;
            if (cur == 0.0) break;
        }
        return m;
    };

    GridDistribution out;
    out.h_ = h;
    out.tail_sigma_ = std::sqrt(wide2);

    if (terms.size() == 1) {
        out.mass_ = term_masses(terms[0]);
        out.mass_.resize(static_cast<size_t>(N / 2), 0.0);
        out.finalize();
        return out;
    }

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::HalfSpectrum);
    std::vector<double> buf(static_cast<size_t>(N));
    std::vector<std::complex<double>> spec, acc;
    for (size_t t = 0; t < terms.size(); ++t) {
        const auto m = term_masses(terms[t]);
        std::fill(buf.begin(), buf.end(), 0.0);
        buf[0] = m[0];
        for (int j = 1; j <= J; ++j) buf[static_cast<size_t>(j)] = buf[static_cast<size_t>(N - j)] = m[static_cast<size_t>(j)];
        fft.fwd(spec, buf);
        if (t == 0) acc = spec;
        else for (size_t k = 0; k < acc.size(); ++k) acc[k] *= spec[k];
    }
    std::vector<double> r;
    fft.inv(r, acc, N);

    out.mass_.assign(static_cast<size_t>(N / 2), 0.0);
    out.mass_[0] = std::max(0.0, r[0]);
    for (int j = 1; j < N / 2; ++j)
        out.mass_[static_cast<size_t>(j)] = std::max(0.0, 0.5 * (r[static_cast<size_t>(j)] + r[static_cast<size_t>(N - j)]));
    out.finalize();
    return out;
}

GridDistribution scaled_convolve(const Eigen::Ref<const Eigen::VectorXd>& coeffs,
                                 const std::vector<CompositeError>& errs, const GridOptions& opt)
{
    if (static_cast<size_t>(coeffs.size()) != errs.size()) throw Error("coefficient/error count mismatch");
    const Eigen::Index n = coeffs.size();
    Eigen::VectorXd c(2 * n);
    std::vector<ErrorDistribution> d;
    d.reserve(static_cast<size_t>(2 * n));
    for (Eigen::Index i = 0; i < n; ++i) {
        c(i) = coeffs(i);
        d.push_back(errs[static_cast<size_t>(i)].base);
    }
    for (Eigen::Index i = 0; i < n; ++i) {
        const double s = errs[static_cast<size_t>(i)].gauss_sigma;
        c(n + i) = s > 0 ? coeffs(i) : 0.0;
        d.push_back(Gaussian{s > 0 ? s : 1.0});
    }
    return scaled_convolve(c, d, opt);
}

} // namespace jkraim
