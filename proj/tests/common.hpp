#pragma once

#include <cmath>
#include <random>

#include "jkraim/model.hpp"

namespace jkraim::test {

// random unit line-of-sight rows above 5 deg plus clock indicator columns;
// with two clocks the rows alternate constellations
inline LinearModel<double> random_model(std::mt19937_64& rng, int n, int m)
{
    std::uniform_real_distribution<double> az(0.0, 2 * M_PI), sel(std::sin(5 * M_PI / 180), 1.0), w(0.5, 2.0);
    while (true) {
        MatX<double> G = MatX<double>::Zero(n, m);
        VecX<double> W(n);
        std::vector<int> tags;
        for (int i = 0; i < n; ++i) {
            const double s = sel(rng), c = std::sqrt(1 - s * s), a = az(rng);
            G(i, 0) = c * std::sin(a);
            G(i, 1) = c * std::cos(a);
            G(i, 2) = s;
            const int k = m == 5 ? i % 2 : 0;
            G(i, 3 + k) = 1.0;
            tags.push_back(k);
            W(i) = w(rng);
        }
        try {
            return make_model<double>(G, W, VecX<double>::Zero(n), {}, tags);
        } catch (const InsufficientGeometry&) {
        }
    }
}

inline VecX<double> randn(std::mt19937_64& rng, Eigen::Index n)
{
    std::normal_distribution<double> N;
    VecX<double> v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = N(rng);
    return v;
}

// Kolmogorov distance between a sorted sample and a CDF
template <class F>
double ks_distance(const std::vector<double>& sorted, F cdf)
{
    double d = 0.0;
    const double n = static_cast<double>(sorted.size());
    for (size_t i = 0; i < sorted.size(); ++i) {
        const double F0 = cdf(sorted[i]);
        d = std::max({d, std::abs(F0 - i / n), std::abs(F0 - (i + 1) / n)});
    }
    return d;
}

} // namespace jkraim::test
