#include "jkraim/error_model.hpp"

#include <algorithm>
#include <cmath>

#include "jkraim/normal.hpp"

namespace jkraim {

namespace {

void check_elevation(double el)
{
    if (!(el > 0.0 && el <= 90.0)) throw Error("elevation must lie in (0, 90] deg");
}

// Galileo airborne CNMP, 5..90 deg in 5 deg steps
constexpr double kGalCnmp[18] = {0.4529, 0.3553, 0.3063, 0.2638, 0.2593, 0.2555, 0.2504, 0.2438, 0.2396,
                                 0.2359, 0.2339, 0.2302, 0.2295, 0.2278, 0.2297, 0.2310, 0.2274, 0.2277};

} // namespace

double tropo_sigma(double elevation_deg)
{
    check_elevation(elevation_deg);
    const double s = std::sin(elevation_deg * M_PI / 180.0);
    return 0.12 * 1.001 / std::sqrt(0.002001 + s * s);
}

double gps_code_noise(double elevation_deg)
{
    check_elevation(elevation_deg);
    return 0.15 + 0.43 * std::exp(-elevation_deg / 6.9);
}

double gps_multipath(double elevation_deg)
{
    check_elevation(elevation_deg);
    return 0.13 + 0.53 * std::exp(-elevation_deg / 10.0);
}

double gps_cnmp_single(double elevation_deg)
{
    return std::hypot(gps_code_noise(elevation_deg), gps_multipath(elevation_deg));
}

double galileo_cnmp_single(double elevation_deg)
{
    check_elevation(elevation_deg);
    // held flat below the first node
    const double x = std::clamp(elevation_deg, 5.0, 90.0) / 5.0 - 1.0;
    const int i = std::min(static_cast<int>(x), 16);
    const double f = x - i;
    return kGalCnmp[i] + f * (kGalCnmp[i + 1] - kGalCnmp[i]);
}

double if_factor(double f1_mhz, double f2_mhz)
{
    const double g = (f1_mhz / f2_mhz) * (f1_mhz / f2_mhz);
    return std::sqrt((g * g + 1.0) / ((g - 1.0) * (g - 1.0)));
}

double cnmp_sigma(Constellation c, double elevation_deg)
{
    return c == Constellation::GAL ? galileo_cnmp_single(elevation_deg) * if_factor(kFreqL1, kFreqE5a)
                                   : gps_cnmp_single(elevation_deg) * if_factor(kFreqL1, kFreqL2);
}

double RangeErrorModel::sample(std::mt19937_64& rng) const
{
    return jkraim::sample(sisre_truth, rng) + local_sigma * norm_ppf(uniform01(rng));
}

RangeErrorModel error_model(const SatBound& sat, double elevation_deg, BoundFlavor flavor, double b_nom,
                            PgoConstruction how)
{
    RangeErrorModel m;
    m.sisre_truth = sat.bgmm();
    m.local_sigma = std::hypot(tropo_sigma(elevation_deg), cnmp_sigma(sat.constellation, elevation_deg));
    const double local_var = m.local_sigma * m.local_sigma;
    if (flavor == BoundFlavor::Gaussian) {
        m.acc = {Gaussian{sat.gauss_sigma}, m.local_sigma};
        m.weight = 1.0 / (sat.gauss_sigma * sat.gauss_sigma + local_var);
    } else {
        m.acc = {sat.pgo(how), m.local_sigma};
        m.weight = 1.0 / m.acc.variance();
    }
    m.integ = apply_paired(m.acc.base, b_nom);
    return m;
}

} // namespace jkraim
