#pragma once

#include <random>

#include "jkraim/distkit.hpp"
#include "jkraim/overbound.hpp"

namespace jkraim {

inline constexpr double kFreqL1 = 1575.42;   // MHz, also Galileo E1
inline constexpr double kFreqL2 = 1227.60;
inline constexpr double kFreqE5a = 1176.45;

// residual troposphere sigma, m
double tropo_sigma(double elevation_deg);

// single-frequency airborne code noise and multipath, m
double gps_code_noise(double elevation_deg);
double gps_multipath(double elevation_deg);
double gps_cnmp_single(double elevation_deg);
double galileo_cnmp_single(double elevation_deg);

// noise inflation of the dual-frequency ionosphere-free combination
double if_factor(double f1_mhz, double f2_mhz);

// ionosphere-free code noise and multipath sigma for the constellation
double cnmp_sigma(Constellation c, double elevation_deg);

enum class BoundFlavor { Gaussian, Pgo };

// Per-range error model at one elevation.
struct RangeErrorModel {
    Bgmm sisre_truth;          // generating distribution of the orbit/clock error
    double local_sigma = 0.0;  // troposphere and CNMP, root-sum-square
    CompositeError acc;        // accuracy bound
    PairedBound integ;         // integrity bound: acc SISRE part shifted by b_nom
    double weight = 1.0;

    double sample(std::mt19937_64& rng) const;
};

RangeErrorModel error_model(const SatBound& sat, double elevation_deg, BoundFlavor flavor, double b_nom,
                            PgoConstruction how = PgoConstruction::CdfMatched);

} // namespace jkraim
