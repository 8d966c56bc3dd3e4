#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "jkraim/model.hpp"

namespace jkraim {

inline constexpr double kEarthRotation = 7.2921151467e-5;  // rad/s
inline constexpr double kEarthGM = 3.986005e14;             // m^3/s^2
inline constexpr double kSecondsPerWeek = 604800.0;

struct AlmanacEntry {
    int prn = 0;
    Constellation constellation = Constellation::GPS;
    int health = 0;
    double e = 0.0;
    double toa = 0.0;        // s of week
    double i0 = 0.0;         // rad
    double omega_dot = 0.0;  // rad/s
    double sqrt_a = 0.0;     // m^0.5
    double omega0 = 0.0;     // longitude of ascending node at weekly epoch, rad
    double omega = 0.0;      // argument of perigee, rad
    double m0 = 0.0;         // rad
    double af0 = 0.0;
    double af1 = 0.0;
    int week = 0;

    bool healthy() const { return health == 0; }
    std::string id() const;
};

// YUMA blocks; an optional "Constellation: GPS|GAL" line tags the block.
std::vector<AlmanacEntry> parse_yuma(std::istream& in);
std::vector<AlmanacEntry> load_yuma(const std::string& path);
void write_yuma(std::ostream& out, const std::vector<AlmanacEntry>& entries);

// ECEF position at time t (s of week). earth_fixed = false returns the
// inertial-aligned position at the almanac epoch, used for period checks.
Eigen::Vector3d propagate(const AlmanacEntry& alm, double t, bool earth_fixed = true);

// eccentric anomaly from Kepler's equation, Newton iteration
double solve_kepler(double M, double e, int max_iter = 50);

// Nominal constellations used when real almanacs are not at hand.
std::vector<AlmanacEntry> nominal_gps_almanac();
std::vector<AlmanacEntry> nominal_galileo_almanac();

} // namespace jkraim
