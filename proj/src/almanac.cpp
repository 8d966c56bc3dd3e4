#include "jkraim/almanac.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace jkraim {

namespace {

constexpr double kDeg = M_PI / 180.0;

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::string lower(std::string s)
{
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

double number(const std::string& v, int line)
{
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (trim(v.substr(pos)).empty()) return x;
    } catch (const std::exception&) {
    }
    throw ParseError("almanac line " + std::to_string(line) + ": bad number '" + v + "'");
}

} // namespace

std::string AlmanacEntry::id() const
{
    char buf[16];
    std::snprintf(buf, sizeof buf, "%c%02d", constellation == Constellation::GAL ? 'E' : 'G', prn);
    return buf;
}

std::vector<AlmanacEntry> parse_yuma(std::istream& in)
{
    std::vector<AlmanacEntry> out;
    AlmanacEntry cur;
    bool open = false;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto colon = line.find(':');
        if (line.find("****") != std::string::npos) {
            if (open) out.push_back(cur);
            cur = AlmanacEntry{};
            open = true;
            continue;
        }
        if (colon == std::string::npos) continue;
        if (!open) {
            cur = AlmanacEntry{};
            open = true;
        }
        const std::string key = lower(trim(line.substr(0, colon)));
        const std::string val = trim(line.substr(colon + 1));
        if (key == "id") cur.prn = static_cast<int>(number(val, lineno));
        else if (key == "health") cur.health = static_cast<int>(number(val, lineno));
        else if (key == "eccentricity") cur.e = number(val, lineno);
        else if (key.rfind("time of applicability", 0) == 0) cur.toa = number(val, lineno);
        else if (key.rfind("orbital inclination", 0) == 0) cur.i0 = number(val, lineno);
        else if (key.rfind("rate of right ascen", 0) == 0) cur.omega_dot = number(val, lineno);
        else if (key.rfind("sqrt(a)", 0) == 0) cur.sqrt_a = number(val, lineno);
        else if (key.rfind("right ascen at week", 0) == 0) cur.omega0 = number(val, lineno);
        else if (key.rfind("argument of perigee", 0) == 0) cur.omega = number(val, lineno);
        else if (key.rfind("mean anom", 0) == 0) cur.m0 = number(val, lineno);
        else if (key.rfind("af0", 0) == 0) cur.af0 = number(val, lineno);
        else if (key.rfind("af1", 0) == 0) cur.af1 = number(val, lineno);
        else if (key == "week") cur.week = static_cast<int>(number(val, lineno));
        else if (key == "constellation") {
            const std::string c = lower(val);
            if (c == "gps") cur.constellation = Constellation::GPS;
            else if (c == "gal" || c == "galileo") cur.constellation = Constellation::GAL;
            else throw ParseError("almanac line " + std::to_string(lineno) + ": unknown constellation '" + val + "'");
        }
    }
    if (open) out.push_back(cur);
    for (const auto& a : out) {
        if (a.sqrt_a <= 0) throw ParseError("almanac entry PRN " + std::to_string(a.prn) + " has no SQRT(A)");
        if (a.e < 0 || a.e > 0.05)
            throw ParseError("almanac entry PRN " + std::to_string(a.prn) + " eccentricity out of range");
    }
    return out;
}

std::vector<AlmanacEntry> load_yuma(const std::string& path)
{
    std::ifstream f(path);
    if (!f) throw ParseError("cannot open almanac " + path);
    return parse_yuma(f);
}

void write_yuma(std::ostream& out, const std::vector<AlmanacEntry>& entries)
{
    char buf[128];
    for (const auto& a : entries) {
        std::snprintf(buf, sizeof buf, "******** Week %d almanac for PRN-%02d ********\n", a.week % 1024, a.prn);
        out << buf;
        auto row = [&](const char* key, const char* fmt, double v) {
            char vb[48];
            std::snprintf(vb, sizeof vb, fmt, v);
            std::snprintf(buf, sizeof buf, "%-27s %s\n", key, vb);
            out << buf;
        };
        row("ID:", "%02.0f", a.prn);
        row("Health:", "%03.0f", a.health);
        row("Eccentricity:", "% .10E", a.e);
        row("Time of Applicability(s):", "%.4f", a.toa);
        row("Orbital Inclination(rad):", "% .10E", a.i0);
        row("Rate of Right Ascen(r/s):", "% .10E", a.omega_dot);
        row("SQRT(A)  (m 1/2):", "%.6f", a.sqrt_a);
        row("Right Ascen at Week(rad):", "% .10E", a.omega0);
        row("Argument of Perigee(rad):", "% .10E", a.omega);
        row("Mean Anom(rad):", "% .10E", a.m0);
        row("Af0(s):", "% .10E", a.af0);
        row("Af1(s/s):", "% .10E", a.af1);
        row("week:", "%.0f", a.week);
        std::snprintf(buf, sizeof buf, "%-27s %s\n\n", "Constellation:", to_string(a.constellation));
        out << buf;
    }
}

double solve_kepler(double M, double e, int max_iter)
{
    double E = e < 0.8 ? M : M_PI;
    for (int it = 0; it < max_iter; ++it) {
        const double dE = (E - e * std::sin(E) - M) / (1.0 - e * std::cos(E));
        E -= dE;
        if (std::abs(dE) < 1e-13) return E;
    }
    throw KeplerNonConvergence("Kepler iteration did not converge");
}

Eigen::Vector3d propagate(const AlmanacEntry& alm, double t, bool earth_fixed)
{
    double tk = t - alm.toa;
    if (std::abs(tk) >= kSecondsPerWeek) throw Error("propagation time more than a week from toa");
    const double a = alm.sqrt_a * alm.sqrt_a;
    const double n0 = std::sqrt(kEarthGM / (a * a * a));
    const double M = alm.m0 + n0 * tk;
    const double E = solve_kepler(M, alm.e);
    const double nu = std::atan2(std::sqrt(1.0 - alm.e * alm.e) * std::sin(E), std::cos(E) - alm.e);
    const double u = nu + alm.omega;
    const double r = a * (1.0 - alm.e * std::cos(E));
    const double xp = r * std::cos(u), yp = r * std::sin(u);
    const double Om = earth_fixed ? alm.omega0 + (alm.omega_dot - kEarthRotation) * tk - kEarthRotation * alm.toa
                                  : alm.omega0;
    const double ci = std::cos(alm.i0), si = std::sin(alm.i0);
    const double cO = std::cos(Om), sO = std::sin(Om);
    return {xp * cO - yp * ci * sO, xp * sO + yp * ci * cO, yp * si};
}

std::vector<AlmanacEntry> nominal_gps_almanac()
{
    // 24-slot baseline: plane RAAN and slot argument of latitude, deg
    static const double raan[6] = {272.847, 332.847, 32.847, 92.847, 152.847, 212.847};
    static const double slot[6][4] = {{268.126, 161.786, 11.676, 41.806},  {80.956, 173.336, 309.976, 204.376},
                                      {111.876, 11.796, 339.666, 241.556}, {135.226, 265.446, 35.156, 167.356},
                                      {197.046, 302.596, 66.066, 333.686}, {238.886, 345.226, 105.206, 135.346}};
    std::vector<AlmanacEntry> out;
    for (int p = 0; p < 6; ++p)
        for (int s = 0; s < 4; ++s) {
            AlmanacEntry a;
            a.prn = p * 4 + s + 1;
            a.i0 = 55.0 * kDeg;
            a.omega_dot = -8.0e-9;
            a.sqrt_a = std::sqrt(26559.7e3);
            a.omega0 = std::remainder(raan[p] * kDeg, 2 * M_PI);
            a.m0 = std::remainder(slot[p][s] * kDeg, 2 * M_PI);
            out.push_back(a);
        }
    return out;
}

std::vector<AlmanacEntry> nominal_galileo_almanac()
{
    // Walker 24/3/1
    std::vector<AlmanacEntry> out;
    for (int p = 0; p < 3; ++p)
        for (int s = 0; s < 8; ++s) {
            AlmanacEntry a;
            a.prn = p * 8 + s + 1;
            a.constellation = Constellation::GAL;
            a.i0 = 56.0 * kDeg;
            a.omega_dot = -5.6e-9;
            a.sqrt_a = std::sqrt(29599.8e3);
            a.omega0 = std::remainder(120.0 * p * kDeg, 2 * M_PI);
            a.m0 = std::remainder((45.0 * s + 15.0 * p) * kDeg, 2 * M_PI);
            out.push_back(a);
        }
    return out;
}

} // namespace jkraim
