#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "jkraim/almanac.hpp"
#include "jkraim/error_model.hpp"
#include "jkraim/integrity.hpp"
#include "jkraim/jackknife.hpp"
#include "jkraim/overbound.hpp"

namespace jkraim {

enum class Algorithm { Baseline, Jackknife };

// Distribution used for reduced-state constellation terms under the
// jackknife algorithm: the active bound flavor, or always Gaussian.
enum class ConstellationBound { Active, Gaussian };

enum class StanfordClass { NO = 0, MI, SU, SU_MI, HMI };
inline constexpr int kStanfordClasses = 5;
const char* to_string(StanfordClass c);
StanfordClass stanford_from_string(const std::string& s);

struct ScenarioConfig {
    double grid_step_deg = 15.0;
    double epoch_step_s = 600.0;
    double duration_s = 86400.0;
    double t0_s = 0.0;
    double mask_deg = 5.0;
    std::vector<Constellation> constellations{Constellation::GPS, Constellation::GAL};
    BoundFlavor flavor = BoundFlavor::Pgo;
    Algorithm algorithm = Algorithm::Jackknife;
    std::uint64_t seed = 1;
    IntegrityBudget budget;
    Allocation allocation = Allocation::TotalRisk;
    DetectorAxes axes = DetectorAxes::Vertical;
    ConstellationBound const_bound = ConstellationBound::Active;
    PgoConstruction pgo_construction = PgoConstruction::CdfMatched;
    double single_const_pconst = 0.0;
    int grid_points = 1024;
    bool horizontal = true;
    bool zero_noise = false;
    int threads = 1;

    // throws Error on invalid settings
    void validate() const;
};

struct UserLocation {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
};

// longitudes -180 .. 180-step, latitudes offset half a step from the poles
std::vector<UserLocation> user_grid(double step_deg);

struct EpochRecord {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    double t_s = 0.0;
    int n_vis = 0;
    double vpe = 0.0;  // |vertical error|, m
    double hpe = 0.0;
    double vpl = kUnavailable;
    double hpl = kUnavailable;
    bool alert = false;
    StanfordClass cls = StanfordClass::SU;
    int n_modes = 0;
    std::string error;  // non-empty when the epoch could not be evaluated
};

StanfordClass classify(double vpe, double vpl, double val, bool alert = false);

// Healthy entries of the configured constellations with their bound rows,
// mapped by ordinal within each constellation.
struct SatelliteSet {
    std::vector<AlmanacEntry> entries;
    std::vector<const SatBound*> bounds;
    std::vector<int> per_constellation;  // configured size, in config order
};

SatelliteSet bind_satellites(const ScenarioConfig& cfg, const std::vector<AlmanacEntry>& almanac,
                             const SatelliteBoundTable& table);

// One epoch at one location; seeds the error draw from (seed, loc, epoch).
EpochRecord run_epoch(const ScenarioConfig& cfg, const SatelliteSet& sats, int k_max, const UserLocation& loc,
                      double t, int loc_id, int epoch_id);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Records ordered by location, then epoch.
std::vector<EpochRecord> run_scenario(const ScenarioConfig& cfg, const std::vector<AlmanacEntry>& almanac,
                                      const SatelliteBoundTable& table, const ProgressFn& progress = {});

struct LocationSummary {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
    std::size_t epochs = 0;
    double availability = 0.0;
    double vpl_p995 = kUnavailable;
};

struct SummaryStats {
    std::vector<LocationSummary> locations;
    std::vector<double> levels;
    std::vector<double> coverage_weighted;    // cos(latitude) area weights
    std::vector<double> coverage_unweighted;
    std::array<std::size_t, kStanfordClasses> stanford_counts{};
    std::size_t records = 0;
    std::size_t missed_alerts = 0;  // VPE > VPL with no alert
};

SummaryStats aggregate(const std::vector<EpochRecord>& records, double val,
                       const std::vector<double>& levels = {0.75, 0.95, 0.995});

void write_records_csv(std::ostream& out, const std::vector<EpochRecord>& records);
std::vector<EpochRecord> read_records_csv(std::istream& in);
inline constexpr const char* kRecordCsvHeader = "lat_deg,lon_deg,t_s,n_vis,vpe_m,hpe_m,vpl_m,hpl_m,alert,class";

// JSON summary document; config_echo is supplied by the caller as JSON text
std::string summary_json(const SummaryStats& s, const std::string& config_echo_json);

} // namespace jkraim
