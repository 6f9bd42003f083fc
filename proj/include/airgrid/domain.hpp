#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>

namespace airgrid {

// Equirectangular projection constants. Exact invertibility of the
// cell bucketing relies on every caller using these same values.
inline constexpr double kMetersPerDegLat = 110574.0;
inline constexpr double kMetersPerDegLonEquator = 111320.0;

double meters_per_deg_lon(double ref_lat_deg);

// One mobile-sensor sample.
struct RawReading {
    std::int64_t timestamp = 0;  // UTC seconds
    double lon = 0.0;            // degrees
    double lat = 0.0;            // degrees
    double pm25 = 0.0;           // ug/m3
    double pm10 = 0.0;           // ug/m3
    std::string device_id;
};

// Regular grid of square cells anchored at a southwest origin.
struct GridSpec {
    double origin_lon = 0.0;
    double origin_lat = 0.0;
    double cell_size_m = 1000.0;
    int n_rows = 1;
    int n_cols = 1;
    double ref_lat = 0.0;  // latitude used for the lon meter scale

    int n_cells() const { return n_rows * n_cols; }
    void validate() const;  // throws std::invalid_argument
};

// Sentinel: temporal day numbering must be resolved from data before use.
inline constexpr std::int64_t kEpochDayAuto = INT64_MIN;

// Daily observation window discretized into fixed bins.
struct TemporalSpec {
    int bin_minutes = 30;
    int day_start_min = 330;   // 5:30 local
    int day_end_min = 1320;    // 22:00 local, exclusive
    int utc_offset_min = 330;  // IST
    // Local day number (days since 1970-01-01 in local time) of dataset day 0.
    std::int64_t epoch_day = 0;

    int bins_per_day() const { return (day_end_min - day_start_min) / bin_minutes; }
    void validate() const;  // throws std::invalid_argument
};

struct CellId {
    int row = 0;
    int col = 0;
    auto operator<=>(const CellId&) const = default;
};

struct TimeBin {
    int day = 0;   // days since dataset start
    int slot = 0;  // index in [0, bins_per_day)
    auto operator<=>(const TimeBin&) const = default;
};

enum class AqiCategory {
    Good = 0,
    Satisfactory,
    ModeratelyPolluted,
    Poor,
    VeryPoor,
    Severe,
};

enum class Pollutant { PM25 = 0, PM10 = 1 };

const char* to_string(AqiCategory c);
const char* to_string(Pollutant p);

// Maps a lon/lat point onto the grid; nullopt means the point falls outside.
std::optional<CellId> bucket_coordinate(double lon, double lat, const GridSpec& grid);

// Maps a UTC timestamp onto a (day, slot) bin; nullopt means the local time
// of day lies outside the observation window (window end is exclusive).
std::optional<TimeBin> bucket_time(std::int64_t utc_seconds, const TemporalSpec& spec);

// Six-category classification with inclusive upper bounds. Throws on
// negative concentrations.
AqiCategory categorize(double value, Pollutant pollutant);

// Center of a cell in degrees; exact inverse of bucket_coordinate at centers.
// Throws when the cell is outside the grid.
std::pair<double, double> cell_center(CellId cell, const GridSpec& grid);

// Cell center in projected meters relative to the grid origin.
std::pair<double, double> cell_center_meters(CellId cell, const GridSpec& grid);

}  // namespace airgrid
