#include "airgrid/domain.hpp"

#include <cmath>
#include <stdexcept>

namespace airgrid {

double meters_per_deg_lon(double ref_lat_deg) {
    return kMetersPerDegLonEquator * std::cos(ref_lat_deg * M_PI / 180.0);
}

void GridSpec::validate() const {
    if (cell_size_m <= 0.0) throw std::invalid_argument("GridSpec: cell_size_m must be positive");
    if (n_rows < 1 || n_cols < 1) throw std::invalid_argument("GridSpec: need at least one cell");
    if (std::abs(ref_lat) >= 90.0) throw std::invalid_argument("GridSpec: ref_lat must be inside (-90, 90)");
}

void TemporalSpec::validate() const {
    if (bin_minutes <= 0) throw std::invalid_argument("TemporalSpec: bin_minutes must be positive");
    if (day_start_min >= day_end_min) throw std::invalid_argument("TemporalSpec: day window is empty");
    if ((day_end_min - day_start_min) % bin_minutes != 0)
        throw std::invalid_argument("TemporalSpec: bin_minutes must divide the day window");
    if (day_start_min < 0 || day_end_min > 1440)
        throw std::invalid_argument("TemporalSpec: day window must lie within a day");
}

const char* to_string(AqiCategory c) {
    switch (c) {
        case AqiCategory::Good: return "Good";
        case AqiCategory::Satisfactory: return "Satisfactory";
        case AqiCategory::ModeratelyPolluted: return "ModeratelyPolluted";
        case AqiCategory::Poor: return "Poor";
        case AqiCategory::VeryPoor: return "VeryPoor";
        case AqiCategory::Severe: return "Severe";
    }
    return "?";
}

const char* to_string(Pollutant p) {
    return p == Pollutant::PM25 ? "PM2.5" : "PM10";
}

std::optional<CellId> bucket_coordinate(double lon, double lat, const GridSpec& grid) {
    double y = (lat - grid.origin_lat) * kMetersPerDegLat;
    double x = (lon - grid.origin_lon) * meters_per_deg_lon(grid.ref_lat);
    int row = static_cast<int>(std::floor(y / grid.cell_size_m));
    int col = static_cast<int>(std::floor(x / grid.cell_size_m));
    if (row < 0 || row >= grid.n_rows || col < 0 || col >= grid.n_cols) return std::nullopt;
    return CellId{row, col};
}

namespace {
std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b) != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}
}  // namespace

std::optional<TimeBin> bucket_time(std::int64_t utc_seconds, const TemporalSpec& spec) {
    if (spec.epoch_day == kEpochDayAuto)
        throw std::logic_error("bucket_time: epoch_day has not been resolved");
    std::int64_t local = utc_seconds + static_cast<std::int64_t>(spec.utc_offset_min) * 60;
    std::int64_t local_day = floor_div(local, 86400);
    std::int64_t day = local_day - spec.epoch_day;
    int minute_of_day = static_cast<int>((local - local_day * 86400) / 60);
    if (day < 0) return std::nullopt;
    if (minute_of_day < spec.day_start_min || minute_of_day >= spec.day_end_min) return std::nullopt;
    int slot = (minute_of_day - spec.day_start_min) / spec.bin_minutes;
    return TimeBin{static_cast<int>(day), slot};
}

AqiCategory categorize(double value, Pollutant pollutant) {
    if (value < 0.0) throw std::invalid_argument("categorize: negative concentration");
    // Upper bounds are inclusive so the ranges partition [0, inf).
    static constexpr double pm25_bounds[5] = {30.0, 60.0, 90.0, 120.0, 250.0};
    static constexpr double pm10_bounds[5] = {50.0, 100.0, 250.0, 350.0, 430.0};
    const double* bounds = pollutant == Pollutant::PM25 ? pm25_bounds : pm10_bounds;
    for (int i = 0; i < 5; ++i)
        if (value <= bounds[i]) return static_cast<AqiCategory>(i);
    return AqiCategory::Severe;
}

std::pair<double, double> cell_center(CellId cell, const GridSpec& grid) {
    if (cell.row < 0 || cell.row >= grid.n_rows || cell.col < 0 || cell.col >= grid.n_cols)
        throw std::out_of_range("cell_center: cell outside grid");
    double lat = grid.origin_lat + (cell.row + 0.5) * grid.cell_size_m / kMetersPerDegLat;
    double lon = grid.origin_lon + (cell.col + 0.5) * grid.cell_size_m / meters_per_deg_lon(grid.ref_lat);
    return {lon, lat};
}

std::pair<double, double> cell_center_meters(CellId cell, const GridSpec& grid) {
    if (cell.row < 0 || cell.row >= grid.n_rows || cell.col < 0 || cell.col >= grid.n_cols)
        throw std::out_of_range("cell_center_meters: cell outside grid");
    return {(cell.col + 0.5) * grid.cell_size_m, (cell.row + 0.5) * grid.cell_size_m};
}

}  // namespace airgrid
