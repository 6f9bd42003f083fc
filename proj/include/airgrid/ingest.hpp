#pragma once

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "airgrid/domain.hpp"
#include "airgrid/frameset.hpp"

namespace airgrid {

struct ReadingFormat {
    char delimiter = ',';
};

struct ParseResult {
    std::vector<RawReading> readings;  // sorted by (device_id, timestamp)
    std::size_t skipped = 0;           // malformed rows
};

// Header row must name all of timestamp, lon, lat, pm25, pm10, device_id
// (any column order). Timestamps are epoch seconds or ISO-8601. Rows that
// fail to parse or violate field ranges are counted and dropped; a missing
// column is a hard error.
ParseResult parse_readings(std::istream& in, const ReadingFormat& fmt = {});
ParseResult parse_readings_file(const std::string& path, const ReadingFormat& fmt = {});

// Epoch seconds from "YYYY-MM-DD[T ]HH:MM[:SS][Z|+HH:MM|-HH:MM]"; bare
// local times are taken as UTC.
std::optional<std::int64_t> parse_timestamp(const std::string& text);

// Per-reading travel speed between consecutive fixes of the same device.
// Input must be sorted by (device_id, timestamp). NaN marks absent: first
// fix of a device, repeated timestamps, gaps over 300 s, or implausible
// speeds above 40 m/s.
std::vector<double> derive_speeds(const std::vector<RawReading>& sorted);

// Buckets readings into the dense frameset. Readings outside the grid or
// the daily window are dropped. When tspec.epoch_day is kEpochDayAuto it is
// resolved to the earliest in-window local day; n_bins covers whole days up
// to the latest in-window reading.
STFrameSet aggregate(const std::vector<RawReading>& readings, const GridSpec& grid,
                     const TemporalSpec& tspec);

// A cell whose mean observed-bin count per dataset day is below 2 goes to
// the extended set. Throws if nothing was observed.
CellSplit split_cells(const STFrameSet& frames);

// Day-boundary split; requires at least 10 days of bins and a ratio that
// leaves both sides non-empty.
TemporalSplit temporal_split(const STFrameSet& frames, double ratio = 0.8);

}  // namespace airgrid
