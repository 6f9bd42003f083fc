#include "airgrid/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace airgrid {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

std::string lower(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::vector<std::string> split_line(const std::string& line, char delim) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double v = 0.0;
    const char* begin = s.data();
    const char* end = begin + s.size();
    auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc() || res.ptr != end) return std::nullopt;
    if (!std::isfinite(v)) return std::nullopt;
    return v;
}

// Hinnant's days-from-civil; valid across the proleptic Gregorian calendar.
std::int64_t days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const int yoe = static_cast<int>(y - era * 400);
    const int doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const std::int64_t doe = static_cast<std::int64_t>(yoe) * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + doe - 719468;
}

}  // namespace

std::optional<std::int64_t> parse_timestamp(const std::string& text) {
    const std::string s = trim(text);
    if (s.size() < 16) return std::nullopt;
    int y, mo, d, h, mi;
    int sec = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d", &y, &mo, &d) != 3) return std::nullopt;
    if (s[10] != 'T' && s[10] != ' ') return std::nullopt;
    if (std::sscanf(s.c_str() + 11, "%2d:%2d", &h, &mi) != 2) return std::nullopt;
    std::size_t pos = 16;
    if (pos < s.size() && s[pos] == ':') {
        if (std::sscanf(s.c_str() + pos + 1, "%2d", &sec) != 1) return std::nullopt;
        pos += 3;
        // fractional seconds are truncated
        if (pos < s.size() && s[pos] == '.') {
            ++pos;
            while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
        }
    }
    std::int64_t offset_s = 0;
    if (pos < s.size()) {
        if (s[pos] == 'Z') {
            ++pos;
        } else if (s[pos] == '+' || s[pos] == '-') {
            int oh, om;
            if (std::sscanf(s.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) return std::nullopt;
            offset_s = (s[pos] == '+' ? 1 : -1) * (oh * 3600LL + om * 60LL);
            pos += 6;
        }
    }
    if (pos != s.size()) return std::nullopt;
    if (mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 || mi > 59 || sec > 60) return std::nullopt;
    return days_from_civil(y, mo, d) * 86400LL + h * 3600LL + mi * 60LL + sec - offset_s;
}

ParseResult parse_readings(std::istream& in, const ReadingFormat& fmt) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("parse_readings: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::vector<std::string> header = split_line(line, fmt.delimiter);
    const char* required[6] = {"timestamp", "lon", "lat", "pm25", "pm10", "device_id"};
    int col[6];
    for (int f = 0; f < 6; ++f) {
        col[f] = -1;
        for (std::size_t c = 0; c < header.size(); ++c)
            if (lower(header[c]) == required[f]) col[f] = static_cast<int>(c);
        if (col[f] < 0)
            throw std::runtime_error(std::string("parse_readings: missing required column '") +
                                     required[f] + "'");
    }
    const int max_col = *std::max_element(col, col + 6);

    ParseResult result;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_line(line, fmt.delimiter);
        if (static_cast<int>(fields.size()) <= max_col) {
            ++result.skipped;
            continue;
        }
        RawReading r;
        const std::string& ts = fields[static_cast<std::size_t>(col[0])];
        if (auto num = parse_double(ts); num && ts.find(':') == std::string::npos) {
            r.timestamp = static_cast<std::int64_t>(*num);
        } else if (auto iso = parse_timestamp(ts)) {
            r.timestamp = *iso;
        } else {
            ++result.skipped;
            continue;
        }
        auto lon = parse_double(fields[static_cast<std::size_t>(col[1])]);
        auto lat = parse_double(fields[static_cast<std::size_t>(col[2])]);
        auto pm25 = parse_double(fields[static_cast<std::size_t>(col[3])]);
        auto pm10 = parse_double(fields[static_cast<std::size_t>(col[4])]);
        const std::string& dev = fields[static_cast<std::size_t>(col[5])];
        if (!lon || !lat || !pm25 || !pm10 || dev.empty() || *pm25 < 0.0 || *pm10 < 0.0 ||
            std::abs(*lon) > 180.0 || std::abs(*lat) > 90.0) {
            ++result.skipped;
            continue;
        }
        r.lon = *lon;
        r.lat = *lat;
        r.pm25 = *pm25;
        r.pm10 = *pm10;
        r.device_id = dev;
        result.readings.push_back(std::move(r));
    }

    std::stable_sort(result.readings.begin(), result.readings.end(),
                     [](const RawReading& a, const RawReading& b) {
                         if (a.device_id != b.device_id) return a.device_id < b.device_id;
                         return a.timestamp < b.timestamp;
                     });
    return result;
}

ParseResult parse_readings_file(const std::string& path, const ReadingFormat& fmt) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("parse_readings: cannot open " + path);
    return parse_readings(in, fmt);
}

std::vector<double> derive_speeds(const std::vector<RawReading>& sorted) {
    const double nan = std::nan("");
    std::vector<double> speeds(sorted.size(), nan);
    for (std::size_t i = 1; i < sorted.size(); ++i) {
        const RawReading& prev = sorted[i - 1];
        const RawReading& cur = sorted[i];
        if (cur.device_id != prev.device_id) continue;
        const std::int64_t dt = cur.timestamp - prev.timestamp;
        if (dt <= 0 || dt > 300) continue;
        const double mid_lat = 0.5 * (cur.lat + prev.lat);
        const double dx = (cur.lon - prev.lon) * meters_per_deg_lon(mid_lat);
        const double dy = (cur.lat - prev.lat) * kMetersPerDegLat;
        const double v = std::sqrt(dx * dx + dy * dy) / static_cast<double>(dt);
        if (v > 40.0) continue;  // GPS glitch
        speeds[i] = v;
    }
    return speeds;
}

STFrameSet aggregate(const std::vector<RawReading>& readings, const GridSpec& grid,
                     const TemporalSpec& tspec) {
    grid.validate();
    tspec.validate();

    const std::vector<double> speeds = derive_speeds(readings);

    // Resolve the day-zero reference from the data when asked to.
    TemporalSpec resolved = tspec;
    if (resolved.epoch_day == kEpochDayAuto) {
        TemporalSpec probe = tspec;
        probe.epoch_day = 0;
        std::int64_t min_day = INT64_MAX;
        for (const RawReading& r : readings) {
            if (!bucket_coordinate(r.lon, r.lat, grid)) continue;
            if (auto tb = bucket_time(r.timestamp, probe)) min_day = std::min<std::int64_t>(min_day, tb->day);
        }
        if (min_day == INT64_MAX)
            throw std::runtime_error("aggregate: no readings inside the grid and daily window");
        resolved.epoch_day = min_day;
    }

    // First pass for extent, second pass to fill.
    int max_day = -1;
    for (const RawReading& r : readings) {
        if (!bucket_coordinate(r.lon, r.lat, grid)) continue;
        if (auto tb = bucket_time(r.timestamp, resolved)) max_day = std::max(max_day, tb->day);
    }
    if (max_day < 0) throw std::runtime_error("aggregate: no readings inside the grid and daily window");

    STFrameSet fs;
    fs.grid = grid;
    fs.tspec = resolved;
    fs.n_bins = (max_day + 1) * resolved.bins_per_day();
    fs.allocate();

    const std::size_t n_entries = fs.pm25.size();
    std::vector<double> pm25_sum(n_entries, 0.0), pm10_sum(n_entries, 0.0), speed_sum(n_entries, 0.0);
    std::vector<std::uint32_t> n_readings(n_entries, 0), n_speeds(n_entries, 0);
    std::vector<std::vector<std::uint32_t>> devices(n_entries);

    std::unordered_map<std::string, std::uint32_t> device_ids;
    const int bpd = resolved.bins_per_day();
    for (std::size_t i = 0; i < readings.size(); ++i) {
        const RawReading& r = readings[i];
        auto cell = bucket_coordinate(r.lon, r.lat, grid);
        if (!cell) continue;
        auto tb = bucket_time(r.timestamp, resolved);
        if (!tb) continue;
        const int bin = tb->day * bpd + tb->slot;
        const std::size_t e = fs.idx(fs.cell_index(*cell), bin);
        pm25_sum[e] += r.pm25;
        pm10_sum[e] += r.pm10;
        ++n_readings[e];
        if (!std::isnan(speeds[i])) {
            speed_sum[e] += speeds[i];
            ++n_speeds[e];
        }
        const auto [it, inserted] =
            device_ids.try_emplace(r.device_id, static_cast<std::uint32_t>(device_ids.size()));
        auto& devs = devices[e];
        if (std::find(devs.begin(), devs.end(), it->second) == devs.end()) devs.push_back(it->second);
    }

    for (std::size_t e = 0; e < n_entries; ++e) {
        if (n_readings[e] == 0) continue;
        fs.observed[e] = 1;
        fs.pm25[e] = pm25_sum[e] / n_readings[e];
        fs.pm10[e] = pm10_sum[e] / n_readings[e];
        if (n_speeds[e] > 0) fs.speed[e] = speed_sum[e] / n_speeds[e];
        fs.device_count[e] = static_cast<std::uint32_t>(devices[e].size());
    }
    return fs;
}

CellSplit split_cells(const STFrameSet& frames) {
    const int n_days = frames.n_days();
    if (n_days <= 0) throw std::runtime_error("split_cells: empty frameset");
    CellSplit split;
    bool any = false;
    for (int c = 0; c < frames.n_cells(); ++c) {
        std::int64_t observed_bins = 0;
        for (int b = 0; b < frames.n_bins; ++b) observed_bins += frames.observed[frames.idx(c, b)];
        if (observed_bins == 0) continue;
        any = true;
        const double per_day = static_cast<double>(observed_bins) / n_days;
        if (per_day < 2.0)
            split.extended.push_back(frames.cell_id(c));
        else
            split.core.push_back(frames.cell_id(c));
    }
    if (!any) throw std::runtime_error("split_cells: no observed cells");
    return split;
}

TemporalSplit temporal_split(const STFrameSet& frames, double ratio) {
    const int n_days = frames.n_days();
    if (n_days < 10) throw std::runtime_error("temporal_split: need at least 10 days of data");
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("temporal_split: ratio must lie strictly between 0 and 1");
    int train_days = static_cast<int>(std::llround(ratio * n_days));
    train_days = std::clamp(train_days, 1, n_days - 1);
    const int bpd = frames.tspec.bins_per_day();
    TemporalSplit split;
    split.train_begin = 0;
    split.train_end = train_days * bpd;
    split.test_begin = split.train_end;
    split.test_end = n_days * bpd;
    return split;
}

}  // namespace airgrid
