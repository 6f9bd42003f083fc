#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <functional>
#include <sstream>

#include "airgrid/ingest.hpp"
#include "airgrid/rng.hpp"

using namespace airgrid;

namespace {

GridSpec small_grid() {
    GridSpec g;
    g.origin_lon = 77.0;
    g.origin_lat = 28.5;
    g.n_rows = 4;
    g.n_cols = 4;
    g.ref_lat = 28.5;
    return g;
}

TemporalSpec fixed_tspec() {
    TemporalSpec t;
    t.epoch_day = 18628;
    return t;
}

std::int64_t utc_at(const TemporalSpec& t, int day, int minute, int second = 0) {
    return (t.epoch_day + day) * 86400LL + minute * 60LL + second - t.utc_offset_min * 60LL;
}

RawReading mk(std::int64_t ts, double lon, double lat, double pm25, double pm10,
              const std::string& dev) {
    return RawReading{ts, lon, lat, pm25, pm10, dev};
}

}  // namespace

TEST_CASE("parse_readings handles a well-formed file") {
    std::istringstream in(
        "timestamp,lon,lat,pm25,pm10,device_id\n"
        "1609459200,77.01,28.51,45.5,90.1,busA\n"
        "1609459260,77.02,28.52,50.0,95.0,busA\n"
        "1609459100,77.03,28.53,55.0,99.0,busB\n");
    const ParseResult r = parse_readings(in);
    REQUIRE(r.readings.size() == 3);
    CHECK(r.skipped == 0);
    CHECK(r.readings[0].device_id == "busA");
    CHECK(r.readings[0].timestamp == 1609459200);
    CHECK(r.readings[2].device_id == "busB");
}

TEST_CASE("parse_readings skips malformed rows and counts them") {
    std::istringstream in(
        "timestamp,lon,lat,pm25,pm10,device_id\n"
        "1609459200,77.01,28.51,not_a_number,90.1,busA\n"
        "1609459260,77.02,28.52,50.0,95.0,busA\n"
        "garbage line\n"
        "1609459300,77.02,28.52,-5.0,95.0,busA\n");
    const ParseResult r = parse_readings(in);
    CHECK(r.readings.size() == 1);
    CHECK(r.skipped == 3);  // bad pm25, short row, negative pm25
}

TEST_CASE("parse_readings requires every column") {
    std::istringstream in("timestamp,lon,lat,pm25,device_id\n1,2,3,4,x\n");
    CHECK_THROWS_WITH_AS(parse_readings(in), doctest::Contains("pm10"), std::runtime_error);
}

TEST_CASE("parse_readings accepts ISO-8601 and custom delimiters") {
    std::istringstream in(
        "timestamp;lon;lat;pm25;pm10;device_id\n"
        "2021-01-01T05:30:00+05:30;77.01;28.51;45.5;90.1;busA\n"
        "2021-01-01 00:00:00Z;77.01;28.51;46.5;91.1;busA\n"
        "2021-01-01T00:00;77.01;28.51;47.5;92.1;busA\n");
    const ParseResult r = parse_readings(in, ReadingFormat{';'});
    REQUIRE(r.readings.size() == 3);
    // 05:30 at +05:30 is 00:00 UTC; all three rows name the same instant
    for (const RawReading& r2 : r.readings) CHECK(r2.timestamp == 1609459200);
}

TEST_CASE("parse_timestamp rejects junk") {
    CHECK_FALSE(parse_timestamp("yesterday").has_value());
    CHECK_FALSE(parse_timestamp("2021-13-01T00:00:00").has_value());
    CHECK_FALSE(parse_timestamp("2021-01-01T25:00:00").has_value());
    CHECK(parse_timestamp("2021-01-01T00:00:00.250Z").has_value());
}

TEST_CASE("derive_speeds from consecutive fixes") {
    const double dlat = 900.0 / kMetersPerDegLat;  // 900 m north
    std::vector<RawReading> rs = {
        mk(1000, 77.01, 28.51, 1, 1, "a"),
        mk(1060, 77.01, 28.51 + dlat, 1, 1, "a"),  // 900 m in 60 s
        mk(1060, 77.01, 28.51, 1, 1, "b"),         // single reading device
        mk(1060, 77.02, 28.52, 1, 1, "c"),
        mk(1060, 77.03, 28.52, 1, 1, "c"),  // identical timestamps
        mk(2000, 77.02, 28.52, 1, 1, "d"),
        mk(2400, 77.02, 28.53, 1, 1, "d"),  // 400 s gap
        mk(3000, 77.02, 28.52, 1, 1, "e"),
        mk(3010, 77.02, 28.52 + 500.0 / kMetersPerDegLat, 1, 1, "e"),  // 50 m/s glitch
    };
    const auto speeds = derive_speeds(rs);
    CHECK(speeds[1] == doctest::Approx(15.0).epsilon(1e-6));
    CHECK(std::isnan(speeds[0]));
    CHECK(std::isnan(speeds[2]));
    CHECK(std::isnan(speeds[4]));
    CHECK(std::isnan(speeds[6]));
    CHECK(std::isnan(speeds[8]));
}

TEST_CASE("aggregate means, device counts and window filtering") {
    const GridSpec g = small_grid();
    const TemporalSpec t = fixed_tspec();
    auto [lon, lat] = cell_center(CellId{1, 2}, g);
    std::vector<RawReading> rs = {
        mk(utc_at(t, 0, 330), lon, lat, 100, 200, "a"),
        mk(utc_at(t, 0, 335), lon, lat, 200, 300, "a"),
        mk(utc_at(t, 0, 340), lon, lat, 150, 250, "b"),
        mk(utc_at(t, 0, 240), lon, lat, 999, 999, "a"),    // 04:00, outside the window
        mk(utc_at(t, 0, 330), 60.0, 20.0, 999, 999, "a"),  // outside the grid
    };
    const STFrameSet fs = aggregate(rs, g, t);
    REQUIRE(fs.n_bins == 33);
    const std::size_t e = fs.idx(fs.cell_index(CellId{1, 2}), 0);
    CHECK(fs.observed[e] == 1);
    CHECK(fs.pm25[e] == doctest::Approx(150.0));
    CHECK(fs.pm10[e] == doctest::Approx(250.0));
    CHECK(fs.device_count[e] == 2);
    std::int64_t total = 0;
    for (auto o : fs.observed) total += o;
    CHECK(total == 1);  // the 04:00 and out-of-grid readings contributed nowhere
}

TEST_CASE("aggregate is permutation-invariant") {
    const GridSpec g = small_grid();
    const TemporalSpec t = fixed_tspec();
    Rng rng(7);
    std::vector<RawReading> rs;
    for (int i = 0; i < 200; ++i) {
        auto [lon, lat] = cell_center(CellId{static_cast<int>(rng.uniform_int(4)),
                                             static_cast<int>(rng.uniform_int(4))}, g);
        rs.push_back(mk(utc_at(t, static_cast<int>(rng.uniform_int(3)),
                               330 + static_cast<int>(rng.uniform_int(990))),
                        lon, lat, rng.uniform(10, 300), rng.uniform(10, 300),
                        "bus" + std::to_string(rng.uniform_int(4))));
    }
    const STFrameSet a = aggregate(rs, g, t);
    auto shuffled = rs;
    rng.shuffle(shuffled);
    const STFrameSet b = aggregate(shuffled, g, t);
    CHECK(a.n_bins == b.n_bins);
    for (std::size_t i = 0; i < a.pm25.size(); ++i) {
        CHECK(a.observed[i] == b.observed[i]);
        CHECK(a.device_count[i] == b.device_count[i]);
        if (a.observed[i]) {
            CHECK(a.pm25[i] == doctest::Approx(b.pm25[i]).epsilon(1e-12));
            CHECK(a.pm10[i] == doctest::Approx(b.pm10[i]).epsilon(1e-12));
        }
    }
}

TEST_CASE("aggregate resolves the dataset epoch from the data") {
    const GridSpec g = small_grid();
    TemporalSpec t = fixed_tspec();
    t.epoch_day = kEpochDayAuto;
    auto [lon, lat] = cell_center(CellId{0, 0}, g);
    TemporalSpec fixed = fixed_tspec();
    std::vector<RawReading> rs = {mk(utc_at(fixed, 5, 400), lon, lat, 10, 20, "a"),
                                  mk(utc_at(fixed, 7, 400), lon, lat, 10, 20, "a")};
    const STFrameSet fs = aggregate(rs, g, t);
    CHECK(fs.tspec.epoch_day == fixed.epoch_day + 5);  // day 0 is the first observed day
    CHECK(fs.n_days() == 3);
}

TEST_CASE("aggregate with nothing inside the window fails") {
    const GridSpec g = small_grid();
    const TemporalSpec t = fixed_tspec();
    std::vector<RawReading> rs = {mk(utc_at(t, 0, 100), 77.01, 28.51, 1, 1, "a")};
    CHECK_THROWS(aggregate(rs, g, t));
}

namespace {
STFrameSet synthetic_frames(int n_days, const std::function<bool(int, int)>& observed_at) {
    STFrameSet fs;
    fs.grid = small_grid();
    fs.tspec = fixed_tspec();
    fs.n_bins = n_days * fs.tspec.bins_per_day();
    fs.allocate();
    for (int c = 0; c < fs.n_cells(); ++c) {
        for (int b = 0; b < fs.n_bins; ++b) {
            if (observed_at(c, b)) {
                const std::size_t e = fs.idx(c, b);
                fs.observed[e] = 1;
                fs.pm25[e] = 50.0 + c;
                fs.pm10[e] = 80.0 + c;
            }
        }
    }
    return fs;
}
}  // namespace

TEST_CASE("split_cells separates well-covered cells from sparse ones") {
    const int bpd = fixed_tspec().bins_per_day();
    const STFrameSet fs = synthetic_frames(10, [bpd](int cell, int bin) {
        if (cell == 0) return true;                  // every bin
        if (cell == 1) return bin % bpd == 0;        // one bin per day
        if (cell == 2) return bin % (bpd / 3) == 0;  // several bins per day
        return false;                                // never observed
    });
    const CellSplit split = split_cells(fs);
    CHECK(std::count(split.core.begin(), split.core.end(), CellId{0, 0}) == 1);
    CHECK(std::count(split.extended.begin(), split.extended.end(), CellId{0, 1}) == 1);
    CHECK(std::count(split.core.begin(), split.core.end(), CellId{0, 2}) == 1);
    CHECK(split.core.size() + split.extended.size() == 3);  // never-observed cells in neither
}

TEST_CASE("split_cells on an empty frameset fails") {
    const STFrameSet fs = synthetic_frames(10, [](int, int) { return false; });
    CHECK_THROWS(split_cells(fs));
}

TEST_CASE("temporal_split lands on day boundaries") {
    const STFrameSet hundred = synthetic_frames(100, [](int c, int) { return c == 0; });
    const TemporalSplit s = temporal_split(hundred, 0.8);
    const int bpd = hundred.tspec.bins_per_day();
    CHECK(s.train_end == 80 * bpd);
    CHECK(s.test_begin == 80 * bpd);
    CHECK(s.test_end == 100 * bpd);

    const STFrameSet ten = synthetic_frames(10, [](int c, int) { return c == 0; });
    const TemporalSplit s10 = temporal_split(ten, 0.8);
    CHECK(s10.train_end == 8 * bpd);

    CHECK_THROWS(temporal_split(ten, 1.0));
    CHECK_THROWS(temporal_split(ten, 0.0));
    const STFrameSet nine = synthetic_frames(9, [](int c, int) { return c == 0; });
    CHECK_THROWS(temporal_split(nine, 0.8));
}

TEST_CASE("frameset round-trips through the binary format bit exactly") {
    Rng rng(13);
    STFrameSet fs = synthetic_frames(10, [&](int, int) { return rng.uniform01() < 0.3; });
    fs.speed[fs.idx(1, 5)] = 12.25;
    fs.imputed[fs.idx(2, 6)] = 1;
    const std::string path = "/tmp/airgrid_test_frames.agfs";
    fs.save(path);
    const STFrameSet back = STFrameSet::load(path);
    CHECK(back.n_bins == fs.n_bins);
    CHECK(back.grid.n_rows == fs.grid.n_rows);
    CHECK(back.tspec.epoch_day == fs.tspec.epoch_day);
    for (std::size_t i = 0; i < fs.pm25.size(); ++i) {
        if (fs.observed[i]) CHECK(back.pm25[i] == fs.pm25[i]);
        CHECK(back.observed[i] == fs.observed[i]);
        CHECK(back.imputed[i] == fs.imputed[i]);
        CHECK(back.device_count[i] == fs.device_count[i]);
    }
    CHECK(back.speed[back.idx(1, 5)] == 12.25);
    std::filesystem::remove(path);
}
