#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "airgrid/domain.hpp"
#include "airgrid/rng.hpp"

using namespace airgrid;

namespace {
GridSpec test_grid() {
    GridSpec g;
    g.origin_lon = 77.0;
    g.origin_lat = 28.5;
    g.cell_size_m = 1000.0;
    g.n_rows = 10;
    g.n_cols = 8;
    g.ref_lat = 28.5;
    return g;
}

// UTC timestamp for a local wall-clock minute of a dataset day
std::int64_t utc_at(const TemporalSpec& t, int day, int minute_of_day) {
    const std::int64_t local = (t.epoch_day + day) * 86400LL + minute_of_day * 60LL;
    return local - t.utc_offset_min * 60LL;
}
}  // namespace

TEST_CASE("bucket_coordinate maps the origin to cell zero") {
    const GridSpec g = test_grid();
    auto c = bucket_coordinate(g.origin_lon, g.origin_lat, g);
    REQUIRE(c.has_value());
    CHECK(*c == CellId{0, 0});
}

TEST_CASE("bucket_coordinate floors meters into cells") {
    const GridSpec g = test_grid();
    const double lat = g.origin_lat + 1500.0 / kMetersPerDegLat;
    const double lon = g.origin_lon + 500.0 / meters_per_deg_lon(g.ref_lat);
    auto c = bucket_coordinate(lon, lat, g);
    REQUIRE(c.has_value());
    CHECK(*c == CellId{1, 0});
}

TEST_CASE("bucket_coordinate rejects points south of the origin") {
    const GridSpec g = test_grid();
    CHECK_FALSE(bucket_coordinate(g.origin_lon, g.origin_lat - 0.001, g).has_value());
    CHECK_FALSE(bucket_coordinate(g.origin_lon - 0.001, g.origin_lat, g).has_value());
    // just past the far corner
    const double lat = g.origin_lat + (g.n_rows * 1000.0 + 1.0) / kMetersPerDegLat;
    CHECK_FALSE(bucket_coordinate(g.origin_lon, lat, g).has_value());
}

TEST_CASE("bucket_time window boundaries") {
    TemporalSpec t;
    t.epoch_day = 18628;
    REQUIRE(t.bins_per_day() == 33);

    auto first = bucket_time(utc_at(t, 0, 330), t);  // 05:30
    REQUIRE(first.has_value());
    CHECK(first->day == 0);
    CHECK(first->slot == 0);

    CHECK_FALSE(bucket_time(utc_at(t, 0, 329), t).has_value());  // 05:29 discarded

    auto last = bucket_time(utc_at(t, 2, 1319), t);  // 21:59
    REQUIRE(last.has_value());
    CHECK(last->day == 2);
    CHECK(last->slot == 32);  // final slot of 33

    CHECK_FALSE(bucket_time(utc_at(t, 2, 1320), t).has_value());  // 22:00 exclusive
}

TEST_CASE("bucket_time honors the UTC offset") {
    TemporalSpec t;
    t.epoch_day = 0;
    // 00:00 UTC is 05:30 IST
    auto tb = bucket_time(0, t);
    REQUIRE(tb.has_value());
    CHECK(tb->slot == 0);
}

TEST_CASE("categorize matches the published breakpoints") {
    CHECK(categorize(25.0, Pollutant::PM25) == AqiCategory::Good);
    CHECK(categorize(100.0, Pollutant::PM25) == AqiCategory::Poor);
    CHECK(categorize(500.0, Pollutant::PM10) == AqiCategory::Severe);
    CHECK(categorize(0.0, Pollutant::PM25) == AqiCategory::Good);
    CHECK_THROWS(categorize(-1.0, Pollutant::PM25));
}

TEST_CASE("category boundaries are inclusive on the upper bound") {
    CHECK(categorize(30.0, Pollutant::PM25) == AqiCategory::Good);
    CHECK(categorize(30.0001, Pollutant::PM25) == AqiCategory::Satisfactory);
    CHECK(categorize(430.0, Pollutant::PM10) == AqiCategory::VeryPoor);
    CHECK(categorize(430.0001, Pollutant::PM10) == AqiCategory::Severe);
}

TEST_CASE("categorize is monotone in concentration") {
    Rng rng(42);
    for (int i = 0; i < 2000; ++i) {
        const double a = rng.uniform(0.0, 600.0);
        const double b = rng.uniform(0.0, 600.0);
        const double lo = std::min(a, b), hi = std::max(a, b);
        for (Pollutant p : {Pollutant::PM25, Pollutant::PM10})
            CHECK(static_cast<int>(categorize(lo, p)) <= static_cast<int>(categorize(hi, p)));
    }
}

TEST_CASE("cell_center inverts bucketing on every cell") {
    const GridSpec g = test_grid();
    CHECK(cell_center(CellId{0, 0}, g).first ==
          doctest::Approx(g.origin_lon + 500.0 / meters_per_deg_lon(g.ref_lat)));
    for (int r = 0; r < g.n_rows; ++r) {
        for (int c = 0; c < g.n_cols; ++c) {
            auto [lon, lat] = cell_center(CellId{r, c}, g);
            auto back = bucket_coordinate(lon, lat, g);
            REQUIRE(back.has_value());
            CHECK(*back == CellId{r, c});
        }
    }
    CHECK_THROWS(cell_center(CellId{g.n_rows, 0}, g));
}
