#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "airgrid/impute.hpp"
#include "airgrid/rng.hpp"

using namespace airgrid;

namespace {

IdwSet random_set(Rng& rng, int n, int dim, int vdim = 2) {
    IdwSet set;
    set.dim = dim;
    set.vdim = vdim;
    set.coords.resize(static_cast<std::size_t>(n) * dim);
    set.values.resize(static_cast<std::size_t>(n) * vdim);
    for (auto& c : set.coords) c = rng.uniform(-3.0, 3.0);
    for (auto& v : set.values) v = rng.uniform(0.0, 300.0);
    return set;
}

STFrameSet empty_frames(int n_rows, int n_cols, int n_days) {
    STFrameSet fs;
    fs.grid.origin_lon = 77.0;
    fs.grid.origin_lat = 28.5;
    fs.grid.n_rows = n_rows;
    fs.grid.n_cols = n_cols;
    fs.grid.ref_lat = 28.5;
    fs.tspec.epoch_day = 18628;
    fs.n_bins = n_days * fs.tspec.bins_per_day();
    fs.allocate();
    return fs;
}

void observe(STFrameSet& fs, int cell, int bin, double pm25, double pm10) {
    const std::size_t e = fs.idx(cell, bin);
    fs.observed[e] = 1;
    fs.pm25[e] = pm25;
    fs.pm10[e] = pm10;
}

}  // namespace

TEST_CASE("standardize_features zero-variance and round trip") {
    // constant lon, varying lat
    std::vector<double> pts = {77.0, 1.0, 100.0, 77.0, 3.0, 200.0, 77.0, 5.0, 300.0};
    const StandardizeStats stats = standardize_features(pts, 3);
    double p[3] = {77.0, 3.0, 200.0};
    stats.apply(p);
    CHECK(p[0] == 0.0);  // zero-variance feature maps to 0
    CHECK(p[1] == doctest::Approx(0.0).epsilon(1e-12));
    stats.invert(p);
    CHECK(p[0] == doctest::Approx(77.0));
    CHECK(p[1] == doctest::Approx(3.0));
    CHECK(p[2] == doctest::Approx(200.0));
}

TEST_CASE("standardize_features preserves unit variance for centered pairs") {
    std::vector<double> pts = {-1.0, 1.0};
    const StandardizeStats stats = standardize_features(pts, 1);
    double a[1] = {-1.0}, b[1] = {1.0};
    stats.apply(a);
    stats.apply(b);
    CHECK(a[0] == doctest::Approx(-1.0));
    CHECK(b[0] == doctest::Approx(1.0));
}

TEST_CASE("idw_query returns an exact hit directly") {
    Rng rng(1);
    IdwSet set = random_set(rng, 20, 3);
    const IdwIndex index(set);
    double q[3] = {set.coords[9], set.coords[10], set.coords[11]};  // point 3
    IdwConfig cfg;
    const auto v = index.query(q, cfg);
    CHECK(v[0] == set.values[6]);
    CHECK(v[1] == set.values[7]);
}

TEST_CASE("idw_query averages equidistant neighbors equally") {
    IdwSet set;
    set.dim = 2;
    set.vdim = 1;
    set.coords = {1, 0, -1, 0, 0, 1};  // three points at distance 1 from origin
    set.values = {30, 60, 90};
    const IdwIndex index(set);
    double q[2] = {0, 0};
    IdwConfig cfg;  // k = 3
    CHECK(index.query(q, cfg)[0] == doctest::Approx(60.0).epsilon(1e-12));
}

TEST_CASE("idw weighting follows the inverse-power formula") {
    IdwSet set;
    set.dim = 1;
    set.vdim = 1;
    set.coords = {1.0, 2.0, 50.0};
    set.values = {10.0, 40.0, 1000.0};
    IdwConfig cfg;
    cfg.k = 2;
    cfg.power = 3.0;
    const IdwIndex index(set);
    double q[1] = {0.0};
    // weights 1 and 1/8: (10 + 40/8) / (1 + 1/8) = 13.333...
    CHECK(index.query(q, cfg)[0] == doctest::Approx(40.0 / 3.0).epsilon(1e-12));
    CHECK(idw_brute(set, q, cfg)[0] == doctest::Approx(40.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("k larger than the candidate count clamps to all candidates") {
    IdwSet set;
    set.dim = 1;
    set.vdim = 1;
    set.coords = {1.0};
    set.values = {42.0};
    IdwConfig cfg;
    cfg.k = 5;
    const IdwIndex index(set);
    double q[1] = {3.0};
    CHECK(index.query(q, cfg)[0] == doctest::Approx(42.0));
    CHECK(idw_brute(set, q, cfg)[0] == doctest::Approx(42.0));
}

TEST_CASE("accelerated query equals the exhaustive oracle") {
    Rng rng(2);
    IdwConfig cfg;
    for (int rep = 0; rep < 300; ++rep) {
        const int n = 1 + static_cast<int>(rng.uniform_int(200));
        IdwSet set = random_set(rng, n, 3);
        const IdwIndex index(set);
        cfg.k = 1 + static_cast<int>(rng.uniform_int(6));
        double q[3] = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const auto fast = index.query(q, cfg);
        const auto slow = idw_brute(set, q, cfg);
        for (int v = 0; v < set.vdim; ++v) CHECK(std::abs(fast[v] - slow[v]) <= 1e-9);
    }
}

TEST_CASE("oracle equivalence holds under exact distance ties") {
    // grid corners equidistant from the center
    IdwSet set;
    set.dim = 2;
    set.vdim = 1;
    set.coords = {1, 1, -1, 1, 1, -1, -1, -1, 2, 0};
    set.values = {10, 20, 30, 40, 50};
    const IdwIndex index(set);
    IdwConfig cfg;
    cfg.k = 3;
    double q[2] = {0, 0};
    const auto fast = index.query(q, cfg);
    const auto slow = idw_brute(set, q, cfg);
    CHECK(fast[0] == slow[0]);
    CHECK(fast[0] == doctest::Approx(20.0));  // ties keep points 0, 1, 2
}

TEST_CASE("IDW prediction stays inside the neighbor value range and scales linearly") {
    Rng rng(3);
    IdwConfig cfg;
    for (int rep = 0; rep < 100; ++rep) {
        IdwSet set = random_set(rng, 30, 3, 1);
        double q[3] = {rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)};
        const double v = idw_brute(set, q, cfg)[0];
        double lo = 1e300, hi = -1e300;
        for (double x : set.values) {
            lo = std::min(lo, x);
            hi = std::max(hi, x);
        }
        CHECK(v >= lo - 1e-9);
        CHECK(v <= hi + 1e-9);

        IdwSet scaled = set;
        for (auto& x : scaled.values) x *= 2.5;
        CHECK(idw_brute(scaled, q, cfg)[0] == doctest::Approx(2.5 * v).epsilon(1e-12));
    }
}

TEST_CASE("build_index collects only the lookback window strictly before the query") {
    STFrameSet fs = empty_frames(3, 3, 6);
    const int bpd = fs.tspec.bins_per_day();
    IdwConfig cfg;
    cfg.k = 1;
    // observations on days 1, 3, 4, 5 and at the query bin itself
    observe(fs, 0, 1 * bpd + 2, 10, 20);
    observe(fs, 1, 3 * bpd + 0, 30, 40);
    observe(fs, 2, 4 * bpd + 5, 50, 60);
    observe(fs, 3, 5 * bpd + 1, 70, 80);
    observe(fs, 4, 5 * bpd + 2, 90, 100);  // exactly at the query bin: excluded

    const auto index = build_index(fs, TimeBin{5, 2}, cfg);
    REQUIRE(index.has_value());
    CHECK(index->index.set().size() == 3);  // days 3, 4, 5-pre-bin qualify

    const auto none = build_index(fs, TimeBin{0, 5}, cfg);
    CHECK_FALSE(none.has_value());  // nothing observed before day 0 bin 5
}

TEST_CASE("impute_frameset fills everything, flags it, and leaves observations alone") {
    Rng rng(4);
    STFrameSet fs = empty_frames(4, 4, 10);
    for (int c = 0; c < fs.n_cells(); ++c)
        for (int b = 0; b < fs.n_bins; ++b)
            if (rng.uniform01() < 0.3) observe(fs, c, b, rng.uniform(20, 200), rng.uniform(40, 300));
    const STFrameSet before = fs;
    impute_frameset(fs);
    for (std::size_t e = 0; e < fs.pm25.size(); ++e) {
        CHECK(std::isfinite(fs.pm25[e]));
        CHECK(std::isfinite(fs.pm10[e]));
        if (before.observed[e]) {
            CHECK(fs.pm25[e] == before.pm25[e]);
            CHECK(fs.imputed[e] == 0);
        } else {
            CHECK(fs.imputed[e] == 1);
        }
    }
}

TEST_CASE("imputation is causal: later bins never influence earlier fills") {
    Rng rng(5);
    STFrameSet fs = empty_frames(3, 3, 10);
    for (int c = 0; c < fs.n_cells(); ++c)
        for (int b = 0; b < fs.n_bins; ++b)
            if (rng.uniform01() < 0.4) observe(fs, c, b, rng.uniform(20, 200), rng.uniform(40, 300));

    STFrameSet a = fs;
    impute_frameset(a);

    const int cut = fs.n_bins / 2;
    STFrameSet b = fs;
    for (int c = 0; c < b.n_cells(); ++c) {
        for (int bin = cut; bin < b.n_bins; ++bin) {
            const std::size_t e = b.idx(c, bin);
            if (b.observed[e]) {
                b.pm25[e] += 1000.0;  // rewrite the future
                b.pm10[e] += 1000.0;
            }
        }
    }
    impute_frameset(b);
    for (int c = 0; c < b.n_cells(); ++c)
        for (int bin = 0; bin < cut; ++bin) {
            const std::size_t e = b.idx(c, bin);
            CHECK(a.pm25[e] == b.pm25[e]);
            CHECK(a.pm10[e] == b.pm10[e]);
        }
}

TEST_CASE("imputing a complete frameset changes nothing") {
    Rng rng(6);
    STFrameSet fs = empty_frames(3, 3, 10);
    for (int c = 0; c < fs.n_cells(); ++c)
        for (int b = 0; b < fs.n_bins; ++b) observe(fs, c, b, rng.uniform(20, 200), rng.uniform(40, 300));
    const STFrameSet before = fs;
    const ImputeReport report = impute_frameset(fs);
    CHECK(fs.pm25 == before.pm25);
    CHECK(fs.pm10 == before.pm10);
    CHECK(fs.imputed == before.imputed);
    for (int n : report.imputed_per_bin) CHECK(n == 0);
}

TEST_CASE("fallback chain: last value, then running mean, then zero") {
    STFrameSet fs = empty_frames(2, 2, 10);
    const int bpd = fs.tspec.bins_per_day();
    // cell 0 observed at bin 3 only; no other observations anywhere until day 5
    observe(fs, 0, 3, 111, 222);
    observe(fs, 1, 5 * bpd, 50, 70);
    observe(fs, 2, 5 * bpd, 60, 80);
    observe(fs, 3, 5 * bpd, 70, 90);
    impute_frameset(fs);

    // bin 0: no candidates at all anywhere earlier -> 0
    CHECK(fs.pm25[fs.idx(0, 0)] == 0.0);
    // bin 4, cell 0: fewer than k candidates, cell has a previous value
    CHECK(fs.pm25[fs.idx(0, 4)] == 111.0);
    // bin 4, cell 1: no own history, one global observation -> running mean
    CHECK(fs.pm25[fs.idx(1, 4)] == doctest::Approx(111.0));
    CHECK(fs.pm10[fs.idx(1, 4)] == doctest::Approx(222.0));
}
