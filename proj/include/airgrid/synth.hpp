#pragma once

#include <cstdint>
#include <string>

#include "airgrid/domain.hpp"
#include "airgrid/frameset.hpp"

namespace airgrid {

// Synthetic mobile-sensing scenario: a smooth spatial base field from
// Gaussian bumps, a per-cell-phased daily sinusoid, an AR(1) day-to-day
// drift, and seeded bus random walks emitting noisy readings.
struct SynthConfig {
    int n_rows = 10;
    int n_cols = 10;
    int n_days = 30;
    int n_buses = 5;
    int route_len = 4;  // cells visited per bus per bin
    std::uint64_t seed = 1;

    int n_bumps = 4;
    double base_level = 80.0;
    double bump_amp = 40.0;
    double bump_sigma = 2.5;  // in cell units
    double daily_amp = 25.0;
    double rho = 0.7;       // AR(1) coefficient of the daily drift
    double sigma_day = 6.0; // drift innovation
    double sigma_obs = 2.0; // observation noise
    double pm10_ratio = 1.1;

    GridSpec grid() const;
    TemporalSpec tspec() const;
    void validate() const;
};

struct SynthResult {
    STFrameSet truth;  // dense, observed everywhere
    std::int64_t n_readings = 0;
};

// Writes an ingest-compatible readings file and returns the dense truth.
// Identical configs produce byte-identical files.
SynthResult generate(const SynthConfig& cfg, const std::string& readings_path);

}  // namespace airgrid
