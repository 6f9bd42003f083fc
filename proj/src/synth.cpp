#include "airgrid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "airgrid/rng.hpp"

namespace airgrid {

GridSpec SynthConfig::grid() const {
    GridSpec g;
    g.origin_lon = 77.05;
    g.origin_lat = 28.40;
    g.cell_size_m = 1000.0;
    g.n_rows = n_rows;
    g.n_cols = n_cols;
    g.ref_lat = 28.45;
    return g;
}

TemporalSpec SynthConfig::tspec() const {
    TemporalSpec t;          // defaults: 30-minute bins, 5:30-22:00, IST
    t.epoch_day = 18628;     // 2021-01-01 in local days
    return t;
}

void SynthConfig::validate() const {
    if (n_rows < 1 || n_cols < 1) throw std::invalid_argument("synth: grid must be non-empty");
    if (n_days < 1) throw std::invalid_argument("synth: need at least one day");
    if (n_buses < 1 || route_len < 1) throw std::invalid_argument("synth: need buses and routes");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("synth: rho must be in [0, 1)");
    if (sigma_day < 0.0 || sigma_obs < 0.0) throw std::invalid_argument("synth: sigmas must be >= 0");
}

SynthResult generate(const SynthConfig& cfg, const std::string& readings_path) {
    cfg.validate();
    const GridSpec grid = cfg.grid();
    const TemporalSpec tspec = cfg.tspec();
    const int bpd = tspec.bins_per_day();
    const int n_cells = grid.n_cells();

    Rng rng(cfg.seed);

    // spatial base field from Gaussian bumps
    std::vector<double> bump_row(static_cast<std::size_t>(cfg.n_bumps));
    std::vector<double> bump_col(static_cast<std::size_t>(cfg.n_bumps));
    std::vector<double> bump_amp(static_cast<std::size_t>(cfg.n_bumps));
    for (int g = 0; g < cfg.n_bumps; ++g) {
        bump_row[static_cast<std::size_t>(g)] = rng.uniform(0.0, cfg.n_rows);
        bump_col[static_cast<std::size_t>(g)] = rng.uniform(0.0, cfg.n_cols);
        bump_amp[static_cast<std::size_t>(g)] = cfg.bump_amp * rng.uniform(0.3, 1.0);
    }
    std::vector<double> base(static_cast<std::size_t>(n_cells));
    std::vector<double> phase(static_cast<std::size_t>(n_cells));
    for (int c = 0; c < n_cells; ++c) {
        const double r = c / cfg.n_cols + 0.5;
        const double k = c % cfg.n_cols + 0.5;
        double v = cfg.base_level;
        for (int g = 0; g < cfg.n_bumps; ++g) {
            const double dr = r - bump_row[static_cast<std::size_t>(g)];
            const double dc = k - bump_col[static_cast<std::size_t>(g)];
            v += bump_amp[static_cast<std::size_t>(g)] *
                 std::exp(-(dr * dr + dc * dc) / (2.0 * cfg.bump_sigma * cfg.bump_sigma));
        }
        base[static_cast<std::size_t>(c)] = v;
        // smooth phase gradient with a little per-cell jitter
        phase[static_cast<std::size_t>(c)] =
            2.0 * M_PI * (0.3 * r / cfg.n_rows + 0.2 * k / cfg.n_cols) + rng.uniform(-0.3, 0.3);
    }

    std::vector<double> drift(static_cast<std::size_t>(cfg.n_days));
    double d = 0.0;
    for (int day = 0; day < cfg.n_days; ++day) {
        d = cfg.rho * d + rng.normal(0.0, cfg.sigma_day);
        drift[static_cast<std::size_t>(day)] = d;
    }

    SynthResult result;
    result.truth.grid = grid;
    result.truth.tspec = tspec;
    result.truth.n_bins = cfg.n_days * bpd;
    result.truth.allocate();
    for (int c = 0; c < n_cells; ++c) {
        for (int day = 0; day < cfg.n_days; ++day) {
            for (int slot = 0; slot < bpd; ++slot) {
                const double v = std::max(
                    0.0, base[static_cast<std::size_t>(c)] +
                             cfg.daily_amp *
                                 std::sin(2.0 * M_PI * slot / bpd + phase[static_cast<std::size_t>(c)]) +
                             drift[static_cast<std::size_t>(day)]);
                const std::size_t e = result.truth.idx(c, day * bpd + slot);
                result.truth.pm25[e] = v;
                result.truth.pm10[e] = std::max(0.0, cfg.pm10_ratio * v);
                result.truth.observed[e] = 1;
            }
        }
    }

    std::ofstream os(readings_path, std::ios::trunc);
    if (!os) throw std::runtime_error("synth: cannot open " + readings_path + " for writing");
    os << "timestamp,lon,lat,pm25,pm10,device_id\n";

    const double lat_per_m = 1.0 / kMetersPerDegLat;
    const double lon_per_m = 1.0 / meters_per_deg_lon(grid.ref_lat);
    std::vector<int> bus_row(static_cast<std::size_t>(cfg.n_buses));
    std::vector<int> bus_col(static_cast<std::size_t>(cfg.n_buses));
    for (int b = 0; b < cfg.n_buses; ++b) {
        bus_row[static_cast<std::size_t>(b)] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.n_rows)));
        bus_col[static_cast<std::size_t>(b)] = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(cfg.n_cols)));
    }

    char line[256];
    const int bin_seconds = tspec.bin_minutes * 60;
    std::vector<int> visited;
    for (int day = 0; day < cfg.n_days; ++day) {
        for (int slot = 0; slot < bpd; ++slot) {
            const std::int64_t local_start =
                (tspec.epoch_day + day) * 86400LL + (tspec.day_start_min + slot * tspec.bin_minutes) * 60LL;
            const std::int64_t utc_start = local_start - tspec.utc_offset_min * 60LL;
            for (int b = 0; b < cfg.n_buses; ++b) {
                visited.clear();
                int row = bus_row[static_cast<std::size_t>(b)];
                int col = bus_col[static_cast<std::size_t>(b)];
                for (int step = 0; step < cfg.route_len; ++step) {
                    if (step > 0) {
                        // random adjacent move, avoiding cells already hit
                        // in this bin when possible
                        int candidates[4][2];
                        int n_cand = 0;
                        const int moves[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
                        for (const auto& m : moves) {
                            const int nr = row + m[0], nc = col + m[1];
                            if (nr < 0 || nr >= cfg.n_rows || nc < 0 || nc >= cfg.n_cols) continue;
                            if (std::find(visited.begin(), visited.end(), nr * cfg.n_cols + nc) !=
                                visited.end())
                                continue;
                            candidates[n_cand][0] = nr;
                            candidates[n_cand][1] = nc;
                            ++n_cand;
                        }
                        if (n_cand == 0) {
                            // boxed in; step anywhere legal
                            for (const auto& m : moves) {
                                const int nr = row + m[0], nc = col + m[1];
                                if (nr < 0 || nr >= cfg.n_rows || nc < 0 || nc >= cfg.n_cols) continue;
                                candidates[n_cand][0] = nr;
                                candidates[n_cand][1] = nc;
                                ++n_cand;
                            }
                        }
                        const int pick = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(n_cand)));
                        row = candidates[pick][0];
                        col = candidates[pick][1];
                    }
                    visited.push_back(row * cfg.n_cols + col);

                    const int cell = row * cfg.n_cols + col;
                    const std::size_t e = result.truth.idx(cell, day * bpd + slot);
                    const double pm25 =
                        std::max(0.0, result.truth.pm25[e] + rng.normal(0.0, cfg.sigma_obs));
                    const double pm10 =
                        std::max(0.0, result.truth.pm10[e] + rng.normal(0.0, cfg.sigma_obs));
                    const double lat = grid.origin_lat +
                                       (row + rng.uniform(0.05, 0.95)) * grid.cell_size_m * lat_per_m;
                    const double lon = grid.origin_lon +
                                       (col + rng.uniform(0.05, 0.95)) * grid.cell_size_m * lon_per_m;
                    const std::int64_t ts =
                        utc_start + static_cast<std::int64_t>((step + 0.5) / cfg.route_len * bin_seconds);
                    std::snprintf(line, sizeof line, "%lld,%.6f,%.6f,%.3f,%.3f,bus%03d\n",
                                  static_cast<long long>(ts), lon, lat, pm25, pm10, b);
                    os << line;
                    ++result.n_readings;
                }
                bus_row[static_cast<std::size_t>(b)] = row;
                bus_col[static_cast<std::size_t>(b)] = col;
            }
        }
    }
    if (!os) throw std::runtime_error("synth: write failed for " + readings_path);
    return result;
}

}  // namespace airgrid
