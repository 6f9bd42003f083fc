#include "airgrid/impute.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace airgrid {

void IdwConfig::validate() const {
    if (k < 1) throw std::invalid_argument("IdwConfig: k must be at least 1");
    if (power <= 0.0) throw std::invalid_argument("IdwConfig: power must be positive");
    if (coord_weight <= 0.0) throw std::invalid_argument("IdwConfig: coord_weight must be positive");
    if (lookback_days < 1) throw std::invalid_argument("IdwConfig: lookback_days must be at least 1");
}

void StandardizeStats::apply(double* point) const {
    for (std::size_t i = 0; i < mean.size(); ++i) point[i] = (point[i] - mean[i]) / stdev[i];
}

void StandardizeStats::invert(double* point) const {
    for (std::size_t i = 0; i < mean.size(); ++i) point[i] = point[i] * stdev[i] + mean[i];
}

StandardizeStats standardize_features(const std::vector<double>& points, int dim) {
    if (dim <= 0 || points.empty() || points.size() % static_cast<std::size_t>(dim) != 0)
        throw std::invalid_argument("standardize_features: need at least one point");
    const std::size_t n = points.size() / static_cast<std::size_t>(dim);
    StandardizeStats stats;
    stats.mean.assign(static_cast<std::size_t>(dim), 0.0);
    stats.stdev.assign(static_cast<std::size_t>(dim), 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (int a = 0; a < dim; ++a) stats.mean[static_cast<std::size_t>(a)] += points[i * dim + a];
    for (auto& m : stats.mean) m /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (int a = 0; a < dim; ++a) {
            const double d = points[i * dim + a] - stats.mean[static_cast<std::size_t>(a)];
            stats.stdev[static_cast<std::size_t>(a)] += d * d;
        }
    }
    for (auto& s : stats.stdev) {
        s = std::sqrt(s / static_cast<double>(n));
        if (s == 0.0) s = 1.0;  // zero-variance feature maps to 0
    }
    return stats;
}

namespace {
std::vector<double> idw_combine(const IdwSet& set,
                                const std::vector<std::pair<double, int>>& nearest,
                                const IdwConfig& cfg) {
    // exact hit short-circuits to avoid infinite weights
    for (const auto& [d2, idx] : nearest) {
        if (std::sqrt(d2) < cfg.zero_dist_eps) {
            return {set.values.begin() + static_cast<std::size_t>(idx) * set.vdim,
                    set.values.begin() + static_cast<std::size_t>(idx + 1) * set.vdim};
        }
    }
    std::vector<double> out(static_cast<std::size_t>(set.vdim), 0.0);
    double wsum = 0.0;
    for (const auto& [d2, idx] : nearest) {
        const double w = std::pow(std::sqrt(d2), -cfg.power);
        wsum += w;
        for (int v = 0; v < set.vdim; ++v)
            out[static_cast<std::size_t>(v)] += w * set.values[static_cast<std::size_t>(idx) * set.vdim + v];
    }
    for (auto& v : out) v /= wsum;
    return out;
}
}  // namespace

std::vector<double> idw_brute(const IdwSet& set, const double* query, const IdwConfig& cfg) {
    if (set.size() == 0) throw std::runtime_error("idw_brute: empty candidate set");
    const int n = set.size();
    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        double d2 = 0.0;
        for (int a = 0; a < set.dim; ++a) {
            const double d = query[a] - set.coords[static_cast<std::size_t>(i) * set.dim + a];
            d2 += d * d;
        }
        dist[static_cast<std::size_t>(i)] = {d2, i};
    }
    const int k = std::min(cfg.k, n);
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    dist.resize(static_cast<std::size_t>(k));
    return idw_combine(set, dist, cfg);
}

IdwIndex::IdwIndex(IdwSet set) : set_(std::move(set)), tree_(set_.dim, set_.coords) {}

std::vector<double> IdwIndex::query(const double* query, const IdwConfig& cfg) const {
    if (set_.size() == 0) throw std::runtime_error("idw_query: empty index");
    return idw_combine(set_, tree_.knn(query, cfg.k), cfg);
}

namespace {
double slot_minute(const TemporalSpec& tspec, int slot) {
    return tspec.day_start_min + (slot + 0.5) * tspec.bin_minutes;
}
}  // namespace

std::optional<BinIndex> build_index(const STFrameSet& frames, TimeBin query_bin,
                                    const IdwConfig& cfg) {
    cfg.validate();
    const int bpd = frames.tspec.bins_per_day();
    const int qbin = query_bin.day * bpd + query_bin.slot;
    const int first_bin = std::max(0, (query_bin.day - cfg.lookback_days) * bpd);
    const int last_bin = std::min(qbin, frames.n_bins);

    std::vector<double> raw;       // lon, lat, minute-of-day per candidate
    std::vector<double> values;    // pm25, pm10
    for (int b = first_bin; b < last_bin; ++b) {
        const int slot = b % bpd;
        const double minute = slot_minute(frames.tspec, slot);
        for (int c = 0; c < frames.n_cells(); ++c) {
            const std::size_t e = frames.idx(c, b);
            if (!frames.observed[e]) continue;
            const auto [lon, lat] = cell_center(frames.cell_id(c), frames.grid);
            raw.push_back(lon);
            raw.push_back(lat);
            raw.push_back(minute);
            values.push_back(frames.pm25[e]);
            values.push_back(frames.pm10[e]);
        }
    }
    const int n = static_cast<int>(raw.size() / 3);
    if (n < cfg.k) return std::nullopt;

    StandardizeStats stats = standardize_features(raw, 3);
    IdwSet set;
    set.dim = 3;
    set.vdim = 2;
    set.values = std::move(values);
    set.coords.resize(raw.size());
    for (int i = 0; i < n; ++i) {
        double p[3] = {raw[static_cast<std::size_t>(i) * 3], raw[static_cast<std::size_t>(i) * 3 + 1],
                       raw[static_cast<std::size_t>(i) * 3 + 2]};
        stats.apply(p);
        set.coords[static_cast<std::size_t>(i) * 3] = p[0] * cfg.coord_weight;
        set.coords[static_cast<std::size_t>(i) * 3 + 1] = p[1] * cfg.coord_weight;
        set.coords[static_cast<std::size_t>(i) * 3 + 2] = p[2];
    }
    return BinIndex{std::move(stats), cfg.coord_weight, IdwIndex(std::move(set))};
}

std::vector<double> BinIndex::query_cell(const STFrameSet& frames, int cell, int slot,
                                         const IdwConfig& cfg) const {
    const auto [lon, lat] = cell_center(frames.cell_id(cell), frames.grid);
    double q[3] = {lon, lat, slot_minute(frames.tspec, slot)};
    stats.apply(q);
    q[0] *= coord_weight;
    q[1] *= coord_weight;
    return index.query(q, cfg);
}

ImputeReport impute_frameset(STFrameSet& frames, const IdwConfig& cfg) {
    cfg.validate();
    const int n_cells = frames.n_cells();
    const int n_bins = frames.n_bins;
    const int bpd = frames.tspec.bins_per_day();

    // Fallback tables, all strictly causal. last_* hold the cell's most
    // recent observed value before each bin (NaN when none); running_*
    // the global mean of observed values over earlier bins.
    std::vector<double> last25(static_cast<std::size_t>(n_cells) * n_bins, std::nan(""));
    std::vector<double> last10(static_cast<std::size_t>(n_cells) * n_bins, std::nan(""));
    for (int c = 0; c < n_cells; ++c) {
        double l25 = std::nan(""), l10 = std::nan("");
        for (int b = 0; b < n_bins; ++b) {
            const std::size_t e = frames.idx(c, b);
            last25[e] = l25;
            last10[e] = l10;
            if (frames.observed[e]) {
                l25 = frames.pm25[e];
                l10 = frames.pm10[e];
            }
        }
    }
    std::vector<double> running25(static_cast<std::size_t>(n_bins), 0.0);
    std::vector<double> running10(static_cast<std::size_t>(n_bins), 0.0);
    {
        double sum25 = 0.0, sum10 = 0.0;
        std::int64_t count = 0;
        for (int b = 0; b < n_bins; ++b) {
            running25[static_cast<std::size_t>(b)] = count ? sum25 / count : 0.0;
            running10[static_cast<std::size_t>(b)] = count ? sum10 / count : 0.0;
            for (int c = 0; c < n_cells; ++c) {
                const std::size_t e = frames.idx(c, b);
                if (frames.observed[e]) {
                    sum25 += frames.pm25[e];
                    sum10 += frames.pm10[e];
                    ++count;
                }
            }
        }
    }

    ImputeReport report;
    report.observed_per_bin.assign(static_cast<std::size_t>(n_bins), 0);
    report.imputed_per_bin.assign(static_cast<std::size_t>(n_bins), 0);

    // Bins are independent: candidates are observed entries of earlier bins
    // only, so the loop parallelizes without ordering effects.
#pragma omp parallel for schedule(dynamic)
    for (int b = 0; b < n_bins; ++b) {
        int n_observed = 0, n_imputed = 0;
        std::optional<BinIndex> index;
        bool index_built = false;
        const TimeBin tb{b / bpd, b % bpd};
        for (int c = 0; c < n_cells; ++c) {
            const std::size_t e = frames.idx(c, b);
            if (frames.observed[e]) {
                ++n_observed;
                continue;
            }
            if (frames.imputed[e]) continue;  // already complete
            if (!index_built) {
                index = build_index(frames, tb, cfg);
                index_built = true;
            }
            if (index) {
                const auto v = index->query_cell(frames, c, tb.slot, cfg);
                frames.pm25[e] = v[0];
                frames.pm10[e] = v[1];
            } else if (!std::isnan(last25[e])) {
                frames.pm25[e] = last25[e];
                frames.pm10[e] = last10[e];
            } else {
                frames.pm25[e] = running25[static_cast<std::size_t>(b)];
                frames.pm10[e] = running10[static_cast<std::size_t>(b)];
            }
            frames.imputed[e] = 1;
            ++n_imputed;
        }
        report.observed_per_bin[static_cast<std::size_t>(b)] = n_observed;
        report.imputed_per_bin[static_cast<std::size_t>(b)] = n_imputed;
    }
    return report;
}

}  // namespace airgrid
