#include "airgrid/represent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace airgrid {

StaticFeatures load_static_features(const std::string& path, const GridSpec& grid,
                                    char delimiter) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("static features: cannot open " + path);
    StaticFeatures out;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("static features: empty file " + path);
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, delimiter)) fields.push_back(std::stod(tok));
        if (fields.size() < 3) throw std::runtime_error("static features: row needs row,col,f1..");
        const int row = static_cast<int>(fields[0]);
        const int col = static_cast<int>(fields[1]);
        if (row < 0 || row >= grid.n_rows || col < 0 || col >= grid.n_cols)
            throw std::runtime_error("static features: cell outside grid");
        std::vector<double> vec(fields.begin() + 2, fields.end());
        if (first) {
            out.width = static_cast<int>(vec.size());
            first = false;
        } else if (static_cast<int>(vec.size()) != out.width) {
            throw std::runtime_error("static features: inconsistent feature count");
        }
        out.by_cell[row * grid.n_cols + col] = std::move(vec);
    }
    return out;
}

void Normalizer::apply(double* vec) const {
    for (std::size_t i = 0; i < mean.size(); ++i) vec[i] = (vec[i] - mean[i]) / stdev[i];
}

void Normalizer::invert(double* vec) const {
    for (std::size_t i = 0; i < mean.size(); ++i) vec[i] = vec[i] * stdev[i] + mean[i];
}

double Normalizer::apply_target(double v, Pollutant p) const {
    const std::size_t i = p == Pollutant::PM25 ? 0 : 1;
    return (v - mean[i]) / stdev[i];
}

double Normalizer::invert_target(double v, Pollutant p) const {
    const std::size_t i = p == Pollutant::PM25 ? 0 : 1;
    return v * stdev[i] + mean[i];
}

std::vector<double> assemble_features(const STFrameSet& completed, int cell, int bin,
                                      const StaticFeatures* statics) {
    const int bpd = completed.tspec.bins_per_day();
    const int day = bin / bpd;
    const int slot = bin % bpd;
    const int s = statics ? statics->width : 0;
    std::vector<double> f(static_cast<std::size_t>(kBaseFeatureCount + s), 0.0);

    const std::size_t e = completed.idx(cell, bin);
    f[0] = completed.pm25[e];
    f[1] = completed.pm10[e];
    const bool speed_absent = std::isnan(completed.speed[e]);
    f[2] = speed_absent ? 0.0 : completed.speed[e];
    f[3] = static_cast<double>(completed.device_count[e]);
    for (int l = 0; l < 4; ++l) {
        const int lag_day = std::max(0, day - kLagDays[l]);
        const std::size_t le = completed.idx(cell, lag_day * bpd + slot);
        f[static_cast<std::size_t>(4 + l)] = completed.pm25[le];
        f[static_cast<std::size_t>(8 + l)] = completed.pm10[le];
    }
    const double phase = 2.0 * M_PI * slot / bpd;
    f[12] = std::sin(phase);
    f[13] = std::cos(phase);
    f[14] = completed.imputed[e] ? 1.0 : 0.0;
    f[15] = speed_absent ? 1.0 : 0.0;
    if (s > 0) {
        auto it = statics->by_cell.find(cell);
        if (it != statics->by_cell.end())
            std::copy(it->second.begin(), it->second.end(), f.begin() + kBaseFeatureCount);
    }
    return f;
}

Normalizer fit_normalizer(const STFrameSet& completed, const std::vector<CellId>& cells,
                          int bin_begin, int bin_end, const StaticFeatures* statics) {
    if (cells.empty() || bin_end <= bin_begin)
        throw std::invalid_argument("fit_normalizer: empty fit range");
    const int nf = kBaseFeatureCount + (statics ? statics->width : 0);
    Normalizer norm;
    norm.mean.assign(static_cast<std::size_t>(nf), 0.0);
    norm.stdev.assign(static_cast<std::size_t>(nf), 0.0);
    std::int64_t n = 0;
    std::vector<double> sums(static_cast<std::size_t>(nf), 0.0);
    std::vector<double> sqsums(static_cast<std::size_t>(nf), 0.0);
    for (const CellId& c : cells) {
        const int cell = completed.cell_index(c);
        for (int b = bin_begin; b < bin_end; ++b) {
            const auto f = assemble_features(completed, cell, b, statics);
            for (int i = 0; i < nf; ++i) {
                sums[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)];
                sqsums[static_cast<std::size_t>(i)] += f[static_cast<std::size_t>(i)] * f[static_cast<std::size_t>(i)];
            }
            ++n;
        }
    }
    for (int i = 0; i < nf; ++i) {
        const double m = sums[static_cast<std::size_t>(i)] / static_cast<double>(n);
        double var = sqsums[static_cast<std::size_t>(i)] / static_cast<double>(n) - m * m;
        if (var < 0.0) var = 0.0;
        norm.mean[static_cast<std::size_t>(i)] = m;
        norm.stdev[static_cast<std::size_t>(i)] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    for (int i : kFlagFeatures) {
        norm.mean[static_cast<std::size_t>(i)] = 0.0;
        norm.stdev[static_cast<std::size_t>(i)] = 1.0;
    }
    return norm;
}

WindowSpec resolve_window(const TemporalSpec& tspec, const WindowSpec& w) {
    WindowSpec out = w;
    if (out.input_bins <= 0) out.input_bins = 2 * tspec.bins_per_day();
    if (out.horizon_bins <= 0) out.horizon_bins = tspec.bins_per_day();
    return out;
}

std::vector<int> train_anchors(const TemporalSpec& tspec, const TemporalSplit& split,
                               const WindowSpec& w) {
    const int bpd = tspec.bins_per_day();
    std::vector<int> anchors;
    for (int a = split.train_begin; a + w.input_bins + w.horizon_bins <= split.train_end; a += bpd)
        anchors.push_back(a);
    return anchors;
}

std::vector<int> test_anchors(const TemporalSpec& tspec, const TemporalSplit& split,
                              const WindowSpec& w) {
    const int bpd = tspec.bins_per_day();
    std::vector<int> anchors;
    for (int a = 0; a + w.input_bins + w.horizon_bins <= split.test_end; a += bpd) {
        if (a + w.input_bins >= split.test_begin) anchors.push_back(a);
    }
    return anchors;
}

namespace {

// Standardized features for every (cell, bin); samples then copy slices.
std::vector<double> feature_table(const STFrameSet& completed, const Normalizer& norm,
                                  const StaticFeatures* statics) {
    const int nf = norm.n_features();
    const int n_cells = completed.n_cells();
    const int n_bins = completed.n_bins;
    std::vector<double> table(static_cast<std::size_t>(n_cells) * n_bins * nf);
#pragma omp parallel for schedule(static)
    for (int c = 0; c < n_cells; ++c) {
        for (int b = 0; b < n_bins; ++b) {
            auto f = assemble_features(completed, c, b, statics);
            norm.apply(f.data());
            std::copy(f.begin(), f.end(),
                      table.begin() + (static_cast<std::size_t>(c) * n_bins + b) * nf);
        }
    }
    return table;
}

void fill_target(const STFrameSet& completed, const Normalizer& norm, int cell, int anchor,
                 const WindowSpec& w, bool masked, double* target, std::uint8_t* mask) {
    for (int h = 0; h < w.horizon_bins; ++h) {
        const int bin = anchor + w.input_bins + h;
        const std::size_t e = completed.idx(cell, bin);
        target[h * 2] = norm.apply_target(completed.pm25[e], Pollutant::PM25);
        target[h * 2 + 1] = norm.apply_target(completed.pm10[e], Pollutant::PM10);
        const std::uint8_t m = (masked && completed.observed[e]) ? 1 : 0;
        mask[h * 2] = m;
        mask[h * 2 + 1] = m;
    }
}

void check_windows(const STFrameSet& completed, const TemporalSplit& tsplit, const WindowSpec& w) {
    if (w.input_bins <= 0 || w.horizon_bins <= 0)
        throw std::invalid_argument("samples: window and horizon must be positive");
    if (w.input_bins + w.horizon_bins > tsplit.train_end)
        throw std::invalid_argument("samples: window plus horizon exceeds the training range");
    if (w.input_bins + w.horizon_bins > completed.n_bins)
        throw std::invalid_argument("samples: window plus horizon exceeds available bins");
}

}  // namespace

SeriesDataset build_series_samples(const STFrameSet& completed, const CellSplit& split,
                                   const TemporalSplit& tsplit, const WindowSpec& wraw,
                                   const Normalizer& norm, const StaticFeatures* statics) {
    const WindowSpec w = resolve_window(completed.tspec, wraw);
    check_windows(completed, tsplit, w);
    const int nf = norm.n_features();
    const std::vector<double> table = feature_table(completed, norm, statics);
    const std::vector<int> tr_anchors = train_anchors(completed.tspec, tsplit, w);
    const std::vector<int> te_anchors = test_anchors(completed.tspec, tsplit, w);
    if (tr_anchors.empty()) throw std::invalid_argument("samples: no valid training anchors");

    auto build_one = [&](CellId cid, int anchor) {
        SeriesSample s;
        s.cell = cid;
        s.cell_index = completed.cell_index(cid);
        s.anchor = anchor;
        s.input_bins = w.input_bins;
        s.horizon_bins = w.horizon_bins;
        s.n_features = nf;
        const int cell = completed.cell_index(cid);
        s.input.resize(static_cast<std::size_t>(w.input_bins) * nf);
        std::copy_n(table.begin() + (static_cast<std::size_t>(cell) * completed.n_bins + anchor) * nf,
                    s.input.size(), s.input.begin());
        s.target.resize(static_cast<std::size_t>(w.horizon_bins) * 2);
        s.mask.resize(s.target.size());
        fill_target(completed, norm, cell, anchor, w, true, s.target.data(), s.mask.data());
        return s;
    };

    SeriesDataset out;
    for (const CellId& c : split.core)
        for (int a : tr_anchors) out.train.push_back(build_one(c, a));
    for (const CellId& c : split.core)
        for (int a : te_anchors) out.test.push_back(build_one(c, a));
    for (const CellId& c : split.extended)
        for (int a : te_anchors) out.extended.push_back(build_one(c, a));
    return out;
}

namespace {

GraphSample build_graph_sample(const STFrameSet& completed, const std::vector<double>& table,
                               int nf, const std::shared_ptr<std::vector<CellId>>& nodes,
                               const std::shared_ptr<Adjacency>& adj, int anchor,
                               const WindowSpec& w, const Normalizer& norm,
                               const std::vector<bool>& masked_node) {
    GraphSample s;
    s.adj = adj;
    s.nodes = nodes;
    s.anchor = anchor;
    s.input_bins = w.input_bins;
    s.horizon_bins = w.horizon_bins;
    s.n_features = nf;
    s.n_nodes = static_cast<int>(nodes->size());
    const int n = s.n_nodes;
    s.input.resize(static_cast<std::size_t>(w.input_bins) * n * nf);
    for (int t = 0; t < w.input_bins; ++t) {
        for (int i = 0; i < n; ++i) {
            const int cell = completed.cell_index((*nodes)[static_cast<std::size_t>(i)]);
            std::copy_n(
                table.begin() + (static_cast<std::size_t>(cell) * completed.n_bins + anchor + t) * nf,
                static_cast<std::size_t>(nf),
                s.input.begin() + (static_cast<std::size_t>(t) * n + i) * nf);
        }
    }
    s.target.resize(static_cast<std::size_t>(n) * w.horizon_bins * 2);
    s.mask.resize(s.target.size());
    for (int i = 0; i < n; ++i) {
        const int cell = completed.cell_index((*nodes)[static_cast<std::size_t>(i)]);
        fill_target(completed, norm, cell, anchor, w, masked_node[static_cast<std::size_t>(i)],
                    s.target.data() + static_cast<std::size_t>(i) * w.horizon_bins * 2,
                    s.mask.data() + static_cast<std::size_t>(i) * w.horizon_bins * 2);
    }
    return s;
}

std::shared_ptr<Adjacency> adjacency_for(const STFrameSet& frames,
                                         const std::vector<CellId>& nodes, int k) {
    std::vector<std::array<double, 2>> centers;
    centers.reserve(nodes.size());
    for (const CellId& c : nodes) {
        auto [x, y] = cell_center_meters(c, frames.grid);
        centers.push_back({x, y});
    }
    return std::make_shared<Adjacency>(knn_graph(centers, k));
}

}  // namespace

GraphDataset build_graph_samples(const STFrameSet& completed, const CellSplit& split,
                                 const TemporalSplit& tsplit, const WindowSpec& wraw,
                                 int k_neighbors, const Normalizer& norm,
                                 const StaticFeatures* statics) {
    const WindowSpec w = resolve_window(completed.tspec, wraw);
    check_windows(completed, tsplit, w);
    const int nf = norm.n_features();
    const std::vector<double> table = feature_table(completed, norm, statics);

    GraphDataset out;
    out.core_nodes = std::make_shared<std::vector<CellId>>(split.core);
    std::sort(out.core_nodes->begin(), out.core_nodes->end());
    out.core_adj = adjacency_for(completed, *out.core_nodes, k_neighbors);

    const std::vector<int> tr_anchors = train_anchors(completed.tspec, tsplit, w);
    const std::vector<int> te_anchors = test_anchors(completed.tspec, tsplit, w);
    if (tr_anchors.empty()) throw std::invalid_argument("samples: no valid training anchors");

    const std::vector<bool> all_masked(out.core_nodes->size(), true);
    for (int a : tr_anchors)
        out.train.push_back(build_graph_sample(completed, table, nf, out.core_nodes, out.core_adj,
                                               a, w, norm, all_masked));
    for (int a : te_anchors)
        out.test.push_back(build_graph_sample(completed, table, nf, out.core_nodes, out.core_adj,
                                              a, w, norm, all_masked));

    if (!split.extended.empty()) {
        out.ext_nodes = std::make_shared<std::vector<CellId>>(*out.core_nodes);
        out.ext_nodes->insert(out.ext_nodes->end(), split.extended.begin(), split.extended.end());
        std::sort(out.ext_nodes->begin(), out.ext_nodes->end());
        out.ext_adj = adjacency_for(completed, *out.ext_nodes, kExtendedGraphK);
        const std::set<CellId> ext_set(split.extended.begin(), split.extended.end());
        std::vector<bool> ext_masked;
        ext_masked.reserve(out.ext_nodes->size());
        for (const CellId& c : *out.ext_nodes) ext_masked.push_back(ext_set.count(c) > 0);
        for (int a : te_anchors)
            out.extended.push_back(build_graph_sample(completed, table, nf, out.ext_nodes,
                                                      out.ext_adj, a, w, norm, ext_masked));
    }
    return out;
}

GridDataset build_grid_samples(const STFrameSet& completed, const CellSplit& split,
                               const TemporalSplit& tsplit, const WindowSpec& wraw,
                               const Normalizer& norm) {
    const WindowSpec w = resolve_window(completed.tspec, wraw);
    check_windows(completed, tsplit, w);
    const int nf = norm.n_features();
    if (nf != kBaseFeatureCount)
        throw std::invalid_argument("grid samples: static features are not supported on the grid");
    const std::vector<double> table = feature_table(completed, norm, nullptr);
    const int rows = completed.grid.n_rows, cols = completed.grid.n_cols;

    std::vector<std::uint8_t> core_mask(static_cast<std::size_t>(rows) * cols, 0);
    std::vector<std::uint8_t> ext_mask(static_cast<std::size_t>(rows) * cols, 0);
    for (const CellId& c : split.core)
        core_mask[static_cast<std::size_t>(c.row) * cols + c.col] = 1;
    for (const CellId& c : split.extended)
        ext_mask[static_cast<std::size_t>(c.row) * cols + c.col] = 1;

    auto build_one = [&](int anchor, const std::vector<std::uint8_t>& cell_mask) {
        GridSample s;
        s.anchor = anchor;
        s.input_bins = w.input_bins;
        s.horizon_bins = w.horizon_bins;
        s.n_features = nf;
        s.rows = rows;
        s.cols = cols;
        s.input.resize(static_cast<std::size_t>(w.input_bins) * nf * rows * cols);
        for (int t = 0; t < w.input_bins; ++t) {
            for (int cell = 0; cell < rows * cols; ++cell) {
                const double* f =
                    table.data() + (static_cast<std::size_t>(cell) * completed.n_bins + anchor + t) * nf;
                for (int j = 0; j < nf; ++j)
                    s.input[((static_cast<std::size_t>(t) * nf + j) * rows * cols) + cell] = f[j];
            }
        }
        s.target.resize(static_cast<std::size_t>(w.horizon_bins) * 2 * rows * cols);
        s.mask.assign(s.target.size(), 0);
        for (int h = 0; h < w.horizon_bins; ++h) {
            const int bin = anchor + w.input_bins + h;
            for (int cell = 0; cell < rows * cols; ++cell) {
                const std::size_t e = completed.idx(cell, bin);
                const std::size_t base = (static_cast<std::size_t>(h) * 2) * rows * cols + cell;
                s.target[base] = norm.apply_target(completed.pm25[e], Pollutant::PM25);
                s.target[base + static_cast<std::size_t>(rows) * cols] =
                    norm.apply_target(completed.pm10[e], Pollutant::PM10);
                if (cell_mask[static_cast<std::size_t>(cell)] && completed.observed[e]) {
                    s.mask[base] = 1;
                    s.mask[base + static_cast<std::size_t>(rows) * cols] = 1;
                }
            }
        }
        return s;
    };

    GridDataset out;
    out.rows = rows;
    out.cols = cols;
    for (int a : train_anchors(completed.tspec, tsplit, w)) out.train.push_back(build_one(a, core_mask));
    for (int a : test_anchors(completed.tspec, tsplit, w)) out.test.push_back(build_one(a, core_mask));
    if (!split.extended.empty())
        for (int a : test_anchors(completed.tspec, tsplit, w))
            out.extended.push_back(build_one(a, ext_mask));
    if (out.train.empty()) throw std::invalid_argument("samples: no valid training anchors");
    return out;
}

}  // namespace airgrid
