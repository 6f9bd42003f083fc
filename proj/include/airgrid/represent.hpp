#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "airgrid/domain.hpp"
#include "airgrid/frameset.hpp"
#include "airgrid/graph.hpp"

namespace airgrid {

// Feature vector layout per (cell, bin), before any optional static tail:
//   0 pm25   1 pm10   2 speed (0 when absent)   3 device_count
//   4..7  pm25 lagged 1, 2, 3, 7 days, same slot
//   8..11 pm10 lagged 1, 2, 3, 7 days, same slot
//   12 sin slot phase   13 cos slot phase
//   14 imputed flag     15 speed-absent flag
inline constexpr int kLagDays[4] = {1, 2, 3, 7};
inline constexpr int kBaseFeatureCount = 16;
inline constexpr int kFlagFeatures[2] = {14, 15};

// Fixed node degree for the enlarged unseen-coordinate evaluation graph.
inline constexpr int kExtendedGraphK = 5;

// Optional per-cell static feature vectors from a sidecar file with
// columns row, col, f1..fs. Cells missing from the file read as zeros.
struct StaticFeatures {
    int width = 0;
    std::unordered_map<int, std::vector<double>> by_cell;  // key: row * n_cols + col
};

StaticFeatures load_static_features(const std::string& path, const GridSpec& grid,
                                    char delimiter = ',');

// Per-feature shift/scale fitted on training bins only. Flag features keep
// identity stats. Target transforms reuse the pm25/pm10 feature stats.
struct Normalizer {
    std::vector<double> mean;
    std::vector<double> stdev;

    int n_features() const { return static_cast<int>(mean.size()); }
    void apply(double* vec) const;
    void invert(double* vec) const;
    double apply_target(double v, Pollutant p) const;
    double invert_target(double v, Pollutant p) const;
};

// Raw-unit feature vector; lags falling before the dataset substitute the
// earliest same-slot value.
std::vector<double> assemble_features(const STFrameSet& completed, int cell, int bin,
                                      const StaticFeatures* statics = nullptr);

Normalizer fit_normalizer(const STFrameSet& completed, const std::vector<CellId>& cells,
                          int bin_begin, int bin_end, const StaticFeatures* statics = nullptr);

// Input window / forecast horizon in bins; zeros resolve to the defaults of
// two days and one day.
struct WindowSpec {
    int input_bins = 0;
    int horizon_bins = 0;
};

WindowSpec resolve_window(const TemporalSpec& tspec, const WindowSpec& w);

// Anchors advance one day at a time; a sample covers input [a, a+W) and
// target [a+W, a+W+H).
std::vector<int> train_anchors(const TemporalSpec& tspec, const TemporalSplit& split,
                               const WindowSpec& w);
std::vector<int> test_anchors(const TemporalSpec& tspec, const TemporalSplit& split,
                              const WindowSpec& w);

struct SeriesSample {
    CellId cell;
    int cell_index = 0;  // row-major index in the frameset grid
    int anchor = 0;
    int input_bins = 0, horizon_bins = 0, n_features = 0;
    std::vector<double> input;        // [W x F], standardized
    std::vector<double> target;       // [H x 2], standardized
    std::vector<std::uint8_t> mask;   // [H x 2], true only where observed
};

struct GraphSample {
    std::shared_ptr<const Adjacency> adj;
    std::shared_ptr<const std::vector<CellId>> nodes;
    int anchor = 0;
    int input_bins = 0, horizon_bins = 0, n_features = 0, n_nodes = 0;
    std::vector<double> input;        // [W x N x F]
    std::vector<double> target;       // [N x H x 2]
    std::vector<std::uint8_t> mask;
};

struct GridSample {
    int anchor = 0;
    int input_bins = 0, horizon_bins = 0, n_features = 0, rows = 0, cols = 0;
    std::vector<double> input;        // [W x F x R x C]
    std::vector<double> target;       // [H x 2 x R x C]
    std::vector<std::uint8_t> mask;
};

struct SeriesDataset {
    std::vector<SeriesSample> train, test, extended;
};

struct GraphDataset {
    std::shared_ptr<std::vector<CellId>> core_nodes;
    std::shared_ptr<Adjacency> core_adj;
    std::shared_ptr<std::vector<CellId>> ext_nodes;  // core + extended
    std::shared_ptr<Adjacency> ext_adj;              // k = kExtendedGraphK
    std::vector<GraphSample> train, test, extended;
};

struct GridDataset {
    int rows = 0, cols = 0;
    std::vector<GridSample> train, test, extended;
};

SeriesDataset build_series_samples(const STFrameSet& completed, const CellSplit& split,
                                   const TemporalSplit& tsplit, const WindowSpec& w,
                                   const Normalizer& norm, const StaticFeatures* statics = nullptr);

GraphDataset build_graph_samples(const STFrameSet& completed, const CellSplit& split,
                                 const TemporalSplit& tsplit, const WindowSpec& w, int k_neighbors,
                                 const Normalizer& norm, const StaticFeatures* statics = nullptr);

GridDataset build_grid_samples(const STFrameSet& completed, const CellSplit& split,
                               const TemporalSplit& tsplit, const WindowSpec& w,
                               const Normalizer& norm);

}  // namespace airgrid
