#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airgrid/domain.hpp"

namespace airgrid {

// Dense per-(cell, bin) aggregates. Absent means are stored as NaN; the
// observed flag marks entries that received at least one reading, the
// imputed flag entries later filled by the imputer.
struct STFrameSet {
    GridSpec grid;
    TemporalSpec tspec;
    int n_bins = 0;

    std::vector<double> pm25;
    std::vector<double> pm10;
    std::vector<double> speed;
    std::vector<std::uint32_t> device_count;
    std::vector<std::uint8_t> observed;
    std::vector<std::uint8_t> imputed;

    int n_cells() const { return grid.n_cells(); }
    int n_days() const { return n_bins / tspec.bins_per_day(); }
    std::size_t idx(int cell, int bin) const {
        return static_cast<std::size_t>(cell) * n_bins + bin;
    }
    int cell_index(CellId c) const { return c.row * grid.n_cols + c.col; }
    CellId cell_id(int index) const { return CellId{index / grid.n_cols, index % grid.n_cols}; }

    void allocate();  // sizes all arrays to n_cells * n_bins

    void save(const std::string& path) const;
    static STFrameSet load(const std::string& path);
};

// Cells with enough coverage to train on (core) vs the sparse remainder
// kept for the unseen-coordinate evaluation. Never-observed cells belong to
// neither set.
struct CellSplit {
    std::vector<CellId> core;
    std::vector<CellId> extended;
};

// Contiguous bin ranges, split at a day boundary; half-open intervals.
struct TemporalSplit {
    int train_begin = 0;
    int train_end = 0;
    int test_begin = 0;
    int test_end = 0;
};

}  // namespace airgrid
