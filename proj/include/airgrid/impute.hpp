#pragma once

#include <optional>
#include <vector>

#include "airgrid/domain.hpp"
#include "airgrid/frameset.hpp"
#include "airgrid/kdtree.hpp"

namespace airgrid {

struct IdwConfig {
    int k = 3;
    double power = 3.0;
    double coord_weight = 50.0;
    int lookback_days = 2;
    double zero_dist_eps = 1e-9;

    void validate() const;
};

// Per-feature shift/scale; zero-variance features get stdev 1 so they map
// to 0.
struct StandardizeStats {
    std::vector<double> mean;
    std::vector<double> stdev;

    void apply(double* point) const;
    void invert(double* point) const;
};

StandardizeStats standardize_features(const std::vector<double>& points, int dim);

// Candidate pool in its final (standardized, weighted) feature space.
struct IdwSet {
    int dim = 0;
    int vdim = 0;
    std::vector<double> coords;  // n x dim
    std::vector<double> values;  // n x vdim

    int size() const { return dim ? static_cast<int>(coords.size()) / dim : 0; }
};

// Exhaustive-scan oracle for the tree-accelerated query below.
std::vector<double> idw_brute(const IdwSet& set, const double* query, const IdwConfig& cfg);

class IdwIndex {
public:
    explicit IdwIndex(IdwSet set);
    const IdwSet& set() const { return set_; }
    // Weighted mean of the k nearest values with weights d^(-power); a
    // neighbor closer than zero_dist_eps is returned directly. k clamps to
    // the candidate count. Throws on an empty index.
    std::vector<double> query(const double* query, const IdwConfig& cfg) const;

private:
    IdwSet set_;
    KdTree tree_;
};

// Index over the observed entries strictly before query_bin and within the
// lookback window, with standardized features (lon, lat, minute of day) and
// coordinates overweighted by cfg.coord_weight. nullopt signals that fewer
// than cfg.k candidates exist and a fallback is needed.
struct BinIndex {
    StandardizeStats stats;
    double coord_weight = 1.0;
    IdwIndex index;

    std::vector<double> query_cell(const STFrameSet& frames, int cell, int slot,
                                   const IdwConfig& cfg) const;
};

std::optional<BinIndex> build_index(const STFrameSet& frames, TimeBin query_bin,
                                    const IdwConfig& cfg);

struct ImputeReport {
    std::vector<int> observed_per_bin;
    std::vector<int> imputed_per_bin;
};

// Fills every unobserved (cell, bin) entry in place, including cells that
// never saw a reading, and marks them imputed. Observed entries are left
// untouched. Fallback chain when a bin lacks k candidates: the cell's most
// recent observed value, else the global running mean over earlier bins,
// else 0. No filled value depends on its own bin or any later bin.
ImputeReport impute_frameset(STFrameSet& frames, const IdwConfig& cfg = {});

}  // namespace airgrid
