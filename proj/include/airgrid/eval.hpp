#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "airgrid/models.hpp"

namespace airgrid {

struct Metrics {
    double mse = 0.0;
    double rmse = 0.0;
    double mae = 0.0;
    double r2 = 0.0;
    std::int64_t n = 0;
};

// Computed over masked entries only, in original units. R^2 uses the total
// sum of squares about the masked-target mean. Throws on fewer than two
// masked entries or zero target variance.
Metrics metrics(const std::vector<double>& pred, const std::vector<double>& target,
                const std::vector<std::uint8_t>& mask);

// Percent of masked entries whose predicted and true categories agree.
// Negative predictions clamp to 0 before categorization.
double category_accuracy(const std::vector<double>& pred, const std::vector<double>& target,
                         const std::vector<std::uint8_t>& mask, Pollutant pollutant);

struct EvalReport {
    std::string model;
    Pollutant pollutant = Pollutant::PM25;
    std::string split;  // Test or Extended
    Metrics m;
    double category_acc = 0.0;  // percent
    std::int64_t samples = 0;
};

// One report per (pollutant, split); the Extended rows appear only when the
// dataset carries extended samples.
std::vector<EvalReport> evaluate(const AnyModel& model, const Dataset& data,
                                 const std::string& model_name);

void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports);
std::string render_report_table(const std::vector<EvalReport>& reports);

struct AblationRow {
    double value = 0.0;
    Pollutant pollutant = Pollutant::PM25;
    double r2 = 0.0;
    double rmse = 0.0;
};

// Trains one model per grid value with a shared seed and reports test-split
// regression quality. Axes: layers, seq_len, horizon (bins), k_neighbors
// (graph kinds only).
std::vector<AblationRow> ablate(const std::string& axis, const std::vector<double>& values,
                                const ForecasterConfig& base, const STFrameSet& completed,
                                const CellSplit& split, const TemporalSplit& tsplit,
                                const TrainOptions& opts, const StaticFeatures* statics = nullptr);

// Writes ablate_<axis>_<pollutant>.csv under dir.
std::vector<std::string> write_ablation_csv(const std::string& dir, const std::string& axis,
                                            const std::vector<AblationRow>& rows);

}  // namespace airgrid
