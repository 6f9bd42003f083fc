#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "airgrid/frameset.hpp"
#include "airgrid/impute.hpp"
#include "airgrid/layers.hpp"
#include "airgrid/represent.hpp"

namespace airgrid {

enum class ModelKind { RNN, GRU, GCN_GRU, GAT_GRU, CONVGRU, RIDGE, IDW_BASE };

const char* to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);
bool is_neural(ModelKind k);
bool is_graph(ModelKind k);

struct ForecasterConfig {
    ModelKind kind = ModelKind::GRU;
    int layers = 3;        // recurrent stack depth; graph layers for GNN kinds
    int hidden = 64;
    int k_neighbors = 5;   // training-graph degree, graph kinds only
    int input_bins = 0;    // 0 resolves to two days
    int horizon_bins = 0;  // 0 resolves to one day
    bool use_static = false;
    std::uint64_t seed = 1;
    int conv_kernel = 3;       // CONVGRU gate kernel side
    double ridge_lambda = 1.0;

    void validate() const;
};

struct TrainOptions {
    int epochs = -1;  // negative: 50 for series kinds, 200 for graph/grid kinds
    int batch = -1;   // non-positive: 256 for series kinds, full batch for graph/grid
    AdamConfig adam;
    bool verbose = false;
};

struct TrainReport {
    std::vector<double> epoch_loss;
    int best_epoch = -1;
    double wall_seconds = 0.0;
    std::uint64_t seed = 0;
};

// Everything a model consumes, built once per (kind, window) combination.
// Baselines use the series sample lists to enumerate evaluation entries.
struct Dataset {
    ModelKind kind = ModelKind::GRU;
    WindowSpec window;
    Normalizer norm;
    int n_features = 0;
    int static_width = 0;
    SeriesDataset series;
    GraphDataset graph;
    GridDataset grid;
};

Dataset build_dataset(const ForecasterConfig& cfg, const STFrameSet& completed,
                      const CellSplit& split, const TemporalSplit& tsplit,
                      const StaticFeatures* statics = nullptr);

// The five tape-based forecasters behind one interface. Predictions are in
// standardized target units; the evaluation layer inverts them.
class NeuralForecaster {
public:
    NeuralForecaster(ForecasterConfig cfg, int n_features, int static_width);

    const ForecasterConfig& config() const { return cfg_; }
    ParamSet& params() { return params_; }
    const ParamSet& params() const { return params_; }

    // Replaces parameter values from a loaded checkpoint; every name and
    // shape must match the architecture implied by the config.
    void set_params(const ParamSet& loaded);

    std::vector<double> predict(const SeriesSample& s) const;  // [H x 2]
    std::vector<double> predict(const GraphSample& s) const;   // [N x H x 2]
    std::vector<double> predict(const GridSample& s) const;    // [H*2 x R x C]

    TrainReport fit(const Dataset& data, const TrainOptions& opts);

    // Graph forward with an explicit graph-layer count; the public config
    // path requires layers >= 1, 0 collapses the model to a per-node GRU.
    Tensor forward_graph(Tape& tape, const BoundParams& p, const GraphSample& s,
                         int n_graph_layers) const;
    Tensor forward_series_batch(Tape& tape, const BoundParams& p,
                                const std::vector<const SeriesSample*>& batch) const;
    Tensor forward_grid(Tape& tape, const BoundParams& p, const GridSample& s) const;

private:
    void build_params(int n_features, int static_width);
    GruWeights gru_weights(const BoundParams& p, const std::string& prefix) const;
    ConvGruWeights convgru_weights(const BoundParams& p, const std::string& prefix) const;

    TrainReport fit_series(const SeriesDataset& data, const TrainOptions& opts);
    TrainReport fit_graph(const std::vector<GraphSample>& train, const TrainOptions& opts);
    TrainReport fit_grid(const std::vector<GridSample>& train, const TrainOptions& opts);

    ForecasterConfig cfg_;
    int n_features_ = 0;
    int static_width_ = 0;
    ParamSet params_;
};

// Numerically stable regularized least squares (no explicit inverse). X is
// n x f row-major; an unregularized intercept column is appended, returned
// as the last weight. Throws when the system is singular and lambda is 0.
std::vector<double> ridge_fit(const std::vector<double>& x, int n, int f,
                              const std::vector<double>& y, double lambda);
double ridge_predict(const std::vector<double>& weights, const double* x, int f);

// Lagged pollutant values from raw observed data, falling back to the most
// recent earlier reading of the cell; NaN when the cell has no earlier
// reading at all.
class BaselineFeatureSource {
public:
    static constexpr int kWidth = 8;  // pm25 and pm10 at lags 1, 2, 3, 7 days

    explicit BaselineFeatureSource(const STFrameSet& raw);
    std::array<double, kWidth> features(int cell_index, int bin) const;

private:
    int bpd_ = 0;
    std::vector<std::vector<std::pair<int, std::array<double, 2>>>> per_cell_;
};

class RidgeBaseline {
public:
    explicit RidgeBaseline(double lambda = 1.0) : lambda_(lambda) {}

    void fit(const STFrameSet& raw, const CellSplit& split, const TemporalSplit& tsplit);
    // ug/m3 prediction for the target bin of a cell
    std::array<double, 2> predict(int cell_index, int bin) const;

    const std::vector<double>& weights(Pollutant p) const {
        return p == Pollutant::PM25 ? w25_ : w10_;
    }

private:
    double lambda_;
    std::shared_ptr<BaselineFeatureSource> source_;
    StandardizeStats stats_;
    std::vector<double> w25_, w10_;
};

class IdwBaseline {
public:
    explicit IdwBaseline(IdwConfig cfg = {}) : cfg_(cfg) {}

    void fit(const STFrameSet& raw, const CellSplit& split, const TemporalSplit& tsplit);
    std::array<double, 2> predict(int cell_index, int bin) const;

private:
    IdwConfig cfg_;
    std::shared_ptr<BaselineFeatureSource> source_;
    StandardizeStats stats_;
    std::shared_ptr<IdwIndex> index_;
};

// Uniform evaluation facade over the trained model kinds.
class AnyModel {
public:
    explicit AnyModel(std::shared_ptr<NeuralForecaster> nf) : neural_(std::move(nf)) {}
    AnyModel(std::shared_ptr<RidgeBaseline> rb) : ridge_(std::move(rb)) {}
    AnyModel(std::shared_ptr<IdwBaseline> ib) : idw_(std::move(ib)) {}

    const NeuralForecaster* neural() const { return neural_.get(); }

    // ug/m3 predictions aligned with the sample's target/mask layout
    std::vector<double> predict_units(const SeriesSample& s, const Normalizer& norm) const;
    std::vector<double> predict_units(const GraphSample& s, const Normalizer& norm) const;
    std::vector<double> predict_units(const GridSample& s, const Normalizer& norm) const;

private:
    std::shared_ptr<NeuralForecaster> neural_;
    std::shared_ptr<RidgeBaseline> ridge_;
    std::shared_ptr<IdwBaseline> idw_;
};

// Trains (or fits) the configured kind on an already-built dataset. The
// frameset doubles as the baselines' raw-observation source; their features
// read observed entries only, which imputation never touches.
AnyModel fit_model(const ForecasterConfig& cfg, const Dataset& data, const STFrameSet& completed,
                   const CellSplit& split, const TemporalSplit& tsplit, const TrainOptions& opts,
                   TrainReport* report = nullptr);

}  // namespace airgrid
