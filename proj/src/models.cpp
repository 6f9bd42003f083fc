#include "airgrid/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace airgrid {

const char* to_string(ModelKind k) {
    switch (k) {
        case ModelKind::RNN: return "RNN";
        case ModelKind::GRU: return "GRU";
        case ModelKind::GCN_GRU: return "GCN_GRU";
        case ModelKind::GAT_GRU: return "GAT_GRU";
        case ModelKind::CONVGRU: return "CONVGRU";
        case ModelKind::RIDGE: return "RIDGE";
        case ModelKind::IDW_BASE: return "IDW_BASE";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& s) {
    for (ModelKind k : {ModelKind::RNN, ModelKind::GRU, ModelKind::GCN_GRU, ModelKind::GAT_GRU,
                        ModelKind::CONVGRU, ModelKind::RIDGE, ModelKind::IDW_BASE}) {
        if (s == to_string(k)) return k;
    }
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

bool is_neural(ModelKind k) { return k != ModelKind::RIDGE && k != ModelKind::IDW_BASE; }

bool is_graph(ModelKind k) { return k == ModelKind::GCN_GRU || k == ModelKind::GAT_GRU; }

void ForecasterConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("ForecasterConfig: layers must be at least 1");
    if (hidden < 1) throw std::invalid_argument("ForecasterConfig: hidden must be at least 1");
    if (is_graph(kind) && k_neighbors < 1)
        throw std::invalid_argument("ForecasterConfig: k_neighbors must be at least 1");
    if (kind == ModelKind::CONVGRU && (conv_kernel < 1 || conv_kernel % 2 == 0))
        throw std::invalid_argument("ForecasterConfig: conv_kernel must be odd");
    if (ridge_lambda < 0.0) throw std::invalid_argument("ForecasterConfig: ridge_lambda must be >= 0");
    if (input_bins < 0 || horizon_bins < 0)
        throw std::invalid_argument("ForecasterConfig: window sizes must be non-negative");
}

Dataset build_dataset(const ForecasterConfig& cfg, const STFrameSet& completed,
                      const CellSplit& split, const TemporalSplit& tsplit,
                      const StaticFeatures* statics) {
    const StaticFeatures* st = cfg.use_static ? statics : nullptr;
    if (cfg.use_static && (!statics || statics->width == 0))
        throw std::invalid_argument("build_dataset: use_static set but no static features loaded");
    if (cfg.use_static && cfg.kind == ModelKind::CONVGRU)
        throw std::invalid_argument("build_dataset: static features are not supported on the grid");

    Dataset d;
    d.kind = cfg.kind;
    d.window = resolve_window(completed.tspec, {cfg.input_bins, cfg.horizon_bins});
    d.norm = fit_normalizer(completed, split.core, tsplit.train_begin, tsplit.train_end, st);
    d.static_width = st ? st->width : 0;
    d.n_features = kBaseFeatureCount + d.static_width;

    switch (cfg.kind) {
        case ModelKind::RNN:
        case ModelKind::GRU:
        case ModelKind::RIDGE:
        case ModelKind::IDW_BASE:
            d.series = build_series_samples(completed, split, tsplit, d.window, d.norm, st);
            break;
        case ModelKind::GCN_GRU:
        case ModelKind::GAT_GRU:
            d.graph = build_graph_samples(completed, split, tsplit, d.window, cfg.k_neighbors,
                                          d.norm, st);
            break;
        case ModelKind::CONVGRU:
            d.grid = build_grid_samples(completed, split, tsplit, d.window, d.norm);
            break;
    }
    return d;
}

NeuralForecaster::NeuralForecaster(ForecasterConfig cfg, int n_features, int static_width)
    : cfg_(cfg), n_features_(n_features), static_width_(static_width) {
    if (!is_neural(cfg_.kind))
        throw std::invalid_argument("NeuralForecaster: baseline kinds have no tape model");
    if (cfg_.input_bins <= 0 || cfg_.horizon_bins <= 0)
        throw std::invalid_argument("NeuralForecaster: window sizes must be resolved");
    if (cfg_.use_static && static_width_ <= 0)
        throw std::invalid_argument("NeuralForecaster: use_static set but dataset has no statics");
    build_params(n_features, static_width);
    Rng rng(cfg_.seed);
    params_.init(rng);
}

void NeuralForecaster::build_params(int n_features, int static_width) {
    const int hid = cfg_.hidden;
    const int h2 = cfg_.horizon_bins * 2;
    const int base = kBaseFeatureCount;
    const int stat = cfg_.use_static ? static_width : 0;
    (void)n_features;

    auto add_gru = [&](const std::string& prefix, int in) {
        params_.add(prefix + "W_z", {in, hid});
        params_.add(prefix + "U_z", {hid, hid});
        params_.add(prefix + "b_z", {hid});
        params_.add(prefix + "W_r", {in, hid});
        params_.add(prefix + "U_r", {hid, hid});
        params_.add(prefix + "b_r", {hid});
        params_.add(prefix + "W_h", {in, hid});
        params_.add(prefix + "U_h", {hid, hid});
        params_.add(prefix + "b_h", {hid});
    };

    switch (cfg_.kind) {
        case ModelKind::RNN: {
            int in = base;
            for (int l = 0; l < cfg_.layers; ++l) {
                const std::string prefix = "layer" + std::to_string(l) + ".";
                params_.add(prefix + "W_xh", {in, hid});
                params_.add(prefix + "W_hh", {hid, hid});
                params_.add(prefix + "b_h", {hid});
                in = hid;
            }
            break;
        }
        case ModelKind::GRU: {
            int in = base;
            for (int l = 0; l < cfg_.layers; ++l) {
                add_gru("layer" + std::to_string(l) + ".", in);
                in = hid;
            }
            break;
        }
        case ModelKind::GCN_GRU:
        case ModelKind::GAT_GRU: {
            int in = base;
            const bool gat = cfg_.kind == ModelKind::GAT_GRU;
            for (int l = 0; l < cfg_.layers; ++l) {
                const std::string prefix = (gat ? "gat" : "gcn") + std::to_string(l) + ".";
                params_.add(prefix + "W", {in, hid});
                if (gat) params_.add(prefix + "a", {2 * hid, 1});
                in = hid;
            }
            add_gru("gru.", in);
            break;
        }
        case ModelKind::CONVGRU: {
            int in = base;
            const int k = cfg_.conv_kernel;
            for (int l = 0; l < cfg_.layers; ++l) {
                const std::string prefix = "layer" + std::to_string(l) + ".";
                params_.add(prefix + "Conv_z.W", {hid, in, k, k});
                params_.add(prefix + "Conv_z.b", {hid});
                params_.add(prefix + "Conv_hz.W", {hid, hid, k, k});
                params_.add(prefix + "Conv_r.W", {hid, in, k, k});
                params_.add(prefix + "Conv_r.b", {hid});
                params_.add(prefix + "Conv_hr.W", {hid, hid, k, k});
                params_.add(prefix + "Conv_h.W", {hid, in, k, k});
                params_.add(prefix + "Conv_h.b", {hid});
                params_.add(prefix + "Conv_hh.W", {hid, hid, k, k});
                in = hid;
            }
            params_.add("head.Conv.W", {h2, hid, 1, 1});
            params_.add("head.Conv.b", {h2});
            break;
        }
        default:
            break;
    }
    if (cfg_.kind != ModelKind::CONVGRU) {
        params_.add("head.W", {hid + stat, h2});
        params_.add("head.b", {h2});
    }
}

void NeuralForecaster::set_params(const ParamSet& loaded) {
    if (loaded.count() != params_.count())
        throw std::invalid_argument("set_params: checkpoint has a different parameter count");
    for (std::size_t i = 0; i < params_.count(); ++i) {
        Param& mine = params_.param(i);
        const Param& theirs = loaded.at(mine.name);
        if (theirs.shape != mine.shape)
            throw std::invalid_argument("set_params: shape mismatch for " + mine.name);
        mine.value = theirs.value;
    }
}

GruWeights NeuralForecaster::gru_weights(const BoundParams& p, const std::string& prefix) const {
    return GruWeights{p(prefix + "W_z"), p(prefix + "U_z"), p(prefix + "b_z"),
                      p(prefix + "W_r"), p(prefix + "U_r"), p(prefix + "b_r"),
                      p(prefix + "W_h"), p(prefix + "U_h"), p(prefix + "b_h")};
}

ConvGruWeights NeuralForecaster::convgru_weights(const BoundParams& p,
                                                 const std::string& prefix) const {
    return ConvGruWeights{p(prefix + "Conv_z.W"), p(prefix + "Conv_z.b"), p(prefix + "Conv_hz.W"),
                          p(prefix + "Conv_r.W"), p(prefix + "Conv_r.b"), p(prefix + "Conv_hr.W"),
                          p(prefix + "Conv_h.W"), p(prefix + "Conv_h.b"), p(prefix + "Conv_hh.W")};
}

Tensor NeuralForecaster::forward_series_batch(Tape& tape, const BoundParams& p,
                                              const std::vector<const SeriesSample*>& batch) const {
    const int b = static_cast<int>(batch.size());
    if (b == 0) throw std::invalid_argument("forward_series: empty batch");
    const int w = cfg_.input_bins;
    const int base = kBaseFeatureCount;
    const int stat = cfg_.use_static ? static_width_ : 0;
    for (const SeriesSample* s : batch) {
        if (s->input_bins != w || s->horizon_bins != cfg_.horizon_bins ||
            s->n_features != base + static_width_) {
            std::ostringstream os;
            os << "forward_series: sample layout (W=" << s->input_bins << ", H=" << s->horizon_bins
               << ", F=" << s->n_features << ") does not match model (W=" << w
               << ", H=" << cfg_.horizon_bins << ", F=" << base + static_width_ << ")";
            throw std::invalid_argument(os.str());
        }
    }
    const int nf = base + static_width_;

    std::vector<Tensor> hidden(static_cast<std::size_t>(cfg_.layers));
    for (auto& h : hidden) h = tape.zeros({b, cfg_.hidden});

    std::vector<double> xt(static_cast<std::size_t>(b) * base);
    for (int t = 0; t < w; ++t) {
        for (int i = 0; i < b; ++i)
            std::copy_n(batch[static_cast<std::size_t>(i)]->input.begin() + static_cast<std::size_t>(t) * nf,
                        base, xt.begin() + static_cast<std::size_t>(i) * base);
        Tensor x = tape.leaf({b, base}, xt);
        for (int l = 0; l < cfg_.layers; ++l) {
            const std::string prefix = "layer" + std::to_string(l) + ".";
            if (cfg_.kind == ModelKind::RNN) {
                hidden[static_cast<std::size_t>(l)] =
                    rnn_step(tape, x, hidden[static_cast<std::size_t>(l)], p(prefix + "W_xh"),
                             p(prefix + "W_hh"), p(prefix + "b_h"));
            } else {
                hidden[static_cast<std::size_t>(l)] =
                    gru_step(tape, x, hidden[static_cast<std::size_t>(l)], gru_weights(p, prefix));
            }
            x = hidden[static_cast<std::size_t>(l)];
        }
    }

    Tensor final_h = hidden.back();
    if (stat > 0) {
        std::vector<double> sv(static_cast<std::size_t>(b) * stat);
        for (int i = 0; i < b; ++i)
            std::copy_n(batch[static_cast<std::size_t>(i)]->input.begin() + base, stat,
                        sv.begin() + static_cast<std::size_t>(i) * stat);
        final_h = tape.concat_cols(final_h, tape.leaf({b, stat}, sv));
    }
    return tape.add_bias(tape.matmul(final_h, p("head.W")), p("head.b"));
}

Tensor NeuralForecaster::forward_graph(Tape& tape, const BoundParams& p, const GraphSample& s,
                                       int n_graph_layers) const {
    const int n = s.n_nodes;
    if (!s.adj || s.adj->n != n)
        throw std::invalid_argument("forward_graph: adjacency does not match node count");
    if (s.input_bins != cfg_.input_bins || s.horizon_bins != cfg_.horizon_bins ||
        s.n_features != kBaseFeatureCount + static_width_)
        throw std::invalid_argument("forward_graph: sample layout does not match model config");
    const int base = kBaseFeatureCount;
    const int stat = cfg_.use_static ? static_width_ : 0;
    const int nf = s.n_features;
    const bool gat = cfg_.kind == ModelKind::GAT_GRU;

    Tensor a_norm;
    EdgeList edges;
    if (gat)
        edges = edge_list_with_self(*s.adj);
    else
        a_norm = tape.leaf({n, n}, s.adj->norm);

    Tensor h = tape.zeros({n, cfg_.hidden});
    std::vector<double> xt(static_cast<std::size_t>(n) * base);
    for (int t = 0; t < s.input_bins; ++t) {
        for (int i = 0; i < n; ++i)
            std::copy_n(s.input.begin() + (static_cast<std::size_t>(t) * n + i) * nf, base,
                        xt.begin() + static_cast<std::size_t>(i) * base);
        Tensor x = tape.leaf({n, base}, xt);
        for (int l = 0; l < n_graph_layers; ++l) {
            const std::string prefix = (gat ? "gat" : "gcn") + std::to_string(l) + ".";
            x = gat ? gat_layer(tape, x, edges, p(prefix + "W"), p(prefix + "a"))
                    : gcn_layer(tape, x, a_norm, p(prefix + "W"));
        }
        h = gru_step(tape, x, h, gru_weights(p, "gru."));
    }

    if (stat > 0) {
        std::vector<double> sv(static_cast<std::size_t>(n) * stat);
        for (int i = 0; i < n; ++i)
            std::copy_n(s.input.begin() + static_cast<std::size_t>(i) * nf + base, stat,
                        sv.begin() + static_cast<std::size_t>(i) * stat);
        h = tape.concat_cols(h, tape.leaf({n, stat}, sv));
    }
    return tape.add_bias(tape.matmul(h, p("head.W")), p("head.b"));
}

Tensor NeuralForecaster::forward_grid(Tape& tape, const BoundParams& p, const GridSample& s) const {
    if (s.input_bins != cfg_.input_bins || s.horizon_bins != cfg_.horizon_bins ||
        s.n_features != kBaseFeatureCount)
        throw std::invalid_argument("forward_grid: sample layout does not match model config");
    const int rows = s.rows, cols = s.cols, nf = s.n_features;

    std::vector<Tensor> hidden(static_cast<std::size_t>(cfg_.layers));
    for (auto& h : hidden) h = tape.zeros({cfg_.hidden, rows, cols});

    const std::size_t plane = static_cast<std::size_t>(rows) * cols;
    for (int t = 0; t < s.input_bins; ++t) {
        std::vector<double> xt(s.input.begin() + static_cast<std::size_t>(t) * nf * plane,
                               s.input.begin() + (static_cast<std::size_t>(t) + 1) * nf * plane);
        Tensor x = tape.leaf({nf, rows, cols}, std::move(xt));
        for (int l = 0; l < cfg_.layers; ++l) {
            const std::string prefix = "layer" + std::to_string(l) + ".";
            hidden[static_cast<std::size_t>(l)] =
                convgru_step(tape, x, hidden[static_cast<std::size_t>(l)], convgru_weights(p, prefix));
            x = hidden[static_cast<std::size_t>(l)];
        }
    }
    return tape.conv2d(hidden.back(), p("head.Conv.W"), p("head.Conv.b"));
}

std::vector<double> NeuralForecaster::predict(const SeriesSample& s) const {
    Tape tape;
    const BoundParams p = params_.bind_named(tape, false);
    return forward_series_batch(tape, p, {&s}).values();
}

std::vector<double> NeuralForecaster::predict(const GraphSample& s) const {
    Tape tape;
    const BoundParams p = params_.bind_named(tape, false);
    return forward_graph(tape, p, s, cfg_.layers).values();
}

std::vector<double> NeuralForecaster::predict(const GridSample& s) const {
    Tape tape;
    const BoundParams p = params_.bind_named(tape, false);
    return forward_grid(tape, p, s).values();
}

namespace {

std::vector<double> mask_to_double(const std::vector<std::uint8_t>& mask) {
    std::vector<double> out(mask.size());
    for (std::size_t i = 0; i < mask.size(); ++i) out[i] = mask[i] ? 1.0 : 0.0;
    return out;
}

std::int64_t mask_count(const std::vector<std::uint8_t>& mask) {
    std::int64_t n = 0;
    for (auto m : mask) n += m ? 1 : 0;
    return n;
}

void check_finite_loss(double v, int epoch) {
    if (!std::isfinite(v)) {
        throw std::runtime_error("training diverged: non-finite loss at epoch " +
                                 std::to_string(epoch) + "; lower the learning rate");
    }
}

}  // namespace

TrainReport NeuralForecaster::fit(const Dataset& data, const TrainOptions& opts) {
    if (data.kind != cfg_.kind)
        throw std::invalid_argument("fit: dataset was built for a different model kind");
    switch (cfg_.kind) {
        case ModelKind::RNN:
        case ModelKind::GRU:
            return fit_series(data.series, opts);
        case ModelKind::GCN_GRU:
        case ModelKind::GAT_GRU:
            return fit_graph(data.graph.train, opts);
        case ModelKind::CONVGRU:
            return fit_grid(data.grid.train, opts);
        default:
            throw std::invalid_argument("fit: baseline kinds use their own fit path");
    }
}

TrainReport NeuralForecaster::fit_series(const SeriesDataset& data, const TrainOptions& opts) {
    const auto& train = data.train;
    if (train.empty()) throw std::invalid_argument("fit: no training samples");
    const int epochs = opts.epochs >= 0 ? opts.epochs : 50;
    const int batch_size = opts.batch > 0 ? opts.batch : 256;

    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    report.seed = cfg_.seed;
    Adam adam(params_, opts.adam);
    Rng order_rng(cfg_.seed + 0x9E3779B97F4A7C15ULL);
    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    ParamSet best = params_;
    double best_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < epochs; ++epoch) {
        order_rng.shuffle(order);
        double sse_sum = 0.0;
        std::int64_t count_sum = 0;
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
            std::vector<const SeriesSample*> batch;
            batch.reserve(end - start);
            for (std::size_t i = start; i < end; ++i)
                batch.push_back(&train[static_cast<std::size_t>(order[i])]);

            const int b = static_cast<int>(batch.size());
            const int h2 = cfg_.horizon_bins * 2;
            std::vector<double> target(static_cast<std::size_t>(b) * h2);
            std::vector<double> mask(static_cast<std::size_t>(b) * h2, 0.0);
            std::int64_t count = 0;
            for (int i = 0; i < b; ++i) {
                std::copy(batch[static_cast<std::size_t>(i)]->target.begin(),
                          batch[static_cast<std::size_t>(i)]->target.end(),
                          target.begin() + static_cast<std::size_t>(i) * h2);
                for (int j = 0; j < h2; ++j) {
                    if (batch[static_cast<std::size_t>(i)]->mask[static_cast<std::size_t>(j)]) {
                        mask[static_cast<std::size_t>(i) * h2 + j] = 1.0;
                        ++count;
                    }
                }
            }
            if (count == 0) continue;

            Tape tape;
            const BoundParams p = params_.bind_named(tape, true);
            Tensor pred = forward_series_batch(tape, p, batch);
            Tensor loss = tape.masked_mse(pred, tape.leaf({b, h2}, std::move(target)),
                                          tape.leaf({b, h2}, std::move(mask)));
            const double lval = loss.values()[0];
            check_finite_loss(lval, epoch);
            sse_sum += lval * static_cast<double>(count);
            count_sum += count;

            tape.backward(loss);
            auto grads = params_.zero_grads();
            params_.accumulate_grads(tape, p.vars, grads);
            adam.step(params_, grads);
        }
        const double epoch_loss = count_sum ? sse_sum / static_cast<double>(count_sum) : 0.0;
        report.epoch_loss.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best = params_;
            report.best_epoch = epoch;
        }
    }
    if (report.best_epoch >= 0) params_ = best;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}

namespace {
template <typename Sample, typename Forward>
TrainReport fit_accumulated(ParamSet& params, const std::vector<Sample>& train,
                            const TrainOptions& opts, std::uint64_t seed, Forward forward) {
    if (train.empty()) throw std::invalid_argument("fit: no training samples");
    const int epochs = opts.epochs >= 0 ? opts.epochs : 200;
    const std::size_t batch_size =
        opts.batch > 0 ? static_cast<std::size_t>(opts.batch) : train.size();

    const auto t0 = std::chrono::steady_clock::now();
    TrainReport report;
    report.seed = seed;
    Adam adam(params, opts.adam);
    Rng order_rng(seed + 0x9E3779B97F4A7C15ULL);
    std::vector<int> order(train.size());
    std::iota(order.begin(), order.end(), 0);

    ParamSet best = params;
    double best_loss = std::numeric_limits<double>::infinity();

    for (int epoch = 0; epoch < epochs; ++epoch) {
        order_rng.shuffle(order);
        double sse_sum = 0.0;
        std::int64_t count_sum = 0;
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t end = std::min(order.size(), start + batch_size);
            std::int64_t total_count = 0;
            for (std::size_t i = start; i < end; ++i)
                total_count += mask_count(train[static_cast<std::size_t>(order[i])].mask);
            if (total_count == 0) continue;

            auto grads = params.zero_grads();
            for (std::size_t i = start; i < end; ++i) {
                const Sample& s = train[static_cast<std::size_t>(order[i])];
                Tape tape;
                const BoundParams p = params.bind_named(tape, true);
                Tensor pred = forward(tape, p, s);
                Tensor sse = tape.masked_sse(pred, tape.leaf(pred.shape(), s.target),
                                             tape.leaf(pred.shape(), mask_to_double(s.mask)));
                Tensor loss = tape.scale(sse, 1.0 / static_cast<double>(total_count));
                check_finite_loss(sse.values()[0], epoch);
                sse_sum += sse.values()[0];
                tape.backward(loss);
                params.accumulate_grads(tape, p.vars, grads);
            }
            count_sum += total_count;
            adam.step(params, grads);
        }
        const double epoch_loss = count_sum ? sse_sum / static_cast<double>(count_sum) : 0.0;
        report.epoch_loss.push_back(epoch_loss);
        if (epoch_loss < best_loss) {
            best_loss = epoch_loss;
            best = params;
            report.best_epoch = epoch;
        }
    }
    if (report.best_epoch >= 0) params = best;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return report;
}
}  // namespace

TrainReport NeuralForecaster::fit_graph(const std::vector<GraphSample>& train,
                                        const TrainOptions& opts) {
    return fit_accumulated(params_, train, opts, cfg_.seed,
                           [this](Tape& tape, const BoundParams& p, const GraphSample& s) {
                               return forward_graph(tape, p, s, cfg_.layers);
                           });
}

TrainReport NeuralForecaster::fit_grid(const std::vector<GridSample>& train,
                                       const TrainOptions& opts) {
    return fit_accumulated(params_, train, opts, cfg_.seed,
                           [this](Tape& tape, const BoundParams& p, const GridSample& s) {
                               return forward_grid(tape, p, s);
                           });
}

std::vector<double> ridge_fit(const std::vector<double>& x, int n, int f,
                              const std::vector<double>& y, double lambda) {
    if (n < 1 || f < 0 || x.size() != static_cast<std::size_t>(n) * f ||
        y.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("ridge_fit: inconsistent dimensions");
    if (lambda < 0.0) throw std::invalid_argument("ridge_fit: lambda must be non-negative");
    const int m = f + 1;  // intercept appended, not regularized

    // normal equations A w = b with A = X^T X + lambda I (intercept free)
    std::vector<double> a(static_cast<std::size_t>(m) * m, 0.0);
    std::vector<double> b(static_cast<std::size_t>(m), 0.0);
    std::vector<double> row(static_cast<std::size_t>(m), 1.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < f; ++j) row[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(i) * f + j];
        row[static_cast<std::size_t>(f)] = 1.0;
        for (int j = 0; j < m; ++j) {
            b[static_cast<std::size_t>(j)] += row[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(i)];
            for (int k = j; k < m; ++k)
                a[static_cast<std::size_t>(j) * m + k] +=
                    row[static_cast<std::size_t>(j)] * row[static_cast<std::size_t>(k)];
        }
    }
    for (int j = 0; j < f; ++j) a[static_cast<std::size_t>(j) * m + j] += lambda;
    for (int j = 0; j < m; ++j)
        for (int k = 0; k < j; ++k)
            a[static_cast<std::size_t>(j) * m + k] = a[static_cast<std::size_t>(k) * m + j];

    // Cholesky; a zero pivot means the unregularized system is singular
    for (int j = 0; j < m; ++j) {
        double d = a[static_cast<std::size_t>(j) * m + j];
        for (int k = 0; k < j; ++k) d -= a[static_cast<std::size_t>(j) * m + k] * a[static_cast<std::size_t>(j) * m + k];
        if (d <= 1e-12 * (1.0 + std::abs(a[static_cast<std::size_t>(j) * m + j]))) {
            throw std::runtime_error(
                "ridge_fit: singular system; add regularization (lambda > 0)");
        }
        const double piv = std::sqrt(d);
        a[static_cast<std::size_t>(j) * m + j] = piv;
        for (int i = j + 1; i < m; ++i) {
            double s = a[static_cast<std::size_t>(i) * m + j];
            for (int k = 0; k < j; ++k)
                s -= a[static_cast<std::size_t>(i) * m + k] * a[static_cast<std::size_t>(j) * m + k];
            a[static_cast<std::size_t>(i) * m + j] = s / piv;
        }
    }
    // forward then backward substitution
    std::vector<double> w(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        double s = b[static_cast<std::size_t>(i)];
        for (int k = 0; k < i; ++k) s -= a[static_cast<std::size_t>(i) * m + k] * w[static_cast<std::size_t>(k)];
        w[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * m + i];
    }
    for (int i = m - 1; i >= 0; --i) {
        double s = w[static_cast<std::size_t>(i)];
        for (int k = i + 1; k < m; ++k) s -= a[static_cast<std::size_t>(k) * m + i] * w[static_cast<std::size_t>(k)];
        w[static_cast<std::size_t>(i)] = s / a[static_cast<std::size_t>(i) * m + i];
    }
    return w;
}

double ridge_predict(const std::vector<double>& weights, const double* x, int f) {
    if (weights.size() != static_cast<std::size_t>(f) + 1)
        throw std::invalid_argument("ridge_predict: weight count mismatch");
    double acc = weights[static_cast<std::size_t>(f)];
    for (int j = 0; j < f; ++j) acc += weights[static_cast<std::size_t>(j)] * x[j];
    return acc;
}

BaselineFeatureSource::BaselineFeatureSource(const STFrameSet& raw)
    : bpd_(raw.tspec.bins_per_day()) {
    per_cell_.resize(static_cast<std::size_t>(raw.n_cells()));
    for (int c = 0; c < raw.n_cells(); ++c) {
        for (int b = 0; b < raw.n_bins; ++b) {
            const std::size_t e = raw.idx(c, b);
            if (raw.observed[e])
                per_cell_[static_cast<std::size_t>(c)].push_back(
                    {b, {raw.pm25[e], raw.pm10[e]}});
        }
    }
}

std::array<double, BaselineFeatureSource::kWidth> BaselineFeatureSource::features(int cell_index,
                                                                                  int bin) const {
    std::array<double, kWidth> out;
    out.fill(std::nan(""));
    const auto& obs = per_cell_[static_cast<std::size_t>(cell_index)];
    for (int l = 0; l < 4; ++l) {
        const int lag_bin = bin - kLagDays[l] * bpd_;
        if (lag_bin < 0 && obs.empty()) continue;
        // the reading at the lagged bin, or the last reading before it
        auto it = std::upper_bound(obs.begin(), obs.end(), lag_bin,
                                   [](int v, const auto& e) { return v < e.first; });
        if (it == obs.begin()) continue;  // nothing observed that early
        --it;
        out[static_cast<std::size_t>(l)] = it->second[0];
        out[static_cast<std::size_t>(4 + l)] = it->second[1];
    }
    return out;
}

namespace {

// Column stats ignoring NaN; NaN entries standardize to 0 (the mean).
StandardizeStats nan_aware_stats(const std::vector<double>& rows, int dim) {
    StandardizeStats stats;
    stats.mean.assign(static_cast<std::size_t>(dim), 0.0);
    stats.stdev.assign(static_cast<std::size_t>(dim), 1.0);
    const std::size_t n = rows.size() / static_cast<std::size_t>(dim);
    for (int j = 0; j < dim; ++j) {
        double sum = 0.0, sq = 0.0;
        std::int64_t cnt = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = rows[i * dim + j];
            if (std::isnan(v)) continue;
            sum += v;
            sq += v * v;
            ++cnt;
        }
        if (cnt == 0) continue;
        const double m = sum / cnt;
        double var = sq / cnt - m * m;
        if (var < 0.0) var = 0.0;
        stats.mean[static_cast<std::size_t>(j)] = m;
        stats.stdev[static_cast<std::size_t>(j)] = var > 0.0 ? std::sqrt(var) : 1.0;
    }
    return stats;
}

void standardize_row(const StandardizeStats& stats, double* row, int dim) {
    for (int j = 0; j < dim; ++j) {
        if (std::isnan(row[j]))
            row[j] = 0.0;
        else
            row[j] = (row[j] - stats.mean[static_cast<std::size_t>(j)]) /
                     stats.stdev[static_cast<std::size_t>(j)];
    }
}

struct BaselineRows {
    std::vector<double> features;  // n x 8, raw with NaN
    std::vector<double> y25, y10;
};

BaselineRows collect_train_rows(const STFrameSet& raw, const BaselineFeatureSource& source,
                                const CellSplit& split, const TemporalSplit& tsplit) {
    BaselineRows rows;
    for (const CellId& c : split.core) {
        const int cell = raw.cell_index(c);
        for (int b = tsplit.train_begin; b < tsplit.train_end; ++b) {
            const std::size_t e = raw.idx(cell, b);
            if (!raw.observed[e]) continue;
            const auto f = source.features(cell, b);
            rows.features.insert(rows.features.end(), f.begin(), f.end());
            rows.y25.push_back(raw.pm25[e]);
            rows.y10.push_back(raw.pm10[e]);
        }
    }
    if (rows.y25.empty()) throw std::runtime_error("baseline fit: no observed training entries");
    return rows;
}

}  // namespace

void RidgeBaseline::fit(const STFrameSet& raw, const CellSplit& split, const TemporalSplit& tsplit) {
    source_ = std::make_shared<BaselineFeatureSource>(raw);
    BaselineRows rows = collect_train_rows(raw, *source_, split, tsplit);
    const int f = BaselineFeatureSource::kWidth;
    const int n = static_cast<int>(rows.y25.size());
    stats_ = nan_aware_stats(rows.features, f);
    for (int i = 0; i < n; ++i) standardize_row(stats_, rows.features.data() + static_cast<std::size_t>(i) * f, f);
    w25_ = ridge_fit(rows.features, n, f, rows.y25, lambda_);
    w10_ = ridge_fit(rows.features, n, f, rows.y10, lambda_);
}

std::array<double, 2> RidgeBaseline::predict(int cell_index, int bin) const {
    if (!source_) throw std::logic_error("RidgeBaseline: fit before predict");
    auto f = source_->features(cell_index, bin);
    standardize_row(stats_, f.data(), BaselineFeatureSource::kWidth);
    return {ridge_predict(w25_, f.data(), BaselineFeatureSource::kWidth),
            ridge_predict(w10_, f.data(), BaselineFeatureSource::kWidth)};
}

void IdwBaseline::fit(const STFrameSet& raw, const CellSplit& split, const TemporalSplit& tsplit) {
    source_ = std::make_shared<BaselineFeatureSource>(raw);
    BaselineRows rows = collect_train_rows(raw, *source_, split, tsplit);
    const int f = BaselineFeatureSource::kWidth;
    const int n = static_cast<int>(rows.y25.size());
    stats_ = nan_aware_stats(rows.features, f);
    IdwSet set;
    set.dim = f;
    set.vdim = 2;
    set.coords = std::move(rows.features);
    for (int i = 0; i < n; ++i) standardize_row(stats_, set.coords.data() + static_cast<std::size_t>(i) * f, f);
    set.values.resize(static_cast<std::size_t>(n) * 2);
    for (int i = 0; i < n; ++i) {
        set.values[static_cast<std::size_t>(i) * 2] = rows.y25[static_cast<std::size_t>(i)];
        set.values[static_cast<std::size_t>(i) * 2 + 1] = rows.y10[static_cast<std::size_t>(i)];
    }
    index_ = std::make_shared<IdwIndex>(std::move(set));
}

std::array<double, 2> IdwBaseline::predict(int cell_index, int bin) const {
    if (!index_) throw std::logic_error("IdwBaseline: fit before predict");
    auto f = source_->features(cell_index, bin);
    standardize_row(stats_, f.data(), BaselineFeatureSource::kWidth);
    const auto v = index_->query(f.data(), cfg_);
    return {v[0], v[1]};
}

AnyModel fit_model(const ForecasterConfig& cfg, const Dataset& data, const STFrameSet& completed,
                   const CellSplit& split, const TemporalSplit& tsplit, const TrainOptions& opts,
                   TrainReport* report) {
    if (is_neural(cfg.kind)) {
        ForecasterConfig resolved = cfg;
        resolved.input_bins = data.window.input_bins;
        resolved.horizon_bins = data.window.horizon_bins;
        auto nf = std::make_shared<NeuralForecaster>(resolved, data.n_features, data.static_width);
        TrainReport r = nf->fit(data, opts);
        if (report) *report = r;
        return AnyModel(std::move(nf));
    }
    if (cfg.kind == ModelKind::RIDGE) {
        auto rb = std::make_shared<RidgeBaseline>(cfg.ridge_lambda);
        rb->fit(completed, split, tsplit);
        if (report) *report = TrainReport{};
        return AnyModel(std::move(rb));
    }
    auto ib = std::make_shared<IdwBaseline>();
    ib->fit(completed, split, tsplit);
    if (report) *report = TrainReport{};
    return AnyModel(std::move(ib));
}

std::vector<double> AnyModel::predict_units(const SeriesSample& s, const Normalizer& norm) const {
    const int h = s.horizon_bins;
    std::vector<double> out(static_cast<std::size_t>(h) * 2);
    if (neural_) {
        const auto pred = neural_->predict(s);
        for (int i = 0; i < h * 2; ++i)
            out[static_cast<std::size_t>(i)] = norm.invert_target(
                pred[static_cast<std::size_t>(i)], i % 2 == 0 ? Pollutant::PM25 : Pollutant::PM10);
        return out;
    }
    // baselines predict per target bin directly in ug/m3
    for (int t = 0; t < h; ++t) {
        const int bin = s.anchor + s.input_bins + t;
        const std::array<double, 2> v =
            ridge_ ? ridge_->predict(s.cell_index, bin) : idw_->predict(s.cell_index, bin);
        out[static_cast<std::size_t>(t) * 2] = v[0];
        out[static_cast<std::size_t>(t) * 2 + 1] = v[1];
    }
    return out;
}

std::vector<double> AnyModel::predict_units(const GraphSample& s, const Normalizer& norm) const {
    if (!neural_) throw std::logic_error("baseline models evaluate on series samples");
    const auto pred = neural_->predict(s);
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        out[i] = norm.invert_target(pred[i], i % 2 == 0 ? Pollutant::PM25 : Pollutant::PM10);
    return out;
}

std::vector<double> AnyModel::predict_units(const GridSample& s, const Normalizer& norm) const {
    if (!neural_) throw std::logic_error("baseline models evaluate on series samples");
    const auto pred = neural_->predict(s);
    const std::size_t plane = static_cast<std::size_t>(s.rows) * s.cols;
    std::vector<double> out(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const std::size_t channel = i / plane;
        out[i] = norm.invert_target(pred[i],
                                    channel % 2 == 0 ? Pollutant::PM25 : Pollutant::PM10);
    }
    return out;
}

}  // namespace airgrid
