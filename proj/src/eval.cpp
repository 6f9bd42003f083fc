#include "airgrid/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <type_traits>

namespace airgrid {

Metrics metrics(const std::vector<double>& pred, const std::vector<double>& target,
                const std::vector<std::uint8_t>& mask) {
    if (pred.size() != target.size() || pred.size() != mask.size())
        throw std::invalid_argument("metrics: size mismatch");
    std::int64_t n = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        mean += target[i];
        ++n;
    }
    if (n < 2) throw std::invalid_argument("metrics: need at least two masked entries");
    mean /= static_cast<double>(n);

    double rss = 0.0, tss = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const double err = pred[i] - target[i];
        rss += err * err;
        abs_sum += std::abs(err);
        const double dev = target[i] - mean;
        tss += dev * dev;
    }
    if (tss == 0.0) throw std::invalid_argument("metrics: zero-variance targets, R^2 undefined");

    Metrics m;
    m.n = n;
    m.mse = rss / static_cast<double>(n);
    m.rmse = std::sqrt(m.mse);
    m.mae = abs_sum / static_cast<double>(n);
    m.r2 = 1.0 - rss / tss;
    return m;
}

double category_accuracy(const std::vector<double>& pred, const std::vector<double>& target,
                         const std::vector<std::uint8_t>& mask, Pollutant pollutant) {
    if (pred.size() != target.size() || pred.size() != mask.size())
        throw std::invalid_argument("category_accuracy: size mismatch");
    std::int64_t n = 0, hits = 0;
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        ++n;
        if (categorize(std::max(0.0, pred[i]), pollutant) == categorize(target[i], pollutant)) ++hits;
    }
    if (n == 0) throw std::invalid_argument("category_accuracy: all-false mask");
    return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

namespace {

struct Collected {
    std::vector<double> pred, target;  // masked entries only, ug/m3
    std::int64_t samples = 0;
};

void append_masked(Collected out[2], const std::vector<double>& pred_units,
                   const std::vector<double>& target_std, const std::vector<std::uint8_t>& mask,
                   const Normalizer& norm, int layout_mode, const std::size_t plane) {
    // layout_mode 2: pollutant interleaved in the last dim; 0: grid planes
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (!mask[i]) continue;
        const int ch =
            layout_mode == 2 ? static_cast<int>(i % 2) : static_cast<int>((i / plane) % 2);
        const Pollutant p = ch == 0 ? Pollutant::PM25 : Pollutant::PM10;
        out[ch].pred.push_back(pred_units[i]);
        out[ch].target.push_back(norm.invert_target(target_std[i], p));
    }
}

template <typename Sample>
void collect_split(const AnyModel& model, const std::vector<Sample>& samples,
                   const Normalizer& norm, Collected out[2]) {
    std::vector<std::vector<double>> preds(samples.size());
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < static_cast<int>(samples.size()); ++i)
        preds[static_cast<std::size_t>(i)] =
            model.predict_units(samples[static_cast<std::size_t>(i)], norm);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const Sample& s = samples[i];
        std::size_t plane = 1;
        int mode = 2;
        if constexpr (std::is_same_v<Sample, GridSample>) {
            plane = static_cast<std::size_t>(s.rows) * s.cols;
            mode = 0;
        }
        append_masked(out, preds[i], s.target, s.mask, norm, mode, plane);
        bool any = std::any_of(s.mask.begin(), s.mask.end(), [](std::uint8_t m) { return m != 0; });
        if (any) {
            ++out[0].samples;
            ++out[1].samples;
        }
    }
}

std::vector<EvalReport> reports_for(const Collected collected[2], const std::string& name,
                                    const std::string& split_name) {
    std::vector<EvalReport> out;
    for (int ch = 0; ch < 2; ++ch) {
        const Collected& c = collected[ch];
        const Pollutant p = ch == 0 ? Pollutant::PM25 : Pollutant::PM10;
        std::vector<std::uint8_t> all(c.pred.size(), 1);
        EvalReport r;
        r.model = name;
        r.pollutant = p;
        r.split = split_name;
        r.m = metrics(c.pred, c.target, all);
        r.category_acc = category_accuracy(c.pred, c.target, all, p);
        r.samples = c.samples;
        out.push_back(std::move(r));
    }
    return out;
}

}  // namespace

std::vector<EvalReport> evaluate(const AnyModel& model, const Dataset& data,
                                 const std::string& model_name) {
    std::vector<EvalReport> reports;
    auto run = [&](auto const& test, auto const& extended) {
        {
            Collected c[2];
            collect_split(model, test, data.norm, c);
            auto r = reports_for(c, model_name, "Test");
            reports.insert(reports.end(), r.begin(), r.end());
        }
        if (!extended.empty()) {
            Collected c[2];
            collect_split(model, extended, data.norm, c);
            auto r = reports_for(c, model_name, "Extended");
            reports.insert(reports.end(), r.begin(), r.end());
        }
    };
    switch (data.kind) {
        case ModelKind::RNN:
        case ModelKind::GRU:
        case ModelKind::RIDGE:
        case ModelKind::IDW_BASE:
            run(data.series.test, data.series.extended);
            break;
        case ModelKind::GCN_GRU:
        case ModelKind::GAT_GRU:
            run(data.graph.test, data.graph.extended);
            break;
        case ModelKind::CONVGRU:
            run(data.grid.test, data.grid.extended);
            break;
    }
    return reports;
}

void write_reports_csv(const std::string& path, const std::vector<EvalReport>& reports) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "model,pollutant,split,mse,rmse,mae,r2,category_acc,entries,samples\n";
    char buf[64];
    for (const EvalReport& r : reports) {
        os << r.model << ',' << to_string(r.pollutant) << ',' << r.split << ',';
        auto num = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.6f", v);
            os << buf;
        };
        num(r.m.mse);
        os << ',';
        num(r.m.rmse);
        os << ',';
        num(r.m.mae);
        os << ',';
        num(r.m.r2);
        os << ',';
        num(r.category_acc);
        os << ',' << r.m.n << ',' << r.samples << '\n';
    }
}

std::string render_report_table(const std::vector<EvalReport>& reports) {
    std::ostringstream os;
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-6s %-9s %10s %10s %10s %8s %7s %10s\n", "model",
                  "poll", "split", "RMSE", "MSE", "MAE", "R2", "Acc%", "entries");
    os << line;
    os << std::string(86, '-') << '\n';
    for (const EvalReport& r : reports) {
        std::snprintf(line, sizeof line, "%-10s %-6s %-9s %10.3f %10.2f %10.3f %8.3f %7.2f %10lld\n",
                      r.model.c_str(), to_string(r.pollutant), r.split.c_str(), r.m.rmse, r.m.mse,
                      r.m.mae, r.m.r2, r.category_acc, static_cast<long long>(r.m.n));
        os << line;
    }
    return os.str();
}

std::vector<AblationRow> ablate(const std::string& axis, const std::vector<double>& values,
                                const ForecasterConfig& base, const STFrameSet& completed,
                                const CellSplit& split, const TemporalSplit& tsplit,
                                const TrainOptions& opts, const StaticFeatures* statics) {
    if (values.empty()) throw std::invalid_argument("ablate: empty value grid");
    const bool graph_kind = is_graph(base.kind);
    if (axis == "k_neighbors" && !graph_kind)
        throw std::invalid_argument("ablate: axis k_neighbors applies only to GCN_GRU/GAT_GRU");
    if (axis == "layers" && !is_neural(base.kind))
        throw std::invalid_argument("ablate: axis layers applies only to neural kinds");
    if (axis != "layers" && axis != "seq_len" && axis != "horizon" && axis != "k_neighbors")
        throw std::invalid_argument("ablate: unknown axis '" + axis + "'");

    std::vector<AblationRow> rows;
    for (double v : values) {
        ForecasterConfig cfg = base;  // shared seed across the grid
        if (axis == "layers")
            cfg.layers = static_cast<int>(v);
        else if (axis == "seq_len")
            cfg.input_bins = static_cast<int>(v);
        else if (axis == "horizon")
            cfg.horizon_bins = static_cast<int>(v);
        else
            cfg.k_neighbors = static_cast<int>(v);
        cfg.validate();

        const Dataset data = build_dataset(cfg, completed, split, tsplit, statics);
        const AnyModel model = fit_model(cfg, data, completed, split, tsplit, opts);
        const auto reports = evaluate(model, data, to_string(cfg.kind));
        for (const EvalReport& r : reports) {
            if (r.split != "Test") continue;
            rows.push_back(AblationRow{v, r.pollutant, r.m.r2, r.m.rmse});
        }
    }
    return rows;
}

std::vector<std::string> write_ablation_csv(const std::string& dir, const std::string& axis,
                                            const std::vector<AblationRow>& rows) {
    std::vector<std::string> paths;
    for (Pollutant p : {Pollutant::PM25, Pollutant::PM10}) {
        const std::string name = p == Pollutant::PM25 ? "pm25" : "pm10";
        const std::string path = dir + "/ablate_" + axis + "_" + name + ".csv";
        std::ofstream os(path, std::ios::trunc);
        if (!os) throw std::runtime_error("cannot open " + path + " for writing");
        os << "value,pollutant,r2,rmse\n";
        char buf[128];
        for (const AblationRow& r : rows) {
            if (r.pollutant != p) continue;
            std::snprintf(buf, sizeof buf, "%g,%s,%.6f,%.6f\n", r.value, to_string(p), r.r2, r.rmse);
            os << buf;
        }
        paths.push_back(path);
    }
    return paths;
}

}  // namespace airgrid
