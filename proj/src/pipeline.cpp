#include "airgrid/pipeline.hpp"

#include <omp.h>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "airgrid/ingest.hpp"
#include "airgrid/kernels.hpp"
#include "airgrid/synth.hpp"

namespace airgrid {

namespace {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

void apply_threads(const RunConfig& rc) {
    if (rc.threads > 0) {
        kernels::set_num_threads(rc.threads);
        omp_set_num_threads(rc.threads);
    }
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

ConfigMap with_kind(const ConfigMap& cfg, ModelKind kind) {
    ConfigMap out = cfg;
    out["forecaster"]["kind"] = to_string(kind);
    return out;
}

std::string synth_hash(const ConfigMap& cfg) { return config_hash(cfg, {"run", "synth"}); }
std::string ingest_hash(const ConfigMap& cfg) {
    return config_hash(cfg, {"grid", "temporal", "ingest", "paths"});
}
std::string impute_hash(const ConfigMap& cfg) { return config_hash(cfg, {"idw"}); }
std::string train_hash(const ConfigMap& cfg) {
    return config_hash(cfg, {"run", "forecaster", "train"});
}

// The upstream artifact must exist and must have been produced under the
// configuration this run expects.
Manifest require_stage(const StagePaths& paths, const std::string& stage,
                       const std::string& expected_hash) {
    const std::string mpath = paths.manifest(stage);
    if (!fs::exists(mpath))
        throw std::runtime_error("missing artifact for stage '" + stage + "'; run `airgrid " +
                                 stage + "` first");
    Manifest m = read_manifest(mpath);
    if (m.config_hash != expected_hash)
        throw std::runtime_error("stale artifact: configuration changed since `airgrid " + stage +
                                 "` ran (hash " + m.config_hash + " != " + expected_hash +
                                 "); rerun `airgrid " + stage + "`");
    return m;
}

std::string readings_input(const RunConfig& rc, const StagePaths& paths) {
    return rc.readings_path.empty() ? paths.readings() : rc.readings_path;
}

struct PreparedData {
    STFrameSet completed;
    CellSplit split;
    TemporalSplit tsplit;
    StaticFeatures statics;
    bool has_statics = false;
};

PreparedData prepare_data(const RunConfig& rc, const StagePaths& paths) {
    PreparedData d;
    d.completed = STFrameSet::load(paths.imputed_frames());
    d.split = apply_holdout(split_cells(d.completed), rc.holdout_cells, rc.seed);
    d.tsplit = temporal_split(d.completed, rc.split_ratio);
    if (!rc.static_features_path.empty()) {
        d.statics = load_static_features(rc.static_features_path, d.completed.grid, rc.delimiter);
        d.has_statics = true;
    }
    return d;
}

void write_curve(const std::string& path, const TrainReport& report) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    os << "epoch,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < report.epoch_loss.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%zu,%.9e\n", i, report.epoch_loss[i]);
        os << buf;
    }
}

}  // namespace

void stage_synth(const RunConfig& rc, const ConfigMap& cfg) {
    apply_threads(rc);
    const auto t0 = Clock::now();
    StagePaths paths{rc.output_dir};
    fs::create_directories(rc.output_dir);
    SynthResult result = generate(rc.synth, paths.readings());
    result.truth.save(paths.truth());
    Manifest m;
    m.stage = "synth";
    m.config_hash = synth_hash(cfg);
    m.inputs = {};
    m.outputs = {paths.readings(), paths.truth()};
    m.seed = rc.seed;
    m.wall_clock_s = seconds_since(t0);
    write_manifest(paths.manifest("synth"), m);
}

void stage_ingest(const RunConfig& rc, const ConfigMap& cfg) {
    apply_threads(rc);
    const auto t0 = Clock::now();
    StagePaths paths{rc.output_dir};
    fs::create_directories(rc.output_dir);
    const std::string input = readings_input(rc, paths);
    if (!fs::exists(input)) {
        throw std::runtime_error("readings file '" + input +
                                 "' not found; run `airgrid synth` first or set paths.readings");
    }
    std::string parent;
    if (rc.readings_path.empty())
        parent = require_stage(paths, "synth", synth_hash(cfg)).config_hash;

    ParseResult parsed = parse_readings_file(input, ReadingFormat{rc.delimiter});
    std::cout << "ingest: " << parsed.readings.size() << " readings, " << parsed.skipped
              << " rows skipped\n";
    STFrameSet frames = aggregate(parsed.readings, rc.grid, rc.temporal);
    frames.save(paths.raw_frames());

    Manifest m;
    m.stage = "ingest";
    m.config_hash = ingest_hash(cfg);
    m.parent_hash = parent;
    m.inputs = {input};
    m.outputs = {paths.raw_frames()};
    m.seed = rc.seed;
    m.wall_clock_s = seconds_since(t0);
    write_manifest(paths.manifest("ingest"), m);
}

void stage_impute(const RunConfig& rc, const ConfigMap& cfg) {
    apply_threads(rc);
    const auto t0 = Clock::now();
    StagePaths paths{rc.output_dir};
    const Manifest parent = require_stage(paths, "ingest", ingest_hash(cfg));
    STFrameSet frames = STFrameSet::load(paths.raw_frames());
    const ImputeReport report = impute_frameset(frames, rc.idw);
    frames.save(paths.imputed_frames());

    std::ofstream cov(paths.coverage(), std::ios::trunc);
    if (!cov) throw std::runtime_error("cannot open " + paths.coverage() + " for writing");
    cov << "bin,observed_count,imputed_count\n";
    for (std::size_t b = 0; b < report.observed_per_bin.size(); ++b)
        cov << b << ',' << report.observed_per_bin[b] << ',' << report.imputed_per_bin[b] << '\n';

    Manifest m;
    m.stage = "impute";
    m.config_hash = impute_hash(cfg);
    m.parent_hash = parent.config_hash;
    m.inputs = {paths.raw_frames()};
    m.outputs = {paths.imputed_frames(), paths.coverage()};
    m.seed = rc.seed;
    m.wall_clock_s = seconds_since(t0);
    write_manifest(paths.manifest("impute"), m);
}

TrainReport stage_train(const RunConfig& rc, const ConfigMap& cfg, ModelKind kind) {
    apply_threads(rc);
    const auto t0 = Clock::now();
    StagePaths paths{rc.output_dir};
    const ConfigMap kcfg = with_kind(cfg, kind);
    const Manifest parent = require_stage(paths, "impute", impute_hash(cfg));

    PreparedData data = prepare_data(rc, paths);
    ForecasterConfig fcfg = rc.forecaster;
    fcfg.kind = kind;
    const Dataset dataset = build_dataset(fcfg, data.completed, data.split, data.tsplit,
                                          data.has_statics ? &data.statics : nullptr);
    TrainReport report;
    AnyModel model =
        fit_model(fcfg, dataset, data.completed, data.split, data.tsplit, rc.train, &report);

    std::vector<std::string> outputs;
    if (model.neural()) {
        save_checkpoint(paths.checkpoint(kind), model.neural()->params());
        write_curve(paths.curve(kind), report);
        outputs = {paths.checkpoint(kind), paths.curve(kind)};
        std::cout << "train " << to_string(kind) << ": " << report.epoch_loss.size()
                  << " epochs, best " << report.best_epoch << ", "
                  << (report.epoch_loss.empty() ? 0.0 : report.epoch_loss.back()) << " final loss, "
                  << report.wall_seconds << " s\n";
    } else {
        std::cout << "train " << to_string(kind) << ": baseline fitted\n";
    }

    Manifest m;
    m.stage = "train_" + std::string(to_string(kind));
    m.config_hash = train_hash(kcfg);
    m.parent_hash = parent.config_hash;
    m.inputs = {paths.imputed_frames()};
    m.outputs = outputs;
    m.seed = rc.seed;
    m.wall_clock_s = seconds_since(t0);
    write_manifest(paths.manifest(m.stage), m);
    return report;
}

std::vector<EvalReport> stage_evaluate(const RunConfig& rc, const ConfigMap& cfg, ModelKind kind) {
    apply_threads(rc);
    const auto t0 = Clock::now();
    StagePaths paths{rc.output_dir};
    const ConfigMap kcfg = with_kind(cfg, kind);
    const std::string tstage = "train_" + std::string(to_string(kind));
    const Manifest parent = require_stage(paths, tstage, train_hash(kcfg));
    require_stage(paths, "impute", impute_hash(cfg));

    PreparedData data = prepare_data(rc, paths);
    ForecasterConfig fcfg = rc.forecaster;
    fcfg.kind = kind;
    const Dataset dataset = build_dataset(fcfg, data.completed, data.split, data.tsplit,
                                          data.has_statics ? &data.statics : nullptr);

    std::vector<EvalReport> reports;
    if (is_neural(kind)) {
        if (!fs::exists(paths.checkpoint(kind)))
            throw std::runtime_error("checkpoint for " + std::string(to_string(kind)) +
                                     " not found; run `airgrid train` first");
        ForecasterConfig resolved = fcfg;
        resolved.input_bins = dataset.window.input_bins;
        resolved.horizon_bins = dataset.window.horizon_bins;
        auto nf = std::make_shared<NeuralForecaster>(resolved, dataset.n_features,
                                                     dataset.static_width);
        nf->set_params(load_checkpoint(paths.checkpoint(kind)));
        reports = evaluate(AnyModel(std::move(nf)), dataset, to_string(kind));
    } else {
        // baselines are deterministic closed-form fits; refit directly
        AnyModel model =
            fit_model(fcfg, dataset, data.completed, data.split, data.tsplit, rc.train);
        reports = evaluate(model, dataset, to_string(kind));
    }

    write_reports_csv(paths.report(kind), reports);
    std::cout << render_report_table(reports);

    Manifest m;
    m.stage = "evaluate_" + std::string(to_string(kind));
    m.config_hash = train_hash(kcfg);
    m.parent_hash = parent.config_hash;
    m.inputs = {paths.imputed_frames()};
    m.outputs = {paths.report(kind)};
    m.seed = rc.seed;
    m.wall_clock_s = seconds_since(t0);
    write_manifest(paths.manifest(m.stage), m);
    return reports;
}

std::vector<std::string> stage_ablate(const RunConfig& rc, const ConfigMap& cfg) {
    apply_threads(rc);
    const auto t0 = Clock::now();
    StagePaths paths{rc.output_dir};
    const Manifest parent = require_stage(paths, "impute", impute_hash(cfg));

    PreparedData data = prepare_data(rc, paths);
    const auto rows = ablate(rc.ablate_axis, rc.ablate_values, rc.forecaster, data.completed,
                             data.split, data.tsplit, rc.train,
                             data.has_statics ? &data.statics : nullptr);
    const auto files = write_ablation_csv(rc.output_dir, rc.ablate_axis, rows);

    Manifest m;
    m.stage = "ablate";
    m.config_hash = config_hash(cfg, {"run", "forecaster", "train", "ablate"});
    m.parent_hash = parent.config_hash;
    m.inputs = {paths.imputed_frames()};
    m.outputs = files;
    m.seed = rc.seed;
    m.wall_clock_s = seconds_since(t0);
    write_manifest(paths.manifest("ablate"), m);
    return files;
}

std::vector<EvalReport> stage_pipeline(const RunConfig& rc, const ConfigMap& cfg) {
    StagePaths paths{rc.output_dir};
    if (rc.readings_path.empty()) {
        if (rc.grid.n_rows != rc.synth.n_rows || rc.grid.n_cols != rc.synth.n_cols)
            throw std::runtime_error(
                "pipeline: [grid] and [synth] dimensions disagree; align n_rows/n_cols");
        stage_synth(rc, cfg);
    }
    stage_ingest(rc, cfg);
    stage_impute(rc, cfg);
    std::vector<EvalReport> all;
    for (ModelKind kind : rc.pipeline_models) {
        stage_train(rc, cfg, kind);
        const auto reports = stage_evaluate(rc, cfg, kind);
        all.insert(all.end(), reports.begin(), reports.end());
    }
    write_reports_csv(paths.report_all(), all);
    return all;
}

}  // namespace airgrid
