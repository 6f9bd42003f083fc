#pragma once

#include <string>
#include <vector>

#include "airgrid/config.hpp"
#include "airgrid/eval.hpp"

namespace airgrid {

// Artifact naming inside the run's output directory.
struct StagePaths {
    std::string dir;

    std::string readings() const { return dir + "/readings.csv"; }
    std::string truth() const { return dir + "/truth.agfs"; }
    std::string raw_frames() const { return dir + "/frameset_raw.agfs"; }
    std::string imputed_frames() const { return dir + "/frameset_imputed.agfs"; }
    std::string coverage() const { return dir + "/impute_coverage.csv"; }
    std::string checkpoint(ModelKind k) const {
        return dir + "/checkpoint_" + to_string(k) + ".agck";
    }
    std::string curve(ModelKind k) const { return dir + "/train_curve_" + to_string(k) + ".csv"; }
    std::string report(ModelKind k) const { return dir + "/eval_report_" + to_string(k) + ".csv"; }
    std::string report_all() const { return dir + "/eval_report.csv"; }
    std::string manifest(const std::string& stage) const {
        return dir + "/manifest_" + stage + ".json";
    }
};

// Each stage writes its artifacts plus a manifest carrying the hash of the
// config sections it depends on; downstream stages recompute the expected
// hash and refuse stale artifacts.
void stage_synth(const RunConfig& rc, const ConfigMap& cfg);
void stage_ingest(const RunConfig& rc, const ConfigMap& cfg);
void stage_impute(const RunConfig& rc, const ConfigMap& cfg);
TrainReport stage_train(const RunConfig& rc, const ConfigMap& cfg, ModelKind kind);
std::vector<EvalReport> stage_evaluate(const RunConfig& rc, const ConfigMap& cfg, ModelKind kind);
std::vector<std::string> stage_ablate(const RunConfig& rc, const ConfigMap& cfg);
std::vector<EvalReport> stage_pipeline(const RunConfig& rc, const ConfigMap& cfg);

}  // namespace airgrid
