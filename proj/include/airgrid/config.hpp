#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "airgrid/domain.hpp"
#include "airgrid/impute.hpp"
#include "airgrid/models.hpp"
#include "airgrid/synth.hpp"

namespace airgrid {

// Effective configuration as ordered section -> key -> value strings.
// Starts from the built-in defaults; file values and command-line overrides
// replace entries. Unknown sections or keys are rejected.
using ConfigMap = std::map<std::string, std::map<std::string, std::string>>;

ConfigMap default_config();

// INI-style: [section] headers, key = value lines, # or ; comments.
void apply_config_file(ConfigMap& cfg, const std::string& path);

// "section.key=value"
void apply_override(ConfigMap& cfg, const std::string& spec);

// Canonical serialization of the chosen sections (all when empty), used for
// hashing and for documenting a run.
std::string canonical_config(const ConfigMap& cfg, const std::vector<std::string>& sections = {});

// FNV-1a 64 over the canonical form, hex encoded.
std::string config_hash(const ConfigMap& cfg, const std::vector<std::string>& sections);

// Typed view over the ConfigMap. Conversion errors name section and key.
struct RunConfig {
    std::uint64_t seed = 1;
    int threads = 0;
    std::string output_dir;
    std::string readings_path;
    std::string static_features_path;

    GridSpec grid;
    TemporalSpec temporal;  // epoch_day kEpochDayAuto when configured "auto"
    double split_ratio = 0.8;
    char delimiter = ',';
    int holdout_cells = 0;

    IdwConfig idw;
    ForecasterConfig forecaster;
    TrainOptions train;
    SynthConfig synth;

    std::string ablate_axis;
    std::vector<double> ablate_values;
    std::vector<ModelKind> pipeline_models;
};

RunConfig parse_run_config(const ConfigMap& cfg);

// Moves n deterministically chosen core cells to the extended set, modeling
// coordinates held out from training entirely.
CellSplit apply_holdout(const CellSplit& split, int n, std::uint64_t seed);

struct Manifest {
    std::string stage;
    std::string config_hash;
    std::string parent_hash;  // empty for root stages
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::uint64_t seed = 0;
    double wall_clock_s = 0.0;
};

void write_manifest(const std::string& path, const Manifest& m);
Manifest read_manifest(const std::string& path);

}  // namespace airgrid
