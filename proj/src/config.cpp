#include "airgrid/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace airgrid {

ConfigMap default_config() {
    ConfigMap cfg;
    cfg["run"] = {{"seed", "1"}, {"threads", "0"}, {"output_dir", "out"}};
    cfg["paths"] = {{"readings", ""}, {"static_features", ""}};
    cfg["grid"] = {{"origin_lon", "77.05"}, {"origin_lat", "28.40"}, {"cell_size_m", "1000"},
                   {"n_rows", "10"},        {"n_cols", "10"},        {"ref_lat", "28.45"}};
    cfg["temporal"] = {{"bin_minutes", "30"},
                       {"day_start_min", "330"},
                       {"day_end_min", "1320"},
                       {"utc_offset_min", "330"},
                       {"epoch_day", "auto"}};
    cfg["ingest"] = {{"delimiter", ","}, {"split_ratio", "0.8"}, {"holdout_cells", "0"}};
    cfg["idw"] = {{"k", "3"},
                  {"power", "3"},
                  {"coord_weight", "50"},
                  {"lookback_days", "2"},
                  {"zero_dist_eps", "1e-9"}};
    cfg["forecaster"] = {{"kind", "GRU"},       {"layers", "3"},      {"hidden", "64"},
                         {"k_neighbors", "5"},  {"window_bins", "0"}, {"horizon_bins", "0"},
                         {"use_static", "false"}, {"conv_kernel", "3"}, {"ridge_lambda", "1.0"}};
    cfg["train"] = {{"epochs", "-1"}, {"batch", "-1"}, {"lr", "0.001"}};
    cfg["synth"] = {{"n_rows", "10"},     {"n_cols", "10"},    {"n_days", "30"},
                    {"n_buses", "5"},     {"route_len", "4"},  {"n_bumps", "4"},
                    {"base_level", "80"}, {"bump_amp", "40"},  {"bump_sigma", "2.5"},
                    {"daily_amp", "25"},  {"rho", "0.7"},      {"sigma_day", "6"},
                    {"sigma_obs", "2"},   {"pm10_ratio", "1.1"}};
    cfg["ablate"] = {{"axis", "layers"}, {"values", "1,2,3,6"}};
    cfg["pipeline"] = {{"models", "GRU"}};
    return cfg;
}

namespace {
std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

void set_value(ConfigMap& cfg, const std::string& section, const std::string& key,
               const std::string& value) {
    auto sit = cfg.find(section);
    if (sit == cfg.end()) throw std::runtime_error("config: unknown section [" + section + "]");
    auto kit = sit->second.find(key);
    if (kit == sit->second.end())
        throw std::runtime_error("config: unknown key '" + key + "' in section [" + section + "]");
    kit->second = value;
}
}  // namespace

void apply_config_file(ConfigMap& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw std::runtime_error("config: bad section header at line " + std::to_string(lineno));
            section = trim(t.substr(1, t.size() - 2));
            if (cfg.find(section) == cfg.end())
                throw std::runtime_error("config: unknown section [" + section + "]");
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("config: expected key = value at line " + std::to_string(lineno));
        if (section.empty())
            throw std::runtime_error("config: key outside a section at line " + std::to_string(lineno));
        set_value(cfg, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }
}

void apply_override(ConfigMap& cfg, const std::string& spec) {
    const auto eq = spec.find('=');
    const auto dot = spec.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
        throw std::runtime_error("config: override must look like section.key=value, got '" + spec + "'");
    set_value(cfg, spec.substr(0, dot), spec.substr(dot + 1, eq - dot - 1), spec.substr(eq + 1));
}

std::string canonical_config(const ConfigMap& cfg, const std::vector<std::string>& sections) {
    std::ostringstream os;
    for (const auto& [section, keys] : cfg) {
        if (!sections.empty() &&
            std::find(sections.begin(), sections.end(), section) == sections.end())
            continue;
        for (const auto& [key, value] : keys) os << section << '.' << key << '=' << value << '\n';
    }
    return os.str();
}

std::string config_hash(const ConfigMap& cfg, const std::vector<std::string>& sections) {
    const std::string text = canonical_config(cfg, sections);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

class Typed {
public:
    explicit Typed(const ConfigMap& cfg) : cfg_(cfg) {}

    const std::string& str(const std::string& s, const std::string& k) const {
        return cfg_.at(s).at(k);
    }
    double num(const std::string& s, const std::string& k) const {
        try {
            std::size_t pos = 0;
            const double v = std::stod(str(s, k), &pos);
            if (pos != str(s, k).size()) throw std::invalid_argument("trailing");
            return v;
        } catch (const std::exception&) {
            throw std::runtime_error("config: " + s + "." + k + " is not a number: '" + str(s, k) + "'");
        }
    }
    int integer(const std::string& s, const std::string& k) const {
        const double v = num(s, k);
        return static_cast<int>(v);
    }
    bool boolean(const std::string& s, const std::string& k) const {
        const std::string& v = str(s, k);
        if (v == "true" || v == "1" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "no") return false;
        throw std::runtime_error("config: " + s + "." + k + " is not a boolean: '" + v + "'");
    }

private:
    const ConfigMap& cfg_;
};

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(std::stod(tok));
    }
    return out;
}

}  // namespace

RunConfig parse_run_config(const ConfigMap& cfg) {
    Typed t(cfg);
    RunConfig rc;
    rc.seed = static_cast<std::uint64_t>(t.num("run", "seed"));
    rc.threads = t.integer("run", "threads");
    rc.output_dir = t.str("run", "output_dir");
    rc.readings_path = t.str("paths", "readings");
    rc.static_features_path = t.str("paths", "static_features");

    rc.grid.origin_lon = t.num("grid", "origin_lon");
    rc.grid.origin_lat = t.num("grid", "origin_lat");
    rc.grid.cell_size_m = t.num("grid", "cell_size_m");
    rc.grid.n_rows = t.integer("grid", "n_rows");
    rc.grid.n_cols = t.integer("grid", "n_cols");
    rc.grid.ref_lat = t.num("grid", "ref_lat");
    rc.grid.validate();

    rc.temporal.bin_minutes = t.integer("temporal", "bin_minutes");
    rc.temporal.day_start_min = t.integer("temporal", "day_start_min");
    rc.temporal.day_end_min = t.integer("temporal", "day_end_min");
    rc.temporal.utc_offset_min = t.integer("temporal", "utc_offset_min");
    rc.temporal.epoch_day = t.str("temporal", "epoch_day") == "auto"
                                ? kEpochDayAuto
                                : static_cast<std::int64_t>(t.num("temporal", "epoch_day"));
    rc.temporal.validate();

    const std::string delim = t.str("ingest", "delimiter");
    if (delim.size() != 1) throw std::runtime_error("config: ingest.delimiter must be one character");
    rc.delimiter = delim[0];
    rc.split_ratio = t.num("ingest", "split_ratio");
    rc.holdout_cells = t.integer("ingest", "holdout_cells");

    rc.idw.k = t.integer("idw", "k");
    rc.idw.power = t.num("idw", "power");
    rc.idw.coord_weight = t.num("idw", "coord_weight");
    rc.idw.lookback_days = t.integer("idw", "lookback_days");
    rc.idw.zero_dist_eps = t.num("idw", "zero_dist_eps");
    rc.idw.validate();

    rc.forecaster.kind = model_kind_from_string(t.str("forecaster", "kind"));
    rc.forecaster.layers = t.integer("forecaster", "layers");
    rc.forecaster.hidden = t.integer("forecaster", "hidden");
    rc.forecaster.k_neighbors = t.integer("forecaster", "k_neighbors");
    rc.forecaster.input_bins = t.integer("forecaster", "window_bins");
    rc.forecaster.horizon_bins = t.integer("forecaster", "horizon_bins");
    rc.forecaster.use_static = t.boolean("forecaster", "use_static");
    rc.forecaster.conv_kernel = t.integer("forecaster", "conv_kernel");
    rc.forecaster.ridge_lambda = t.num("forecaster", "ridge_lambda");
    rc.forecaster.seed = rc.seed;
    rc.forecaster.validate();

    rc.train.epochs = t.integer("train", "epochs");
    rc.train.batch = t.integer("train", "batch");
    rc.train.adam.lr = t.num("train", "lr");

    rc.synth.n_rows = t.integer("synth", "n_rows");
    rc.synth.n_cols = t.integer("synth", "n_cols");
    rc.synth.n_days = t.integer("synth", "n_days");
    rc.synth.n_buses = t.integer("synth", "n_buses");
    rc.synth.route_len = t.integer("synth", "route_len");
    rc.synth.n_bumps = t.integer("synth", "n_bumps");
    rc.synth.base_level = t.num("synth", "base_level");
    rc.synth.bump_amp = t.num("synth", "bump_amp");
    rc.synth.bump_sigma = t.num("synth", "bump_sigma");
    rc.synth.daily_amp = t.num("synth", "daily_amp");
    rc.synth.rho = t.num("synth", "rho");
    rc.synth.sigma_day = t.num("synth", "sigma_day");
    rc.synth.sigma_obs = t.num("synth", "sigma_obs");
    rc.synth.pm10_ratio = t.num("synth", "pm10_ratio");
    rc.synth.seed = rc.seed;
    rc.synth.validate();

    rc.ablate_axis = t.str("ablate", "axis");
    rc.ablate_values = parse_list(t.str("ablate", "values"));

    for (const std::string& tok : [&] {
             std::vector<std::string> kinds;
             std::stringstream ss(t.str("pipeline", "models"));
             std::string item;
             while (std::getline(ss, item, ',')) {
                 item = trim(item);
                 if (!item.empty()) kinds.push_back(item);
             }
             return kinds;
         }())
        rc.pipeline_models.push_back(model_kind_from_string(tok));
    if (rc.pipeline_models.empty())
        throw std::runtime_error("config: pipeline.models must name at least one model kind");
    return rc;
}

CellSplit apply_holdout(const CellSplit& split, int n, std::uint64_t seed) {
    if (n <= 0) return split;
    if (n >= static_cast<int>(split.core.size()))
        throw std::invalid_argument("holdout: would leave no core cells");
    std::vector<CellId> core = split.core;
    Rng rng(seed + 0xC0FFEE);
    rng.shuffle(core);
    CellSplit out;
    out.extended = split.extended;
    for (std::size_t i = 0; i < core.size(); ++i) {
        if (i < static_cast<std::size_t>(n))
            out.extended.push_back(core[i]);
        else
            out.core.push_back(core[i]);
    }
    std::sort(out.core.begin(), out.core.end());
    std::sort(out.extended.begin(), out.extended.end());
    return out;
}

void write_manifest(const std::string& path, const Manifest& m) {
    nlohmann::json j;
    j["schema"] = 1;
    j["stage"] = m.stage;
    j["config_hash"] = m.config_hash;
    j["parent_hash"] = m.parent_hash;
    j["inputs"] = m.inputs;
    j["outputs"] = m.outputs;
    j["seed"] = m.seed;
    j["wall_clock_s"] = m.wall_clock_s;
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("manifest: cannot open " + path + " for writing");
    os << j.dump(2) << '\n';
}

Manifest read_manifest(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("manifest: cannot open " + path);
    nlohmann::json j;
    is >> j;
    Manifest m;
    m.stage = j.at("stage").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.parent_hash = j.value("parent_hash", "");
    m.inputs = j.value("inputs", std::vector<std::string>{});
    m.outputs = j.value("outputs", std::vector<std::string>{});
    m.seed = j.value("seed", std::uint64_t{0});
    m.wall_clock_s = j.value("wall_clock_s", 0.0);
    return m;
}

}  // namespace airgrid
