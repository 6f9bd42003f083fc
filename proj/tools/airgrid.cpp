#include <CLI11.hpp>

#include <iostream>

#include "airgrid/pipeline.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("-c,--config", args.config_path, "configuration file (INI sections)");
    cmd->add_option("--set", args.overrides, "override as section.key=value (repeatable)");
    cmd->allow_extras();  // bare --section.key=value overrides
}

airgrid::ConfigMap build_config(CLI::App* cmd, const CommonArgs& args) {
    airgrid::ConfigMap cfg = airgrid::default_config();
    if (!args.config_path.empty()) airgrid::apply_config_file(cfg, args.config_path);
    for (const std::string& o : args.overrides) airgrid::apply_override(cfg, o);
    for (std::string extra : cmd->remaining()) {
        if (extra.rfind("--", 0) == 0) extra = extra.substr(2);
        airgrid::apply_override(cfg, extra);
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fine-grained PM2.5/PM10 forecasting pipeline"};
    app.require_subcommand(1);

    const std::vector<std::string> stages = {"synth",    "ingest", "impute",  "train",
                                             "evaluate", "ablate", "pipeline"};
    std::map<std::string, CLI::App*> cmds;
    std::map<std::string, CommonArgs> args;
    for (const std::string& s : stages) {
        cmds[s] = app.add_subcommand(s, s + " stage");
        add_common(cmds[s], args[s]);
    }

    CLI11_PARSE(app, argc, argv);

    const std::string stage = app.get_subcommands().front()->get_name();
    try {
        const airgrid::ConfigMap cfg = build_config(cmds[stage], args[stage]);
        const airgrid::RunConfig rc = airgrid::parse_run_config(cfg);
        if (stage == "synth") {
            airgrid::stage_synth(rc, cfg);
        } else if (stage == "ingest") {
            airgrid::stage_ingest(rc, cfg);
        } else if (stage == "impute") {
            airgrid::stage_impute(rc, cfg);
        } else if (stage == "train") {
            airgrid::stage_train(rc, cfg, rc.forecaster.kind);
        } else if (stage == "evaluate") {
            airgrid::stage_evaluate(rc, cfg, rc.forecaster.kind);
        } else if (stage == "ablate") {
            airgrid::stage_ablate(rc, cfg);
        } else {
            airgrid::stage_pipeline(rc, cfg);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
