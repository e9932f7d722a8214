#include <iostream>

#include <CLI11.hpp>

#include "proact/config.hpp"
#include "proact/pipeline.hpp"

using namespace proact;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitValidation = 2;
constexpr int kExitInternal = 3;

Date require_date(const std::string &flag, const std::string &value) {
    auto d = Date::parse(value);
    if (!d)
        throw ConfigError(flag, "expected YYYY-MM-DD, got '" + value + "'");
    return *d;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"proact: reincarceration-risk modeling, fairness auditing, tiered trial "
                 "allocation and ITT estimation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir_override;
    std::string seed_override;
    app.add_option("--config", config_path, "experiment configuration file");
    app.add_option("--out-dir", out_dir_override, "override out.dir");
    app.add_option("--seed", seed_override, "override master seed");

    std::string as_of_flag, month_flag;
    int k_flag = 0;
    int tier_flag = 0;
    bool full_grid = false;

    CLI::App *c_simulate = app.add_subcommand("simulate", "generate a synthetic population");
    CLI::App *c_ingest = app.add_subcommand("ingest", "validate data files, write rejects");
    CLI::App *c_cohort = app.add_subcommand("cohort", "export a labeled cohort snapshot");
    c_cohort->add_option("--as-of", as_of_flag, "cohort date")->required();
    CLI::App *c_evaluate =
        app.add_subcommand("evaluate", "inter-temporal grid evaluation and model selection");
    c_evaluate->add_flag("--full-grid", full_grid, "lift the desk-scale tree cap");
    CLI::App *c_train = app.add_subcommand("train", "fit the selected model at a date");
    c_train->add_option("--as-of", as_of_flag, "training score date")->required();
    CLI::App *c_audit = app.add_subcommand("audit-fairness", "group fairness audit");
    c_audit->add_option("--as-of", as_of_flag, "audit date")->required();
    c_audit->add_option("--k", k_flag, "selection size (default evaluation.k)");
    CLI::App *c_trial = app.add_subcommand("trial-run", "run monthly trial allocation");
    c_trial->add_option("--month", month_flag, "override trial start month");
    CLI::App *c_analyze = app.add_subcommand("analyze", "balance checks and ITT effects");
    c_analyze->add_option("--tier", tier_flag, "(informational) tier of interest");
    CLI::App *c_replay = app.add_subcommand("replay", "verify the trial state log");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{}
                                                   : ExperimentConfig::from_file(config_path);
        if (!out_dir_override.empty())
            cfg.out_dir = out_dir_override;
        if (!seed_override.empty()) {
            cfg.seed = std::stoull(seed_override);
            cfg.sim.master_seed = cfg.seed;
        }
        if (!month_flag.empty())
            cfg.trial_start_month = require_date("--month", month_flag);

        if (c_simulate->parsed())
            cmd_simulate(cfg, config_path);
        else if (c_ingest->parsed())
            cmd_ingest(cfg, config_path);
        else if (c_cohort->parsed())
            cmd_cohort(cfg, config_path, require_date("--as-of", as_of_flag));
        else if (c_evaluate->parsed())
            cmd_evaluate(cfg, config_path, full_grid);
        else if (c_train->parsed())
            cmd_train(cfg, config_path, require_date("--as-of", as_of_flag));
        else if (c_audit->parsed())
            cmd_audit_fairness(cfg, config_path, require_date("--as-of", as_of_flag),
                               k_flag > 0 ? k_flag : cfg.k);
        else if (c_trial->parsed())
            cmd_trial_run(cfg, config_path);
        else if (c_analyze->parsed())
            cmd_analyze(cfg, config_path);
        else if (c_replay->parsed())
            cmd_replay(cfg, config_path);
        return kExitOk;
    } catch (const ConfigError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::invalid_argument &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::runtime_error &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception &e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
