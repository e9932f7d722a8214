#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sys/wait.h>

#include "proact/config.hpp"
#include "proact/manifest.hpp"
#include "proact/pipeline.hpp"
#include "test_helpers.hpp"

using namespace proact;
using namespace proact::testing;

TEST_CASE("config: unknown keys and bad values name the field") {
    CHECK_THROWS_AS(ExperimentConfig::from_keys({{"cohort.lookbock_days", "10"}}), ConfigError);
    try {
        ExperimentConfig::from_keys({{"cohort.lookback_days", "ten"}});
        CHECK(false);
    } catch (const ConfigError &e) {
        CHECK(e.field() == "cohort.lookback_days");
    }
    try {
        ExperimentConfig::from_keys({{"splits.start", "2019-1-1"}});
        CHECK(false);
    } catch (const ConfigError &e) {
        CHECK(e.field() == "splits.start");
    }
    CHECK_THROWS_AS(ExperimentConfig::from_keys({{"trial.scorer", "wizard"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_keys(
                        {{"cohort.qualifying_booking_types", "on_view,parole"}}),
                    ConfigError);
}

TEST_CASE("config file: comments, duplicates, and round-trip of the shipped defaults") {
    auto dir = scratch_dir("config");
    write_file(dir / "dup.cfg", "seed = 1\nseed = 2\n");
    CHECK_THROWS_AS(ExperimentConfig::from_file(dir / "dup.cfg"), ConfigError);

    write_file(dir / "noeq.cfg", "seed 1\n");
    CHECK_THROWS_AS(ExperimentConfig::from_file(dir / "noeq.cfg"), ConfigError);

    write_default_config(dir / "paper.cfg");
    ExperimentConfig cfg = ExperimentConfig::from_file(dir / "paper.cfg");
    CHECK(cfg.lookback_days == 1095);
    CHECK(cfg.label_window_days == 365);
    CHECK(cfg.k == 100);
    CHECK(cfg.quotas.tier1 == 40);
    CHECK(cfg.quotas.tier2 == 40);
    CHECK(cfg.quotas.tier3 == 20);
    CHECK(cfg.quotas.contact_exclusion_days == 60);
    CHECK(cfg.quotas.reappearance_exclusion_months == 12);
    CHECK(cfg.pandemic_threshold == Date::from_ymd(2019, 10, 1));
    CHECK(expand_grid(cfg.grid, cfg.seed).size() == 69);
    // planted tier-1 effects parsed
    REQUIRE(cfg.sim.planted_effects.count(1));
    CHECK(cfg.sim.planted_effects.at(1).service_pp == doctest::Approx(10.8));
    CHECK(cfg.sim.planted_effects.at(1).days_in_jail == doctest::Approx(-11.8));
}

TEST_CASE("manifest digests change with file content") {
    auto dir = scratch_dir("manifest");
    write_file(dir / "a.txt", "hello\n");
    write_file(dir / "b.txt", "hello!\n");
    CHECK(digest_file(dir / "a.txt") != digest_file(dir / "b.txt"));
    write_file(dir / "c.txt", "hello\n");
    CHECK(digest_file(dir / "a.txt") == digest_file(dir / "c.txt"));

    RunManifest m;
    m.subcommand = "test";
    m.seed = 5;
    m.config_digest = digest_file(dir / "a.txt");
    m.outputs = {"x"};
    write_manifest(m, dir / "manifest.json");
    CHECK(std::filesystem::exists(dir / "manifest.json"));
}

TEST_CASE("directory lock allows one writer") {
    auto dir = scratch_dir("lock");
    {
        DirectoryLock lock(dir);
        CHECK_THROWS_AS(DirectoryLock{dir}, std::runtime_error);
    }
    DirectoryLock again(dir); // released on destruction
}

#ifdef PROACT_CLI_PATH

namespace {

int run_cli(const std::string &args) {
    std::string cmd = std::string(PROACT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

void write_smoke_config(const std::filesystem::path &path, const std::filesystem::path &root) {
    write_file(path, "data.dir = " + (root / "data").string() +
                         "\n"
                         "out.dir = " +
                         (root / "out").string() +
                         "\n"
                         "seed = 4242\n"
                         "simulate.n_persons = 900\n"
                         "simulate.span_start = 2014-01-01\n"
                         "simulate.span_end = 2020-12-31\n"
                         "splits.start = 2017-03-01\n"
                         "splits.end = 2017-04-01\n"
                         "evaluation.k = 40\n"
                         "grid.tree.criterion = gini\n"
                         "grid.tree.n_estimators = 15\n"
                         "grid.tree.min_samples_split = 25\n"
                         "grid.tree.max_depth = 4\n"
                         "grid.tree.max_features = sqrt\n"
                         "grid.logistic.penalty = l2\n"
                         "grid.logistic.C = 1\n"
                         "grid.rank_one.features = booking_count_1y\n"
                         "grid.thresholder.rules = any_mh_history\n"
                         "trial.start_month = 2018-02-01\n"
                         "trial.months = 2\n"
                         "trial.scorer = oracle\n"
                         "analysis.min_records = 10\n");
}

} // namespace

TEST_CASE("cli: end-to-end smoke path and exit codes") {
    auto root = scratch_dir("cli_smoke");
    auto cfg = root / "smoke.cfg";
    write_smoke_config(cfg, root);
    std::string base = "--config " + cfg.string() + " ";

    CHECK(run_cli(base + "simulate") == 0);
    CHECK(run_cli(base + "ingest") == 0);
    CHECK(run_cli(base + "cohort --as-of 2017-03-01") == 0);
    CHECK(run_cli(base + "evaluate") == 0);
    CHECK(run_cli(base + "train --as-of 2018-02-01") == 0);
    CHECK(run_cli(base + "audit-fairness --as-of 2017-03-01 --k 40") == 0);
    CHECK(run_cli(base + "trial-run") == 0);
    CHECK(run_cli(base + "analyze") == 0);
    CHECK(run_cli(base + "replay") == 0);

    auto out = root / "out";
    CHECK(std::filesystem::exists(out / "rejects.csv"));
    CHECK(std::filesystem::exists(out / "cohort-2017-03-01.csv"));
    CHECK(std::filesystem::exists(out / "leaderboard.tsv"));
    CHECK(std::filesystem::exists(out / "model-2018-02-01.json"));
    CHECK(std::filesystem::exists(out / "fairness" / "audit.csv"));
    CHECK(std::filesystem::exists(out / "trial" / "state.log"));
    CHECK(std::filesystem::exists(out / "trial" / "roster-2018-02-01.csv"));
    CHECK(std::filesystem::exists(out / "analysis" / "balance.csv"));
    CHECK(std::filesystem::exists(out / "manifest-analyze.json"));

    // a trained model can also drive the trial (exercises the scorer path)
    write_file(root / "model.cfg",
               "data.dir = " + (root / "data").string() + "\nout.dir = " +
                   (root / "out_model").string() + "\nseed = 4242\n" +
                   "simulate.span_start = 2014-01-01\nsimulate.span_end = 2020-12-31\n" +
                   "trial.start_month = 2018-02-01\ntrial.months = 1\n" +
                   "trial.scorer = model:" + (out / "model-2018-02-01.json").string() + "\n");
    CHECK(run_cli("--config " + (root / "model.cfg").string() + " trial-run") == 0);

    // usage error -> 1
    CHECK(run_cli("frobnicate") == 1);
    // config validation error -> 2
    write_file(root / "bad.cfg", "nonsense.key = 1\n");
    CHECK(run_cli("--config " + (root / "bad.cfg").string() + " simulate") == 2);
}

TEST_CASE("cli: replay flags a tampered state log with exit code 2") {
    auto root = scratch_dir("cli_replay");
    auto cfg = root / "smoke.cfg";
    write_smoke_config(cfg, root);
    std::string base = "--config " + cfg.string() + " ";
    REQUIRE(run_cli(base + "simulate") == 0);
    REQUIRE(run_cli(base + "trial-run") == 0);
    REQUIRE(run_cli(base + "replay") == 0);

    auto state_path = root / "out" / "trial" / "state.log";
    std::ifstream in(state_path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line))
        lines.push_back(line);
    in.close();
    REQUIRE(lines.size() > 10);
    lines[4][0] = lines[4][0] == 's' ? 'S' : 's';
    std::ofstream outf(state_path);
    for (const std::string &l : lines)
        outf << l << '\n';
    outf.close();

    CHECK(run_cli(base + "replay") == 2);
}

#endif // PROACT_CLI_PATH
