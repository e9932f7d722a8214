#pragma once

#include <functional>
#include <optional>

#include "proact/config.hpp"
#include "proact/inference.hpp"
#include "proact/synth.hpp"
#include "proact/validation.hpp"

namespace proact {

// Ingest the standard data-directory layout (one file per event kind plus
// persons.csv). Throws when reject rows exceed `max_rejects`.
EventLog load_event_log(const ExperimentConfig &cfg, const std::filesystem::path &dir,
                        std::vector<RejectRow> *rejects_out = nullptr);

struct SplitEvaluation {
    TemporalSplit split;
    std::vector<EvalResult> results; // one per spec
    BaselineLift baseline;           // prior-bookings and prevalence baselines
    int oracle_positives = -1;       // filled by synthetic runs that know the truth
};

struct EvaluationRun {
    std::vector<SplitEvaluation> splits;
    std::vector<std::string> warnings;
    Leaderboard leaderboard;
};

// The inter-temporal loop: for each split, train every spec at
// (as_of - label window) and score the cohort at as_of. Splits whose cohort
// is smaller than k, or whose training labels are single-class, are skipped
// with a warning.
EvaluationRun run_intertemporal_evaluation(const EventLog &log, const ExperimentConfig &cfg,
                                           const std::vector<ModelSpec> &specs);

// Fits one spec at a given as_of (training cohort at as_of - label window is
// already leakage-safe for scoring dates >= as_of).
TrainedScorer train_at(const EventLog &log, const ExperimentConfig &cfg, const ModelSpec &spec,
                       Date as_of);

using MonthlyScorer = std::function<std::vector<std::pair<PersonId, double>>(
    const EventLog &, const std::vector<PersonId> &subset, Date month)>;

MonthlyScorer oracle_scorer(const SynthPopulation &pop);
MonthlyScorer model_scorer(const TrainedScorer &scorer, const FeatureSchema &schema);

struct TrialRun {
    TrialState state;
    std::vector<MonthlyRoster> rosters;
    EventLog working_log; // input log plus MCRT contacts generated along the way
};

// Monthly allocation loop. Simulated MCRT contacts for a share of each
// outreach list feed back into the working log and drive the contact
// exclusion in later months.
TrialRun run_trial_months(EventLog log, const ExperimentConfig &cfg, const MonthlyScorer &scorer,
                          bool inject_contacts = true);

struct AnalysisRun {
    std::vector<std::pair<int, std::vector<BalanceRow>>> balance; // per tier
    std::map<std::string, std::vector<EffectEstimate>> effects;   // table name -> rows
    std::vector<std::string> notes;
};

AnalysisRun run_analysis(const EventLog &log, const TrialState &state,
                         const ExperimentConfig &cfg);

// CLI subcommand bodies; shared with the acceptance suite so end-to-end runs
// are testable in-process. All artifact writers are deterministic.
void cmd_simulate(const ExperimentConfig &cfg, const std::filesystem::path &config_path);
void cmd_ingest(const ExperimentConfig &cfg, const std::filesystem::path &config_path);
void cmd_cohort(const ExperimentConfig &cfg, const std::filesystem::path &config_path, Date as_of);
void cmd_evaluate(const ExperimentConfig &cfg, const std::filesystem::path &config_path,
                  bool full_grid);
void cmd_train(const ExperimentConfig &cfg, const std::filesystem::path &config_path, Date as_of);
void cmd_audit_fairness(const ExperimentConfig &cfg, const std::filesystem::path &config_path,
                        Date as_of, int k);
void cmd_trial_run(const ExperimentConfig &cfg, const std::filesystem::path &config_path);
void cmd_analyze(const ExperimentConfig &cfg, const std::filesystem::path &config_path);
void cmd_replay(const ExperimentConfig &cfg, const std::filesystem::path &config_path);

} // namespace proact
