#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "proact/cohort.hpp"
#include "proact/learners.hpp"

namespace proact {

struct TemporalSplit {
    Date as_of;                 // information cutoff and scoring date
    int label_window_days = 365;
};

// One split per month boundary in [start, end]; splits whose label window
// would run past data_end are dropped (the final split keeps a full window).
// When nothing survives, the warning is set and the list is empty.
std::vector<TemporalSplit> generate_splits(Date start, Date end, int label_window_days,
                                           Date data_end, std::string *warning = nullptr);

struct EvalResult {
    std::string spec_id;
    Date split_as_of;
    int k = 0;
    double precision_at_k = 0.0;
    std::array<double, 20> vigintile_rates{}; // label rate per 5% score band, best first
    double auc = 0.0;
    double prevalence = 0.0;
    int n = 0;
};

// Deterministic ranking: score descending, ties broken by the stable person
// hash ascending. Vigintile band sizes differ by at most one; their
// size-weighted mean reproduces the prevalence exactly.
EvalResult evaluate_topk(const std::vector<double> &scores, const std::vector<int> &labels,
                         const std::vector<PersonId> &persons, int k);

struct BaselineLift {
    double baseline_precision = 0.0;     // top-k by prior-year booking count
    double prevalence = 0.0;
    double lift_vs_prior_bookings = 0.0; // relative improvement, 0 = parity
    double lift_vs_prevalence = 0.0;     // fold increase
};

BaselineLift baseline_comparison(const EvalResult &result, const EventLog &log,
                                 const std::vector<PersonId> &persons,
                                 const std::vector<int> &labels, Date as_of);

struct LeaderboardRow {
    std::string spec_id;
    ModelFamily family{};
    std::string hyperparams_json;
    double mean_precision = 0.0;
    int best_frequency = 0; // splits where the spec was within epsilon of the best
    int n_splits = 0;
    std::map<std::string, double> per_split; // keyed by split date string
};

struct Leaderboard {
    std::vector<LeaderboardRow> rows; // ranked best first
    std::string winner_spec_id;
};

// Ranks by mean precision@k, then by how often the spec lands within
// epsilon of each split's best, then by smaller spec hash.
Leaderboard select_model(const std::vector<ModelSpec> &specs,
                         const std::vector<EvalResult> &results, double epsilon = 0.01);

void write_leaderboard(const std::filesystem::path &path, const Leaderboard &board);

} // namespace proact
