#pragma once

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "proact/events.hpp"
#include "proact/linalg.hpp"
#include "proact/trial.hpp"

namespace proact {

// One trial participant, windowed from their first appearance on either
// list. Outcome window is (entry, entry + 365 days]; covariates are measured
// at entry from prior history only.
struct OutcomeRecord {
    PersonId person;
    Arm arm{};
    int tier = 0;
    Date entry_month;
    bool partial_window = false; // window extends past the data end

    bool any_jcmhc_service = false;   // mh_service with service_class = care
    bool any_jcmhc_admission = false;
    bool any_ambulance_run = false;
    bool any_arrest = false;          // both arrest types count
    bool any_jail_booking = false;    // qualifying booking types only
    int days_in_jail = 0;

    double prior_bookings = 0.0;
    double prior_days_in_jail = 0.0;
    double prior_jcmhc_services = 0.0;
    double prior_jcmhc_admissions = 0.0;
    double prior_mh_utilization = 0.0; // services + admissions
    double mh_flag_count = 0.0;        // how many of the three MH indicators are present
    double age_at_first_booking = 0.0;
    double current_age = 0.0;
    double sex_male = 0.0;
    bool age_known = false;
    bool first_booking_known = false;
};

// Builds one record per first-appearance person in the trial state. Records
// with incomplete follow-up windows are flagged and excluded unless
// include_partial is set.
std::vector<OutcomeRecord> compute_outcomes(
    const EventLog &log, const TrialState &state,
    const std::set<BookingType> &qualifying = {BookingType::on_view, BookingType::warrant,
                                               BookingType::bench_warrant},
    bool include_partial = false);

struct OlsFit {
    std::vector<std::string> names;
    std::vector<double> coef;
    std::vector<double> robust_se; // HC1
    std::vector<double> p_value;   // two-sided, normal approximation
    int n = 0;
};

// Least squares via pivoted QR with an HC1 sandwich covariance. Throws on a
// rank-deficient design, naming the collinear columns.
OlsFit fit_ols_robust(const Matrix &X, const std::vector<double> &y,
                      const std::vector<std::string> &names);

struct BalanceRow {
    std::string covariate;
    double slope = 0.0;
    double se = 0.0;
    double p_value = 0.0;
    bool defined = true; // false for constant covariates
};

// Table-2-style balance checks: per covariate, a bivariate robust regression
// of the trial-arm indicator on the covariate; reports the slope p-value.
std::vector<BalanceRow> balance_table(const std::vector<OutcomeRecord> &records, int tier);

struct EffectEstimate {
    std::string outcome;
    double control_mean = 0.0;
    double coefficient = 0.0; // percentage points for binary outcomes, days otherwise
    double robust_se = 0.0;
    double p_value = 0.0;
    int n_control = 0;
    int n_trial = 0;
};

struct IttOptions {
    std::set<int> tiers = {1};            // pooled when more than one
    std::optional<bool> pre_pandemic;     // entry month before the threshold
    Date pandemic_threshold = Date::from_ymd(2019, 10, 1);
    int min_records = 30;
};

// Robust OLS of each outcome on the arm indicator plus the six standard
// controls (prior bookings, prior days in jail, prior MH utilization, age at
// first booking, current age, sex).
std::vector<EffectEstimate> itt_effects(const std::vector<OutcomeRecord> &records,
                                        const IttOptions &options);

void write_balance_table(const std::filesystem::path &path,
                         const std::vector<std::pair<int, std::vector<BalanceRow>>> &tiers);
void write_effect_table(const std::filesystem::path &path,
                        const std::vector<EffectEstimate> &effects);

} // namespace proact
