#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "proact/cohort.hpp"
#include "proact/features.hpp"
#include "proact/learners.hpp"
#include "proact/synth.hpp"
#include "proact/trial.hpp"

namespace proact {

// Raised for malformed configuration; always names the offending field.
class ConfigError : public std::runtime_error {
  public:
    ConfigError(const std::string &field, const std::string &why)
        : std::runtime_error("config field '" + field + "': " + why), field_(field) {}
    const std::string &field() const { return field_; }

  private:
    std::string field_;
};

// Parsed experiment configuration. File format is line-oriented
// `key = value` with '#' comments; every key is explicit and unknown keys
// are rejected. Defaults reproduce the published protocol constants.
struct ExperimentConfig {
    std::filesystem::path data_dir = "data";
    std::filesystem::path out_dir = "out";
    std::uint64_t seed = 20190501;

    int lookback_days = 1095;
    int label_window_days = 365;
    std::set<BookingType> qualifying_booking_types = {
        BookingType::on_view, BookingType::warrant, BookingType::bench_warrant};

    FeatureSchema feature_schema = FeatureSchema::standard();

    Date splits_start = Date::from_ymd(2013, 1, 1);
    Date splits_end = Date::from_ymd(2018, 5, 1);
    int k = 100;
    double select_epsilon = 0.01;

    GridConfig grid = GridConfig::paper_grid();
    int desk_tree_cap = 100; // --full-grid lifts this cap

    Date trial_start_month = Date::from_ymd(2019, 5, 1);
    int trial_months = 9;
    TierQuotas quotas;
    std::string trial_scorer = "oracle"; // "oracle" or "model:<path>"
    double contact_success_prob = 0.5;

    Date pandemic_threshold = Date::from_ymd(2019, 10, 1);
    int min_analysis_records = 30;
    double alpha = 0.05;

    std::string fairness_reference = "white";
    int fairness_min_group_size = 50;

    SimConfig sim;

    static ExperimentConfig from_file(const std::filesystem::path &path);
    static ExperimentConfig from_keys(const std::map<std::string, std::string> &keys);
};

void write_default_config(const std::filesystem::path &path);

} // namespace proact
