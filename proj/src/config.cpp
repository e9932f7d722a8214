#include "proact/config.hpp"

#include <fstream>

namespace proact {

namespace {

std::string trim(const std::string &s) {
    std::size_t a = s.find_first_not_of(" \t");
    if (a == std::string::npos)
        return "";
    std::size_t b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_list(const std::string &value, char delim = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= value.size()) {
        std::size_t pos = value.find(delim, start);
        std::string item =
            trim(value.substr(start, pos == std::string::npos ? pos : pos - start));
        if (!item.empty())
            out.push_back(item);
        if (pos == std::string::npos)
            break;
        start = pos + 1;
    }
    return out;
}

int parse_int(const std::string &field, const std::string &v) {
    try {
        std::size_t used = 0;
        int out = std::stoi(v, &used);
        if (used != v.size())
            throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception &) {
        throw ConfigError(field, "expected integer, got '" + v + "'");
    }
}

double parse_real(const std::string &field, const std::string &v) {
    try {
        std::size_t used = 0;
        double out = std::stod(v, &used);
        if (used != v.size())
            throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception &) {
        throw ConfigError(field, "expected number, got '" + v + "'");
    }
}

std::uint64_t parse_u64(const std::string &field, const std::string &v) {
    try {
        std::size_t used = 0;
        std::uint64_t out = std::stoull(v, &used);
        if (used != v.size())
            throw std::invalid_argument("trailing characters");
        return out;
    } catch (const std::exception &) {
        throw ConfigError(field, "expected unsigned integer, got '" + v + "'");
    }
}

Date parse_date(const std::string &field, const std::string &v) {
    auto d = Date::parse(v);
    if (!d)
        throw ConfigError(field, "expected YYYY-MM-DD date, got '" + v + "'");
    return *d;
}

int parse_window(const std::string &field, const std::string &v) {
    if (v == "all")
        return 0;
    int days = parse_int(field, v);
    if (days <= 0)
        throw ConfigError(field, "window must be positive or 'all'");
    return days;
}

PlantedEffects parse_planted(const std::string &field, const std::string &v) {
    PlantedEffects fx;
    for (const std::string &item : split_list(v)) {
        std::size_t colon = item.find(':');
        if (colon == std::string::npos)
            throw ConfigError(field, "expected outcome:delta pairs, got '" + item + "'");
        std::string outcome = trim(item.substr(0, colon));
        double delta = parse_real(field, trim(item.substr(colon + 1)));
        if (outcome == "service")
            fx.service_pp = delta;
        else if (outcome == "admission")
            fx.admission_pp = delta;
        else if (outcome == "ambulance")
            fx.ambulance_pp = delta;
        else if (outcome == "arrest")
            fx.arrest_pp = delta;
        else if (outcome == "booking")
            fx.booking_pp = delta;
        else if (outcome == "days")
            fx.days_in_jail = delta;
        else
            throw ConfigError(field, "unknown planted outcome '" + outcome + "'");
    }
    return fx;
}

} // namespace

ExperimentConfig ExperimentConfig::from_keys(const std::map<std::string, std::string> &keys) {
    ExperimentConfig cfg;
    bool schema_touched = false;

    for (const auto &[key, value] : keys) {
        if (key == "data.dir") {
            cfg.data_dir = value;
        } else if (key == "out.dir") {
            cfg.out_dir = value;
        } else if (key == "seed") {
            cfg.seed = parse_u64(key, value);
        } else if (key == "cohort.lookback_days") {
            cfg.lookback_days = parse_int(key, value);
            if (cfg.lookback_days <= 0)
                throw ConfigError(key, "must be positive");
        } else if (key == "cohort.label_window_days") {
            cfg.label_window_days = parse_int(key, value);
            if (cfg.label_window_days <= 0)
                throw ConfigError(key, "must be positive");
        } else if (key == "cohort.qualifying_booking_types") {
            cfg.qualifying_booking_types.clear();
            for (const std::string &t : split_list(value)) {
                auto bt = booking_type_from(t);
                if (!bt)
                    throw ConfigError(key, "unknown booking type '" + t + "'");
                cfg.qualifying_booking_types.insert(*bt);
            }
            if (cfg.qualifying_booking_types.empty())
                throw ConfigError(key, "needs at least one type");
        } else if (key == "features.count_windows") {
            cfg.feature_schema.count_windows.clear();
            for (const std::string &w : split_list(value))
                cfg.feature_schema.count_windows.push_back(parse_window(key, w));
            schema_touched = true;
        } else if (key == "features.jail_day_windows") {
            cfg.feature_schema.jail_day_windows.clear();
            for (const std::string &w : split_list(value))
                cfg.feature_schema.jail_day_windows.push_back(parse_window(key, w));
            schema_touched = true;
        } else if (key == "splits.start") {
            cfg.splits_start = parse_date(key, value);
        } else if (key == "splits.end") {
            cfg.splits_end = parse_date(key, value);
        } else if (key == "evaluation.k") {
            cfg.k = parse_int(key, value);
            if (cfg.k <= 0)
                throw ConfigError(key, "must be positive");
        } else if (key == "evaluation.select_epsilon") {
            cfg.select_epsilon = parse_real(key, value);
        } else if (key == "grid.tree.criterion") {
            cfg.grid.tree_params["criterion"] = split_list(value);
        } else if (key == "grid.tree.n_estimators") {
            cfg.grid.tree_params["n_estimators"] = split_list(value);
        } else if (key == "grid.tree.min_samples_split") {
            cfg.grid.tree_params["min_samples_split"] = split_list(value);
        } else if (key == "grid.tree.max_depth") {
            cfg.grid.tree_params["max_depth"] = split_list(value);
        } else if (key == "grid.tree.max_features") {
            cfg.grid.tree_params["max_features"] = split_list(value);
        } else if (key == "grid.logistic.penalty") {
            cfg.grid.logistic_params["penalty"] = split_list(value);
        } else if (key == "grid.logistic.C") {
            cfg.grid.logistic_params["C"] = split_list(value);
        } else if (key == "grid.rank_one.features") {
            cfg.grid.rank_one_features = split_list(value);
        } else if (key == "grid.thresholder.rules") {
            cfg.grid.thresholder_rules = split_list(value, '|');
        } else if (key == "grid.desk_tree_cap") {
            cfg.desk_tree_cap = parse_int(key, value);
        } else if (key == "trial.start_month") {
            cfg.trial_start_month = parse_date(key, value);
        } else if (key == "trial.months") {
            cfg.trial_months = parse_int(key, value);
        } else if (key == "trial.tier1_quota") {
            cfg.quotas.tier1 = parse_int(key, value);
        } else if (key == "trial.tier2_quota") {
            cfg.quotas.tier2 = parse_int(key, value);
        } else if (key == "trial.tier3_quota") {
            cfg.quotas.tier3 = parse_int(key, value);
        } else if (key == "trial.tier1_pool") {
            cfg.quotas.tier1_pool = parse_int(key, value);
        } else if (key == "trial.contact_exclusion_days") {
            cfg.quotas.contact_exclusion_days = parse_int(key, value);
        } else if (key == "trial.reappearance_exclusion_months") {
            cfg.quotas.reappearance_exclusion_months = parse_int(key, value);
        } else if (key == "trial.scorer") {
            if (value != "oracle" && value.rfind("model:", 0) != 0)
                throw ConfigError(key, "expected 'oracle' or 'model:<path>'");
            cfg.trial_scorer = value;
        } else if (key == "trial.contact_success_prob") {
            cfg.contact_success_prob = parse_real(key, value);
        } else if (key == "analysis.pandemic_threshold") {
            cfg.pandemic_threshold = parse_date(key, value);
        } else if (key == "analysis.min_records") {
            cfg.min_analysis_records = parse_int(key, value);
        } else if (key == "analysis.alpha") {
            cfg.alpha = parse_real(key, value);
        } else if (key == "fairness.reference_group") {
            cfg.fairness_reference = value;
        } else if (key == "fairness.min_group_size") {
            cfg.fairness_min_group_size = parse_int(key, value);
        } else if (key == "simulate.n_persons") {
            cfg.sim.n_persons = parse_int(key, value);
        } else if (key == "simulate.span_start") {
            cfg.sim.span_start = parse_date(key, value);
        } else if (key == "simulate.span_end") {
            cfg.sim.span_end = parse_date(key, value);
        } else if (key == "simulate.risk_exponent") {
            cfg.sim.risk_exponent = parse_real(key, value);
        } else if (key == "simulate.mh_latent_prob") {
            cfg.sim.mh_latent_prob = parse_real(key, value);
        } else if (key == "simulate.in_county_prob") {
            cfg.sim.in_county_prob = parse_real(key, value);
        } else if (key == "simulate.booking_rate") {
            auto parts = split_list(value);
            if (parts.size() != 2)
                throw ConfigError(key, "expected base,slope");
            cfg.sim.booking = {parse_real(key, parts[0]), parse_real(key, parts[1])};
        } else if (key == "simulate.planted.tier1") {
            cfg.sim.planted_effects[1] = parse_planted(key, value);
        } else if (key == "simulate.planted.tier2") {
            cfg.sim.planted_effects[2] = parse_planted(key, value);
        } else if (key == "simulate.planted.tier3") {
            cfg.sim.planted_effects[3] = parse_planted(key, value);
        } else {
            throw ConfigError(key, "unknown configuration key");
        }
    }

    if (schema_touched)
        cfg.feature_schema.finalize();
    if (cfg.splits_start >= cfg.splits_end)
        throw ConfigError("splits.start", "must precede splits.end");
    cfg.sim.master_seed = cfg.seed;
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path.string(), "cannot open configuration file");
    std::map<std::string, std::string> keys;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        std::string stripped = trim(line);
        if (stripped.empty() || stripped[0] == '#')
            continue;
        std::size_t eq = stripped.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(line_no), "expected key = value");
        std::string key = trim(stripped.substr(0, eq));
        std::string value = trim(stripped.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(line_no), "empty key");
        if (keys.count(key))
            throw ConfigError(key, "duplicate key");
        keys[key] = value;
    }
    return from_keys(keys);
}

void write_default_config(const std::filesystem::path &path) {
    std::ofstream out(path);
    out << "# proact experiment configuration (paper protocol defaults)\n"
           "data.dir = data\n"
           "out.dir = out\n"
           "seed = 20190501\n"
           "\n"
           "cohort.lookback_days = 1095\n"
           "cohort.label_window_days = 365\n"
           "cohort.qualifying_booking_types = on_view,warrant,bench_warrant\n"
           "\n"
           "splits.start = 2013-01-01\n"
           "splits.end = 2018-05-01\n"
           "evaluation.k = 100\n"
           "\n"
           "grid.tree.criterion = gini,entropy\n"
           "grid.tree.n_estimators = 100,1000,5000\n"
           "grid.tree.min_samples_split = 10,25,100\n"
           "grid.tree.max_depth = 5,10,50\n"
           "grid.tree.max_features = sqrt\n"
           "grid.logistic.penalty = l1,l2\n"
           "grid.logistic.C = 0.001,0.1,1,10\n"
           "grid.rank_one.features = booking_count_1y,booking_count_5y\n"
           "grid.thresholder.rules = any_mh_history|release_within_1m|release_within_3m|"
           "release_within_6m|release_within_1y\n"
           "grid.desk_tree_cap = 100\n"
           "\n"
           "trial.start_month = 2019-05-01\n"
           "trial.months = 9\n"
           "trial.tier1_quota = 40\n"
           "trial.tier2_quota = 40\n"
           "trial.tier3_quota = 20\n"
           "trial.tier1_pool = 50\n"
           "trial.contact_exclusion_days = 60\n"
           "trial.reappearance_exclusion_months = 12\n"
           "trial.scorer = oracle\n"
           "trial.contact_success_prob = 0.5\n"
           "\n"
           "analysis.pandemic_threshold = 2019-10-01\n"
           "analysis.min_records = 30\n"
           "analysis.alpha = 0.05\n"
           "\n"
           "fairness.reference_group = white\n"
           "fairness.min_group_size = 50\n"
           "\n"
           "simulate.n_persons = 10000\n"
           "simulate.span_start = 2012-01-01\n"
           "simulate.span_end = 2020-12-31\n"
           "simulate.mh_latent_prob = 0.35\n"
           "simulate.in_county_prob = 0.86\n"
           "simulate.planted.tier1 = service:10.8,admission:4.5,ambulance:-2.9,arrest:-6.0,"
           "booking:-3.7,days:-11.8\n"
           "simulate.planted.tier2 = service:4.0,ambulance:-2.9,days:-2.0\n"
           "simulate.planted.tier3 = service:2.0\n";
}

} // namespace proact
