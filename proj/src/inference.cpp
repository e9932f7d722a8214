#include "proact/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "proact/csv.hpp"
#include "proact/event_store.hpp"

namespace proact {

namespace {

double age_at(Date when, int birth_year) {
    return static_cast<double>(when - Date::from_ymd(birth_year, 7, 1)) / 365.25;
}

double normal_two_sided_p(double z) { return std::erfc(std::abs(z) / std::sqrt(2.0)); }

} // namespace

std::vector<OutcomeRecord> compute_outcomes(const EventLog &log, const TrialState &state,
                                            const std::set<BookingType> &qualifying,
                                            bool include_partial) {
    std::vector<OutcomeRecord> out;

    // first appearances, in deterministic person order
    std::vector<std::pair<PersonId, Appearance>> entries;
    for (const auto &[id, h] : log.persons) {
        const auto *apps = state.appearances_of(id);
        if (apps && !apps->empty())
            entries.emplace_back(id, apps->front());
    }

    for (const auto &[id, first] : entries) {
        OutcomeRecord r;
        r.person = id;
        r.arm = first.arm;
        r.tier = first.tier;
        r.entry_month = first.month;
        Date win_start = first.month + 1;
        Date win_end = first.month + 365;
        r.partial_window = win_end > log.data_end;
        if (r.partial_window && !include_partial)
            continue;

        const PersonHistory *h = log.find(id);
        for (const Event &e : h->events) {
            if (e.date > win_end)
                break;
            bool in_window = e.date >= win_start;
            bool prior = e.date <= first.month;
            switch (e.kind) {
            case EventKind::mh_service:
                if (in_window && e.service_class == ServiceClass::care)
                    r.any_jcmhc_service = true;
                if (prior)
                    r.prior_jcmhc_services += 1;
                break;
            case EventKind::mh_admission:
                if (in_window)
                    r.any_jcmhc_admission = true;
                if (prior)
                    r.prior_jcmhc_admissions += 1;
                break;
            case EventKind::ambulance_run:
                if (in_window)
                    r.any_ambulance_run = true;
                break;
            case EventKind::arrest:
                if (in_window)
                    r.any_arrest = true;
                break;
            case EventKind::jail_booking:
                if (in_window && qualifying.count(e.booking_type))
                    r.any_jail_booking = true;
                if (prior)
                    r.prior_bookings += 1;
                break;
            default:
                break;
            }
        }
        r.days_in_jail = days_in_jail(log, id, win_start, win_end);
        r.prior_days_in_jail = days_in_jail(
            log, id, Date{std::numeric_limits<std::int32_t>::min() / 2}, first.month);
        r.prior_mh_utilization = r.prior_jcmhc_services + r.prior_jcmhc_admissions;

        bool hist_jcmhc = false, hist_screen = false, hist_ems = false;
        for (const Event &e : h->events) {
            if (e.date > first.month)
                break;
            switch (e.kind) {
            case EventKind::mh_service:
            case EventKind::mh_admission:
            case EventKind::mcrt_contact: hist_jcmhc = true; break;
            case EventKind::screening:
                if (e.screening_mh_flag)
                    hist_screen = true;
                break;
            case EventKind::ambulance_run:
                if (e.ems_flags.any())
                    hist_ems = true;
                break;
            default: break;
            }
        }
        r.mh_flag_count = (hist_jcmhc ? 1 : 0) + (hist_screen ? 1 : 0) + (hist_ems ? 1 : 0);

        if (h->has_demo && h->demo.birth_year > 0) {
            r.current_age = age_at(first.month, h->demo.birth_year);
            r.age_known = true;
        }
        for (const JailSpell &s : h->spells) {
            if (s.booking <= first.month) {
                if (h->has_demo && h->demo.birth_year > 0) {
                    r.age_at_first_booking = age_at(s.booking, h->demo.birth_year);
                    r.first_booking_known = true;
                }
                break;
            }
        }
        r.sex_male = h->has_demo && h->demo.sex == "male" ? 1.0 : 0.0;
        out.push_back(std::move(r));
    }
    return out;
}

OlsFit fit_ols_robust(const Matrix &X, const std::vector<double> &y,
                      const std::vector<std::string> &names) {
    if (names.size() != X.n_cols)
        throw std::invalid_argument("column name count does not match design");
    if (X.n_rows <= X.n_cols)
        throw std::invalid_argument("need more rows than columns");

    LeastSquares ls = solve_least_squares(X, y);
    if (ls.rank.deficient) {
        std::string msg = "rank-deficient design; collinear columns:";
        for (std::size_t c : ls.rank.dropped_columns)
            msg += " " + names[c];
        throw std::invalid_argument(msg);
    }

    const std::size_t n = X.n_rows;
    const std::size_t p = X.n_cols;

    // HC1 sandwich: n/(n-p) * (X'X)^-1 X' diag(e^2) X (X'X)^-1
    std::vector<std::vector<double>> meat(p, std::vector<double>(p, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
        double e2 = ls.residuals[r] * ls.residuals[r];
        for (std::size_t i = 0; i < p; ++i) {
            double xi = X.at(r, i) * e2;
            for (std::size_t j = 0; j <= i; ++j)
                meat[i][j] += xi * X.at(r, j);
        }
    }
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = i + 1; j < p; ++j)
            meat[i][j] = meat[j][i];

    double dof_adjust = static_cast<double>(n) / static_cast<double>(n - p);
    OlsFit fit;
    fit.names = names;
    fit.coef = ls.coef;
    fit.n = static_cast<int>(n);
    fit.robust_se.resize(p);
    fit.p_value.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        double var = 0.0;
        for (std::size_t a = 0; a < p; ++a)
            for (std::size_t b = 0; b < p; ++b)
                var += ls.xtx_inv[i][a] * meat[a][b] * ls.xtx_inv[b][i];
        var *= dof_adjust;
        fit.robust_se[i] = var > 0 ? std::sqrt(var) : 0.0;
        if (fit.robust_se[i] > 0)
            fit.p_value[i] = normal_two_sided_p(fit.coef[i] / fit.robust_se[i]);
        else
            fit.p_value[i] = fit.coef[i] == 0.0 ? 1.0 : 0.0;
    }
    return fit;
}

std::vector<BalanceRow> balance_table(const std::vector<OutcomeRecord> &records, int tier) {
    std::vector<const OutcomeRecord *> rows;
    for (const OutcomeRecord &r : records)
        if (r.tier == tier)
            rows.push_back(&r);
    bool has_trial = false, has_control = false;
    for (const OutcomeRecord *r : rows) {
        has_trial |= r->arm == Arm::trial;
        has_control |= r->arm == Arm::control;
    }
    if (!has_trial || !has_control)
        throw std::invalid_argument("balance table needs both arms in tier " +
                                    std::to_string(tier));

    struct Cov {
        const char *name;
        double (*get)(const OutcomeRecord &);
    };
    static const Cov covariates[] = {
        {"sex", [](const OutcomeRecord &r) { return r.sex_male; }},
        {"current_age", [](const OutcomeRecord &r) { return r.current_age; }},
        {"age_at_first_booking", [](const OutcomeRecord &r) { return r.age_at_first_booking; }},
        {"jail_bookings", [](const OutcomeRecord &r) { return r.prior_bookings; }},
        {"days_in_jail", [](const OutcomeRecord &r) { return r.prior_days_in_jail; }},
        {"jcmhc_admissions", [](const OutcomeRecord &r) { return r.prior_jcmhc_admissions; }},
        {"jcmhc_services", [](const OutcomeRecord &r) { return r.prior_jcmhc_services; }},
        {"mental_health_flags", [](const OutcomeRecord &r) { return r.mh_flag_count; }},
    };

    std::vector<BalanceRow> out;
    for (const Cov &cov : covariates) {
        BalanceRow row;
        row.covariate = cov.name;
        double first = cov.get(*rows.front());
        bool constant = true;
        for (const OutcomeRecord *r : rows)
            if (cov.get(*r) != first) {
                constant = false;
                break;
            }
        if (constant) {
            row.defined = false;
            out.push_back(std::move(row));
            continue;
        }
        Matrix X(rows.size(), 2);
        std::vector<double> y(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            X.at(i, 0) = 1.0;
            X.at(i, 1) = cov.get(*rows[i]);
            y[i] = rows[i]->arm == Arm::trial ? 1.0 : 0.0;
        }
        OlsFit fit = fit_ols_robust(X, y, {"intercept", cov.name});
        row.slope = fit.coef[1];
        row.se = fit.robust_se[1];
        row.p_value = fit.p_value[1];
        out.push_back(std::move(row));
    }
    return out;
}

std::vector<EffectEstimate> itt_effects(const std::vector<OutcomeRecord> &records,
                                        const IttOptions &options) {
    std::vector<const OutcomeRecord *> rows;
    for (const OutcomeRecord &r : records) {
        if (!options.tiers.count(r.tier))
            continue;
        if (options.pre_pandemic) {
            bool pre = r.entry_month < options.pandemic_threshold;
            if (pre != *options.pre_pandemic)
                continue;
        }
        rows.push_back(&r);
    }
    if (static_cast<int>(rows.size()) < options.min_records) {
        std::string stratum = "tiers{";
        for (int t : options.tiers)
            stratum += std::to_string(t) + ",";
        stratum += "}";
        if (options.pre_pandemic)
            stratum += *options.pre_pandemic ? " pre-pandemic" : " during-pandemic";
        throw std::invalid_argument("too few records (" + std::to_string(rows.size()) +
                                    ") after filtering " + stratum);
    }
    int n_trial = 0, n_control = 0;
    for (const OutcomeRecord *r : rows)
        (r->arm == Arm::trial ? n_trial : n_control) += 1;
    if (n_trial == 0 || n_control == 0)
        throw std::invalid_argument("a trial arm is empty after filtering");

    // medians over the analysis rows stand in for unknown ages
    auto median_of = [&](auto get, auto known) {
        std::vector<double> v;
        for (const OutcomeRecord *r : rows)
            if (known(*r))
                v.push_back(get(*r));
        if (v.empty())
            return 0.0;
        std::sort(v.begin(), v.end());
        std::size_t m = v.size();
        return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    };
    double med_age = median_of([](const OutcomeRecord &r) { return r.current_age; },
                               [](const OutcomeRecord &r) { return r.age_known; });
    double med_first = median_of([](const OutcomeRecord &r) { return r.age_at_first_booking; },
                                 [](const OutcomeRecord &r) { return r.first_booking_known; });

    const std::vector<std::string> names = {"intercept",
                                            "arm",
                                            "prior_bookings",
                                            "prior_days_in_jail",
                                            "prior_mh_utilization",
                                            "age_at_first_booking",
                                            "current_age",
                                            "sex"};
    Matrix X(rows.size(), names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const OutcomeRecord &r = *rows[i];
        X.at(i, 0) = 1.0;
        X.at(i, 1) = r.arm == Arm::trial ? 1.0 : 0.0;
        X.at(i, 2) = r.prior_bookings;
        X.at(i, 3) = r.prior_days_in_jail;
        X.at(i, 4) = r.prior_mh_utilization;
        X.at(i, 5) = r.first_booking_known ? r.age_at_first_booking : med_first;
        X.at(i, 6) = r.age_known ? r.current_age : med_age;
        X.at(i, 7) = r.sex_male;
    }

    struct Outcome {
        const char *name;
        bool binary;
        double (*get)(const OutcomeRecord &);
    };
    static const Outcome outcomes[] = {
        {"any_jcmhc_service", true,
         [](const OutcomeRecord &r) { return r.any_jcmhc_service ? 1.0 : 0.0; }},
        {"any_jcmhc_admission", true,
         [](const OutcomeRecord &r) { return r.any_jcmhc_admission ? 1.0 : 0.0; }},
        {"any_ambulance_run", true,
         [](const OutcomeRecord &r) { return r.any_ambulance_run ? 1.0 : 0.0; }},
        {"any_arrest", true, [](const OutcomeRecord &r) { return r.any_arrest ? 1.0 : 0.0; }},
        {"any_jail_booking", true,
         [](const OutcomeRecord &r) { return r.any_jail_booking ? 1.0 : 0.0; }},
        {"days_in_jail", false,
         [](const OutcomeRecord &r) { return static_cast<double>(r.days_in_jail); }},
    };

    std::vector<EffectEstimate> out;
    std::vector<double> y(rows.size());
    for (const Outcome &o : outcomes) {
        double control_sum = 0.0;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            y[i] = o.get(*rows[i]);
            if (rows[i]->arm == Arm::control)
                control_sum += y[i];
        }
        OlsFit fit = fit_ols_robust(X, y, names);
        EffectEstimate e;
        e.outcome = o.name;
        double scale = o.binary ? 100.0 : 1.0; // pp for binary outcomes
        e.control_mean = control_sum / n_control * (o.binary ? 100.0 : 1.0);
        e.coefficient = fit.coef[1] * scale;
        e.robust_se = fit.robust_se[1] * scale;
        e.p_value = fit.p_value[1];
        e.n_control = n_control;
        e.n_trial = n_trial;
        out.push_back(std::move(e));
    }
    return out;
}

void write_balance_table(const std::filesystem::path &path,
                         const std::vector<std::pair<int, std::vector<BalanceRow>>> &tiers) {
    CsvWriter w(path);
    w.row({"tier", "covariate", "slope", "robust_se", "p_value"});
    for (const auto &[tier, rows] : tiers)
        for (const BalanceRow &r : rows) {
            if (!r.defined) {
                w.row({std::to_string(tier), r.covariate, "constant", "", ""});
                continue;
            }
            w.row({std::to_string(tier), r.covariate, format_double(r.slope, 8),
                   format_double(r.se, 8), format_double(r.p_value, 8)});
        }
}

void write_effect_table(const std::filesystem::path &path,
                        const std::vector<EffectEstimate> &effects) {
    CsvWriter w(path);
    w.row({"outcome", "control_mean", "effect", "robust_se", "p_value", "n_control", "n_trial"});
    for (const EffectEstimate &e : effects)
        w.row({e.outcome, format_double(e.control_mean, 8), format_double(e.coefficient, 8),
               format_double(e.robust_se, 8), format_double(e.p_value, 8),
               std::to_string(e.n_control), std::to_string(e.n_trial)});
}

} // namespace proact
