#include "proact/validation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "proact/csv.hpp"
#include "proact/rng.hpp"

namespace proact {

std::vector<TemporalSplit> generate_splits(Date start, Date end, int label_window_days,
                                           Date data_end, std::string *warning) {
    std::vector<TemporalSplit> out;
    if (start >= end)
        return out;
    for (Date d = start.month_floor(); d <= end; d = d.add_months(1)) {
        if (d + label_window_days <= data_end)
            out.push_back(TemporalSplit{d, label_window_days});
    }
    if (out.empty() && warning)
        *warning = "label window of " + std::to_string(label_window_days) +
                   " days leaves no evaluable split before " + data_end.to_string();
    return out;
}

namespace {

// Shared ranking: score desc, stable person hash asc. One ordering for
// evaluation, fairness audits and the prior-bookings baseline.
std::vector<std::size_t> rank_order(const std::vector<double> &scores,
                                    const std::vector<PersonId> &persons) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::uint64_t> hashes(persons.size());
    for (std::size_t i = 0; i < persons.size(); ++i)
        hashes[i] = fnv1a64(persons[i]);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b])
            return scores[a] > scores[b];
        return hashes[a] < hashes[b];
    });
    return order;
}

} // namespace

EvalResult evaluate_topk(const std::vector<double> &scores, const std::vector<int> &labels,
                         const std::vector<PersonId> &persons, int k) {
    const std::size_t n = scores.size();
    if (labels.size() != n || persons.size() != n)
        throw std::invalid_argument("scores/labels/persons size mismatch");
    if (k <= 0 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("k out of range for population of " + std::to_string(n));

    std::vector<std::size_t> order = rank_order(scores, persons);

    EvalResult r;
    r.k = k;
    r.n = static_cast<int>(n);
    int top_pos = 0;
    for (int i = 0; i < k; ++i)
        top_pos += labels[order[i]];
    r.precision_at_k = static_cast<double>(top_pos) / k;

    int total_pos = 0;
    for (int v : labels)
        total_pos += v;
    r.prevalence = static_cast<double>(total_pos) / n;

    for (int band = 0; band < 20; ++band) {
        std::size_t lo = band * n / 20;
        std::size_t hi = (band + 1) * n / 20;
        if (hi <= lo) {
            r.vigintile_rates[band] = 0.0;
            continue;
        }
        int pos = 0;
        for (std::size_t i = lo; i < hi; ++i)
            pos += labels[order[i]];
        r.vigintile_rates[band] = static_cast<double>(pos) / (hi - lo);
    }

    // AUC as the tie-corrected rank statistic
    std::vector<std::size_t> by_score(n);
    std::iota(by_score.begin(), by_score.end(), 0);
    std::sort(by_score.begin(), by_score.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[by_score[j]] == scores[by_score[i]])
            ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j)); // 1-based
        for (std::size_t t = i; t < j; ++t)
            if (labels[by_score[t]])
                rank_sum_pos += avg_rank;
        i = j;
    }
    int npos = total_pos;
    int nneg = static_cast<int>(n) - npos;
    if (npos > 0 && nneg > 0)
        r.auc = (rank_sum_pos - 0.5 * npos * (npos + 1.0)) /
                (static_cast<double>(npos) * nneg);
    else
        r.auc = 0.5;
    return r;
}

BaselineLift baseline_comparison(const EvalResult &result, const EventLog &log,
                                 const std::vector<PersonId> &persons,
                                 const std::vector<int> &labels, Date as_of) {
    if (persons.size() != labels.size())
        throw std::invalid_argument("persons/labels size mismatch");
    // rank by qualifying-window booking count over the prior year
    std::vector<double> counts(persons.size(), 0.0);
    for (std::size_t i = 0; i < persons.size(); ++i) {
        const PersonHistory *h = log.find(persons[i]);
        if (!h)
            continue;
        int c = 0;
        for (const Event &e : h->events) {
            if (e.date > as_of)
                break;
            if (e.kind == EventKind::jail_booking && e.date > as_of - 365)
                ++c;
        }
        counts[i] = c;
    }
    std::vector<std::size_t> order = rank_order(counts, persons);
    int pos = 0;
    for (int i = 0; i < result.k; ++i)
        pos += labels[order[i]];

    BaselineLift lift;
    lift.baseline_precision = static_cast<double>(pos) / result.k;
    lift.prevalence = result.prevalence;
    lift.lift_vs_prior_bookings =
        lift.baseline_precision > 0 ? result.precision_at_k / lift.baseline_precision - 1.0 : 0.0;
    lift.lift_vs_prevalence =
        lift.prevalence > 0 ? result.precision_at_k / lift.prevalence : 0.0;
    return lift;
}

Leaderboard select_model(const std::vector<ModelSpec> &specs,
                         const std::vector<EvalResult> &results, double epsilon) {
    std::map<std::string, const ModelSpec *> by_id;
    for (const ModelSpec &s : specs)
        by_id[s.id()] = &s;

    // best precision per split
    std::map<std::int32_t, double> split_best;
    for (const EvalResult &r : results) {
        auto [it, fresh] = split_best.emplace(r.split_as_of.days(), r.precision_at_k);
        if (!fresh)
            it->second = std::max(it->second, r.precision_at_k);
    }

    struct Agg {
        double sum = 0.0;
        int n = 0;
        int best_freq = 0;
        std::map<std::string, double> per_split;
    };
    std::map<std::string, Agg> agg;
    for (const EvalResult &r : results) {
        Agg &a = agg[r.spec_id];
        a.sum += r.precision_at_k;
        a.n += 1;
        if (r.precision_at_k >= split_best[r.split_as_of.days()] - epsilon)
            a.best_freq += 1;
        a.per_split[r.split_as_of.to_string()] = r.precision_at_k;
    }

    Leaderboard board;
    for (auto &[id, a] : agg) {
        auto spec_it = by_id.find(id);
        if (spec_it == by_id.end())
            throw std::invalid_argument("result references unknown spec: " + id);
        LeaderboardRow row;
        row.spec_id = id;
        row.family = spec_it->second->family;
        row.hyperparams_json = nlohmann::json(spec_it->second->hyperparams).dump();
        row.mean_precision = a.n ? a.sum / a.n : 0.0;
        row.best_frequency = a.best_freq;
        row.n_splits = a.n;
        row.per_split = std::move(a.per_split);
        board.rows.push_back(std::move(row));
    }
    std::sort(board.rows.begin(), board.rows.end(),
              [&](const LeaderboardRow &a, const LeaderboardRow &b) {
                  if (a.mean_precision != b.mean_precision)
                      return a.mean_precision > b.mean_precision;
                  if (a.best_frequency != b.best_frequency)
                      return a.best_frequency > b.best_frequency;
                  return fnv1a64(a.spec_id) < fnv1a64(b.spec_id);
              });
    if (!board.rows.empty())
        board.winner_spec_id = board.rows.front().spec_id;
    return board;
}

void write_leaderboard(const std::filesystem::path &path, const Leaderboard &board) {
    // union of split columns across rows, sorted
    std::vector<std::string> split_cols;
    for (const LeaderboardRow &row : board.rows)
        for (const auto &[split, v] : row.per_split)
            if (std::find(split_cols.begin(), split_cols.end(), split) == split_cols.end())
                split_cols.push_back(split);
    std::sort(split_cols.begin(), split_cols.end());

    CsvWriter w(path, '\t');
    std::vector<std::string> header = {"spec_id", "family", "hyperparams", "mean_precision_at_k",
                                       "best_frequency", "n_splits"};
    for (const std::string &s : split_cols)
        header.push_back("split_" + s);
    w.row(header);
    for (const LeaderboardRow &row : board.rows) {
        std::vector<std::string> fields = {row.spec_id,
                                           to_string(row.family),
                                           row.hyperparams_json,
                                           format_double(row.mean_precision, 10),
                                           std::to_string(row.best_frequency),
                                           std::to_string(row.n_splits)};
        for (const std::string &s : split_cols) {
            auto it = row.per_split.find(s);
            fields.push_back(it == row.per_split.end() ? "" : format_double(it->second, 10));
        }
        w.row(fields);
    }
}

} // namespace proact
