#include "proact/trial.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "proact/csv.hpp"
#include "proact/rng.hpp"

namespace proact {

const char *to_string(Arm a) { return a == Arm::trial ? "trial" : "control"; }

namespace {

std::string hash_hex(std::uint64_t h) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace

TrialState::TrialState(std::uint64_t master_seed) : master_seed_(master_seed) {
    append("seed " + std::to_string(master_seed));
}

void TrialState::append(const std::string &body) {
    chain_ = hash_hex(fnv1a64(chain_ + "\n" + body));
    records_.push_back(body + "|" + chain_);
}

Arm TrialState::assign_arm(const PersonId &person, Date when) {
    auto it = arms_.find(person);
    if (it != arms_.end())
        return it->second;
    double u = static_cast<double>(mix64(master_seed_ ^ fnv1a64(person)) >> 11) * 0x1.0p-53;
    Arm arm = u < 0.5 ? Arm::trial : Arm::control;
    arms_[person] = arm;
    arm_dates_[person] = when;
    append("assign " + person + " " + to_string(arm) + " " + when.to_string());
    return arm;
}

std::optional<Arm> TrialState::arm_of(const PersonId &person) const {
    auto it = arms_.find(person);
    return it == arms_.end() ? std::nullopt : std::optional<Arm>{it->second};
}

std::optional<int> TrialState::fixed_tier_of(const PersonId &person) const {
    auto it = fixed_tiers_.find(person);
    return it == fixed_tiers_.end() ? std::nullopt : std::optional<int>{it->second};
}

const std::vector<Appearance> *TrialState::appearances_of(const PersonId &person) const {
    auto it = appearances_.find(person);
    return it == appearances_.end() ? nullptr : &it->second;
}

const std::vector<Date> *TrialState::contacts_of(const PersonId &person) const {
    auto it = contacts_.find(person);
    return it == contacts_.end() ? nullptr : &it->second;
}

void TrialState::record_contact(const PersonId &person, Date when) {
    contacts_[person].push_back(when);
    append("contact " + person + " " + when.to_string());
}

void TrialState::sync_contacts(const EventLog &log, Date upto) {
    Date from = contact_sync_cursor_.value_or(Date{std::numeric_limits<std::int32_t>::min() / 2});
    for (const auto &[id, h] : log.persons)
        for (const Event &e : h.events) {
            if (e.date >= upto)
                break;
            if (e.kind == EventKind::mcrt_contact && e.date >= from)
                record_contact(id, e.date);
        }
    contact_sync_cursor_ = upto;
}

void TrialState::fix_tier(const PersonId &person, int tier, Date month) {
    auto it = fixed_tiers_.find(person);
    if (it != fixed_tiers_.end()) {
        if (it->second != tier)
            throw std::logic_error("attempt to re-fix tier for " + person);
        return;
    }
    fixed_tiers_[person] = tier;
    append("fix " + person + " " + std::to_string(tier) + " " + month.to_string());
}

void TrialState::record_selection(const PersonId &person, Date month, Arm arm, int tier,
                                  int pool_rank, double score) {
    appearances_[person].push_back(Appearance{month, arm, tier});
    append("select " + month.to_string() + " " + to_string(arm) + " " + std::to_string(tier) +
           " " + person + " " + std::to_string(pool_rank) + " " + format_double(score, 17));
}

void TrialState::record_summary(const SelectionSummary &s) {
    summaries_.push_back(s);
    append("summary " + s.month.to_string() + " " + to_string(s.arm) + " " +
           std::to_string(s.tier) + " " + std::to_string(s.pool) + " " +
           std::to_string(s.quota) + " " + std::to_string(s.selected));
}

void TrialState::save(const std::filesystem::path &path) const {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write state log: " + path.string());
    for (const std::string &r : records_)
        out << r << '\n';
}

TrialState TrialState::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read state log: " + path.string());

    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!line.empty())
            lines.push_back(line);
    }
    if (lines.empty())
        throw std::runtime_error("state log is empty");

    auto integrity_error = [](std::size_t record, const std::string &why) {
        throw std::runtime_error("state log integrity failure at record " +
                                 std::to_string(record + 1) + ": " + why);
    };

    // verify the hash chain before applying anything
    std::string chain = "0000000000000000";
    std::vector<std::string> bodies;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::size_t bar = lines[i].rfind('|');
        if (bar == std::string::npos)
            integrity_error(i, "missing checksum");
        std::string body = lines[i].substr(0, bar);
        std::string recorded = lines[i].substr(bar + 1);
        chain = hash_hex(fnv1a64(chain + "\n" + body));
        if (chain != recorded)
            integrity_error(i, "checksum mismatch");
        bodies.push_back(std::move(body));
    }

    // record 1 must carry the seed
    std::istringstream first(bodies[0]);
    std::string tag;
    std::uint64_t seed = 0;
    first >> tag >> seed;
    if (tag != "seed")
        integrity_error(0, "expected seed record");

    TrialState state(seed);
    for (std::size_t i = 1; i < bodies.size(); ++i) {
        std::istringstream ss(bodies[i]);
        ss >> tag;
        if (tag == "assign") {
            std::string person, arm_s, date_s;
            ss >> person >> arm_s >> date_s;
            auto d = Date::parse(date_s);
            if (!d || (arm_s != "trial" && arm_s != "control"))
                integrity_error(i, "malformed assign record");
            Arm arm = arm_s == "trial" ? Arm::trial : Arm::control;
            auto it = state.arms_.find(person);
            if (it != state.arms_.end())
                integrity_error(i, "arm reassignment for " + person);
            // replay must agree with the keyed coin
            Arm expected = [&] {
                double u =
                    static_cast<double>(mix64(seed ^ fnv1a64(person)) >> 11) * 0x1.0p-53;
                return u < 0.5 ? Arm::trial : Arm::control;
            }();
            if (arm != expected)
                integrity_error(i, "arm does not match keyed randomization for " + person);
            state.arms_[person] = arm;
            state.arm_dates_[person] = *d;
            state.append("assign " + person + " " + arm_s + " " + date_s);
        } else if (tag == "contact") {
            std::string person, date_s;
            ss >> person >> date_s;
            auto d = Date::parse(date_s);
            if (!d)
                integrity_error(i, "malformed contact record");
            state.contacts_[person].push_back(*d);
            state.append("contact " + person + " " + date_s);
        } else if (tag == "fix") {
            std::string person, tier_s, date_s;
            ss >> person >> tier_s >> date_s;
            auto d = Date::parse(date_s);
            if (!d)
                integrity_error(i, "malformed fix record");
            if (state.fixed_tiers_.count(person))
                integrity_error(i, "tier re-fixation for " + person);
            state.fixed_tiers_[person] = std::stoi(tier_s);
            state.append("fix " + person + " " + tier_s + " " + date_s);
        } else if (tag == "select") {
            std::string date_s, arm_s, tier_s, person, rank_s, score_s;
            ss >> date_s >> arm_s >> tier_s >> person >> rank_s >> score_s;
            auto d = Date::parse(date_s);
            if (!d || (arm_s != "trial" && arm_s != "control"))
                integrity_error(i, "malformed select record");
            Arm arm = arm_s == "trial" ? Arm::trial : Arm::control;
            auto arm_it = state.arms_.find(person);
            if (arm_it == state.arms_.end() || arm_it->second != arm)
                integrity_error(i, "selection of " + person + " outside assigned arm");
            state.appearances_[person].push_back(Appearance{*d, arm, std::stoi(tier_s)});
            state.append("select " + date_s + " " + arm_s + " " + tier_s + " " + person + " " +
                         rank_s + " " + score_s);
        } else if (tag == "summary") {
            std::string date_s, arm_s;
            int tier, pool, quota, selected;
            ss >> date_s >> arm_s >> tier >> pool >> quota >> selected;
            auto d = Date::parse(date_s);
            if (!d)
                integrity_error(i, "malformed summary record");
            SelectionSummary s{*d, arm_s == "trial" ? Arm::trial : Arm::control, tier,
                               pool, quota, selected};
            state.summaries_.push_back(s);
            state.append("summary " + date_s + " " + arm_s + " " + std::to_string(tier) + " " +
                         std::to_string(pool) + " " + std::to_string(quota) + " " +
                         std::to_string(selected));
        } else {
            integrity_error(i, "unknown record type: " + tag);
        }
    }

    // the rebuilt chain must reproduce the file's chain exactly
    if (state.records_.size() != lines.size() || state.records_.back() != lines.back())
        throw std::runtime_error("state log replay diverged from stored records");
    return state;
}

int tier_of(double rank_percentile) {
    if (rank_percentile < 0.0 || rank_percentile > 1.0)
        throw std::invalid_argument("rank percentile outside [0,1]");
    if (rank_percentile < 0.20)
        return 1;
    if (rank_percentile < 0.40)
        return 0; // second quintile: outside the trial
    if (rank_percentile < 0.60)
        return 2;
    return 3;
}

namespace {

struct Candidate {
    PersonId person;
    double score = 0.0;
    std::uint64_t hash = 0;
    Arm arm{};
    int effective_tier = 0;
};

} // namespace

MonthlyRoster select_monthly(TrialState &state,
                             const std::vector<std::pair<PersonId, double>> &scores,
                             Date month, const TierQuotas &quotas) {
    MonthlyRoster roster;
    roster.month = month;

    // rank by score to assign current-month quintile tiers
    std::vector<Candidate> all;
    all.reserve(scores.size());
    for (const auto &[person, score] : scores)
        all.push_back(Candidate{person, score, fnv1a64(person), Arm::trial, 0});
    std::sort(all.begin(), all.end(), [](const Candidate &a, const Candidate &b) {
        if (a.score != b.score)
            return a.score > b.score;
        return a.hash < b.hash;
    });

    const std::size_t n = all.size();
    for (std::size_t r = 0; r < n; ++r) {
        Candidate &c = all[r];
        int current_tier = tier_of(static_cast<double>(r) / static_cast<double>(n));
        c.arm = state.assign_arm(c.person, month);
        auto fixed = state.fixed_tier_of(c.person);
        // Fixed individuals are selectable only in their fixed tier; everyone
        // else floats with the current score band.
        c.effective_tier = fixed.value_or(current_tier);
        if (fixed && *fixed != current_tier)
            roster.audit.push_back(AuditNote{c.person, c.arm, *fixed,
                                             "tier_drift:current=" +
                                                 std::to_string(current_tier)});
        else if (current_tier == 0)
            roster.audit.push_back(AuditNote{c.person, c.arm, 0, "score_band_excluded"});
    }

    auto excluded = [&](const Candidate &c, std::string &why) {
        if (const auto *apps = state.appearances_of(c.person)) {
            std::size_t cnt = apps->size();
            // every second appearance starts a twelve-month cooloff; a person
            // selected in months M and M+1 is next eligible at M+13
            if (cnt >= 2 && cnt % 2 == 0) {
                Date eligible_from =
                    apps->back().month.add_months(quotas.reappearance_exclusion_months);
                if (month < eligible_from) {
                    why = "repeat_exclusion_until_" + eligible_from.to_string();
                    return true;
                }
            }
        }
        if (const auto *contacts = state.contacts_of(c.person)) {
            for (Date d : *contacts)
                if (d >= month - quotas.contact_exclusion_days && d < month) {
                    why = "recent_contact_" + d.to_string();
                    return true;
                }
        }
        return false;
    };

    for (Arm arm : {Arm::trial, Arm::control}) {
        for (int tier : {1, 2, 3}) {
            std::vector<Candidate> pool;
            for (const Candidate &c : all) {
                if (c.arm != arm || c.effective_tier != tier)
                    continue;
                std::string why;
                if (excluded(c, why)) {
                    roster.audit.push_back(AuditNote{c.person, c.arm, tier, why});
                    continue;
                }
                pool.push_back(c);
            }
            // pool arrives sorted by (score desc, hash asc) from `all`
            int quota = tier == 1 ? quotas.tier1 : tier == 2 ? quotas.tier2 : quotas.tier3;

            std::vector<std::pair<Candidate, int>> sampling; // candidate + pool rank
            if (tier == 1) {
                int top = std::min<int>(quotas.tier1_pool, static_cast<int>(pool.size()));
                for (int i = 0; i < top; ++i)
                    sampling.emplace_back(pool[i], i + 1);
            } else {
                for (std::size_t i = 0; i < pool.size(); ++i)
                    sampling.emplace_back(pool[i], static_cast<int>(i) + 1);
            }

            Rng rng(derive_seed(state.master_seed(),
                                "roster|" + month.to_string() + "|" + to_string(arm) + "|" +
                                    std::to_string(tier)));
            int take = std::min<int>(quota, static_cast<int>(sampling.size()));
            for (int i = 0; i < take; ++i) {
                int j = i + static_cast<int>(
                                rng.below(static_cast<std::uint64_t>(sampling.size() - i)));
                std::swap(sampling[i], sampling[j]);
            }
            sampling.resize(take);
            std::sort(sampling.begin(), sampling.end(),
                      [](const auto &a, const auto &b) { return a.second < b.second; });

            auto &lists = arm == Arm::trial ? roster.outreach : roster.control_shadow;
            for (const auto &[cand, rank] : sampling) {
                state.fix_tier(cand.person, tier, month);
                state.record_selection(cand.person, month, arm, tier, rank, cand.score);
                lists[tier].push_back(RosterEntry{cand.person, tier, rank, cand.score});
                roster.audit.push_back(AuditNote{cand.person, arm, tier, "selected"});
            }
            SelectionSummary summary{month, arm, tier, static_cast<int>(pool.size()), quota,
                                     take};
            state.record_summary(summary);
            roster.summaries.push_back(summary);
        }
    }
    return roster;
}

void export_roster(const MonthlyRoster &roster, const std::filesystem::path &outreach_file,
                   const std::filesystem::path &audit_file, std::uint64_t shuffle_seed) {
    // blind outreach list: ids only, deterministic shuffle, no tier or rank
    std::vector<PersonId> ids;
    for (const auto &[tier, entries] : roster.outreach)
        for (const RosterEntry &e : entries)
            ids.push_back(e.person);
    Rng rng(derive_seed(shuffle_seed, "blind|" + roster.month.to_string()));
    for (std::size_t i = ids.size(); i > 1; --i)
        std::swap(ids[i - 1], ids[rng.below(i)]);
    if (ids.empty())
        std::cerr << "warning: empty outreach roster for " << roster.month.to_string() << "\n";
    CsvWriter outreach(outreach_file);
    outreach.row({"person_id"});
    for (const PersonId &id : ids)
        outreach.row({id});

    CsvWriter audit(audit_file);
    audit.row({"month", "list_type", "tier", "person_id", "pool_rank", "score", "note"});
    auto dump = [&](const std::map<int, std::vector<RosterEntry>> &lists, const char *type) {
        for (const auto &[tier, entries] : lists)
            for (const RosterEntry &e : entries)
                audit.row({roster.month.to_string(), type, std::to_string(tier), e.person,
                           std::to_string(e.pool_rank), format_double(e.score, 17), "selected"});
    };
    dump(roster.outreach, "outreach");
    dump(roster.control_shadow, "control");
    for (const SelectionSummary &s : roster.summaries)
        audit.row({roster.month.to_string(), "summary", std::to_string(s.tier), to_string(s.arm),
                   std::to_string(s.pool),
                   std::to_string(s.quota), std::to_string(s.selected)});
    for (const AuditNote &note : roster.audit) {
        if (note.note == "selected")
            continue; // already captured with rank and score
        audit.row({roster.month.to_string(), "note", std::to_string(note.tier), note.person, "",
                   "", note.note + ":" + to_string(note.arm)});
    }
}

MonthlyRoster load_roster_audit(const std::filesystem::path &audit_file) {
    CsvTable table = read_csv(audit_file);
    MonthlyRoster roster;
    bool have_month = false;
    for (const auto &row : table.rows) {
        if (row.size() < 7)
            throw std::runtime_error("bad roster audit row");
        auto month = Date::parse(row[0]);
        if (!month)
            throw std::runtime_error("bad roster audit month: " + row[0]);
        if (!have_month) {
            roster.month = *month;
            have_month = true;
        }
        const std::string &type = row[1];
        int tier = std::stoi(row[2]);
        if (type == "outreach" || type == "control") {
            RosterEntry e;
            e.person = row[3];
            e.tier = tier;
            e.pool_rank = std::stoi(row[4]);
            e.score = std::stod(row[5]);
            (type == "outreach" ? roster.outreach : roster.control_shadow)[tier].push_back(e);
        } else if (type == "summary") {
            SelectionSummary s;
            s.month = *month;
            s.tier = tier;
            s.arm = row[3] == "trial" ? Arm::trial : Arm::control;
            s.pool = std::stoi(row[4]);
            s.quota = std::stoi(row[5]);
            s.selected = std::stoi(row[6]);
            roster.summaries.push_back(s);
        }
        // "note" rows are informational only
    }
    return roster;
}

} // namespace proact
