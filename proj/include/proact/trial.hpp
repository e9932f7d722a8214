#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proact/events.hpp"

namespace proact {

enum class Arm { trial, control };
const char *to_string(Arm a);

struct Appearance {
    Date month;
    Arm arm{};
    int tier = 0;
};

struct SelectionSummary {
    Date month;
    Arm arm{};
    int tier = 0;
    int pool = 0;     // eligible pool size after exclusions
    int quota = 0;
    int selected = 0; // < quota means a recorded shortfall
};

// Durable trial bookkeeping backed by an append-only, hash-chained record
// log. Arm assignments and tier fixations are immutable once written; replay
// of a tampered log fails on the first inconsistent record.
class TrialState {
  public:
    explicit TrialState(std::uint64_t master_seed);

    std::uint64_t master_seed() const { return master_seed_; }

    // Fair coin keyed on (master seed, person id); first call persists the
    // draw, later calls return the stored arm.
    Arm assign_arm(const PersonId &person, Date when);
    std::optional<Arm> arm_of(const PersonId &person) const;

    std::optional<int> fixed_tier_of(const PersonId &person) const;
    const std::vector<Appearance> *appearances_of(const PersonId &person) const;
    const std::vector<Date> *contacts_of(const PersonId &person) const;
    const std::vector<SelectionSummary> &summaries() const { return summaries_; }

    void record_contact(const PersonId &person, Date when);
    // Pulls mcrt_contact events dated in [last sync, upto) into the state.
    void sync_contacts(const EventLog &log, Date upto);

    const std::vector<std::string> &records() const { return records_; }
    void save(const std::filesystem::path &path) const;
    // Verifies the hash chain and re-derives state; throws std::runtime_error
    // naming the first bad record.
    static TrialState load(const std::filesystem::path &path);

    // select_monthly bookkeeping; selection is the only writer
    void fix_tier(const PersonId &person, int tier, Date month);
    void record_selection(const PersonId &person, Date month, Arm arm, int tier, int pool_rank,
                          double score);
    void record_summary(const SelectionSummary &s);

  private:
    void append(const std::string &body);

    std::uint64_t master_seed_ = 0;
    std::map<PersonId, Arm> arms_;
    std::map<PersonId, Date> arm_dates_;
    std::map<PersonId, int> fixed_tiers_;
    std::map<PersonId, std::vector<Appearance>> appearances_;
    std::map<PersonId, std::vector<Date>> contacts_;
    std::vector<SelectionSummary> summaries_;
    std::vector<std::string> records_;
    std::string chain_ = "0000000000000000";
    std::optional<Date> contact_sync_cursor_;
};

struct RosterEntry {
    PersonId person;
    int tier = 0;
    int pool_rank = 0; // 1-based rank by score within the eligible pool
    double score = 0.0;
};

struct AuditNote {
    PersonId person;
    Arm arm{};
    int tier = 0; // effective tier at the time (0 = excluded score band)
    std::string note;
};

struct MonthlyRoster {
    Date month;
    std::map<int, std::vector<RosterEntry>> outreach;       // trial arm, by tier
    std::map<int, std::vector<RosterEntry>> control_shadow; // control arm, by tier
    std::vector<SelectionSummary> summaries;
    std::vector<AuditNote> audit;
};

struct TierQuotas {
    int tier1 = 40;
    int tier2 = 40;
    int tier3 = 20;
    int tier1_pool = 50;         // tier 1 samples from this many top-scored
    int contact_exclusion_days = 60;
    int reappearance_exclusion_months = 12;
};

// Quintile tiers over the month's subset ranking: top quintile -> 1, middle
// quintile -> 2, bottom two quintiles -> 3; the second quintile is outside
// the trial.
int tier_of(double rank_percentile);

// One month of the allocation protocol, applied independently per arm.
MonthlyRoster select_monthly(TrialState &state,
                             const std::vector<std::pair<PersonId, double>> &scores,
                             Date month, const TierQuotas &quotas = {});

// Outreach file is blind: shuffled person ids only. The sealed audit file
// keeps arms, tiers, ranks and scores and reloads to an identical roster.
void export_roster(const MonthlyRoster &roster, const std::filesystem::path &outreach_file,
                   const std::filesystem::path &audit_file, std::uint64_t shuffle_seed);
MonthlyRoster load_roster_audit(const std::filesystem::path &audit_file);

} // namespace proact
