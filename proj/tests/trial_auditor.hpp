#pragma once

// Post-hoc auditor for trial state logs. Re-derives every protocol
// constraint from the raw record stream and the paper rules; it shares no
// eligibility code with the engine it audits.

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "proact/dates.hpp"
#include "proact/rng.hpp"
#include "proact/trial.hpp"

namespace proact::audit {

struct AuditReport {
    std::vector<std::string> violations;
    int selections = 0;
    int persons = 0;
    bool ok() const { return violations.empty(); }
};

inline AuditReport audit_state_records(const std::vector<std::string> &records,
                                       int tier1_quota = 40, int tier2_quota = 40,
                                       int tier3_quota = 20, int tier1_pool_cap = 50,
                                       int contact_days = 60, int exclusion_months = 12) {
    AuditReport report;
    auto violation = [&](const std::string &msg) { report.violations.push_back(msg); };

    std::uint64_t seed = 0;
    bool have_seed = false;
    std::map<std::string, std::string> arm_of;
    std::map<std::string, int> fixed_tier;
    std::map<std::string, std::vector<Date>> contacts;
    struct Selection {
        Date month;
        std::string arm;
        int tier;
        int rank;
    };
    std::map<std::string, std::vector<Selection>> selections;
    std::set<std::string> outreach_ever, control_ever;
    struct Summary {
        int pool, quota, selected;
    };
    std::map<std::string, Summary> summaries; // key month|arm|tier
    std::map<std::string, int> select_counts;

    for (const std::string &line : records) {
        std::string body = line.substr(0, line.rfind('|'));
        std::istringstream ss(body);
        std::string tag;
        ss >> tag;
        if (tag == "seed") {
            ss >> seed;
            have_seed = true;
        } else if (tag == "assign") {
            std::string person, arm, date;
            ss >> person >> arm >> date;
            if (arm_of.count(person))
                violation("re-assignment of " + person);
            arm_of[person] = arm;
            if (have_seed) {
                double u = static_cast<double>(mix64(seed ^ fnv1a64(person)) >> 11) * 0x1.0p-53;
                std::string expected = u < 0.5 ? "trial" : "control";
                if (arm != expected)
                    violation("assignment of " + person + " disagrees with the keyed coin");
            }
        } else if (tag == "contact") {
            std::string person, date;
            ss >> person >> date;
            contacts[person].push_back(*Date::parse(date));
        } else if (tag == "fix") {
            std::string person, tier, date;
            ss >> person >> tier >> date;
            if (fixed_tier.count(person))
                violation("tier re-fixation of " + person);
            fixed_tier[person] = std::stoi(tier);
        } else if (tag == "select") {
            std::string date, arm, tier, person, rank, score;
            ss >> date >> arm >> tier >> person >> rank >> score;
            Selection s{*Date::parse(date), arm, std::stoi(tier), std::stoi(rank)};
            selections[person].push_back(s);
            select_counts[date + "|" + arm + "|" + tier] += 1;
            (arm == "trial" ? outreach_ever : control_ever).insert(person);
            ++report.selections;
        } else if (tag == "summary") {
            std::string date, arm;
            int tier, pool, quota, selected;
            ss >> date >> arm >> tier >> pool >> quota >> selected;
            summaries[date + "|" + arm + "|" + std::to_string(tier)] =
                Summary{pool, quota, selected};
        }
    }
    report.persons = static_cast<int>(arm_of.size());

    // constraint 1 fallout: selections must match the recorded arm
    for (const auto &[person, sel] : selections) {
        auto arm_it = arm_of.find(person);
        if (arm_it == arm_of.end()) {
            violation("selection of unassigned person " + person);
            continue;
        }
        for (const Selection &s : sel)
            if (s.arm != arm_it->second)
                violation("selection of " + person + " outside assigned arm");
    }

    // constraint 2: tier fixation
    for (const auto &[person, sel] : selections) {
        auto fix_it = fixed_tier.find(person);
        if (fix_it == fixed_tier.end()) {
            violation("selected person without a fix record: " + person);
            continue;
        }
        for (const Selection &s : sel)
            if (s.tier != fix_it->second)
                violation(person + " selected in tier " + std::to_string(s.tier) +
                          " but fixed to " + std::to_string(fix_it->second));
    }

    // constraint 3: at most monthly appearances, and every second appearance
    // starts a twelve-month exclusion (selected in M and M+1 -> next at M+13)
    for (const auto &[person, sel] : selections) {
        for (std::size_t i = 1; i < sel.size(); ++i) {
            if (sel[i].month <= sel[i - 1].month)
                violation(person + " selected twice in one month or out of order");
            if (i % 2 == 0) { // 3rd, 5th, ... appearance (0-based even index)
                Date eligible_from = sel[i - 1].month.add_months(exclusion_months);
                if (sel[i].month < eligible_from)
                    violation(person + " reappeared at " + sel[i].month.to_string() +
                              " before " + eligible_from.to_string());
            }
        }
    }

    // constraint 4: no selection within the contact exclusion window
    for (const auto &[person, sel] : selections) {
        auto c_it = contacts.find(person);
        if (c_it == contacts.end())
            continue;
        for (const Selection &s : sel)
            for (Date c : c_it->second)
                if (c >= s.month - contact_days && c < s.month)
                    violation(person + " selected at " + s.month.to_string() +
                              " despite contact on " + c.to_string());
    }

    // constraint 5: quota and shortfall accounting
    for (const auto &[key, s] : summaries) {
        int tier = key.back() - '0';
        int quota = tier == 1 ? tier1_quota : tier == 2 ? tier2_quota : tier3_quota;
        if (s.quota != quota)
            violation("summary quota mismatch at " + key);
        int expected = tier == 1 ? std::min(quota, std::min(s.pool, tier1_pool_cap))
                                 : std::min(quota, s.pool);
        if (s.selected != expected)
            violation("summary accounting at " + key + ": selected " +
                      std::to_string(s.selected) + ", expected " + std::to_string(expected));
        auto count_it = select_counts.find(key);
        int actual = count_it == select_counts.end() ? 0 : count_it->second;
        if (actual != s.selected)
            violation("select records at " + key + " disagree with summary");
    }
    // tier-1 sampling stayed within the top of the pool
    for (const auto &[person, sel] : selections)
        for (const Selection &s : sel)
            if (s.tier == 1 && s.rank > tier1_pool_cap)
                violation(person + " drawn from tier-1 rank " + std::to_string(s.rank));

    for (const std::string &p : outreach_ever)
        if (control_ever.count(p))
            violation(p + " appears on both outreach and control lists");

    return report;
}

} // namespace proact::audit
