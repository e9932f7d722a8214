#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proact/events.hpp"

namespace proact {

struct GroupStats {
    int n = 0;
    int positives = 0;
    int selected = 0;
    int true_positives = 0;
    double recall = 0.0;    // undefined when positives == 0 (recall_defined false)
    double precision = 0.0; // undefined when selected == 0
    bool recall_defined = false;
    bool precision_defined = false;
};

struct GroupAudit {
    int k = 0;
    std::string reference;
    std::map<std::string, GroupStats> groups;
    // recall(reference) / recall(group); undefined ratios are flagged, never 0 or inf
    std::map<std::string, double> disparity_ratio;
    std::map<std::string, bool> ratio_defined;
};

// Per-group recall/precision among the global top-k (same deterministic
// ordering as evaluate_topk). Groups must cover the population.
GroupAudit group_metrics_at_k(const std::vector<double> &scores, const std::vector<int> &labels,
                              const std::vector<PersonId> &persons,
                              const std::vector<std::string> &groups, int k,
                              const std::string &reference);

struct RocCurve {
    std::vector<std::pair<double, double>> points; // (fpr, tpr), monotone
    double auc = 0.0;
};

// Threshold sweep per group; groups with a single class are omitted with a
// warning. AUC by trapezoid rule (equals the tie-corrected rank statistic).
std::map<std::string, RocCurve> roc_by_group(const std::vector<double> &scores,
                                             const std::vector<int> &labels,
                                             const std::vector<std::string> &groups,
                                             std::vector<std::string> *warnings = nullptr);

struct RecallEqualization {
    std::map<std::string, int> per_group_k;
    std::map<std::string, double> achieved_recall;
    bool feasible = true; // false when the recall spread exceeds one selection step
};

// Greedy water-filling over per-group recall step functions: each slot goes
// to the group with the lowest achieved recall (ties: fewest selected, then
// higher next candidate score, then group name). Selects exactly total_k.
RecallEqualization equalize_recall_thresholds(const std::vector<double> &scores,
                                              const std::vector<int> &labels,
                                              const std::vector<PersonId> &persons,
                                              const std::vector<std::string> &groups,
                                              int total_k);

void write_group_audit(const std::filesystem::path &path, const GroupAudit &audit);
void write_roc_points(const std::filesystem::path &dir, const std::string &prefix,
                      const std::map<std::string, RocCurve> &curves);

} // namespace proact
