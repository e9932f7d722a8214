#include "proact/fairness.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "proact/csv.hpp"
#include "proact/rng.hpp"

namespace proact {

namespace {

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

GroupAudit group_metrics_at_k(const std::vector<double> &scores, const std::vector<int> &labels,
                              const std::vector<PersonId> &persons,
                              const std::vector<std::string> &groups, int k,
                              const std::string &reference) {
    const std::size_t n = scores.size();
    if (labels.size() != n || persons.size() != n || groups.size() != n)
        throw std::invalid_argument("scores/labels/persons/groups size mismatch");
    if (k <= 0 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("k out of range");

    GroupAudit audit;
    audit.k = k;
    audit.reference = reference;

    for (std::size_t i = 0; i < n; ++i) {
        GroupStats &g = audit.groups[groups[i]];
        g.n += 1;
        g.positives += labels[i];
    }
    if (!audit.groups.count(reference))
        throw std::invalid_argument("reference group not present: " + reference);

    std::vector<std::size_t> order = rank_order(scores, persons);
    for (int i = 0; i < k; ++i) {
        std::size_t idx = order[i];
        GroupStats &g = audit.groups[groups[idx]];
        g.selected += 1;
        g.true_positives += labels[idx];
    }
    for (auto &[name, g] : audit.groups) {
        if (g.positives > 0) {
            g.recall = static_cast<double>(g.true_positives) / g.positives;
            g.recall_defined = true;
        }
        if (g.selected > 0) {
            g.precision = static_cast<double>(g.true_positives) / g.selected;
            g.precision_defined = true;
        }
    }

    const GroupStats &ref = audit.groups.at(reference);
    for (const auto &[name, g] : audit.groups) {
        bool defined = ref.recall_defined && g.recall_defined && g.recall > 0.0;
        audit.ratio_defined[name] = defined;
        audit.disparity_ratio[name] = defined ? ref.recall / g.recall : 0.0;
    }
    return audit;
}

std::map<std::string, RocCurve> roc_by_group(const std::vector<double> &scores,
                                             const std::vector<int> &labels,
                                             const std::vector<std::string> &groups,
                                             std::vector<std::string> *warnings) {
    const std::size_t n = scores.size();
    if (labels.size() != n || groups.size() != n)
        throw std::invalid_argument("scores/labels/groups size mismatch");

    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i)
        members[groups[i]].push_back(i);

    std::map<std::string, RocCurve> out;
    for (auto &[name, idx] : members) {
        int pos = 0;
        for (std::size_t i : idx)
            pos += labels[i];
        int neg = static_cast<int>(idx.size()) - pos;
        if (pos == 0 || neg == 0) {
            if (warnings)
                warnings->push_back("group omitted from ROC (single class): " + name);
            continue;
        }
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
        RocCurve curve;
        curve.points.emplace_back(0.0, 0.0);
        int tp = 0, fp = 0;
        std::size_t i = 0;
        while (i < idx.size()) {
            std::size_t j = i;
            while (j < idx.size() && scores[idx[j]] == scores[idx[i]])
                ++j;
            for (std::size_t t = i; t < j; ++t) {
                tp += labels[idx[t]];
                fp += 1 - labels[idx[t]];
            }
            curve.points.emplace_back(static_cast<double>(fp) / neg,
                                      static_cast<double>(tp) / pos);
            i = j;
        }
        double auc = 0.0;
        for (std::size_t t = 1; t < curve.points.size(); ++t) {
            auto [x0, y0] = curve.points[t - 1];
            auto [x1, y1] = curve.points[t];
            auc += (x1 - x0) * 0.5 * (y0 + y1);
        }
        curve.auc = auc;
        out[name] = std::move(curve);
    }
    return out;
}

RecallEqualization equalize_recall_thresholds(const std::vector<double> &scores,
                                              const std::vector<int> &labels,
                                              const std::vector<PersonId> &persons,
                                              const std::vector<std::string> &groups,
                                              int total_k) {
    const std::size_t n = scores.size();
    if (labels.size() != n || persons.size() != n || groups.size() != n)
        throw std::invalid_argument("scores/labels/persons/groups size mismatch");
    if (total_k < 0 || static_cast<std::size_t>(total_k) > n)
        throw std::invalid_argument("total_k out of range");

    struct GroupQueue {
        std::string name;
        std::vector<std::size_t> order; // members sorted by score desc
        std::size_t next = 0;
        int positives = 0;
        int tp = 0;
        double recall() const { return positives > 0 ? static_cast<double>(tp) / positives : 1.0; }
    };

    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i)
        members[groups[i]].push_back(i);

    std::vector<GroupQueue> queues;
    for (auto &[name, idx] : members) {
        GroupQueue q;
        q.name = name;
        std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            if (scores[a] != scores[b])
                return scores[a] > scores[b];
            return fnv1a64(persons[a]) < fnv1a64(persons[b]);
        });
        q.order = std::move(idx);
        for (std::size_t i : q.order)
            q.positives += labels[i];
        queues.push_back(std::move(q));
    }

    for (int slot = 0; slot < total_k; ++slot) {
        GroupQueue *pick = nullptr;
        for (GroupQueue &q : queues) {
            if (q.next >= q.order.size())
                continue;
            if (!pick) {
                pick = &q;
                continue;
            }
            double ra = q.recall(), rb = pick->recall();
            if (ra != rb) {
                if (ra < rb)
                    pick = &q;
                continue;
            }
            if (q.next != pick->next) {
                if (q.next < pick->next)
                    pick = &q;
                continue;
            }
            double sa = scores[q.order[q.next]], sb = scores[pick->order[pick->next]];
            if (sa != sb) {
                if (sa > sb)
                    pick = &q;
                continue;
            }
            if (q.name < pick->name)
                pick = &q;
        }
        if (!pick)
            break; // population exhausted
        pick->tp += labels[pick->order[pick->next]];
        pick->next += 1;
    }

    RecallEqualization out;
    double lo = 2.0, hi = -1.0;
    double max_step = 0.0;
    for (const GroupQueue &q : queues) {
        out.per_group_k[q.name] = static_cast<int>(q.next);
        double r = q.positives > 0 ? static_cast<double>(q.tp) / q.positives : 0.0;
        out.achieved_recall[q.name] = r;
        if (q.positives > 0) {
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            max_step = std::max(max_step, 1.0 / q.positives);
        }
    }
    // Feasible = every group's recall sits within one achievable step of the
    // others; a group whose positives ran out early shows up here.
    out.feasible = hi < 0 || (hi - lo) <= max_step + 1e-12;
    return out;
}

void write_group_audit(const std::filesystem::path &path, const GroupAudit &audit) {
    CsvWriter w(path);
    w.row({"group", "n", "positives", "selected", "true_positives", "recall", "precision",
           "disparity_ratio", "is_reference"});
    for (const auto &[name, g] : audit.groups) {
        w.row({name, std::to_string(g.n), std::to_string(g.positives),
               std::to_string(g.selected), std::to_string(g.true_positives),
               g.recall_defined ? format_double(g.recall, 8) : "undefined",
               g.precision_defined ? format_double(g.precision, 8) : "undefined",
               audit.ratio_defined.at(name) ? format_double(audit.disparity_ratio.at(name), 8)
                                            : "undefined",
               name == audit.reference ? "true" : "false"});
    }
}

void write_roc_points(const std::filesystem::path &dir, const std::string &prefix,
                      const std::map<std::string, RocCurve> &curves) {
    for (const auto &[name, curve] : curves) {
        CsvWriter w(dir / (prefix + "_roc_" + name + ".csv"));
        w.row({"fpr", "tpr"});
        for (auto [x, y] : curve.points)
            w.row({format_double(x, 8), format_double(y, 8)});
    }
}

} // namespace proact
