#include "proact/cohort.hpp"

#include <stdexcept>

#include "proact/csv.hpp"
#include "proact/event_store.hpp"

namespace proact {

std::vector<PersonId> build_cohort(const EventLog &log, const CohortSpec &spec) {
    if (spec.as_of < log.data_start)
        throw std::invalid_argument("cohort as_of precedes the data range start");
    Date window_start = spec.as_of - spec.lookback_days; // exclusive
    std::vector<PersonId> out;
    for (const auto &[id, h] : log.persons) {
        bool released_in_window = false;
        bool in_jail = false;
        for (const JailSpell &s : h.spells) {
            if (s.release && *s.release > window_start && *s.release <= spec.as_of)
                released_in_window = true;
            if (s.booking <= spec.as_of && (!s.release || *s.release > spec.as_of))
                in_jail = true;
        }
        if (released_in_window && !in_jail)
            out.push_back(id);
    }
    return out;
}

bool has_mh_history(const PersonHistory &h, Date as_of, bool strictly_before) {
    for (const Event &e : h.events) {
        if (strictly_before ? e.date >= as_of : e.date > as_of)
            break;
        switch (e.kind) {
        case EventKind::mh_service:
        case EventKind::mh_admission:
        case EventKind::mcrt_contact:
            return true;
        case EventKind::screening:
            if (e.screening_mh_flag)
                return true;
            break;
        case EventKind::ambulance_run:
            if (e.ems_flags.any())
                return true;
            break;
        default:
            break;
        }
    }
    return false;
}

bool latest_address_in_county(const PersonHistory &h, Date as_of) {
    // Latest address wins; same-day conflicts resolve to the record whose
    // serialized value sorts last ("true" over "false").
    bool found = false;
    Date best{};
    bool in_county = false;
    for (const Event &e : h.events) {
        if (e.kind != EventKind::address_update || e.date > as_of)
            continue;
        if (!found || e.date > best || (e.date == best && e.in_county && !in_county)) {
            found = true;
            best = e.date;
            in_county = e.in_county;
        }
    }
    return found && in_county;
}

std::vector<PersonId> apply_mh_subset(const EventLog &log,
                                      const std::vector<PersonId> &cohort, Date as_of) {
    std::vector<PersonId> out;
    for (const PersonId &id : cohort) {
        const PersonHistory *h = log.find(id);
        if (!h)
            continue;
        if (latest_address_in_county(*h, as_of) && has_mh_history(*h, as_of))
            out.push_back(id);
    }
    return out;
}

Label compute_label(const EventLog &log, const PersonId &person, const CohortSpec &spec) {
    Date window_end = spec.as_of + spec.label_window_days;
    if (window_end > log.data_end)
        return Label::unobservable;
    const PersonHistory *h = log.find(person);
    if (!h)
        return Label::negative;
    for (const Event &e : h->events) {
        if (e.date > window_end)
            break;
        if (e.date <= spec.as_of || e.kind != EventKind::jail_booking)
            continue;
        if (spec.qualifying_booking_types.count(e.booking_type))
            return Label::positive;
    }
    return Label::negative;
}

LabeledCohort build_labeled_cohort(const EventLog &log, const CohortSpec &spec) {
    LabeledCohort cohort;
    cohort.as_of = spec.as_of;
    std::vector<PersonId> members = build_cohort(log, spec);
    std::vector<PersonId> subset = apply_mh_subset(log, members, spec.as_of);
    std::set<PersonId> subset_set(subset.begin(), subset.end());
    cohort.members.reserve(members.size());
    for (PersonId &id : members) {
        CohortMember m;
        m.in_mh_subset = subset_set.count(id) > 0;
        m.label = compute_label(log, id, spec);
        m.person = std::move(id);
        cohort.members.push_back(std::move(m));
    }
    return cohort;
}

void write_cohort_snapshot(const std::filesystem::path &path, const LabeledCohort &cohort) {
    CsvWriter w(path);
    w.row({"person_id", "as_of", "in_mh_subset", "label"});
    for (const CohortMember &m : cohort.members) {
        std::string label = m.label == Label::positive     ? "1"
                            : m.label == Label::negative   ? "0"
                                                           : "unobservable";
        w.row({m.person, cohort.as_of.to_string(), m.in_mh_subset ? "true" : "false", label});
    }
}

} // namespace proact
