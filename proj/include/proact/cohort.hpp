#pragma once

#include <filesystem>
#include <set>

#include "proact/events.hpp"

namespace proact {

struct CohortSpec {
    Date as_of;
    int lookback_days = 1095;      // "past three years", leap-year-insensitive
    int label_window_days = 365;
    std::set<BookingType> qualifying_booking_types = {
        BookingType::on_view, BookingType::warrant, BookingType::bench_warrant};
};

enum class Label { negative = 0, positive = 1, unobservable = 2 };

struct CohortMember {
    PersonId person;
    bool in_mh_subset = false;
    Label label = Label::unobservable;
};

struct LabeledCohort {
    Date as_of;
    std::vector<CohortMember> members; // sorted by person id
};

// Persons with at least one jail release in (as_of - lookback, as_of] who are
// not incarcerated at end-of-day as_of. Sorted by person id.
std::vector<PersonId> build_cohort(const EventLog &log, const CohortSpec &spec);

// Keeps cohort members whose latest address_update at or before as_of is
// in-county and who have at least one mental-health indicator strictly before
// as_of: a JCMHC contact (service, admission or MCRT contact), a screening
// with the MH flag set, or an ambulance run with non-empty responder flags.
std::vector<PersonId> apply_mh_subset(const EventLog &log,
                                      const std::vector<PersonId> &cohort, Date as_of);

// 1 iff a qualifying jail booking lands in (as_of, as_of + label_window];
// post_conviction and other bookings never produce a positive label.
// Unobservable when the window extends past the data end.
Label compute_label(const EventLog &log, const PersonId &person, const CohortSpec &spec);

LabeledCohort build_labeled_cohort(const EventLog &log, const CohortSpec &spec);

void write_cohort_snapshot(const std::filesystem::path &path, const LabeledCohort &cohort);

// True when the person has any MH indicator strictly before as_of (subset
// rule without the residence requirement); also used by feature code.
bool has_mh_history(const PersonHistory &h, Date as_of, bool strictly_before = true);

// Latest in-county flag at or before as_of; persons with no address event
// are treated as out of county.
bool latest_address_in_county(const PersonHistory &h, Date as_of);

} // namespace proact
