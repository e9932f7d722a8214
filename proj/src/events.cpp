#include "proact/events.hpp"

#include <algorithm>

namespace proact {

const char *to_string(EventKind k) {
    switch (k) {
    case EventKind::jail_booking: return "jail_booking";
    case EventKind::jail_release: return "jail_release";
    case EventKind::mh_service: return "mh_service";
    case EventKind::mh_admission: return "mh_admission";
    case EventKind::ambulance_run: return "ambulance_run";
    case EventKind::arrest: return "arrest";
    case EventKind::screening: return "screening";
    case EventKind::mcrt_contact: return "mcrt_contact";
    case EventKind::address_update: return "address_update";
    }
    return "?";
}

const char *to_string(BookingType t) {
    switch (t) {
    case BookingType::on_view: return "on_view";
    case BookingType::warrant: return "warrant";
    case BookingType::bench_warrant: return "bench_warrant";
    case BookingType::post_conviction: return "post_conviction";
    case BookingType::other: return "other";
    }
    return "?";
}

const char *to_string(ServiceClass c) {
    switch (c) {
    case ServiceClass::care: return "care";
    case ServiceClass::outreach: return "outreach";
    case ServiceClass::consultation: return "consultation";
    case ServiceClass::paperwork: return "paperwork";
    }
    return "?";
}

const char *to_string(ArrestType t) {
    switch (t) {
    case ArrestType::booked: return "booked";
    case ArrestType::notice_to_appear: return "notice_to_appear";
    }
    return "?";
}

const char *to_string(ScreeningInstrument i) {
    switch (i) {
    case ScreeningInstrument::lsi_r: return "LSI-R";
    case ScreeningInstrument::bjmhs: return "BJMHS";
    }
    return "?";
}

std::optional<EventKind> event_kind_from(std::string_view s) {
    static const std::pair<std::string_view, EventKind> table[] = {
        {"jail_booking", EventKind::jail_booking},
        {"jail_release", EventKind::jail_release},
        {"mh_service", EventKind::mh_service},
        {"mh_admission", EventKind::mh_admission},
        {"ambulance_run", EventKind::ambulance_run},
        {"arrest", EventKind::arrest},
        {"screening", EventKind::screening},
        {"mcrt_contact", EventKind::mcrt_contact},
        {"address_update", EventKind::address_update},
    };
    for (auto &[name, kind] : table)
        if (name == s)
            return kind;
    return std::nullopt;
}

std::optional<BookingType> booking_type_from(std::string_view s) {
    if (s == "on_view") return BookingType::on_view;
    if (s == "warrant") return BookingType::warrant;
    if (s == "bench_warrant") return BookingType::bench_warrant;
    if (s == "post_conviction") return BookingType::post_conviction;
    if (s == "other") return BookingType::other;
    return std::nullopt;
}

std::optional<ServiceClass> service_class_from(std::string_view s) {
    if (s == "care") return ServiceClass::care;
    if (s == "outreach") return ServiceClass::outreach;
    if (s == "consultation") return ServiceClass::consultation;
    if (s == "paperwork") return ServiceClass::paperwork;
    return std::nullopt;
}

std::optional<ArrestType> arrest_type_from(std::string_view s) {
    if (s == "booked") return ArrestType::booked;
    if (s == "notice_to_appear") return ArrestType::notice_to_appear;
    return std::nullopt;
}

std::optional<ScreeningInstrument> instrument_from(std::string_view s) {
    if (s == "LSI-R") return ScreeningInstrument::lsi_r;
    if (s == "BJMHS") return ScreeningInstrument::bjmhs;
    return std::nullopt;
}

std::string ems_flags_to_string(const EmsNoteFlags &f) {
    std::string out;
    auto append = [&out](const char *name) {
        if (!out.empty())
            out += '|';
        out += name;
    };
    if (f.substance) append("substance");
    if (f.behavioral) append("behavioral");
    if (f.psychiatric) append("psychiatric");
    return out;
}

std::optional<EmsNoteFlags> ems_flags_from(std::string_view s) {
    EmsNoteFlags f;
    std::size_t start = 0;
    while (start <= s.size()) {
        std::size_t pos = s.find('|', start);
        std::string_view token = s.substr(start, pos == std::string_view::npos ? pos : pos - start);
        if (!token.empty()) {
            if (token == "substance")
                f.substance = true;
            else if (token == "behavioral")
                f.behavioral = true;
            else if (token == "psychiatric")
                f.psychiatric = true;
            else
                return std::nullopt;
        }
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return f;
}

namespace {

// Releases sort before bookings on the same day so that a same-day
// release-and-rebooking pairs into two spells.
int kind_order(EventKind k) {
    switch (k) {
    case EventKind::jail_release: return 0;
    case EventKind::jail_booking: return 1;
    default: return 2 + static_cast<int>(k);
    }
}

} // namespace

void sort_events_and_derive_spells(PersonHistory &h) {
    std::stable_sort(h.events.begin(), h.events.end(), [](const Event &a, const Event &b) {
        if (a.date != b.date)
            return a.date < b.date;
        return kind_order(a.kind) < kind_order(b.kind);
    });
    h.spells.clear();
    h.orphan_releases.clear();

    // Day-granular pairing: within one day the order of a booking and a
    // release is resolved by the incarceration state, so booking+release
    // while free is a one-day spell, and release+rebooking while jailed
    // closes one spell and opens another the same day.
    std::optional<Date> open_booking;
    std::size_t i = 0;
    while (i < h.events.size()) {
        Date day = h.events[i].date;
        int bookings = 0, releases = 0;
        while (i < h.events.size() && h.events[i].date == day) {
            bookings += h.events[i].kind == EventKind::jail_booking;
            releases += h.events[i].kind == EventKind::jail_release;
            ++i;
        }
        while (bookings > 0 || releases > 0) {
            if (open_booking) {
                if (releases == 0)
                    break; // nested booking while incarcerated is a no-op
                h.spells.push_back(JailSpell{*open_booking, day});
                open_booking.reset();
                --releases;
            } else if (bookings > 0) {
                open_booking = day;
                --bookings;
            } else {
                h.orphan_releases.push_back(day);
                --releases;
            }
        }
    }
    if (open_booking)
        h.spells.push_back(JailSpell{*open_booking, std::nullopt});
}

void EventLogBuilder::add_event(Event e) { log_.persons[e.person].events.push_back(std::move(e)); }

void EventLogBuilder::set_demographics(const PersonId &id, Demographics demo) {
    auto &h = log_.persons[id];
    h.demo = std::move(demo);
    h.has_demo = true;
}

void EventLogBuilder::set_data_range(Date start, Date end) {
    log_.data_start = start;
    log_.data_end = end;
    explicit_range_ = true;
}

EventLog EventLogBuilder::build() {
    bool any_event = false;
    Date lo{}, hi{};
    for (auto &[id, h] : log_.persons) {
        sort_events_and_derive_spells(h);
        for (const Event &e : h.events) {
            if (!any_event) {
                lo = hi = e.date;
                any_event = true;
            } else {
                lo = std::min(lo, e.date);
                hi = std::max(hi, e.date);
            }
        }
    }
    if (!explicit_range_ && any_event) {
        log_.data_start = lo;
        log_.data_end = hi;
    }
    return std::move(log_);
}

} // namespace proact
