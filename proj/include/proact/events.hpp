#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proact/dates.hpp"

namespace proact {

// De-identified opaque person token; record linkage happens upstream.
using PersonId = std::string;

enum class EventKind {
    jail_booking,
    jail_release,
    mh_service,
    mh_admission,
    ambulance_run,
    arrest,
    screening,
    mcrt_contact,
    address_update,
};

enum class BookingType { on_view, warrant, bench_warrant, post_conviction, other };
enum class ServiceClass { care, outreach, consultation, paperwork };
enum class ArrestType { booked, notice_to_appear };
enum class ScreeningInstrument { lsi_r, bjmhs };

struct EmsNoteFlags {
    bool substance = false;
    bool behavioral = false;
    bool psychiatric = false;
    bool any() const { return substance || behavioral || psychiatric; }
};

// One timestamped interaction with one county system. The payload fields
// form a closed per-kind schema; ingest validates that only the fields for
// the row's kind are populated.
struct Event {
    PersonId person;
    Date date;
    EventKind kind{};
    BookingType booking_type{};          // jail_booking only
    ServiceClass service_class{};        // mh_service only
    ArrestType arrest_type{};            // arrest only
    EmsNoteFlags ems_flags{};            // ambulance_run only
    ScreeningInstrument instrument{};    // screening only
    bool screening_mh_flag = false;      // screening only
    bool in_county = false;              // address_update only
};

struct Demographics {
    std::string sex;           // "male" / "female" / ""
    int birth_year = 0;        // 0 = unknown
    std::string race_ethnicity;
};

struct JailSpell {
    Date booking;
    std::optional<Date> release; // open spell = still incarcerated
};

struct PersonHistory {
    Demographics demo;
    bool has_demo = false;
    std::vector<Event> events;       // sorted; release sorts before booking on a day
    std::vector<JailSpell> spells;   // derived once at build time
    std::vector<Date> orphan_releases;
};

// Immutable after build; safe for concurrent reads. Ordered map so every
// traversal is deterministic.
class EventLog {
  public:
    std::map<PersonId, PersonHistory> persons;
    Date data_start{};
    Date data_end{};

    const PersonHistory *find(const PersonId &id) const {
        auto it = persons.find(id);
        return it == persons.end() ? nullptr : &it->second;
    }
    bool contains(const PersonId &id) const { return persons.count(id) > 0; }
    std::size_t event_count() const {
        std::size_t n = 0;
        for (const auto &[id, h] : persons)
            n += h.events.size();
        return n;
    }
};

const char *to_string(EventKind k);
const char *to_string(BookingType t);
const char *to_string(ServiceClass c);
const char *to_string(ArrestType t);
const char *to_string(ScreeningInstrument i);
std::optional<EventKind> event_kind_from(std::string_view s);
std::optional<BookingType> booking_type_from(std::string_view s);
std::optional<ServiceClass> service_class_from(std::string_view s);
std::optional<ArrestType> arrest_type_from(std::string_view s);
std::optional<ScreeningInstrument> instrument_from(std::string_view s);
std::string ems_flags_to_string(const EmsNoteFlags &f); // '|'-joined, may be empty
std::optional<EmsNoteFlags> ems_flags_from(std::string_view s);

// Sorts a person's events (releases before bookings on the same day) and
// re-derives the jail-spell pairing. Shared by the builder and the
// simulation driver's in-place patching.
void sort_events_and_derive_spells(PersonHistory &h);

// Incremental log construction used by ingest, the synthetic generator and
// tests. build() sorts events, pairs jail spells and freezes the result.
class EventLogBuilder {
  public:
    void add_event(Event e);
    void set_demographics(const PersonId &id, Demographics demo);
    void set_data_range(Date start, Date end);
    EventLog build();

  private:
    EventLog log_;
    bool explicit_range_ = false;
};

} // namespace proact
