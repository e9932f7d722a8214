#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "proact/events.hpp"

namespace proact::testing {

// Scratch directory under the build tree, wiped per test that uses it.
inline std::filesystem::path scratch_dir(const std::string &name) {
    std::filesystem::path dir = std::filesystem::temp_directory_path() / "proact_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path &path, const std::string &content) {
    std::ofstream out(path);
    out << content;
}

inline Event booking(const PersonId &p, const std::string &date,
                     BookingType type = BookingType::on_view) {
    Event e{p, *Date::parse(date), EventKind::jail_booking};
    e.booking_type = type;
    return e;
}

inline Event release(const PersonId &p, const std::string &date) {
    return Event{p, *Date::parse(date), EventKind::jail_release};
}

inline Event simple_event(const PersonId &p, const std::string &date, EventKind kind) {
    return Event{p, *Date::parse(date), kind};
}

inline Event screening_event(const PersonId &p, const std::string &date, bool mh_flag) {
    Event e{p, *Date::parse(date), EventKind::screening};
    e.instrument = ScreeningInstrument::bjmhs;
    e.screening_mh_flag = mh_flag;
    return e;
}

inline Event address_event(const PersonId &p, const std::string &date, bool in_county) {
    Event e{p, *Date::parse(date), EventKind::address_update};
    e.in_county = in_county;
    return e;
}

inline Event ems_event(const PersonId &p, const std::string &date, bool flagged) {
    Event e{p, *Date::parse(date), EventKind::ambulance_run};
    e.ems_flags.behavioral = flagged;
    return e;
}

} // namespace proact::testing
