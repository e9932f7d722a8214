#include "proact/event_store.hpp"

#include <algorithm>

#include "proact/csv.hpp"

namespace proact {

namespace {

struct ParsedRow {
    Event event;
    std::string error;
    bool ok = false;
};

ParsedRow parse_event_row(EventKind kind, const CsvTable &table,
                          const std::vector<std::string> &fields,
                          const IngestOptions &options) {
    ParsedRow out;
    int pid_col = table.column("person_id");
    int date_col = table.column("date");
    if (pid_col < 0 || date_col < 0) {
        out.error = "missing person_id/date column";
        return out;
    }
    if (fields.size() != table.header.size()) {
        out.error = "wrong field count";
        return out;
    }
    Event e;
    e.person = fields[pid_col];
    if (e.person.empty()) {
        out.error = "empty person_id";
        return out;
    }
    auto date = Date::parse(fields[date_col]);
    if (!date) {
        out.error = "malformed date";
        return out;
    }
    e.date = *date;
    if (options.min_date && e.date < *options.min_date) {
        out.error = "date before configured range";
        return out;
    }
    if (options.max_date && e.date > *options.max_date) {
        out.error = "date after configured range";
        return out;
    }
    e.kind = kind;

    auto field = [&](const char *name) -> const std::string * {
        int col = table.column(name);
        if (col < 0)
            return nullptr;
        return &fields[col];
    };

    switch (kind) {
    case EventKind::jail_booking: {
        const std::string *v = field("booking_type");
        if (!v) {
            out.error = "missing booking_type";
            return out;
        }
        auto t = booking_type_from(*v);
        if (!t) {
            out.error = "unknown booking_type: " + *v;
            return out;
        }
        e.booking_type = *t;
        break;
    }
    case EventKind::mh_service: {
        const std::string *v = field("service_class");
        if (!v) {
            out.error = "missing service_class";
            return out;
        }
        auto c = service_class_from(*v);
        if (!c) {
            out.error = "unknown service_class: " + *v;
            return out;
        }
        e.service_class = *c;
        break;
    }
    case EventKind::arrest: {
        const std::string *v = field("arrest_type");
        if (!v) {
            out.error = "missing arrest_type";
            return out;
        }
        auto t = arrest_type_from(*v);
        if (!t) {
            out.error = "unknown arrest_type: " + *v;
            return out;
        }
        e.arrest_type = *t;
        break;
    }
    case EventKind::ambulance_run: {
        const std::string *v = field("ems_note_flags");
        if (!v) {
            out.error = "missing ems_note_flags";
            return out;
        }
        auto f = ems_flags_from(*v);
        if (!f) {
            out.error = "unknown ems_note_flags: " + *v;
            return out;
        }
        e.ems_flags = *f;
        break;
    }
    case EventKind::screening: {
        const std::string *inst = field("screening_instrument");
        const std::string *flag = field("screening_mh_flag");
        if (!inst || !flag) {
            out.error = "missing screening columns";
            return out;
        }
        auto i = instrument_from(*inst);
        if (!i) {
            out.error = "unknown screening_instrument: " + *inst;
            return out;
        }
        e.instrument = *i;
        if (*flag == "true" || *flag == "1")
            e.screening_mh_flag = true;
        else if (*flag == "false" || *flag == "0")
            e.screening_mh_flag = false;
        else {
            out.error = "bad screening_mh_flag: " + *flag;
            return out;
        }
        break;
    }
    case EventKind::address_update: {
        const std::string *v = field("in_county");
        if (!v) {
            out.error = "missing in_county";
            return out;
        }
        if (*v == "true" || *v == "1")
            e.in_county = true;
        else if (*v == "false" || *v == "0")
            e.in_county = false;
        else {
            out.error = "bad in_county: " + *v;
            return out;
        }
        break;
    }
    case EventKind::jail_release:
    case EventKind::mh_admission:
    case EventKind::mcrt_contact:
        break;
    }
    out.event = std::move(e);
    out.ok = true;
    return out;
}

} // namespace

IngestResult ingest(const IngestPaths &paths, const IngestOptions &options) {
    IngestResult result;
    EventLogBuilder builder;
    if (options.min_date && options.max_date)
        builder.set_data_range(*options.min_date, *options.max_date);

    struct PendingEvent {
        Event event;
        std::string file;
        std::size_t row;
    };
    std::vector<PendingEvent> pending;
    for (const auto &[kind, path] : paths.event_files) {
        CsvTable table = read_csv(path, options.delimiter);
        std::string filename = path.filename().string();
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            ParsedRow parsed = parse_event_row(kind, table, table.rows[i], options);
            if (parsed.ok)
                pending.push_back(PendingEvent{std::move(parsed.event), filename, i + 1});
            else
                result.rejects.push_back(RejectRow{filename, i + 1, parsed.error});
        }
    }

    std::map<std::string, int> birth_years;
    if (!paths.persons_file.empty()) {
        CsvTable table = read_csv(paths.persons_file, options.delimiter);
        std::string filename = paths.persons_file.filename().string();
        int pid_col = table.column("person_id");
        int sex_col = table.column("sex");
        int by_col = table.column("birth_year");
        int race_col = table.column("race_ethnicity");
        for (std::size_t i = 0; i < table.rows.size(); ++i) {
            const auto &fields = table.rows[i];
            if (pid_col < 0 || fields.size() != table.header.size()) {
                result.rejects.push_back(RejectRow{filename, i + 1, "bad persons row"});
                continue;
            }
            if (fields[pid_col].empty()) {
                result.rejects.push_back(RejectRow{filename, i + 1, "empty person_id"});
                continue;
            }
            Demographics demo;
            if (sex_col >= 0)
                demo.sex = fields[sex_col];
            if (by_col >= 0 && !fields[by_col].empty()) {
                try {
                    demo.birth_year = std::stoi(fields[by_col]);
                } catch (...) {
                    result.rejects.push_back(RejectRow{filename, i + 1, "bad birth_year"});
                    continue;
                }
            }
            if (race_col >= 0)
                demo.race_ethnicity = fields[race_col];
            if (demo.birth_year > 0)
                birth_years[fields[pid_col]] = demo.birth_year;
            builder.set_demographics(fields[pid_col], std::move(demo));
        }
    }

    for (PendingEvent &p : pending) {
        auto by = birth_years.find(p.event.person);
        if (by != birth_years.end() && p.event.date < Date::from_ymd(by->second, 1, 1)) {
            result.rejects.push_back(RejectRow{p.file, p.row, "event precedes birth year"});
            continue;
        }
        builder.add_event(std::move(p.event));
    }

    result.log = builder.build();
    return result;
}

void write_rejects_report(const std::filesystem::path &path,
                          const std::vector<RejectRow> &rejects) {
    CsvWriter w(path);
    w.row({"file", "row", "reason"});
    for (const auto &r : rejects)
        w.row({r.file, std::to_string(r.row), r.reason});
}

const std::vector<JailSpell> &jail_spells(const EventLog &log, const PersonId &person) {
    static const std::vector<JailSpell> empty;
    const PersonHistory *h = log.find(person);
    return h ? h->spells : empty;
}

int days_in_jail(const EventLog &log, const PersonId &person, Date start, Date end) {
    if (start > end)
        return 0;
    const PersonHistory *h = log.find(person);
    if (!h)
        return 0;
    // Spells are ordered and disjoint except that a same-day turnaround lets
    // the next spell start on the previous release day; count the union of
    // days so the shared day is not counted twice.
    int total = 0;
    std::optional<Date> counted_through;
    for (const JailSpell &s : h->spells) {
        Date lo = std::max(s.booking, start);
        Date hi = s.release ? std::min(*s.release, end) : end;
        if (counted_through && lo <= *counted_through)
            lo = *counted_through + 1;
        if (lo <= hi) {
            total += hi - lo + 1;
            counted_through = hi;
        }
    }
    return total;
}

bool in_jail_at_eod(const EventLog &log, const PersonId &person, Date d) {
    const PersonHistory *h = log.find(person);
    if (!h)
        return false;
    for (const JailSpell &s : h->spells) {
        if (s.booking > d)
            break;
        if (!s.release || *s.release > d)
            return true;
    }
    return false;
}

} // namespace proact
