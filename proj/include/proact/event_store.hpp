#pragma once

#include <filesystem>

#include "proact/events.hpp"

namespace proact {

struct RejectRow {
    std::string file;
    std::size_t row = 0; // 1-based data row number (header excluded)
    std::string reason;
};

struct IngestResult {
    EventLog log;
    std::vector<RejectRow> rejects;
};

struct IngestPaths {
    std::map<EventKind, std::filesystem::path> event_files;
    std::filesystem::path persons_file; // optional; empty = no persons table
};

struct IngestOptions {
    // Accepted date range; rows outside it are rejected. When unset the
    // range is inferred from the surviving rows.
    std::optional<Date> min_date;
    std::optional<Date> max_date;
    char delimiter = ',';
};

// Validating ingest. Rows that fail validation land in the rejects report
// with a reason; they are never silently dropped.
IngestResult ingest(const IngestPaths &paths, const IngestOptions &options = {});

void write_rejects_report(const std::filesystem::path &path,
                          const std::vector<RejectRow> &rejects);

// Ordered, non-overlapping booking/release intervals for one person. An
// unmatched booking stays open (treated as still incarcerated); orphan
// releases were flagged at build time and are not part of any spell.
const std::vector<JailSpell> &jail_spells(const EventLog &log, const PersonId &person);

// Days incarcerated within the inclusive window [start, end]. Day counts are
// inclusive on both spell ends: booking and release on the same day is one
// day in jail. Open spells clip at the window end. Absent person -> 0.
int days_in_jail(const EventLog &log, const PersonId &person, Date start, Date end);

// In jail at end-of-day `d`: some spell booked on or before d that has not
// released by d.
bool in_jail_at_eod(const EventLog &log, const PersonId &person, Date d);

} // namespace proact
