#include "proact/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "proact/csv.hpp"
#include "proact/event_store.hpp"
#include "proact/rng.hpp"

namespace proact {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

const char *window_suffix(int days) {
    switch (days) {
    case 30: return "1m";
    case 90: return "3m";
    case 180: return "6m";
    case 365: return "1y";
    case 1825: return "5y";
    case 0: return "all";
    }
    return nullptr;
}

std::string window_name(int days) {
    if (const char *s = window_suffix(days))
        return s;
    return std::to_string(days) + "d";
}

const char *const kCountKinds[] = {"booking", "arrest", "service", "admission", "ems", "mh_screen"};

// Mid-year precision: birth years carry no day-of-birth, so ages are
// measured from July 1 of the birth year.
double age_at(Date when, int birth_year) {
    Date mid = Date::from_ymd(birth_year, 7, 1);
    return static_cast<double>(when - mid) / 365.25;
}

} // namespace

FeatureSchema FeatureSchema::standard() {
    FeatureSchema s;
    s.finalize();
    return s;
}

void FeatureSchema::finalize() {
    columns = {"current_age", "sex_male", "age_at_first_booking", "days_since_last_release"};
    for (const char *kind : kCountKinds)
        for (int w : count_windows)
            columns.push_back(std::string(kind) + "_count_" + window_name(w));
    for (int w : jail_day_windows)
        columns.push_back("days_in_jail_" + window_name(w));
    columns.push_back("mh_hist_jcmhc");
    columns.push_back("mh_hist_screen");
    columns.push_back("mh_hist_ems");
    columns.push_back("current_age_missing");
    columns.push_back("sex_male_missing");
    columns.push_back("age_at_first_booking_missing");
    columns.push_back("days_since_last_release_missing");
}

std::uint64_t FeatureSchema::hash() const {
    std::string acc;
    for (const std::string &c : columns)
        acc += c + ";";
    return fnv1a64(acc);
}

int FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return static_cast<int>(i);
    return -1;
}

FeatureVector build_feature_vector(const EventLog &log, const PersonId &person, Date as_of,
                                   const FeatureSchema &schema) {
    if (schema.columns.empty())
        throw std::invalid_argument("feature schema not finalized");

    FeatureVector fv;
    fv.values.assign(schema.columns.size(), 0.0);
    fv.missing.assign(schema.columns.size(), false);

    const PersonHistory *h = log.find(person);
    static const PersonHistory empty_history;
    if (!h)
        h = &empty_history;

    std::size_t idx = 0;
    auto set = [&](double v) { fv.values[idx++] = v; };
    auto set_missing = [&]() {
        fv.values[idx] = kNaN;
        fv.missing[idx] = true;
        ++idx;
    };

    // demographics
    bool has_birth_year = h->has_demo && h->demo.birth_year > 0;
    if (has_birth_year)
        set(age_at(as_of, h->demo.birth_year));
    else
        set_missing();
    if (h->has_demo && !h->demo.sex.empty())
        set(h->demo.sex == "male" ? 1.0 : 0.0);
    else
        set_missing();

    std::optional<Date> first_booking;
    std::optional<Date> last_release;
    for (const JailSpell &s : h->spells) {
        if (s.booking <= as_of && !first_booking)
            first_booking = s.booking;
        if (s.release && *s.release <= as_of)
            if (!last_release || *s.release > *last_release)
                last_release = *s.release;
    }
    if (first_booking && has_birth_year)
        set(age_at(*first_booking, h->demo.birth_year));
    else
        set_missing();
    if (last_release)
        set(static_cast<double>(as_of - *last_release));
    else
        set_missing();

    // event counts per kind per trailing window (as_of - w, as_of]
    for (const char *kind_name : kCountKinds) {
        for (int w : schema.count_windows) {
            int count = 0;
            for (const Event &e : h->events) {
                if (e.date > as_of)
                    break;
                if (w != 0 && e.date <= as_of - w)
                    continue;
                bool match = false;
                switch (e.kind) {
                case EventKind::jail_booking: match = std::string_view(kind_name) == "booking"; break;
                case EventKind::arrest: match = std::string_view(kind_name) == "arrest"; break;
                case EventKind::mh_service: match = std::string_view(kind_name) == "service"; break;
                case EventKind::mh_admission: match = std::string_view(kind_name) == "admission"; break;
                case EventKind::ambulance_run: match = std::string_view(kind_name) == "ems"; break;
                case EventKind::screening:
                    match = std::string_view(kind_name) == "mh_screen" && e.screening_mh_flag;
                    break;
                default: break;
                }
                if (match)
                    ++count;
            }
            set(static_cast<double>(count));
        }
    }

    // incarcerated days over trailing windows ending at as_of
    for (int w : schema.jail_day_windows) {
        Date start = w == 0 ? Date{std::numeric_limits<std::int32_t>::min() / 2}
                            : as_of - (w - 1);
        set(static_cast<double>(days_in_jail(log, person, start, as_of)));
    }

    // mental-health history indicators (events <= as_of)
    bool hist_jcmhc = false, hist_screen = false, hist_ems = false;
    for (const Event &e : h->events) {
        if (e.date > as_of)
            break;
        switch (e.kind) {
        case EventKind::mh_service:
        case EventKind::mh_admission:
        case EventKind::mcrt_contact: hist_jcmhc = true; break;
        case EventKind::screening:
            if (e.screening_mh_flag)
                hist_screen = true;
            break;
        case EventKind::ambulance_run:
            if (e.ems_flags.any())
                hist_ems = true;
            break;
        default: break;
        }
    }
    set(hist_jcmhc ? 1.0 : 0.0);
    set(hist_screen ? 1.0 : 0.0);
    set(hist_ems ? 1.0 : 0.0);

    // companion missing indicators for the four imputable columns
    set(fv.missing[0] ? 1.0 : 0.0);
    set(fv.missing[1] ? 1.0 : 0.0);
    set(fv.missing[2] ? 1.0 : 0.0);
    set(fv.missing[3] ? 1.0 : 0.0);

    if (idx != schema.columns.size())
        throw std::logic_error("feature schema/column count mismatch");
    return fv;
}

AssembledMatrix assemble_matrix(const EventLog &log, const LabeledCohort &cohort,
                                const FeatureSchema &schema, bool training_mode) {
    if (schema.columns.empty())
        throw std::invalid_argument("feature schema not finalized");

    std::vector<const CohortMember *> kept;
    kept.reserve(cohort.members.size());
    for (const CohortMember &m : cohort.members) {
        if (training_mode && m.label == Label::unobservable)
            continue;
        kept.push_back(&m);
    }
    std::sort(kept.begin(), kept.end(),
              [](const CohortMember *a, const CohortMember *b) { return a->person < b->person; });

    AssembledMatrix out;
    out.X.as_of = cohort.as_of;
    out.X.columns = schema.columns;
    out.X.schema_hash = schema.hash();
    out.X.persons.reserve(kept.size());
    out.X.data.reserve(kept.size() * schema.columns.size());
    for (const CohortMember *m : kept) {
        FeatureVector fv = build_feature_vector(log, m->person, cohort.as_of, schema);
        out.X.persons.push_back(m->person);
        out.X.data.insert(out.X.data.end(), fv.values.begin(), fv.values.end());
        if (training_mode)
            out.labels.push_back(m->label == Label::positive ? 1 : 0);
    }
    return out;
}

void write_matrix_cache(const std::filesystem::path &path, const FeatureMatrix &m) {
    std::ofstream out(path);
    if (!out)
        throw std::runtime_error("cannot write matrix cache: " + path.string());
    char hash_hex[24];
    std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                  static_cast<unsigned long long>(m.schema_hash));
    out << "# as_of=" << m.as_of.to_string() << " schema_hash=" << hash_hex << '\n';
    out << "person_id";
    for (const std::string &c : m.columns)
        out << ',' << c;
    out << '\n';
    for (std::size_t r = 0; r < m.rows(); ++r) {
        out << m.persons[r];
        for (std::size_t c = 0; c < m.cols(); ++c)
            out << ',' << format_double(m.at(r, c), 17);
        out << '\n';
    }
}

FeatureMatrix read_matrix_cache(const std::filesystem::path &path, const FeatureSchema &schema) {
    std::ifstream in(path);
    if (!in)
        throw std::runtime_error("cannot read matrix cache: " + path.string());
    std::string meta;
    std::getline(in, meta);
    std::size_t hash_pos = meta.find("schema_hash=");
    std::size_t asof_pos = meta.find("as_of=");
    if (hash_pos == std::string::npos || asof_pos == std::string::npos)
        throw std::runtime_error("matrix cache missing key line: " + path.string());
    std::uint64_t cached_hash = std::stoull(meta.substr(hash_pos + 12, 16), nullptr, 16);
    if (cached_hash != schema.hash())
        throw std::invalid_argument("matrix cache schema hash mismatch: " + path.string());
    auto as_of = Date::parse(meta.substr(asof_pos + 6, 10));
    if (!as_of)
        throw std::runtime_error("matrix cache has a bad as_of key: " + path.string());

    FeatureMatrix m;
    m.as_of = *as_of;
    m.schema_hash = cached_hash;
    m.columns = schema.columns;
    std::string line;
    std::getline(in, line); // header row mirrors the schema
    while (std::getline(in, line)) {
        if (line.empty())
            continue;
        std::size_t start = line.find(',');
        m.persons.push_back(line.substr(0, start));
        std::size_t col = 0;
        while (start != std::string::npos && col < schema.columns.size()) {
            std::size_t next = line.find(',', start + 1);
            m.data.push_back(std::strtod(line.c_str() + start + 1, nullptr));
            start = next;
            ++col;
        }
        if (col != schema.columns.size())
            throw std::runtime_error("matrix cache row width mismatch: " + path.string());
    }
    return m;
}

Imputer Imputer::fit(const FeatureMatrix &m) {
    Imputer imp;
    imp.schema_hash = m.schema_hash;
    imp.medians.assign(m.cols(), 0.0);
    std::vector<double> col;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        col.clear();
        for (std::size_t r = 0; r < m.rows(); ++r) {
            double v = m.at(r, c);
            if (!std::isnan(v))
                col.push_back(v);
        }
        if (col.empty())
            continue; // no observed values: impute zero
        std::sort(col.begin(), col.end());
        std::size_t n = col.size();
        imp.medians[c] = n % 2 ? col[n / 2] : 0.5 * (col[n / 2 - 1] + col[n / 2]);
    }
    return imp;
}

void Imputer::apply(FeatureMatrix &m) const {
    if (m.schema_hash != schema_hash)
        throw std::invalid_argument("imputer schema hash mismatch");
    for (std::size_t r = 0; r < m.rows(); ++r)
        for (std::size_t c = 0; c < m.cols(); ++c)
            if (std::isnan(m.at(r, c)))
                m.at(r, c) = medians[c];
}

} // namespace proact
