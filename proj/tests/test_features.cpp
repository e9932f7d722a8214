#include <doctest.h>

#include <cmath>

#include "proact/features.hpp"
#include "proact/rng.hpp"
#include "test_helpers.hpp"

using namespace proact;
using namespace proact::testing;

namespace {

EventLog feature_fixture() {
    EventLogBuilder builder;
    builder.set_data_range(Date::from_ymd(2012, 1, 1), Date::from_ymd(2020, 12, 31));
    Demographics demo;
    demo.sex = "male";
    demo.birth_year = 1990;
    demo.race_ethnicity = "white";
    builder.set_demographics("p1", demo);
    builder.add_event(booking("p1", "2015-06-01"));
    builder.add_event(release("p1", "2015-07-01"));
    builder.add_event(booking("p1", "2018-10-01"));
    builder.add_event(release("p1", "2018-11-16")); // 45 days before as_of
    builder.add_event(simple_event("p1", "2018-12-05", EventKind::arrest));
    builder.add_event(simple_event("p1", "2017-01-01", EventKind::mh_service));
    builder.add_event(screening_event("p1", "2018-06-01", true));
    builder.add_event(ems_event("p1", "2016-01-01", true));
    // empty-history person
    builder.set_demographics("p0", Demographics{});
    builder.add_event(simple_event("p0", "2019-06-01", EventKind::arrest)); // after as_of
    return builder.build();
}

EventLog random_feature_log(std::uint64_t seed, int n) {
    Rng rng(seed);
    EventLogBuilder builder;
    builder.set_data_range(Date::from_ymd(2012, 1, 1), Date::from_ymd(2020, 12, 31));
    const EventKind kinds[] = {EventKind::jail_booking, EventKind::jail_release,
                               EventKind::arrest,       EventKind::mh_service,
                               EventKind::mh_admission, EventKind::ambulance_run,
                               EventKind::screening,    EventKind::mcrt_contact};
    for (int i = 0; i < n; ++i) {
        PersonId id = "p" + std::to_string(i);
        if (rng.coin(0.9)) {
            Demographics demo;
            demo.sex = rng.coin(0.5) ? "male" : "female";
            demo.birth_year = 1960 + static_cast<int>(rng.below(40));
            builder.set_demographics(id, demo);
        }
        int n_events = static_cast<int>(rng.below(30));
        Date d = Date::from_ymd(2012, 1, 1);
        for (int e = 0; e < n_events; ++e) {
            d = d + static_cast<int>(rng.below(200));
            if (d > Date::from_ymd(2020, 12, 31))
                break;
            EventKind kind = kinds[rng.below(8)];
            Event ev{id, d, kind};
            if (kind == EventKind::jail_booking)
                ev.booking_type = BookingType::on_view;
            if (kind == EventKind::screening) {
                ev.instrument = ScreeningInstrument::lsi_r;
                ev.screening_mh_flag = rng.coin(0.5);
            }
            if (kind == EventKind::ambulance_run)
                ev.ems_flags.substance = rng.coin(0.5);
            builder.add_event(ev);
        }
    }
    return builder.build();
}

} // namespace

TEST_CASE("empty history: zero counts and flagged missing values") {
    EventLog log = feature_fixture();
    FeatureSchema schema = FeatureSchema::standard();
    Date as_of = Date::from_ymd(2018, 12, 31);
    FeatureVector fv = build_feature_vector(log, "p0", as_of, schema);

    int dsr = schema.index_of("days_since_last_release");
    REQUIRE(dsr >= 0);
    CHECK(std::isnan(fv.values[dsr]));
    CHECK(fv.missing[dsr]);
    CHECK(fv.values[schema.index_of("days_since_last_release_missing")] == 1.0);
    CHECK(fv.values[schema.index_of("booking_count_all")] == 0.0);
    CHECK(fv.values[schema.index_of("arrest_count_all")] == 0.0); // future event invisible
    CHECK(fv.values[schema.index_of("mh_hist_jcmhc")] == 0.0);
}

TEST_CASE("days since release and window counts") {
    EventLog log = feature_fixture();
    FeatureSchema schema = FeatureSchema::standard();
    Date as_of = Date::from_ymd(2018, 12, 31);
    FeatureVector fv = build_feature_vector(log, "p1", as_of, schema);

    CHECK(fv.values[schema.index_of("days_since_last_release")] == 45.0);
    CHECK(fv.values[schema.index_of("booking_count_1y")] == 1.0);
    CHECK(fv.values[schema.index_of("booking_count_all")] == 2.0);
    CHECK(fv.values[schema.index_of("arrest_count_1m")] == 1.0);
    CHECK(fv.values[schema.index_of("mh_screen_count_1y")] == 1.0);
    CHECK(fv.values[schema.index_of("mh_hist_jcmhc")] == 1.0);
    CHECK(fv.values[schema.index_of("mh_hist_screen")] == 1.0);
    CHECK(fv.values[schema.index_of("mh_hist_ems")] == 1.0);
    CHECK(fv.values[schema.index_of("sex_male")] == 1.0);
    // ages measured from mid-year of the birth year
    CHECK(fv.values[schema.index_of("current_age")] ==
          doctest::Approx((as_of - Date::from_ymd(1990, 7, 1)) / 365.25));
    CHECK(fv.values[schema.index_of("age_at_first_booking")] ==
          doctest::Approx((Date::from_ymd(2015, 6, 1) - Date::from_ymd(1990, 7, 1)) / 365.25));
    // 47 days in jail within the trailing year: Oct 1 .. Nov 16
    CHECK(fv.values[schema.index_of("days_in_jail_1y")] == 47.0);
}

TEST_CASE("count features equal a brute-force filter on random persons") {
    EventLog log = random_feature_log(17, 100);
    FeatureSchema schema = FeatureSchema::standard();
    Date as_of = Date::from_ymd(2018, 6, 1);
    const int windows[] = {30, 90, 180, 365, 1825, 0};
    const char *names[] = {"booking", "arrest", "service", "admission", "ems", "mh_screen"};

    for (const auto &[id, h] : log.persons) {
        FeatureVector fv = build_feature_vector(log, id, as_of, schema);
        for (int ki = 0; ki < 6; ++ki) {
            for (int w : windows) {
                int expected = 0;
                for (const Event &e : h.events) {
                    if (e.date > as_of || (w != 0 && e.date <= as_of - w))
                        continue;
                    bool match = false;
                    switch (ki) {
                    case 0: match = e.kind == EventKind::jail_booking; break;
                    case 1: match = e.kind == EventKind::arrest; break;
                    case 2: match = e.kind == EventKind::mh_service; break;
                    case 3: match = e.kind == EventKind::mh_admission; break;
                    case 4: match = e.kind == EventKind::ambulance_run; break;
                    case 5: match = e.kind == EventKind::screening && e.screening_mh_flag; break;
                    }
                    expected += match;
                }
                std::string col = std::string(names[ki]) + "_count_" +
                                  (w == 0 ? "all" : w == 30 ? "1m" : w == 90 ? "3m"
                                   : w == 180 ? "6m" : w == 365 ? "1y" : "5y");
                CHECK(fv.values[schema.index_of(col)] == static_cast<double>(expected));
            }
        }
    }
}

TEST_CASE("future-blindness: events after as_of never change features") {
    EventLog log = random_feature_log(29, 60);
    FeatureSchema schema = FeatureSchema::standard();
    Date as_of = Date::from_ymd(2017, 3, 1);

    std::map<PersonId, FeatureVector> before;
    for (const auto &[id, h] : log.persons)
        before[id] = build_feature_vector(log, id, as_of, schema);

    // append noise strictly after as_of
    EventLogBuilder builder;
    builder.set_data_range(log.data_start, log.data_end);
    for (const auto &[id, h] : log.persons) {
        if (h.has_demo)
            builder.set_demographics(id, h.demo);
        for (const Event &e : h.events)
            builder.add_event(e);
    }
    Rng rng(5);
    for (const auto &[id, h] : log.persons) {
        if (rng.coin(0.5))
            builder.add_event(booking(id, (as_of + 1 + static_cast<int>(rng.below(600))).to_string()));
        if (rng.coin(0.5))
            builder.add_event(
                simple_event(id, (as_of + 1 + static_cast<int>(rng.below(600))).to_string(),
                             EventKind::mh_service));
    }
    EventLog extended = builder.build();

    for (const auto &[id, fv] : before) {
        FeatureVector after = build_feature_vector(extended, id, as_of, schema);
        REQUIRE(after.values.size() == fv.values.size());
        for (std::size_t c = 0; c < fv.values.size(); ++c) {
            if (std::isnan(fv.values[c]))
                CHECK(std::isnan(after.values[c]));
            else
                CHECK(fv.values[c] == after.values[c]); // bit-identical
        }
    }
}

TEST_CASE("nested count windows are monotone") {
    EventLog log = random_feature_log(31, 80);
    FeatureSchema schema = FeatureSchema::standard();
    Date as_of = Date::from_ymd(2019, 1, 1);
    const char *suffixes[] = {"1m", "3m", "6m", "1y", "5y", "all"};
    for (const auto &[id, h] : log.persons) {
        FeatureVector fv = build_feature_vector(log, id, as_of, schema);
        for (const char *kind : {"booking", "arrest", "service"}) {
            for (int i = 0; i + 1 < 6; ++i) {
                double narrow = fv.values[schema.index_of(std::string(kind) + "_count_" + suffixes[i])];
                double wide = fv.values[schema.index_of(std::string(kind) + "_count_" + suffixes[i + 1])];
                CHECK(narrow <= wide);
                CHECK(narrow >= 0.0);
            }
        }
        int a = schema.index_of("age_at_first_booking");
        int c = schema.index_of("current_age");
        if (!fv.missing[a] && !fv.missing[c])
            CHECK(fv.values[a] <= fv.values[c]);
    }
}

TEST_CASE("matrix assembly: row filtering, ordering, imputation") {
    EventLog log = feature_fixture();
    FeatureSchema schema = FeatureSchema::standard();
    LabeledCohort cohort;
    cohort.as_of = Date::from_ymd(2018, 12, 31);
    cohort.members = {{"p1", true, Label::positive},
                      {"p0", false, Label::unobservable},
                      {"zz", false, Label::negative}};

    AssembledMatrix training = assemble_matrix(log, cohort, schema, true);
    CHECK(training.X.rows() == 2); // unobservable row dropped
    CHECK(training.X.persons == std::vector<PersonId>{"p1", "zz"});
    CHECK(training.labels == std::vector<int>{1, 0});

    AssembledMatrix scoring = assemble_matrix(log, cohort, schema, false);
    CHECK(scoring.X.rows() == 3);

    // permuting member order leaves the matrix identical
    std::swap(cohort.members[0], cohort.members[2]);
    AssembledMatrix scoring2 = assemble_matrix(log, cohort, schema, false);
    CHECK(scoring.X.persons == scoring2.X.persons);
    CHECK(scoring.X.data.size() == scoring2.X.data.size());
    for (std::size_t i = 0; i < scoring.X.data.size(); ++i) {
        if (std::isnan(scoring.X.data[i]))
            CHECK(std::isnan(scoring2.X.data[i]));
        else
            CHECK(scoring.X.data[i] == scoring2.X.data[i]);
    }

    Imputer imp = Imputer::fit(training.X);
    FeatureMatrix filled = scoring.X;
    imp.apply(filled);
    for (double v : filled.data)
        CHECK_FALSE(std::isnan(v));
}

TEST_CASE("matrix cache round-trips and rejects schema drift") {
    EventLog log = random_feature_log(41, 40);
    FeatureSchema schema = FeatureSchema::standard();
    LabeledCohort cohort;
    cohort.as_of = Date::from_ymd(2018, 3, 1);
    for (const auto &[id, h] : log.persons)
        cohort.members.push_back(CohortMember{id, false, Label::negative});
    AssembledMatrix m = assemble_matrix(log, cohort, schema, false);

    auto dir = scratch_dir("matrix_cache");
    write_matrix_cache(dir / "cache.csv", m.X);
    FeatureMatrix loaded = read_matrix_cache(dir / "cache.csv", schema);
    CHECK(loaded.as_of == m.X.as_of);
    CHECK(loaded.persons == m.X.persons);
    REQUIRE(loaded.data.size() == m.X.data.size());
    for (std::size_t i = 0; i < loaded.data.size(); ++i) {
        if (std::isnan(m.X.data[i]))
            CHECK(std::isnan(loaded.data[i]));
        else
            CHECK(loaded.data[i] == m.X.data[i]); // exact round-trip
    }

    FeatureSchema other;
    other.count_windows = {30, 365};
    other.finalize();
    CHECK_THROWS_AS(read_matrix_cache(dir / "cache.csv", other), std::invalid_argument);
}

TEST_CASE("imputer medians come from observed values only") {
    FeatureMatrix m;
    m.columns = {"a", "b"};
    m.schema_hash = 1;
    m.persons = {"x", "y", "z"};
    m.data = {1.0, std::nan(""), 5.0, std::nan(""), 9.0, std::nan("")};
    Imputer imp = Imputer::fit(m);
    CHECK(imp.medians[0] == 5.0);
    CHECK(imp.medians[1] == 0.0); // nothing observed
    imp.apply(m);
    CHECK(m.at(1, 0) == 5.0);
    CHECK(m.at(0, 1) == 0.0);
}
