#include <doctest.h>

#include <set>

#include "proact/dates.hpp"
#include "proact/rng.hpp"

using namespace proact;

TEST_CASE("date parse and format round-trip") {
    auto d = Date::parse("2019-03-01");
    REQUIRE(d.has_value());
    CHECK(d->to_string() == "2019-03-01");
    CHECK(d->year() == 2019);
    CHECK(d->month() == 3);

    CHECK_FALSE(Date::parse("2019-13-40").has_value());
    CHECK_FALSE(Date::parse("2019-02-30").has_value());
    CHECK_FALSE(Date::parse("2019-2-3").has_value());
    CHECK_FALSE(Date::parse("abcd-ef-gh").has_value());
    CHECK(Date::parse("2020-02-29").has_value()); // leap year
    CHECK_FALSE(Date::parse("2019-02-29").has_value());
}

TEST_CASE("date arithmetic") {
    Date d = Date::from_ymd(2019, 1, 31);
    CHECK(d.add_months(1) == Date::from_ymd(2019, 2, 28)); // clamped
    CHECK(d.add_months(12) == Date::from_ymd(2020, 1, 31));
    CHECK(d.add_days(1) == Date::from_ymd(2019, 2, 1));
    CHECK(Date::from_ymd(2019, 6, 15).month_floor() == Date::from_ymd(2019, 6, 1));
    CHECK(months_between(Date::from_ymd(2020, 3, 1), Date::from_ymd(2019, 12, 15)) == 3);
    CHECK(Date::from_ymd(2019, 1, 1) - Date::from_ymd(2018, 12, 31) == 1);
}

TEST_CASE("civil conversion agrees with known epoch days") {
    CHECK(Date::from_ymd(1970, 1, 1).days() == 0);
    CHECK(Date::from_ymd(2000, 3, 1).days() == 11017);
    int y, m, day;
    Date{11017}.to_ymd(y, m, day);
    CHECK(y == 2000);
    CHECK(m == 3);
    CHECK(day == 1);
}

TEST_CASE("rng determinism and rough uniformity") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i)
        CHECK(a.next_u64() == b.next_u64());

    Rng r(7);
    double sum = 0;
    for (int i = 0; i < 20000; ++i)
        sum += r.uniform();
    CHECK(sum / 20000 == doctest::Approx(0.5).epsilon(0.02));

    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        std::uint64_t v = r.below(10);
        CHECK(v < 10);
        seen.insert(v);
    }
    CHECK(seen.size() == 10);
}

TEST_CASE("geometric matches daily-bernoulli law") {
    Rng r(11);
    const double h = 0.07;
    int n = 50000;
    double mean = 0;
    for (int i = 0; i < n; ++i)
        mean += static_cast<double>(r.geometric(h));
    mean /= n;
    // E[G] = (1-h)/h
    CHECK(mean == doctest::Approx((1 - h) / h).epsilon(0.03));
}

TEST_CASE("derived seeds differ by label") {
    CHECK(derive_seed(1, "a") != derive_seed(1, "b"));
    CHECK(derive_seed(1, "a", 0) != derive_seed(1, "a", 1));
    CHECK(fnv1a64("person1") != fnv1a64("person2"));
}
