#include "proact/synth.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "proact/csv.hpp"
#include "proact/rng.hpp"

namespace proact {

namespace {

double daily_hazard(const KindRate &rate, double u, double exponent) {
    double annual = rate.base + rate.slope * std::pow(u, exponent);
    return annual <= 0 ? 0.0 : 1.0 - std::exp(-annual / 365.0);
}

std::string person_name(int i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "p%07d", i);
    return buf;
}

// Walk of independent per-day Bernoulli(h) draws, realized with geometric
// gaps so cost scales with event count, not days.
template <typename Emit>
void hazard_walk(Rng &rng, double h, Date start, Date end, Emit &&emit) {
    if (h <= 0.0)
        return;
    Date d = start;
    while (d <= end) {
        std::int64_t gap = rng.geometric(h);
        if (gap > end - d)
            return;
        d = d + static_cast<int>(gap);
        emit(d);
        d = d + 1;
    }
}

} // namespace

double qualifying_booking_prob(double h, double q, int L, int window_days) {
    if (h <= 0.0 || q <= 0.0)
        return 0.0;
    // f[d] = P(no qualifying booking in days d..W | free at start of day d)
    std::vector<double> f(window_days + L + 2, 1.0);
    for (int d = window_days; d >= 1; --d) {
        double cont = d + L <= window_days ? f[d + L] : 1.0;
        f[d] = (1.0 - h) * f[d + 1] + h * (1.0 - q) * cont;
    }
    return 1.0 - f[1];
}

double expected_jail_days(double h, int L, int window_days) {
    if (h <= 0.0)
        return 0.0;
    std::vector<double> g(window_days + 2, 0.0);
    for (int d = window_days; d >= 1; --d) {
        double in_window = std::min<double>(L, window_days - d + 1);
        double cont = d + L <= window_days ? g[d + L] : 0.0;
        g[d] = (1.0 - h) * g[d + 1] + h * (in_window + cont);
    }
    return g[1];
}

SynthPopulation generate_population(const SimConfig &config) {
    SynthPopulation pop;
    pop.config = config;
    EventLogBuilder builder;
    builder.set_data_range(config.span_start, config.span_end);

    const double qualifying_share = config.booking_type_probs[0] + config.booking_type_probs[1] +
                                    config.booking_type_probs[2];
    const int span_days = config.span_end - config.span_start;

    for (int i = 0; i < config.n_persons; ++i) {
        PersonId id = person_name(i);
        Rng rng(derive_seed(config.master_seed, "person", static_cast<std::uint64_t>(i)));

        PersonTruth t;
        t.latent = rng.uniform();
        t.mh_latent = rng.coin(config.mh_latent_prob);
        t.in_county_initial = rng.coin(config.in_county_prob);
        {
            double pick = rng.uniform();
            double acc = 0.0;
            t.group = config.race_groups.back().first;
            for (const auto &[name, p] : config.race_groups) {
                acc += p;
                if (pick < acc) {
                    t.group = name;
                    break;
                }
            }
        }
        t.h_booking = daily_hazard(config.booking, t.latent, config.risk_exponent);
        t.h_arrest = daily_hazard(config.arrest, t.latent, config.risk_exponent);
        t.h_ambulance = daily_hazard(config.ambulance, t.latent, config.risk_exponent);
        t.h_service = t.mh_latent ? daily_hazard(config.service, t.latent, config.risk_exponent) : 0.0;
        t.h_admission =
            t.mh_latent ? daily_hazard(config.admission, t.latent, config.risk_exponent) : 0.0;
        t.spell_days = std::max(
            1, static_cast<int>(std::lround(config.spell_base_days +
                                            config.spell_slope_days * t.latent * t.latent)));
        t.qualifying_share = qualifying_share;
        t.p_qual_booking = qualifying_booking_prob(t.h_booking, qualifying_share, t.spell_days);
        t.expected_jail_days = expected_jail_days(t.h_booking, t.spell_days);
        t.p_care_service =
            1.0 - std::pow(1.0 - t.h_service * config.care_class_prob, 365.0);
        t.p_admission = 1.0 - std::pow(1.0 - t.h_admission, 365.0);
        t.p_ambulance = 1.0 - std::pow(1.0 - t.h_ambulance, 365.0);
        t.p_arrest = 1.0 - std::pow(1.0 - t.h_arrest, 365.0);

        // demographics
        Demographics demo;
        bool demo_missing = rng.coin(config.missing_demo_prob);
        demo.sex = rng.coin(config.male_prob) ? "male" : "female";
        int age_at_start = 18 + static_cast<int>(rng.below(42));
        demo.birth_year = config.span_start.year() - age_at_start;
        demo.race_ethnicity = t.group;
        if (demo_missing) {
            if (rng.coin(0.5))
                demo.sex.clear();
            else
                demo.birth_year = 0;
        }
        builder.set_demographics(id, demo);

        // address history: initial update plus an occasional redraw mid-span
        builder.add_event(Event{id, config.span_start, EventKind::address_update, {}, {}, {},
                                {}, {}, false, t.in_county_initial});
        if (rng.coin(config.move_prob)) {
            Date move_day = config.span_start + static_cast<int>(rng.below(span_days + 1));
            bool in_county = rng.coin(config.in_county_prob);
            builder.add_event(Event{id, move_day, EventKind::address_update, {}, {}, {}, {}, {},
                                    false, in_county});
        }

        // guaranteed MH indicator for mh-latent persons: one flagged screen
        if (t.mh_latent) {
            Event e{id, config.span_start, EventKind::screening};
            e.instrument = ScreeningInstrument::bjmhs;
            e.screening_mh_flag = true;
            builder.add_event(e);
        }

        // jail stream: renewal walk with geometric free gaps and fixed spells
        {
            Rng jail_rng = rng.split("jail");
            Date d = config.span_start;
            while (d <= config.span_end && t.h_booking > 0) {
                std::int64_t gap = jail_rng.geometric(t.h_booking);
                if (gap > config.span_end - d)
                    break;
                Date booked = d + static_cast<int>(gap);
                Event booking{id, booked, EventKind::jail_booking};
                double pick = jail_rng.uniform();
                double acc = 0.0;
                booking.booking_type = BookingType::other;
                static const BookingType order[] = {BookingType::on_view, BookingType::warrant,
                                                    BookingType::bench_warrant,
                                                    BookingType::post_conviction,
                                                    BookingType::other};
                for (int bt = 0; bt < 5; ++bt) {
                    acc += config.booking_type_probs[bt];
                    if (pick < acc) {
                        booking.booking_type = order[bt];
                        break;
                    }
                }
                builder.add_event(booking);
                Date release = booked + (t.spell_days - 1);
                if (release <= config.span_end)
                    builder.add_event(Event{id, release, EventKind::jail_release});
                d = booked + t.spell_days;
            }
        }

        // independent daily-hazard kinds
        {
            Rng k = rng.split("arrest");
            hazard_walk(k, t.h_arrest, config.span_start, config.span_end, [&](Date d) {
                Event e{id, d, EventKind::arrest};
                e.arrest_type = k.coin(0.7) ? ArrestType::booked : ArrestType::notice_to_appear;
                builder.add_event(e);
            });
        }
        {
            Rng k = rng.split("service");
            hazard_walk(k, t.h_service, config.span_start, config.span_end, [&](Date d) {
                Event e{id, d, EventKind::mh_service};
                double pick = k.uniform();
                if (pick < config.care_class_prob)
                    e.service_class = ServiceClass::care;
                else if (pick < config.care_class_prob + 0.2)
                    e.service_class = ServiceClass::outreach;
                else if (pick < config.care_class_prob + 0.35)
                    e.service_class = ServiceClass::consultation;
                else
                    e.service_class = ServiceClass::paperwork;
                builder.add_event(e);
            });
        }
        {
            Rng k = rng.split("admission");
            hazard_walk(k, t.h_admission, config.span_start, config.span_end,
                        [&](Date d) { builder.add_event(Event{id, d, EventKind::mh_admission}); });
        }
        {
            Rng k = rng.split("ambulance");
            hazard_walk(k, t.h_ambulance, config.span_start, config.span_end, [&](Date d) {
                Event e{id, d, EventKind::ambulance_run};
                if (t.mh_latent && k.coin(config.ems_flag_prob)) {
                    double pick = k.uniform();
                    if (pick < 0.4)
                        e.ems_flags.substance = true;
                    else if (pick < 0.75)
                        e.ems_flags.behavioral = true;
                    else
                        e.ems_flags.psychiatric = true;
                }
                builder.add_event(e);
            });
        }
        {
            Rng k = rng.split("screening");
            double h = daily_hazard(config.screening, t.latent, config.risk_exponent);
            hazard_walk(k, h, config.span_start, config.span_end, [&](Date d) {
                Event e{id, d, EventKind::screening};
                e.instrument = k.coin(0.5) ? ScreeningInstrument::lsi_r : ScreeningInstrument::bjmhs;
                e.screening_mh_flag = t.mh_latent;
                builder.add_event(e);
            });
        }
        if (t.mh_latent) {
            Rng k = rng.split("contact");
            double h = daily_hazard(config.contact, t.latent, config.risk_exponent);
            hazard_walk(k, h, config.span_start, config.span_end,
                        [&](Date d) { builder.add_event(Event{id, d, EventKind::mcrt_contact}); });
        }

        pop.truth.emplace(std::move(id), std::move(t));
    }

    pop.log = builder.build();
    return pop;
}

IngestPaths population_file_paths(const std::filesystem::path &dir) {
    IngestPaths paths;
    paths.persons_file = dir / "persons.csv";
    paths.event_files = {
        {EventKind::jail_booking, dir / "jail_booking.csv"},
        {EventKind::jail_release, dir / "jail_release.csv"},
        {EventKind::mh_service, dir / "mh_service.csv"},
        {EventKind::mh_admission, dir / "mh_admission.csv"},
        {EventKind::ambulance_run, dir / "ambulance_run.csv"},
        {EventKind::arrest, dir / "arrest.csv"},
        {EventKind::screening, dir / "screening.csv"},
        {EventKind::mcrt_contact, dir / "mcrt_contact.csv"},
        {EventKind::address_update, dir / "address_update.csv"},
    };
    return paths;
}

void write_population_files(const SynthPopulation &pop, const std::filesystem::path &dir) {
    std::filesystem::create_directories(dir);
    IngestPaths paths = population_file_paths(dir);

    std::map<EventKind, CsvWriter> writers;
    auto open = [&](EventKind kind, std::vector<std::string> header) -> CsvWriter & {
        auto [it, fresh] = writers.emplace(kind, CsvWriter(paths.event_files.at(kind)));
        it->second.row(header);
        return it->second;
    };
    CsvWriter &booking = open(EventKind::jail_booking, {"person_id", "date", "booking_type"});
    CsvWriter &release = open(EventKind::jail_release, {"person_id", "date"});
    CsvWriter &service = open(EventKind::mh_service, {"person_id", "date", "service_class"});
    CsvWriter &admission = open(EventKind::mh_admission, {"person_id", "date"});
    CsvWriter &ambulance = open(EventKind::ambulance_run, {"person_id", "date", "ems_note_flags"});
    CsvWriter &arrest = open(EventKind::arrest, {"person_id", "date", "arrest_type"});
    CsvWriter &screening =
        open(EventKind::screening, {"person_id", "date", "screening_instrument", "screening_mh_flag"});
    CsvWriter &contact = open(EventKind::mcrt_contact, {"person_id", "date"});
    CsvWriter &address = open(EventKind::address_update, {"person_id", "date", "in_county"});

    for (const auto &[id, h] : pop.log.persons) {
        for (const Event &e : h.events) {
            switch (e.kind) {
            case EventKind::jail_booking:
                booking.row({id, e.date.to_string(), to_string(e.booking_type)});
                break;
            case EventKind::jail_release:
                release.row({id, e.date.to_string()});
                break;
            case EventKind::mh_service:
                service.row({id, e.date.to_string(), to_string(e.service_class)});
                break;
            case EventKind::mh_admission:
                admission.row({id, e.date.to_string()});
                break;
            case EventKind::ambulance_run:
                ambulance.row({id, e.date.to_string(), ems_flags_to_string(e.ems_flags)});
                break;
            case EventKind::arrest:
                arrest.row({id, e.date.to_string(), to_string(e.arrest_type)});
                break;
            case EventKind::screening:
                screening.row({id, e.date.to_string(), to_string(e.instrument),
                               e.screening_mh_flag ? "true" : "false"});
                break;
            case EventKind::mcrt_contact:
                contact.row({id, e.date.to_string()});
                break;
            case EventKind::address_update:
                address.row({id, e.date.to_string(), e.in_county ? "true" : "false"});
                break;
            }
        }
    }

    CsvWriter persons(paths.persons_file);
    persons.row({"person_id", "sex", "birth_year", "race_ethnicity"});
    for (const auto &[id, h] : pop.log.persons)
        persons.row({id, h.demo.sex, h.demo.birth_year > 0 ? std::to_string(h.demo.birth_year) : "",
                     h.demo.race_ethnicity});

    CsvWriter truth(dir / "ground_truth.csv");
    truth.row({"person_id", "latent_risk", "mh_latent", "in_county_initial", "group",
               "p_qual_booking_1y", "expected_jail_days_1y", "p_care_service_1y",
               "p_admission_1y", "p_ambulance_1y", "p_arrest_1y"});
    for (const auto &[id, t] : pop.truth)
        truth.row({id, format_double(t.latent, 17), t.mh_latent ? "true" : "false",
                   t.in_county_initial ? "true" : "false", t.group,
                   format_double(t.p_qual_booking, 10), format_double(t.expected_jail_days, 10),
                   format_double(t.p_care_service, 10), format_double(t.p_admission, 10),
                   format_double(t.p_ambulance, 10), format_double(t.p_arrest, 10)});
}

namespace {

struct TreatmentWindow {
    Date entry;
    int tier = 0;
};

} // namespace

EventLog apply_treatment(const EventLog &log, const std::vector<MonthlyRoster> &history,
                         const SynthPopulation &pop) {
    // first outreach appearance per person, in month order
    std::map<PersonId, TreatmentWindow> windows;
    std::vector<const MonthlyRoster *> ordered;
    for (const MonthlyRoster &r : history)
        ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const MonthlyRoster *a, const MonthlyRoster *b) { return a->month < b->month; });
    for (const MonthlyRoster *r : ordered)
        for (const auto &[tier, entries] : r->outreach)
            for (const RosterEntry &e : entries) {
                if (!pop.truth.count(e.person))
                    throw std::invalid_argument("roster references unknown person: " + e.person);
                windows.emplace(e.person, TreatmentWindow{r->month, tier});
            }

    bool any_effect = false;
    for (const auto &[tier, fx] : pop.config.planted_effects)
        any_effect |= fx.any();
    if (!any_effect || windows.empty())
        return log;

    EventLogBuilder builder;
    builder.set_data_range(log.data_start, log.data_end);
    static const PlantedEffects kNoEffects{};

    for (const auto &[id, h] : log.persons) {
        if (h.has_demo)
            builder.set_demographics(id, h.demo);
        auto wit = windows.find(id);
        const PlantedEffects *fx = &kNoEffects;
        Date win_start{}, win_end{};
        if (wit != windows.end()) {
            auto fit = pop.config.planted_effects.find(wit->second.tier);
            if (fit != pop.config.planted_effects.end())
                fx = &fit->second;
            win_start = wit->second.entry + 1;
            win_end = wit->second.entry + 365;
        }
        if (wit == windows.end() || !fx->any()) {
            for (const Event &e : h.events)
                builder.add_event(e);
            continue;
        }

        const PersonTruth &t = pop.truth.at(id);
        Rng rng(derive_seed(pop.config.master_seed, "treatment|" + id));
        bool rewrite_jail = fx->booking_pp != 0 || fx->days_in_jail != 0;

        // decide conditional add/removes per kind before copying events
        struct KindShift {
            bool remove_existing = false;
            bool add_one = false;
        };
        auto shift_for = [&](double delta_pp, double baseline, bool has_event) {
            KindShift s;
            double delta = delta_pp / 100.0;
            if (delta > 0 && !has_event && baseline < 1.0)
                s.add_one = rng.coin(std::min(1.0, delta / (1.0 - baseline)));
            else if (delta < 0 && has_event && baseline > 0.0)
                s.remove_existing = rng.coin(std::min(1.0, -delta / baseline));
            return s;
        };

        bool has_care = false, has_admission = false, has_ambulance = false, has_arrest = false;
        for (const Event &e : h.events) {
            if (e.date < win_start || e.date > win_end)
                continue;
            has_care |= e.kind == EventKind::mh_service && e.service_class == ServiceClass::care;
            has_admission |= e.kind == EventKind::mh_admission;
            has_ambulance |= e.kind == EventKind::ambulance_run;
            has_arrest |= e.kind == EventKind::arrest;
        }
        KindShift service_shift = fx->service_pp != 0
                                      ? shift_for(fx->service_pp, t.p_care_service, has_care)
                                      : KindShift{};
        KindShift admission_shift = fx->admission_pp != 0
                                        ? shift_for(fx->admission_pp, t.p_admission, has_admission)
                                        : KindShift{};
        KindShift ambulance_shift = fx->ambulance_pp != 0
                                        ? shift_for(fx->ambulance_pp, t.p_ambulance, has_ambulance)
                                        : KindShift{};
        KindShift arrest_shift =
            fx->arrest_pp != 0 ? shift_for(fx->arrest_pp, t.p_arrest, has_arrest) : KindShift{};

        for (const Event &e : h.events) {
            bool in_window = e.date >= win_start && e.date <= win_end;
            if (rewrite_jail &&
                (e.kind == EventKind::jail_booking || e.kind == EventKind::jail_release)) {
                // keep only the pre-window jail stream; in-window spells are
                // re-drawn below and the post-window tail is irrelevant to
                // every downstream consumer of a treated log
                if (e.date < win_start)
                    builder.add_event(e);
                continue;
            }
            if (in_window) {
                if (service_shift.remove_existing && e.kind == EventKind::mh_service &&
                    e.service_class == ServiceClass::care)
                    continue;
                if (admission_shift.remove_existing && e.kind == EventKind::mh_admission)
                    continue;
                if (ambulance_shift.remove_existing && e.kind == EventKind::ambulance_run)
                    continue;
                if (arrest_shift.remove_existing && e.kind == EventKind::arrest)
                    continue;
            }
            builder.add_event(e);
        }

        auto uniform_window_day = [&]() {
            return win_start + static_cast<int>(rng.below(
                                   static_cast<std::uint64_t>(win_end - win_start + 1)));
        };
        if (service_shift.add_one) {
            Event e{id, uniform_window_day(), EventKind::mh_service};
            e.service_class = ServiceClass::care;
            builder.add_event(e);
        }
        if (admission_shift.add_one)
            builder.add_event(Event{id, uniform_window_day(), EventKind::mh_admission});
        if (ambulance_shift.add_one) {
            Event e{id, uniform_window_day(), EventKind::ambulance_run};
            if (t.mh_latent)
                e.ems_flags.behavioral = true;
            builder.add_event(e);
        }
        if (arrest_shift.add_one) {
            Event e{id, uniform_window_day(), EventKind::arrest};
            e.arrest_type = rng.coin(0.7) ? ArrestType::booked : ArrestType::notice_to_appear;
            builder.add_event(e);
        }

        if (rewrite_jail) {
            double p_target = std::clamp(t.p_qual_booking + fx->booking_pp / 100.0, 0.0, 1.0);
            if (rng.coin(p_target)) {
                double mean_days =
                    std::max(1.0, (t.expected_jail_days + fx->days_in_jail) / p_target);
                int days = 1 + rng.poisson(mean_days - 1.0);
                days = std::clamp(days, 1, 365);
                Date booked = win_start + static_cast<int>(rng.below(
                                              static_cast<std::uint64_t>(365 - days + 1)));
                Event booking{id, booked, EventKind::jail_booking};
                double pick = rng.uniform() * t.qualifying_share;
                if (pick < pop.config.booking_type_probs[0])
                    booking.booking_type = BookingType::on_view;
                else if (pick < pop.config.booking_type_probs[0] + pop.config.booking_type_probs[1])
                    booking.booking_type = BookingType::warrant;
                else
                    booking.booking_type = BookingType::bench_warrant;
                builder.add_event(booking);
                builder.add_event(Event{id, booked + (days - 1), EventKind::jail_release});
            }
        }
    }
    return builder.build();
}

DisparityPlant plant_disparity_scores(const std::vector<int> &labels,
                                      const std::vector<PersonId> &persons,
                                      const std::vector<std::string> &groups,
                                      const std::string &reference, double target_ratio, int k,
                                      double top_precision, std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (persons.size() != n || groups.size() != n)
        throw std::invalid_argument("labels/persons/groups size mismatch");
    if (k <= 0 || static_cast<std::size_t>(k) > n)
        throw std::invalid_argument("k out of range");

    // positives and negatives per side (reference vs rest)
    std::vector<std::size_t> ref_pos, ref_neg, oth_pos, oth_neg;
    for (std::size_t i = 0; i < n; ++i) {
        bool ref = groups[i] == reference;
        if (labels[i])
            (ref ? ref_pos : oth_pos).push_back(i);
        else
            (ref ? ref_neg : oth_neg).push_back(i);
    }
    if (ref_pos.empty() || oth_pos.empty())
        throw std::invalid_argument("both sides need positives to plant a disparity");

    // recall(ref) = ratio * recall(other); total selected positives = top_precision * k
    double budget = top_precision * k;
    double t = budget / (target_ratio * ref_pos.size() + oth_pos.size());
    int a_ref = std::min<int>(static_cast<int>(std::lround(target_ratio * t * ref_pos.size())),
                              static_cast<int>(ref_pos.size()));
    int a_oth = std::min<int>(static_cast<int>(std::lround(t * oth_pos.size())),
                              static_cast<int>(oth_pos.size()));
    int negatives_needed = k - a_ref - a_oth;
    if (negatives_needed < 0 ||
        negatives_needed > static_cast<int>(ref_neg.size() + oth_neg.size()))
        throw std::invalid_argument("disparity plant infeasible for this k/precision");

    Rng rng(seed);
    auto sample = [&](std::vector<std::size_t> &from, int count) {
        for (int i = 0; i < count; ++i) {
            std::size_t j = i + rng.below(from.size() - i);
            std::swap(from[i], from[j]);
        }
        return std::vector<std::size_t>(from.begin(), from.begin() + count);
    };

    std::vector<std::size_t> selected = sample(ref_pos, a_ref);
    for (std::size_t i : sample(oth_pos, a_oth))
        selected.push_back(i);
    // negatives split across both sides in proportion to availability
    std::vector<std::size_t> all_neg = ref_neg;
    all_neg.insert(all_neg.end(), oth_neg.begin(), oth_neg.end());
    for (std::size_t i : sample(all_neg, negatives_needed))
        selected.push_back(i);

    DisparityPlant plant;
    plant.scores.assign(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        plant.scores[i] = 0.45 * rng.uniform(); // everyone below the selected block
    for (std::size_t rank = 0; rank < selected.size(); ++rank)
        plant.scores[selected[rank]] = 1.0 - 1e-6 * static_cast<double>(rank);

    double recall_ref = static_cast<double>(a_ref) / ref_pos.size();
    double recall_oth = static_cast<double>(a_oth) / oth_pos.size();
    plant.achieved_ratio = recall_oth > 0 ? recall_ref / recall_oth : 0.0;
    return plant;
}

void patch_events(EventLog &log, const std::vector<Event> &extra) {
    std::set<PersonId> touched;
    for (const Event &e : extra) {
        log.persons[e.person].events.push_back(e);
        touched.insert(e.person);
    }
    for (const PersonId &id : touched)
        sort_events_and_derive_spells(log.persons[id]);
}

} // namespace proact
