#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "proact/event_store.hpp"
#include "proact/events.hpp"
#include "proact/trial.hpp"

namespace proact {

// Annual event rate as a function of latent risk u in [0,1]:
//   rate(u) = base + slope * u^risk_exponent   (events per year)
// Converted to a daily hazard h = 1 - exp(-rate/365); events of a kind occur
// on independent days, so one-year propensities have closed forms.
struct KindRate {
    double base = 0.0;
    double slope = 0.0;
};

struct PlantedEffects {
    double service_pp = 0.0;   // percentage points on P(any care service in window)
    double admission_pp = 0.0;
    double ambulance_pp = 0.0;
    double arrest_pp = 0.0;
    double booking_pp = 0.0;
    double days_in_jail = 0.0; // additive shift on expected window jail days
    bool any() const {
        return service_pp != 0 || admission_pp != 0 || ambulance_pp != 0 || arrest_pp != 0 ||
               booking_pp != 0 || days_in_jail != 0;
    }
};

struct SimConfig {
    int n_persons = 10000;
    Date span_start = Date::from_ymd(2012, 1, 1);
    Date span_end = Date::from_ymd(2020, 12, 31);
    std::uint64_t master_seed = 20190501;

    double risk_exponent = 3.0;
    KindRate booking{0.08, 1.9};
    KindRate arrest{0.10, 0.45};
    KindRate service{0.25, 0.40};  // mh-latent persons only; class drawn per event
    KindRate admission{0.08, 0.14}; // mh-latent persons only
    KindRate ambulance{0.10, 0.25};
    KindRate screening{0.30, 0.0};
    KindRate contact{0.04, 0.0};   // background MCRT contacts, mh-latent persons only

    double care_class_prob = 0.55;
    double spell_base_days = 2.0;
    double spell_slope_days = 30.0; // spell length = round(base + slope * u^2), days
    // on_view, warrant, bench_warrant, post_conviction, other
    std::array<double, 5> booking_type_probs{0.35, 0.30, 0.20, 0.10, 0.05};

    double mh_latent_prob = 0.35;
    double in_county_prob = 0.86;
    double move_prob = 0.05;       // mid-span address redraw (same in-county probability)
    double missing_demo_prob = 0.02;
    double male_prob = 0.65;
    double ems_flag_prob = 0.65; // flagged share of ambulance runs for mh-latent persons
    std::vector<std::pair<std::string, double>> race_groups = {
        {"white", 0.55}, {"black", 0.25}, {"hispanic", 0.15}, {"other", 0.05}};

    std::map<int, PlantedEffects> planted_effects; // keyed by trial tier
};

// Per-person ground truth: latent risk, daily hazards and exact one-year
// propensities for a 365-day window entered while out of jail.
struct PersonTruth {
    double latent = 0.0;
    bool mh_latent = false;
    bool in_county_initial = false;
    std::string group;

    double h_booking = 0.0; // daily hazards
    double h_arrest = 0.0;
    double h_service = 0.0;
    double h_admission = 0.0;
    double h_ambulance = 0.0;
    int spell_days = 1;
    double qualifying_share = 0.0;

    double p_qual_booking = 0.0;  // P(any qualifying booking in 365d | free at start)
    double expected_jail_days = 0.0;
    double p_care_service = 0.0;
    double p_admission = 0.0;
    double p_ambulance = 0.0;
    double p_arrest = 0.0;
};

struct SynthPopulation {
    SimConfig config;
    EventLog log;
    std::map<PersonId, PersonTruth> truth;
};

SynthPopulation generate_population(const SimConfig &config);

// Exact window analytics for the discrete daily process with jail blocking.
double qualifying_booking_prob(double h_booking, double qualifying_share, int spell_days,
                               int window_days = 365);
double expected_jail_days(double h_booking, int spell_days, int window_days = 365);

// Emits the ingest-format event files plus persons.csv and ground_truth.csv.
void write_population_files(const SynthPopulation &pop, const std::filesystem::path &dir);
IngestPaths population_file_paths(const std::filesystem::path &dir);

// Applies the configured per-tier effects to outreach-list members' first
// follow-up windows. Kinds with zero planted effect keep their original
// events; with all effects zero the log comes back unchanged. Throws when a
// roster references a person missing from the population.
EventLog apply_treatment(const EventLog &log, const std::vector<MonthlyRoster> &history,
                         const SynthPopulation &pop);

// Constructs scores whose global top-k realizes a chosen recall-disparity
// ratio between the reference group and everyone else, for auditing tests.
struct DisparityPlant {
    std::vector<double> scores;
    double achieved_ratio = 0.0;
};
DisparityPlant plant_disparity_scores(const std::vector<int> &labels,
                                      const std::vector<PersonId> &persons,
                                      const std::vector<std::string> &groups,
                                      const std::string &reference, double target_ratio, int k,
                                      double top_precision, std::uint64_t seed);

// Single-writer patch used by the trial simulation driver to feed generated
// MCRT contacts back into a working copy of the log between monthly batches.
void patch_events(EventLog &log, const std::vector<Event> &extra);

} // namespace proact
