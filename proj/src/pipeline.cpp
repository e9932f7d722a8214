#include "proact/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "proact/csv.hpp"
#include "proact/event_store.hpp"
#include "proact/fairness.hpp"
#include "proact/manifest.hpp"
#include "proact/rng.hpp"

namespace proact {

EventLog load_event_log(const ExperimentConfig &cfg, const std::filesystem::path &dir,
                        std::vector<RejectRow> *rejects_out) {
    IngestPaths paths = population_file_paths(dir);
    IngestOptions options;
    options.min_date = cfg.sim.span_start;
    options.max_date = cfg.sim.span_end;
    IngestResult result = ingest(paths, options);
    if (rejects_out)
        *rejects_out = result.rejects;
    return std::move(result.log);
}

EvaluationRun run_intertemporal_evaluation(const EventLog &log, const ExperimentConfig &cfg,
                                           const std::vector<ModelSpec> &specs) {
    EvaluationRun run;
    std::string warning;
    std::vector<TemporalSplit> splits = generate_splits(
        cfg.splits_start, cfg.splits_end, cfg.label_window_days, log.data_end, &warning);
    if (!warning.empty())
        run.warnings.push_back(warning);

    std::vector<EvalResult> all_results;
    for (const TemporalSplit &split : splits) {
        CohortSpec train_spec;
        train_spec.as_of = split.as_of - cfg.label_window_days;
        train_spec.lookback_days = cfg.lookback_days;
        train_spec.label_window_days = cfg.label_window_days;
        train_spec.qualifying_booking_types = cfg.qualifying_booking_types;
        if (train_spec.as_of < log.data_start) {
            run.warnings.push_back("split " + split.as_of.to_string() +
                                   " skipped: training cutoff precedes data start");
            continue;
        }

        CohortSpec test_spec = train_spec;
        test_spec.as_of = split.as_of;

        LabeledCohort train_cohort = build_labeled_cohort(log, train_spec);
        AssembledMatrix train_m = assemble_matrix(log, train_cohort, cfg.feature_schema, true);
        int train_pos = 0;
        for (int v : train_m.labels)
            train_pos += v;
        if (train_m.labels.size() < 2 || train_pos == 0 ||
            train_pos == static_cast<int>(train_m.labels.size())) {
            run.warnings.push_back("split " + split.as_of.to_string() +
                                   " skipped: degenerate training labels");
            continue;
        }

        LabeledCohort test_cohort = build_labeled_cohort(log, test_spec);
        AssembledMatrix test_m = assemble_matrix(log, test_cohort, cfg.feature_schema, true);
        if (static_cast<int>(test_m.X.rows()) < cfg.k) {
            run.warnings.push_back("split " + split.as_of.to_string() +
                                   " skipped: cohort smaller than k");
            continue;
        }

        Imputer imputer = Imputer::fit(train_m.X);
        FeatureMatrix train_imputed = train_m.X;
        imputer.apply(train_imputed);

        SplitEvaluation se;
        se.split = split;
        for (const ModelSpec &spec : specs) {
            TrainedScorer scorer = train(spec, train_imputed, train_m.labels, imputer);
            std::vector<double> scores = scorer.score(test_m.X);
            EvalResult r = evaluate_topk(scores, test_m.labels, test_m.X.persons, cfg.k);
            r.spec_id = spec.id();
            r.split_as_of = split.as_of;
            se.results.push_back(r);
            all_results.push_back(std::move(r));
        }
        // baseline precision is model-independent; reuse the first result's k
        se.baseline = baseline_comparison(se.results.front(), log, test_m.X.persons,
                                          test_m.labels, split.as_of);
        run.splits.push_back(std::move(se));
    }

    run.leaderboard = select_model(specs, all_results, cfg.select_epsilon);
    return run;
}

TrainedScorer train_at(const EventLog &log, const ExperimentConfig &cfg, const ModelSpec &spec,
                       Date as_of) {
    CohortSpec train_spec;
    train_spec.as_of = as_of - cfg.label_window_days;
    train_spec.lookback_days = cfg.lookback_days;
    train_spec.label_window_days = cfg.label_window_days;
    train_spec.qualifying_booking_types = cfg.qualifying_booking_types;
    LabeledCohort cohort = build_labeled_cohort(log, train_spec);
    AssembledMatrix m = assemble_matrix(log, cohort, cfg.feature_schema, true);
    Imputer imputer = Imputer::fit(m.X);
    FeatureMatrix imputed = m.X;
    imputer.apply(imputed);
    return train(spec, imputed, m.labels, imputer);
}

MonthlyScorer oracle_scorer(const SynthPopulation &pop) {
    const auto *truth = &pop.truth;
    return [truth](const EventLog &, const std::vector<PersonId> &subset, Date) {
        std::vector<std::pair<PersonId, double>> out;
        out.reserve(subset.size());
        for (const PersonId &id : subset) {
            auto it = truth->find(id);
            out.emplace_back(id, it == truth->end() ? 0.0 : it->second.latent);
        }
        return out;
    };
}

MonthlyScorer model_scorer(const TrainedScorer &scorer, const FeatureSchema &schema) {
    return [&scorer, schema](const EventLog &log, const std::vector<PersonId> &subset,
                             Date month) {
        LabeledCohort cohort;
        cohort.as_of = month;
        for (const PersonId &id : subset)
            cohort.members.push_back(CohortMember{id, true, Label::unobservable});
        AssembledMatrix m = assemble_matrix(log, cohort, schema, false);
        std::vector<double> scores = scorer.score(m.X);
        std::vector<std::pair<PersonId, double>> out;
        out.reserve(scores.size());
        for (std::size_t i = 0; i < scores.size(); ++i)
            out.emplace_back(m.X.persons[i], scores[i]);
        return out;
    };
}

TrialRun run_trial_months(EventLog log, const ExperimentConfig &cfg, const MonthlyScorer &scorer,
                          bool inject_contacts) {
    TrialRun run{TrialState(cfg.seed), {}, {}};
    for (int i = 0; i < cfg.trial_months; ++i) {
        Date month = cfg.trial_start_month.add_months(i);
        CohortSpec spec;
        spec.as_of = month;
        spec.lookback_days = cfg.lookback_days;
        spec.label_window_days = cfg.label_window_days;
        spec.qualifying_booking_types = cfg.qualifying_booking_types;
        std::vector<PersonId> cohort = build_cohort(log, spec);
        std::vector<PersonId> subset = apply_mh_subset(log, cohort, month);

        run.state.sync_contacts(log, month);
        std::vector<std::pair<PersonId, double>> scores = scorer(log, subset, month);
        MonthlyRoster roster = select_monthly(run.state, scores, month, cfg.quotas);

        if (inject_contacts && cfg.contact_success_prob > 0) {
            Rng rng(derive_seed(cfg.seed, "mcrt", static_cast<std::uint64_t>(month.days())));
            std::vector<Event> contacts;
            for (const auto &[tier, entries] : roster.outreach)
                for (const RosterEntry &e : entries)
                    if (rng.coin(cfg.contact_success_prob)) {
                        Date day = month + 1 + static_cast<int>(rng.below(26));
                        contacts.push_back(Event{e.person, day, EventKind::mcrt_contact});
                    }
            patch_events(log, contacts);
        }
        run.rosters.push_back(std::move(roster));
    }
    run.working_log = std::move(log);
    return run;
}

AnalysisRun run_analysis(const EventLog &log, const TrialState &state,
                         const ExperimentConfig &cfg) {
    AnalysisRun out;
    std::vector<OutcomeRecord> records =
        compute_outcomes(log, state, cfg.qualifying_booking_types);

    for (int tier : {1, 2, 3}) {
        try {
            out.balance.emplace_back(tier, balance_table(records, tier));
        } catch (const std::exception &e) {
            out.notes.push_back("balance tier " + std::to_string(tier) + ": " + e.what());
        }
    }

    IttOptions base;
    base.pandemic_threshold = cfg.pandemic_threshold;
    base.min_records = cfg.min_analysis_records;

    auto attempt = [&](const std::string &name, const IttOptions &opt) {
        try {
            out.effects[name] = itt_effects(records, opt);
        } catch (const std::exception &e) {
            out.notes.push_back(name + ": " + e.what());
        }
    };
    for (int tier : {1, 2, 3}) {
        IttOptions opt = base;
        opt.tiers = {tier};
        attempt("tier" + std::to_string(tier), opt);
    }
    {
        IttOptions opt = base;
        opt.tiers = {1, 2};
        attempt("tier12_pooled", opt);
    }
    for (bool pre : {true, false}) {
        IttOptions opt = base;
        opt.tiers = {1};
        opt.pre_pandemic = pre;
        attempt(pre ? "tier1_pre_pandemic" : "tier1_during_pandemic", opt);
    }
    return out;
}

// ---------------------------------------------------------------------------
// subcommand bodies

namespace {

RunManifest start_manifest(const ExperimentConfig &cfg, const std::filesystem::path &config_path,
                           const std::string &subcommand) {
    RunManifest m;
    m.subcommand = subcommand;
    m.seed = cfg.seed;
    m.config_path = config_path.string();
    if (!config_path.empty() && std::filesystem::exists(config_path))
        m.config_digest = digest_file(config_path);
    return m;
}

void add_data_digests(RunManifest &m, const std::filesystem::path &dir) {
    IngestPaths paths = population_file_paths(dir);
    for (const auto &[kind, path] : paths.event_files)
        if (std::filesystem::exists(path))
            m.input_digests[path.string()] = digest_file(path);
    if (std::filesystem::exists(paths.persons_file))
        m.input_digests[paths.persons_file.string()] = digest_file(paths.persons_file);
}

void finish_manifest(RunManifest &m, const ExperimentConfig &cfg) {
    std::filesystem::create_directories(cfg.out_dir);
    write_manifest(m, cfg.out_dir / ("manifest-" + m.subcommand + ".json"));
}

std::vector<std::string> race_groups_of(const EventLog &log,
                                        const std::vector<PersonId> &persons,
                                        int min_group_size) {
    std::vector<std::string> groups(persons.size());
    std::map<std::string, int> counts;
    for (std::size_t i = 0; i < persons.size(); ++i) {
        const PersonHistory *h = log.find(persons[i]);
        groups[i] = h && h->has_demo && !h->demo.race_ethnicity.empty() ? h->demo.race_ethnicity
                                                                        : "unknown";
        counts[groups[i]] += 1;
    }
    for (std::string &g : groups)
        if (counts[g] < min_group_size)
            g = "small_groups";
    return groups;
}

} // namespace

void cmd_simulate(const ExperimentConfig &cfg, const std::filesystem::path &config_path) {
    RunManifest m = start_manifest(cfg, config_path, "simulate");
    SynthPopulation pop = generate_population(cfg.sim);
    write_population_files(pop, cfg.data_dir);
    IngestPaths paths = population_file_paths(cfg.data_dir);
    for (const auto &[kind, path] : paths.event_files)
        m.outputs.push_back(path.string());
    m.outputs.push_back(paths.persons_file.string());
    m.outputs.push_back((cfg.data_dir / "ground_truth.csv").string());
    finish_manifest(m, cfg);
    std::cout << "simulate: " << pop.log.persons.size() << " persons, " << pop.log.event_count()
              << " events -> " << cfg.data_dir.string() << "\n";
}

void cmd_ingest(const ExperimentConfig &cfg, const std::filesystem::path &config_path) {
    RunManifest m = start_manifest(cfg, config_path, "ingest");
    add_data_digests(m, cfg.data_dir);
    std::vector<RejectRow> rejects;
    EventLog log = load_event_log(cfg, cfg.data_dir, &rejects);
    std::filesystem::create_directories(cfg.out_dir);
    write_rejects_report(cfg.out_dir / "rejects.csv", rejects);
    m.outputs.push_back((cfg.out_dir / "rejects.csv").string());
    finish_manifest(m, cfg);
    std::size_t orphan_releases = 0;
    for (const auto &[id, h] : log.persons)
        orphan_releases += h.orphan_releases.size();
    std::cout << "ingest: " << log.persons.size() << " persons, " << log.event_count()
              << " events, " << rejects.size() << " rejects, " << orphan_releases
              << " orphan releases\n";
}

void cmd_cohort(const ExperimentConfig &cfg, const std::filesystem::path &config_path,
                Date as_of) {
    RunManifest m = start_manifest(cfg, config_path, "cohort");
    add_data_digests(m, cfg.data_dir);
    EventLog log = load_event_log(cfg, cfg.data_dir);
    CohortSpec spec;
    spec.as_of = as_of;
    spec.lookback_days = cfg.lookback_days;
    spec.label_window_days = cfg.label_window_days;
    spec.qualifying_booking_types = cfg.qualifying_booking_types;
    LabeledCohort cohort = build_labeled_cohort(log, spec);
    std::filesystem::create_directories(cfg.out_dir);
    std::filesystem::path out = cfg.out_dir / ("cohort-" + as_of.to_string() + ".csv");
    write_cohort_snapshot(out, cohort);
    m.outputs.push_back(out.string());
    finish_manifest(m, cfg);
    int subset = 0;
    for (const CohortMember &member : cohort.members)
        subset += member.in_mh_subset ? 1 : 0;
    std::cout << "cohort " << as_of.to_string() << ": " << cohort.members.size() << " members, "
              << subset << " in MH subset\n";
}

void cmd_evaluate(const ExperimentConfig &cfg, const std::filesystem::path &config_path,
                  bool full_grid) {
    RunManifest m = start_manifest(cfg, config_path, "evaluate");
    add_data_digests(m, cfg.data_dir);
    EventLog log = load_event_log(cfg, cfg.data_dir);
    GridConfig grid = full_grid ? cfg.grid : cfg.grid.with_tree_cap(cfg.desk_tree_cap);
    std::vector<ModelSpec> specs = expand_grid(grid, cfg.seed);
    EvaluationRun run = run_intertemporal_evaluation(log, cfg, specs);

    std::filesystem::create_directories(cfg.out_dir);
    write_leaderboard(cfg.out_dir / "leaderboard.tsv", run.leaderboard);

    nlohmann::json j;
    j["winner"] = run.leaderboard.winner_spec_id;
    if (!run.leaderboard.rows.empty()) {
        const LeaderboardRow &top = run.leaderboard.rows.front();
        j["mean_precision_at_k"] = top.mean_precision;
        j["n_splits"] = top.n_splits;
        for (const ModelSpec &s : specs)
            if (s.id() == top.spec_id) {
                j["family"] = to_string(s.family);
                j["hyperparams"] = s.hyperparams;
                j["seed"] = s.seed;
            }
    }
    nlohmann::json baselines = nlohmann::json::array();
    for (const SplitEvaluation &se : run.splits)
        baselines.push_back({{"split", se.split.as_of.to_string()},
                             {"baseline_precision", se.baseline.baseline_precision},
                             {"prevalence", se.baseline.prevalence}});
    j["baselines"] = std::move(baselines);
    j["warnings"] = run.warnings;
    std::ofstream winner(cfg.out_dir / "winner.json");
    winner << j.dump(1) << '\n';

    m.outputs.push_back((cfg.out_dir / "leaderboard.tsv").string());
    m.outputs.push_back((cfg.out_dir / "winner.json").string());
    finish_manifest(m, cfg);
    std::cout << "evaluate: " << run.splits.size() << " splits, winner "
              << run.leaderboard.winner_spec_id << "\n";
    for (const std::string &w : run.warnings)
        std::cout << "  warning: " << w << "\n";
}

void cmd_train(const ExperimentConfig &cfg, const std::filesystem::path &config_path,
               Date as_of) {
    RunManifest m = start_manifest(cfg, config_path, "train");
    add_data_digests(m, cfg.data_dir);
    std::filesystem::path winner_path = cfg.out_dir / "winner.json";
    if (!std::filesystem::exists(winner_path))
        throw std::invalid_argument("train needs " + winner_path.string() +
                                    "; run evaluate first");
    std::ifstream in(winner_path);
    nlohmann::json j;
    in >> j;
    ModelSpec spec;
    auto fam = model_family_from(j.at("family").get<std::string>());
    if (!fam)
        throw std::invalid_argument("winner.json has an unknown family");
    spec.family = *fam;
    spec.hyperparams = j.at("hyperparams").get<std::map<std::string, std::string>>();
    spec.seed = j.at("seed").get<std::uint64_t>();

    EventLog log = load_event_log(cfg, cfg.data_dir);
    TrainedScorer scorer = train_at(log, cfg, spec, as_of);
    std::filesystem::path out = cfg.out_dir / ("model-" + as_of.to_string() + ".json");
    scorer.save(out);
    m.input_digests[winner_path.string()] = digest_file(winner_path);
    m.outputs.push_back(out.string());
    finish_manifest(m, cfg);
    std::cout << "train: " << spec.id() << " fitted at " << as_of.to_string() << " -> "
              << out.string() << "\n";
}

void cmd_audit_fairness(const ExperimentConfig &cfg, const std::filesystem::path &config_path,
                        Date as_of, int k) {
    RunManifest m = start_manifest(cfg, config_path, "audit-fairness");
    add_data_digests(m, cfg.data_dir);
    EventLog log = load_event_log(cfg, cfg.data_dir);

    CohortSpec spec;
    spec.as_of = as_of;
    spec.lookback_days = cfg.lookback_days;
    spec.label_window_days = cfg.label_window_days;
    spec.qualifying_booking_types = cfg.qualifying_booking_types;
    LabeledCohort cohort = build_labeled_cohort(log, spec);
    AssembledMatrix eval = assemble_matrix(log, cohort, cfg.feature_schema, true);
    if (static_cast<int>(eval.X.rows()) < k)
        throw std::invalid_argument("cohort smaller than k at " + as_of.to_string());

    std::vector<double> scores;
    if (cfg.trial_scorer.rfind("model:", 0) == 0) {
        TrainedScorer scorer = TrainedScorer::load(cfg.trial_scorer.substr(6));
        scores = scorer.score(eval.X);
    } else {
        SynthPopulation pop = generate_population(cfg.sim);
        scores.reserve(eval.X.persons.size());
        for (const PersonId &id : eval.X.persons) {
            auto it = pop.truth.find(id);
            scores.push_back(it == pop.truth.end() ? 0.0 : it->second.latent);
        }
    }

    std::vector<std::string> groups =
        race_groups_of(log, eval.X.persons, cfg.fairness_min_group_size);
    std::string reference = cfg.fairness_reference;
    bool have_ref = false;
    for (const std::string &g : groups)
        have_ref |= g == reference;
    if (!have_ref)
        throw std::invalid_argument("reference group absent from cohort: " + reference);

    GroupAudit audit = group_metrics_at_k(scores, eval.labels, eval.X.persons, groups, k,
                                          reference);
    std::vector<std::string> roc_warnings;
    auto curves = roc_by_group(scores, eval.labels, groups, &roc_warnings);
    RecallEqualization eq =
        equalize_recall_thresholds(scores, eval.labels, eval.X.persons, groups, k);

    std::filesystem::path dir = cfg.out_dir / "fairness";
    std::filesystem::create_directories(dir);
    write_group_audit(dir / "audit.csv", audit);
    write_roc_points(dir, as_of.to_string(), curves);
    {
        CsvWriter w(dir / "equalized.csv");
        w.row({"group", "k", "achieved_recall", "uniform_recall", "feasible"});
        for (const auto &[g, kk] : eq.per_group_k) {
            const GroupStats &gs = audit.groups.at(g);
            w.row({g, std::to_string(kk), format_double(eq.achieved_recall.at(g), 8),
                   gs.recall_defined ? format_double(gs.recall, 8) : "undefined",
                   eq.feasible ? "true" : "false"});
        }
    }
    m.outputs.push_back((dir / "audit.csv").string());
    m.outputs.push_back((dir / "equalized.csv").string());
    finish_manifest(m, cfg);
    std::cout << "audit-fairness: " << audit.groups.size() << " groups at k=" << k << "\n";
    for (const std::string &w : roc_warnings)
        std::cout << "  warning: " << w << "\n";
}

void cmd_trial_run(const ExperimentConfig &cfg, const std::filesystem::path &config_path) {
    RunManifest m = start_manifest(cfg, config_path, "trial-run");
    add_data_digests(m, cfg.data_dir);
    std::filesystem::path trial_dir = cfg.out_dir / "trial";
    DirectoryLock lock(trial_dir);

    EventLog log = load_event_log(cfg, cfg.data_dir);

    std::optional<SynthPopulation> pop;
    MonthlyScorer scorer;
    std::optional<TrainedScorer> model;
    if (cfg.trial_scorer.rfind("model:", 0) == 0) {
        model = TrainedScorer::load(cfg.trial_scorer.substr(6));
        scorer = model_scorer(*model, cfg.feature_schema);
    } else {
        pop = generate_population(cfg.sim);
        scorer = oracle_scorer(*pop);
    }

    TrialRun run = run_trial_months(std::move(log), cfg, scorer);
    run.state.save(trial_dir / "state.log");
    m.outputs.push_back((trial_dir / "state.log").string());
    for (const MonthlyRoster &roster : run.rosters) {
        std::filesystem::path outreach =
            trial_dir / ("roster-" + roster.month.to_string() + ".csv");
        std::filesystem::path audit =
            trial_dir / ("roster-audit-" + roster.month.to_string() + ".csv");
        export_roster(roster, outreach, audit, cfg.seed);
        m.outputs.push_back(outreach.string());
        m.outputs.push_back(audit.string());
    }

    // synthetic mode: planted effects land in a treated copy of the data
    if (pop) {
        EventLog treated = apply_treatment(run.working_log, run.rosters, *pop);
        SynthPopulation treated_pop;
        treated_pop.config = pop->config;
        treated_pop.log = std::move(treated);
        treated_pop.truth = pop->truth;
        write_population_files(treated_pop, trial_dir / "treated_data");
        m.outputs.push_back((trial_dir / "treated_data").string());
    }
    finish_manifest(m, cfg);
    std::cout << "trial-run: " << run.rosters.size() << " months -> " << trial_dir.string()
              << "\n";
}

void cmd_analyze(const ExperimentConfig &cfg, const std::filesystem::path &config_path) {
    RunManifest m = start_manifest(cfg, config_path, "analyze");
    std::filesystem::path trial_dir = cfg.out_dir / "trial";
    std::filesystem::path state_path = trial_dir / "state.log";
    if (!std::filesystem::exists(state_path))
        throw std::invalid_argument("analyze needs " + state_path.string() +
                                    "; run trial-run first");
    TrialState state = TrialState::load(state_path);
    m.input_digests[state_path.string()] = digest_file(state_path);

    std::filesystem::path data_dir = trial_dir / "treated_data";
    if (!std::filesystem::exists(data_dir))
        data_dir = cfg.data_dir;
    add_data_digests(m, data_dir);
    EventLog log = load_event_log(cfg, data_dir);

    AnalysisRun analysis = run_analysis(log, state, cfg);
    std::filesystem::path dir = cfg.out_dir / "analysis";
    std::filesystem::create_directories(dir);
    write_balance_table(dir / "balance.csv", analysis.balance);
    m.outputs.push_back((dir / "balance.csv").string());
    for (const auto &[name, effects] : analysis.effects) {
        std::filesystem::path path = dir / ("effects-" + name + ".csv");
        write_effect_table(path, effects);
        m.outputs.push_back(path.string());
    }
    {
        std::ofstream notes(dir / "notes.txt");
        for (const std::string &n : analysis.notes)
            notes << n << '\n';
    }
    finish_manifest(m, cfg);
    std::cout << "analyze: " << analysis.effects.size() << " effect tables, "
              << analysis.notes.size() << " notes\n";
}

void cmd_replay(const ExperimentConfig &cfg, const std::filesystem::path &config_path) {
    std::filesystem::path state_path = cfg.out_dir / "trial" / "state.log";
    TrialState state = TrialState::load(state_path); // throws on integrity failure
    RunManifest m = start_manifest(cfg, config_path, "replay");
    m.input_digests[state_path.string()] = digest_file(state_path);
    finish_manifest(m, cfg);
    std::cout << "replay: " << state.records().size() << " records verified, "
              << state.summaries().size() << " selection summaries\n";
}

} // namespace proact
