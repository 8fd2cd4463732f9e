#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "covsim/config.hpp"
#include "covsim/engine.hpp"
#include "oracles.hpp"

using namespace covsim;

namespace {

ReplicateInputs tiny_inputs(std::uint32_t n_users, std::uint32_t n_apps, std::uint64_t seed,
                            double avg_degree = 3.0) {
    Rng rng(seed);
    SimJobConfig cfg;
    cfg.network_mode = "config-model";
    cfg.n_users = n_users;
    cfg.degree_median = avg_degree / 1.65;
    cfg.degree_sigma = 1.0;
    cfg.catalog.n_apps = n_apps;
    cfg.catalog.related_size = std::min<std::uint32_t>(3, n_apps - 1);
    cfg.models = {DecisionModelSpec::make(ModelKind::kEBL)};
    return make_inputs_factory(cfg)(seed);
}

}  // namespace

TEST_CASE("install weights floor at one and normalize") {
    const std::vector<std::uint32_t> pair{2, 2};
    const WeightedUserSampler even(pair);
    CHECK(even.probability(0) == 0.5);
    CHECK(even.probability(1) == 0.5);
    const std::vector<std::uint32_t> skewed{0, 3};
    const WeightedUserSampler clamped(skewed);
    CHECK(clamped.probability(0) == 0.25);  // zero-app users stay eligible
    CHECK(clamped.probability(1) == 0.75);
}

TEST_CASE("install-weight sampling matches the table empirically") {
    Rng setup(31);
    std::vector<std::uint32_t> weights(100);
    for (auto& w : weights) w = static_cast<std::uint32_t>(setup.index(20));
    const WeightedUserSampler sampler(weights);

    Rng rng(32);
    constexpr int kDraws = 1000000;
    std::vector<std::uint64_t> observed(weights.size(), 0);
    for (int i = 0; i < kDraws; ++i) ++observed[sampler.sample(rng)];
    for (UserId u = 0; u < weights.size(); ++u) {
        const double expected = sampler.probability(u);
        const double empirical = observed[u] / static_cast<double>(kDraws);
        const double noise_floor = 4.0 * std::sqrt(expected / kDraws);
        CHECK(std::abs(empirical - expected) <= std::max(0.02 * expected, noise_floor));
    }
}

TEST_CASE("an isolated user's first install drives the average to one") {
    oracle::RawInstance raw;
    raw.n_users = 1;
    raw.n_vendors = 4;
    raw.n_files = {7};
    raw.adj.resize(1);
    const auto built = oracle::build(raw);
    ReplicateInputs inputs{built.graph, built.profiles, built.catalog, std::nullopt};

    for (const auto kind : {ModelKind::kFA, ModelKind::kEHB, ModelKind::kEBL}) {
        Simulation sim(inputs, DecisionModelSpec::make(kind), 17, {.target_avg_apps = 1});
        const auto outcome = sim.step();
        CHECK_FALSE(outcome.saturated);
        CHECK(outcome.decision.event_class == EventClass::kNewVendor);
        CHECK(sim.average_aggregate_vfc() == 1.0);
        CHECK(sim.done());
    }
}

TEST_CASE("a repeat vendor leaves the average untouched under the aware model") {
    // two apps, one vendor
    std::vector<App> apps{{0, "a0", 0, 5, {}}, {1, "a1", 0, 5, {}}};
    const AppCatalog catalog(std::move(apps), {"v0"});
    std::vector<SharingProfile> raw(1);
    raw[0].n_files = 4;
    raw[0].install_weight = 1;
    ReplicateInputs inputs{CollaborationGraph::from_edges(1, {}), SharingProfiles(std::move(raw)),
                           catalog, std::nullopt};

    Simulation sim(inputs, DecisionModelSpec::make(ModelKind::kFA), 2, {.target_avg_apps = 2});
    const auto first = sim.step();
    CHECK(first.decision.event_class == EventClass::kNewVendor);
    CHECK(sim.average_aggregate_vfc() == 1.0);
    const auto second = sim.step();
    CHECK(second.decision.event_class == EventClass::kOwnVendor);
    CHECK(sim.average_aggregate_vfc() == 1.0);
    CHECK(sim.installs() == 2);
}

TEST_CASE("a neighbor's install raises the collaborator's aggregate by the edge share") {
    const auto inputs = tiny_inputs(2, 5, 77, 1.0);
    Simulation sim(inputs, DecisionModelSpec::make(ModelKind::kEBL), 9, {.target_avg_apps = 1});
    const auto outcome = sim.step();
    REQUIRE_FALSE(outcome.saturated);
    const UserId installer = outcome.user;
    for (const UserId c : inputs.graph.neighbors(installer)) {
        const FileBitset* shared = inputs.profiles.shared(c, installer);
        const double expected =
            shared == nullptr
                ? 0.0
                : static_cast<double>(shared->count()) / inputs.profiles.n_files(c);
        CHECK(sim.ledger().aggregate_vfc(c) == doctest::Approx(expected).epsilon(1e-12));
    }
}

TEST_CASE("run stops exactly at the install target") {
    const auto inputs = tiny_inputs(1, 6, 3);
    Simulation sim(inputs, DecisionModelSpec::make(ModelKind::kEBL), 4, {.target_avg_apps = 1});
    const auto result = sim.run();
    CHECK(result.steps == 1);
    CHECK(result.installs == 1);
    REQUIRE(result.series.size() == 1);
    CHECK(result.series[0].avg_apps == 1.0);
}

TEST_CASE("identical seeds reproduce byte-identical time series") {
    SimJobConfig cfg;
    cfg.network_mode = "config-model";
    cfg.n_users = 30;
    cfg.degree_median = 3;
    cfg.catalog.n_apps = 60;
    cfg.catalog.related_size = 3;
    cfg.models = {DecisionModelSpec::make(ModelKind::kEHB)};
    cfg.params.target_avg_apps = 6;
    cfg.replicates = 2;
    cfg.master_seed = 101;

    const auto a = run_sim_job(cfg, 1);
    const auto b = run_sim_job(cfg, 2);  // thread count must not matter
    std::ostringstream csv_a, csv_b;
    write_timeseries_csv(a.results[0], csv_a);
    write_timeseries_csv(b.results[0], csv_b);
    CHECK(csv_a.str() == csv_b.str());
    CHECK(a.replicate_seeds == b.replicate_seeds);

    cfg.master_seed = 102;
    const auto c = run_sim_job(cfg, 1);
    std::ostringstream csv_c;
    write_timeseries_csv(c.results[0], csv_c);
    CHECK(csv_a.str() != csv_c.str());
}

TEST_CASE("replicates differ but all keep the average monotone") {
    SimJobConfig cfg;
    cfg.network_mode = "config-model";
    cfg.n_users = 40;
    cfg.degree_median = 3;
    cfg.catalog.n_apps = 80;
    cfg.models = {DecisionModelSpec::make(ModelKind::kEBL)};
    cfg.params.target_avg_apps = 5;
    cfg.params.record_stride = 10;
    cfg.replicates = 3;
    cfg.master_seed = 7;
    const auto out = run_sim_job(cfg);

    const auto& reps = out.results[0];
    CHECK(reps[0].final_avg_aggregate_vfc != reps[1].final_avg_aggregate_vfc);
    for (const auto& rep : reps) {
        double last = 0.0;
        for (const auto& p : rep.series) {
            CHECK(p.avg_aggregate_vfc >= last);
            last = p.avg_aggregate_vfc;
        }
        CHECK(rep.new_vendor + rep.own_vendor + rep.collab_vendor + rep.saturated == rep.steps);
        // per-user finals carry the provenance split and average back to the series
        REQUIRE(rep.final_user_vfc.size() == cfg.n_users);
        double sum = 0.0;
        for (const auto& [self, collab, agg] : rep.final_user_vfc) {
            CHECK(self + collab == doctest::Approx(agg).epsilon(1e-12));
            sum += agg;
        }
        CHECK(sum / cfg.n_users == doctest::Approx(rep.final_avg_aggregate_vfc).epsilon(1e-9));
    }
}

TEST_CASE("incremental average matches recomputation over a long run") {
    const auto inputs = tiny_inputs(50, 120, 13);
    Simulation sim(inputs, DecisionModelSpec::make(ModelKind::kEHB), 21,
                   {.target_avg_apps = 20, .record_stride = 50, .check_invariants = true});
    const auto result = sim.run();  // verify_cached_metrics throws on drift
    CHECK(result.installs >= 1000);
    sim.verify_cached_metrics(1e-9);
}

TEST_CASE("a drained catalog saturates instead of spinning") {
    oracle::RawInstance raw;
    raw.n_users = 1;
    raw.n_vendors = 1;
    raw.n_files = {3};
    raw.adj.resize(1);
    const auto built = oracle::build(raw);
    ReplicateInputs inputs{built.graph, built.profiles, built.catalog, std::nullopt};

    Simulation sim(inputs, DecisionModelSpec::make(ModelKind::kEBL), 5,
                   {.target_avg_apps = 2, .max_steps = 40});
    const auto result = sim.run();
    CHECK(result.installs == 1);  // the only app
    CHECK(result.steps == 40);
    CHECK(result.saturated == 39);
    CHECK(result.new_vendor + result.own_vendor + result.collab_vendor + result.saturated ==
          result.steps);
    CHECK(result.final_avg_aggregate_vfc == 1.0);
}

TEST_CASE("comparative run pairs arms and reports self-ratio one") {
    SimJobConfig cfg;
    cfg.network_mode = "config-model";
    cfg.n_users = 40;
    cfg.degree_median = 3;
    cfg.catalog.n_apps = 80;
    cfg.models = {DecisionModelSpec::make(ModelKind::kFA),
                  DecisionModelSpec::make(ModelKind::kEBL)};
    cfg.params.target_avg_apps = 6;
    cfg.params.record_stride = 20;
    cfg.replicates = 2;
    cfg.master_seed = 55;
    const auto out = run_sim_job(cfg);

    CHECK(out.baseline == "EBL");
    CHECK(out.final_ratio.at("EBL").mean == 1.0);
    for (const double r : out.final_ratio.at("EBL").per_replicate) CHECK(r == 1.0);
    CHECK(out.final_ratio.at("FA").mean > 0.0);
    const auto series = out.ratio_series("EBL", 0);
    for (const auto& [x, ratio] : series) CHECK(ratio == 1.0);
    // the baseline arm alone reproduces the paired arm's trajectory
    SimJobConfig solo = cfg;
    solo.models = {DecisionModelSpec::make(ModelKind::kEBL)};
    const auto alone = run_sim_job(solo);
    CHECK(alone.results[0][0].final_avg_aggregate_vfc ==
          out.results[1][0].final_avg_aggregate_vfc);
}

TEST_CASE("summary JSON carries ratios, seeds, and event totals") {
    SimJobConfig cfg;
    cfg.network_mode = "config-model";
    cfg.n_users = 20;
    cfg.degree_median = 2;
    cfg.catalog.n_apps = 50;
    cfg.models = {DecisionModelSpec::make(ModelKind::kFA),
                  DecisionModelSpec::make(ModelKind::kEHB),
                  DecisionModelSpec::make(ModelKind::kEBL)};
    cfg.params.target_avg_apps = 3;
    cfg.replicates = 2;
    cfg.master_seed = 9;
    const auto out = run_sim_job(cfg);
    const auto j = summary_json(out, nlohmann::json{{"note", "test"}});
    CHECK(j["baseline"] == "EBL");
    CHECK(j["final_ratio_vs_baseline"].contains("FA"));
    CHECK(j["final_ratio_vs_baseline"].contains("EHB"));
    CHECK(j["replicate_seeds"].size() == 2);
    CHECK(j["event_totals"]["EBL"]["steps"].get<std::uint64_t>() > 0);
    CHECK(j["config"]["note"] == "test");
}

TEST_CASE("config parsing rejects bad fields with their path") {
    const auto parse = [](const char* text) { return parse_sim_config(nlohmann::json::parse(text)); };
    CHECK_THROWS_WITH_AS(parse(R"({"models":["FA"]})"), doctest::Contains("network"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse(R"({"network":{"mode":"nope"},"models":["FA"]})"),
                         doctest::Contains("network.mode"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse(R"({"network":{"mode":"config-model","n":4},"models":["XX"]})"),
        doctest::Contains("models[0]"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse(R"({"network":{"mode":"config-model","n":4},"models":["FA"],"target_avg_apps":0})"),
        doctest::Contains("target_avg_apps"), ConfigError);
    CHECK_THROWS_WITH_AS(
        parse(R"({"network":{"mode":"config-model","n":4},"models":["FA"],"typo":1})"),
        doctest::Contains("typo"), ConfigError);
}

TEST_CASE("the thread cap honors the environment variable") {
    ::setenv("COVERAGE_SIM_THREADS", "3", 1);
    CHECK(default_thread_count() == 3);
    ::setenv("COVERAGE_SIM_THREADS", "junk", 1);
    CHECK(default_thread_count() >= 1);
    ::unsetenv("COVERAGE_SIM_THREADS");
    CHECK(default_thread_count() >= 1);
}

TEST_CASE("the event log is bounded by the configured limit") {
    const auto inputs = tiny_inputs(10, 30, 6);
    Simulation sim(inputs, DecisionModelSpec::make(ModelKind::kEBL), 8,
                   {.target_avg_apps = 5, .event_log_limit = 7});
    const auto result = sim.run();
    CHECK(result.installs == 50);
    CHECK(result.events.size() == 7);
    CHECK(result.events.front().step == 1);
}

TEST_CASE("team mode tracks teammate vendors during the run") {
    SimJobConfig cfg;
    cfg.network_mode = "config-model";
    cfg.n_users = 30;
    cfg.degree_median = 2;
    cfg.components = 3;
    cfg.team_mode = true;
    cfg.catalog.n_apps = 60;
    cfg.models = {DecisionModelSpec::make(ModelKind::kEHB)};
    cfg.params.target_avg_apps = 4;
    cfg.replicates = 1;
    cfg.master_seed = 33;
    for (auto& m : cfg.models) m.scope = DecisionScope::kTeam;
    const auto out = run_sim_job(cfg);
    const auto& rep = out.results[0][0];
    CHECK(rep.installs >= 120);
    CHECK(rep.new_vendor + rep.own_vendor + rep.collab_vendor + rep.saturated == rep.steps);
}
