#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "covsim/catalog.hpp"
#include "covsim/decision.hpp"
#include "covsim/graph.hpp"
#include "covsim/ledger.hpp"
#include "covsim/rng.hpp"
#include "covsim/sharing.hpp"

namespace covsim {

/// Per-user install-frequency sampling table: P(u) = max(w_u, 1) / sum.
/// Users with no recorded apps keep a floor weight of one.
class WeightedUserSampler {
public:
    explicit WeightedUserSampler(std::span<const std::uint32_t> weights);
    UserId sample(Rng& rng) const;
    double probability(UserId u) const;
    std::uint64_t total_weight() const { return cumulative_.back(); }

private:
    std::vector<std::uint64_t> cumulative_;
};

WeightedUserSampler assign_install_weights(const SharingProfiles& profiles);

/// Everything one replicate runs on. Arms of a paired comparison share one
/// ReplicateInputs instance and never mutate it.
struct ReplicateInputs {
    CollaborationGraph graph;
    SharingProfiles profiles;
    AppCatalog catalog;
    std::optional<TeamAssignment> teams;
};

using InputsFactory = std::function<ReplicateInputs(std::uint64_t replicate_seed)>;

struct SimParams {
    double target_avg_apps = 30.0;
    std::uint64_t record_stride = 0;  // installs between samples; 0 picks ~200 samples
    std::uint64_t max_steps = 0;      // hard stop guard; 0 derives 20x the install budget
    std::uint32_t resample_cap = 100;
    std::size_t event_log_limit = 0;
    bool check_invariants = false;
};

struct TimePoint {
    std::uint64_t step = 0;
    std::uint64_t installs = 0;
    double avg_apps = 0.0;
    double avg_aggregate_vfc = 0.0;
    std::uint64_t new_vendor = 0;
    std::uint64_t own_vendor = 0;
    std::uint64_t collab_vendor = 0;
    std::uint64_t saturated = 0;
};

struct EventRecord {
    std::uint64_t step = 0;
    UserId user = 0;
    AppId a0 = 0;
    AppId chosen_app = 0;
    VendorId vendor = 0;
    Scenario scenario = Scenario::kNoHistory;
    EventClass event_class = EventClass::kNewVendor;
    bool took_history_path = false;
};

struct SimResult {
    std::string model;
    std::uint64_t seed = 0;
    std::uint64_t steps = 0;
    std::uint64_t installs = 0;
    std::uint64_t new_vendor = 0;
    std::uint64_t own_vendor = 0;
    std::uint64_t collab_vendor = 0;
    std::uint64_t saturated = 0;
    std::vector<TimePoint> series;
    std::vector<std::array<double, 3>> final_user_vfc;  // self, collaborators, aggregate
    double final_avg_aggregate_vfc = 0.0;
    std::vector<EventRecord> events;
};

/// One replicate of the adoption loop: sample a user by install frequency,
/// sample an app she does not have yet by popularity, let the decision model
/// choose among it and its related apps, authorize the choice, and keep the
/// per-user aggregate coverage average current incrementally.
class Simulation {
public:
    Simulation(const ReplicateInputs& inputs, DecisionModelSpec model, std::uint64_t seed,
               SimParams params = {});

    struct StepOutcome {
        bool saturated = false;
        UserId user = 0;
        AppId a0 = 0;
        DecisionOutcome decision;
    };

    StepOutcome step();
    bool done() const;
    SimResult run();

    const AccessLedger& ledger() const { return ledger_; }
    const ReplicateInputs& inputs() const { return *inputs_; }
    double average_aggregate_vfc() const;
    double average_apps() const;
    std::uint64_t steps() const { return steps_; }
    std::uint64_t installs() const { return installs_; }

    /// Recomputes the running average from raw coverage and checks the
    /// provenance-split identity for every user. Throws on mismatch.
    void verify_cached_metrics(double tolerance = 1e-9) const;

private:
    const ReplicateInputs* inputs_;
    DecisionModelSpec model_;
    SimParams params_;
    Rng rng_;
    AccessLedger ledger_;
    WeightedUserSampler user_sampler_;
    std::optional<TeamVendorKnowledge> team_knowledge_;
    double sum_aggregate_vfc_ = 0.0;
    std::uint64_t steps_ = 0;
    std::uint64_t installs_ = 0;
    std::uint64_t install_target_ = 0;
    std::uint64_t new_vendor_ = 0;
    std::uint64_t own_vendor_ = 0;
    std::uint64_t collab_vendor_ = 0;
    std::uint64_t saturated_ = 0;
    std::uint64_t stride_ = 1;
    std::uint64_t max_steps_ = 0;
    std::vector<TimePoint> series_;
    std::vector<EventRecord> events_;
    std::vector<std::uint64_t> numerator_scratch_;

    void record_point();
};

/// Replicate seeds are splitmix-mixed from (master_seed, index); recorded in
/// each result. Replicates run in parallel up to `threads` (0 picks the
/// COVERAGE_SIM_THREADS env var, then hardware concurrency).
std::vector<SimResult> run_replicates(const InputsFactory& factory, DecisionModelSpec model,
                                      const SimParams& params, std::uint32_t replicates,
                                      std::uint64_t master_seed, unsigned threads = 0);

struct RatioStats {
    double mean = 0.0;
    double stddev = 0.0;
    double stderr_mean = 0.0;
    std::vector<double> per_replicate;
};

struct ComparativeResult {
    std::vector<std::string> models;
    std::vector<std::vector<SimResult>> results;  // [model][replicate]
    std::uint64_t master_seed = 0;
    std::vector<std::uint64_t> replicate_seeds;
    std::string baseline;                               // empty when no baseline arm ran
    std::map<std::string, RatioStats> final_ratio;      // per model vs the baseline
    std::map<std::string, RatioStats> final_avg_vfc;    // per model

    /// Pointwise ratio of a model's average-coverage series to the
    /// baseline's, aligned on the install axis. Samples where the baseline
    /// is still zero are omitted.
    std::vector<std::pair<double, double>> ratio_series(const std::string& model,
                                                        std::uint32_t replicate) const;
};

/// Paired comparison: every arm of one replicate shares the same inputs and
/// step seed; ratios are taken against the EBL arm.
ComparativeResult run_comparative(const InputsFactory& factory,
                                  std::span<const DecisionModelSpec> models,
                                  const SimParams& params, std::uint32_t replicates,
                                  std::uint64_t master_seed, unsigned threads = 0);

unsigned default_thread_count();

void write_timeseries_csv(std::span<const SimResult> replicates, std::ostream& out);
nlohmann::json summary_json(const ComparativeResult& result, const nlohmann::json& config_echo);

}  // namespace covsim
