#include "covsim/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "covsim/io.hpp"

namespace covsim {

WeightedUserSampler::WeightedUserSampler(std::span<const std::uint32_t> weights) {
    if (weights.empty()) throw std::invalid_argument("no users to sample");
    cumulative_.reserve(weights.size());
    std::uint64_t run = 0;
    for (const std::uint32_t w : weights) {
        run += std::max<std::uint32_t>(w, 1);
        cumulative_.push_back(run);
    }
}

UserId WeightedUserSampler::sample(Rng& rng) const {
    const std::uint64_t x = rng.uniform_below(cumulative_.back());
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    return static_cast<UserId>(it - cumulative_.begin());
}

double WeightedUserSampler::probability(UserId u) const {
    const std::uint64_t lo = u == 0 ? 0 : cumulative_[u - 1];
    return static_cast<double>(cumulative_[u] - lo) / static_cast<double>(cumulative_.back());
}

WeightedUserSampler assign_install_weights(const SharingProfiles& profiles) {
    std::vector<std::uint32_t> weights(profiles.size());
    for (UserId u = 0; u < profiles.size(); ++u) weights[u] = profiles[u].install_weight;
    return WeightedUserSampler(weights);
}

Simulation::Simulation(const ReplicateInputs& inputs, DecisionModelSpec model,
                       std::uint64_t seed, SimParams params)
    : inputs_(&inputs),
      model_(model),
      params_(params),
      rng_(seed),
      ledger_(AccessLedger::for_profiles(inputs.profiles)),
      user_sampler_(assign_install_weights(inputs.profiles)) {
    if (inputs.graph.n_users() != inputs.profiles.size()) {
        throw std::invalid_argument("graph and profiles disagree on user count");
    }
    if (model_.scope == DecisionScope::kTeam) {
        if (!inputs.teams) throw std::invalid_argument("team scope requires a team assignment");
        team_knowledge_.emplace(*inputs.teams);
    }
    const double n = static_cast<double>(inputs.graph.n_users());
    install_target_ =
        static_cast<std::uint64_t>(std::ceil(params_.target_avg_apps * n - 1e-9));
    if (install_target_ == 0) install_target_ = 1;
    stride_ = params_.record_stride != 0 ? params_.record_stride
                                         : std::max<std::uint64_t>(1, install_target_ / 200);
    max_steps_ = params_.max_steps != 0 ? params_.max_steps : 20 * install_target_ + 100;
}

double Simulation::average_aggregate_vfc() const {
    return sum_aggregate_vfc_ / inputs_->graph.n_users();
}

double Simulation::average_apps() const {
    return static_cast<double>(installs_) / inputs_->graph.n_users();
}

bool Simulation::done() const {
    return installs_ >= install_target_ || steps_ >= max_steps_;
}

Simulation::StepOutcome Simulation::step() {
    ++steps_;
    StepOutcome out;
    out.user = user_sampler_.sample(rng_);

    const AppCatalog& catalog = inputs_->catalog;
    bool found = false;
    for (std::uint32_t attempt = 0; attempt < params_.resample_cap; ++attempt) {
        const App& candidate = catalog.sample_app(rng_);
        if (!ledger_.installed(out.user, candidate.id)) {
            out.a0 = candidate.id;
            found = true;
            break;
        }
    }
    if (!found) {
        ++saturated_;
        out.saturated = true;
        return out;
    }

    const double r = rng_.uniform01();
    const Alternatives alt = alternatives(catalog, out.a0);
    DecisionContext ctx;
    ctx.ledger = &ledger_;
    ctx.profiles = &inputs_->profiles;
    ctx.team_knowledge = team_knowledge_ ? &*team_knowledge_ : nullptr;
    out.decision = decide(model_, out.user, out.a0, alt, catalog, ctx, r, rng_);

    const auto neighbors = inputs_->graph.neighbors(out.user);
    numerator_scratch_.clear();
    numerator_scratch_.push_back(ledger_.aggregate_numerator(out.user));
    for (const UserId c : neighbors) numerator_scratch_.push_back(ledger_.aggregate_numerator(c));

    authorize(ledger_, inputs_->graph, inputs_->profiles, catalog, out.user, out.decision.chosen_app);

    const auto apply_delta = [&](UserId u, std::uint64_t before) {
        const std::uint64_t after = ledger_.aggregate_numerator(u);
        if (after != before) {
            sum_aggregate_vfc_ +=
                static_cast<double>(after - before) / ledger_.n_files(u);
        }
    };
    apply_delta(out.user, numerator_scratch_[0]);
    for (std::size_t i = 0; i < neighbors.size(); ++i) {
        apply_delta(neighbors[i], numerator_scratch_[i + 1]);
    }

    if (team_knowledge_) {
        team_knowledge_->note_self_authorization(out.user, out.decision.chosen_vendor);
    }

    ++installs_;
    switch (out.decision.event_class) {
        case EventClass::kNewVendor: ++new_vendor_; break;
        case EventClass::kOwnVendor: ++own_vendor_; break;
        case EventClass::kCollaboratorVendor: ++collab_vendor_; break;
    }
    if (events_.size() < params_.event_log_limit) {
        events_.push_back({steps_, out.user, out.a0, out.decision.chosen_app,
                           out.decision.chosen_vendor, out.decision.scenario,
                           out.decision.event_class, out.decision.took_history_path});
    }
    if (installs_ % stride_ == 0) record_point();
    return out;
}

void Simulation::record_point() {
    series_.push_back({steps_, installs_, average_apps(), average_aggregate_vfc(), new_vendor_,
                       own_vendor_, collab_vendor_, saturated_});
    if (params_.check_invariants) verify_cached_metrics();
}

void Simulation::verify_cached_metrics(double tolerance) const {
    double recomputed = 0.0;
    for (UserId u = 0; u < ledger_.n_users(); ++u) {
        const std::uint64_t self_num = ledger_.self_numerator(u);
        const std::uint64_t collab_num = ledger_.collaborators_numerator(u);
        if (self_num + collab_num != ledger_.aggregate_numerator(u)) {
            throw std::logic_error("provenance split does not add up for user " +
                                   std::to_string(u));
        }
        recomputed += static_cast<double>(ledger_.aggregate_numerator(u)) / ledger_.n_files(u);
    }
    const double cached = sum_aggregate_vfc_;
    if (std::abs(recomputed - cached) > tolerance * std::max(1.0, std::abs(recomputed))) {
        throw std::logic_error("cached coverage average drifted from recomputation");
    }
}

SimResult Simulation::run() {
    while (!done()) step();
    if (series_.empty() || series_.back().installs != installs_) record_point();

    SimResult result;
    result.model = to_string(model_.kind);
    result.steps = steps_;
    result.installs = installs_;
    result.new_vendor = new_vendor_;
    result.own_vendor = own_vendor_;
    result.collab_vendor = collab_vendor_;
    result.saturated = saturated_;
    result.series = series_;
    result.final_avg_aggregate_vfc = average_aggregate_vfc();
    result.final_user_vfc.resize(ledger_.n_users());
    for (UserId u = 0; u < ledger_.n_users(); ++u) {
        result.final_user_vfc[u] = {ledger_.self_vfc(u), ledger_.collaborators_vfc(u),
                                    ledger_.aggregate_vfc(u)};
    }
    result.events = events_;
    return result;
}

unsigned default_thread_count() {
    if (const char* env = std::getenv("COVERAGE_SIM_THREADS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v > 0) return static_cast<unsigned>(v);
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

namespace {

void run_tasks(std::size_t n_tasks, unsigned threads, const std::function<void(std::size_t)>& task) {
    threads = std::max(1u, std::min<unsigned>(threads, n_tasks));
    if (threads == 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) task(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n_tasks) return;
                try {
                    task(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (error) std::rethrow_exception(error);
}

RatioStats make_stats(std::vector<double> values) {
    RatioStats s;
    s.per_replicate = std::move(values);
    const std::size_t n = s.per_replicate.size();
    if (n == 0) return s;
    double sum = 0.0;
    for (const double v : s.per_replicate) sum += v;
    s.mean = sum / n;
    if (n > 1) {
        double ss = 0.0;
        for (const double v : s.per_replicate) ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / (n - 1));
        s.stderr_mean = s.stddev / std::sqrt(static_cast<double>(n));
    }
    return s;
}

}  // namespace

std::vector<SimResult> run_replicates(const InputsFactory& factory, DecisionModelSpec model,
                                      const SimParams& params, std::uint32_t replicates,
                                      std::uint64_t master_seed, unsigned threads) {
    if (replicates == 0) throw std::invalid_argument("replicates must be >= 1");
    if (threads == 0) threads = default_thread_count();
    std::vector<SimResult> results(replicates);
    run_tasks(replicates, threads, [&](std::size_t r) {
        const std::uint64_t seed = replicate_seed(master_seed, r);
        const ReplicateInputs inputs = factory(seed);
        Simulation sim(inputs, model, seed, params);
        results[r] = sim.run();
        results[r].seed = seed;
    });
    return results;
}

ComparativeResult run_comparative(const InputsFactory& factory,
                                  std::span<const DecisionModelSpec> models,
                                  const SimParams& params, std::uint32_t replicates,
                                  std::uint64_t master_seed, unsigned threads) {
    if (models.empty()) throw std::invalid_argument("no decision models configured");
    if (replicates == 0) throw std::invalid_argument("replicates must be >= 1");
    if (threads == 0) threads = default_thread_count();

    ComparativeResult out;
    out.master_seed = master_seed;
    for (const auto& m : models) out.models.push_back(to_string(m.kind));
    out.results.assign(models.size(), {});
    for (auto& v : out.results) v.resize(replicates);
    out.replicate_seeds.resize(replicates);
    for (std::uint32_t r = 0; r < replicates; ++r) {
        out.replicate_seeds[r] = replicate_seed(master_seed, r);
    }

    // one inputs instance per replicate, shared read-only by all arms
    std::vector<ReplicateInputs> inputs(replicates);
    run_tasks(replicates, threads,
              [&](std::size_t r) { inputs[r] = factory(out.replicate_seeds[r]); });

    run_tasks(static_cast<std::size_t>(replicates) * models.size(), threads, [&](std::size_t i) {
        const std::size_t m = i / replicates;
        const std::size_t r = i % replicates;
        Simulation sim(inputs[r], models[m], out.replicate_seeds[r], params);
        out.results[m][r] = sim.run();
        out.results[m][r].seed = out.replicate_seeds[r];
    });

    std::ptrdiff_t baseline = -1;
    for (std::size_t m = 0; m < models.size(); ++m) {
        if (models[m].kind == ModelKind::kEBL) {
            baseline = static_cast<std::ptrdiff_t>(m);
            break;
        }
    }
    for (std::size_t m = 0; m < models.size(); ++m) {
        std::vector<double> finals(replicates);
        for (std::uint32_t r = 0; r < replicates; ++r) {
            finals[r] = out.results[m][r].final_avg_aggregate_vfc;
        }
        out.final_avg_vfc[out.models[m]] = make_stats(std::move(finals));
    }
    if (baseline >= 0) {
        out.baseline = out.models[static_cast<std::size_t>(baseline)];
        for (std::size_t m = 0; m < models.size(); ++m) {
            std::vector<double> ratios;
            ratios.reserve(replicates);
            for (std::uint32_t r = 0; r < replicates; ++r) {
                const double base =
                    out.results[static_cast<std::size_t>(baseline)][r].final_avg_aggregate_vfc;
                if (base > 0.0) {
                    ratios.push_back(out.results[m][r].final_avg_aggregate_vfc / base);
                }
            }
            out.final_ratio[out.models[m]] = make_stats(std::move(ratios));
        }
    }
    return out;
}

std::vector<std::pair<double, double>> ComparativeResult::ratio_series(
    const std::string& model, std::uint32_t replicate) const {
    const auto mit = std::find(models.begin(), models.end(), model);
    const auto bit = std::find(models.begin(), models.end(), baseline);
    if (mit == models.end() || bit == models.end()) {
        throw std::invalid_argument("unknown model or missing baseline arm");
    }
    const auto& series = results[static_cast<std::size_t>(mit - models.begin())][replicate].series;
    const auto& base = results[static_cast<std::size_t>(bit - models.begin())][replicate].series;
    std::vector<std::pair<double, double>> out;
    const std::size_t n = std::min(series.size(), base.size());
    for (std::size_t i = 0; i < n; ++i) {
        if (base[i].avg_aggregate_vfc <= 0.0) continue;  // ratio undefined, reported as absent
        out.emplace_back(series[i].avg_apps, series[i].avg_aggregate_vfc / base[i].avg_aggregate_vfc);
    }
    return out;
}

void write_timeseries_csv(std::span<const SimResult> replicates, std::ostream& out) {
    out << "replicate,step,avg_apps,avg_aggregate_vfc,new_vendor,own_vendor,collab_vendor,saturated\n";
    for (std::size_t r = 0; r < replicates.size(); ++r) {
        for (const TimePoint& p : replicates[r].series) {
            out << r << ',' << p.step << ',' << format_double(p.avg_apps) << ','
                << format_double(p.avg_aggregate_vfc) << ',' << p.new_vendor << ','
                << p.own_vendor << ',' << p.collab_vendor << ',' << p.saturated << '\n';
        }
    }
}

namespace {

nlohmann::json stats_json(const RatioStats& s) {
    return {{"mean", s.mean},
            {"stddev", s.stddev},
            {"stderr", s.stderr_mean},
            {"per_replicate", s.per_replicate}};
}

}  // namespace

nlohmann::json summary_json(const ComparativeResult& result, const nlohmann::json& config_echo) {
    nlohmann::json j;
    j["models"] = result.models;
    j["replicates"] = result.replicate_seeds.size();
    j["master_seed"] = result.master_seed;
    j["replicate_seeds"] = result.replicate_seeds;
    j["config"] = config_echo;
    auto& finals = j["final_avg_aggregate_vfc"] = nlohmann::json::object();
    for (const auto& [model, stats] : result.final_avg_vfc) finals[model] = stats_json(stats);
    if (!result.baseline.empty()) {
        j["baseline"] = result.baseline;
        auto& ratios = j["final_ratio_vs_baseline"] = nlohmann::json::object();
        for (const auto& [model, stats] : result.final_ratio) ratios[model] = stats_json(stats);
    }
    auto& events = j["event_totals"] = nlohmann::json::object();
    for (std::size_t m = 0; m < result.models.size(); ++m) {
        std::uint64_t nv = 0, ov = 0, cv = 0, sat = 0, steps = 0;
        for (const auto& rep : result.results[m]) {
            nv += rep.new_vendor;
            ov += rep.own_vendor;
            cv += rep.collab_vendor;
            sat += rep.saturated;
            steps += rep.steps;
        }
        events[result.models[m]] = {{"new_vendor", nv},
                                    {"own_vendor", ov},
                                    {"collab_vendor", cv},
                                    {"saturated", sat},
                                    {"steps", steps}};
    }
    return j;
}

}  // namespace covsim
