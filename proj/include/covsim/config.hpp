#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "covsim/engine.hpp"

namespace covsim {

/// Schema violation in a run configuration; `field` is the JSON path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

/// Parsed simulation job: how to build each replicate's network, profiles,
/// and catalog, which decision models to run, and the loop parameters.
struct SimJobConfig {
    // network
    std::string network_mode;  // config-model | edge-list | graph-json | inflate
    std::vector<std::uint32_t> explicit_degrees;
    std::size_t n_users = 0;
    double degree_median = 10.0;
    double degree_sigma = 1.0;
    std::uint32_t max_degree = 500;
    std::uint32_t components = 1;
    std::string network_path;

    // profiles
    bool profiles_from_dataset = false;
    std::string profiles_dataset_path;
    SyntheticSharingParams sharing;
    double multi_collab_prob = 0.0;

    // catalog
    bool catalog_from_file = false;
    std::string catalog_path;
    SyntheticCatalogParams catalog;

    // models and loop
    std::vector<DecisionModelSpec> models;
    bool team_mode = false;
    SimParams params;
    std::uint32_t replicates = 1;
    std::uint64_t master_seed = 0;

    nlohmann::json echo;  // the validated input, for manifests and summaries
};

SimJobConfig parse_sim_config(const nlohmann::json& j);

/// Builds the per-replicate input factory. Sub-seeds for the graph, the
/// profiles, and a synthetic catalog are derived from the replicate seed, so
/// one seed pins the whole replicate.
InputsFactory make_inputs_factory(const SimJobConfig& config);

/// Runs the configured job end to end (the CLI and the Python bindings both
/// call this, so their outputs agree byte for byte).
ComparativeResult run_sim_job(const SimJobConfig& config, unsigned threads = 0);

}  // namespace covsim
