#include "covsim/config.hpp"

#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include "covsim/analysis.hpp"

namespace covsim {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& message) {
    throw ConfigError(field, message);
}

template <typename T>
T get_field(const nlohmann::json& j, const std::string& path, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(path + "." + key, "has the wrong type");
    }
}

template <typename T>
T require_field(const nlohmann::json& j, const std::string& path, const std::string& key) {
    if (!j.contains(key)) fail(path + "." + key, "is required");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(path + "." + key, "has the wrong type");
    }
}

void check_known_keys(const nlohmann::json& j, const std::string& path,
                      const std::set<std::string>& known) {
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) fail(path + "." + key, "is not a recognized field");
    }
}

void parse_network(const nlohmann::json& j, SimJobConfig& cfg) {
    if (!j.is_object()) fail("network", "must be an object");
    check_known_keys(j, "network",
                     {"mode", "n", "degrees", "degree_median", "degree_sigma", "max_degree",
                      "components", "path", "dataset"});
    cfg.network_mode = require_field<std::string>(j, "network", "mode");
    if (cfg.network_mode == "config-model") {
        if (j.contains("degrees")) {
            const auto raw = require_field<std::vector<std::int64_t>>(j, "network", "degrees");
            for (const auto d : raw) {
                if (d < 0) fail("network.degrees", "degrees must be non-negative");
                cfg.explicit_degrees.push_back(static_cast<std::uint32_t>(d));
            }
            if (cfg.explicit_degrees.empty()) fail("network.degrees", "must be non-empty");
            cfg.n_users = cfg.explicit_degrees.size();
        } else {
            cfg.n_users = require_field<std::size_t>(j, "network", "n");
            cfg.degree_median = get_field(j, "network", "degree_median", cfg.degree_median);
            cfg.degree_sigma = get_field(j, "network", "degree_sigma", cfg.degree_sigma);
            cfg.max_degree = get_field(j, "network", "max_degree", cfg.max_degree);
            if (cfg.n_users == 0) fail("network.n", "must be >= 1");
            if (cfg.degree_median <= 0) fail("network.degree_median", "must be > 0");
        }
        cfg.components = get_field(j, "network", "components", cfg.components);
        if (cfg.components == 0) fail("network.components", "must be >= 1");
    } else if (cfg.network_mode == "edge-list" || cfg.network_mode == "graph-json") {
        cfg.network_path = require_field<std::string>(j, "network", "path");
    } else if (cfg.network_mode == "inflate") {
        cfg.network_path = require_field<std::string>(j, "network", "dataset");
        cfg.n_users = require_field<std::size_t>(j, "network", "n");
        if (cfg.n_users == 0) fail("network.n", "must be >= 1");
        cfg.components = get_field(j, "network", "components", cfg.components);
    } else {
        fail("network.mode", "must be one of config-model, edge-list, graph-json, inflate");
    }
}

void parse_profiles(const nlohmann::json& j, SimJobConfig& cfg) {
    if (j.is_null()) return;
    if (!j.is_object()) fail("profiles", "must be an object");
    check_known_keys(j, "profiles",
                     {"source", "path", "file_median", "file_sigma", "max_files", "shared_median",
                      "shared_shape", "apps_geometric_p", "multi_collab_prob"});
    const auto source = get_field<std::string>(j, "profiles", "source", "synthetic");
    cfg.multi_collab_prob = get_field(j, "profiles", "multi_collab_prob", 0.0);
    if (cfg.multi_collab_prob < 0.0 || cfg.multi_collab_prob > 1.0) {
        fail("profiles.multi_collab_prob", "must lie in [0, 1]");
    }
    if (source == "dataset") {
        cfg.profiles_from_dataset = true;
        cfg.profiles_dataset_path = require_field<std::string>(j, "profiles", "path");
    } else if (source == "synthetic") {
        cfg.sharing.file_median = get_field(j, "profiles", "file_median", cfg.sharing.file_median);
        cfg.sharing.file_sigma = get_field(j, "profiles", "file_sigma", cfg.sharing.file_sigma);
        cfg.sharing.max_files = get_field(j, "profiles", "max_files", cfg.sharing.max_files);
        cfg.sharing.shared_median =
            get_field(j, "profiles", "shared_median", cfg.sharing.shared_median);
        cfg.sharing.shared_shape =
            get_field(j, "profiles", "shared_shape", cfg.sharing.shared_shape);
        cfg.sharing.apps_geometric_p =
            get_field(j, "profiles", "apps_geometric_p", cfg.sharing.apps_geometric_p);
        if (cfg.sharing.file_median < 1) fail("profiles.file_median", "must be >= 1");
        if (cfg.sharing.shared_median < 0 || cfg.sharing.shared_median >= 1) {
            fail("profiles.shared_median", "must lie in [0, 1)");
        }
    } else {
        fail("profiles.source", "must be synthetic or dataset");
    }
}

void parse_catalog(const nlohmann::json& j, SimJobConfig& cfg) {
    if (j.is_null()) return;
    if (!j.is_object()) fail("catalog", "must be an object");
    check_known_keys(j, "catalog",
                     {"source", "path", "n_apps", "zipf_exponent", "apps_per_vendor_mean",
                      "related_size", "related_bias"});
    const auto source = get_field<std::string>(j, "catalog", "source", "synthetic");
    if (source == "file") {
        cfg.catalog_from_file = true;
        cfg.catalog_path = require_field<std::string>(j, "catalog", "path");
    } else if (source == "synthetic") {
        cfg.catalog.n_apps = get_field(j, "catalog", "n_apps", cfg.catalog.n_apps);
        cfg.catalog.zipf_exponent =
            get_field(j, "catalog", "zipf_exponent", cfg.catalog.zipf_exponent);
        cfg.catalog.apps_per_vendor_mean =
            get_field(j, "catalog", "apps_per_vendor_mean", cfg.catalog.apps_per_vendor_mean);
        cfg.catalog.related_size =
            get_field(j, "catalog", "related_size", cfg.catalog.related_size);
        const auto bias = get_field<std::string>(j, "catalog", "related_bias", "popularity");
        if (bias == "popularity") {
            cfg.catalog.related_bias = RelatedBias::kPopularity;
        } else if (bias == "uniform") {
            cfg.catalog.related_bias = RelatedBias::kUniform;
        } else {
            fail("catalog.related_bias", "must be popularity or uniform");
        }
        if (cfg.catalog.n_apps == 0) fail("catalog.n_apps", "must be >= 1");
        if (cfg.catalog.related_size >= cfg.catalog.n_apps) {
            fail("catalog.related_size", "must be < n_apps");
        }
        if (cfg.catalog.apps_per_vendor_mean < 1.0) {
            fail("catalog.apps_per_vendor_mean", "must be >= 1");
        }
    } else {
        fail("catalog.source", "must be synthetic or file");
    }
}

void parse_models(const nlohmann::json& j, SimJobConfig& cfg) {
    if (!j.is_array() || j.empty()) fail("models", "must be a non-empty array");
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto path = "models[" + std::to_string(i) + "]";
        const auto& entry = j[i];
        DecisionModelSpec spec;
        try {
            if (entry.is_string()) {
                spec = DecisionModelSpec::make(model_kind_from_string(entry.get<std::string>()));
            } else if (entry.is_object()) {
                check_known_keys(entry, path, {"model", "q"});
                spec = DecisionModelSpec::make(
                    model_kind_from_string(require_field<std::string>(entry, path, "model")));
                if (entry.contains("q")) {
                    const auto& q = entry.at("q");
                    if (!q.is_object()) fail(path + ".q", "must be an object");
                    check_known_keys(q, path + ".q",
                                     {"same_vendor", "collab_single", "collab_multi"});
                    spec.q.same_vendor =
                        get_field(q, path + ".q", "same_vendor", spec.q.same_vendor);
                    spec.q.collab_single =
                        get_field(q, path + ".q", "collab_single", spec.q.collab_single);
                    spec.q.collab_multi =
                        get_field(q, path + ".q", "collab_multi", spec.q.collab_multi);
                    for (const double v : {spec.q.same_vendor, spec.q.collab_single,
                                           spec.q.collab_multi}) {
                        if (v < 0.0 || v > 1.0) fail(path + ".q", "probabilities must lie in [0, 1]");
                    }
                }
            } else {
                fail(path, "must be a model name or an object");
            }
        } catch (const std::invalid_argument& e) {
            fail(path, e.what());
        }
        cfg.models.push_back(spec);
    }
}

}  // namespace

SimJobConfig parse_sim_config(const nlohmann::json& j) {
    if (!j.is_object()) fail("", "config must be a JSON object");
    check_known_keys(j, "config",
                     {"network", "profiles", "catalog", "models", "team_mode", "target_avg_apps",
                      "replicates", "seed", "record_stride", "max_steps", "event_log_limit",
                      "check_invariants"});
    SimJobConfig cfg;
    if (!j.contains("network")) fail("network", "is required");
    parse_network(j.at("network"), cfg);
    parse_profiles(j.value("profiles", nlohmann::json()), cfg);
    parse_catalog(j.value("catalog", nlohmann::json()), cfg);
    if (!j.contains("models")) fail("models", "is required");
    parse_models(j.at("models"), cfg);

    cfg.team_mode = get_field(j, "config", "team_mode", false);
    if (cfg.team_mode) {
        for (auto& m : cfg.models) m.scope = DecisionScope::kTeam;
    }
    cfg.params.target_avg_apps = get_field(j, "config", "target_avg_apps", 30.0);
    if (cfg.params.target_avg_apps <= 0) fail("target_avg_apps", "must be > 0");
    cfg.replicates = get_field<std::uint32_t>(j, "config", "replicates", 1);
    if (cfg.replicates == 0) fail("replicates", "must be >= 1");
    cfg.master_seed = get_field<std::uint64_t>(j, "config", "seed", 0);
    cfg.params.record_stride = get_field<std::uint64_t>(j, "config", "record_stride", 0);
    cfg.params.max_steps = get_field<std::uint64_t>(j, "config", "max_steps", 0);
    cfg.params.event_log_limit = get_field<std::size_t>(j, "config", "event_log_limit", 0);
    cfg.params.check_invariants = get_field(j, "config", "check_invariants", false);
    cfg.echo = j;
    return cfg;
}

namespace {

std::vector<std::uint32_t> dataset_degrees(const DatasetRecords& records) {
    std::vector<std::uint32_t> degrees;
    for (std::size_t i = 0; i < records.n_explicit(); ++i) {
        const DatasetUser& u = records.user(i);
        std::set<std::string> collabs;
        for (const auto& f : u.files) collabs.insert(f.collaborators.begin(), f.collaborators.end());
        collabs.erase(u.user_id);
        degrees.push_back(static_cast<std::uint32_t>(collabs.size()));
    }
    if (degrees.empty()) throw std::runtime_error("dataset has no explicit users");
    return degrees;
}

}  // namespace

InputsFactory make_inputs_factory(const SimJobConfig& config) {
    // file-backed pieces load once and are shared by all replicates
    std::shared_ptr<const AppCatalog> fixed_catalog;
    if (config.catalog_from_file) {
        std::ifstream in(config.catalog_path);
        if (!in) throw std::runtime_error("cannot open " + config.catalog_path);
        fixed_catalog = std::make_shared<AppCatalog>(ingest_catalog(in));
    }
    std::shared_ptr<const CollaborationGraph> fixed_graph;
    if (config.network_mode == "edge-list") {
        std::ifstream in(config.network_path);
        if (!in) throw std::runtime_error("cannot open " + config.network_path);
        fixed_graph = std::make_shared<CollaborationGraph>(ingest_edge_list(in));
    } else if (config.network_mode == "graph-json") {
        std::ifstream in(config.network_path);
        if (!in) throw std::runtime_error("cannot open " + config.network_path);
        fixed_graph = std::make_shared<CollaborationGraph>(load_graph_json(in));
    }
    std::shared_ptr<const std::vector<std::uint32_t>> inflate_degrees;
    if (config.network_mode == "inflate") {
        std::ifstream in(config.network_path);
        if (!in) throw std::runtime_error("cannot open " + config.network_path);
        inflate_degrees =
            std::make_shared<const std::vector<std::uint32_t>>(dataset_degrees(ingest_dataset(in)));
    }
    std::shared_ptr<const EmpiricalTables> dataset_tables;
    if (config.profiles_from_dataset) {
        std::ifstream in(config.profiles_dataset_path);
        if (!in) throw std::runtime_error("cannot open " + config.profiles_dataset_path);
        dataset_tables =
            std::make_shared<const EmpiricalTables>(build_empirical_tables(ingest_dataset(in)));
    }

    SimJobConfig cfg = config;  // captured by value, factory outlives the caller's copy
    return [cfg, fixed_catalog, fixed_graph, inflate_degrees,
            dataset_tables](std::uint64_t seed) -> ReplicateInputs {
        const std::uint64_t graph_seed = splitmix64(seed ^ 0x67A1F0B3C5D2E489ULL);
        const std::uint64_t profile_seed = splitmix64(seed ^ 0x1B56C4E9D78A3F02ULL);
        const std::uint64_t catalog_seed = splitmix64(seed ^ 0x8F2E5D31A7B9C604ULL);

        ReplicateInputs inputs;
        if (fixed_graph) {
            inputs.graph = *fixed_graph;
        } else {
            std::vector<std::uint32_t> degrees;
            Rng rng(graph_seed);
            if (!cfg.explicit_degrees.empty()) {
                degrees = cfg.explicit_degrees;
            } else if (inflate_degrees) {
                degrees = resample_degrees(*inflate_degrees, cfg.n_users, rng);
            } else {
                degrees = sample_lognormal_degrees(cfg.n_users, cfg.degree_median,
                                                   cfg.degree_sigma, cfg.max_degree, rng);
            }
            inputs.graph = generate_configuration_model(degrees, rng.next_u64(), cfg.components);
        }

        const EmpiricalTables tables = dataset_tables
                                           ? *dataset_tables
                                           : synthetic_tables(cfg.sharing, profile_seed);
        inputs.profiles =
            populate(inputs.graph, tables, splitmix64(profile_seed), cfg.multi_collab_prob);

        if (fixed_catalog) {
            inputs.catalog = *fixed_catalog;
        } else {
            inputs.catalog = generate_synthetic_catalog(cfg.catalog, catalog_seed);
        }
        if (cfg.team_mode) inputs.teams = detect_teams(inputs.graph);
        return inputs;
    };
}

ComparativeResult run_sim_job(const SimJobConfig& config, unsigned threads) {
    const InputsFactory factory = make_inputs_factory(config);
    return run_comparative(factory, config.models, config.params, config.replicates,
                           config.master_seed, threads);
}

}  // namespace covsim
