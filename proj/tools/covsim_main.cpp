#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "covsim/analysis.hpp"
#include "covsim/catalog.hpp"
#include "covsim/config.hpp"
#include "covsim/engine.hpp"
#include "covsim/graph.hpp"
#include "covsim/io.hpp"

namespace {

constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;

covsim::RunManifest start_manifest(const std::string& subcommand, std::uint64_t seed,
                                   nlohmann::json config_echo) {
    covsim::RunManifest m;
    m.tool = "covsim";
    m.version = kVersion;
    m.subcommand = subcommand;
    m.seed = seed;
    m.config_echo = std::move(config_echo);
    m.started_at = covsim::iso8601_utc_now();
    return m;
}

void finish_manifest(covsim::RunManifest& m, const fs::path& path) {
    m.finished_at = covsim::iso8601_utc_now();
    covsim::write_manifest(path, m);
}

struct GenGraphOptions {
    std::string mode;
    std::vector<std::int64_t> degrees;
    std::string degrees_from;
    std::string input;
    std::string out;
    std::size_t n = 0;
    double degree_median = 10.0;
    double degree_sigma = 1.0;
    std::uint32_t max_degree = 500;
    std::uint32_t components = 1;
    std::uint64_t seed = 0;
};

int cmd_gen_graph(const GenGraphOptions& opt) {
    using namespace covsim;
    CollaborationGraph graph;
    Rng rng(splitmix64(opt.seed));
    if (opt.mode == "config-model") {
        if (!opt.input.empty()) throw std::invalid_argument("--in only applies to edge-list mode");
        std::vector<std::uint32_t> degrees;
        if (!opt.degrees.empty()) {
            if (!opt.degrees_from.empty()) {
                throw std::invalid_argument("--degrees conflicts with --degrees-from");
            }
            if (opt.n != 0 && opt.n != opt.degrees.size()) {
                throw std::invalid_argument("--n disagrees with the --degrees length");
            }
            for (const auto d : opt.degrees) {
                if (d < 0) throw std::invalid_argument("degrees must be non-negative");
                degrees.push_back(static_cast<std::uint32_t>(d));
            }
        } else if (!opt.degrees_from.empty()) {
            if (opt.n == 0) throw std::invalid_argument("--n is required with --degrees-from");
            std::ifstream in(opt.degrees_from);
            if (!in) throw std::runtime_error("cannot open " + opt.degrees_from);
            const DatasetRecords records = ingest_dataset(in);
            std::vector<std::uint32_t> source;
            for (std::size_t i = 0; i < records.n_explicit(); ++i) {
                const DatasetUser& u = records.user(i);
                std::set<std::string> collabs;
                for (const auto& f : u.files) {
                    collabs.insert(f.collaborators.begin(), f.collaborators.end());
                }
                collabs.erase(u.user_id);
                source.push_back(static_cast<std::uint32_t>(collabs.size()));
            }
            degrees = resample_degrees(source, opt.n, rng);
        } else {
            if (opt.n == 0) throw std::invalid_argument("config-model needs --degrees or --n");
            degrees = sample_lognormal_degrees(opt.n, opt.degree_median, opt.degree_sigma,
                                               opt.max_degree, rng);
        }
        graph = generate_configuration_model(degrees, rng.next_u64(), opt.components);
    } else if (opt.mode == "inflate") {
        if (opt.degrees_from.empty() || opt.n == 0) {
            throw std::invalid_argument("inflate mode needs --degrees-from and --n");
        }
        GenGraphOptions delegated = opt;
        delegated.mode = "config-model";
        return cmd_gen_graph(delegated);
    } else if (opt.mode == "edge-list") {
        if (opt.input.empty()) throw std::invalid_argument("edge-list mode needs --in");
        std::ifstream in(opt.input);
        if (!in) throw std::runtime_error("cannot open " + opt.input);
        EdgeListStats stats;
        graph = ingest_edge_list(in, &stats);
        if (stats.self_loops_dropped + stats.duplicates_dropped > 0) {
            std::cerr << "warning: dropped " << stats.self_loops_dropped << " self-loops and "
                      << stats.duplicates_dropped << " duplicate edges\n";
        }
    } else {
        throw std::invalid_argument("unknown --mode " + opt.mode);
    }

    auto manifest = start_manifest("gen-graph", opt.seed,
                                   {{"mode", opt.mode},
                                    {"n", graph.n_users()},
                                    {"components", opt.components},
                                    {"degree_median", opt.degree_median},
                                    {"degree_sigma", opt.degree_sigma}});
    std::ostringstream body;
    dump_graph_json(graph, body);
    atomic_write(opt.out, body.str());
    manifest.outputs = {opt.out};
    finish_manifest(manifest, opt.out + ".manifest.json");
    std::cout << "wrote " << opt.out << ": " << graph.n_users() << " users, " << graph.n_edges()
              << " edges\n";
    return 0;
}

struct GenCatalogOptions {
    std::size_t n_apps = 1000;
    double zipf = 1.0;
    std::uint32_t related = 5;
    double apps_per_vendor = 1.3;
    std::string related_bias = "popularity";
    std::uint64_t seed = 0;
    std::string out;
};

int cmd_gen_catalog(const GenCatalogOptions& opt) {
    using namespace covsim;
    SyntheticCatalogParams params;
    params.n_apps = opt.n_apps;
    params.zipf_exponent = opt.zipf;
    params.related_size = opt.related;
    params.apps_per_vendor_mean = opt.apps_per_vendor;
    if (opt.related_bias == "popularity") {
        params.related_bias = RelatedBias::kPopularity;
    } else if (opt.related_bias == "uniform") {
        params.related_bias = RelatedBias::kUniform;
    } else {
        throw std::invalid_argument("--related-bias must be popularity or uniform");
    }
    const AppCatalog catalog = generate_synthetic_catalog(params, opt.seed);

    auto manifest = start_manifest("gen-catalog", opt.seed,
                                   {{"n_apps", opt.n_apps},
                                    {"zipf_exponent", opt.zipf},
                                    {"related_size", opt.related},
                                    {"apps_per_vendor_mean", opt.apps_per_vendor},
                                    {"related_bias", opt.related_bias}});
    std::ostringstream body;
    dump_catalog(catalog, body);
    atomic_write(opt.out, body.str());
    manifest.outputs = {opt.out};
    finish_manifest(manifest, opt.out + ".manifest.json");
    std::cout << "wrote " << opt.out << ": " << catalog.n_apps() << " apps, "
              << catalog.n_vendors() << " vendors\n";
    return 0;
}

struct SimulateOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::int64_t seed_override = -1;
    std::int64_t replicates_override = -1;
    unsigned threads = 0;
};

int cmd_simulate(const SimulateOptions& opt) {
    using namespace covsim;
    std::ifstream in(opt.config_path);
    if (!in) throw std::runtime_error("cannot open " + opt.config_path);
    nlohmann::json raw;
    try {
        in >> raw;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("", std::string("config is not valid JSON: ") + e.what());
    }
    if (opt.seed_override >= 0) raw["seed"] = static_cast<std::uint64_t>(opt.seed_override);
    if (opt.replicates_override >= 0) {
        raw["replicates"] = static_cast<std::uint32_t>(opt.replicates_override);
    }
    const SimJobConfig config = parse_sim_config(raw);

    auto manifest = start_manifest("simulate", config.master_seed, config.echo);
    const ComparativeResult result = run_sim_job(config, opt.threads);
    manifest.replicate_seeds = result.replicate_seeds;

    fs::create_directories(opt.out_dir);
    const fs::path dir(opt.out_dir);
    for (std::size_t m = 0; m < result.models.size(); ++m) {
        const fs::path path = result.models.size() == 1
                                  ? dir / "timeseries.csv"
                                  : dir / ("timeseries_" + result.models[m] + ".csv");
        std::ostringstream body;
        write_timeseries_csv(result.results[m], body);
        atomic_write(path, body.str());
        manifest.outputs.push_back(path.string());
    }
    const fs::path summary_path = dir / "summary.json";
    atomic_write(summary_path, summary_json(result, config.echo).dump(2) + "\n");
    manifest.outputs.push_back(summary_path.string());
    finish_manifest(manifest, dir / "manifest.json");

    for (const auto& [model, stats] : result.final_avg_vfc) {
        std::cout << model << ": final avg aggregate VFC " << format_double(stats.mean);
        const auto rit = result.final_ratio.find(model);
        if (rit != result.final_ratio.end() && model != result.baseline) {
            std::cout << " (ratio vs " << result.baseline << " "
                      << format_double(rit->second.mean) << ")";
        }
        std::cout << '\n';
    }
    return 0;
}

struct AnalyzeOptions {
    std::string dataset;
    std::vector<double> thresholds;
    std::uint64_t seed = 0;
    std::string out;
    std::uint32_t n_files_min = 10;
    std::uint32_t n_apps_min = 1;
};

int cmd_analyze(const AnalyzeOptions& opt) {
    using namespace covsim;
    for (std::size_t i = 0; i < opt.thresholds.size(); ++i) {
        if (opt.thresholds[i] < 0.0 || opt.thresholds[i] > 1.0) {
            throw std::invalid_argument("--thresholds values must lie in [0, 1]");
        }
        if (i > 0 && opt.thresholds[i] < opt.thresholds[i - 1]) {
            throw std::invalid_argument("--thresholds must be ascending");
        }
    }
    std::ifstream in(opt.dataset);
    if (!in) throw std::runtime_error("cannot open " + opt.dataset);
    DatasetRecords records = ingest_dataset(in);
    impute_collaborator_apps(records, opt.seed);
    const MetricFilters filters{opt.n_files_min, opt.n_apps_min};
    const auto rows = sweep_p_min_shared(records, opt.thresholds, filters);

    auto manifest = start_manifest("analyze", opt.seed,
                                   {{"dataset", opt.dataset},
                                    {"thresholds", opt.thresholds},
                                    {"n_files_min", opt.n_files_min},
                                    {"n_apps_min", opt.n_apps_min}});
    std::ostringstream body;
    write_analysis_csv(rows, body);
    atomic_write(opt.out, body.str());
    manifest.outputs = {opt.out};
    finish_manifest(manifest, opt.out + ".manifest.json");
    std::cout << "wrote " << opt.out << ": " << rows.size() << " threshold rows over "
              << records.n_explicit() << " users\n";
    return 0;
}

struct ReportOptions {
    std::vector<std::string> summaries;
    std::string out;
};

int cmd_report(const ReportOptions& opt) {
    using namespace covsim;
    std::ostringstream body;
    body << "source,model,final_vfc_mean,final_vfc_stddev,ratio_vs_baseline_mean,"
            "ratio_stddev,ratio_stderr,replicates\n";
    for (const auto& path : opt.summaries) {
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error(path + " is not valid JSON: " + e.what());
        }
        const auto replicates = j.value("replicates", 0u);
        for (const auto& model : j.value("models", std::vector<std::string>{})) {
            const auto& finals = j.at("final_avg_aggregate_vfc").at(model);
            body << path << ',' << model << ','
                 << format_double(finals.at("mean").get<double>()) << ','
                 << format_double(finals.at("stddev").get<double>()) << ',';
            if (j.contains("final_ratio_vs_baseline") &&
                j["final_ratio_vs_baseline"].contains(model)) {
                const auto& ratio = j["final_ratio_vs_baseline"][model];
                body << format_double(ratio.at("mean").get<double>()) << ','
                     << format_double(ratio.at("stddev").get<double>()) << ','
                     << format_double(ratio.at("stderr").get<double>());
            } else {
                body << ",,";
            }
            body << ',' << replicates << '\n';
        }
    }
    atomic_write(opt.out, body.str());
    std::cout << "wrote " << opt.out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Interdependent privacy-loss simulation and analysis toolkit"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenGraphOptions gg;
    auto* gen_graph = app.add_subcommand("gen-graph", "Generate or ingest a collaboration graph");
    gen_graph->add_option("--mode", gg.mode, "config-model, inflate, or edge-list")->required();
    gen_graph->add_option("--n", gg.n, "number of users");
    gen_graph->add_option("--degrees", gg.degrees, "explicit degree sequence")->delimiter(',');
    gen_graph->add_option("--degrees-from", gg.degrees_from, "dataset JSONL to resample degrees from");
    gen_graph->add_option("--degree-median", gg.degree_median, "lognormal degree median");
    gen_graph->add_option("--degree-sigma", gg.degree_sigma, "lognormal degree sigma");
    gen_graph->add_option("--max-degree", gg.max_degree, "degree cap");
    gen_graph->add_option("--components", gg.components, "number of disjoint blocks");
    gen_graph->add_option("--in", gg.input, "edge-list input file");
    gen_graph->add_option("--seed", gg.seed, "random seed");
    gen_graph->add_option("--out", gg.out, "output graph JSON")->required();

    GenCatalogOptions gc;
    auto* gen_catalog = app.add_subcommand("gen-catalog", "Generate a synthetic app catalog");
    gen_catalog->add_option("--n-apps", gc.n_apps, "number of apps");
    gen_catalog->add_option("--zipf", gc.zipf, "popularity exponent");
    gen_catalog->add_option("--related", gc.related, "related apps per app");
    gen_catalog->add_option("--apps-per-vendor", gc.apps_per_vendor, "mean apps per vendor");
    gen_catalog->add_option("--related-bias", gc.related_bias, "popularity or uniform");
    gen_catalog->add_option("--seed", gc.seed, "random seed");
    gen_catalog->add_option("--out", gc.out, "output catalog JSONL")->required();

    SimulateOptions sim;
    auto* simulate = app.add_subcommand("simulate", "Run the adoption simulation");
    simulate->add_option("--config", sim.config_path, "run configuration JSON")->required();
    simulate->add_option("--out-dir", sim.out_dir, "output directory");
    simulate->add_option("--seed", sim.seed_override, "master seed override");
    simulate->add_option("--replicates", sim.replicates_override, "replicate count override");
    simulate->add_option("--threads", sim.threads, "replicate parallelism cap");

    AnalyzeOptions an;
    auto* analyze = app.add_subcommand("analyze", "Sharing-threshold sweep over a dataset");
    analyze->add_option("--dataset", an.dataset, "dataset JSONL")->required();
    analyze->add_option("--thresholds", an.thresholds, "ascending shared-fraction thresholds")
        ->delimiter(',')
        ->required();
    analyze->add_option("--seed", an.seed, "seed for collaborator app imputation");
    analyze->add_option("--n-files-min", an.n_files_min, "minimum files per user");
    analyze->add_option("--n-apps-min", an.n_apps_min, "minimum apps per user");
    analyze->add_option("--out", an.out, "output CSV")->required();

    ReportOptions rp;
    auto* report = app.add_subcommand("report", "Merge simulation summaries into one table");
    report->add_option("summaries", rp.summaries, "summary.json files")->required();
    report->add_option("--out", rp.out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (*gen_graph) return cmd_gen_graph(gg);
        if (*gen_catalog) return cmd_gen_catalog(gc);
        if (*simulate) return cmd_simulate(sim);
        if (*analyze) return cmd_analyze(an);
        if (*report) return cmd_report(rp);
    } catch (const covsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
