#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "covsim/analysis.hpp"
#include "covsim/catalog.hpp"
#include "covsim/config.hpp"
#include "covsim/decision.hpp"
#include "covsim/engine.hpp"
#include "covsim/graph.hpp"
#include "covsim/ledger.hpp"
#include "covsim/sharing.hpp"

namespace py = pybind11;
using namespace covsim;

namespace {

py::object json_to_py(const nlohmann::json& j) {
    return py::module_::import("json").attr("loads")(j.dump());
}

SharingProfiles populate_synthetic(const CollaborationGraph& graph, std::uint64_t seed,
                                   double file_median, double file_sigma, double shared_median,
                                   double multi_collab_prob) {
    SyntheticSharingParams params;
    params.file_median = file_median;
    params.file_sigma = file_sigma;
    params.shared_median = shared_median;
    const EmpiricalTables tables = synthetic_tables(params, splitmix64(seed ^ 0x5EED));
    return populate(graph, tables, seed, multi_collab_prob);
}

}  // namespace

PYBIND11_MODULE(_covsim, m) {
    m.doc() = "Vendor file-coverage privacy-loss simulation core";

    py::class_<CollaborationGraph>(m, "Graph")
        .def_property_readonly("n_users", &CollaborationGraph::n_users)
        .def_property_readonly("n_edges", &CollaborationGraph::n_edges)
        .def("degree", &CollaborationGraph::degree, py::arg("user"))
        .def("degree_sequence", [](const CollaborationGraph& g) { return degree_sequence(g); })
        .def("neighbors",
             [](const CollaborationGraph& g, UserId u) {
                 const auto nb = g.neighbors(u);
                 return std::vector<UserId>(nb.begin(), nb.end());
             },
             py::arg("user"))
        .def("edges", &CollaborationGraph::edge_list)
        .def("labels", &CollaborationGraph::labels)
        .def("to_json", [](const CollaborationGraph& g) {
            std::ostringstream out;
            dump_graph_json(g, out);
            return out.str();
        });

    m.def("generate_configuration_model",
          [](const std::vector<std::uint32_t>& degrees, std::uint64_t seed,
             std::uint32_t components) {
              return generate_configuration_model(degrees, seed, components);
          },
          py::arg("degrees"), py::arg("seed"), py::arg("components") = 1);
    m.def("ingest_edge_list", [](const std::string& text) {
        std::istringstream in(text);
        return ingest_edge_list(in);
    });
    m.def("load_graph_json", [](const std::string& text) {
        std::istringstream in(text);
        return load_graph_json(in);
    });
    m.def("detect_teams", [](const CollaborationGraph& g) {
        const TeamAssignment t = detect_teams(g);
        return py::make_tuple(t.team_of, t.n_teams);
    });

    py::class_<SharingProfiles>(m, "Profiles")
        .def("__len__", &SharingProfiles::size)
        .def("n_files", &SharingProfiles::n_files, py::arg("user"))
        .def("install_weight",
             [](const SharingProfiles& p, UserId u) { return p[u].install_weight; })
        .def("shared_fraction",
             [](const SharingProfiles& p, UserId u) { return p[u].shared_fraction(); })
        .def("shared_with", [](const SharingProfiles& p, UserId u) {
            std::map<UserId, std::vector<std::uint32_t>> out;
            for (const auto& [c, files] : p[u].shared_with) out[c] = files.indices();
            return out;
        });

    m.def("populate_synthetic", &populate_synthetic, py::arg("graph"), py::arg("seed"),
          py::arg("file_median") = 67.0, py::arg("file_sigma") = 1.0,
          py::arg("shared_median") = 0.18, py::arg("multi_collab_prob") = 0.0);
    m.def("dump_profiles", [](const SharingProfiles& profiles) {
        std::ostringstream out;
        dump_profiles(profiles, out);
        return out.str();
    });
    m.def("ingest_profiles", [](const std::string& text) {
        std::istringstream in(text);
        return ingest_profiles(in);
    });

    py::class_<AppCatalog>(m, "Catalog")
        .def_property_readonly("n_apps", &AppCatalog::n_apps)
        .def_property_readonly("n_vendors", &AppCatalog::n_vendors)
        .def_property_readonly("total_weight", &AppCatalog::total_weight)
        .def("vendor_of", [](const AppCatalog& c, AppId a) { return c.app(a).vendor; })
        .def("install_count", [](const AppCatalog& c, AppId a) { return c.app(a).install_count; })
        .def("related", [](const AppCatalog& c, AppId a) { return c.app(a).related; })
        .def("alternatives", [](const AppCatalog& c, AppId a0) {
            const Alternatives alt = alternatives(c, a0);
            return py::make_tuple(alt.apps, alt.vendors);
        })
        .def("to_jsonl", [](const AppCatalog& c) {
            std::ostringstream out;
            dump_catalog(c, out);
            return out.str();
        });

    m.def("generate_synthetic_catalog",
          [](std::size_t n_apps, double zipf_exponent, std::uint32_t related_size,
             double apps_per_vendor_mean, const std::string& related_bias, std::uint64_t seed) {
              SyntheticCatalogParams params;
              params.n_apps = n_apps;
              params.zipf_exponent = zipf_exponent;
              params.related_size = related_size;
              params.apps_per_vendor_mean = apps_per_vendor_mean;
              params.related_bias = related_bias == "uniform" ? RelatedBias::kUniform
                                                              : RelatedBias::kPopularity;
              return generate_synthetic_catalog(params, seed);
          },
          py::arg("n_apps") = 1000, py::arg("zipf_exponent") = 1.0, py::arg("related_size") = 5,
          py::arg("apps_per_vendor_mean") = 1.3, py::arg("related_bias") = "popularity",
          py::arg("seed") = 0);
    m.def("ingest_catalog", [](const std::string& text) {
        std::istringstream in(text);
        return ingest_catalog(in);
    });

    py::class_<AccessLedger>(m, "Ledger")
        .def(py::init([](const SharingProfiles& profiles) {
                 return AccessLedger::for_profiles(profiles);
             }),
             py::arg("profiles"))
        .def(py::init([](const std::vector<std::uint32_t>& n_files) {
                 return AccessLedger(n_files);
             }),
             py::arg("n_files"))
        .def("grant_full", &AccessLedger::grant_full, py::arg("user"), py::arg("vendor"))
        .def("self_vendors", &AccessLedger::self_vendors, py::arg("user"))
        .def("collab_vendors", &AccessLedger::collab_vendors, py::arg("user"))
        .def("vendor_coverage_percent", &AccessLedger::vendor_coverage_percent, py::arg("user"),
             py::arg("vendor"))
        .def("vfc",
             [](const AccessLedger& l, UserId u, const std::vector<VendorId>& vendors) {
                 return l.vfc(u, vendors);
             },
             py::arg("user"), py::arg("vendors"))
        .def("self_vfc", &AccessLedger::self_vfc, py::arg("user"))
        .def("collaborators_vfc", &AccessLedger::collaborators_vfc, py::arg("user"))
        .def("aggregate_vfc", &AccessLedger::aggregate_vfc, py::arg("user"))
        .def("snapshot", [](const AccessLedger& l) {
            std::ostringstream out;
            l.dump_snapshot(out);
            return out.str();
        });

    m.def("authorize",
          [](AccessLedger& ledger, const CollaborationGraph& graph,
             const SharingProfiles& profiles, const AppCatalog& catalog, UserId u, AppId app) {
              return authorize(ledger, graph, profiles, catalog, u, app).changed;
          },
          py::arg("ledger"), py::arg("graph"), py::arg("profiles"), py::arg("catalog"),
          py::arg("user"), py::arg("app"));

    m.def("optimal_vendor",
          [](const AccessLedger& ledger, UserId u, const std::vector<VendorId>& candidates) {
              return optimal_vendor(ledger, u, candidates);
          },
          py::arg("ledger"), py::arg("user"), py::arg("candidates"));

    m.def("default_q", [](const std::string& model, const std::string& scenario) {
        const ModelKind kind = model_kind_from_string(model);
        Scenario s;
        if (scenario == "same_vendor") {
            s = Scenario::kSameVendor;
        } else if (scenario == "collab_single") {
            s = Scenario::kCollabVendorSingle;
        } else if (scenario == "collab_multi") {
            s = Scenario::kCollabVendorMulti;
        } else if (scenario == "no_history") {
            s = Scenario::kNoHistory;
        } else {
            throw std::invalid_argument("unknown scenario \"" + scenario + "\"");
        }
        return default_q(kind, s);
    });

    m.def("run_simulation",
          [](const std::string& config_json, unsigned threads) {
              const SimJobConfig config = parse_sim_config(nlohmann::json::parse(config_json));
              const ComparativeResult result = run_sim_job(config, threads);
              return json_to_py(summary_json(result, config.echo));
          },
          py::arg("config_json"), py::arg("threads") = 0,
          "Run a full simulation job from a config JSON string; returns the summary dict.");

    m.def("simulation_timeseries_csv",
          [](const std::string& config_json, unsigned threads) {
              const SimJobConfig config = parse_sim_config(nlohmann::json::parse(config_json));
              const ComparativeResult result = run_sim_job(config, threads);
              std::map<std::string, std::string> out;
              for (std::size_t i = 0; i < result.models.size(); ++i) {
                  std::ostringstream csv;
                  write_timeseries_csv(result.results[i], csv);
                  out[result.models[i]] = csv.str();
              }
              return out;
          },
          py::arg("config_json"), py::arg("threads") = 0);

    m.def("analyze_dataset",
          [](const std::string& dataset_jsonl, const std::vector<double>& thresholds,
             std::uint64_t seed, std::uint32_t n_files_min, std::uint32_t n_apps_min) {
              std::istringstream in(dataset_jsonl);
              DatasetRecords records = ingest_dataset(in);
              impute_collaborator_apps(records, seed);
              const MetricFilters filters{n_files_min, n_apps_min};
              const auto rows = sweep_p_min_shared(records, thresholds, filters);
              py::list out;
              for (const auto& row : rows) {
                  py::dict d;
                  d["threshold"] = row.threshold;
                  d["count"] = row.count;
                  const auto put = [&](const char* key, const std::optional<QuartileStats>& q) {
                      if (q) {
                          d[key] = py::make_tuple(q->q1, q->median, q->q3);
                      } else {
                          d[key] = py::none();
                      }
                  };
                  put("self", row.self);
                  put("collaborators", row.collaborators);
                  put("aggregate", row.aggregate);
                  out.append(d);
              }
              return out;
          },
          py::arg("dataset_jsonl"), py::arg("thresholds"), py::arg("seed") = 0,
          py::arg("n_files_min") = 10, py::arg("n_apps_min") = 1);

    m.attr("__version__") = "0.1.0";
}
