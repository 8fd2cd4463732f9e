#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "covsim/rng.hpp"

namespace covsim {

using AppId = std::uint32_t;
using VendorId = std::uint32_t;

struct App {
    AppId id = 0;
    std::string label;
    VendorId vendor = 0;
    std::uint64_t install_count = 0;
    std::vector<AppId> related;  // sorted, never contains id
};

/// Universe of installable apps with popularity weights and a vendor index.
/// Zero-weight apps stay in the catalog but are never drawn by sample_app.
class AppCatalog {
public:
    AppCatalog() = default;
    AppCatalog(std::vector<App> apps, std::vector<std::string> vendor_labels);

    std::size_t n_apps() const { return apps_.size(); }
    std::size_t n_vendors() const { return vendor_labels_.size(); }
    const App& app(AppId a) const { return apps_.at(a); }
    const std::vector<App>& apps() const { return apps_; }
    const std::string& vendor_label(VendorId v) const { return vendor_labels_.at(v); }
    const std::vector<AppId>& vendor_apps(VendorId v) const { return vendor_apps_.at(v); }
    std::uint64_t total_weight() const { return total_weight_; }

    /// Weighted draw: P(app) = install_count / total_weight.
    const App& sample_app(Rng& rng) const;

private:
    std::vector<App> apps_;
    std::vector<std::string> vendor_labels_;
    std::vector<std::vector<AppId>> vendor_apps_;
    std::vector<std::uint64_t> cumulative_;
    std::uint64_t total_weight_ = 0;
};

struct CatalogWarnings {
    std::size_t dangling_related_pruned = 0;
};

/// JSONL ingestion, one app per line:
///   {"app_id":"a1","vendor":"v1","install_count":1234,"related":["a2"]}
/// Related ids that name no catalog app are pruned and counted. Throws on
/// duplicate app ids, malformed lines (with line number), and zero total
/// weight.
AppCatalog ingest_catalog(std::istream& in, CatalogWarnings* warnings = nullptr);

void dump_catalog(const AppCatalog& catalog, std::ostream& out);

enum class RelatedBias : std::uint8_t {
    kUniform,     // related apps drawn uniformly
    kPopularity,  // related apps drawn by install count (store-like hubs)
};

struct SyntheticCatalogParams {
    std::size_t n_apps = 1000;
    double zipf_exponent = 1.0;
    double apps_per_vendor_mean = 1.3;  // geometric over {1,2,...}
    std::uint32_t related_size = 5;
    RelatedBias related_bias = RelatedBias::kPopularity;
};

/// Synthetic catalog: install counts follow a Zipf law over rank, vendors get
/// geometric app counts, every app receives related_size distinct related
/// apps (excluding itself). Deterministic per seed.
AppCatalog generate_synthetic_catalog(const SyntheticCatalogParams& params, std::uint64_t seed);

struct Alternatives {
    std::vector<AppId> apps;       // the drawn app plus its related apps
    std::vector<VendorId> vendors;  // their vendor set, sorted unique
};

/// A_rel = {a0} union related(a0); V_rel = vendors of A_rel.
Alternatives alternatives(const AppCatalog& catalog, AppId a0);

}  // namespace covsim
