#include "covsim/catalog.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace covsim {

AppCatalog::AppCatalog(std::vector<App> apps, std::vector<std::string> vendor_labels)
    : apps_(std::move(apps)), vendor_labels_(std::move(vendor_labels)) {
    vendor_apps_.resize(vendor_labels_.size());
    cumulative_.reserve(apps_.size());
    for (AppId a = 0; a < apps_.size(); ++a) {
        if (apps_[a].id != a) throw std::invalid_argument("app ids must be dense");
        if (apps_[a].vendor >= vendor_labels_.size()) {
            throw std::invalid_argument("vendor id out of range");
        }
        vendor_apps_[apps_[a].vendor].push_back(a);
        total_weight_ += apps_[a].install_count;
        cumulative_.push_back(total_weight_);
    }
    if (total_weight_ == 0) throw std::invalid_argument("catalog has zero total install count");
}

const App& AppCatalog::sample_app(Rng& rng) const {
    if (total_weight_ == 0) throw std::logic_error("catalog has zero total install count");
    const std::uint64_t x = rng.uniform_below(total_weight_);
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    return apps_[static_cast<std::size_t>(it - cumulative_.begin())];
}

AppCatalog ingest_catalog(std::istream& in, CatalogWarnings* warnings) {
    struct RawApp {
        std::string label;
        std::string vendor;
        std::uint64_t install_count;
        std::vector<std::string> related;
    };
    std::vector<RawApp> raw;
    std::unordered_map<std::string, AppId> app_index;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("catalog line " + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
        }
        try {
            RawApp r;
            r.label = j.at("app_id").get<std::string>();
            r.vendor = j.at("vendor").get<std::string>();
            r.install_count = j.at("install_count").get<std::uint64_t>();
            r.related = j.value("related", std::vector<std::string>{});
            if (!app_index.try_emplace(r.label, static_cast<AppId>(raw.size())).second) {
                throw std::runtime_error("duplicate app_id \"" + r.label + "\"");
            }
            raw.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("catalog line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("catalog line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    if (raw.empty()) throw std::runtime_error("catalog is empty");

    std::unordered_map<std::string, VendorId> vendor_index;
    std::vector<std::string> vendor_labels;
    CatalogWarnings local{};
    std::vector<App> apps;
    apps.reserve(raw.size());
    for (AppId a = 0; a < raw.size(); ++a) {
        App app;
        app.id = a;
        app.label = raw[a].label;
        auto [vit, fresh] =
            vendor_index.try_emplace(raw[a].vendor, static_cast<VendorId>(vendor_labels.size()));
        if (fresh) vendor_labels.push_back(raw[a].vendor);
        app.vendor = vit->second;
        app.install_count = raw[a].install_count;
        for (const auto& rel : raw[a].related) {
            const auto it = app_index.find(rel);
            if (it == app_index.end() || it->second == a) {
                ++local.dangling_related_pruned;
                continue;
            }
            app.related.push_back(it->second);
        }
        std::sort(app.related.begin(), app.related.end());
        app.related.erase(std::unique(app.related.begin(), app.related.end()), app.related.end());
        apps.push_back(std::move(app));
    }
    if (warnings) *warnings = local;
    return AppCatalog(std::move(apps), std::move(vendor_labels));
}

void dump_catalog(const AppCatalog& catalog, std::ostream& out) {
    for (const App& app : catalog.apps()) {
        nlohmann::json j;
        j["app_id"] = app.label;
        j["vendor"] = catalog.vendor_label(app.vendor);
        j["install_count"] = app.install_count;
        auto& rel = j["related"] = nlohmann::json::array();
        for (AppId r : app.related) rel.push_back(catalog.app(r).label);
        out << j.dump() << '\n';
    }
}

AppCatalog generate_synthetic_catalog(const SyntheticCatalogParams& params, std::uint64_t seed) {
    if (params.n_apps == 0) throw std::invalid_argument("n_apps must be >= 1");
    if (params.related_size >= params.n_apps) {
        throw std::invalid_argument("related_size must be < n_apps");
    }
    if (params.apps_per_vendor_mean < 1.0) {
        throw std::invalid_argument("apps_per_vendor_mean must be >= 1");
    }
    Rng rng(seed);
    const std::size_t n = params.n_apps;
    const double vendor_mean = std::min(params.apps_per_vendor_mean, static_cast<double>(n));

    // Zipf install counts over rank, scaled so the tail stays integral.
    constexpr double kTopInstalls = 1e6;
    std::vector<std::uint64_t> counts(n);
    for (std::size_t r = 0; r < n; ++r) {
        counts[r] = static_cast<std::uint64_t>(
            std::llround(kTopInstalls / std::pow(static_cast<double>(r + 1), params.zipf_exponent)));
        if (counts[r] == 0) counts[r] = 1;
    }

    // vendor sizes: 1 + geometric, then a random app-to-vendor assignment
    const double p = 1.0 / vendor_mean;
    std::vector<std::uint32_t> vendor_sizes;
    std::size_t assigned = 0;
    while (assigned < n) {
        auto size = static_cast<std::uint32_t>(1 + rng.geometric(p));
        size = static_cast<std::uint32_t>(std::min<std::size_t>(size, n - assigned));
        vendor_sizes.push_back(size);
        assigned += size;
    }
    std::vector<VendorId> slots(n);
    {
        std::size_t k = 0;
        for (VendorId v = 0; v < vendor_sizes.size(); ++v) {
            for (std::uint32_t i = 0; i < vendor_sizes[v]; ++i) slots[k++] = v;
        }
    }
    rng.shuffle(slots);

    // related sets: distinct draws, excluding the app itself
    std::vector<std::uint64_t> cum(n);
    std::uint64_t run = 0;
    for (std::size_t r = 0; r < n; ++r) {
        run += counts[r];
        cum[r] = run;
    }
    auto draw_related = [&]() {
        if (params.related_bias == RelatedBias::kUniform) {
            return static_cast<AppId>(rng.index(n));
        }
        const std::uint64_t x = rng.uniform_below(run);
        const auto it = std::upper_bound(cum.begin(), cum.end(), x);
        return static_cast<AppId>(it - cum.begin());
    };

    std::vector<App> apps(n);
    std::vector<std::string> vendor_labels(vendor_sizes.size());
    for (VendorId v = 0; v < vendor_labels.size(); ++v) vendor_labels[v] = "v" + std::to_string(v);
    for (AppId a = 0; a < n; ++a) {
        App& app = apps[a];
        app.id = a;
        app.label = "app" + std::to_string(a);
        app.vendor = slots[a];
        app.install_count = counts[a];
        std::vector<AppId> rel;
        while (rel.size() < params.related_size) {
            const AppId cand = draw_related();
            if (cand == a || std::find(rel.begin(), rel.end(), cand) != rel.end()) continue;
            rel.push_back(cand);
        }
        std::sort(rel.begin(), rel.end());
        app.related = std::move(rel);
    }
    return AppCatalog(std::move(apps), std::move(vendor_labels));
}

Alternatives alternatives(const AppCatalog& catalog, AppId a0) {
    const App& app = catalog.app(a0);
    Alternatives alt;
    alt.apps.push_back(a0);
    alt.apps.insert(alt.apps.end(), app.related.begin(), app.related.end());
    std::sort(alt.apps.begin(), alt.apps.end());
    alt.apps.erase(std::unique(alt.apps.begin(), alt.apps.end()), alt.apps.end());
    for (AppId a : alt.apps) alt.vendors.push_back(catalog.app(a).vendor);
    std::sort(alt.vendors.begin(), alt.vendors.end());
    alt.vendors.erase(std::unique(alt.vendors.begin(), alt.vendors.end()), alt.vendors.end());
    return alt;
}

}  // namespace covsim
