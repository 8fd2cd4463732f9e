#include "covsim/sharing.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "covsim/analysis.hpp"

namespace covsim {

FileBitset SharingProfile::shared_union() const {
    FileBitset u(n_files);
    for (const auto& [c, files] : shared_with) u.union_with(files);
    return u;
}

double SharingProfile::shared_fraction() const {
    if (n_files == 0) return 0.0;
    return static_cast<double>(shared_union().count()) / n_files;
}

double shared_fraction(const SharingProfiles& profiles, UserId u) {
    return profiles[u].shared_fraction();
}

const std::vector<EmpiricalTriple>& EmpiricalTables::bucket_for(std::uint32_t degree) const {
    if (buckets_.empty()) throw std::logic_error("empirical tables are empty");
    auto it = buckets_.lower_bound(degree);
    if (it != buckets_.end() && it->first == degree) return it->second;
    if (it == buckets_.begin()) return it->second;
    if (it == buckets_.end()) return std::prev(it)->second;
    auto lo = std::prev(it);
    const std::uint32_t d_lo = degree - lo->first;
    const std::uint32_t d_hi = it->first - degree;
    return d_lo <= d_hi ? lo->second : it->second;
}

EmpiricalTables build_empirical_tables(const DatasetRecords& records) {
    if (records.size() == 0) throw std::invalid_argument("dataset is empty");
    EmpiricalTables tables;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const DatasetUser& u = records.user(i);
        if (u.implicit || u.files.empty()) continue;
        std::set<std::string> collaborators;
        for (const auto& f : u.files) collaborators.insert(f.collaborators.begin(), f.collaborators.end());
        collaborators.erase(u.user_id);
        tables.add(static_cast<std::uint32_t>(collaborators.size()),
                   EmpiricalTriple{static_cast<std::uint32_t>(u.n_files()),
                                   u.shared_fraction(),
                                   static_cast<std::uint32_t>(u.n_apps())});
    }
    if (tables.empty()) throw std::invalid_argument("dataset has no users with files");
    return tables;
}

namespace {

/// Kumaraswamy(a, b) sample with the b shape solved from the target median.
double sample_shared_fraction(double median, double shape_a, Rng& rng) {
    if (median <= 0.0) return 0.0;
    if (median >= 1.0) return 1.0;
    const double b = std::log(0.5) / std::log1p(-std::pow(median, shape_a));
    const double u = rng.uniform01();
    return std::pow(1.0 - std::pow(1.0 - u, 1.0 / b), 1.0 / shape_a);
}

}  // namespace

EmpiricalTables synthetic_tables(const SyntheticSharingParams& params, std::uint64_t seed) {
    if (params.file_median < 1.0) throw std::invalid_argument("file_median must be >= 1");
    if (params.shared_median < 0.0 || params.shared_median >= 1.0) {
        throw std::invalid_argument("shared_median must be in [0,1)");
    }
    Rng rng(seed);
    const double mu = std::log(params.file_median);
    EmpiricalTables tables;
    for (std::uint32_t d = 0; d <= params.max_bucket_degree; ++d) {
        for (std::uint32_t s = 0; s < params.samples_per_bucket; ++s) {
            EmpiricalTriple t;
            const double files = rng.lognormal(mu, params.file_sigma);
            t.n_files = static_cast<std::uint32_t>(
                std::clamp<double>(std::llround(files), 1.0, params.max_files));
            t.shared_frac =
                d == 0 ? 0.0 : sample_shared_fraction(params.shared_median, params.shared_shape, rng);
            t.n_apps = static_cast<std::uint32_t>(rng.geometric(params.apps_geometric_p));
            tables.add(d, t);
        }
    }
    return tables;
}

SharingProfiles populate(const CollaborationGraph& graph, const EmpiricalTables& tables,
                         std::uint64_t seed, double multi_collab_prob) {
    if (tables.empty()) throw std::invalid_argument("empirical tables are empty");
    Rng rng(seed);
    std::vector<SharingProfile> profiles(graph.n_users());
    std::vector<std::uint32_t> perm;
    for (UserId u = 0; u < graph.n_users(); ++u) {
        SharingProfile& p = profiles[u];
        const auto nb = graph.neighbors(u);
        const auto& bucket = tables.bucket_for(graph.degree(u));
        const EmpiricalTriple t = bucket[rng.index(bucket.size())];
        p.n_files = std::max<std::uint32_t>(t.n_files, 1);
        p.install_weight = t.n_apps;
        if (nb.empty()) continue;

        const auto shared_count = static_cast<std::uint32_t>(std::clamp<double>(
            std::floor(t.shared_frac * p.n_files + 0.5), 0.0, p.n_files));
        if (shared_count == 0) continue;

        // partial Fisher-Yates picks shared_count distinct file indices
        perm.resize(p.n_files);
        for (std::uint32_t i = 0; i < p.n_files; ++i) perm[i] = i;
        for (std::uint32_t i = 0; i < shared_count; ++i) {
            const std::size_t j = i + rng.index(perm.size() - i);
            std::swap(perm[i], perm[j]);
        }

        for (std::uint32_t i = 0; i < shared_count; ++i) {
            const std::uint32_t file = perm[i];
            const std::size_t primary = rng.index(nb.size());
            for (std::size_t e = 0; e < nb.size(); ++e) {
                const bool take = e == primary || (multi_collab_prob > 0.0 && rng.bernoulli(multi_collab_prob));
                if (!take) continue;
                auto [it, fresh] = p.shared_with.try_emplace(nb[e], FileBitset(p.n_files));
                it->second.set(file);
            }
        }
    }
    return SharingProfiles(std::move(profiles));
}

void dump_profiles(const SharingProfiles& profiles, std::ostream& out) {
    for (UserId u = 0; u < profiles.size(); ++u) {
        const SharingProfile& p = profiles[u];
        nlohmann::json j;
        j["user"] = u;
        j["n_files"] = p.n_files;
        auto& shared = j["shared"] = nlohmann::json::object();
        for (const auto& [c, files] : p.shared_with) {
            shared[std::to_string(c)] = files.indices();
        }
        j["install_weight"] = p.install_weight;
        out << j.dump() << '\n';
    }
}

SharingProfiles ingest_profiles(std::istream& in) {
    std::vector<SharingProfile> profiles;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            const auto u = j.at("user").get<UserId>();
            if (u >= profiles.size()) profiles.resize(u + 1);
            SharingProfile& p = profiles[u];
            p.n_files = j.at("n_files").get<std::uint32_t>();
            p.install_weight = j.value("install_weight", 0u);
            for (const auto& [key, arr] : j.at("shared").items()) {
                const UserId c = static_cast<UserId>(std::stoul(key));
                FileBitset files(p.n_files);
                for (const auto& idx : arr) {
                    const auto i = idx.get<std::uint32_t>();
                    if (i >= p.n_files) throw std::runtime_error("shared index out of range");
                    files.set(i);
                }
                p.shared_with.emplace(c, std::move(files));
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("profile line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return SharingProfiles(std::move(profiles));
}

}  // namespace covsim
