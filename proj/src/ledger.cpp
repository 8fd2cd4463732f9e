#include "covsim/ledger.hpp"

#include <algorithm>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace covsim {

namespace {

bool sorted_contains(const std::vector<std::uint32_t>& v, std::uint32_t x) {
    return std::binary_search(v.begin(), v.end(), x);
}

void sorted_insert(std::vector<std::uint32_t>& v, std::uint32_t x) {
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it == v.end() || *it != x) v.insert(it, x);
}

void sorted_erase(std::vector<std::uint32_t>& v, std::uint32_t x) {
    const auto it = std::lower_bound(v.begin(), v.end(), x);
    if (it != v.end() && *it == x) v.erase(it);
}

}  // namespace

AccessLedger::AccessLedger(std::vector<std::uint32_t> n_files) {
    users_.resize(n_files.size());
    for (std::size_t u = 0; u < n_files.size(); ++u) users_[u].n_files = n_files[u];
}

AccessLedger AccessLedger::for_profiles(const SharingProfiles& profiles) {
    std::vector<std::uint32_t> n_files(profiles.size());
    for (UserId u = 0; u < profiles.size(); ++u) n_files[u] = profiles.n_files(u);
    return AccessLedger(std::move(n_files));
}

void AccessLedger::grant_full(UserId u, VendorId v) {
    UserState& s = users_.at(u);
    auto [it, fresh] = s.coverage.try_emplace(v, FileBitset(s.n_files));
    FileBitset& cov = it->second;
    s.aggregate_numerator += s.n_files - cov.count();
    cov.set_all();
    sorted_insert(s.self, v);
    sorted_erase(s.collab, v);
}

std::uint32_t AccessLedger::add_collab_exposure(UserId u, VendorId v, const FileBitset* files) {
    UserState& s = users_.at(u);
    if (sorted_contains(s.self, v)) return 0;  // full coverage already
    sorted_insert(s.collab, v);
    if (files == nullptr || files->count() == 0) return 0;
    auto [it, fresh] = s.coverage.try_emplace(v, FileBitset(s.n_files));
    const std::uint32_t added = it->second.union_with(*files);
    s.aggregate_numerator += added;
    return added;
}

void AccessLedger::record_install(UserId u, AppId a) {
    sorted_insert(users_.at(u).installs, a);
}

bool AccessLedger::installed(UserId u, AppId a) const {
    return sorted_contains(users_.at(u).installs, a);
}

bool AccessLedger::is_self_vendor(UserId u, VendorId v) const {
    return sorted_contains(users_.at(u).self, v);
}

bool AccessLedger::is_collab_vendor(UserId u, VendorId v) const {
    return sorted_contains(users_.at(u).collab, v);
}

std::uint32_t AccessLedger::coverage_count(UserId u, VendorId v) const {
    const FileBitset* cov = coverage(u, v);
    return cov == nullptr ? 0 : cov->count();
}

const FileBitset* AccessLedger::coverage(UserId u, VendorId v) const {
    const UserState& s = users_.at(u);
    const auto it = s.coverage.find(v);
    return it == s.coverage.end() ? nullptr : &it->second;
}

double AccessLedger::checked_fraction(UserId u, std::uint64_t numerator) const {
    const std::uint32_t files = users_.at(u).n_files;
    if (files == 0) throw std::domain_error("user has no files");
    return static_cast<double>(numerator) / files;
}

double AccessLedger::vendor_coverage_percent(UserId u, VendorId v) const {
    return checked_fraction(u, coverage_count(u, v));
}

std::uint64_t AccessLedger::vfc_numerator(UserId u, std::span<const VendorId> vendors) const {
    std::uint64_t sum = 0;
    for (VendorId v : vendors) sum += coverage_count(u, v);
    return sum;
}

double AccessLedger::vfc(UserId u, std::span<const VendorId> vendors) const {
    return checked_fraction(u, vfc_numerator(u, vendors));
}

std::uint64_t AccessLedger::self_numerator(UserId u) const {
    return vfc_numerator(u, users_.at(u).self);
}

std::uint64_t AccessLedger::collaborators_numerator(UserId u) const {
    return vfc_numerator(u, users_.at(u).collab);
}

double AccessLedger::self_vfc(UserId u) const {
    return checked_fraction(u, self_numerator(u));
}

double AccessLedger::collaborators_vfc(UserId u) const {
    return checked_fraction(u, collaborators_numerator(u));
}

double AccessLedger::aggregate_vfc(UserId u) const {
    return checked_fraction(u, users_.at(u).aggregate_numerator);
}

void AccessLedger::dump_snapshot(std::ostream& out) const {
    for (UserId u = 0; u < users_.size(); ++u) {
        const UserState& s = users_[u];
        nlohmann::json j;
        j["user"] = u;
        auto& vendors = j["vendors"] = nlohmann::json::object();
        std::vector<VendorId> ids;
        ids.reserve(s.self.size() + s.collab.size());
        std::merge(s.self.begin(), s.self.end(), s.collab.begin(), s.collab.end(),
                   std::back_inserter(ids));
        for (VendorId v : ids) {
            const std::uint32_t files = coverage_count(u, v);
            vendors[std::to_string(v)] = {
                {"files", files},
                {"fraction", s.n_files == 0 ? 0.0 : static_cast<double>(files) / s.n_files},
                {"provenance", sorted_contains(s.self, v) ? "self" : "collab"},
            };
        }
        out << j.dump() << '\n';
    }
}

AuthorizeDelta authorize(AccessLedger& ledger, const CollaborationGraph& graph,
                         const SharingProfiles& profiles, const AppCatalog& catalog, UserId u,
                         AppId app) {
    if (u >= graph.n_users()) throw std::out_of_range("unknown user");
    if (app >= catalog.n_apps()) throw std::out_of_range("unknown app");
    const VendorId v = catalog.app(app).vendor;

    AuthorizeDelta delta;
    delta.vendor = v;
    delta.changed.push_back(u);
    ledger.record_install(u, app);
    ledger.grant_full(u, v);
    for (UserId c : graph.neighbors(u)) {
        ledger.add_collab_exposure(c, v, profiles.shared(c, u));
        delta.changed.push_back(c);
    }
    return delta;
}

}  // namespace covsim
