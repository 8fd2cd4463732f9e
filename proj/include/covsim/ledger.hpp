#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <unordered_map>
#include <vector>

#include "covsim/bitset.hpp"
#include "covsim/catalog.hpp"
#include "covsim/graph.hpp"
#include "covsim/sharing.hpp"

namespace covsim {

/// Per-user, per-vendor file coverage with authorization provenance.
///
/// Vendors a user authorized herself (self vendors) cover all of her files.
/// Vendors reaching her only through collaborators (collaborator vendors)
/// cover the union of the shared file sets on the contributing edges. The two
/// provenance sets are disjoint at all times: a collaborator-known vendor
/// that is later self-authorized migrates to the self set. Coverage never
/// shrinks.
class AccessLedger {
public:
    explicit AccessLedger(std::vector<std::uint32_t> n_files);
    static AccessLedger for_profiles(const SharingProfiles& profiles);

    std::uint32_t n_users() const { return static_cast<std::uint32_t>(users_.size()); }
    std::uint32_t n_files(UserId u) const { return users_.at(u).n_files; }

    /// Self authorization: full coverage, provenance migration.
    void grant_full(UserId u, VendorId v);

    /// Collaborator exposure: v becomes collaborator-known to u (unless
    /// already self) and the given files join coverage(u, v). files may be
    /// null when nothing is shared on the edge. Returns newly covered count.
    std::uint32_t add_collab_exposure(UserId u, VendorId v, const FileBitset* files);

    void record_install(UserId u, AppId a);
    bool installed(UserId u, AppId a) const;
    std::size_t n_installs(UserId u) const { return users_.at(u).installs.size(); }
    const std::vector<AppId>& installs(UserId u) const { return users_.at(u).installs; }

    const std::vector<VendorId>& self_vendors(UserId u) const { return users_.at(u).self; }
    const std::vector<VendorId>& collab_vendors(UserId u) const { return users_.at(u).collab; }
    bool is_self_vendor(UserId u, VendorId v) const;
    bool is_collab_vendor(UserId u, VendorId v) const;

    std::uint32_t coverage_count(UserId u, VendorId v) const;
    const FileBitset* coverage(UserId u, VendorId v) const;

    /// |coverage(u,v)| / n_files(u); 0 for vendors with no access.
    double vendor_coverage_percent(UserId u, VendorId v) const;

    /// Sum over the vendor set of per-vendor covered fractions. Within one
    /// vendor files are unioned; across vendors fractions add up, so the
    /// value ranges in [0, |vendors|]. Throws when n_files(u) == 0.
    double vfc(UserId u, std::span<const VendorId> vendors) const;
    std::uint64_t vfc_numerator(UserId u, std::span<const VendorId> vendors) const;

    double self_vfc(UserId u) const;
    double collaborators_vfc(UserId u) const;
    double aggregate_vfc(UserId u) const;

    /// Exact integer numerators (denominator n_files(u)); self and
    /// collaborators are summed over their provenance sets, the aggregate is
    /// tracked incrementally.
    std::uint64_t self_numerator(UserId u) const;
    std::uint64_t collaborators_numerator(UserId u) const;
    std::uint64_t aggregate_numerator(UserId u) const { return users_.at(u).aggregate_numerator; }

    /// JSON lines, one user per line, for debugging and analysis tooling.
    void dump_snapshot(std::ostream& out) const;

private:
    struct UserState {
        std::uint32_t n_files = 0;
        std::unordered_map<VendorId, FileBitset> coverage;
        std::vector<VendorId> self;    // sorted
        std::vector<VendorId> collab;  // sorted, disjoint from self
        std::vector<AppId> installs;   // sorted
        std::uint64_t aggregate_numerator = 0;
    };
    std::vector<UserState> users_;

    double checked_fraction(UserId u, std::uint64_t numerator) const;
};

struct AuthorizeDelta {
    VendorId vendor = 0;
    std::vector<UserId> changed;  // the installer plus her collaborators
};

/// Applies one app authorization by user u: the app's vendor gains full
/// access to u's files and, through each edge, to the files collaborators
/// share with u. Throws on unknown user or app.
AuthorizeDelta authorize(AccessLedger& ledger, const CollaborationGraph& graph,
                         const SharingProfiles& profiles, const AppCatalog& catalog, UserId u,
                         AppId app);

}  // namespace covsim
