#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "covsim/bitset.hpp"
#include "covsim/graph.hpp"
#include "covsim/rng.hpp"

namespace covsim {

class DatasetRecords;

/// Files and per-edge sharing of one user. shared_with[c] holds the indices
/// of this user's files that collaborator c can see; keys are a subset of the
/// user's neighbors in the attached graph.
struct SharingProfile {
    std::uint32_t n_files = 0;
    std::uint32_t install_weight = 0;
    std::map<UserId, FileBitset> shared_with;

    FileBitset shared_union() const;
    double shared_fraction() const;
};

class SharingProfiles {
public:
    SharingProfiles() = default;
    explicit SharingProfiles(std::vector<SharingProfile> profiles)
        : profiles_(std::move(profiles)) {}

    std::size_t size() const { return profiles_.size(); }
    const SharingProfile& operator[](UserId u) const { return profiles_[u]; }
    SharingProfile& operator[](UserId u) { return profiles_[u]; }
    std::uint32_t n_files(UserId u) const { return profiles_[u].n_files; }

    /// Files of u visible to collaborator c, or nullptr when nothing is
    /// shared on that edge.
    const FileBitset* shared(UserId u, UserId c) const {
        const auto it = profiles_[u].shared_with.find(c);
        return it == profiles_[u].shared_with.end() ? nullptr : &it->second;
    }

private:
    std::vector<SharingProfile> profiles_;
};

double shared_fraction(const SharingProfiles& profiles, UserId u);

struct EmpiricalTriple {
    std::uint32_t n_files = 1;
    double shared_frac = 0.0;
    std::uint32_t n_apps = 0;
};

/// Per-degree-bucket samples of (file count, shared fraction, apps count)
/// kept verbatim for resampling. A missing bucket falls back to the nearest
/// populated degree.
class EmpiricalTables {
public:
    void add(std::uint32_t degree, EmpiricalTriple triple) {
        buckets_[degree].push_back(triple);
    }
    bool empty() const { return buckets_.empty(); }
    std::size_t n_buckets() const { return buckets_.size(); }
    const std::map<std::uint32_t, std::vector<EmpiricalTriple>>& buckets() const {
        return buckets_;
    }

    /// Nearest-degree bucket (ties resolved to the lower degree).
    const std::vector<EmpiricalTriple>& bucket_for(std::uint32_t degree) const;

private:
    std::map<std::uint32_t, std::vector<EmpiricalTriple>> buckets_;
};

/// Groups dataset users by collaborator count, keeping raw triples.
EmpiricalTables build_empirical_tables(const DatasetRecords& records);

/// Parametric stand-in for when no dataset file is available. File counts are
/// lognormal around file_median; shared fractions follow a Kumaraswamy law
/// (a Beta-shaped family with closed-form sampling) with the given median;
/// apps counts are geometric.
struct SyntheticSharingParams {
    double file_median = 67.0;
    double file_sigma = 1.0;
    std::uint32_t max_files = 2000;
    double shared_median = 0.18;
    double shared_shape = 1.0;
    double apps_geometric_p = 0.45;
    std::uint32_t max_bucket_degree = 64;
    std::uint32_t samples_per_bucket = 32;
};

EmpiricalTables synthetic_tables(const SyntheticSharingParams& params, std::uint64_t seed);

/// Assigns every user a sampled (file count, shared fraction, apps count)
/// from the bucket matching her degree, then allocates each shared file to
/// one uniformly random collaborator edge. With multi_collab_prob > 0 a
/// shared file additionally joins each remaining edge independently with that
/// probability. Deterministic per seed.
SharingProfiles populate(const CollaborationGraph& graph, const EmpiricalTables& tables,
                         std::uint64_t seed, double multi_collab_prob = 0.0);

/// JSON-lines profile dump/ingest:
///   {"user":0,"n_files":4,"shared":{"1":[0,2]},"install_weight":2}
void dump_profiles(const SharingProfiles& profiles, std::ostream& out);
SharingProfiles ingest_profiles(std::istream& in);

}  // namespace covsim
