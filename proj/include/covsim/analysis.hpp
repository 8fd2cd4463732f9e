#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "covsim/rng.hpp"

namespace covsim {

struct DatasetFile {
    std::string file_id;
    std::vector<std::string> collaborators;
};

/// One dataset user. Implicit users are collaborators referenced by some
/// file but carrying no record of their own; they own no files until a
/// record says otherwise and no vendors until imputation.
struct DatasetUser {
    std::string user_id;
    std::vector<DatasetFile> files;
    std::vector<std::string> vendors;
    bool implicit = false;

    std::size_t n_files() const { return files.size(); }
    std::size_t n_apps() const { return vendors.size(); }
    double shared_fraction() const;
};

class DatasetRecords {
public:
    std::size_t size() const { return users_.size(); }
    const DatasetUser& user(std::size_t i) const { return users_[i]; }
    DatasetUser& user(std::size_t i) { return users_[i]; }
    const DatasetUser* find(const std::string& user_id) const;

    std::size_t n_explicit() const { return n_explicit_; }
    std::size_t n_implicit() const { return users_.size() - n_explicit_; }

    /// Appends an explicit record; throws on duplicate ids.
    void add(DatasetUser user);
    /// Creates implicit entries for every referenced collaborator that has
    /// no record yet.
    void close_over_collaborators();

private:
    std::vector<DatasetUser> users_;
    std::unordered_map<std::string, std::size_t> index_;
    std::size_t n_explicit_ = 0;
};

/// Parses one JSONL user record per line:
///   {"user_id":"u1","files":[{"file_id":"f1","collaborators":["u2"]}],"vendors":["v1"]}
/// Referenced collaborators without records become implicit entries.
DatasetRecords ingest_dataset(std::istream& in);

void dump_dataset(const DatasetRecords& records, std::ostream& out);

/// Gives every implicit entry the vendor list of a seeded-random explicit
/// user. Throws when there are no explicit users.
void impute_collaborator_apps(DatasetRecords& records, std::uint64_t seed);

struct MetricFilters {
    std::uint32_t n_files_min = 10;
    std::uint32_t n_apps_min = 1;
};

struct UserMetrics {
    std::string user_id;
    std::uint32_t n_files = 0;
    double shared_fraction = 0.0;
    std::uint32_t n_apps = 0;
    double self_vfc = 0.0;
    double collaborators_vfc = 0.0;
    double aggregate_vfc = 0.0;
};

/// Static-ledger metrics for every explicit user with at least
/// filters.n_files_min files: a vendor the user authorized covers all of her
/// files, a vendor a collaborator authorized covers exactly the files whose
/// collaborator list names that collaborator. Vendors authorized by both
/// sides count in Self only.
std::vector<UserMetrics> compute_metrics(const DatasetRecords& records,
                                         const MetricFilters& filters = {});

struct QuartileStats {
    double q1 = 0.0;
    double median = 0.0;
    double q3 = 0.0;
};

struct SweepRow {
    double threshold = 0.0;
    std::size_t count = 0;
    std::optional<QuartileStats> self;
    std::optional<QuartileStats> collaborators;
    std::optional<QuartileStats> aggregate;
};

/// Linear interpolation between closest ranks (type 7). `sorted` must be
/// ascending and non-empty; p in [0,1].
double quantile_type7(std::span<const double> sorted, double p);

/// Per-threshold metric distributions over shrinking cohorts. Thresholds must
/// be ascending fractions in [0,1].
std::vector<SweepRow> sweep_p_min_shared(const DatasetRecords& records,
                                         std::span<const double> thresholds,
                                         const MetricFilters& filters = {});

void write_analysis_csv(std::span<const SweepRow> rows, std::ostream& out);

/// Synthetic dataset generator: lognormal file counts (median ~67), skewed
/// shared fractions (median ~0.18), about one authorized vendor per user.
struct FixtureParams {
    std::size_t n_users = 200;
    double file_median = 67.0;
    double file_sigma = 1.0;
    double shared_median = 0.18;
    double shared_shape = 1.0;
    std::size_t vendor_pool = 40;
    double apps_geometric_p = 0.45;
    std::size_t collaborator_pool = 400;
    double collaborators_per_user_mean = 6.0;
};

DatasetRecords generate_fixture(const FixtureParams& params, std::uint64_t seed);

/// Fixture where collaborator-held coverage dominates: every subject
/// authorizes one shared vendor, shares at least half of her files with one
/// dedicated collaborator, and that collaborator authorizes two vendors no
/// subject uses.
DatasetRecords generate_collaborator_dominant_fixture(std::size_t n_users, std::uint64_t seed);

}  // namespace covsim
