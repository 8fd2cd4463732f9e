#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "covsim/rng.hpp"

namespace covsim {

using UserId = std::uint32_t;
using TeamId = std::uint32_t;

/// Undirected simple collaboration graph over dense user ids 0..n_users-1.
/// Neighbor lists are strictly sorted; adjacency is symmetric by construction.
class CollaborationGraph {
public:
    CollaborationGraph() = default;

    /// Builds a graph from an edge set. Self-loops and duplicate edges are
    /// rejected here; callers that tolerate them must clean up first.
    static CollaborationGraph from_edges(std::uint32_t n_users,
                                         std::vector<std::pair<UserId, UserId>> edges,
                                         std::vector<std::string> labels = {});

    std::uint32_t n_users() const { return n_users_; }
    std::size_t n_edges() const { return n_edges_; }

    std::span<const UserId> neighbors(UserId u) const {
        return {adj_.data() + offsets_[u], adj_.data() + offsets_[u + 1]};
    }

    std::uint32_t degree(UserId u) const {
        return static_cast<std::uint32_t>(offsets_[u + 1] - offsets_[u]);
    }

    bool has_edge(UserId u, UserId v) const;

    /// External string ids, empty when the graph was generated.
    const std::vector<std::string>& labels() const { return labels_; }

    /// Edges as (i, j) with i < j, lexicographically sorted.
    std::vector<std::pair<UserId, UserId>> edge_list() const;

private:
    std::uint32_t n_users_ = 0;
    std::size_t n_edges_ = 0;
    std::vector<std::size_t> offsets_{0};
    std::vector<UserId> adj_;
    std::vector<std::string> labels_;
};

/// Total partition of users into teams; team ids are dense 0..n_teams-1.
struct TeamAssignment {
    std::vector<TeamId> team_of;
    std::uint32_t n_teams = 0;
};

struct EdgeListStats {
    std::size_t self_loops_dropped = 0;
    std::size_t duplicates_dropped = 0;
};

/// Configuration-model generator: random stub matching followed by removal of
/// self-loops and parallel edges (no rewiring, so realized degrees may
/// undershoot the request). An odd degree sum drops one stub from a
/// seeded-random node. Deterministic for a fixed (degrees, seed).
CollaborationGraph generate_configuration_model(const std::vector<std::uint32_t>& degrees,
                                                std::uint64_t seed);

/// Same generator applied independently to `n_components` contiguous user
/// blocks, yielding a multi-component graph. Degrees are clamped to the
/// block size minus one.
CollaborationGraph generate_configuration_model(const std::vector<std::uint32_t>& degrees,
                                                std::uint64_t seed,
                                                std::uint32_t n_components);

/// Parses "label_a label_b" lines; '#' lines are ignored. Duplicate edges and
/// self-loops are dropped and counted. Throws on malformed lines (with the
/// line number) and on input with no edges.
CollaborationGraph ingest_edge_list(std::istream& in, EdgeListStats* stats = nullptr);

/// Labels connected components (teams) with dense ids.
TeamAssignment detect_teams(const CollaborationGraph& graph);

std::vector<std::uint32_t> degree_sequence(const CollaborationGraph& graph);

void dump_graph_json(const CollaborationGraph& graph, std::ostream& out);
CollaborationGraph load_graph_json(std::istream& in);

/// Skewed degree sampler: lognormal with the given median and sigma, rounded,
/// clamped to [0, max_degree].
std::vector<std::uint32_t> sample_lognormal_degrees(std::size_t n, double median, double sigma,
                                                    std::uint32_t max_degree, Rng& rng);

/// Degree sequence of length n resampled with replacement from a source
/// sequence (the inflation recipe).
std::vector<std::uint32_t> resample_degrees(const std::vector<std::uint32_t>& source,
                                            std::size_t n, Rng& rng);

}  // namespace covsim
