#include "covsim/graph.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

namespace covsim {

CollaborationGraph CollaborationGraph::from_edges(std::uint32_t n_users,
                                                  std::vector<std::pair<UserId, UserId>> edges,
                                                  std::vector<std::string> labels) {
    CollaborationGraph g;
    g.n_users_ = n_users;
    g.labels_ = std::move(labels);
    if (!g.labels_.empty() && g.labels_.size() != n_users) {
        throw std::invalid_argument("label count does not match n_users");
    }

    std::vector<std::uint32_t> deg(n_users, 0);
    for (auto& [a, b] : edges) {
        if (a >= n_users || b >= n_users) throw std::out_of_range("edge endpoint out of range");
        if (a == b) throw std::invalid_argument("self-loop in edge set");
        if (a > b) std::swap(a, b);
        ++deg[a];
        ++deg[b];
    }
    std::sort(edges.begin(), edges.end());
    if (std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
        throw std::invalid_argument("duplicate edge in edge set");
    }

    g.n_edges_ = edges.size();
    g.offsets_.assign(n_users + 1, 0);
    for (UserId u = 0; u < n_users; ++u) g.offsets_[u + 1] = g.offsets_[u] + deg[u];
    g.adj_.resize(2 * edges.size());
    std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
    for (const auto& [a, b] : edges) {
        g.adj_[cursor[a]++] = b;
        g.adj_[cursor[b]++] = a;
    }
    for (UserId u = 0; u < n_users; ++u) {
        std::sort(g.adj_.begin() + g.offsets_[u], g.adj_.begin() + g.offsets_[u + 1]);
    }
    return g;
}

bool CollaborationGraph::has_edge(UserId u, UserId v) const {
    const auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
}

std::vector<std::pair<UserId, UserId>> CollaborationGraph::edge_list() const {
    std::vector<std::pair<UserId, UserId>> edges;
    edges.reserve(n_edges_);
    for (UserId u = 0; u < n_users_; ++u) {
        for (UserId v : neighbors(u)) {
            if (u < v) edges.emplace_back(u, v);
        }
    }
    return edges;
}

namespace {

std::vector<std::pair<UserId, UserId>> match_stubs(std::span<const std::uint32_t> degrees,
                                                   UserId base, Rng& rng) {
    std::vector<UserId> stubs;
    for (UserId i = 0; i < degrees.size(); ++i) {
        for (std::uint32_t k = 0; k < degrees[i]; ++k) stubs.push_back(base + i);
    }
    if (stubs.size() % 2 != 0) {
        // odd stub count: remove one stub from a seeded-random node
        stubs.erase(stubs.begin() + static_cast<std::ptrdiff_t>(rng.index(stubs.size())));
    }
    rng.shuffle(stubs);

    std::set<std::pair<UserId, UserId>> edges;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
        UserId a = stubs[i];
        UserId b = stubs[i + 1];
        if (a == b) continue;
        if (a > b) std::swap(a, b);
        edges.emplace(a, b);
    }
    return {edges.begin(), edges.end()};
}

}  // namespace

CollaborationGraph generate_configuration_model(const std::vector<std::uint32_t>& degrees,
                                                std::uint64_t seed) {
    return generate_configuration_model(degrees, seed, 1);
}

CollaborationGraph generate_configuration_model(const std::vector<std::uint32_t>& degrees,
                                                std::uint64_t seed,
                                                std::uint32_t n_components) {
    if (degrees.empty()) throw std::invalid_argument("degree sequence is empty");
    if (n_components == 0 || n_components > degrees.size()) {
        throw std::invalid_argument("n_components must be in [1, n_users]");
    }
    const std::uint32_t n = static_cast<std::uint32_t>(degrees.size());

    Rng rng(seed);
    std::vector<std::pair<UserId, UserId>> edges;
    const std::uint32_t block = (n + n_components - 1) / n_components;
    for (std::uint32_t base = 0; base < n; base += block) {
        const std::uint32_t len = std::min(block, n - base);
        std::vector<std::uint32_t> local(degrees.begin() + base, degrees.begin() + base + len);
        for (auto& d : local) d = std::min(d, len - 1);
        auto part = match_stubs(local, base, rng);
        edges.insert(edges.end(), part.begin(), part.end());
    }
    return CollaborationGraph::from_edges(n, std::move(edges));
}

CollaborationGraph ingest_edge_list(std::istream& in, EdgeListStats* stats) {
    EdgeListStats local{};
    std::unordered_map<std::string, UserId> index;
    std::vector<std::string> labels;
    std::set<std::pair<UserId, UserId>> edges;

    auto intern = [&](const std::string& label) {
        auto [it, inserted] = index.try_emplace(label, static_cast<UserId>(labels.size()));
        if (inserted) labels.push_back(label);
        return it->second;
    };

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string a, b, extra;
        if (!(ls >> a)) continue;  // blank line
        if (a[0] == '#') continue;
        if (!(ls >> b) || (ls >> extra)) {
            throw std::runtime_error("malformed edge at line " + std::to_string(line_no) +
                                     ": expected two labels");
        }
        UserId ua = intern(a);
        UserId ub = intern(b);
        if (ua == ub) {
            ++local.self_loops_dropped;
            continue;
        }
        if (ua > ub) std::swap(ua, ub);
        if (!edges.emplace(ua, ub).second) ++local.duplicates_dropped;
    }
    if (labels.empty()) throw std::runtime_error("edge list is empty");
    if (stats) *stats = local;
    const auto n_users = static_cast<std::uint32_t>(labels.size());
    return CollaborationGraph::from_edges(n_users, {edges.begin(), edges.end()},
                                          std::move(labels));
}

TeamAssignment detect_teams(const CollaborationGraph& graph) {
    constexpr TeamId kUnassigned = ~TeamId{0};
    TeamAssignment t;
    t.team_of.assign(graph.n_users(), kUnassigned);
    std::vector<UserId> queue;
    for (UserId start = 0; start < graph.n_users(); ++start) {
        if (t.team_of[start] != kUnassigned) continue;
        const TeamId team = t.n_teams++;
        t.team_of[start] = team;
        queue.assign(1, start);
        while (!queue.empty()) {
            const UserId u = queue.back();
            queue.pop_back();
            for (UserId v : graph.neighbors(u)) {
                if (t.team_of[v] == kUnassigned) {
                    t.team_of[v] = team;
                    queue.push_back(v);
                }
            }
        }
    }
    return t;
}

std::vector<std::uint32_t> degree_sequence(const CollaborationGraph& graph) {
    std::vector<std::uint32_t> out(graph.n_users());
    for (UserId u = 0; u < graph.n_users(); ++u) out[u] = graph.degree(u);
    return out;
}

void dump_graph_json(const CollaborationGraph& graph, std::ostream& out) {
    nlohmann::json j;
    j["n_users"] = graph.n_users();
    auto& edges = j["edges"] = nlohmann::json::array();
    for (const auto& [a, b] : graph.edge_list()) edges.push_back({a, b});
    if (!graph.labels().empty()) j["labels"] = graph.labels();
    out << j.dump() << '\n';
}

CollaborationGraph load_graph_json(std::istream& in) {
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(std::string("invalid graph JSON: ") + e.what());
    }
    if (!j.contains("n_users") || !j.contains("edges")) {
        throw std::runtime_error("graph JSON requires n_users and edges");
    }
    std::vector<std::pair<UserId, UserId>> edges;
    for (const auto& e : j["edges"]) {
        edges.emplace_back(e.at(0).get<UserId>(), e.at(1).get<UserId>());
    }
    std::vector<std::string> labels;
    if (j.contains("labels")) labels = j["labels"].get<std::vector<std::string>>();
    return CollaborationGraph::from_edges(j["n_users"].get<std::uint32_t>(), std::move(edges),
                                          std::move(labels));
}

std::vector<std::uint32_t> sample_lognormal_degrees(std::size_t n, double median, double sigma,
                                                    std::uint32_t max_degree, Rng& rng) {
    if (n == 0) throw std::invalid_argument("n must be positive");
    if (median <= 0) throw std::invalid_argument("median must be positive");
    const double mu = std::log(median);
    std::vector<std::uint32_t> out(n);
    const std::uint32_t cap = std::min<std::uint64_t>(max_degree, n > 0 ? n - 1 : 0);
    for (auto& d : out) {
        const double x = rng.lognormal(mu, sigma);
        d = static_cast<std::uint32_t>(std::min<double>(std::llround(x), cap));
    }
    return out;
}

std::vector<std::uint32_t> resample_degrees(const std::vector<std::uint32_t>& source,
                                            std::size_t n, Rng& rng) {
    if (source.empty()) throw std::invalid_argument("source degree sequence is empty");
    std::vector<std::uint32_t> out(n);
    for (auto& d : out) d = source[rng.index(source.size())];
    return out;
}

}  // namespace covsim
