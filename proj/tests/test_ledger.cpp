#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "covsim/ledger.hpp"
#include "oracles.hpp"

using namespace covsim;

namespace {

FileBitset bits(std::uint32_t size, std::initializer_list<std::uint32_t> indices) {
    FileBitset b(size);
    for (const auto i : indices) b.set(i);
    return b;
}

}  // namespace

TEST_CASE("authorize gives the vendor full coverage of the installer") {
    oracle::RawInstance inst;
    inst.n_users = 1;
    inst.n_vendors = 1;
    inst.n_files = {10};
    inst.adj.resize(1);
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);

    const auto delta = authorize(ledger, built.graph, built.profiles, built.catalog, 0, 0);
    CHECK(delta.changed == std::vector<UserId>{0});
    CHECK(ledger.coverage_count(0, 0) == 10);
    CHECK(ledger.vendor_coverage_percent(0, 0) == 1.0);
    CHECK(ledger.self_vfc(0) == 1.0);
}

TEST_CASE("authorize exposes the collaborator's shared files") {
    oracle::RawInstance inst;
    inst.n_users = 2;
    inst.n_vendors = 1;
    inst.n_files = {10, 5};
    inst.adj = {{1}, {0}};
    inst.shared[{1, 0}] = {1, 2};  // files of user 1 visible to user 0
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);

    const auto delta = authorize(ledger, built.graph, built.profiles, built.catalog, 0, 0);
    CHECK(delta.changed == std::vector<UserId>{0, 1});
    CHECK(ledger.coverage_count(1, 0) == 2);
    CHECK(ledger.vendor_coverage_percent(1, 0) == doctest::Approx(0.4));
    CHECK(ledger.collab_vendors(1) == std::vector<VendorId>{0});
    CHECK(ledger.collaborators_vfc(1) == doctest::Approx(0.4));
}

TEST_CASE("authorizing two apps of one vendor is idempotent on coverage") {
    oracle::RawInstance inst;
    inst.n_users = 2;
    inst.n_vendors = 2;
    inst.n_files = {6, 6};
    inst.adj = {{1}, {0}};
    inst.shared[{1, 0}] = {0};
    auto built = oracle::build(inst);
    // second app of vendor 0
    std::vector<App> apps = built.catalog.apps();
    apps.push_back({2, "extra", 0, 1, {}});
    built.catalog = AppCatalog(std::move(apps), {"v0", "v1"});

    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);
    authorize(ledger, built.graph, built.profiles, built.catalog, 0, 0);
    const auto snapshot_self = ledger.self_vendors(0);
    const auto cov = ledger.coverage_count(1, 0);
    authorize(ledger, built.graph, built.profiles, built.catalog, 0, 2);
    CHECK(ledger.self_vendors(0) == snapshot_self);
    CHECK(ledger.coverage_count(1, 0) == cov);
    CHECK(ledger.self_vfc(0) == 1.0);
    CHECK(ledger.n_installs(0) == 2);
}

TEST_CASE("authorize rejects unknown users and apps") {
    oracle::RawInstance inst;
    inst.n_users = 1;
    inst.n_vendors = 1;
    inst.n_files = {3};
    inst.adj.resize(1);
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);
    CHECK_THROWS_AS(authorize(ledger, built.graph, built.profiles, built.catalog, 5, 0),
                    std::out_of_range);
    CHECK_THROWS_AS(authorize(ledger, built.graph, built.profiles, built.catalog, 0, 9),
                    std::out_of_range);
}

TEST_CASE("vfc sums per-vendor fractions after within-vendor unions") {
    AccessLedger ledger({10});
    CHECK(ledger.vfc(0, std::vector<VendorId>{}) == 0.0);

    const auto c1 = bits(10, {0, 1, 2, 3, 4, 5, 6});
    const auto c2 = bits(10, {5, 6, 7, 8, 9});
    ledger.add_collab_exposure(0, 1, &c1);
    ledger.add_collab_exposure(0, 2, &c2);
    const std::vector<VendorId> both{1, 2};
    CHECK(ledger.vfc(0, both) == doctest::Approx(1.2));
    CHECK(ledger.vfc_numerator(0, both) == 12);

    ledger.grant_full(0, 3);
    const std::vector<VendorId> full{3};
    CHECK(ledger.vfc(0, full) == 1.0);
}

TEST_CASE("vfc requires a populated user") {
    AccessLedger ledger({0});
    CHECK_THROWS_AS(ledger.self_vfc(0), std::domain_error);
}

TEST_CASE("a vendor authorized by both sides counts in Self only") {
    oracle::RawInstance inst;
    inst.n_users = 2;
    inst.n_vendors = 1;
    inst.n_files = {10, 10};
    inst.adj = {{1}, {0}};
    inst.shared[{0, 1}] = {0, 1, 2};
    inst.shared[{1, 0}] = {3};
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);

    // collaborator first, then the user herself: the vendor migrates to Self
    authorize(ledger, built.graph, built.profiles, built.catalog, 1, 0);
    CHECK(ledger.collaborators_vfc(0) == doctest::Approx(0.3));
    authorize(ledger, built.graph, built.profiles, built.catalog, 0, 0);
    CHECK(ledger.self_vfc(0) == 1.0);
    CHECK(ledger.collaborators_vfc(0) == 0.0);
    CHECK(ledger.collab_vendors(0).empty());
    CHECK(ledger.aggregate_vfc(0) == 1.0);
}

TEST_CASE("aggregate equals self plus collaborators for disjoint vendor sets") {
    oracle::RawInstance inst;
    inst.n_users = 2;
    inst.n_vendors = 2;
    inst.n_files = {10, 10};
    inst.adj = {{1}, {0}};
    inst.shared[{0, 1}] = {0, 1, 2, 3};
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);
    authorize(ledger, built.graph, built.profiles, built.catalog, 0, 0);
    authorize(ledger, built.graph, built.profiles, built.catalog, 1, 1);
    CHECK(ledger.self_vfc(0) == 1.0);
    CHECK(ledger.collaborators_vfc(0) == doctest::Approx(0.4));
    CHECK(ledger.aggregate_vfc(0) == doctest::Approx(1.4));
    CHECK(ledger.aggregate_numerator(0) ==
          ledger.self_numerator(0) + ledger.collaborators_numerator(0));
}

TEST_CASE("vendor coverage percent: unknown, self, and two-edge union") {
    oracle::RawInstance inst;
    inst.n_users = 3;
    inst.n_vendors = 2;
    inst.n_files = {10, 4, 4};
    inst.adj = {{1, 2}, {0}, {0}};
    inst.shared[{0, 1}] = {0, 1, 2};
    inst.shared[{0, 2}] = {2, 3};
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);

    CHECK(ledger.vendor_coverage_percent(0, 0) == 0.0);  // nobody authorized it
    authorize(ledger, built.graph, built.profiles, built.catalog, 1, 0);
    authorize(ledger, built.graph, built.profiles, built.catalog, 2, 0);
    CHECK(ledger.vendor_coverage_percent(0, 0) == doctest::Approx(0.4));  // union {0,1,2,3}
    authorize(ledger, built.graph, built.profiles, built.catalog, 0, 1);
    CHECK(ledger.vendor_coverage_percent(0, 1) == 1.0);
}

TEST_CASE("metrics agree exactly with the brute-force evaluator") {
    Rng rng(2024);
    for (int round = 0; round < 300; ++round) {
        const auto inst = oracle::random_instance(rng);
        const auto built = oracle::build(inst);
        const AccessLedger ledger = oracle::replay(built, inst);
        for (UserId u = 0; u < inst.n_users; ++u) {
            const auto expected = oracle::brute_metrics(inst, u);
            CHECK(ledger.self_numerator(u) == expected.self_num);
            CHECK(ledger.collaborators_numerator(u) == expected.collab_num);
            CHECK(ledger.aggregate_numerator(u) == expected.aggregate_num);
            CHECK(ledger.self_vendors(u) ==
                  std::vector<VendorId>(expected.self_vendors.begin(),
                                        expected.self_vendors.end()));
            CHECK(ledger.collab_vendors(u) ==
                  std::vector<VendorId>(expected.collab_vendors.begin(),
                                        expected.collab_vendors.end()));
            // per-vendor coverage on a random probe
            const VendorId v = static_cast<VendorId>(rng.index(inst.n_vendors));
            CHECK(ledger.coverage_count(u, v) == oracle::brute_coverage(inst, u, v).size());
        }
    }
}

TEST_CASE("coverage and metrics never decrease") {
    Rng rng(55);
    const auto inst = oracle::random_instance(rng, 6, 5, 12, 0);
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);
    std::vector<double> last_aggregate(inst.n_users, 0.0);
    for (int step = 0; step < 60; ++step) {
        const UserId u = static_cast<UserId>(rng.index(inst.n_users));
        const VendorId v = static_cast<VendorId>(rng.index(inst.n_vendors));
        authorize(ledger, built.graph, built.profiles, built.catalog, u,
                  static_cast<AppId>(v));
        for (UserId w = 0; w < inst.n_users; ++w) {
            const double agg = ledger.aggregate_vfc(w);
            CHECK(agg >= last_aggregate[w]);
            last_aggregate[w] = agg;
            // range bound and the provenance-split identity
            CHECK(agg <= static_cast<double>(ledger.self_vendors(w).size() +
                                             ledger.collab_vendors(w).size()));
            CHECK(ledger.self_numerator(w) + ledger.collaborators_numerator(w) ==
                  ledger.aggregate_numerator(w));
        }
        CHECK(ledger.vendor_coverage_percent(u, v) == 1.0);  // full access after install
    }
}

TEST_CASE("snapshot dump lists vendors with provenance") {
    oracle::RawInstance inst;
    inst.n_users = 2;
    inst.n_vendors = 2;
    inst.n_files = {4, 4};
    inst.adj = {{1}, {0}};
    inst.shared[{1, 0}] = {0, 1};
    const auto built = oracle::build(inst);
    AccessLedger ledger = AccessLedger::for_profiles(built.profiles);
    authorize(ledger, built.graph, built.profiles, built.catalog, 0, 0);

    std::ostringstream out;
    ledger.dump_snapshot(out);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    auto j = nlohmann::json::parse(line);
    CHECK(j["user"] == 0);
    CHECK(j["vendors"]["0"]["provenance"] == "self");
    CHECK(j["vendors"]["0"]["files"] == 4);
    std::getline(lines, line);
    j = nlohmann::json::parse(line);
    CHECK(j["vendors"]["0"]["provenance"] == "collab");
    CHECK(j["vendors"]["0"]["files"] == 2);
    CHECK(j["vendors"]["0"]["fraction"] == doctest::Approx(0.5));
}
