#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "covsim/analysis.hpp"

using namespace covsim;

namespace {

DatasetRecords from_text(const std::string& jsonl) {
    std::istringstream in(jsonl);
    return ingest_dataset(in);
}

// independent closest-ranks-with-interpolation quantile
double reference_quantile(std::vector<double> values, double p) {
    std::sort(values.begin(), values.end());
    const double h = (values.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (h - std::floor(h)) * (values[hi] - values[lo]);
}

const UserMetrics& metrics_for(const std::vector<UserMetrics>& all, const std::string& id) {
    for (const auto& m : all) {
        if (m.user_id == id) return m;
    }
    REQUIRE(false);
    return all.front();
}

}  // namespace

TEST_CASE("dataset ingestion keeps explicit records and closes over collaborators") {
    const auto solo = from_text(
        R"({"user_id":"a","files":[{"file_id":"f1","collaborators":[]},{"file_id":"f2"}],"vendors":[]})"
        "\n");
    CHECK(solo.n_explicit() == 1);
    CHECK(solo.n_implicit() == 0);

    const auto with_ref = from_text(
        R"({"user_id":"a","files":[{"file_id":"f1","collaborators":["x"]}],"vendors":["v1"]})"
        "\n");
    CHECK(with_ref.n_explicit() == 1);
    CHECK(with_ref.n_implicit() == 1);
    const DatasetUser* x = with_ref.find("x");
    REQUIRE(x != nullptr);
    CHECK(x->implicit);
    CHECK(x->files.empty());
}

TEST_CASE("implicit entries equal the referenced-minus-explicit set on a fixture") {
    const auto records = generate_fixture({.n_users = 20}, 12);
    std::set<std::string> referenced;
    std::set<std::string> explicit_ids;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& u = records.user(i);
        if (!u.implicit) {
            explicit_ids.insert(u.user_id);
            for (const auto& f : u.files) referenced.insert(f.collaborators.begin(),
                                                            f.collaborators.end());
        }
    }
    std::set<std::string> expected;
    for (const auto& id : referenced) {
        if (!explicit_ids.count(id)) expected.insert(id);
    }
    std::set<std::string> actual;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records.user(i).implicit) actual.insert(records.user(i).user_id);
    }
    CHECK(actual == expected);
}

TEST_CASE("dataset ingestion reports duplicate ids and malformed lines") {
    CHECK_THROWS_WITH_AS(from_text(R"({"user_id":"a","files":[]})"
                                   "\n"
                                   R"({"user_id":"a","files":[]})"
                                   "\n"),
                         doctest::Contains("line 2"), std::runtime_error);
    CHECK_THROWS_WITH_AS(from_text("{broken\n"), doctest::Contains("line 1"),
                         std::runtime_error);
}

TEST_CASE("imputation copies a donor vendor list to every implicit entry") {
    auto records = from_text(
        R"({"user_id":"a","files":[{"file_id":"f","collaborators":["x","y"]}],"vendors":["v1"]})"
        "\n");
    impute_collaborator_apps(records, 3);
    CHECK(records.find("x")->vendors == std::vector<std::string>{"v1"});
    CHECK(records.find("y")->vendors == std::vector<std::string>{"v1"});
}

TEST_CASE("imputation is deterministic and a no-op without implicit entries") {
    auto a = generate_fixture({.n_users = 30}, 5);
    auto b = generate_fixture({.n_users = 30}, 5);
    impute_collaborator_apps(a, 44);
    impute_collaborator_apps(b, 44);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.user(i).vendors == b.user(i).vendors);
    }

    auto solo = from_text(R"({"user_id":"a","files":[],"vendors":["v"]})"
                          "\n");
    impute_collaborator_apps(solo, 1);
    CHECK(solo.size() == 1);

    DatasetRecords empty;
    CHECK_THROWS_AS(impute_collaborator_apps(empty, 0), std::invalid_argument);
}

TEST_CASE("static-ledger metrics match hand computations") {
    std::ostringstream text;
    // ten private files, two vendors
    text << R"({"user_id":"a","files":[)";
    for (int f = 0; f < 10; ++f) text << (f ? "," : "") << R"({"file_id":"f)" << f << R"("})";
    text << R"(],"vendors":["v1","v2"]})" << '\n';
    // ten files, five shared with c; c authorized one vendor, b none
    text << R"({"user_id":"b","files":[)";
    for (int f = 0; f < 10; ++f) {
        text << (f ? "," : "") << R"({"file_id":"f)" << f << '"';
        if (f < 5) text << R"(,"collaborators":["c"])";
        text << '}';
    }
    text << R"(],"vendors":[]})" << '\n';
    text << R"({"user_id":"c","files":[{"file_id":"f0"},{"file_id":"f1"},{"file_id":"f2"},)"
         << R"({"file_id":"f3"},{"file_id":"f4"},{"file_id":"f5"},{"file_id":"f6"},)"
         << R"({"file_id":"f7"},{"file_id":"f8"},{"file_id":"f9"}],"vendors":["v3"]})" << '\n';

    const auto records = from_text(text.str());
    const auto metrics = compute_metrics(records);

    const auto& a = metrics_for(metrics, "a");
    CHECK(a.self_vfc == 2.0);
    CHECK(a.collaborators_vfc == 0.0);
    CHECK(a.aggregate_vfc == 2.0);

    const auto& b = metrics_for(metrics, "b");
    CHECK(b.self_vfc == 0.0);
    CHECK(b.collaborators_vfc == doctest::Approx(0.5));
    CHECK(b.aggregate_vfc == doctest::Approx(0.5));
}

TEST_CASE("a vendor shared by user and collaborator counts in Self only") {
    std::ostringstream text;
    text << R"({"user_id":"a","files":[)";
    for (int f = 0; f < 10; ++f) {
        text << (f ? "," : "") << R"({"file_id":"f)" << f << R"(","collaborators":["b"]})";
    }
    text << R"(],"vendors":["v1"]})" << '\n';
    text << R"({"user_id":"b","files":[{"file_id":"g0"},{"file_id":"g1"},{"file_id":"g2"},)"
         << R"({"file_id":"g3"},{"file_id":"g4"},{"file_id":"g5"},{"file_id":"g6"},)"
         << R"({"file_id":"g7"},{"file_id":"g8"},{"file_id":"g9"}],"vendors":["v1"]})" << '\n';
    const auto metrics = compute_metrics(from_text(text.str()));
    const auto& a = metrics_for(metrics, "a");
    CHECK(a.self_vfc == 1.0);
    CHECK(a.collaborators_vfc == 0.0);
    CHECK(a.aggregate_vfc == 1.0);
}

TEST_CASE("sweep cohorts shrink with the threshold and keep the identity") {
    auto records = generate_fixture({.n_users = 120}, 99);
    impute_collaborator_apps(records, 7);
    const std::vector<double> thresholds{0.0, 0.1, 0.2, 0.4, 0.6};
    const auto rows = sweep_p_min_shared(records, thresholds);
    REQUIRE(rows.size() == thresholds.size());
    for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i].count <= rows[i - 1].count);

    const auto metrics = compute_metrics(records);
    for (const auto& m : metrics) {
        CHECK(m.self_vfc + m.collaborators_vfc == doctest::Approx(m.aggregate_vfc).epsilon(1e-12));
    }
}

TEST_CASE("sweep over non-sharing users populates only the zero threshold") {
    std::ostringstream text;
    for (int i = 0; i < 3; ++i) {
        text << R"({"user_id":"u)" << i << R"(","files":[)";
        for (int f = 0; f < 12; ++f) text << (f ? "," : "") << R"({"file_id":"f)" << f << R"("})";
        text << R"(],"vendors":["v"]})" << '\n';
    }
    const auto rows = sweep_p_min_shared(from_text(text.str()), std::vector<double>{0.0, 0.2});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].count == 3);
    CHECK(rows[0].self.has_value());
    CHECK(rows[1].count == 0);
    CHECK_FALSE(rows[1].self.has_value());
}

TEST_CASE("sweep validates thresholds") {
    const auto records = generate_fixture({.n_users = 10}, 1);
    CHECK_THROWS_AS(sweep_p_min_shared(records, std::vector<double>{-0.1}),
                    std::invalid_argument);
    CHECK_THROWS_AS(sweep_p_min_shared(records, std::vector<double>{0.5, 0.4}),
                    std::invalid_argument);
}

TEST_CASE("quantiles interpolate between closest ranks") {
    const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
    CHECK(quantile_type7(v, 0.5) == doctest::Approx(2.5));
    CHECK(quantile_type7(v, 0.25) == doctest::Approx(1.75));
    CHECK(quantile_type7(v, 0.0) == 1.0);
    CHECK(quantile_type7(v, 1.0) == 4.0);
    CHECK(quantile_type7(std::vector<double>{5.0}, 0.5) == 5.0);
}

TEST_CASE("sweep quartiles equal a sort-and-pick oracle on a fixture") {
    auto records = generate_fixture({.n_users = 50}, 123);
    impute_collaborator_apps(records, 5);
    const std::vector<double> thresholds{0.0, 0.1, 0.3, 0.5};
    const MetricFilters filters;
    const auto rows = sweep_p_min_shared(records, thresholds, filters);
    const auto metrics = compute_metrics(records, filters);

    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        std::vector<double> self, collab, agg;
        for (const auto& m : metrics) {
            if (m.shared_fraction < thresholds[i] || m.n_apps < filters.n_apps_min) continue;
            self.push_back(m.self_vfc);
            collab.push_back(m.collaborators_vfc);
            agg.push_back(m.aggregate_vfc);
        }
        REQUIRE(rows[i].count == self.size());
        if (self.empty()) continue;
        CHECK(rows[i].self->q1 == reference_quantile(self, 0.25));
        CHECK(rows[i].self->median == reference_quantile(self, 0.5));
        CHECK(rows[i].self->q3 == reference_quantile(self, 0.75));
        CHECK(rows[i].collaborators->median == reference_quantile(collab, 0.5));
        CHECK(rows[i].aggregate->q3 == reference_quantile(agg, 0.75));
    }
}

TEST_CASE("collaborator-dominant fixture keeps a growing collaborator lead") {
    const auto records = generate_collaborator_dominant_fixture(80, 9);
    const std::vector<double> thresholds{0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
    const auto rows = sweep_p_min_shared(records, thresholds);
    double last_gap = -1.0;
    for (const auto& row : rows) {
        REQUIRE(row.count > 0);
        CHECK(row.collaborators->median > row.self->median);
        const double gap = row.collaborators->median - row.self->median;
        CHECK(gap >= last_gap);
        last_gap = gap;
    }
}

TEST_CASE("metric values are independent of record order") {
    const auto records = generate_fixture({.n_users = 25}, 42);
    std::ostringstream forward;
    dump_dataset(records, forward);
    std::vector<std::string> lines;
    std::istringstream split(forward.str());
    std::string line;
    while (std::getline(split, line)) lines.push_back(line);
    std::reverse(lines.begin(), lines.end());
    std::string reversed;
    for (const auto& l : lines) reversed += l + "\n";

    auto a = from_text(forward.str());
    auto b = from_text(reversed);
    impute_collaborator_apps(a, 1);
    impute_collaborator_apps(b, 1);
    // imputation depends on donor order; pin vendors instead of relying on it
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a.user(i).implicit) a.user(i).vendors = {"vx"};
    }
    for (std::size_t i = 0; i < b.size(); ++i) {
        if (b.user(i).implicit) b.user(i).vendors = {"vx"};
    }
    const auto ma = compute_metrics(a);
    const auto mb = compute_metrics(b);
    REQUIRE(ma.size() == mb.size());
    for (const auto& m : ma) {
        const auto& other = metrics_for(mb, m.user_id);
        CHECK(other.self_vfc == m.self_vfc);
        CHECK(other.collaborators_vfc == m.collaborators_vfc);
        CHECK(other.aggregate_vfc == m.aggregate_vfc);
    }
}

TEST_CASE("analysis CSV leaves empty cohorts blank") {
    SweepRow filled;
    filled.threshold = 0.1;
    filled.count = 2;
    filled.self = QuartileStats{1.0, 1.5, 2.0};
    filled.collaborators = QuartileStats{0.0, 0.5, 1.0};
    filled.aggregate = QuartileStats{1.0, 2.0, 3.0};
    SweepRow empty;
    empty.threshold = 0.9;
    const std::vector<SweepRow> rows{filled, empty};
    std::ostringstream out;
    write_analysis_csv(rows, out);
    std::istringstream lines(out.str());
    std::string header, row1, row2;
    std::getline(lines, header);
    std::getline(lines, row1);
    std::getline(lines, row2);
    CHECK(header ==
          "threshold,count,self_q1,self_med,self_q3,collab_q1,collab_med,collab_q3,agg_q1,"
          "agg_med,agg_q3");
    CHECK(row1 == "0.1,2,1,1.5,2,0,0.5,1,1,2,3");
    CHECK(row2 == "0.9,0,,,,,,,,,");
}

TEST_CASE("fixture medians land near the configured targets") {
    const auto records = generate_fixture({.n_users = 400}, 31);
    std::vector<double> files, shared;
    for (std::size_t i = 0; i < records.n_explicit(); ++i) {
        files.push_back(static_cast<double>(records.user(i).n_files()));
        shared.push_back(records.user(i).shared_fraction());
    }
    std::sort(files.begin(), files.end());
    std::sort(shared.begin(), shared.end());
    CHECK(quantile_type7(files, 0.5) == doctest::Approx(67).epsilon(0.25));
    CHECK(quantile_type7(shared, 0.5) == doctest::Approx(0.18).epsilon(0.35));
}
