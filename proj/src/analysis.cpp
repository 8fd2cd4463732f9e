#include "covsim/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "covsim/io.hpp"
#include "covsim/ledger.hpp"

namespace covsim {

double DatasetUser::shared_fraction() const {
    if (files.empty()) return 0.0;
    std::size_t shared = 0;
    for (const auto& f : files) {
        if (!f.collaborators.empty()) ++shared;
    }
    return static_cast<double>(shared) / files.size();
}

const DatasetUser* DatasetRecords::find(const std::string& user_id) const {
    const auto it = index_.find(user_id);
    return it == index_.end() ? nullptr : &users_[it->second];
}

void DatasetRecords::add(DatasetUser user) {
    if (!index_.try_emplace(user.user_id, users_.size()).second) {
        throw std::runtime_error("duplicate user id \"" + user.user_id + "\"");
    }
    if (user.implicit) {
        users_.push_back(std::move(user));
        return;
    }
    // explicit records stay in front of implicit ones
    if (n_explicit_ == users_.size()) {
        users_.push_back(std::move(user));
        ++n_explicit_;
        return;
    }
    throw std::logic_error("explicit records must be added before implicit ones");
}

void DatasetRecords::close_over_collaborators() {
    std::set<std::string> referenced;
    for (const auto& u : users_) {
        for (const auto& f : u.files) referenced.insert(f.collaborators.begin(), f.collaborators.end());
    }
    for (const auto& id : referenced) {
        if (index_.count(id)) continue;
        DatasetUser implicit_user;
        implicit_user.user_id = id;
        implicit_user.implicit = true;
        add(std::move(implicit_user));
    }
}

DatasetRecords ingest_dataset(std::istream& in) {
    DatasetRecords records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("dataset line " + std::to_string(line_no) +
                                     ": invalid JSON: " + e.what());
        }
        try {
            DatasetUser u;
            u.user_id = j.at("user_id").get<std::string>();
            if (u.user_id.empty()) throw std::runtime_error("empty user_id");
            for (const auto& f : j.value("files", nlohmann::json::array())) {
                DatasetFile file;
                file.file_id = f.at("file_id").get<std::string>();
                file.collaborators = f.value("collaborators", std::vector<std::string>{});
                for (const auto& c : file.collaborators) {
                    if (c.empty()) throw std::runtime_error("empty collaborator id");
                }
                u.files.push_back(std::move(file));
            }
            std::set<std::string> file_ids;
            for (const auto& f : u.files) {
                if (!file_ids.insert(f.file_id).second) {
                    throw std::runtime_error("duplicate file id \"" + f.file_id + "\"");
                }
            }
            u.vendors = j.value("vendors", std::vector<std::string>{});
            records.add(std::move(u));
        } catch (const nlohmann::json::exception& e) {
            throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
        } catch (const std::runtime_error& e) {
            throw std::runtime_error("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    records.close_over_collaborators();
    return records;
}

void dump_dataset(const DatasetRecords& records, std::ostream& out) {
    for (std::size_t i = 0; i < records.size(); ++i) {
        const DatasetUser& u = records.user(i);
        if (u.implicit) continue;
        nlohmann::json j;
        j["user_id"] = u.user_id;
        auto& files = j["files"] = nlohmann::json::array();
        for (const auto& f : u.files) {
            files.push_back({{"file_id", f.file_id}, {"collaborators", f.collaborators}});
        }
        j["vendors"] = u.vendors;
        out << j.dump() << '\n';
    }
}

void impute_collaborator_apps(DatasetRecords& records, std::uint64_t seed) {
    if (records.n_explicit() == 0) throw std::invalid_argument("dataset has no explicit users");
    Rng rng(seed);
    for (std::size_t i = 0; i < records.size(); ++i) {
        DatasetUser& u = records.user(i);
        if (!u.implicit) continue;
        const std::size_t donor = rng.index(records.n_explicit());
        u.vendors = records.user(donor).vendors;
    }
}

namespace {

struct VendorInterner {
    std::unordered_map<std::string, VendorId> ids;
    VendorId intern(const std::string& label) {
        return ids.try_emplace(label, static_cast<VendorId>(ids.size())).first->second;
    }
};

}  // namespace

std::vector<UserMetrics> compute_metrics(const DatasetRecords& records,
                                         const MetricFilters& filters) {
    // subjects are explicit users passing the file-count filter
    std::vector<std::size_t> subjects;
    std::vector<std::uint32_t> n_files;
    for (std::size_t i = 0; i < records.n_explicit(); ++i) {
        if (records.user(i).n_files() >= filters.n_files_min) {
            subjects.push_back(i);
            n_files.push_back(static_cast<std::uint32_t>(records.user(i).n_files()));
        }
    }

    AccessLedger ledger(n_files);
    VendorInterner vendors;
    for (UserId s = 0; s < subjects.size(); ++s) {
        const DatasetUser& u = records.user(subjects[s]);
        for (const auto& v : u.vendors) ledger.grant_full(s, vendors.intern(v));

        // files of u each collaborator can see
        std::map<std::string, FileBitset> by_collaborator;
        for (std::uint32_t fi = 0; fi < u.files.size(); ++fi) {
            for (const auto& c : u.files[fi].collaborators) {
                if (c == u.user_id) continue;
                auto [it, fresh] = by_collaborator.try_emplace(
                    c, FileBitset(static_cast<std::uint32_t>(u.files.size())));
                it->second.set(fi);
            }
        }
        for (const auto& [collab_id, shared] : by_collaborator) {
            const DatasetUser* c = records.find(collab_id);
            if (c == nullptr) continue;
            for (const auto& v : c->vendors) {
                ledger.add_collab_exposure(s, vendors.intern(v), &shared);
            }
        }
    }

    std::vector<UserMetrics> out(subjects.size());
    for (UserId s = 0; s < subjects.size(); ++s) {
        const DatasetUser& u = records.user(subjects[s]);
        out[s] = {u.user_id,
                  static_cast<std::uint32_t>(u.n_files()),
                  u.shared_fraction(),
                  static_cast<std::uint32_t>(u.n_apps()),
                  ledger.self_vfc(s),
                  ledger.collaborators_vfc(s),
                  ledger.aggregate_vfc(s)};
    }
    return out;
}

double quantile_type7(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw std::invalid_argument("quantile of empty sample");
    if (p <= 0.0) return sorted.front();
    if (p >= 1.0) return sorted.back();
    const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
    const std::size_t lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

namespace {

QuartileStats quartiles(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    return {quantile_type7(values, 0.25), quantile_type7(values, 0.5),
            quantile_type7(values, 0.75)};
}

}  // namespace

std::vector<SweepRow> sweep_p_min_shared(const DatasetRecords& records,
                                         std::span<const double> thresholds,
                                         const MetricFilters& filters) {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] < 0.0 || thresholds[i] > 1.0) {
            throw std::invalid_argument("thresholds must lie in [0, 1]");
        }
        if (i > 0 && thresholds[i] < thresholds[i - 1]) {
            throw std::invalid_argument("thresholds must be ascending");
        }
    }
    const std::vector<UserMetrics> metrics = compute_metrics(records, filters);

    std::vector<SweepRow> rows;
    rows.reserve(thresholds.size());
    for (const double threshold : thresholds) {
        SweepRow row;
        row.threshold = threshold;
        std::vector<double> self, collab, agg;
        for (const UserMetrics& m : metrics) {
            if (m.shared_fraction < threshold || m.n_apps < filters.n_apps_min) continue;
            self.push_back(m.self_vfc);
            collab.push_back(m.collaborators_vfc);
            agg.push_back(m.aggregate_vfc);
        }
        row.count = self.size();
        if (row.count > 0) {
            row.self = quartiles(std::move(self));
            row.collaborators = quartiles(std::move(collab));
            row.aggregate = quartiles(std::move(agg));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_analysis_csv(std::span<const SweepRow> rows, std::ostream& out) {
    out << "threshold,count,self_q1,self_med,self_q3,collab_q1,collab_med,collab_q3,"
           "agg_q1,agg_med,agg_q3\n";
    const auto put = [&](const std::optional<QuartileStats>& q) {
        if (q) {
            out << ',' << format_double(q->q1) << ',' << format_double(q->median) << ','
                << format_double(q->q3);
        } else {
            out << ",,,";
        }
    };
    for (const SweepRow& row : rows) {
        out << format_double(row.threshold) << ',' << row.count;
        put(row.self);
        put(row.collaborators);
        put(row.aggregate);
        out << '\n';
    }
}

DatasetRecords generate_fixture(const FixtureParams& params, std::uint64_t seed) {
    Rng rng(seed);
    DatasetRecords records;
    const double mu = std::log(params.file_median);
    const double b =
        std::log(0.5) / std::log1p(-std::pow(params.shared_median, params.shared_shape));
    for (std::size_t i = 0; i < params.n_users; ++i) {
        DatasetUser u;
        u.user_id = "u" + std::to_string(i);
        const auto files = static_cast<std::size_t>(
            std::clamp<double>(std::llround(rng.lognormal(mu, params.file_sigma)), 1.0, 2000.0));
        const double su = rng.uniform01();
        const double frac =
            std::pow(1.0 - std::pow(1.0 - su, 1.0 / b), 1.0 / params.shared_shape);
        const auto shared = static_cast<std::size_t>(std::llround(frac * files));
        const auto n_collabs = static_cast<std::size_t>(
            1 + rng.geometric(1.0 / params.collaborators_per_user_mean));
        std::vector<std::string> collabs(n_collabs);
        for (auto& c : collabs) c = "c" + std::to_string(rng.index(params.collaborator_pool));
        for (std::size_t f = 0; f < files; ++f) {
            DatasetFile file;
            file.file_id = "f" + std::to_string(f);
            if (f < shared) file.collaborators.push_back(collabs[rng.index(collabs.size())]);
            u.files.push_back(std::move(file));
        }
        const auto n_apps = static_cast<std::size_t>(rng.geometric(params.apps_geometric_p));
        for (std::size_t a = 0; a < n_apps; ++a) {
            u.vendors.push_back("v" + std::to_string(rng.index(params.vendor_pool)));
        }
        records.add(std::move(u));
    }
    records.close_over_collaborators();
    return records;
}

DatasetRecords generate_collaborator_dominant_fixture(std::size_t n_users, std::uint64_t seed) {
    Rng rng(seed);
    DatasetRecords records;
    constexpr std::uint32_t kFiles = 20;
    for (std::size_t i = 0; i < n_users; ++i) {
        DatasetUser u;
        u.user_id = "u" + std::to_string(i);
        u.vendors = {"v_common"};
        // at least half the files shared with one dedicated collaborator
        const auto shared = static_cast<std::uint32_t>(10 + rng.index(kFiles - 10 + 1));
        for (std::uint32_t f = 0; f < kFiles; ++f) {
            DatasetFile file;
            file.file_id = "f" + std::to_string(f);
            if (f < shared) file.collaborators.push_back("helper" + std::to_string(i));
            u.files.push_back(std::move(file));
        }
        records.add(std::move(u));
    }
    for (std::size_t i = 0; i < n_users; ++i) {
        DatasetUser helper;
        helper.user_id = "helper" + std::to_string(i);
        helper.vendors = {"hv" + std::to_string(2 * i), "hv" + std::to_string(2 * i + 1)};
        records.add(std::move(helper));
    }
    records.close_over_collaborators();
    return records;
}

}  // namespace covsim
