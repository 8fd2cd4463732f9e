#include "covsim/decision.hpp"

#include <algorithm>
#include <stdexcept>

namespace covsim {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::kFA: return "FA";
        case ModelKind::kEHB: return "EHB";
        case ModelKind::kEBL: return "EBL";
    }
    return "?";
}

std::string to_string(Scenario scenario) {
    switch (scenario) {
        case Scenario::kSameVendor: return "same_vendor";
        case Scenario::kCollabVendorSingle: return "collab_single";
        case Scenario::kCollabVendorMulti: return "collab_multi";
        case Scenario::kNoHistory: return "no_history";
    }
    return "?";
}

std::string to_string(EventClass event) {
    switch (event) {
        case EventClass::kNewVendor: return "new_vendor";
        case EventClass::kOwnVendor: return "own_vendor";
        case EventClass::kCollaboratorVendor: return "collab_vendor";
    }
    return "?";
}

ModelKind model_kind_from_string(const std::string& name) {
    if (name == "FA") return ModelKind::kFA;
    if (name == "EHB") return ModelKind::kEHB;
    if (name == "EBL") return ModelKind::kEBL;
    throw std::invalid_argument("unknown decision model \"" + name + "\"");
}

double QTable::operator()(Scenario s) const {
    switch (s) {
        case Scenario::kSameVendor: return same_vendor;
        case Scenario::kCollabVendorSingle: return collab_single;
        case Scenario::kCollabVendorMulti: return collab_multi;
        case Scenario::kNoHistory: return 0.0;
    }
    return 0.0;
}

QTable default_q(ModelKind kind) {
    switch (kind) {
        case ModelKind::kFA: return {1.0, 1.0, 1.0};
        case ModelKind::kEHB: return {0.57, 0.70, 0.67};
        case ModelKind::kEBL: return {0.18, 0.0, 0.0};
    }
    return {};
}

double default_q(ModelKind kind, Scenario scenario) {
    if (kind == ModelKind::kFA) return 1.0;
    return default_q(kind)(scenario);
}

void TeamVendorKnowledge::note_self_authorization(UserId u, VendorId v) {
    auto& vs = vendors_[teams_->team_of[u]];
    const auto it = std::lower_bound(vs.begin(), vs.end(), v);
    if (it == vs.end() || *it != v) vs.insert(it, v);
}

bool TeamVendorKnowledge::known(UserId u, VendorId v) const {
    const auto& vs = vendors_[teams_->team_of[u]];
    return std::binary_search(vs.begin(), vs.end(), v);
}

VendorId optimal_vendor(const AccessLedger& ledger, UserId u,
                        std::span<const VendorId> candidates) {
    if (candidates.empty()) throw std::invalid_argument("candidate vendor set is empty");
    VendorId best = candidates.front();
    std::uint32_t best_count = ledger.coverage_count(u, best);
    for (const VendorId v : candidates.subspan(1)) {
        const std::uint32_t count = ledger.coverage_count(u, v);
        if (count > best_count || (count == best_count && v < best)) {
            best = v;
            best_count = count;
        }
    }
    return best;
}

namespace {

/// Lowest-id app of the given vendor among the alternatives.
AppId app_of_vendor(const Alternatives& alt, const AppCatalog& catalog, VendorId v) {
    for (AppId a : alt.apps) {
        if (catalog.app(a).vendor == v) return a;
    }
    throw std::logic_error("vendor not present among alternatives");
}

}  // namespace

DecisionOutcome decide(const DecisionModelSpec& model, UserId u, AppId a0,
                       const Alternatives& alt, const AppCatalog& catalog,
                       const DecisionContext& ctx, double r, Rng& rng) {
    const AccessLedger& ledger = *ctx.ledger;
    const bool team_scope = model.scope == DecisionScope::kTeam;
    if (team_scope && ctx.team_knowledge == nullptr) {
        throw std::invalid_argument("team scope requires team knowledge");
    }

    const auto known_via_others = [&](VendorId v) {
        if (ledger.is_self_vendor(u, v)) return false;
        return team_scope ? ctx.team_knowledge->known(u, v) : ledger.is_collab_vendor(u, v);
    };

    std::vector<VendorId> own;
    std::vector<VendorId> collab;
    for (VendorId v : alt.vendors) {
        if (ledger.is_self_vendor(u, v)) {
            own.push_back(v);
        } else if (known_via_others(v)) {
            collab.push_back(v);
        }
    }

    DecisionOutcome out;
    if (!own.empty()) {
        out.scenario = Scenario::kSameVendor;
    } else if (!collab.empty()) {
        out.scenario = collab.size() == 1 ? Scenario::kCollabVendorSingle
                                          : Scenario::kCollabVendorMulti;
    } else {
        out.scenario = Scenario::kNoHistory;
    }

    if (model.kind == ModelKind::kFA) {
        out.chosen_vendor = optimal_vendor(ledger, u, alt.vendors);
        out.chosen_app = app_of_vendor(alt, catalog, out.chosen_vendor);
        out.took_history_path = out.scenario != Scenario::kNoHistory;
    } else if (!own.empty() && r < model.q(Scenario::kSameVendor)) {
        out.chosen_vendor = own[rng.index(own.size())];
        out.chosen_app = app_of_vendor(alt, catalog, out.chosen_vendor);
        out.took_history_path = true;
    } else if (own.empty() && !collab.empty() && r < model.q(out.scenario)) {
        out.chosen_vendor = optimal_vendor(ledger, u, collab);
        out.chosen_app = app_of_vendor(alt, catalog, out.chosen_vendor);
        out.took_history_path = true;
    } else {
        out.chosen_app = a0;
        out.chosen_vendor = catalog.app(a0).vendor;
        out.took_history_path = false;
    }

    if (ledger.is_self_vendor(u, out.chosen_vendor)) {
        out.event_class = EventClass::kOwnVendor;
    } else if (known_via_others(out.chosen_vendor)) {
        out.event_class = EventClass::kCollaboratorVendor;
    } else {
        out.event_class = EventClass::kNewVendor;
    }
    return out;
}

}  // namespace covsim
