#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "covsim/catalog.hpp"
#include "covsim/graph.hpp"
#include "covsim/ledger.hpp"
#include "covsim/rng.hpp"

namespace covsim {

enum class ModelKind : std::uint8_t { kFA, kEHB, kEBL };

/// Per-vendor exposure probability in the risk model behind the greedy
/// choice: the expected loss of installing from vendor v is
/// p * (1 - coverage(v)), so with one shared p the argmax over coverage
/// already minimizes it. Kept as a named constant for documentation; no
/// computation ever evaluates it.
inline constexpr double kVendorExposureProbability = 1.0;

/// Decision situation at one step, determined by which vendor history the
/// user can see among the candidate vendors.
enum class Scenario : std::uint8_t {
    kSameVendor,         // a candidate vendor she authorized before
    kCollabVendorSingle, // exactly one candidate vendor known via collaborators
    kCollabVendorMulti,  // several candidate vendors known via collaborators
    kNoHistory,
};

enum class EventClass : std::uint8_t { kNewVendor, kOwnVendor, kCollaboratorVendor };

std::string to_string(ModelKind kind);
std::string to_string(Scenario scenario);
std::string to_string(EventClass event);
ModelKind model_kind_from_string(const std::string& name);

/// Probability of taking the history-based path per scenario.
struct QTable {
    double same_vendor = 0.0;
    double collab_single = 0.0;
    double collab_multi = 0.0;

    double operator()(Scenario s) const;
};

/// Study-calibrated defaults. The fully aware model always takes the
/// history path; the baseline model ignores collaborator knowledge.
QTable default_q(ModelKind kind);
double default_q(ModelKind kind, Scenario scenario);

enum class DecisionScope : std::uint8_t { kIndividual, kTeam };

struct DecisionModelSpec {
    ModelKind kind = ModelKind::kEBL;
    QTable q;
    DecisionScope scope = DecisionScope::kIndividual;

    static DecisionModelSpec make(ModelKind kind, DecisionScope scope = DecisionScope::kIndividual) {
        return DecisionModelSpec{kind, default_q(kind), scope};
    }
};

/// Vendors self-authorized by any member of each team, maintained
/// incrementally. Backs the team-scoped knowledge filter: decisions see
/// teammates' vendors instead of adjacent collaborators' vendors.
class TeamVendorKnowledge {
public:
    explicit TeamVendorKnowledge(const TeamAssignment& teams)
        : teams_(&teams), vendors_(teams.n_teams) {}

    void note_self_authorization(UserId u, VendorId v);
    bool known(UserId u, VendorId v) const;
    const std::vector<VendorId>& team_vendors(UserId u) const {
        return vendors_[teams_->team_of[u]];
    }

private:
    const TeamAssignment* teams_;
    std::vector<std::vector<VendorId>> vendors_;  // sorted unique per team
};

struct DecisionContext {
    const AccessLedger* ledger = nullptr;
    const SharingProfiles* profiles = nullptr;
    const TeamVendorKnowledge* team_knowledge = nullptr;  // set iff scope is team
};

struct DecisionOutcome {
    AppId chosen_app = 0;
    VendorId chosen_vendor = 0;
    Scenario scenario = Scenario::kNoHistory;
    EventClass event_class = EventClass::kNewVendor;
    bool took_history_path = false;
};

/// Candidate with the largest fraction of the user's files already covered;
/// ties go to the smallest vendor id. candidates must be non-empty.
VendorId optimal_vendor(const AccessLedger& ledger, UserId u,
                        std::span<const VendorId> candidates);

/// One adoption decision for user u over app a0 and its alternatives.
///
/// Branch order: own-history first, then collaborator history, then a0.
/// r is the step's single uniform draw compared against q; rng backs the
/// uniformly random own-vendor pick. The fully aware model ignores r and
/// picks the maximal-coverage candidate outright (own vendors cover
/// everything and therefore dominate). When the chosen vendor maps to
/// several apps among the alternatives, the lowest app id wins.
DecisionOutcome decide(const DecisionModelSpec& model, UserId u, AppId a0,
                       const Alternatives& alternatives, const AppCatalog& catalog,
                       const DecisionContext& ctx, double r, Rng& rng);

}  // namespace covsim
