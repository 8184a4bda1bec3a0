#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cie/causality.hpp"
#include "cie/topology.hpp"

namespace cie {

/// Hosts of every symptom the cause has an edge to, plus the cause's own host.
std::set<std::string> impacted_entities(const CausalityGraph& graph, std::string_view cause_id);

struct BlastRadius {
    std::string cause;
    std::string host;
    /// Read off the causality graph's edges.
    std::set<std::string> direct;
    /// Re-traversed over the current topology; a superset of `direct`.
    std::set<std::string> transitive;
    /// One fewest-hop rule path from the host per transitive entity.
    std::map<std::string, std::vector<Hop>> paths;
    /// Owning team per transitive entity that has one.
    std::map<std::string, std::string> owners;
    std::set<std::string> impacted_teams;
    bool truncated = false;
};

BlastRadius blast_radius(const EntityGraph& topology, const CausalityGraph& graph,
                         std::string_view cause_id);

/// True when the team owns some directly impacted entity.
bool ownership_check(const BlastRadius& radius, std::string_view team);

enum class AlignmentBasis { host, hosting_stack, downstream, unrelated };

std::string_view to_string(AlignmentBasis basis);

struct RemediationVerdict {
    std::string target;
    bool aligned = false;
    AlignmentBasis basis = AlignmentBasis::unrelated;
    /// Relations linking the cause's host to the target, when any.
    std::vector<Relation> path;
    std::string rationale;
};

/// An action is aligned when it targets the cause's host or something the
/// host runs on (forward layer/comp reachability). Acting on a downstream
/// entity treats a symptom rather than the cause.
RemediationVerdict remediation_alignment(const BlastRadius& radius, const EntityGraph& topology,
                                         std::string_view target);

nlohmann::json to_json(const BlastRadius& radius);
nlohmann::json to_json(const RemediationVerdict& verdict);
nlohmann::json to_json(const Relation& relation);
nlohmann::json to_json(const Hop& hop);

}  // namespace cie
