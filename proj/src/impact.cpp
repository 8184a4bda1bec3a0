#include "cie/impact.hpp"

#include <deque>

#include <nlohmann/json.hpp>

#include "cie/error.hpp"

namespace cie {

using nlohmann::json;

std::set<std::string> impacted_entities(const CausalityGraph& graph, std::string_view cause_id) {
    const RootCauseInstance& cause = graph.cause(cause_id);
    std::set<std::string> out{cause.host};
    for (const auto& edge : graph.edges_from(cause_id)) out.insert(graph.symptom(edge.to).host);
    return out;
}

BlastRadius blast_radius(const EntityGraph& topology, const CausalityGraph& graph,
                         std::string_view cause_id) {
    const RootCauseInstance& cause = graph.cause(cause_id);
    if (!topology.contains(cause.host)) {
        throw Error(ErrorCode::precondition_failed,
                    "cause host '" + cause.host + "' is not in the topology");
    }
    BlastRadius radius;
    radius.cause = cause.id;
    radius.host = cause.host;
    radius.direct = impacted_entities(graph, cause_id);

    const Codebook& codebook = graph.codebook();
    ShortestPaths walked = shortest_rule_paths(topology, codebook, cause.host,
                                               codebook.cause(cause.cause).local_symptoms,
                                               graph.max_hops());
    radius.truncated = walked.truncated;
    radius.paths = std::move(walked.paths);

    // A direct entity the current topology no longer reaches keeps the path
    // recorded on its causal edge.
    for (const auto& edge : graph.edges_from(cause_id)) {
        const std::string& host = graph.symptom(edge.to).host;
        radius.paths.emplace(host, edge.derivation.hops);
    }
    for (const auto& [entity, path] : radius.paths) radius.transitive.insert(entity);

    for (const auto& entity : radius.transitive) {
        if (!topology.contains(entity)) continue;
        if (const auto& team = topology.entity(entity).owner_team) {
            radius.owners.emplace(entity, *team);
            radius.impacted_teams.insert(*team);
        }
    }
    return radius;
}

bool ownership_check(const BlastRadius& radius, std::string_view team) {
    for (const auto& entity : radius.direct) {
        auto it = radius.owners.find(entity);
        if (it != radius.owners.end() && it->second == team) return true;
    }
    return false;
}

std::string_view to_string(AlignmentBasis basis) {
    switch (basis) {
        case AlignmentBasis::host: return "host";
        case AlignmentBasis::hosting_stack: return "hosting_stack";
        case AlignmentBasis::downstream: return "downstream";
        case AlignmentBasis::unrelated: return "unrelated";
    }
    return "unrelated";
}

namespace {

// Forward layer/comp path from `from` to `to`, fewest hops, smallest ids first.
std::optional<std::vector<Relation>> stack_path(const EntityGraph& topology, const std::string& from,
                                                const std::string& to) {
    std::map<std::string, Relation> parent;
    std::set<std::string> seen{from};
    std::deque<std::string> queue{from};
    while (!queue.empty()) {
        std::string current = queue.front();
        queue.pop_front();
        if (current == to) {
            std::vector<Relation> path;
            for (std::string at = to; at != from;) {
                const Relation& r = parent.at(at);
                path.insert(path.begin(), r);
                at = r.source;
            }
            return path;
        }
        for (const auto& [kind, next] : topology.outgoing(current)) {
            if (kind == RelationKind::conn) continue;
            if (!seen.insert(next).second) continue;
            parent.emplace(next, Relation{current, next, kind});
            queue.push_back(next);
        }
    }
    return std::nullopt;
}

std::string describe(const std::vector<Relation>& path) {
    std::string out;
    for (const auto& r : path) {
        if (!out.empty()) out += ", ";
        out += r.source + " -" + std::string(to_string(r.kind)) + "-> " + r.target;
    }
    return out;
}

}  // namespace

RemediationVerdict remediation_alignment(const BlastRadius& radius, const EntityGraph& topology,
                                         std::string_view target) {
    if (!topology.contains(target)) {
        throw Error(ErrorCode::unknown_id, "no entity '" + std::string(target) + "'");
    }
    RemediationVerdict verdict;
    verdict.target = std::string(target);
    if (verdict.target == radius.host) {
        verdict.aligned = true;
        verdict.basis = AlignmentBasis::host;
        verdict.rationale = "targets " + radius.host + ", the host of " + radius.cause;
        return verdict;
    }
    if (auto path = stack_path(topology, radius.host, verdict.target)) {
        verdict.aligned = true;
        verdict.basis = AlignmentBasis::hosting_stack;
        verdict.path = std::move(*path);
        verdict.rationale = verdict.target + " runs " + radius.host + " (" + describe(verdict.path) + ")";
        return verdict;
    }
    if (auto it = radius.paths.find(verdict.target); it != radius.paths.end()) {
        verdict.basis = AlignmentBasis::downstream;
        for (const auto& hop : it->second) verdict.path.push_back(hop.relation);
        verdict.rationale = verdict.target + " only shows symptoms propagated from " + radius.host +
                            " (" + describe(verdict.path) + "); acting on it leaves " +
                            radius.cause + " in place";
        return verdict;
    }
    verdict.rationale = verdict.target + " is outside the blast radius of " + radius.cause;
    return verdict;
}

json to_json(const Relation& relation) {
    return {{"source", relation.source}, {"target", relation.target}, {"kind", to_string(relation.kind)}};
}

json to_json(const Hop& hop) {
    json j = to_json(hop.relation);
    j["rule"] = hop.rule_id;
    return j;
}

json to_json(const BlastRadius& radius) {
    json paths = json::object();
    for (const auto& [entity, hops] : radius.paths) {
        json list = json::array();
        for (const auto& hop : hops) list.push_back(to_json(hop));
        paths[entity] = std::move(list);
    }
    return {{"cause", radius.cause},
            {"host", radius.host},
            {"direct", radius.direct},
            {"transitive", radius.transitive},
            {"paths", std::move(paths)},
            {"owners", radius.owners},
            {"impacted_teams", radius.impacted_teams},
            {"truncated", radius.truncated}};
}

json to_json(const RemediationVerdict& verdict) {
    json path = json::array();
    for (const auto& r : verdict.path) path.push_back(to_json(r));
    return {{"target", verdict.target},
            {"aligned", verdict.aligned},
            {"basis", to_string(verdict.basis)},
            {"path", std::move(path)},
            {"rationale", verdict.rationale}};
}

}  // namespace cie
