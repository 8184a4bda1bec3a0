#pragma once

#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cie/knowledge_base.hpp"
#include "cie/topology.hpp"

namespace cie {

inline constexpr std::size_t kDefaultMaxHops = 8;

struct Hop {
    std::string rule_id;
    Relation relation;  // the topology edge crossed, as stored in the graph

    auto operator<=>(const Hop&) const = default;
};

/// How a symptom was reached from a root cause: the cause's local symptom it
/// started from, then the rule hops taken. Empty `hops` means local.
struct Derivation {
    std::string origin_symptom;
    std::vector<Hop> hops;

    auto operator<=>(const Derivation&) const = default;
};

struct ReachedSymptom {
    std::string entity;
    std::string symptom;
    double probability = 0.0;
    Derivation derivation;
};

struct PropagationResult {
    /// Sorted by (entity, symptom); one entry per reachable symptom instance,
    /// carrying its maximum-probability derivation.
    std::vector<ReachedSymptom> reached;
    /// Entities whose adjacency the traversal consulted.
    std::set<std::string> footprint;
    bool truncated = false;
};

/// Hop-limited maximum-probability expansion of a root cause's local symptoms
/// through the codebook's propagation rules over the topology. A path of k hops
/// has probability P(origin|cause) times the k rule attenuations, multiplied
/// left to right. Among paths reaching the same symptom instance the highest
/// probability wins; ties go to fewer hops, then the smaller derivation.
/// `truncated` is set when a path longer than `max_hops` would still improve
/// some instance.
PropagationResult propagate(const EntityGraph& topology, const Codebook& codebook,
                            std::string_view host, const std::vector<LocalSymptom>& seeds,
                            std::size_t max_hops = kDefaultMaxHops);

struct ShortestPaths {
    /// Per reached entity, the fewest-hop rule path from the cause's host.
    /// Ties prefer the path whose sequence of visited entity ids is smallest.
    std::map<std::string, std::vector<Hop>> paths;
    bool truncated = false;
};

/// Breadth-first counterpart of `propagate` over the same one-hop rule
/// expansion and hop limit. The host itself maps to an empty path.
ShortestPaths shortest_rule_paths(const EntityGraph& topology, const Codebook& codebook,
                                  std::string_view host, const std::vector<LocalSymptom>& seeds,
                                  std::size_t max_hops = kDefaultMaxHops);

/// Recomputes a derivation's probability from the codebook, in the same
/// multiplication order `propagate` uses.
double derivation_probability(const Codebook& codebook, std::string_view cause_name,
                              const Derivation& derivation);

}  // namespace cie
