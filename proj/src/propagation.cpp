#include "cie/propagation.hpp"

#include <map>
#include <utility>

#include "cie/error.hpp"

namespace cie {

namespace {

using StateKey = std::pair<std::string, std::string>;  // (entity, symptom)

struct Best {
    double probability;
    Derivation derivation;
    std::size_t round;
};

struct Candidate {
    StateKey key;
    double probability;
    Derivation derivation;
};

// Every one-hop extension of `state` allowed by the codebook's rules.
template <typename Emit>
void expand(const EntityGraph& topology, const Codebook& codebook, const StateKey& state,
            const Best& from, Emit&& emit) {
    const auto& [entity, symptom] = state;
    for (std::size_t index : codebook.rules_from(symptom)) {
        const PropagationRule& rule = codebook.rules()[index];
        const std::string& target_type = codebook.symptom(rule.to_symptom).applies_to;
        const auto& edges = rule.traversal == Traversal::forward ? topology.outgoing(entity)
                                                                 : topology.incoming(entity);
        for (const auto& [kind, other] : edges) {
            if (kind != rule.over) continue;
            if (topology.entity(other).type != target_type) continue;
            Relation crossed = rule.traversal == Traversal::forward
                                   ? Relation{entity, other, kind}
                                   : Relation{other, entity, kind};
            Derivation derivation = from.derivation;
            derivation.hops.push_back({rule.id, std::move(crossed)});
            emit(Candidate{{other, rule.to_symptom}, from.probability * rule.attenuation,
                           std::move(derivation)});
        }
    }
}

}  // namespace

PropagationResult propagate(const EntityGraph& topology, const Codebook& codebook,
                            std::string_view host, const std::vector<LocalSymptom>& seeds,
                            std::size_t max_hops) {
    PropagationResult result;
    if (!topology.contains(host)) {
        throw Error(ErrorCode::unknown_id, "no entity '" + std::string(host) + "'");
    }
    result.footprint.insert(std::string(host));

    std::map<StateKey, Best> best;
    std::set<StateKey> frontier;
    for (const auto& seed : seeds) {
        StateKey key{std::string(host), seed.symptom};
        Best entry{seed.probability, Derivation{seed.symptom, {}}, 0};
        auto [it, inserted] = best.emplace(key, entry);
        if (!inserted) {
            // Duplicate seeds are rejected by the codebook; keep the stronger one regardless.
            if (entry.probability > it->second.probability) it->second = entry;
        }
        frontier.insert(std::move(key));
    }

    for (std::size_t round = 1; round <= max_hops && !frontier.empty(); ++round) {
        std::map<StateKey, Best> staged;
        for (const auto& state : frontier) {
            result.footprint.insert(state.first);
            const Best from = best.at(state);
            expand(topology, codebook, state, from, [&](Candidate c) {
                if (auto it = best.find(c.key); it != best.end()) {
                    if (c.probability <= it->second.probability) return;
                }
                auto [it, inserted] =
                    staged.emplace(c.key, Best{c.probability, c.derivation, round});
                if (inserted) return;
                Best& current = it->second;
                if (c.probability > current.probability ||
                    (c.probability == current.probability && c.derivation < current.derivation)) {
                    current = Best{c.probability, std::move(c.derivation), round};
                }
            });
        }
        frontier.clear();
        for (auto& [key, entry] : staged) {
            best.insert_or_assign(key, std::move(entry));
            frontier.insert(key);
        }
    }

    // One probe round past the limit: would a longer path still improve anything?
    for (const auto& state : frontier) {
        result.footprint.insert(state.first);
        const Best from = best.at(state);
        expand(topology, codebook, state, from, [&](Candidate c) {
            auto it = best.find(c.key);
            if (it == best.end() || c.probability > it->second.probability) result.truncated = true;
        });
    }

    result.reached.reserve(best.size());
    for (auto& [key, entry] : best) {
        result.reached.push_back(
            {key.first, key.second, entry.probability, std::move(entry.derivation)});
    }
    return result;
}

ShortestPaths shortest_rule_paths(const EntityGraph& topology, const Codebook& codebook,
                                  std::string_view host, const std::vector<LocalSymptom>& seeds,
                                  std::size_t max_hops) {
    if (!topology.contains(host)) {
        throw Error(ErrorCode::unknown_id, "no entity '" + std::string(host) + "'");
    }
    struct Visit {
        std::vector<std::string> entities;  // entities stepped onto, in order
        std::vector<Hop> hops;

        bool operator<(const Visit& other) const {
            if (entities != other.entities) return entities < other.entities;
            return hops < other.hops;
        }
    };

    std::map<std::string, Visit> per_entity;
    per_entity.emplace(std::string(host), Visit{});
    std::set<StateKey> seen;
    std::map<StateKey, Visit> level;
    for (const auto& seed : seeds) {
        StateKey key{std::string(host), seed.symptom};
        seen.insert(key);
        level.emplace(std::move(key), Visit{});
    }

    ShortestPaths result;
    for (std::size_t depth = 1; !level.empty(); ++depth) {
        std::map<StateKey, Visit> next;
        for (const auto& [state, visit] : level) {
            const Best from{1.0, Derivation{}, depth - 1};
            expand(topology, codebook, state, from, [&](Candidate c) {
                if (seen.contains(c.key)) return;
                if (depth > max_hops) {
                    result.truncated = true;
                    return;
                }
                Visit candidate = visit;
                candidate.entities.push_back(c.key.first);
                candidate.hops.push_back(std::move(c.derivation.hops.back()));
                auto [it, inserted] = next.emplace(c.key, candidate);
                if (!inserted && candidate < it->second) it->second = std::move(candidate);
            });
        }
        for (const auto& [state, visit] : next) {
            seen.insert(state);
            auto [it, inserted] = per_entity.emplace(state.first, visit);
            if (!inserted && it->second.hops.size() == visit.hops.size() && visit < it->second) {
                it->second = visit;
            }
        }
        level = std::move(next);
    }
    for (auto& [entity, visit] : per_entity) result.paths.emplace(entity, std::move(visit.hops));
    return result;
}

double derivation_probability(const Codebook& codebook, std::string_view cause_name,
                              const Derivation& derivation) {
    const RootCauseDef& cause = codebook.cause(cause_name);
    double probability = 0.0;
    bool found = false;
    for (const auto& local : cause.local_symptoms) {
        if (local.symptom == derivation.origin_symptom) {
            probability = local.probability;
            found = true;
        }
    }
    if (!found) {
        throw Error(ErrorCode::unknown_reference, "'" + derivation.origin_symptom +
                                                      "' is not a local symptom of '" +
                                                      std::string(cause_name) + "'");
    }
    for (const auto& hop : derivation.hops) probability *= codebook.rule(hop.rule_id).attenuation;
    return probability;
}

}  // namespace cie
