#pragma once

// Independent reference implementations the engine is checked against. Each
// one recomputes its answer from first principles rather than calling the
// routine under test.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "cie/attributes.hpp"
#include "cie/causality.hpp"
#include "cie/inference.hpp"
#include "cie/knowledge_base.hpp"
#include "cie/topology.hpp"

namespace cie::testing {

struct OracleScore {
    std::string cause;
    double score;  // linear space
    double prior;
};

/// Exhaustive scoring straight off the flat edge list: P(r) times P(s|r) per
/// explained active symptom and the leak for every other active symptom.
/// With `fallback_to_all`, every cause competes when none explains anything.
inline std::vector<OracleScore> brute_force_ranking(const CausalityGraph& graph, const ActiveSymptomSet& active,
                                                    double leak, bool fallback_to_all = true) {
    std::map<std::pair<std::string, std::string>, double> edge;
    for (const auto& e : graph.edges()) edge[{e.from, e.to}] = e.probability;
    std::vector<OracleScore> out;
    for (const auto& [id, cause] : graph.causes()) {
        bool candidate = false;
        double score = cause.prior;
        for (const auto& s : active.symptoms) {
            auto it = edge.find({id, s});
            if (it != edge.end()) {
                candidate = true;
                score *= it->second;
            } else {
                score *= leak;
            }
        }
        if (candidate) out.push_back({id, score, cause.prior});
    }
    if (out.empty() && fallback_to_all && !active.symptoms.empty()) {
        for (const auto& [id, cause] : graph.causes()) {
            double score = cause.prior;
            for (std::size_t i = 0; i < active.symptoms.size(); ++i) score *= leak;
            out.push_back({id, score, cause.prior});
        }
    }
    std::sort(out.begin(), out.end(), [](const OracleScore& a, const OracleScore& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.prior != b.prior) return a.prior > b.prior;
        return a.cause < b.cause;
    });
    return out;
}

/// Best probability per reachable (entity, symptom) by enumerating every
/// rule walk of at most `max_hops` hops. Exponential; small models only.
inline std::map<std::pair<std::string, std::string>, double> enumerate_walks(
    const EntityGraph& topology, const Codebook& codebook, const std::string& host,
    const std::vector<LocalSymptom>& seeds, std::size_t max_hops) {
    std::map<std::pair<std::string, std::string>, double> best;
    std::function<void(const std::string&, const std::string&, double, std::size_t)> walk =
        [&](const std::string& entity, const std::string& symptom, double p, std::size_t depth) {
            auto& slot = best[{entity, symptom}];
            slot = std::max(slot, p);
            if (depth == max_hops) return;
            for (const auto& rule : codebook.rules()) {
                if (rule.from_symptom != symptom) continue;
                const std::string& want = codebook.symptom(rule.to_symptom).applies_to;
                for (const auto& r : topology.relations()) {
                    if (r.kind != rule.over) continue;
                    const std::string* next = nullptr;
                    if (rule.traversal == Traversal::forward && r.source == entity) next = &r.target;
                    if (rule.traversal == Traversal::reverse && r.target == entity) next = &r.source;
                    if (!next || topology.entity(*next).type != want) continue;
                    walk(*next, rule.to_symptom, p * rule.attenuation, depth + 1);
                }
            }
        };
    for (const auto& seed : seeds) walk(host, seed.symptom, seed.probability, 0);
    return best;
}

/// Entities reached by repeating one-hop rule expansion from the seeds until
/// nothing new appears or the hop limit is spent.
inline std::set<std::string> expansion_fixpoint(const EntityGraph& topology, const Codebook& codebook,
                                                const std::string& host, const std::vector<LocalSymptom>& seeds,
                                                std::size_t max_hops) {
    std::set<std::pair<std::string, std::string>> reached;
    for (const auto& seed : seeds) reached.insert({host, seed.symptom});
    auto frontier = reached;
    for (std::size_t hop = 0; hop < max_hops && !frontier.empty(); ++hop) {
        std::set<std::pair<std::string, std::string>> next;
        for (const auto& [entity, symptom] : frontier) {
            for (const auto& rule : codebook.rules()) {
                if (rule.from_symptom != symptom) continue;
                for (const auto& r : topology.relations()) {
                    if (r.kind != rule.over) continue;
                    std::string other;
                    if (rule.traversal == Traversal::forward && r.source == entity) other = r.target;
                    else if (rule.traversal == Traversal::reverse && r.target == entity) other = r.source;
                    else continue;
                    if (topology.entity(other).type != codebook.symptom(rule.to_symptom).applies_to) continue;
                    if (!reached.contains({other, rule.to_symptom})) next.insert({other, rule.to_symptom});
                }
            }
        }
        reached.insert(next.begin(), next.end());
        frontier = std::move(next);
    }
    std::set<std::string> out{host};
    for (const auto& [entity, symptom] : reached) out.insert(entity);
    return out;
}

/// Hosts of the cause's edges by a scan of the flat edge list, plus its host.
inline std::set<std::string> impacted_by_scan(const CausalityGraph& graph, const std::string& cause_id) {
    std::set<std::string> out{graph.cause(cause_id).host};
    for (const auto& e : graph.edges()) {
        if (e.from == cause_id) out.insert(graph.symptom(e.to).host);
    }
    return out;
}

/// Value of one attribute by recursion over its parents, no ordering involved.
inline double recursive_value(const AttributeGraph& g, const std::string& id) {
    std::vector<std::pair<std::string, AttributeFunction>> in;
    for (const auto& d : g.dependencies()) {
        if (d.to == id) in.emplace_back(d.from, d.function);
    }
    if (in.empty()) return *g.node(id).value;
    const AttributeFunction& fn = in.front().second;
    switch (fn.kind) {
        case FunctionKind::affine: return fn.a * recursive_value(g, in.front().first) + fn.b;
        case FunctionKind::lookup: {
            const double x = recursive_value(g, in.front().first);
            const auto& t = fn.table;
            if (x <= t.front().first) return t.front().second;
            if (x >= t.back().first) return t.back().second;
            std::size_t i = 1;
            while (t[i].first <= x) ++i;
            const double w = (x - t[i - 1].first) / (t[i].first - t[i - 1].first);
            return t[i - 1].second + w * (t[i].second - t[i - 1].second);
        }
        case FunctionKind::sum: {
            double total = 0.0;
            for (const auto& [parent, f] : in) total += recursive_value(g, parent);
            return total;
        }
        case FunctionKind::max: {
            double best = -INFINITY;
            for (const auto& [parent, f] : in) best = std::max(best, recursive_value(g, parent));
            return best;
        }
        case FunctionKind::learned: break;
    }
    return NAN;
}

/// Responsibility as literal set arithmetic over ownership metadata.
inline bool owns_any(const std::set<std::string>& direct, const EntityGraph& topology, const std::string& team) {
    std::set<std::string> owned;
    for (const auto& [id, e] : topology.entities()) {
        if (e.owner_team == team) owned.insert(id);
    }
    std::vector<std::string> common;
    std::set_intersection(direct.begin(), direct.end(), owned.begin(), owned.end(), std::back_inserter(common));
    return !common.empty();
}

}  // namespace cie::testing
