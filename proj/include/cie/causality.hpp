#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cie/knowledge_base.hpp"
#include "cie/propagation.hpp"
#include "cie/topology.hpp"

namespace cie {

struct RootCauseInstance {
    std::string id;
    std::string cause;
    std::string host;
    double prior = kDefaultPrior;

    bool operator==(const RootCauseInstance&) const = default;
};

struct SymptomInstance {
    std::string id;
    std::string symptom;
    std::string host;
    Activation activation;

    bool operator==(const SymptomInstance&) const = default;
};

/// Cause -> symptom edge. `probability` equals the origin's local P(s|r)
/// times each hop's attenuation, in derivation order.
struct CausalEdge {
    std::string from;
    std::string to;
    double probability = 0.0;
    Derivation derivation;

    bool operator==(const CausalEdge&) const = default;
};

std::string cause_instance_id(std::string_view cause, std::string_view host);
std::string symptom_instance_id(std::string_view symptom, std::string_view host);

struct InstantiateOptions {
    std::size_t max_hops = kDefaultMaxHops;
};

/// Bipartite cause -> symptom graph instantiated from a codebook over one
/// topology revision. Immutable once built.
class CausalityGraph {
public:
    using CauseMap = std::map<std::string, RootCauseInstance, std::less<>>;
    using SymptomMap = std::map<std::string, SymptomInstance, std::less<>>;

    struct IncomingEdge {
        std::string cause;
        double probability;
    };

    const CauseMap& causes() const noexcept { return causes_; }
    const SymptomMap& symptoms() const noexcept { return symptoms_; }
    /// Every edge, sorted by (from, to).
    std::vector<CausalEdge> edges() const;
    std::size_t edge_count() const noexcept { return edge_count_; }

    const RootCauseInstance& cause(std::string_view id) const;
    const SymptomInstance& symptom(std::string_view id) const;
    bool has_cause(std::string_view id) const { return causes_.find(id) != causes_.end(); }
    bool has_symptom(std::string_view id) const { return symptoms_.find(id) != symptoms_.end(); }

    /// Outgoing edges of a cause, sorted by target symptom id.
    const std::vector<CausalEdge>& edges_from(std::string_view cause_id) const;
    const std::vector<IncomingEdge>& edges_to(std::string_view symptom_id) const;
    /// P(symptom | cause), or nullopt when no edge joins them.
    std::optional<double> probability(std::string_view cause_id, std::string_view symptom_id) const;

    /// Symptom instances hosted on an entity.
    std::vector<std::string> symptoms_on(std::string_view entity) const;
    const std::string& entity_type(std::string_view entity) const;
    bool has_entity(std::string_view entity) const { return entity_types_.find(entity) != entity_types_.end(); }

    Revision topology_revision() const noexcept { return topology_revision_; }
    const Codebook& codebook() const noexcept { return *codebook_; }
    const std::shared_ptr<const Codebook>& codebook_ptr() const noexcept { return codebook_; }
    std::size_t max_hops() const noexcept { return max_hops_; }

    /// Causes whose propagation hit the hop limit.
    std::vector<std::string> truncated_causes() const;

    /// Replace every instance prior; used to probe ranking invariances.
    CausalityGraph with_priors(const std::map<std::string, double>& priors) const;

    bool operator==(const CausalityGraph& other) const;

private:
    friend CausalityGraph instantiate(const EntityGraph&, std::shared_ptr<const Codebook>,
                                      InstantiateOptions);
    friend CausalityGraph refresh(const CausalityGraph&, const EntityGraph&,
                                  std::shared_ptr<const Codebook>);

    struct CauseBlock {
        std::vector<CausalEdge> edges;
        std::set<std::string> footprint;
        bool truncated = false;
    };

    void build_indexes();

    CauseMap causes_;
    SymptomMap symptoms_;
    std::map<std::string, CauseBlock, std::less<>> blocks_;
    std::map<std::string, std::vector<IncomingEdge>, std::less<>> incoming_;
    std::map<std::string, std::vector<std::string>, std::less<>> symptoms_by_entity_;
    std::map<std::string, std::string, std::less<>> entity_types_;
    std::size_t edge_count_ = 0;
    Revision topology_revision_ = 0;
    std::uint64_t topology_stamp_ = 0;
    std::size_t max_hops_ = kDefaultMaxHops;
    std::shared_ptr<const Codebook> codebook_;
};

/// One cause instance per (entity, applicable root cause) and one symptom
/// instance per (entity, applicable symptom); edges from each cause's local
/// symptoms plus their rule-propagated closure.
CausalityGraph instantiate(const EntityGraph& topology, std::shared_ptr<const Codebook> codebook,
                           InstantiateOptions options = {});

/// Brings `previous` up to date with `topology`. Only causes whose traversal
/// footprint touches a changed entity are recomputed; the result always
/// equals a full instantiate().
CausalityGraph refresh(const CausalityGraph& previous, const EntityGraph& topology,
                       std::shared_ptr<const Codebook> codebook);

std::set<std::string> effects(const CausalityGraph& graph, std::string_view cause_id);

nlohmann::json dump_causality(const CausalityGraph& graph);

}  // namespace cie
