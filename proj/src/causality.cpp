#include "cie/causality.hpp"

#include <algorithm>

#include <nlohmann/json.hpp>

#include "cie/error.hpp"

namespace cie {

using nlohmann::json;

std::string cause_instance_id(std::string_view cause, std::string_view host) {
    std::string id(cause);
    id += '@';
    id += host;
    return id;
}

std::string symptom_instance_id(std::string_view symptom, std::string_view host) {
    return cause_instance_id(symptom, host);
}

namespace {

const std::vector<CausalEdge> kNoEdges;
const std::vector<CausalityGraph::IncomingEdge> kNoIncoming;

}  // namespace

std::vector<CausalEdge> CausalityGraph::edges() const {
    std::vector<CausalEdge> all;
    all.reserve(edge_count_);
    for (const auto& [id, block] : blocks_) all.insert(all.end(), block.edges.begin(), block.edges.end());
    return all;
}

const RootCauseInstance& CausalityGraph::cause(std::string_view id) const {
    auto it = causes_.find(id);
    if (it == causes_.end()) {
        throw Error(ErrorCode::unknown_id, "no root cause instance '" + std::string(id) + "'");
    }
    return it->second;
}

const SymptomInstance& CausalityGraph::symptom(std::string_view id) const {
    auto it = symptoms_.find(id);
    if (it == symptoms_.end()) {
        throw Error(ErrorCode::unknown_id, "no symptom instance '" + std::string(id) + "'");
    }
    return it->second;
}

const std::vector<CausalEdge>& CausalityGraph::edges_from(std::string_view cause_id) const {
    cause(cause_id);
    auto it = blocks_.find(cause_id);
    return it == blocks_.end() ? kNoEdges : it->second.edges;
}

const std::vector<CausalityGraph::IncomingEdge>& CausalityGraph::edges_to(
    std::string_view symptom_id) const {
    auto it = incoming_.find(symptom_id);
    return it == incoming_.end() ? kNoIncoming : it->second;
}

std::optional<double> CausalityGraph::probability(std::string_view cause_id,
                                                  std::string_view symptom_id) const {
    const auto& out = edges_from(cause_id);
    auto it = std::lower_bound(out.begin(), out.end(), symptom_id,
                               [](const CausalEdge& e, std::string_view id) { return e.to < id; });
    if (it == out.end() || it->to != symptom_id) return std::nullopt;
    return it->probability;
}

std::vector<std::string> CausalityGraph::symptoms_on(std::string_view entity) const {
    auto it = symptoms_by_entity_.find(entity);
    if (it == symptoms_by_entity_.end()) return {};
    return it->second;
}

const std::string& CausalityGraph::entity_type(std::string_view entity) const {
    auto it = entity_types_.find(entity);
    if (it == entity_types_.end()) {
        throw Error(ErrorCode::unknown_id, "no entity '" + std::string(entity) + "'");
    }
    return it->second;
}

std::vector<std::string> CausalityGraph::truncated_causes() const {
    std::vector<std::string> out;
    for (const auto& [id, block] : blocks_) {
        if (block.truncated) out.push_back(id);
    }
    return out;
}

CausalityGraph CausalityGraph::with_priors(const std::map<std::string, double>& priors) const {
    CausalityGraph copy = *this;
    for (const auto& [id, prior] : priors) {
        auto it = copy.causes_.find(id);
        if (it == copy.causes_.end()) {
            throw Error(ErrorCode::unknown_id, "no root cause instance '" + id + "'");
        }
        if (!(prior > 0.0 && prior <= 1.0)) {
            throw Error(ErrorCode::invalid_probability, "prior outside (0,1]", id);
        }
        it->second.prior = prior;
    }
    return copy;
}

bool CausalityGraph::operator==(const CausalityGraph& other) const {
    if (causes_ != other.causes_ || symptoms_ != other.symptoms_ ||
        entity_types_ != other.entity_types_ || topology_revision_ != other.topology_revision_ ||
        max_hops_ != other.max_hops_ || blocks_.size() != other.blocks_.size()) {
        return false;
    }
    if ((codebook_ == nullptr) != (other.codebook_ == nullptr)) return false;
    if (codebook_ && codebook_->fingerprint() != other.codebook_->fingerprint()) return false;
    for (auto a = blocks_.begin(), b = other.blocks_.begin(); a != blocks_.end(); ++a, ++b) {
        if (a->first != b->first || a->second.edges != b->second.edges ||
            a->second.truncated != b->second.truncated) {
            return false;
        }
    }
    return true;
}

void CausalityGraph::build_indexes() {
    incoming_.clear();
    symptoms_by_entity_.clear();
    edge_count_ = 0;
    for (const auto& [id, block] : blocks_) {
        edge_count_ += block.edges.size();
        for (const auto& edge : block.edges) incoming_[edge.to].push_back({edge.from, edge.probability});
    }
    for (const auto& [id, symptom] : symptoms_) symptoms_by_entity_[symptom.host].push_back(id);
}

namespace {

void instantiate_entity(const Entity& entity, const Codebook& cb, CausalityGraph::CauseMap& causes,
                        CausalityGraph::SymptomMap& symptoms) {
    for (const auto& def : cb.root_causes()) {
        if (def.applies_to != entity.type) continue;
        std::string id = cause_instance_id(def.name, entity.id);
        causes.emplace(id, RootCauseInstance{id, def.name, entity.id, def.prior});
    }
    for (const auto& def : cb.symptoms()) {
        if (def.applies_to != entity.type) continue;
        std::string id = symptom_instance_id(def.name, entity.id);
        symptoms.emplace(id, SymptomInstance{id, def.name, entity.id, def.activation});
    }
}

void check_types(const EntityGraph& topology, const Codebook& cb) {
    for (const auto& [id, entity] : topology.entities()) {
        if (!cb.has_type(entity.type)) {
            throw Error(ErrorCode::unknown_type,
                        "entity type '" + entity.type + "' is not declared in the codebook",
                        "entities[" + id + "]");
        }
    }
}

template <typename Block>
Block propagate_cause(const EntityGraph& topology, const Codebook& cb,
                      const RootCauseInstance& instance, std::size_t max_hops) {
    const RootCauseDef& def = cb.cause(instance.cause);
    PropagationResult reached = propagate(topology, cb, instance.host, def.local_symptoms, max_hops);
    Block block;
    block.footprint = std::move(reached.footprint);
    block.truncated = reached.truncated;
    block.edges.reserve(reached.reached.size());
    for (auto& r : reached.reached) {
        block.edges.push_back({instance.id, symptom_instance_id(r.symptom, r.entity), r.probability,
                               std::move(r.derivation)});
    }
    std::sort(block.edges.begin(), block.edges.end(),
              [](const CausalEdge& a, const CausalEdge& b) { return a.to < b.to; });
    return block;
}

}  // namespace

CausalityGraph instantiate(const EntityGraph& topology, std::shared_ptr<const Codebook> codebook,
                           InstantiateOptions options) {
    if (!codebook) throw Error(ErrorCode::invalid_argument, "codebook is required");
    check_types(topology, *codebook);

    CausalityGraph graph;
    graph.codebook_ = std::move(codebook);
    graph.max_hops_ = options.max_hops;
    graph.topology_revision_ = topology.revision();
    graph.topology_stamp_ = topology.stamp();
    const Codebook& cb = *graph.codebook_;
    for (const auto& [id, entity] : topology.entities()) {
        graph.entity_types_.emplace(id, entity.type);
        instantiate_entity(entity, cb, graph.causes_, graph.symptoms_);
    }
    for (const auto& [id, instance] : graph.causes_) {
        graph.blocks_.emplace(id, propagate_cause<CausalityGraph::CauseBlock>(topology, cb, instance,
                                                                             options.max_hops));
    }
    graph.build_indexes();
    return graph;
}

CausalityGraph refresh(const CausalityGraph& previous, const EntityGraph& topology,
                       std::shared_ptr<const Codebook> codebook) {
    if (!codebook) throw Error(ErrorCode::invalid_argument, "codebook is required");
    InstantiateOptions options{previous.max_hops_};
    const bool same_codebook =
        previous.codebook_ && previous.codebook_->fingerprint() == codebook->fingerprint();
    if (!same_codebook) return instantiate(topology, std::move(codebook), options);

    auto touched = topology.touched_since(previous.topology_stamp_);
    if (!touched) return instantiate(topology, std::move(codebook), options);
    if (touched->empty()) return previous;

    check_types(topology, *codebook);
    CausalityGraph graph;
    graph.codebook_ = std::move(codebook);
    graph.max_hops_ = options.max_hops;
    graph.topology_revision_ = topology.revision();
    graph.topology_stamp_ = topology.stamp();
    const Codebook& cb = *graph.codebook_;
    for (const auto& [id, entity] : topology.entities()) {
        graph.entity_types_.emplace(id, entity.type);
        instantiate_entity(entity, cb, graph.causes_, graph.symptoms_);
    }
    for (const auto& [id, instance] : graph.causes_) {
        auto old = previous.blocks_.find(id);
        const bool reusable =
            old != previous.blocks_.end() &&
            std::none_of(old->second.footprint.begin(), old->second.footprint.end(),
                         [&](const std::string& e) { return touched->contains(e); });
        if (reusable) {
            graph.blocks_.emplace(id, old->second);
        } else {
            graph.blocks_.emplace(id, propagate_cause<CausalityGraph::CauseBlock>(
                                          topology, cb, instance, options.max_hops));
        }
    }
    graph.build_indexes();
    return graph;
}

std::set<std::string> effects(const CausalityGraph& graph, std::string_view cause_id) {
    std::set<std::string> out;
    for (const auto& edge : graph.edges_from(cause_id)) out.insert(edge.to);
    return out;
}

json dump_causality(const CausalityGraph& graph) {
    json doc = json::object();
    doc["schema"] = "causality/1";
    doc["topology_revision"] = graph.topology_revision();
    doc["codebook_version"] = graph.codebook().version();
    doc["max_hops"] = graph.max_hops();
    json causes = json::array();
    for (const auto& [id, c] : graph.causes()) {
        causes.push_back({{"id", id}, {"cause", c.cause}, {"host", c.host}, {"prior", c.prior}});
    }
    doc["causes"] = std::move(causes);
    json symptoms = json::array();
    for (const auto& [id, s] : graph.symptoms()) {
        symptoms.push_back({{"id", id}, {"symptom", s.symptom}, {"host", s.host}});
    }
    doc["symptoms"] = std::move(symptoms);
    json edges = json::array();
    for (const auto& edge : graph.edges()) {
        json hops = json::array();
        for (const auto& hop : edge.derivation.hops) {
            hops.push_back({{"rule", hop.rule_id},
                            {"source", hop.relation.source},
                            {"target", hop.relation.target},
                            {"kind", to_string(hop.relation.kind)}});
        }
        edges.push_back({{"from", edge.from},
                         {"to", edge.to},
                         {"probability", edge.probability},
                         {"origin", edge.derivation.origin_symptom},
                         {"hops", std::move(hops)}});
    }
    doc["edges"] = std::move(edges);
    doc["truncated"] = graph.truncated_causes();
    return doc;
}

}  // namespace cie
