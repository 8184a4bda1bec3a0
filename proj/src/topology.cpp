#include "cie/topology.hpp"

#include <algorithm>
#include <atomic>

#include "cie/error.hpp"

namespace cie {

std::string_view to_string(RelationKind kind) {
    switch (kind) {
        case RelationKind::conn: return "conn";
        case RelationKind::layer: return "layer";
        case RelationKind::comp: return "comp";
    }
    return "conn";
}

std::optional<RelationKind> parse_relation_kind(std::string_view text) {
    if (text == "conn") return RelationKind::conn;
    if (text == "layer") return RelationKind::layer;
    if (text == "comp") return RelationKind::comp;
    return std::nullopt;
}

std::string_view to_string(Direction direction) {
    switch (direction) {
        case Direction::out: return "out";
        case Direction::in: return "in";
        case Direction::both: return "both";
    }
    return "both";
}

std::optional<Direction> parse_direction(std::string_view text) {
    if (text == "out") return Direction::out;
    if (text == "in") return Direction::in;
    if (text == "both") return Direction::both;
    return std::nullopt;
}

namespace {

const EntityGraph::Adjacency kNoEdges;

}  // namespace

std::uint64_t EntityGraph::next_stamp() {
    static std::atomic<std::uint64_t> counter{0};
    return ++counter;
}

void EntityGraph::begin_mutation() {
    ++revision_;
    stamp_ = next_stamp();
}

EntityGraph EntityGraph::assemble(std::vector<Entity> entities, std::vector<Relation> relations) {
    EntityGraph graph;
    for (auto& entity : entities) graph.add_entity(std::move(entity));
    for (auto& relation : relations) graph.add_relation(std::move(relation));
    graph.revision_ = 0;
    graph.stamp_ = next_stamp();
    graph.journal_.clear();
    graph.journal_base_ = graph.stamp_;
    return graph;
}

void EntityGraph::record(std::string id) {
    journal_.emplace_back(stamp_, std::move(id));
    while (journal_.size() > journal_capacity) {
        journal_base_ = journal_.front().first;
        journal_.pop_front();
    }
}

const Entity& EntityGraph::require(std::string_view id) const {
    auto it = entities_.find(id);
    if (it == entities_.end()) {
        throw Error(ErrorCode::unknown_id, "no entity '" + std::string(id) + "'");
    }
    return it->second;
}

void EntityGraph::add_entity(Entity entity) {
    if (entity.id.empty()) {
        throw Error(ErrorCode::invalid_argument, "entity id must not be empty");
    }
    if (entities_.contains(entity.id)) {
        throw Error(ErrorCode::duplicate_id, "entity '" + entity.id + "' already present");
    }
    begin_mutation();
    std::string id = entity.id;
    entities_.emplace(id, std::move(entity));
    record(std::move(id));
}

void EntityGraph::remove_entity(std::string_view id) {
    require(id);
    begin_mutation();
    std::string key(id);
    std::vector<Relation> incident;
    for (const auto& [kind, target] : outgoing(id)) incident.push_back({key, target, kind});
    for (const auto& [kind, source] : incoming(id)) incident.push_back({source, key, kind});
    for (const auto& relation : incident) {
        relations_.erase(relation);
        const std::string& other = relation.source == key ? relation.target : relation.source;
        if (auto it = out_.find(relation.source); it != out_.end()) {
            it->second.erase({relation.kind, relation.target});
        }
        if (auto it = in_.find(relation.target); it != in_.end()) {
            it->second.erase({relation.kind, relation.source});
        }
        record(other);
    }
    out_.erase(key);
    in_.erase(key);
    entities_.erase(entities_.find(id));
    record(std::move(key));
}

void EntityGraph::add_relation(Relation relation) {
    for (const std::string* end : {&relation.source, &relation.target}) {
        if (!contains(*end)) {
            throw Error(ErrorCode::dangling_endpoint,
                        "relation endpoint '" + *end + "' is not a declared entity");
        }
    }
    if (relation.source == relation.target) {
        throw Error(ErrorCode::invalid_argument,
                    "relation from '" + relation.source + "' to itself");
    }
    if (relations_.contains(relation)) {
        throw Error(ErrorCode::duplicate_id,
                    "duplicate " + std::string(to_string(relation.kind)) + " relation " +
                        relation.source + " -> " + relation.target);
    }
    begin_mutation();
    out_[relation.source].insert({relation.kind, relation.target});
    in_[relation.target].insert({relation.kind, relation.source});
    record(relation.source);
    record(relation.target);
    relations_.insert(std::move(relation));
}

void EntityGraph::remove_relation(const Relation& relation) {
    if (!relations_.contains(relation)) {
        throw Error(ErrorCode::unknown_id, "no " + std::string(to_string(relation.kind)) +
                                               " relation " + relation.source + " -> " +
                                               relation.target);
    }
    begin_mutation();
    relations_.erase(relation);
    out_[relation.source].erase({relation.kind, relation.target});
    in_[relation.target].erase({relation.kind, relation.source});
    record(relation.source);
    record(relation.target);
}

bool EntityGraph::contains(std::string_view id) const { return entities_.find(id) != entities_.end(); }

const Entity& EntityGraph::entity(std::string_view id) const { return require(id); }

const EntityGraph::Adjacency& EntityGraph::outgoing(std::string_view id) const {
    auto it = out_.find(id);
    return it == out_.end() ? kNoEdges : it->second;
}

const EntityGraph::Adjacency& EntityGraph::incoming(std::string_view id) const {
    auto it = in_.find(id);
    return it == in_.end() ? kNoEdges : it->second;
}

std::set<std::string> EntityGraph::neighbors(std::string_view id, std::optional<RelationKind> kind,
                                             Direction direction) const {
    require(id);
    std::set<std::string> result;
    auto collect = [&](const Adjacency& edges) {
        for (const auto& [edge_kind, other] : edges) {
            if (!kind || *kind == edge_kind) result.insert(other);
        }
    };
    if (direction != Direction::in) collect(outgoing(id));
    if (direction != Direction::out) collect(incoming(id));
    return result;
}

EntityGraph EntityGraph::scope(const std::set<std::string>& ids) const {
    EntityGraph view;
    for (const auto& id : ids) view.entities_.emplace(id, require(id));
    for (const auto& relation : relations_) {
        if (ids.contains(relation.source) && ids.contains(relation.target)) {
            view.out_[relation.source].insert({relation.kind, relation.target});
            view.in_[relation.target].insert({relation.kind, relation.source});
            view.relations_.insert(relation);
        }
    }
    view.revision_ = revision_;
    return view;
}

std::set<std::string> EntityGraph::owned_by(std::string_view team) const {
    std::set<std::string> owned;
    for (const auto& [id, entity] : entities_) {
        if (entity.owner_team && *entity.owner_team == team) owned.insert(id);
    }
    return owned;
}

std::optional<std::set<std::string>> EntityGraph::touched_since(std::uint64_t since) const {
    if (since == stamp_) return std::set<std::string>{};
    auto first = std::upper_bound(journal_.begin(), journal_.end(), since,
                                  [](std::uint64_t s, const auto& entry) { return s < entry.first; });
    const bool known = since == journal_base_ ||
                       (first != journal_.begin() && std::prev(first)->first == since);
    if (!known) return std::nullopt;
    std::set<std::string> touched;
    for (auto it = first; it != journal_.end(); ++it) touched.insert(it->second);
    return touched;
}

bool EntityGraph::same_structure(const EntityGraph& other) const {
    return entities_ == other.entities_ && relations_ == other.relations_;
}

bool EntityGraph::operator==(const EntityGraph& other) const {
    return revision_ == other.revision_ && same_structure(other);
}

}  // namespace cie
