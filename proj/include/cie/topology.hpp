#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace cie {

/// conn: horizontal call edge (caller -> callee).
/// layer: depending entity -> supporting entity (service -> workload, pod -> node).
/// comp: container -> contained (workload -> pod).
enum class RelationKind { conn, layer, comp };

enum class Direction { out, in, both };

std::string_view to_string(RelationKind kind);
std::optional<RelationKind> parse_relation_kind(std::string_view text);
std::string_view to_string(Direction direction);
std::optional<Direction> parse_direction(std::string_view text);

struct Entity {
    std::string id;
    std::string name;
    std::string type;
    std::optional<std::string> owner_team;
    std::map<std::string, std::string> metadata;

    bool operator==(const Entity&) const = default;
};

struct Relation {
    std::string source;
    std::string target;
    RelationKind kind = RelationKind::conn;

    auto operator<=>(const Relation&) const = default;
};

using Revision = std::uint64_t;

/// Live entity/relationship model. Copies are independent snapshots; every
/// mutation bumps the revision and records which entities it touched so
/// downstream graphs can be refreshed incrementally.
class EntityGraph {
public:
    using EntityMap = std::map<std::string, Entity, std::less<>>;
    using Adjacency = std::set<std::pair<RelationKind, std::string>>;

    /// Builds a graph at revision 0 with an empty journal. Endpoints and
    /// duplicates are checked; callers wanting element locations validate first.
    static EntityGraph assemble(std::vector<Entity> entities, std::vector<Relation> relations);

    void add_entity(Entity entity);
    void remove_entity(std::string_view id);
    void add_relation(Relation relation);
    void remove_relation(const Relation& relation);

    bool contains(std::string_view id) const;
    const Entity& entity(std::string_view id) const;
    const EntityMap& entities() const noexcept { return entities_; }
    const std::set<Relation>& relations() const noexcept { return relations_; }
    std::size_t size() const noexcept { return entities_.size(); }

    /// Ids one matching edge away. `kind` = nullopt matches every kind.
    std::set<std::string> neighbors(std::string_view id, std::optional<RelationKind> kind,
                                    Direction direction) const;
    const Adjacency& outgoing(std::string_view id) const;
    const Adjacency& incoming(std::string_view id) const;

    /// Induced subgraph over `ids`. The view keeps the source revision.
    EntityGraph scope(const std::set<std::string>& ids) const;

    std::set<std::string> owned_by(std::string_view team) const;

    Revision revision() const noexcept { return revision_; }

    /// Process-unique token for the current state. Diverging copies never
    /// share a stamp after their first mutation.
    std::uint64_t stamp() const noexcept { return stamp_; }

    /// Entities whose adjacency or existence changed after the state `since`
    /// was stamped; nullopt when `since` is not in this graph's retained history.
    std::optional<std::set<std::string>> touched_since(std::uint64_t since) const;

    /// Structural equality: same entities and relations, ignoring revision.
    bool same_structure(const EntityGraph& other) const;
    bool operator==(const EntityGraph& other) const;

    static constexpr std::size_t journal_capacity = 4096;

private:
    void begin_mutation();
    void record(std::string id);
    const Entity& require(std::string_view id) const;

    EntityMap entities_;
    std::set<Relation> relations_;
    std::map<std::string, Adjacency, std::less<>> out_;
    std::map<std::string, Adjacency, std::less<>> in_;
    Revision revision_ = 0;
    std::uint64_t stamp_ = next_stamp();
    // (stamp of the mutation, touched entity id)
    std::deque<std::pair<std::uint64_t, std::string>> journal_;
    std::uint64_t journal_base_ = stamp_;

    static std::uint64_t next_stamp();
};

}  // namespace cie
