#include "cie/environment.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cie/error.hpp"
#include "json_util.hpp"

namespace cie {

using nlohmann::json;

namespace {

std::string indexed(std::string_view array, std::size_t i) {
    return std::string(array) + "[" + std::to_string(i) + "]";
}

AttributeFunction parse_function(const json& j, const std::string& at) {
    using detail::number_field;
    const std::string kind_text = detail::string_field(j, "kind", at);
    auto kind = parse_function_kind(kind_text);
    if (!kind) {
        throw Error(ErrorCode::parse_error, "unknown function kind '" + kind_text + "'", at + ".kind");
    }
    AttributeFunction fn;
    fn.kind = *kind;
    if (fn.kind == FunctionKind::affine) {
        fn.a = j.contains("a") ? number_field(j, "a", at) : 1.0;
        fn.b = j.contains("b") ? number_field(j, "b", at) : 0.0;
    } else if (fn.kind == FunctionKind::lookup) {
        const json& table = detail::array_field(j, "table", at);
        for (std::size_t i = 0; i < table.size(); ++i) {
            const json& point = table[i];
            if (!point.is_array() || point.size() != 2 || !point[0].is_number() || !point[1].is_number()) {
                throw Error(ErrorCode::parse_error, "expected [x, y]", indexed(at + ".table", i));
            }
            fn.table.emplace_back(point[0].get<double>(), point[1].get<double>());
        }
    }
    return fn;
}

}  // namespace

Environment environment_from_json(const json& doc, const Codebook& codebook) {
    using detail::array_field;
    using detail::string_field;

    detail::require_schema(doc, "env/1");

    std::vector<Entity> entities;
    std::map<std::string, std::string> types;
    const json& jentities = array_field(doc, "entities", "");
    for (std::size_t i = 0; i < jentities.size(); ++i) {
        const std::string at = indexed("entities", i);
        const json& je = jentities[i];
        Entity entity;
        entity.id = string_field(je, "id", at);
        if (entity.id.empty()) throw Error(ErrorCode::invalid_argument, "empty id", at + ".id");
        entity.name = je.contains("name") ? string_field(je, "name", at) : entity.id;
        entity.type = string_field(je, "type", at);
        if (!codebook.has_type(entity.type)) {
            throw Error(ErrorCode::unknown_type,
                        "entity '" + entity.id + "' has undeclared type '" + entity.type + "'",
                        at + ".type");
        }
        if (je.contains("team") && !je["team"].is_null()) {
            entity.owner_team = string_field(je, "team", at);
        }
        if (je.contains("metadata")) {
            const json& meta = je["metadata"];
            if (!meta.is_object()) throw Error(ErrorCode::parse_error, "expected object", at + ".metadata");
            for (const auto& [key, value] : meta.items()) {
                if (!value.is_string()) {
                    throw Error(ErrorCode::parse_error, "metadata values must be strings",
                                at + ".metadata." + key);
                }
                entity.metadata.emplace(key, value.get<std::string>());
            }
        }
        if (!types.emplace(entity.id, entity.type).second) {
            throw Error(ErrorCode::duplicate_id, "entity '" + entity.id + "' declared twice", at + ".id");
        }
        entities.push_back(std::move(entity));
    }

    std::vector<Relation> relations;
    std::set<Relation> seen;
    const json& jrelations = array_field(doc, "relations", "");
    for (std::size_t i = 0; i < jrelations.size(); ++i) {
        const std::string at = indexed("relations", i);
        Relation relation;
        relation.source = string_field(jrelations[i], "source", at);
        relation.target = string_field(jrelations[i], "target", at);
        const std::string kind = string_field(jrelations[i], "kind", at);
        auto parsed = parse_relation_kind(kind);
        if (!parsed) {
            throw Error(ErrorCode::parse_error, "relation kind must be conn, layer or comp", at + ".kind");
        }
        relation.kind = *parsed;
        if (!types.contains(relation.source)) {
            throw Error(ErrorCode::dangling_endpoint,
                        "relation source '" + relation.source + "' is not a declared entity",
                        at + ".source");
        }
        if (!types.contains(relation.target)) {
            throw Error(ErrorCode::dangling_endpoint,
                        "relation target '" + relation.target + "' is not a declared entity",
                        at + ".target");
        }
        if (relation.source == relation.target) {
            throw Error(ErrorCode::invalid_argument, "relation from an entity to itself", at);
        }
        if (!seen.insert(relation).second) {
            throw Error(ErrorCode::duplicate_id, "duplicate relation", at);
        }
        relations.push_back(std::move(relation));
    }

    Environment env{EntityGraph::assemble(std::move(entities), std::move(relations)), {}, {}};

    if (doc.contains("attributes")) {
        const json& jattrs = array_field(doc, "attributes", "");
        for (std::size_t i = 0; i < jattrs.size(); ++i) {
            const std::string at = indexed("attributes", i);
            const json& ja = jattrs[i];
            AttributeNode node;
            node.host = string_field(ja, "entity", at);
            node.name = string_field(ja, "name", at);
            auto type = types.find(node.host);
            if (type == types.end()) {
                throw Error(ErrorCode::dangling_endpoint,
                            "attribute host '" + node.host + "' is not a declared entity",
                            at + ".entity");
            }
            if (!codebook.declares_attribute(type->second, node.name)) {
                throw Error(ErrorCode::unknown_reference,
                            "type '" + type->second + "' declares no attribute '" + node.name + "'",
                            at + ".name");
            }
            node.id = attribute_id(node.host, node.name);
            node.unit = ja.contains("unit") ? string_field(ja, "unit", at) : "";
            if (ja.contains("value") && !ja["value"].is_null()) {
                node.value = detail::number_field(ja, "value", at);
            }
            node.baseline = ja.contains("baseline") ? detail::number_field(ja, "baseline", at)
                                                    : node.value.value_or(0.0);
            if (ja.contains("overridable")) node.overridable = detail::bool_field(ja, "overridable", at);
            try {
                env.attributes.add_attribute(std::move(node));
            } catch (const Error& e) {
                throw Error(e.code(), e.detail(), at);
            }
        }
    }

    if (doc.contains("attribute_dependencies")) {
        const json& jdeps = array_field(doc, "attribute_dependencies", "");
        for (std::size_t i = 0; i < jdeps.size(); ++i) {
            const std::string at = indexed("attribute_dependencies", i);
            AttributeDependency dep;
            dep.from = string_field(jdeps[i], "from", at);
            dep.to = string_field(jdeps[i], "to", at);
            dep.function = parse_function(detail::field(jdeps[i], "function", at), at + ".function");
            for (const std::string* end : {&dep.from, &dep.to}) {
                if (!env.attributes.contains(*end)) {
                    throw Error(ErrorCode::dangling_endpoint,
                                "attribute '" + *end + "' is not declared", at);
                }
            }
            try {
                env.attributes.add_dependency(std::move(dep));
            } catch (const Error& e) {
                throw Error(e.code(), e.detail(), at);
            }
        }
    }
    if (doc.contains("constraints")) {
        const json& jcons = array_field(doc, "constraints", "");
        for (std::size_t i = 0; i < jcons.size(); ++i) {
            const std::string at = indexed("constraints", i);
            Constraint c;
            c.attribute = string_field(jcons[i], "attribute", at);
            if (!env.attributes.contains(c.attribute)) {
                throw Error(ErrorCode::dangling_endpoint, "attribute '" + c.attribute + "' is not declared",
                            at + ".attribute");
            }
            const std::string op = string_field(jcons[i], "op", at);
            auto parsed = parse_comparator(op);
            if (!parsed) throw Error(ErrorCode::parse_error, "unknown comparator '" + op + "'", at + ".op");
            c.op = *parsed;
            c.bound = detail::number_field(jcons[i], "bound", at);
            env.constraints.push_back(std::move(c));
        }
    }
    return env;
}

Environment load_environment(std::string_view document, const Codebook& codebook) {
    return environment_from_json(detail::parse_document(document), codebook);
}

json environment_to_json(const Environment& env) {
    json doc = json::object();
    doc["schema"] = "env/1";
    json entities = json::array();
    for (const auto& [id, e] : env.topology.entities()) {
        json je = {{"id", e.id}, {"name", e.name}, {"type", e.type}};
        je["team"] = e.owner_team ? json(*e.owner_team) : json(nullptr);
        je["metadata"] = e.metadata;
        entities.push_back(std::move(je));
    }
    doc["entities"] = std::move(entities);
    json relations = json::array();
    for (const auto& r : env.topology.relations()) {
        relations.push_back({{"source", r.source}, {"target", r.target}, {"kind", to_string(r.kind)}});
    }
    doc["relations"] = std::move(relations);
    json attributes = json::array();
    for (const auto& [id, n] : env.attributes.nodes()) {
        json ja = {{"entity", n.host}, {"name", n.name}, {"unit", n.unit}, {"baseline", n.baseline}};
        ja["value"] = n.value ? json(*n.value) : json(nullptr);
        if (n.overridable) ja["overridable"] = true;
        attributes.push_back(std::move(ja));
    }
    doc["attributes"] = std::move(attributes);
    json deps = json::array();
    for (const auto& d : env.attributes.dependencies()) {
        json fn = {{"kind", to_string(d.function.kind)}};
        if (d.function.kind == FunctionKind::affine) {
            fn["a"] = d.function.a;
            fn["b"] = d.function.b;
        } else if (d.function.kind == FunctionKind::lookup) {
            json table = json::array();
            for (const auto& [x, y] : d.function.table) table.push_back({x, y});
            fn["table"] = std::move(table);
        }
        deps.push_back({{"from", d.from}, {"to", d.to}, {"function", std::move(fn)}});
    }
    doc["attribute_dependencies"] = std::move(deps);
    json constraints = json::array();
    for (const auto& c : env.constraints) {
        constraints.push_back({{"attribute", c.attribute}, {"op", to_string(c.op)}, {"bound", c.bound}});
    }
    doc["constraints"] = std::move(constraints);
    return doc;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::invalid_argument, "cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace cie
