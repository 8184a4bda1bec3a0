#include "cie/query_service.hpp"

#include <chrono>
#include <deque>
#include <future>
#include <istream>
#include <ostream>
#include <set>

#include "cie/error.hpp"
#include "cie/impact.hpp"

namespace cie {

using nlohmann::json;

std::string_view to_string(ToolError code) {
    switch (code) {
        case ToolError::parse_error: return "parse_error";
        case ToolError::invalid_request: return "invalid_request";
        case ToolError::unknown_method: return "unknown_method";
        case ToolError::invalid_params: return "invalid_params";
        case ToolError::unknown_id: return "unknown_id";
        case ToolError::internal_error: return "internal_error";
    }
    return "internal_error";
}

const std::vector<std::string>& tool_methods() {
    static const std::vector<std::string> methods{
        "get_environment_health", "get_symptoms",      "get_root_causes",
        "get_blast_radius",       "check_remediation", "get_topology"};
    return methods;
}

namespace {

constexpr std::string_view kNoRootCause = "no active root cause";
constexpr std::size_t kHealthCauseLimit = 5;

struct Failure {
    ToolError code;
    std::string message;
};

[[noreturn]] void fail(ToolError code, std::string message) { throw Failure{code, std::move(message)}; }

std::string dump(const json& j) { return j.dump(-1, ' ', false, json::error_handler_t::replace); }

class Params {
public:
    Params(const json& params, std::initializer_list<std::string_view> allowed) : params_(params) {
        for (const auto& [key, value] : params.items()) {
            bool known = false;
            for (auto name : allowed) known = known || key == name;
            if (!known) fail(ToolError::invalid_params, "unexpected parameter '" + key + "'");
        }
    }

    bool has(const char* key) const { return params_.contains(key) && !params_[key].is_null(); }

    std::string string(const char* key) const {
        const json& v = params_[key];
        if (!v.is_string()) fail(ToolError::invalid_params, std::string(key) + " must be a string");
        return v.get<std::string>();
    }

    std::optional<std::string> optional_string(const char* key) const {
        if (!has(key)) return std::nullopt;
        return string(key);
    }

    std::vector<std::string> strings(const char* key) const {
        const json& v = params_[key];
        if (!v.is_array()) fail(ToolError::invalid_params, std::string(key) + " must be an array of strings");
        std::vector<std::string> out;
        for (const auto& item : v) {
            if (!item.is_string()) fail(ToolError::invalid_params, std::string(key) + " must be an array of strings");
            out.push_back(item.get<std::string>());
        }
        return out;
    }

    bool boolean(const char* key, bool fallback) const {
        if (!has(key)) return fallback;
        if (!params_[key].is_boolean()) fail(ToolError::invalid_params, std::string(key) + " must be a boolean");
        return params_[key].get<bool>();
    }

    std::size_t positive(const char* key, std::size_t fallback) const {
        if (!has(key)) return fallback;
        const json& v = params_[key];
        if (!v.is_number_integer() || v.get<std::int64_t>() < 1) {
            fail(ToolError::invalid_params, std::string(key) + " must be a positive integer");
        }
        return static_cast<std::size_t>(v.get<std::int64_t>());
    }

private:
    const json& params_;
};

Scope read_scope(const Params& p, const Snapshot& s) {
    if (!p.has("scope")) return std::nullopt;
    std::set<std::string> ids;
    for (auto& id : p.strings("scope")) {
        if (!s.topology.contains(id)) fail(ToolError::unknown_id, "scope names unknown entity '" + id + "'");
        ids.insert(std::move(id));
    }
    return ids;
}

ActiveSymptomSet scoped_active(const Snapshot& s, const Scope& scope) {
    if (!scope) return s.active;
    ActiveSymptomSet out;
    out.as_of = s.active.as_of;
    for (const auto& id : s.active.symptoms) {
        if (scope->contains(s.causality.symptom(id).host)) out.symptoms.insert(id);
    }
    return out;
}

Diagnosis scoped_diagnosis(const Snapshot& s, const Scope& scope) {
    if (!scope) return s.diagnosis;
    return localize(s.causality, scoped_active(s, scope), s.options);
}

const RootCauseInstance& require_cause(const Snapshot& s, const std::string& id) {
    if (!s.causality.has_cause(id)) fail(ToolError::unknown_id, "no root cause instance '" + id + "'");
    return s.causality.cause(id);
}

// The cause named in params, else the best supported one; nullptr when healthy.
const RootCauseInstance* target_cause(const Params& p, const Snapshot& s) {
    if (auto id = p.optional_string("cause")) return &require_cause(s, *id);
    const RankedCause* best = s.diagnosis.best();
    if (!best || best->explained.empty()) return nullptr;
    return &s.causality.cause(best->cause);
}

json entity_json(const Entity& e) {
    return {{"id", e.id},
            {"name", e.name},
            {"type", e.type},
            {"team", e.owner_team ? json(*e.owner_team) : json(nullptr)},
            {"metadata", e.metadata}};
}

json owner_of(const Snapshot& s, const std::string& entity) {
    if (!s.topology.contains(entity)) return nullptr;
    const auto& team = s.topology.entity(entity).owner_team;
    return team ? json(*team) : json(nullptr);
}

json environment_health(const Params& p, const Snapshot& s) {
    const Scope scope = read_scope(p, s);
    HealthReport report = assess_health(s.causality, scoped_active(s, scope), scope, s.options);
    std::set<std::string> affected;
    for (const auto& id : report.active.symptoms) affected.insert(s.causality.symptom(id).host);
    json causes = json::array();
    for (const auto& c : report.supported_causes) {
        if (causes.size() == kHealthCauseLimit) break;
        causes.push_back({{"cause", c.cause},
                          {"entity", s.causality.cause(c.cause).host},
                          {"posterior", c.posterior}});
    }
    json violations = json::array();
    for (const auto& c : s.constraints) {
        auto it = s.observed.find(c.attribute);
        if (it == s.observed.end()) continue;
        if (scope && !scope->contains(s.attributes.node(c.attribute).host)) continue;
        if (!compare(it->second, c.op, c.bound)) {
            violations.push_back({{"attribute", c.attribute},
                                  {"op", to_string(c.op)},
                                  {"bound", c.bound},
                                  {"value", it->second}});
        }
    }
    const bool healthy = report.verdict == Verdict::healthy;
    return {{"verdict", to_string(report.verdict)},
            {"message", healthy ? std::string("no active incidents")
                                : "active incident: " + std::to_string(report.active.symptoms.size()) +
                                      " symptoms on " + std::to_string(affected.size()) + " entities"},
            {"active_symptoms", report.active.symptoms},
            {"affected_entities", affected},
            {"supported_causes", std::move(causes)},
            {"supported_cause_count", report.supported_causes.size()},
            {"constraint_violations", std::move(violations)},
            {"as_of", report.active.as_of}};
}

json symptoms(const Params& p, const Snapshot& s) {
    Scope scope = read_scope(p, s);
    if (auto entity = p.optional_string("entity")) {
        if (!s.topology.contains(*entity)) fail(ToolError::unknown_id, "no entity '" + *entity + "'");
        std::set<std::string> only{*entity};
        if (scope && !scope->contains(*entity)) only.clear();
        scope = std::move(only);
    }
    const bool active_only = p.boolean("active_only", true);
    json list = json::array();
    for (const auto& [id, instance] : s.causality.symptoms()) {
        if (scope && !scope->contains(instance.host)) continue;
        const bool active = s.active.symptoms.contains(id);
        if (active_only && !active) continue;
        json activation = {{"kind", instance.activation.kind == Activation::Kind::event ? "event" : "threshold"}};
        if (instance.activation.kind == Activation::Kind::threshold) {
            activation["attribute"] = instance.activation.attribute;
            activation["op"] = to_string(instance.activation.op);
            activation["value"] = instance.activation.threshold;
        }
        json item = {{"id", id}, {"symptom", instance.symptom}, {"entity", instance.host},
                     {"active", active}, {"activation", std::move(activation)}};
        if (instance.activation.kind == Activation::Kind::threshold) {
            auto it = s.observed.find(attribute_id(instance.host, instance.activation.attribute));
            item["observed"] = it == s.observed.end() ? json(nullptr) : json(it->second);
        }
        list.push_back(std::move(item));
    }
    json payload = {{"symptoms", list}, {"count", list.size()}};
    if (list.empty() && active_only) payload["message"] = "no active symptoms";
    return payload;
}

json root_causes(const Params& p, const Snapshot& s) {
    const Scope scope = read_scope(p, s);
    const auto team = p.optional_string("team");
    const std::size_t limit = p.positive("limit", 5);
    const Diagnosis diagnosis = scoped_diagnosis(s, scope);

    json causes = json::array();
    for (const auto& r : diagnosis.ranked) {
        if (r.explained.empty()) continue;
        if (causes.size() == limit) break;
        const RootCauseInstance& instance = s.causality.cause(r.cause);
        causes.push_back({{"cause", r.cause},
                          {"root_cause", instance.cause},
                          {"entity", instance.host},
                          {"owner_team", owner_of(s, instance.host)},
                          {"posterior", r.posterior},
                          {"log_score", r.log_score},
                          {"prior", r.prior},
                          {"explained", r.explained},
                          {"unexplained", r.unexplained}});
    }
    const bool healthy = scoped_active(s, scope).empty();
    json payload = {{"verdict", healthy ? "healthy" : "degraded"}, {"causes", causes}};
    payload["best"] = causes.empty() ? json(nullptr) : causes[0]["cause"];
    if (causes.empty()) payload["message"] = kNoRootCause;
    if (team) {
        payload["team"] = *team;
        bool responsible = false;
        bool owns_cause = false;
        json impacted = json::array();
        if (!causes.empty()) {
            const std::string best = causes[0]["cause"];
            const BlastRadius radius = blast_radius(s.topology, s.causality, best);
            responsible = ownership_check(radius, *team);
            owns_cause = owner_of(s, radius.host) == json(*team);
            for (const auto& e : radius.direct) {
                if (auto it = radius.owners.find(e); it != radius.owners.end() && it->second == *team) {
                    impacted.push_back(e);
                }
            }
        }
        payload["team_responsible"] = responsible;
        payload["team_owns_cause"] = owns_cause;
        payload["team_entities_impacted"] = std::move(impacted);
    }
    return payload;
}

json no_cause_payload() {
    return {{"cause", nullptr},
            {"verdict", "healthy"},
            {"message", kNoRootCause},
            {"direct", json::array()},
            {"transitive", json::array()},
            {"downstream", json::array()},
            {"impacted_teams", json::array()}};
}

json blast(const Params& p, const Snapshot& s) {
    const RootCauseInstance* cause = target_cause(p, s);
    if (!cause) return no_cause_payload();
    const BlastRadius radius = blast_radius(s.topology, s.causality, cause->id);
    json payload = to_json(radius);
    std::set<std::string> downstream = radius.transitive;
    downstream.erase(radius.host);
    payload["downstream"] = downstream;
    payload["verdict"] = "degraded";
    payload["multi_team"] = radius.impacted_teams.size() > 1;
    return payload;
}

json remediation(const Params& p, const Snapshot& s) {
    std::vector<std::string> targets;
    if (p.has("target") == p.has("targets")) {
        fail(ToolError::invalid_params, "give exactly one of target or targets");
    }
    if (p.has("target")) {
        targets.push_back(p.string("target"));
    } else {
        targets = p.strings("targets");
        if (targets.empty()) fail(ToolError::invalid_params, "targets must not be empty");
    }
    for (const auto& t : targets) {
        if (!s.topology.contains(t)) fail(ToolError::unknown_id, "no entity '" + t + "'");
    }
    const RootCauseInstance* cause = target_cause(p, s);
    if (!cause) {
        return {{"cause", nullptr}, {"message", kNoRootCause}, {"verdicts", json::array()}};
    }
    const BlastRadius radius = blast_radius(s.topology, s.causality, cause->id);
    json verdicts = json::array();
    bool all = true;
    for (const auto& t : targets) {
        RemediationVerdict v = remediation_alignment(radius, s.topology, t);
        all = all && v.aligned;
        verdicts.push_back(to_json(v));
    }
    return {{"cause", cause->id}, {"host", cause->host}, {"all_aligned", all}, {"verdicts", std::move(verdicts)}};
}

json topology(const Params& p, const Snapshot& s) {
    const Scope scope = read_scope(p, s);
    std::optional<RelationKind> kind;
    if (auto text = p.optional_string("kind")) {
        kind = parse_relation_kind(*text);
        if (!kind) fail(ToolError::invalid_params, "kind must be conn, layer or comp");
    }
    Direction direction = Direction::both;
    if (auto text = p.optional_string("direction")) {
        auto parsed = parse_direction(*text);
        if (!parsed) fail(ToolError::invalid_params, "direction must be out, in or both");
        direction = *parsed;
    }
    if (auto entity = p.optional_string("entity")) {
        if (!s.topology.contains(*entity)) fail(ToolError::unknown_id, "no entity '" + *entity + "'");
        json neighbors = json::array();
        auto add = [&](const EntityGraph::Adjacency& adjacency, std::string_view side) {
            for (const auto& [k, other] : adjacency) {
                if (kind && k != *kind) continue;
                if (scope && !scope->contains(other)) continue;
                neighbors.push_back({{"id", other}, {"kind", to_string(k)}, {"direction", side}});
            }
        };
        if (direction != Direction::in) add(s.topology.outgoing(*entity), "out");
        if (direction != Direction::out) add(s.topology.incoming(*entity), "in");
        return {{"entity", entity_json(s.topology.entity(*entity))}, {"neighbors", std::move(neighbors)}};
    }
    json entities = json::array();
    for (const auto& [id, e] : s.topology.entities()) {
        if (scope && !scope->contains(id)) continue;
        entities.push_back(entity_json(e));
    }
    json relations = json::array();
    for (const auto& r : s.topology.relations()) {
        if (kind && r.kind != *kind) continue;
        if (scope && !(scope->contains(r.source) && scope->contains(r.target))) continue;
        relations.push_back(to_json(r));
    }
    return {{"entities", std::move(entities)}, {"relations", std::move(relations)}};
}

json dispatch(const std::string& method, const json& params, const Snapshot& s) {
    if (method == "get_environment_health") return environment_health(Params(params, {"scope"}), s);
    if (method == "get_symptoms") return symptoms(Params(params, {"scope", "entity", "active_only"}), s);
    if (method == "get_root_causes") return root_causes(Params(params, {"scope", "team", "limit"}), s);
    if (method == "get_blast_radius") return blast(Params(params, {"cause"}), s);
    if (method == "check_remediation") {
        return remediation(Params(params, {"cause", "target", "targets"}), s);
    }
    if (method == "get_topology") {
        return topology(Params(params, {"entity", "kind", "direction", "scope"}), s);
    }
    fail(ToolError::unknown_method, "unknown method '" + method + "'");
}

json error_response(const json& id, ToolError code, const std::string& message,
                    std::optional<std::uint64_t> revision = std::nullopt) {
    json r = {{"id", id},
              {"status", "error"},
              {"error", {{"code", to_string(code)}, {"message", message}}}};
    if (revision) r["revision"] = *revision;
    return r;
}

}  // namespace

json QueryService::hello() {
    return {{"hello", {{"schema", kToolSchema}, {"methods", tool_methods()}}}};
}

json QueryService::handle(const json& request) const {
    const std::shared_ptr<const Snapshot> snapshot = engine_.snapshot();
    return handle(request, *snapshot);
}

json QueryService::handle(const json& request, const Snapshot& snapshot) const {
    if (!request.is_object()) {
        return error_response(nullptr, ToolError::invalid_request, "request must be an object");
    }
    const json id = request.contains("id") ? request["id"] : json(nullptr);
    try {
        if (!request.contains("method") || !request["method"].is_string()) {
            fail(ToolError::invalid_request, "request needs a string 'method'");
        }
        for (const auto& [key, value] : request.items()) {
            if (key != "id" && key != "method" && key != "params") {
                fail(ToolError::invalid_request, "unexpected request field '" + key + "'");
            }
        }
        static const json kEmpty = json::object();
        const json& params = request.contains("params") && !request["params"].is_null()
                                 ? request["params"]
                                 : kEmpty;
        if (!params.is_object()) fail(ToolError::invalid_params, "params must be an object");
        json payload = dispatch(request["method"].get<std::string>(), params, snapshot);
        return {{"id", id}, {"status", "ok"}, {"revision", snapshot.revision}, {"payload", std::move(payload)}};
    } catch (const Failure& f) {
        return error_response(id, f.code, f.message, snapshot.revision);
    } catch (const Error& e) {
        const ToolError code = e.code() == ErrorCode::unknown_id ? ToolError::unknown_id
                                                                 : ToolError::invalid_params;
        return error_response(id, code, e.what(), snapshot.revision);
    } catch (const std::exception& e) {
        return error_response(id, ToolError::internal_error, e.what(), snapshot.revision);
    }
}

std::string QueryService::handle_line(std::string_view line) const {
    try {
        json request = json::parse(line);
        return dump(handle(request));
    } catch (const json::parse_error& e) {
        return dump(error_response(nullptr, ToolError::parse_error, e.what()));
    } catch (const std::exception& e) {
        return dump(error_response(nullptr, ToolError::internal_error, e.what()));
    }
}

std::size_t QueryService::serve(std::istream& in, std::ostream& out, std::size_t workers,
                                const std::atomic<bool>* stop) const {
    out << dump(hello()) << '\n' << std::flush;
    std::size_t written = 0;
    std::deque<std::future<std::string>> pending;
    auto write_front = [&] {
        out << pending.front().get() << '\n';
        pending.pop_front();
        ++written;
    };

    std::string line;
    while (!(stop && stop->load()) && std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (workers <= 1) {
            out << handle_line(line) << '\n' << std::flush;
            ++written;
            continue;
        }
        pending.push_back(std::async(std::launch::async, [this, line] { return handle_line(line); }));
        if (pending.size() >= workers) write_front();
        // Nothing more buffered: the client may be waiting on these answers.
        if (in.rdbuf()->in_avail() <= 0) {
            while (!pending.empty()) write_front();
            out << std::flush;
        }
    }
    while (!pending.empty()) write_front();
    out << std::flush;
    return written;
}

}  // namespace cie
