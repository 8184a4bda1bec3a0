#include "cie/scenario_harness.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <random>
#include <sstream>

#include "cie/error.hpp"
#include "cie/query_service.hpp"
#include "json_util.hpp"

namespace cie {

using nlohmann::json;

std::string_view to_string(ScenarioMode mode) {
    return mode == ScenarioMode::healthy ? "healthy" : "active_fault";
}

std::string_view to_string(RubricRule rule) {
    switch (rule) {
        case RubricRule::health: return "health";
        case RubricRule::impact: return "impact";
        case RubricRule::root_cause: return "root_cause";
        case RubricRule::ownership: return "ownership";
        case RubricRule::remediation: return "remediation";
        case RubricRule::multi_team: return "multi_team";
    }
    return "health";
}

std::string_view to_string(UseCase use_case) {
    switch (use_case) {
        case UseCase::health_assessment: return "health_assessment";
        case UseCase::impact_analysis: return "impact_analysis";
        case UseCase::root_cause_diagnosis: return "root_cause_diagnosis";
        case UseCase::remediation: return "remediation";
    }
    return "health_assessment";
}

UseCase use_case_of(RubricRule rule) {
    switch (rule) {
        case RubricRule::health: return UseCase::health_assessment;
        case RubricRule::impact:
        case RubricRule::multi_team: return UseCase::impact_analysis;
        case RubricRule::root_cause:
        case RubricRule::ownership: return UseCase::root_cause_diagnosis;
        case RubricRule::remediation: return UseCase::remediation;
    }
    return UseCase::health_assessment;
}

std::string_view method_for(RubricRule rule) {
    switch (rule) {
        case RubricRule::health: return "get_environment_health";
        case RubricRule::impact:
        case RubricRule::multi_team: return "get_blast_radius";
        case RubricRule::root_cause:
        case RubricRule::ownership: return "get_root_causes";
        case RubricRule::remediation: return "check_remediation";
    }
    return "get_environment_health";
}

std::optional<RubricRule> rubric_rule_for(std::string_view query_id) {
    static const std::map<std::string, RubricRule, std::less<>> table{
        {"Q1", RubricRule::health},    {"Q2", RubricRule::impact},
        {"Q3", RubricRule::root_cause}, {"Q4", RubricRule::ownership},
        {"Q5", RubricRule::remediation}, {"Q6", RubricRule::multi_team}};
    auto it = table.find(query_id);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

namespace {

std::string indexed(std::string_view array, std::size_t i) {
    return std::string(array) + "[" + std::to_string(i) + "]";
}

std::vector<std::string> string_list(const json& obj, std::string_view key, const std::string& at) {
    std::vector<std::string> out;
    if (!obj.contains(key)) return out;
    const json& arr = detail::array_field(obj, key, at);
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (!arr[i].is_string()) {
            throw Error(ErrorCode::parse_error, "expected string", detail::join_location(at, key) + "[" +
                                                                       std::to_string(i) + "]");
        }
        out.push_back(arr[i].get<std::string>());
    }
    return out;
}

std::string resolve(const std::string& base_dir, const std::string& ref) {
    std::filesystem::path path(ref);
    if (path.is_absolute() || base_dir.empty()) return path.string();
    return (std::filesystem::path(base_dir) / path).string();
}

}  // namespace

Scenario load_scenario(std::string_view document, const std::string& base_dir) {
    using detail::string_field;
    const json doc = detail::parse_document(document);
    detail::require_schema(doc, "scenario/1");

    Scenario s;
    s.name = string_field(doc, "name", "");
    s.environment_path = resolve(base_dir, string_field(doc, "environment", ""));
    s.codebook_path = resolve(base_dir, string_field(doc, "codebook", ""));
    const std::string mode = string_field(doc, "mode", "");
    if (mode == "healthy") {
        s.mode = ScenarioMode::healthy;
    } else if (mode == "active_fault") {
        s.mode = ScenarioMode::active_fault;
    } else {
        throw Error(ErrorCode::parse_error, "mode must be healthy or active_fault", "mode");
    }
    if (doc.contains("seed")) {
        const json& seed = doc["seed"];
        if (!seed.is_number_unsigned()) throw Error(ErrorCode::parse_error, "expected unsigned integer", "seed");
        s.seed = seed.get<std::uint64_t>();
    }
    if (doc.contains("baseline_ticks")) {
        const json& ticks = doc["baseline_ticks"];
        if (!ticks.is_number_integer() || ticks.get<Tick>() < 1) {
            throw Error(ErrorCode::parse_error, "expected positive integer", "baseline_ticks");
        }
        s.baseline_ticks = ticks.get<Tick>();
    }
    if (doc.contains("jitter")) {
        s.jitter = detail::number_field(doc, "jitter", "");
        if (!(s.jitter >= 0.0 && s.jitter < 1.0)) {
            throw Error(ErrorCode::invalid_argument, "jitter must lie in [0,1)", "jitter");
        }
    }

    const bool has_fault = doc.contains("fault") && !doc["fault"].is_null();
    if (s.mode == ScenarioMode::active_fault && !has_fault) {
        throw Error(ErrorCode::schema_mismatch, "active_fault mode requires a fault", "fault");
    }
    if (s.mode == ScenarioMode::healthy && has_fault) {
        throw Error(ErrorCode::schema_mismatch, "healthy mode must not declare a fault", "fault");
    }
    if (has_fault) {
        const json& jf = doc["fault"];
        FaultSpec fault;
        fault.cause = string_field(jf, "cause", "fault");
        if (jf.contains("ticks")) {
            const json& ticks = jf["ticks"];
            if (!ticks.is_number_integer() || ticks.get<Tick>() < 1) {
                throw Error(ErrorCode::parse_error, "expected positive integer", "fault.ticks");
            }
            fault.ticks = ticks.get<Tick>();
        }
        if (jf.contains("overrides")) {
            const json& arr = detail::array_field(jf, "overrides", "fault");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string at = indexed("fault.overrides", i);
                fault.overrides.push_back(
                    {string_field(arr[i], "attribute", at), detail::number_field(arr[i], "value", at)});
            }
        }
        if (jf.contains("events")) {
            const json& arr = detail::array_field(jf, "events", "fault");
            for (std::size_t i = 0; i < arr.size(); ++i) {
                const std::string at = indexed("fault.events", i);
                fault.events.emplace_back(string_field(arr[i], "entity", at),
                                          string_field(arr[i], "symptom", at));
            }
        }
        s.fault = std::move(fault);
    }

    if (doc.contains("expected")) {
        const json& je = doc["expected"];
        if (!je.is_object()) throw Error(ErrorCode::parse_error, "expected object", "expected");
        if (je.contains("cause")) s.expected.cause = string_field(je, "cause", "expected");
        for (auto& d : string_list(je, "downstream", "expected")) s.expected.downstream.insert(std::move(d));
        s.expected.aligned_targets = string_list(je, "aligned_targets", "expected");
        s.expected.misaligned_targets = string_list(je, "misaligned_targets", "expected");
    }
    if (s.mode == ScenarioMode::active_fault && s.expected.cause.empty()) {
        throw Error(ErrorCode::schema_mismatch, "active_fault mode requires expected.cause", "expected");
    }

    std::set<std::string> ids;
    const json& jq = detail::array_field(doc, "queries", "");
    for (std::size_t i = 0; i < jq.size(); ++i) {
        const std::string at = indexed("queries", i);
        ScenarioQuery q;
        q.id = string_field(jq[i], "id", at);
        q.text = jq[i].contains("text") ? string_field(jq[i], "text", at) : "";
        auto rule = rubric_rule_for(q.id);
        if (!rule) {
            throw Error(ErrorCode::schema_mismatch, "query '" + q.id + "' maps to no rubric rule", at + ".id");
        }
        if (!ids.insert(q.id).second) {
            throw Error(ErrorCode::duplicate_id, "query '" + q.id + "' listed twice", at + ".id");
        }
        q.rule = *rule;
        if (s.mode == ScenarioMode::healthy && q.rule == RubricRule::remediation) {
            throw Error(ErrorCode::schema_mismatch, "remediation is not posed under the healthy baseline",
                        at + ".id");
        }
        q.request = detail::field(jq[i], "request", at);
        const std::string method = string_field(q.request, "method", at + ".request");
        if (method != method_for(q.rule)) {
            throw Error(ErrorCode::schema_mismatch,
                        "query '" + q.id + "' must use " + std::string(method_for(q.rule)),
                        at + ".request.method");
        }
        if (q.request.contains("params") && !q.request["params"].is_object()) {
            throw Error(ErrorCode::parse_error, "expected object", at + ".request.params");
        }
        if (q.rule == RubricRule::ownership &&
            !(q.request.contains("params") && q.request["params"].contains("team"))) {
            throw Error(ErrorCode::schema_mismatch, "ownership query needs a team", at + ".request.params");
        }
        s.queries.push_back(std::move(q));
    }
    return s;
}

Scenario read_scenario(const std::string& path) {
    const std::string base = std::filesystem::path(path).parent_path().string();
    return load_scenario(read_file(path), base);
}

ScenarioFiles load_scenario_files(const Scenario& scenario) {
    auto codebook = std::make_shared<const Codebook>(load_codebook(read_file(scenario.codebook_path)));
    Environment environment = load_environment(read_file(scenario.environment_path), *codebook);
    return {std::move(codebook), std::move(environment)};
}

namespace {

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) : rng_(seed) {}

    // Uniform in [0,1) from the top 53 bits, identical on every platform.
    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 rng_;
};

void emit_tick(Tick tick, AttributeGraph& attributes, Sampler& sampler, double jitter,
               const std::vector<AttributeOverride>& overrides, std::vector<Observation>& out) {
    for (const auto& [id, node] : attributes.nodes()) {
        if (!attributes.is_source(id)) continue;
        double value = node.baseline * (1.0 + jitter * (2.0 * sampler.uniform() - 1.0));
        if (node.unit == "ratio") value = std::clamp(value, 0.0, 1.0);
        attributes.set_value(id, value);
    }
    for (const auto& o : overrides) attributes.set_value(o.attribute, o.value);
    const AttributeGraph::Values values = attributes.evaluate();
    for (const auto& [id, value] : values) {
        const AttributeNode& node = attributes.node(id);
        out.push_back(Observation::sample(tick, node.host, node.name, value));
    }
}

}  // namespace

std::vector<Observation> baseline_observations(const Scenario& scenario, const Environment& environment,
                                               std::uint64_t seed) {
    AttributeGraph attributes = environment.attributes;
    Sampler sampler(seed);
    std::vector<Observation> out;
    for (Tick t = 0; t < scenario.baseline_ticks; ++t) {
        emit_tick(t, attributes, sampler, scenario.jitter, {}, out);
    }
    return out;
}

std::vector<Observation> inject_fault(const Scenario& scenario, const Environment& environment,
                                      const CausalityGraph& graph, std::uint64_t seed) {
    if (scenario.mode != ScenarioMode::active_fault || !scenario.fault) {
        throw Error(ErrorCode::precondition_failed, "scenario '" + scenario.name + "' injects no fault");
    }
    const FaultSpec& fault = *scenario.fault;
    if (!graph.has_cause(fault.cause)) {
        throw Error(ErrorCode::unknown_id, "fault cause '" + fault.cause + "' is not in the causality graph");
    }
    for (const auto& o : fault.overrides) {
        if (!environment.attributes.contains(o.attribute)) {
            throw Error(ErrorCode::unknown_id, "override names unknown attribute '" + o.attribute + "'");
        }
        if (!environment.attributes.is_source(o.attribute)) {
            throw Error(ErrorCode::invalid_argument, "override target '" + o.attribute + "' is derived");
        }
    }

    AttributeGraph attributes = environment.attributes;
    Sampler sampler(seed);
    std::vector<Observation> out;
    Tick t = 0;
    for (; t < scenario.baseline_ticks; ++t) emit_tick(t, attributes, sampler, scenario.jitter, {}, out);
    for (Tick end = t + fault.ticks; t < end; ++t) {
        emit_tick(t, attributes, sampler, scenario.jitter, fault.overrides, out);
        for (const auto& [entity, symptom] : fault.events) out.push_back(Observation::event(t, entity, symptom));
    }
    return out;
}

std::vector<Observation> scenario_observations(const Scenario& scenario, const Environment& environment,
                                               const CausalityGraph& graph, std::uint64_t seed) {
    if (scenario.mode == ScenarioMode::active_fault) return inject_fault(scenario, environment, graph, seed);
    return baseline_observations(scenario, environment, seed);
}

std::size_t RubricResult::passed() const {
    return static_cast<std::size_t>(
        std::count_if(queries.begin(), queries.end(), [](const QueryOutcome& q) { return q.pass; }));
}

namespace {

std::set<std::string> as_set(const json& j) {
    std::set<std::string> out;
    if (!j.is_array()) return out;
    for (const auto& item : j) {
        if (item.is_string()) out.insert(item.get<std::string>());
    }
    return out;
}

std::string join(const std::set<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
        if (!out.empty()) out += ", ";
        out += item;
    }
    return out;
}

// Fault-mode impact: exactly the expected downstream set.
std::string impact_gap(const Expectations& expected, const json& payload) {
    const std::set<std::string> got = as_set(payload.value("downstream", json::array()));
    std::set<std::string> missing;
    std::set<std::string> extra;
    std::set_difference(expected.downstream.begin(), expected.downstream.end(), got.begin(), got.end(),
                        std::inserter(missing, missing.end()));
    std::set_difference(got.begin(), got.end(), expected.downstream.begin(), expected.downstream.end(),
                        std::inserter(extra, extra.end()));
    std::string reason;
    if (!missing.empty()) reason = "missing downstream entities: " + join(missing);
    if (!extra.empty()) reason += (reason.empty() ? "" : "; ") + std::string("false positives: ") + join(extra);
    return reason;
}

std::string json_string(const json& payload, const char* key) {
    auto it = payload.find(key);
    return it != payload.end() && it->is_string() ? it->get<std::string>() : std::string();
}

// Empty string on pass, else why it failed.
std::string judge_fault(const Scenario& s, const ScenarioQuery& q, const json& payload) {
    switch (q.rule) {
        case RubricRule::health:
            return payload.value("verdict", "") == "degraded" ? "" : "no active incident reported";
        case RubricRule::impact:
            return impact_gap(s.expected, payload);
        case RubricRule::multi_team: {
            std::string gap = impact_gap(s.expected, payload);
            if (!gap.empty()) return gap;
            return as_set(payload.value("impacted_teams", json::array())).size() > 1
                       ? ""
                       : "single team reported for a multi-team incident";
        }
        case RubricRule::root_cause: {
            const std::string best = json_string(payload, "best");
            if (best.empty()) return "no root cause reported";
            return best == s.expected.cause ? "" : "best cause " + best + ", expected " + s.expected.cause;
        }
        case RubricRule::ownership: {
            const std::string best = json_string(payload, "best");
            if (best != s.expected.cause) {
                return best.empty() ? "no root cause reported"
                                    : "best cause " + best + ", expected " + s.expected.cause;
            }
            return payload.value("team_responsible", false) ? "" : "responsibility not attributed to team";
        }
        case RubricRule::remediation: {
            if (json_string(payload, "cause") != s.expected.cause) return "remediation judged against wrong cause";
            const json verdicts = payload.value("verdicts", json::array());
            if (verdicts.empty()) return "no remediation verdicts";
            for (const auto& v : verdicts) {
                const std::string target = json_string(v, "target");
                const bool aligned = v.value("aligned", false);
                const auto& ok = s.expected.aligned_targets;
                const auto& bad = s.expected.misaligned_targets;
                if (std::find(ok.begin(), ok.end(), target) != ok.end()) {
                    if (!aligned) return target + " judged misaligned";
                } else if (std::find(bad.begin(), bad.end(), target) != bad.end()) {
                    if (aligned) return target + " judged aligned";
                } else {
                    return "no expectation for target " + target;
                }
            }
            return "";
        }
    }
    return "unscored";
}

std::string judge_healthy(const ScenarioQuery& q, const json& payload) {
    switch (q.rule) {
        case RubricRule::health:
            return payload.value("verdict", "") == "healthy" ? "" : "incident reported under healthy baseline";
        case RubricRule::impact:
        case RubricRule::multi_team: {
            const std::set<std::string> got = as_set(payload.value("downstream", json::array()));
            if (!got.empty()) return "impacted services reported under healthy baseline: " + join(got);
            return payload.contains("cause") && payload["cause"].is_null() ? "" : "cause named under healthy baseline";
        }
        case RubricRule::root_cause:
        case RubricRule::ownership: {
            const std::string best = json_string(payload, "best");
            if (!best.empty()) return "hallucinated root cause " + best;
            if (q.rule == RubricRule::ownership && payload.value("team_responsible", false)) {
                return "responsibility attributed under healthy baseline";
            }
            return "";
        }
        case RubricRule::remediation:
            return "remediation is not posed under the healthy baseline";
    }
    return "unscored";
}

}  // namespace

QueryOutcome score_response(const Scenario& scenario, const ScenarioQuery& query, const json& response) {
    QueryOutcome outcome;
    outcome.id = query.id;
    outcome.rule = query.rule;
    outcome.response = response;
    if (response.value("status", "") != "ok" || !response.contains("payload")) {
        const json error = response.value("error", json::object());
        outcome.reason = "service error: " + error.value("code", std::string("unknown")) + ": " +
                         error.value("message", std::string());
        return outcome;
    }
    const json& payload = response["payload"];
    outcome.reason = scenario.mode == ScenarioMode::active_fault ? judge_fault(scenario, query, payload)
                                                                  : judge_healthy(query, payload);
    outcome.pass = outcome.reason.empty();
    if (outcome.pass) outcome.reason = "ok";
    return outcome;
}

RubricResult run_scenario(const Scenario& scenario, Engine& engine,
                          const std::vector<Observation>& observations) {
    engine.clear_observations();
    engine.ingest(observations);
    const QueryService service(engine);

    RubricResult result;
    result.scenario = scenario.name;
    result.mode = scenario.mode;
    result.seed = scenario.seed;
    for (const auto& q : scenario.queries) {
        json request = {{"id", q.id}, {"method", q.request["method"]}};
        request["params"] = q.request.value("params", json::object());
        const std::string line = request.dump();

        const auto start = std::chrono::steady_clock::now();
        const std::string answer = service.handle_line(line);
        const auto stop = std::chrono::steady_clock::now();

        QueryOutcome outcome = score_response(scenario, q, json::parse(answer));
        outcome.tool_calls = 1;
        outcome.request_bytes = line.size();
        outcome.response_bytes = answer.size();
        outcome.wall_ms = std::chrono::duration<double, std::milli>(stop - start).count();
        CategoryTotal& total = result.totals[use_case_of(q.rule)];
        ++total.total;
        if (outcome.pass) ++total.passed;
        result.queries.push_back(std::move(outcome));
    }
    return result;
}

RubricResult run_scenario(const Scenario& scenario, Engine& engine, std::uint64_t seed) {
    const auto snapshot = engine.snapshot();
    const Environment environment{snapshot->topology, snapshot->attributes, snapshot->constraints};
    auto observations = scenario_observations(scenario, environment, snapshot->causality, seed);
    RubricResult result = run_scenario(scenario, engine, observations);
    result.seed = seed;
    return result;
}

std::vector<MetricsRecord> measure_footprint(const Scenario& scenario, const RubricResult& result) {
    std::vector<MetricsRecord> out;
    const std::string run = result.scenario + "#" + std::to_string(result.seed);
    for (std::size_t i = 0; i < result.queries.size(); ++i) {
        const QueryOutcome& q = result.queries[i];
        std::string method;
        for (const auto& sq : scenario.queries) {
            if (sq.id == q.id) method = sq.request.value("method", "");
        }
        out.push_back({run, result.scenario, q.id, method, q.tool_calls, q.request_bytes, q.response_bytes,
                       q.wall_ms, q.pass});
    }
    return out;
}

std::string format_metrics(const MetricsRecord& r) {
    const json j = {{"schema", "metrics/1"},
                    {"run", r.run},
                    {"scenario", r.scenario},
                    {"query", r.query},
                    {"method", r.method},
                    {"tool_calls", r.tool_calls},
                    {"request_bytes", r.request_bytes},
                    {"response_bytes", r.response_bytes},
                    {"wall_ms", r.wall_ms},
                    {"pass", r.pass}};
    return j.dump();
}

MetricsRecord parse_metrics(std::string_view line) {
    const json j = detail::parse_document(line);
    detail::require_schema(j, "metrics/1");
    auto count = [&](const char* key) {
        const json& v = detail::field(j, key, "");
        if (!v.is_number_unsigned()) throw Error(ErrorCode::parse_error, "expected unsigned integer", key);
        return v.get<std::size_t>();
    };
    MetricsRecord r;
    r.run = detail::string_field(j, "run", "");
    r.scenario = detail::string_field(j, "scenario", "");
    r.query = detail::string_field(j, "query", "");
    r.method = detail::string_field(j, "method", "");
    r.tool_calls = count("tool_calls");
    r.request_bytes = count("request_bytes");
    r.response_bytes = count("response_bytes");
    r.wall_ms = detail::number_field(j, "wall_ms", "");
    r.pass = detail::bool_field(j, "pass", "");
    return r;
}

json rubric_report(const RubricResult& result) {
    json queries = json::array();
    for (const auto& q : result.queries) {
        queries.push_back({{"query", q.id},
                           {"rule", to_string(q.rule)},
                           {"use_case", to_string(use_case_of(q.rule))},
                           {"pass", q.pass},
                           {"reason", q.reason}});
    }
    json totals = json::object();
    for (const auto& [use_case, t] : result.totals) {
        totals[std::string(to_string(use_case))] = {
            {"passed", t.passed}, {"total", t.total}, {"accuracy", t.accuracy()}};
    }
    return {{"scenario", result.scenario},
            {"mode", to_string(result.mode)},
            {"seed", result.seed},
            {"passed", result.passed()},
            {"total", result.queries.size()},
            {"queries", std::move(queries)},
            {"accuracy_by_use_case", std::move(totals)}};
}

std::string rubric_table(const RubricResult& result) {
    std::ostringstream out;
    out << result.scenario << " (" << to_string(result.mode) << ", seed " << result.seed << ")\n";
    for (const auto& q : result.queries) {
        char line[160];
        std::snprintf(line, sizeof line, "  %-4s %-22s %-4s ", q.id.c_str(),
                      std::string(to_string(use_case_of(q.rule))).c_str(), q.pass ? "PASS" : "FAIL");
        out << line << q.reason << '\n';
    }
    for (const auto& [use_case, t] : result.totals) {
        out << "  " << to_string(use_case) << ": " << t.passed << "/" << t.total << '\n';
    }
    out << "  total: " << result.passed() << "/" << result.queries.size() << '\n';
    return out.str();
}

}  // namespace cie
