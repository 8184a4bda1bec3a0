#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cie/engine.hpp"
#include "cie/environment.hpp"
#include "cie/inference.hpp"

namespace cie {

enum class ScenarioMode { healthy, active_fault };
enum class RubricRule { health, impact, root_cause, ownership, remediation, multi_team };
enum class UseCase { health_assessment, impact_analysis, root_cause_diagnosis, remediation };

std::string_view to_string(ScenarioMode mode);
std::string_view to_string(RubricRule rule);
std::string_view to_string(UseCase use_case);
UseCase use_case_of(RubricRule rule);
/// The one method a query under this rule is answered with.
std::string_view method_for(RubricRule rule);
/// Fixed query-id to rubric-rule table (Q1..Q6). Unknown ids have no rule.
std::optional<RubricRule> rubric_rule_for(std::string_view query_id);

struct AttributeOverride {
    std::string attribute;  // attribute id, "entity:name"
    double value = 0.0;
};

struct FaultSpec {
    std::string cause;  // root cause instance id
    std::vector<AttributeOverride> overrides;
    std::vector<std::pair<std::string, std::string>> events;  // (entity, symptom)
    Tick ticks = 2;
};

struct Expectations {
    std::string cause;
    std::set<std::string> downstream;
    std::vector<std::string> aligned_targets;
    std::vector<std::string> misaligned_targets;
};

struct ScenarioQuery {
    std::string id;
    std::string text;
    RubricRule rule = RubricRule::health;
    nlohmann::json request;  // {"method", "params"}
};

struct Scenario {
    std::string name;
    std::string environment_path;  // resolved against the scenario file's directory
    std::string codebook_path;
    ScenarioMode mode = ScenarioMode::healthy;
    std::uint64_t seed = 1;
    Tick baseline_ticks = 3;
    double jitter = 0.05;  // relative, on source attributes
    std::optional<FaultSpec> fault;
    Expectations expected;
    std::vector<ScenarioQuery> queries;
};

/// Parses a `scenario/1` document. Relative file refs resolve against `base_dir`.
Scenario load_scenario(std::string_view document, const std::string& base_dir = "");
Scenario read_scenario(const std::string& path);

struct ScenarioFiles {
    std::shared_ptr<const Codebook> codebook;
    Environment environment;
};

ScenarioFiles load_scenario_files(const Scenario& scenario);

/// Baseline traffic: every attribute sampled each tick, source values jittered
/// around their baseline. Deterministic in `seed`.
std::vector<Observation> baseline_observations(const Scenario& scenario, const Environment& environment,
                                               std::uint64_t seed);
/// Baseline followed by fault ticks with the overrides applied and derived
/// attributes re-evaluated. Requires active_fault mode and a known cause.
std::vector<Observation> inject_fault(const Scenario& scenario, const Environment& environment,
                                      const CausalityGraph& graph, std::uint64_t seed);
/// Whichever of the two the scenario's mode calls for.
std::vector<Observation> scenario_observations(const Scenario& scenario, const Environment& environment,
                                               const CausalityGraph& graph, std::uint64_t seed);

struct QueryOutcome {
    std::string id;
    RubricRule rule = RubricRule::health;
    bool pass = false;
    std::string reason;
    nlohmann::json response;
    std::size_t tool_calls = 0;
    std::size_t request_bytes = 0;
    std::size_t response_bytes = 0;
    double wall_ms = 0.0;
};

struct CategoryTotal {
    std::size_t passed = 0;
    std::size_t total = 0;
    double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(passed) / total; }
};

struct RubricResult {
    std::string scenario;
    ScenarioMode mode = ScenarioMode::healthy;
    std::uint64_t seed = 0;
    std::vector<QueryOutcome> queries;
    std::map<UseCase, CategoryTotal> totals;

    std::size_t passed() const;
    bool all_passed() const { return passed() == queries.size(); }
};

/// Replays observations into the engine, issues each scripted query as one
/// service request and scores the response.
RubricResult run_scenario(const Scenario& scenario, Engine& engine,
                          const std::vector<Observation>& observations);
/// Generates the scenario's observations from the engine's own state first.
RubricResult run_scenario(const Scenario& scenario, Engine& engine, std::uint64_t seed);

/// Pure scoring of one response under the scenario's expectations.
QueryOutcome score_response(const Scenario& scenario, const ScenarioQuery& query,
                            const nlohmann::json& response);

struct MetricsRecord {
    std::string run;
    std::string scenario;
    std::string query;
    std::string method;
    std::size_t tool_calls = 0;
    std::size_t request_bytes = 0;
    std::size_t response_bytes = 0;  // stands in for tokens
    double wall_ms = 0.0;
    bool pass = false;

    bool operator==(const MetricsRecord&) const = default;
};

std::vector<MetricsRecord> measure_footprint(const Scenario& scenario, const RubricResult& result);
std::string format_metrics(const MetricsRecord& record);
MetricsRecord parse_metrics(std::string_view line);

nlohmann::json rubric_report(const RubricResult& result);
std::string rubric_table(const RubricResult& result);

}  // namespace cie
