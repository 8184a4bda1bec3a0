#include "cie/inference.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "cie/error.hpp"
#include "json_util.hpp"

namespace cie {

using nlohmann::json;

std::string format_observation(const Observation& o) {
    json j = json::object();
    j["tick"] = o.tick;
    j["entity"] = o.entity;
    if (const auto* sample = std::get_if<AttributeSample>(&o.kind)) {
        j["attribute"] = sample->attribute;
        j["value"] = sample->value;
    } else {
        j["symptom"] = std::get<SymptomEvent>(o.kind).symptom;
    }
    return j.dump();
}

Observation parse_observation(std::string_view line) {
    const json j = detail::parse_document(line);
    if (!j.is_object()) throw Error(ErrorCode::parse_error, "observation must be an object");
    Observation o;
    const json& tick = detail::field(j, "tick", "");
    if (!tick.is_number_integer()) throw Error(ErrorCode::parse_error, "expected integer", "tick");
    o.tick = tick.get<Tick>();
    o.entity = detail::string_field(j, "entity", "");
    const bool has_attribute = j.contains("attribute");
    const bool has_symptom = j.contains("symptom");
    if (has_attribute == has_symptom) {
        throw Error(ErrorCode::parse_error, "observation needs exactly one of attribute or symptom");
    }
    if (has_attribute) {
        o.kind = AttributeSample{detail::string_field(j, "attribute", ""),
                                 detail::number_field(j, "value", "")};
    } else {
        o.kind = SymptomEvent{detail::string_field(j, "symptom", "")};
    }
    return o;
}

std::vector<Observation> parse_observation_stream(std::string_view text) {
    std::vector<Observation> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        auto end = text.find('\n');
        std::string_view line = text.substr(0, end);
        text = end == std::string_view::npos ? std::string_view{} : text.substr(end + 1);
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        try {
            out.push_back(parse_observation(line));
        } catch (const Error& e) {
            throw Error(e.code(), e.detail(), "line " + std::to_string(line_no));
        }
    }
    return out;
}

std::string format_observation_stream(const std::vector<Observation>& observations) {
    std::string out;
    for (const auto& o : observations) {
        out += format_observation(o);
        out += '\n';
    }
    return out;
}

namespace {

void check_scope(const CausalityGraph& graph, const Scope& scope) {
    if (!scope) return;
    for (const auto& id : *scope) {
        if (!graph.has_entity(id)) throw Error(ErrorCode::unknown_id, "scope names unknown entity '" + id + "'");
    }
}

}  // namespace

ActiveSymptomSet activate_symptoms(const CausalityGraph& graph,
                                   const std::vector<Observation>& observations, const Scope& scope) {
    check_scope(graph, scope);
    const Codebook& cb = graph.codebook();

    ActiveSymptomSet active;
    // (entity, attribute) -> (tick, value); later entries win ties.
    std::map<std::pair<std::string, std::string>, std::pair<Tick, double>> latest;
    std::set<std::string> asserted;
    for (std::size_t i = 0; i < observations.size(); ++i) {
        const Observation& o = observations[i];
        const std::string where = "observations[" + std::to_string(i) + "]";
        if (!graph.has_entity(o.entity)) {
            throw Error(ErrorCode::unknown_id, "unknown entity '" + o.entity + "'", where);
        }
        const std::string& type = graph.entity_type(o.entity);
        active.as_of = i == 0 ? o.tick : std::max(active.as_of, o.tick);
        if (const auto* sample = std::get_if<AttributeSample>(&o.kind)) {
            if (!cb.declares_attribute(type, sample->attribute)) {
                throw Error(ErrorCode::unknown_reference,
                            "type '" + type + "' declares no attribute '" + sample->attribute + "'",
                            where);
            }
            auto key = std::make_pair(o.entity, sample->attribute);
            auto it = latest.find(key);
            if (it == latest.end() || o.tick >= it->second.first) {
                latest.insert_or_assign(std::move(key), std::make_pair(o.tick, sample->value));
            }
        } else {
            const std::string& name = std::get<SymptomEvent>(o.kind).symptom;
            if (!cb.has_symptom(name) || cb.symptom(name).applies_to != type) {
                throw Error(ErrorCode::unknown_reference,
                            "type '" + type + "' has no symptom '" + name + "'", where);
            }
            asserted.insert(symptom_instance_id(name, o.entity));
        }
    }

    for (const auto& [id, instance] : graph.symptoms()) {
        if (scope && !scope->contains(instance.host)) continue;
        bool on = asserted.contains(id);
        if (!on && instance.activation.kind == Activation::Kind::threshold) {
            auto it = latest.find({instance.host, instance.activation.attribute});
            on = it != latest.end() && instance.activation.holds(it->second.second);
        }
        if (on) active.symptoms.insert(id);
    }
    return active;
}

double RankedCause::score() const { return std::exp(log_score); }

namespace {

RankedCause evaluate_cause(const CausalityGraph& graph, const RootCauseInstance& cause,
                           const ActiveSymptomSet& active, const LocalizeOptions& options) {
    RankedCause ranked;
    ranked.cause = cause.id;
    ranked.prior = cause.prior;
    double total = std::log(cause.prior);
    const double log_leak = std::log(options.leak);
    for (const auto& symptom : active.symptoms) {
        if (auto p = graph.probability(cause.id, symptom)) {
            total += std::log(*p);
            ranked.explained.push_back(symptom);
        } else {
            total += log_leak;
            ranked.unexplained.push_back(symptom);
        }
    }
    ranked.log_score = total;
    return ranked;
}

void check_options(const LocalizeOptions& options) {
    if (!(options.leak > 0.0 && options.leak <= 1.0)) {
        throw Error(ErrorCode::invalid_probability, "leak must lie in (0,1]");
    }
}

}  // namespace

double log_score(const CausalityGraph& graph, std::string_view cause_id, const ActiveSymptomSet& active,
                 const LocalizeOptions& options) {
    check_options(options);
    return evaluate_cause(graph, graph.cause(cause_id), active, options).log_score;
}

double score(const CausalityGraph& graph, std::string_view cause_id, const ActiveSymptomSet& active,
             const LocalizeOptions& options) {
    return std::exp(log_score(graph, cause_id, active, options));
}

Diagnosis localize(const CausalityGraph& graph, const ActiveSymptomSet& active,
                   const LocalizeOptions& options) {
    check_options(options);
    Diagnosis diagnosis;
    if (active.empty()) return diagnosis;

    std::set<std::string> candidates;
    for (const auto& symptom : active.symptoms) {
        for (const auto& edge : graph.edges_to(symptom)) candidates.insert(edge.cause);
    }
    if (candidates.empty() && options.fallback_to_all) {
        for (const auto& [id, c] : graph.causes()) candidates.insert(id);
    }
    for (const auto& id : candidates) {
        diagnosis.ranked.push_back(evaluate_cause(graph, graph.cause(id), active, options));
    }
    std::sort(diagnosis.ranked.begin(), diagnosis.ranked.end(),
              [](const RankedCause& a, const RankedCause& b) {
                  if (a.log_score != b.log_score) return a.log_score > b.log_score;
                  if (a.prior != b.prior) return a.prior > b.prior;
                  return a.cause < b.cause;
              });
    if (!diagnosis.ranked.empty()) {
        const double top = diagnosis.ranked.front().log_score;
        double total = 0.0;
        for (auto& r : diagnosis.ranked) {
            r.posterior = std::exp(r.log_score - top);
            total += r.posterior;
        }
        for (auto& r : diagnosis.ranked) r.posterior /= total;
    }
    return diagnosis;
}

std::string_view to_string(Verdict verdict) {
    return verdict == Verdict::healthy ? "healthy" : "degraded";
}

HealthReport assess_health(const CausalityGraph& graph, ActiveSymptomSet active, const Scope& scope,
                           const LocalizeOptions& options) {
    HealthReport report;
    report.scope = scope;
    report.active = std::move(active);
    if (report.active.empty()) return report;
    report.verdict = Verdict::degraded;
    for (const auto& ranked : localize(graph, report.active, options).ranked) {
        if (!ranked.explained.empty()) report.supported_causes.push_back({ranked.cause, ranked.posterior});
    }
    return report;
}

HealthReport assess_health(const CausalityGraph& graph, const std::vector<Observation>& observations,
                           const Scope& scope, const LocalizeOptions& options) {
    return assess_health(graph, activate_symptoms(graph, observations, scope), scope, options);
}

}  // namespace cie
