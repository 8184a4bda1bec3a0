#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "cie/causality.hpp"

namespace cie {

using Tick = std::int64_t;

struct AttributeSample {
    std::string attribute;
    double value = 0.0;

    bool operator==(const AttributeSample&) const = default;
};

struct SymptomEvent {
    std::string symptom;

    bool operator==(const SymptomEvent&) const = default;
};

struct Observation {
    Tick tick = 0;
    std::string entity;
    std::variant<AttributeSample, SymptomEvent> kind;

    static Observation sample(Tick tick, std::string entity, std::string attribute, double value) {
        return {tick, std::move(entity), AttributeSample{std::move(attribute), value}};
    }
    static Observation event(Tick tick, std::string entity, std::string symptom) {
        return {tick, std::move(entity), SymptomEvent{std::move(symptom)}};
    }

    bool operator==(const Observation&) const = default;
};

/// One line of the observation stream; keys are emitted in a fixed order so
/// equal observations always serialize to identical bytes.
std::string format_observation(const Observation& observation);
Observation parse_observation(std::string_view line);
std::vector<Observation> parse_observation_stream(std::string_view text);
std::string format_observation_stream(const std::vector<Observation>& observations);

using Scope = std::optional<std::set<std::string>>;

struct ActiveSymptomSet {
    std::set<std::string> symptoms;
    Tick as_of = 0;

    bool empty() const noexcept { return symptoms.empty(); }
    bool operator==(const ActiveSymptomSet&) const = default;
};

/// Validates observations against the causality graph's entity types and
/// returns the symptom instances they activate: asserted by an event, or
/// whose threshold holds on the latest sample of the named attribute.
ActiveSymptomSet activate_symptoms(const CausalityGraph& graph,
                                   const std::vector<Observation>& observations,
                                   const Scope& scope = std::nullopt);

inline constexpr double kDefaultLeak = 1e-3;

struct LocalizeOptions {
    /// Factor applied for an active symptom the candidate has no edge to.
    double leak = kDefaultLeak;
    /// Score every cause when no cause explains any active symptom.
    bool fallback_to_all = true;
};

struct RankedCause {
    std::string cause;
    double posterior = 0.0;  // normalized over the candidate set
    double log_score = 0.0;  // log P(r) + sum of log factors
    double prior = 0.0;
    std::vector<std::string> explained;
    std::vector<std::string> unexplained;

    double score() const;  // exp(log_score)
};

struct Diagnosis {
    std::vector<RankedCause> ranked;

    const RankedCause* best() const { return ranked.empty() ? nullptr : &ranked.front(); }
};

/// log(P(r) * prod over active s of q(s, r)), q = P(s|r) on an edge, else leak.
double log_score(const CausalityGraph& graph, std::string_view cause_id,
                 const ActiveSymptomSet& active, const LocalizeOptions& options = {});
/// Unnormalized P(S+|r) P(r); the value localize ranks by.
double score(const CausalityGraph& graph, std::string_view cause_id, const ActiveSymptomSet& active,
             const LocalizeOptions& options = {});

/// Ranks candidate causes (those with an edge to some active symptom) by
/// score, ties broken by higher prior then cause id. Empty input yields an
/// empty diagnosis.
Diagnosis localize(const CausalityGraph& graph, const ActiveSymptomSet& active,
                   const LocalizeOptions& options = {});

enum class Verdict { healthy, degraded };

std::string_view to_string(Verdict verdict);

struct SupportedCause {
    std::string cause;
    double posterior = 0.0;
};

struct HealthReport {
    Scope scope;
    ActiveSymptomSet active;
    std::vector<SupportedCause> supported_causes;
    Verdict verdict = Verdict::healthy;
};

HealthReport assess_health(const CausalityGraph& graph, const std::vector<Observation>& observations,
                           const Scope& scope = std::nullopt, const LocalizeOptions& options = {});
/// Same, from an already activated symptom set.
HealthReport assess_health(const CausalityGraph& graph, ActiveSymptomSet active, const Scope& scope,
                           const LocalizeOptions& options = {});

}  // namespace cie
