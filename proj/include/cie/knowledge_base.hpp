#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cie/topology.hpp"

namespace cie {

struct EntityTypeDef {
    std::string name;
    std::vector<std::string> attributes;

    bool operator==(const EntityTypeDef&) const = default;
};

struct LocalSymptom {
    std::string symptom;
    double probability = 1.0;

    bool operator==(const LocalSymptom&) const = default;
};

inline constexpr double kDefaultPrior = 0.01;

struct RootCauseDef {
    std::string name;
    std::string applies_to;
    std::vector<LocalSymptom> local_symptoms;
    double prior = kDefaultPrior;

    bool operator==(const RootCauseDef&) const = default;
};

enum class Comparator { gt, ge, lt, le, eq, ne };

std::string_view to_string(Comparator op);
std::optional<Comparator> parse_comparator(std::string_view text);
bool compare(double value, Comparator op, double bound);

/// How a symptom instance becomes active: either asserted directly by an
/// event observation, or by a threshold predicate over one of its host's
/// attributes.
struct Activation {
    enum class Kind { event, threshold };

    Kind kind = Kind::event;
    std::string attribute;
    Comparator op = Comparator::gt;
    double threshold = 0.0;

    bool holds(double value) const { return kind == Kind::threshold && compare(value, op, threshold); }
    bool operator==(const Activation&) const = default;
};

struct SymptomDef {
    std::string name;
    std::string applies_to;
    Activation activation;

    bool operator==(const SymptomDef&) const = default;
};

enum class Traversal { forward, reverse };

std::string_view to_string(Traversal traversal);

/// One-hop symptom -> symptom propagation across a relation. `forward`
/// follows the edge source -> target, `reverse` walks target -> source.
struct PropagationRule {
    std::string id;
    std::string from_symptom;
    RelationKind over = RelationKind::conn;
    Traversal traversal = Traversal::forward;
    std::string to_symptom;
    double attenuation = 1.0;

    bool operator==(const PropagationRule&) const = default;
};

/// Environment-agnostic causal knowledge: entity types, root causes with
/// their local symptoms, symptom activation, and propagation rules.
/// Immutable once built; every reference is resolved at construction.
class Codebook {
public:
    Codebook(std::string version, std::vector<EntityTypeDef> types,
             std::vector<RootCauseDef> root_causes, std::vector<SymptomDef> symptoms,
             std::vector<PropagationRule> rules);

    const std::string& version() const noexcept { return version_; }
    const std::vector<EntityTypeDef>& types() const noexcept { return types_; }
    const std::vector<RootCauseDef>& root_causes() const noexcept { return causes_; }
    const std::vector<SymptomDef>& symptoms() const noexcept { return symptoms_; }
    const std::vector<PropagationRule>& rules() const noexcept { return rules_; }

    bool has_type(std::string_view name) const;
    const EntityTypeDef& type(std::string_view name) const;
    bool declares_attribute(std::string_view type_name, std::string_view attribute) const;

    const RootCauseDef& cause(std::string_view name) const;
    const SymptomDef& symptom(std::string_view name) const;
    bool has_symptom(std::string_view name) const;
    const PropagationRule& rule(std::string_view id) const;

    /// Causes applicable to a type, in declaration order.
    std::vector<RootCauseDef> causes_for_type(std::string_view type_name) const;
    std::vector<SymptomDef> symptoms_for_type(std::string_view type_name) const;
    std::vector<PropagationRule> rules_for(std::string_view symptom, RelationKind kind) const;
    /// Indices into rules() of every rule leaving `symptom`, declaration order.
    const std::vector<std::size_t>& rules_from(std::string_view symptom) const;

    /// Stable digest of the canonical rendering; two codebooks with equal
    /// definitions share a fingerprint.
    std::uint64_t fingerprint() const noexcept { return fingerprint_; }

    bool operator==(const Codebook& other) const;

private:
    void validate() const;
    void index();

    std::string version_;
    std::vector<EntityTypeDef> types_;
    std::vector<RootCauseDef> causes_;
    std::vector<SymptomDef> symptoms_;
    std::vector<PropagationRule> rules_;

    std::map<std::string, std::size_t, std::less<>> type_index_;
    std::map<std::string, std::size_t, std::less<>> cause_index_;
    std::map<std::string, std::size_t, std::less<>> symptom_index_;
    std::map<std::string, std::size_t, std::less<>> rule_index_;
    std::map<std::string, std::vector<std::size_t>, std::less<>> rules_by_source_;
    std::uint64_t fingerprint_ = 0;
};

Codebook load_codebook(std::string_view document);
Codebook codebook_from_json(const nlohmann::json& document);
nlohmann::json codebook_to_json(const Codebook& codebook);
std::string render_codebook(const Codebook& codebook);

}  // namespace cie
