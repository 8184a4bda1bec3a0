#include "cie/knowledge_base.hpp"

#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "cie/error.hpp"
#include "json_util.hpp"

namespace cie {

using nlohmann::json;

std::string_view to_string(Comparator op) {
    switch (op) {
        case Comparator::gt: return ">";
        case Comparator::ge: return ">=";
        case Comparator::lt: return "<";
        case Comparator::le: return "<=";
        case Comparator::eq: return "==";
        case Comparator::ne: return "!=";
    }
    return ">";
}

std::optional<Comparator> parse_comparator(std::string_view text) {
    if (text == ">") return Comparator::gt;
    if (text == ">=") return Comparator::ge;
    if (text == "<") return Comparator::lt;
    if (text == "<=") return Comparator::le;
    if (text == "==") return Comparator::eq;
    if (text == "!=") return Comparator::ne;
    return std::nullopt;
}

bool compare(double value, Comparator op, double bound) {
    switch (op) {
        case Comparator::gt: return value > bound;
        case Comparator::ge: return value >= bound;
        case Comparator::lt: return value < bound;
        case Comparator::le: return value <= bound;
        case Comparator::eq: return value == bound;
        case Comparator::ne: return value != bound;
    }
    return false;
}

std::string_view to_string(Traversal traversal) {
    return traversal == Traversal::forward ? "forward" : "reverse";
}

namespace {

bool is_probability(double p) { return std::isfinite(p) && p > 0.0 && p <= 1.0; }

void require_probability(double p, const std::string& what, const std::string& location) {
    if (!is_probability(p)) {
        throw Error(ErrorCode::invalid_probability,
                    what + " " + detail::format_number(p) + " outside (0,1]", location);
    }
}

template <typename Index>
void insert_unique(Index& index, const std::string& name, std::size_t position,
                   const std::string& location) {
    if (name.empty()) throw Error(ErrorCode::invalid_argument, "empty name", location);
    if (!index.emplace(name, position).second) {
        throw Error(ErrorCode::duplicate_id, "'" + name + "' declared twice", location);
    }
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : text) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

const std::vector<std::size_t> kNoRules;

}  // namespace

Codebook::Codebook(std::string version, std::vector<EntityTypeDef> types,
                   std::vector<RootCauseDef> root_causes, std::vector<SymptomDef> symptoms,
                   std::vector<PropagationRule> rules)
    : version_(std::move(version)),
      types_(std::move(types)),
      causes_(std::move(root_causes)),
      symptoms_(std::move(symptoms)),
      rules_(std::move(rules)) {
    index();
    validate();
    fingerprint_ = fnv1a(render_codebook(*this));
}

void Codebook::index() {
    for (std::size_t i = 0; i < types_.size(); ++i) {
        insert_unique(type_index_, types_[i].name, i, "types[" + types_[i].name + "]");
    }
    for (std::size_t i = 0; i < symptoms_.size(); ++i) {
        insert_unique(symptom_index_, symptoms_[i].name, i, "symptoms[" + symptoms_[i].name + "]");
    }
    for (std::size_t i = 0; i < causes_.size(); ++i) {
        insert_unique(cause_index_, causes_[i].name, i, "root_causes[" + causes_[i].name + "]");
    }
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        insert_unique(rule_index_, rules_[i].id, i, "propagation_rules[" + rules_[i].id + "]");
        rules_by_source_[rules_[i].from_symptom].push_back(i);
    }
}

void Codebook::validate() const {
    for (const auto& type : types_) {
        std::set<std::string> seen;
        for (const auto& attribute : type.attributes) {
            if (!seen.insert(attribute).second) {
                throw Error(ErrorCode::duplicate_id, "attribute '" + attribute + "' declared twice",
                            "types[" + type.name + "]");
            }
        }
    }
    for (const auto& symptom : symptoms_) {
        const std::string where = "symptoms[" + symptom.name + "]";
        if (!has_type(symptom.applies_to)) {
            throw Error(ErrorCode::unknown_reference,
                        "applies_to names undeclared type '" + symptom.applies_to + "'", where);
        }
        if (symptom.activation.kind == Activation::Kind::threshold) {
            if (!declares_attribute(symptom.applies_to, symptom.activation.attribute)) {
                throw Error(ErrorCode::unknown_reference,
                            "activation attribute '" + symptom.activation.attribute +
                                "' is not declared on type '" + symptom.applies_to + "'",
                            where);
            }
            if (!std::isfinite(symptom.activation.threshold)) {
                throw Error(ErrorCode::invalid_argument, "threshold must be finite", where);
            }
        }
    }
    for (const auto& cause : causes_) {
        const std::string where = "root_causes[" + cause.name + "]";
        if (!has_type(cause.applies_to)) {
            throw Error(ErrorCode::unknown_reference,
                        "applies_to names undeclared type '" + cause.applies_to + "'", where);
        }
        require_probability(cause.prior, "prior", where);
        std::set<std::string> seen;
        for (const auto& local : cause.local_symptoms) {
            if (!has_symptom(local.symptom)) {
                throw Error(ErrorCode::unknown_reference,
                            "undeclared symptom '" + local.symptom + "'", where);
            }
            if (symptom(local.symptom).applies_to != cause.applies_to) {
                throw Error(ErrorCode::unknown_reference,
                            "local symptom '" + local.symptom + "' applies to '" +
                                symptom(local.symptom).applies_to + "', not '" +
                                cause.applies_to + "'",
                            where);
            }
            if (!seen.insert(local.symptom).second) {
                throw Error(ErrorCode::duplicate_id,
                            "symptom '" + local.symptom + "' listed twice", where);
            }
            require_probability(local.probability, "P(" + local.symptom + "|" + cause.name + ")",
                                where);
        }
    }
    for (const auto& rule : rules_) {
        const std::string where = "propagation_rules[" + rule.id + "]";
        for (const std::string* name : {&rule.from_symptom, &rule.to_symptom}) {
            if (!has_symptom(*name)) {
                throw Error(ErrorCode::unknown_reference, "undeclared symptom '" + *name + "'",
                            where);
            }
        }
        require_probability(rule.attenuation, "attenuation", where);
    }
}

bool Codebook::has_type(std::string_view name) const { return type_index_.contains(name); }

const EntityTypeDef& Codebook::type(std::string_view name) const {
    auto it = type_index_.find(name);
    if (it == type_index_.end()) {
        throw Error(ErrorCode::unknown_type, "type '" + std::string(name) + "' is not declared");
    }
    return types_[it->second];
}

bool Codebook::declares_attribute(std::string_view type_name, std::string_view attribute) const {
    auto it = type_index_.find(type_name);
    if (it == type_index_.end()) return false;
    for (const auto& declared : types_[it->second].attributes) {
        if (declared == attribute) return true;
    }
    return false;
}

const RootCauseDef& Codebook::cause(std::string_view name) const {
    auto it = cause_index_.find(name);
    if (it == cause_index_.end()) {
        throw Error(ErrorCode::unknown_reference, "root cause '" + std::string(name) + "'");
    }
    return causes_[it->second];
}

bool Codebook::has_symptom(std::string_view name) const { return symptom_index_.contains(name); }

const SymptomDef& Codebook::symptom(std::string_view name) const {
    auto it = symptom_index_.find(name);
    if (it == symptom_index_.end()) {
        throw Error(ErrorCode::unknown_reference, "symptom '" + std::string(name) + "'");
    }
    return symptoms_[it->second];
}

const PropagationRule& Codebook::rule(std::string_view id) const {
    auto it = rule_index_.find(id);
    if (it == rule_index_.end()) {
        throw Error(ErrorCode::unknown_reference, "propagation rule '" + std::string(id) + "'");
    }
    return rules_[it->second];
}

std::vector<RootCauseDef> Codebook::causes_for_type(std::string_view type_name) const {
    type(type_name);
    std::vector<RootCauseDef> out;
    for (const auto& cause : causes_) {
        if (cause.applies_to == type_name) out.push_back(cause);
    }
    return out;
}

std::vector<SymptomDef> Codebook::symptoms_for_type(std::string_view type_name) const {
    type(type_name);
    std::vector<SymptomDef> out;
    for (const auto& symptom : symptoms_) {
        if (symptom.applies_to == type_name) out.push_back(symptom);
    }
    return out;
}

std::vector<PropagationRule> Codebook::rules_for(std::string_view symptom_name,
                                                 RelationKind kind) const {
    symptom(symptom_name);
    std::vector<PropagationRule> out;
    for (std::size_t i : rules_from(symptom_name)) {
        if (rules_[i].over == kind) out.push_back(rules_[i]);
    }
    return out;
}

const std::vector<std::size_t>& Codebook::rules_from(std::string_view symptom_name) const {
    auto it = rules_by_source_.find(symptom_name);
    return it == rules_by_source_.end() ? kNoRules : it->second;
}

bool Codebook::operator==(const Codebook& other) const {
    return version_ == other.version_ && types_ == other.types_ && causes_ == other.causes_ &&
           symptoms_ == other.symptoms_ && rules_ == other.rules_;
}

// ---------------------------------------------------------------------------
// File format

Codebook codebook_from_json(const json& doc) {
    using detail::array_field;
    using detail::number_field;
    using detail::string_field;

    detail::require_schema(doc, "codebook/1");
    std::string version = doc.contains("version") ? string_field(doc, "version", "") : "";

    std::vector<EntityTypeDef> types;
    const json& jtypes = array_field(doc, "types", "");
    for (std::size_t i = 0; i < jtypes.size(); ++i) {
        const std::string at = "types[" + std::to_string(i) + "]";
        EntityTypeDef type{string_field(jtypes[i], "name", at), {}};
        if (jtypes[i].contains("attributes")) {
            const json& attrs = array_field(jtypes[i], "attributes", at);
            for (std::size_t k = 0; k < attrs.size(); ++k) {
                if (!attrs[k].is_string()) {
                    throw Error(ErrorCode::parse_error, "expected string",
                                at + ".attributes[" + std::to_string(k) + "]");
                }
                type.attributes.push_back(attrs[k].get<std::string>());
            }
        }
        types.push_back(std::move(type));
    }

    std::vector<SymptomDef> symptoms;
    const json& jsymptoms = array_field(doc, "symptoms", "");
    for (std::size_t i = 0; i < jsymptoms.size(); ++i) {
        const std::string at = "symptoms[" + std::to_string(i) + "]";
        SymptomDef symptom{string_field(jsymptoms[i], "name", at),
                           string_field(jsymptoms[i], "applies_to", at),
                           {}};
        if (jsymptoms[i].contains("activation")) {
            const json& act = jsymptoms[i]["activation"];
            const std::string aat = at + ".activation";
            if (!act.is_object()) throw Error(ErrorCode::parse_error, "expected object", aat);
            const std::string kind = string_field(act, "kind", aat);
            if (kind == "threshold") {
                symptom.activation.kind = Activation::Kind::threshold;
                symptom.activation.attribute = string_field(act, "attribute", aat);
                const std::string op = string_field(act, "op", aat);
                auto parsed = parse_comparator(op);
                if (!parsed) {
                    throw Error(ErrorCode::parse_error, "unknown comparator '" + op + "'",
                                aat + ".op");
                }
                symptom.activation.op = *parsed;
                symptom.activation.threshold = number_field(act, "value", aat);
            } else if (kind != "event") {
                throw Error(ErrorCode::parse_error, "activation kind must be event or threshold",
                            aat + ".kind");
            }
        }
        symptoms.push_back(std::move(symptom));
    }

    std::vector<RootCauseDef> causes;
    const json& jcauses = array_field(doc, "root_causes", "");
    for (std::size_t i = 0; i < jcauses.size(); ++i) {
        const std::string at = "root_causes[" + std::to_string(i) + "]";
        RootCauseDef cause;
        cause.name = string_field(jcauses[i], "name", at);
        cause.applies_to = string_field(jcauses[i], "applies_to", at);
        if (jcauses[i].contains("prior")) cause.prior = number_field(jcauses[i], "prior", at);
        const json& locals = array_field(jcauses[i], "symptoms", at);
        for (std::size_t k = 0; k < locals.size(); ++k) {
            const std::string lat = at + ".symptoms[" + std::to_string(k) + "]";
            cause.local_symptoms.push_back(
                {string_field(locals[k], "symptom", lat), number_field(locals[k], "probability", lat)});
        }
        causes.push_back(std::move(cause));
    }

    std::vector<PropagationRule> rules;
    const json& jrules = array_field(doc, "propagation_rules", "");
    for (std::size_t i = 0; i < jrules.size(); ++i) {
        const std::string at = "propagation_rules[" + std::to_string(i) + "]";
        PropagationRule rule;
        rule.id = string_field(jrules[i], "id", at);
        rule.from_symptom = string_field(jrules[i], "from", at);
        rule.to_symptom = string_field(jrules[i], "to", at);
        const std::string relation = string_field(jrules[i], "relation", at);
        auto kind = parse_relation_kind(relation);
        if (!kind) {
            throw Error(ErrorCode::parse_error, "unknown relation kind '" + relation + "'",
                        at + ".relation");
        }
        rule.over = *kind;
        const std::string traversal = string_field(jrules[i], "traversal", at);
        if (traversal == "forward") {
            rule.traversal = Traversal::forward;
        } else if (traversal == "reverse") {
            rule.traversal = Traversal::reverse;
        } else {
            throw Error(ErrorCode::parse_error, "traversal must be forward or reverse",
                        at + ".traversal");
        }
        rule.attenuation = number_field(jrules[i], "attenuation", at);
        rules.push_back(std::move(rule));
    }

    return Codebook(std::move(version), std::move(types), std::move(causes), std::move(symptoms),
                    std::move(rules));
}

Codebook load_codebook(std::string_view document) {
    return codebook_from_json(detail::parse_document(document));
}

json codebook_to_json(const Codebook& cb) {
    json doc = json::object();
    doc["schema"] = "codebook/1";
    doc["version"] = cb.version();
    json types = json::array();
    for (const auto& type : cb.types()) {
        types.push_back({{"name", type.name}, {"attributes", type.attributes}});
    }
    doc["types"] = std::move(types);

    json causes = json::array();
    for (const auto& cause : cb.root_causes()) {
        json locals = json::array();
        for (const auto& local : cause.local_symptoms) {
            locals.push_back({{"symptom", local.symptom}, {"probability", local.probability}});
        }
        causes.push_back({{"name", cause.name},
                          {"applies_to", cause.applies_to},
                          {"prior", cause.prior},
                          {"symptoms", std::move(locals)}});
    }
    doc["root_causes"] = std::move(causes);

    json symptoms = json::array();
    for (const auto& symptom : cb.symptoms()) {
        json activation;
        if (symptom.activation.kind == Activation::Kind::threshold) {
            activation = {{"kind", "threshold"},
                          {"attribute", symptom.activation.attribute},
                          {"op", to_string(symptom.activation.op)},
                          {"value", symptom.activation.threshold}};
        } else {
            activation = {{"kind", "event"}};
        }
        symptoms.push_back({{"name", symptom.name},
                            {"applies_to", symptom.applies_to},
                            {"activation", std::move(activation)}});
    }
    doc["symptoms"] = std::move(symptoms);

    json rules = json::array();
    for (const auto& rule : cb.rules()) {
        rules.push_back({{"id", rule.id},
                         {"from", rule.from_symptom},
                         {"relation", to_string(rule.over)},
                         {"traversal", to_string(rule.traversal)},
                         {"to", rule.to_symptom},
                         {"attenuation", rule.attenuation}});
    }
    doc["propagation_rules"] = std::move(rules);
    return doc;
}

std::string render_codebook(const Codebook& cb) { return codebook_to_json(cb).dump(2); }

}  // namespace cie
