#pragma once

#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cie/knowledge_base.hpp"

namespace cie {

/// Functional forms a dependent attribute may take over its parents.
/// `learned` is reserved in the file format and rejected when added.
enum class FunctionKind { affine, sum, max, lookup, learned };

std::string_view to_string(FunctionKind kind);
std::optional<FunctionKind> parse_function_kind(std::string_view text);

struct AttributeFunction {
    FunctionKind kind = FunctionKind::affine;
    double a = 1.0;  // affine slope
    double b = 0.0;  // affine offset
    /// lookup: (x, y) breakpoints, x strictly increasing, y monotone;
    /// linear between breakpoints and clamped outside them.
    std::vector<std::pair<double, double>> table;

    static AttributeFunction affine(double slope, double offset) {
        return {FunctionKind::affine, slope, offset, {}};
    }
    static AttributeFunction sum() { return {FunctionKind::sum, 1.0, 0.0, {}}; }
    static AttributeFunction max() { return {FunctionKind::max, 1.0, 0.0, {}}; }
    static AttributeFunction lookup(std::vector<std::pair<double, double>> points) {
        return {FunctionKind::lookup, 1.0, 0.0, std::move(points)};
    }

    bool operator==(const AttributeFunction&) const = default;
};

struct AttributeNode {
    std::string id;
    std::string host;
    std::string name;
    std::string unit;
    std::optional<double> value;
    double baseline = 0.0;
    /// Dependents flagged overridable may be perturbed directly.
    bool overridable = false;

    bool operator==(const AttributeNode&) const = default;
};

struct AttributeDependency {
    std::string from;
    std::string to;
    AttributeFunction function;

    bool operator==(const AttributeDependency&) const = default;
};

struct Constraint {
    std::string attribute;
    Comparator op = Comparator::le;
    double bound = 0.0;
};

struct ConstraintViolation {
    Constraint constraint;
    double value = 0.0;
};

struct ValueChange {
    double before = 0.0;
    double after = 0.0;

    bool operator==(const ValueChange&) const = default;
};

struct Perturbation {
    std::string source;
    ValueChange source_change;
    /// Dependents whose value moved by more than the change tolerance.
    std::map<std::string, ValueChange> changes;
};

inline constexpr double kChangeTolerance = 1e-12;

std::string attribute_id(std::string_view entity, std::string_view attribute);

/// Attribute dependency DAG. Cycles are rejected when an edge is added.
class AttributeGraph {
public:
    using Values = std::map<std::string, double>;

    void add_attribute(AttributeNode node);
    void add_dependency(AttributeDependency dependency);
    void set_value(std::string_view id, double value);

    bool contains(std::string_view id) const { return nodes_.find(id) != nodes_.end(); }
    const AttributeNode& node(std::string_view id) const;
    const std::map<std::string, AttributeNode, std::less<>>& nodes() const noexcept { return nodes_; }
    const std::vector<AttributeDependency>& dependencies() const noexcept { return dependencies_; }

    /// Parents in declaration order.
    const std::vector<std::string>& parents(std::string_view id) const;
    const std::vector<std::string>& children(std::string_view id) const;
    bool is_source(std::string_view id) const { return parents(id).empty(); }
    const AttributeFunction* function(std::string_view id) const;

    std::set<std::string> descendants(std::string_view id) const;
    /// Kahn order with lexicographic tie-break.
    std::vector<std::string> topological_order() const;

    Values evaluate() const;
    /// Evaluates along a caller-supplied order, which must be a valid
    /// topological order over every node.
    Values evaluate_in_order(std::span<const std::string> order) const;

    Perturbation propagate_perturbation(std::string_view source, double delta) const;

    std::vector<ConstraintViolation> check_constraints(const std::vector<Constraint>& constraints) const;
    std::vector<ConstraintViolation> check_constraints(const std::vector<Constraint>& constraints,
                                                       const Values& values) const;

    bool operator==(const AttributeGraph& other) const {
        return nodes_ == other.nodes_ && dependencies_ == other.dependencies_;
    }

private:
    double compute(std::string_view id, const Values& values) const;
    bool reaches(const std::string& from, const std::string& to) const;

    std::map<std::string, AttributeNode, std::less<>> nodes_;
    std::vector<AttributeDependency> dependencies_;
    std::map<std::string, std::vector<std::string>, std::less<>> parents_;
    std::map<std::string, std::vector<std::string>, std::less<>> children_;
    std::map<std::string, AttributeFunction, std::less<>> functions_;
};

}  // namespace cie
