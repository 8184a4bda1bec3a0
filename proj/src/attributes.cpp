#include "cie/attributes.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <queue>

#include "cie/error.hpp"

namespace cie {

std::string_view to_string(FunctionKind kind) {
    switch (kind) {
        case FunctionKind::affine: return "affine";
        case FunctionKind::sum: return "sum";
        case FunctionKind::max: return "max";
        case FunctionKind::lookup: return "lookup";
        case FunctionKind::learned: return "learned";
    }
    return "affine";
}

std::optional<FunctionKind> parse_function_kind(std::string_view text) {
    if (text == "affine") return FunctionKind::affine;
    if (text == "sum") return FunctionKind::sum;
    if (text == "max") return FunctionKind::max;
    if (text == "lookup") return FunctionKind::lookup;
    if (text == "learned") return FunctionKind::learned;
    return std::nullopt;
}

std::string attribute_id(std::string_view entity, std::string_view attribute) {
    std::string id(entity);
    id += ':';
    id += attribute;
    return id;
}

namespace {

const std::vector<std::string> kNone;

bool single_parent(FunctionKind kind) { return kind == FunctionKind::affine || kind == FunctionKind::lookup; }

void validate_lookup(const AttributeFunction& fn, const std::string& where) {
    const auto& t = fn.table;
    if (t.empty()) throw Error(ErrorCode::invalid_argument, "lookup table is empty", where);
    bool rising = true;
    bool falling = true;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (!std::isfinite(t[i].first) || !std::isfinite(t[i].second)) {
            throw Error(ErrorCode::invalid_argument, "lookup breakpoints must be finite", where);
        }
        if (i == 0) continue;
        if (!(t[i].first > t[i - 1].first)) {
            throw Error(ErrorCode::invalid_argument, "lookup x values must strictly increase", where);
        }
        rising = rising && t[i].second >= t[i - 1].second;
        falling = falling && t[i].second <= t[i - 1].second;
    }
    if (!rising && !falling) {
        throw Error(ErrorCode::invalid_argument, "lookup table is not monotone", where);
    }
}

double lookup(const std::vector<std::pair<double, double>>& table, double x) {
    if (x <= table.front().first) return table.front().second;
    if (x >= table.back().first) return table.back().second;
    auto hi = std::upper_bound(table.begin(), table.end(), x,
                               [](double v, const auto& point) { return v < point.first; });
    auto lo = std::prev(hi);
    const double t = (x - lo->first) / (hi->first - lo->first);
    return lo->second + t * (hi->second - lo->second);
}

}  // namespace

void AttributeGraph::add_attribute(AttributeNode node) {
    if (node.id.empty()) node.id = attribute_id(node.host, node.name);
    if (nodes_.find(node.id) != nodes_.end()) {
        throw Error(ErrorCode::duplicate_id, "attribute '" + node.id + "' already present");
    }
    std::string id = node.id;
    nodes_.emplace(std::move(id), std::move(node));
}

void AttributeGraph::set_value(std::string_view id, double value) {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::unknown_id, "no attribute '" + std::string(id) + "'");
    it->second.value = value;
}

const AttributeNode& AttributeGraph::node(std::string_view id) const {
    auto it = nodes_.find(id);
    if (it == nodes_.end()) throw Error(ErrorCode::unknown_id, "no attribute '" + std::string(id) + "'");
    return it->second;
}

const std::vector<std::string>& AttributeGraph::parents(std::string_view id) const {
    node(id);
    auto it = parents_.find(id);
    return it == parents_.end() ? kNone : it->second;
}

const std::vector<std::string>& AttributeGraph::children(std::string_view id) const {
    node(id);
    auto it = children_.find(id);
    return it == children_.end() ? kNone : it->second;
}

const AttributeFunction* AttributeGraph::function(std::string_view id) const {
    auto it = functions_.find(id);
    return it == functions_.end() ? nullptr : &it->second;
}

bool AttributeGraph::reaches(const std::string& from, const std::string& to) const {
    if (from == to) return true;
    std::set<std::string> seen{from};
    std::vector<std::string> stack{from};
    while (!stack.empty()) {
        std::string current = std::move(stack.back());
        stack.pop_back();
        auto it = children_.find(current);
        if (it == children_.end()) continue;
        for (const auto& child : it->second) {
            if (child == to) return true;
            if (seen.insert(child).second) stack.push_back(child);
        }
    }
    return false;
}

void AttributeGraph::add_dependency(AttributeDependency dep) {
    const std::string where = "attribute_dependencies[" + dep.from + " -> " + dep.to + "]";
    const AttributeNode& parent = node(dep.from);
    const AttributeNode& child = node(dep.to);
    if (reaches(dep.to, dep.from)) {
        throw Error(ErrorCode::cycle_detected, "edge would close a cycle", where);
    }
    const FunctionKind kind = dep.function.kind;
    if (kind == FunctionKind::learned) {
        throw Error(ErrorCode::invalid_argument,
                    "learned functions are reserved and cannot be evaluated", where);
    }
    if (kind == FunctionKind::lookup) validate_lookup(dep.function, where);
    if (kind == FunctionKind::affine && (!std::isfinite(dep.function.a) || !std::isfinite(dep.function.b))) {
        throw Error(ErrorCode::invalid_argument, "affine coefficients must be finite", where);
    }
    if ((kind == FunctionKind::sum || kind == FunctionKind::max) && parent.unit != child.unit) {
        throw Error(ErrorCode::invalid_argument,
                    "unit '" + parent.unit + "' does not match '" + child.unit + "'", where);
    }
    const auto& existing = parents_[dep.to];
    if (std::find(existing.begin(), existing.end(), dep.from) != existing.end()) {
        throw Error(ErrorCode::duplicate_id, "dependency declared twice", where);
    }
    if (auto fn = functions_.find(dep.to); fn != functions_.end()) {
        if (single_parent(fn->second.kind) || single_parent(kind)) {
            throw Error(ErrorCode::invalid_argument,
                        std::string(to_string(kind)) + " dependents take exactly one parent", where);
        }
        if (fn->second.kind != kind) {
            throw Error(ErrorCode::invalid_argument,
                        "all parents of '" + dep.to + "' must share one function", where);
        }
    }
    parents_[dep.to].push_back(dep.from);
    children_[dep.from].push_back(dep.to);
    functions_.emplace(dep.to, dep.function);
    dependencies_.push_back(std::move(dep));
}

std::set<std::string> AttributeGraph::descendants(std::string_view id) const {
    node(id);
    std::set<std::string> out;
    std::vector<std::string> stack{std::string(id)};
    while (!stack.empty()) {
        std::string current = std::move(stack.back());
        stack.pop_back();
        auto it = children_.find(current);
        if (it == children_.end()) continue;
        for (const auto& child : it->second) {
            if (out.insert(child).second) stack.push_back(child);
        }
    }
    return out;
}

std::vector<std::string> AttributeGraph::topological_order() const {
    std::map<std::string, std::size_t> indegree;
    for (const auto& [id, n] : nodes_) indegree[id] = 0;
    for (const auto& [id, ps] : parents_) indegree[id] = ps.size();
    std::priority_queue<std::string, std::vector<std::string>, std::greater<>> ready;
    for (const auto& [id, d] : indegree) {
        if (d == 0) ready.push(id);
    }
    std::vector<std::string> order;
    order.reserve(nodes_.size());
    while (!ready.empty()) {
        std::string id = ready.top();
        ready.pop();
        if (auto it = children_.find(id); it != children_.end()) {
            for (const auto& child : it->second) {
                if (--indegree[child] == 0) ready.push(child);
            }
        }
        order.push_back(std::move(id));
    }
    if (order.size() != nodes_.size()) {
        throw Error(ErrorCode::cycle_detected, "attribute dependencies contain a cycle");
    }
    return order;
}

double AttributeGraph::compute(std::string_view id, const Values& values) const {
    const AttributeFunction& fn = functions_.find(id)->second;
    const auto& ps = parents_.find(id)->second;
    auto value_of = [&](const std::string& parent) {
        auto it = values.find(parent);
        if (it == values.end()) {
            throw Error(ErrorCode::invalid_argument,
                        "'" + parent + "' evaluated after its dependent '" + std::string(id) + "'");
        }
        return it->second;
    };
    switch (fn.kind) {
        case FunctionKind::affine: return fn.a * value_of(ps.front()) + fn.b;
        case FunctionKind::lookup: return lookup(fn.table, value_of(ps.front()));
        case FunctionKind::sum: {
            double total = 0.0;
            for (const auto& p : ps) total += value_of(p);
            return total;
        }
        case FunctionKind::max: {
            double best = value_of(ps.front());
            for (const auto& p : ps) best = std::max(best, value_of(p));
            return best;
        }
        case FunctionKind::learned: break;
    }
    throw Error(ErrorCode::invalid_argument, "learned functions cannot be evaluated");
}

AttributeGraph::Values AttributeGraph::evaluate_in_order(std::span<const std::string> order) const {
    if (order.size() != nodes_.size()) {
        throw Error(ErrorCode::invalid_argument, "order must list every attribute exactly once");
    }
    Values values;
    for (const auto& id : order) {
        const AttributeNode& n = node(id);
        if (values.contains(id)) {
            throw Error(ErrorCode::invalid_argument, "'" + id + "' listed twice in order");
        }
        if (is_source(id)) {
            if (!n.value) {
                throw Error(ErrorCode::missing_value, "source attribute has no value", id);
            }
            values.emplace(id, *n.value);
        } else {
            values.emplace(id, compute(id, values));
        }
    }
    return values;
}

AttributeGraph::Values AttributeGraph::evaluate() const {
    const auto order = topological_order();
    return evaluate_in_order(order);
}

Perturbation AttributeGraph::propagate_perturbation(std::string_view source, double delta) const {
    const AttributeNode& origin = node(source);
    if (!is_source(source) && !origin.overridable) {
        throw Error(ErrorCode::invalid_argument,
                    "'" + std::string(source) + "' is a dependent and not overridable");
    }
    const Values before = evaluate();
    Values after = before;
    Perturbation result;
    result.source = std::string(source);
    result.source_change = {before.at(result.source), before.at(result.source) + delta};
    after[result.source] = result.source_change.after;

    const std::set<std::string> downstream = descendants(source);
    for (const auto& id : topological_order()) {
        if (!downstream.contains(id)) continue;
        after[id] = compute(id, after);
        const double old_value = before.at(id);
        if (std::abs(after[id] - old_value) > kChangeTolerance) {
            result.changes.emplace(id, ValueChange{old_value, after[id]});
        }
    }
    return result;
}

std::vector<ConstraintViolation> AttributeGraph::check_constraints(
    const std::vector<Constraint>& constraints, const Values& values) const {
    std::vector<ConstraintViolation> violations;
    for (const auto& c : constraints) {
        node(c.attribute);
        auto it = values.find(c.attribute);
        if (it == values.end()) {
            throw Error(ErrorCode::missing_value, "no value for attribute", c.attribute);
        }
        if (!compare(it->second, c.op, c.bound)) violations.push_back({c, it->second});
    }
    return violations;
}

std::vector<ConstraintViolation> AttributeGraph::check_constraints(
    const std::vector<Constraint>& constraints) const {
    if (constraints.empty()) return {};
    return check_constraints(constraints, evaluate());
}

}  // namespace cie
