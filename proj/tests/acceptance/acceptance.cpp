// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cie/attributes.hpp"
#include "cie/causality.hpp"
#include "cie/engine.hpp"
#include "cie/impact.hpp"
#include "cie/inference.hpp"
#include "cie/query_service.hpp"
#include "cie/scenario_harness.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_models.hpp"

using namespace cie;
using namespace cie::testing;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

/// Collects the first few violations of a criterion.
class Tally {
public:
    void expect(bool ok, const std::string& what) {
        ++checks_;
        if (ok) return;
        ++failures_;
        if (notes_.size() < 3) notes_.push_back(what);
    }
    void note(std::string text) { summary_ = std::move(text); }
    bool ok() const { return failures_ == 0; }
    std::string describe() const {
        std::string out = summary_;
        if (!out.empty()) out += "; ";
        out += std::to_string(checks_) + " checks";
        if (failures_) out += ", " + std::to_string(failures_) + " failed";
        for (const auto& n : notes_) out += " | " + n;
        return out;
    }

private:
    std::size_t checks_ = 0;
    std::size_t failures_ = 0;
    std::vector<std::string> notes_;
    std::string summary_;
};

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// ---------------------------------------------------------------------------

void rubric(Tally& v) {
    const auto t0 = Clock::now();
    std::string summary;
    for (const Scenario& scenario : {fault_scenario(), healthy_scenario()}) {
        auto files = load_scenario_files(scenario);
        Engine engine(std::move(files.environment), files.codebook);
        const RubricResult r = run_scenario(scenario, engine, scenario.seed);
        const std::size_t want = scenario.mode == ScenarioMode::active_fault ? 6 : 3;
        v.expect(r.queries.size() == want && r.all_passed(),
                 scenario.name + " scored " + std::to_string(r.passed()) + "/" + std::to_string(r.queries.size()));
        for (const auto& q : r.queries) v.expect(q.pass, scenario.name + " " + q.id + ": " + q.reason);
        summary += scenario.name + " " + std::to_string(r.passed()) + "/" + std::to_string(r.queries.size()) + ", ";
    }
    const double elapsed = ms_since(t0);
    v.expect(elapsed < 5000.0, "took " + std::to_string(elapsed) + " ms");
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.0f ms", elapsed);
    v.note(summary + buf);
}

void inference_oracle(Tally& v) {
    std::size_t graphs = 0;
    for (std::uint64_t seed = 0; seed < 600; ++seed) {
        Rng rng(seed ^ 0xacce55);
        const auto cb = random_bipartite_codebook(rng, 12, 20);
        const auto g = instantiate(single_entity_topology(), cb);
        const auto active = random_active(rng, g);
        const auto oracle = brute_force_ranking(g, active, kDefaultLeak);
        const auto d = localize(g, active);
        ++graphs;
        if (d.ranked.size() != oracle.size()) {
            v.expect(false, "seed " + std::to_string(seed) + ": candidate count differs");
            continue;
        }
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            v.expect(d.ranked[i].cause == oracle[i].cause, "seed " + std::to_string(seed) + ": rank " + std::to_string(i));
            const double rel = std::abs(d.ranked[i].score() - oracle[i].score) / oracle[i].score;
            v.expect(rel <= 1e-9, "seed " + std::to_string(seed) + ": relative error " + std::to_string(rel));
        }
    }
    v.note(std::to_string(graphs) + " graphs");
}

void argmax_invariance(Tally& v) {
    for (std::uint64_t seed = 0; seed < 600; ++seed) {
        Rng rng(seed ^ 0xacce55);
        const auto cb = random_bipartite_codebook(rng, 12, 20);
        const auto g = instantiate(single_entity_topology(), cb);
        const auto active = random_active(rng, g);
        const auto base = localize(g, active);
        double largest = 0.0;
        for (const auto& [id, c] : g.causes()) largest = std::max(largest, c.prior);
        for (const double k : {1e-6, 0.37, 1.0 / largest}) {
            std::map<std::string, double> scaled;
            for (const auto& [id, c] : g.causes()) scaled[id] = c.prior * k;
            const auto after = localize(g.with_priors(scaled), active);
            bool same = after.ranked.size() == base.ranked.size();
            for (std::size_t i = 0; same && i < base.ranked.size(); ++i) {
                same = after.ranked[i].cause == base.ranked[i].cause;
            }
            v.expect(same, "seed " + std::to_string(seed) + " k=" + std::to_string(k));
        }
    }
    v.note("600 graphs x 3 scale factors");
}

void structural(Tally& v) {
    std::size_t pairs = 0, edges = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Rng rng(seed ^ 0x5eed);
        const auto cb = random_codebook(rng);
        EntityGraph topo = random_topology(rng, *cb);
        auto g = instantiate(topo, cb);
        ++pairs;
        std::set<std::pair<std::string, std::string>> seen;
        for (const auto& e : g.edges()) {
            ++edges;
            const std::string where = "seed " + std::to_string(seed) + " " + e.from + "->" + e.to;
            v.expect(g.has_cause(e.from) && g.has_symptom(e.to) && !g.has_symptom(e.from), where + " not bipartite");
            v.expect(seen.insert({e.from, e.to}).second, where + " duplicated");
            v.expect(e.probability > 0.0 && e.probability <= 1.0, where + " probability out of range");
            v.expect(derivation_probability(*cb, g.cause(e.from).cause, e.derivation) == e.probability,
                     where + " derivation mismatch");
        }
        std::size_t next = 0;
        for (int round = 0; round < 5; ++round) {
            for (std::size_t k = 0, n = 1 + below(rng, 3); k < n; ++k) random_mutation(rng, topo, *cb, next);
            g = refresh(g, topo, cb);
            v.expect(g == instantiate(topo, cb), "seed " + std::to_string(seed) + " refresh diverged");
        }
    }
    v.note(std::to_string(pairs) + " pairs, " + std::to_string(edges) + " edges, 5 refresh rounds each");
}

void impact(Tally& v) {
    std::size_t causes = 0;
    for (std::uint64_t seed = 0; seed < 500; ++seed) {
        Rng rng(seed ^ 0x1b1a);
        const auto cb = random_codebook(rng);
        EntityGraph topo = random_topology(rng, *cb);
        const auto g = instantiate(topo, cb);
        std::map<std::string, std::set<std::string>> before;
        for (const auto& [id, c] : g.causes()) {
            ++causes;
            const auto br = blast_radius(topo, g, id);
            const std::string where = "seed " + std::to_string(seed) + " " + id;
            v.expect(std::includes(br.transitive.begin(), br.transitive.end(), br.direct.begin(), br.direct.end()),
                     where + " direct not within transitive");
            v.expect(br.transitive.contains(c.host), where + " host missing");
            v.expect(br.direct == impacted_by_scan(g, id), where + " direct differs from edge scan");
            v.expect(br.transitive == expansion_fixpoint(topo, *cb, c.host, cb->cause(c.cause).local_symptoms,
                                                         kDefaultMaxHops),
                     where + " transitive differs from expansion fixpoint");
            for (const auto& team : teams()) {
                v.expect(ownership_check(br, team) == owns_any(br.direct, topo, team), where + " ownership " + team);
            }
            before[id] = br.transitive;
        }
        std::vector<std::string> ids;
        for (const auto& [eid, e] : topo.entities()) ids.push_back(eid);
        for (int k = 0; k < 3; ++k) {
            const Relation extra{pick(rng, ids), pick(rng, ids), random_kind(rng)};
            if (extra.source != extra.target && !topo.relations().contains(extra)) topo.add_relation(extra);
        }
        const auto grown = refresh(g, topo, cb);
        for (const auto& [id, set] : before) {
            const auto after = blast_radius(topo, grown, id).transitive;
            v.expect(std::includes(after.begin(), after.end(), set.begin(), set.end()),
                     "seed " + std::to_string(seed) + " " + id + " shrank after adding relations");
        }
    }
    v.note(std::to_string(causes) + " causes over 500 models");
}

void attributes(Tally& v) {
    std::size_t dags = 0;
    for (std::uint64_t seed = 0; seed < 250; ++seed) {
        Rng rng(seed ^ 0xda6);
        const AttributeGraph g = random_attribute_dag(rng);
        ++dags;
        const auto values = g.evaluate();
        for (int k = 0; k < 5; ++k) {
            v.expect(g.evaluate_in_order(random_topological_order(rng, g)) == values,
                     "seed " + std::to_string(seed) + " order dependence");
        }
        for (const auto& [id, node] : g.nodes()) {
            if (!g.is_source(id)) continue;
            v.expect(g.propagate_perturbation(id, 0.0).changes.empty(), "seed " + std::to_string(seed) + " null delta");
            const auto p = g.propagate_perturbation(id, uniform(rng, -5, 5));
            const auto down = g.descendants(id);
            for (const auto& [changed, c] : p.changes) {
                v.expect(down.contains(changed), "seed " + std::to_string(seed) + " " + changed + " outside descendants");
            }
        }
    }
    // Diamonds: top fans out to two middles that meet again in a sum or max.
    std::size_t diamonds = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        Rng rng(seed ^ 0xd1a);
        AttributeGraph g;
        for (const char* h : {"top", "left", "right", "bottom"}) {
            g.add_attribute({"", h, "v", "u", uniform(rng, -10, 10), 0.0, false});
        }
        const auto id = [](const char* h) { return attribute_id(h, "v"); };
        g.add_dependency({id("top"), id("left"), AttributeFunction::affine(uniform(rng, -3, 3), uniform(rng, -3, 3))});
        g.add_dependency({id("top"), id("right"), AttributeFunction::lookup({{-10, uniform(rng, -5, 0)}, {10, 5}})});
        const auto join = coin(rng) ? AttributeFunction::sum() : AttributeFunction::max();
        g.add_dependency({id("left"), id("bottom"), join});
        g.add_dependency({id("right"), id("bottom"), join});
        ++diamonds;
        for (const auto& [k, value] : g.evaluate()) {
            v.expect(value == recursive_value(g, k), "diamond " + std::to_string(seed) + " " + k);
        }
    }
    v.note(std::to_string(dags) + " DAGs, " + std::to_string(diamonds) + " diamonds");
}

// ---------------------------------------------------------------------------

std::string fuzz_frame(Rng& rng, const Snapshot& s) {
    static const std::vector<std::string> methods = [] {
        auto m = tool_methods();
        m.insert(m.end(), {"frobnicate", "", "GET_TOPOLOGY", "get_root_causes ", "hello"});
        return m;
    }();
    static const std::vector<std::string> keys{"scope", "entity", "cause", "target", "targets", "team",
                                               "limit", "kind", "direction", "active_only", "bogus"};
    std::vector<std::string> entities;
    for (const auto& [id, e] : s.topology.entities()) entities.push_back(id);
    std::vector<std::string> causes;
    for (const auto& [id, c] : s.causality.causes()) causes.push_back(id);

    auto random_value = [&](int depth) -> json {
        switch (below(rng, depth > 1 ? 8 : 10)) {
            case 0: return nullptr;
            case 1: return coin(rng);
            case 2: return static_cast<std::int64_t>(rng() % 2000) - 1000;
            case 3: return uniform(rng, -1e6, 1e6);
            case 4: return pick(rng, entities);
            case 5: return pick(rng, causes);
            case 6: return "ghost-" + std::to_string(rng() % 100);
            case 7: return std::string(1 + below(rng, 5), static_cast<char>('a' + below(rng, 26)));
            case 8: return json::array({pick(rng, entities), "ghost"});
            default: return json::object({{"x", 1}});
        }
    };

    switch (below(rng, 6)) {
        case 0: {  // raw bytes
            std::string out;
            const std::size_t n = below(rng, 60);
            for (std::size_t i = 0; i < n; ++i) {
                char c = static_cast<char>(rng() & 0xff);
                out.push_back(c == '\n' ? ' ' : c);
            }
            return "x" + out;
        }
        case 1: {  // truncated valid request
            std::string full = json{{"id", 1}, {"method", pick(rng, tool_methods())}, {"params", json::object()}}.dump();
            return full.substr(0, 1 + below(rng, full.size() - 1));
        }
        case 2:  // valid JSON, wrong shape
            return pick(rng, std::vector<std::string>{"[]", "42", "\"get_topology\"", "null", "{}", "{\"id\":{}}",
                                                      "{\"method\":[1]}", "{\"method\":\"get_topology\",\"x\":1}",
                                                      "{\"method\":\"get_topology\",\"params\":7}"});
        default: {  // well-formed frame with random method and params
            json frame{{"id", random_value(2)}, {"method", pick(rng, methods)}};
            json params = json::object();
            for (std::size_t i = 0, n = below(rng, 4); i < n; ++i) params[pick(rng, keys)] = random_value(0);
            if (coin(rng, 0.9)) frame["params"] = std::move(params);
            return frame.dump();
        }
    }
}

void service_robustness(Tally& v) {
    const Scenario scenario = fault_scenario();
    auto files = load_scenario_files(scenario);
    Engine engine(std::move(files.environment), files.codebook);
    const QueryService service(engine);
    const auto truth = engine.snapshot();
    engine.ingest(scenario_observations(scenario, Environment{truth->topology, truth->attributes, truth->constraints},
                                        truth->causality, scenario.seed));
    const auto snapshot = engine.snapshot();

    static const std::set<std::string> codes{"parse_error",  "invalid_request", "unknown_method",
                                             "invalid_params", "unknown_id"};
    Rng rng(0xf022);
    std::vector<std::string> frames;
    std::vector<std::string> expected;
    std::map<std::string, std::size_t> counts;
    constexpr std::size_t kFrames = 10000;
    for (std::size_t i = 0; i < kFrames; ++i) {
        frames.push_back(fuzz_frame(rng, *snapshot));
        std::string line;
        try {
            line = service.handle_line(frames.back());
        } catch (...) {
            v.expect(false, "frame " + std::to_string(i) + " threw");
            continue;
        }
        expected.push_back(line);
        json r;
        try {
            r = json::parse(line);
        } catch (...) {
            v.expect(false, "frame " + std::to_string(i) + " produced unparsable output");
            continue;
        }
        const bool ok = r.value("status", "") == "ok";
        const bool err = r.value("status", "") == "error";
        v.expect(ok != err, "frame " + std::to_string(i) + " has no status");
        v.expect(ok == r.contains("payload") && err == r.contains("error"),
                 "frame " + std::to_string(i) + " payload/error mismatch");
        if (err) {
            const std::string code = r["error"].value("code", "");
            v.expect(codes.contains(code), "frame " + std::to_string(i) + " code '" + code + "': " + frames.back());
            ++counts[code];
        } else {
            ++counts["ok"];
        }
        // Echo the id whenever the frame carried one.
        try {
            const json in = json::parse(frames.back());
            if (in.is_object() && in.contains("id")) {
                v.expect(r["id"] == in["id"], "frame " + std::to_string(i) + " id not echoed");
            }
        } catch (const json::exception&) {
        }
    }

    // The same stream pipelined through the loop with concurrent workers.
    std::string input;
    for (const auto& f : frames) input += f + "\n";
    std::istringstream in(input);
    std::ostringstream out;
    const std::size_t written = service.serve(in, out, 8);
    v.expect(written == kFrames, "serve wrote " + std::to_string(written) + " responses");
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);  // banner
    v.expect(json::parse(line) == QueryService::hello(), "missing hello banner");
    std::size_t i = 0;
    bool ordered = true;
    while (std::getline(lines, line)) {
        if (i >= expected.size() || line != expected[i]) ordered = false;
        ++i;
    }
    v.expect(ordered && i == expected.size(), "pipelined responses out of order");

    // One tool call per rubric query.
    for (const Scenario& s : {fault_scenario(), healthy_scenario()}) {
        auto f = load_scenario_files(s);
        Engine e(std::move(f.environment), f.codebook);
        for (const auto& q : run_scenario(s, e, s.seed).queries) {
            v.expect(q.tool_calls == 1, s.name + " " + q.id + " took " + std::to_string(q.tool_calls) + " calls");
        }
    }

    std::string summary = std::to_string(kFrames) + " frames:";
    for (const auto& [k, n] : counts) summary += " " + k + "=" + std::to_string(n);
    v.note(summary);
}

// ---------------------------------------------------------------------------

/// 240 services with their workloads and pods on 40 nodes: 1,000 entities.
Environment synthetic_environment(Rng& rng) {
    static const std::vector<std::string> service_types{"service", "service", "service", "payment_service",
                                                        "fulfillment_service", "database", "cache"};
    std::vector<Entity> entities;
    std::vector<Relation> relations;
    constexpr std::size_t kServices = 240, kNodes = 40;
    for (std::size_t n = 0; n < kNodes; ++n) entities.push_back({"node/" + std::to_string(n), "", "node", "platform", {}});
    for (std::size_t i = 0; i < kServices; ++i) {
        const std::string svc = "svc-" + std::to_string(i);
        entities.push_back({svc, svc, i < 10 ? "service" : pick(rng, service_types), pick(rng, teams()), {}});
        entities.push_back({"deploy/" + svc, "", "workload", entities.back().owner_team, {}});
        relations.push_back({svc, "deploy/" + svc, RelationKind::layer});
        for (int p = 0; p < 2; ++p) {
            const std::string pod = "pod/" + svc + "-" + std::to_string(p);
            entities.push_back({pod, "", "pod", entities.back().owner_team, {}});
            relations.push_back({"deploy/" + svc, pod, RelationKind::comp});
            relations.push_back({pod, "node/" + std::to_string(below(rng, kNodes)), RelationKind::layer});
        }
        // Calls go to services declared earlier, so the call graph is layered.
        std::set<std::size_t> callees;
        for (std::size_t k = 0; i > 0 && k < 3; ++k) callees.insert(below(rng, i));
        for (std::size_t c : callees) relations.push_back({svc, "svc-" + std::to_string(c), RelationKind::conn});
    }
    Environment env;
    env.topology = EntityGraph::assemble(std::move(entities), std::move(relations));
    return env;
}

void scale(Tally& v) {
    Rng rng(0x5ca1e);
    const auto cb = shop_codebook();
    const auto t0 = Clock::now();
    Environment env = synthetic_environment(rng);
    const std::size_t size = env.topology.size();
    v.expect(size == 1000, "topology has " + std::to_string(size) + " entities");
    Engine engine(std::move(env), cb);
    // A failing leaf service and everything calling it.
    const auto snap = engine.snapshot();
    std::vector<Observation> obs;
    for (const auto& [id, e] : snap->topology.entities()) {
        if (e.type == "service") obs.push_back(Observation::sample(1, id, "error_rate", 0.001));
    }
    const std::string victim = "svc-3";
    obs.push_back(Observation::sample(2, victim, "error_rate", 0.9));
    for (const auto& caller : snap->topology.neighbors(victim, RelationKind::conn, Direction::in)) {
        if (snap->topology.entity(caller).type == "service") obs.push_back(Observation::sample(2, caller, "error_rate", 0.4));
    }
    engine.ingest(obs);
    const double build_ms = ms_since(t0);
    const QueryService service(engine);

    const std::string cause = engine.snapshot()->diagnosis.best() ? engine.snapshot()->diagnosis.best()->cause : "";
    v.expect(!cause.empty(), "no cause localized");
    const std::vector<json> requests{
        {{"method", "get_environment_health"}},
        {{"method", "get_symptoms"}, {"params", {{"active_only", false}}}},
        {{"method", "get_root_causes"}, {"params", {{"team", "red"}}}},
        {{"method", "get_blast_radius"}},
        {{"method", "check_remediation"}, {"params", {{"targets", {"pod/svc-3-0", "svc-200", "node/0"}}}}},
        {{"method", "get_topology"}},
    };
    std::string summary;
    for (json request : requests) {
        request["id"] = 1;
        const json warm = service.handle(request);
        v.expect(warm["status"] == "ok", request["method"].get<std::string>() + " failed: " + warm.dump().substr(0, 200));
        double worst = 0.0;
        for (int k = 0; k < 5; ++k) {
            const auto t = Clock::now();
            const std::string line = service.handle_line(request.dump());
            worst = std::max(worst, ms_since(t));
        }
        v.expect(worst < 100.0, request["method"].get<std::string>() + " took " + std::to_string(worst) + " ms");
        char buf[96];
        std::snprintf(buf, sizeof buf, "%s %.1f ms, ", request["method"].get<std::string>().c_str(), worst);
        summary += buf;
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, "build %.0f ms", build_ms);
    v.note(summary + buf);
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Tally&)>>> criteria{
        {"rubric reproduction (6/6 fault, 3/3 healthy, < 5 s)", rubric},
        {"inference oracle equivalence", inference_oracle},
        {"argmax invariance under prior scaling", argmax_invariance},
        {"causality structural invariants and refresh", structural},
        {"impact invariants", impact},
        {"attribute evaluation properties", attributes},
        {"service robustness", service_robustness},
        {"scale sanity (1,000 entities, < 100 ms per method)", scale},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Tally v;
        const auto t0 = Clock::now();
        try {
            run(v);
        } catch (const std::exception& e) {
            v.expect(false, std::string("threw: ") + e.what());
        }
        char elapsed[32];
        std::snprintf(elapsed, sizeof elapsed, "%.2fs", ms_since(t0) / 1000.0);
        std::cout << (v.ok() ? "PASS" : "FAIL") << "  " << name << "  [" << elapsed << "]  " << v.describe() << '\n';
        failed += v.ok() ? 0 : 1;
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : "all criteria passed") << '\n';
    return failed ? 1 : 0;
}
