#include <doctest.h>

#include <cmath>

#include "cie/causality.hpp"
#include "cie/error.hpp"
#include "cie/inference.hpp"
#include "support/check.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"
#include "support/random_models.hpp"

using namespace cie;
using namespace cie::testing;

namespace {

// r1{s1: 0.9, s2: 0.9}, r2{s1: 0.8} on one entity, uniform priors.
CausalityGraph two_causes(double prior = 0.01) {
    auto cb = std::make_shared<const Codebook>(
        "t", std::vector<EntityTypeDef>{{"t", {"err"}}},
        std::vector<RootCauseDef>{{"r1", "t", {{"s1", 0.9}, {"s2", 0.9}}, prior}, {"r2", "t", {{"s1", 0.8}}, prior}},
        std::vector<SymptomDef>{{"s1", "t", {Activation::Kind::threshold, "err", Comparator::gt, 0.05}},
                                {"s2", "t", {}},
                                {"s3", "t", {}}},
        std::vector<PropagationRule>{});
    return instantiate(single_entity_topology(), cb);
}

ActiveSymptomSet active_of(std::initializer_list<const char*> names) {
    ActiveSymptomSet a;
    for (const char* n : names) a.symptoms.insert(symptom_instance_id(n, "e"));
    return a;
}

}  // namespace

TEST_CASE("activation from samples and events") {
    const auto g = two_causes();
    CHECK(activate_symptoms(g, {}).empty());
    auto a = activate_symptoms(g, {Observation::sample(1, "e", "err", 0.35)});
    CHECK(a.symptoms == std::set<std::string>{"s1@e"});
    CHECK(a.as_of == 1);
    a = activate_symptoms(g, {Observation::sample(1, "e", "err", 0.35), Observation::sample(2, "e", "err", 0.01)});
    CHECK(a.empty());
    // An older sample arriving late does not override the newer one.
    a = activate_symptoms(g, {Observation::sample(5, "e", "err", 0.01), Observation::sample(2, "e", "err", 0.9)});
    CHECK(a.empty());
    CHECK(a.as_of == 5);
    a = activate_symptoms(g, {Observation::event(3, "e", "s2")});
    CHECK(a.symptoms == std::set<std::string>{"s2@e"});

    CHECK(activate_symptoms(g, {Observation::event(3, "e", "s2")}, std::set<std::string>{}).empty());
    CHECK(error_code_of([&] { activate_symptoms(g, {Observation::event(3, "zz", "s2")}); }) == ErrorCode::unknown_id);
    CHECK(error_code_of([&] { activate_symptoms(g, {Observation::event(3, "e", "nope")}); }) ==
          ErrorCode::unknown_reference);
    CHECK(error_code_of([&] { activate_symptoms(g, {Observation::sample(3, "e", "cpu", 1)}); }) ==
          ErrorCode::unknown_reference);
    CHECK(error_code_of([&] { activate_symptoms(g, {}, std::set<std::string>{"zz"}); }) == ErrorCode::unknown_id);
}

TEST_CASE("scores are products of edge probabilities and leaks") {
    const auto g = two_causes();
    CHECK(score(g, "r1@e", {}) == doctest::Approx(0.01));
    const auto both = active_of({"s1", "s2"});
    CHECK(score(g, "r1@e", both) == doctest::Approx(0.01 * 0.81));
    CHECK(score(g, "r2@e", both) == doctest::Approx(0.01 * 0.8 * 1e-3));
    CHECK(log_score(g, "r2@e", both) == doctest::Approx(std::log(0.01) + std::log(0.8) + std::log(1e-3)));

    const auto g5 = g.with_priors({{"r1@e", 0.5}});
    CHECK(score(g5, "r1@e", active_of({"s1"})) == doctest::Approx(0.45));
    // Neither active symptom explained: prior times leak squared.
    CHECK(score(g, "r2@e", active_of({"s2", "s3"})) == doctest::Approx(1e-8).epsilon(1e-12));
    CHECK(error_code_of([&] { score(g, "ghost@e", both); }) == ErrorCode::unknown_id);
    CHECK(error_code_of([&] { score(g, "r1@e", both, {.leak = 0.0}); }) == ErrorCode::invalid_probability);
}

TEST_CASE("localize ranks, normalizes and explains") {
    const auto g = two_causes();
    CHECK(localize(g, {}).best() == nullptr);
    const auto d = localize(g, active_of({"s1", "s2"}));
    REQUIRE(d.ranked.size() == 2);
    CHECK(d.best()->cause == "r1@e");
    CHECK(d.ranked[0].posterior + d.ranked[1].posterior == doctest::Approx(1.0));
    CHECK(d.ranked[0].posterior == doctest::Approx(0.81 / (0.81 + 0.0008)));
    CHECK(d.ranked[1].explained == std::vector<std::string>{"s1@e"});
    CHECK(d.ranked[1].unexplained == std::vector<std::string>{"s2@e"});

    // s3 has no cause: fall back to every cause, or none at all.
    CHECK(localize(g, active_of({"s3"})).ranked.size() == 2);
    CHECK(localize(g, active_of({"s3"}), {.fallback_to_all = false}).ranked.empty());
}

TEST_CASE("ties break on prior, then id") {
    auto cb = std::make_shared<const Codebook>(
        "t", std::vector<EntityTypeDef>{{"t", {}}},
        std::vector<RootCauseDef>{{"b", "t", {{"s", 0.5}}, 0.1}, {"a", "t", {{"s", 0.5}}, 0.1},
                                  {"c", "t", {{"s", 0.25}}, 0.2}},
        std::vector<SymptomDef>{{"s", "t", {}}}, std::vector<PropagationRule>{});
    const auto g = instantiate(single_entity_topology(), cb);
    const auto d = localize(g, active_of({"s"}));
    REQUIRE(d.ranked.size() == 3);
    // All three scores equal 0.05; c has the larger prior.
    CHECK(d.ranked[0].cause == "c@e");
    CHECK(d.ranked[1].cause == "a@e");
    CHECK(d.ranked[2].cause == "b@e");
}

TEST_CASE("health verdicts") {
    const auto g = two_causes();
    const auto healthy = assess_health(g, std::vector<Observation>{Observation::sample(1, "e", "err", 0.0)});
    CHECK(healthy.verdict == Verdict::healthy);
    CHECK(healthy.supported_causes.empty());
    const auto sick = assess_health(g, std::vector<Observation>{Observation::sample(1, "e", "err", 1.0)});
    CHECK(sick.verdict == Verdict::degraded);
    CHECK(sick.supported_causes.size() == 2);
    const auto scoped = assess_health(g, std::vector<Observation>{Observation::sample(1, "e", "err", 1.0)},
                                      std::set<std::string>{});
    CHECK(scoped.verdict == Verdict::healthy);
}

TEST_CASE("observation lines round-trip") {
    const std::vector<Observation> obs{Observation::sample(3, "payment", "error_rate", 0.125),
                                       Observation::event(-1, "frontend", "frontend_user_errors")};
    const std::string text = format_observation_stream(obs);
    CHECK(parse_observation_stream(text) == obs);
    CHECK(parse_observation_stream("\n  \n" + text + "\n") == obs);
    CHECK(error_code_of([] { parse_observation(R"({"tick": 1, "entity": "x"})"); }) == ErrorCode::parse_error);
    CHECK(error_code_of([] { parse_observation(R"({"tick": 1.5, "entity": "x", "symptom": "s"})"); }) ==
          ErrorCode::parse_error);
    CHECK(error_location_of([] { parse_observation_stream("{\"tick\":1,\"entity\":\"x\",\"symptom\":\"s\"}\n{"); }) ==
          "line 2");
}

TEST_CASE("shop fault localizes to the payment defect; baseline is healthy") {
    const Scenario fault = fault_scenario();
    const auto files = load_scenario_files(fault);
    const auto g = instantiate(files.environment.topology, files.codebook);
    const auto report = assess_health(g, scenario_observations(fault, files.environment, g, fault.seed));
    CHECK(report.verdict == Verdict::degraded);
    const auto d = localize(g, report.active);
    REQUIRE(d.best() != nullptr);
    CHECK(d.best()->cause == kPaymentDefect);
    bool supported = false;
    for (const auto& s : report.supported_causes) supported |= s.cause == kPaymentDefect;
    CHECK(supported);

    const Scenario healthy = healthy_scenario();
    const auto hfiles = load_scenario_files(healthy);
    const auto hg = instantiate(hfiles.environment.topology, hfiles.codebook);
    const auto hreport = assess_health(hg, scenario_observations(healthy, hfiles.environment, hg, healthy.seed));
    CHECK(hreport.verdict == Verdict::healthy);
    CHECK(hreport.active.empty());
    CHECK(hreport.supported_causes.empty());
}

TEST_CASE("localize agrees with brute-force scoring on random bipartite graphs") {
    for (std::uint64_t seed = 0; seed < 400; ++seed) {
        Rng rng(seed);
        const auto cb = random_bipartite_codebook(rng, 12, 20);
        const auto g = instantiate(single_entity_topology(), cb);
        const auto active = random_active(rng, g);
        const double leak = coin(rng) ? kDefaultLeak : uniform(rng, 1e-6, 0.1);
        const auto oracle = brute_force_ranking(g, active, leak);
        const auto d = localize(g, active, {.leak = leak});
        REQUIRE(d.ranked.size() == oracle.size());
        double total = 0.0;
        for (std::size_t i = 0; i < oracle.size(); ++i) {
            CHECK(d.ranked[i].cause == oracle[i].cause);
            CHECK(d.ranked[i].score() == doctest::Approx(oracle[i].score).epsilon(1e-9));
            if (i > 0) CHECK(d.ranked[i].log_score <= d.ranked[i - 1].log_score);
            total += d.ranked[i].posterior;
        }
        if (!oracle.empty()) CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("scaling every prior by one constant keeps the ranking") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        const auto cb = random_bipartite_codebook(rng, 12, 20);
        const auto g = instantiate(single_entity_topology(), cb);
        const auto active = random_active(rng, g);
        const auto base = localize(g, active);
        double largest = 0.0;
        for (const auto& [id, c] : g.causes()) largest = std::max(largest, c.prior);
        const double k = uniform(rng, 1e-3, 1.0 / largest);
        std::map<std::string, double> scaled;
        for (const auto& [id, c] : g.causes()) scaled[id] = c.prior * k;
        const auto after = localize(g.with_priors(scaled), active);
        REQUIRE(after.ranked.size() == base.ranked.size());
        for (std::size_t i = 0; i < base.ranked.size(); ++i) CHECK(after.ranked[i].cause == base.ranked[i].cause);
    }
}

TEST_CASE("explaining one more symptom never costs rank against a non-explainer") {
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        const auto cb = random_bipartite_codebook(rng, 8, 10);
        const auto g = instantiate(single_entity_topology(), cb);
        auto active = random_active(rng, g);
        const auto edges = g.edges();
        const auto& e = pick(rng, edges);
        if (active.symptoms.contains(e.to)) continue;
        auto rank = [](const Diagnosis& d, const std::string& c) {
            for (std::size_t i = 0; i < d.ranked.size(); ++i) {
                if (d.ranked[i].cause == c) return static_cast<long>(i);
            }
            return -1L;
        };
        const auto before = localize(g, active, {.fallback_to_all = false});
        auto grown = active;
        grown.symptoms.insert(e.to);
        const auto after = localize(g, grown, {.fallback_to_all = false});
        for (const auto& [other, c] : g.causes()) {
            if (other == e.from || g.probability(other, e.to)) continue;
            const long a0 = rank(before, e.from), o0 = rank(before, other);
            const long a1 = rank(after, e.from), o1 = rank(after, other);
            if (a0 >= 0 && o0 >= 0 && a0 < o0) CHECK(a1 < o1);
        }
    }
}
