#include <doctest.h>

#include <nlohmann/json.hpp>

#include "cie/error.hpp"
#include "cie/knowledge_base.hpp"
#include "support/check.hpp"
#include "support/fixtures.hpp"
#include "support/random_models.hpp"

using namespace cie;
using namespace cie::testing;
using nlohmann::json;

namespace {

json minimal() {
    return json::parse(R"({
        "schema": "codebook/1",
        "version": "t",
        "types": [{"name": "svc", "attributes": ["err"]}],
        "symptoms": [{"name": "errors", "applies_to": "svc",
                      "activation": {"kind": "threshold", "attribute": "err", "op": ">", "value": 0.1}}],
        "root_causes": [{"name": "bug", "applies_to": "svc", "symptoms": [{"symptom": "errors", "probability": 0.9}]}],
        "propagation_rules": []
    })");
}

std::optional<ErrorCode> load_error(const json& doc) {
    return error_code_of([&] { codebook_from_json(doc); });
}

}  // namespace

TEST_CASE("minimal codebook loads and the prior defaults") {
    const Codebook cb = codebook_from_json(minimal());
    CHECK(cb.root_causes().size() == 1);
    CHECK(cb.cause("bug").prior == doctest::Approx(kDefaultPrior));
    CHECK(cb.symptom("errors").activation.holds(0.2));
    CHECK_FALSE(cb.symptom("errors").activation.holds(0.1));
    CHECK(cb.declares_attribute("svc", "err"));
    CHECK_FALSE(cb.declares_attribute("svc", "latency"));
}

TEST_CASE("validation rejects broken documents with a location") {
    json doc = minimal();
    doc["root_causes"][0]["symptoms"][0]["probability"] = 0.0;
    CHECK(load_error(doc) == ErrorCode::invalid_probability);
    CHECK(error_location_of([&] { codebook_from_json(doc); }) == "root_causes[bug]");

    doc = minimal();
    doc["root_causes"][0]["symptoms"][0]["probability"] = 1.5;
    CHECK(load_error(doc) == ErrorCode::invalid_probability);

    doc = minimal();
    doc["root_causes"][0]["prior"] = -0.1;
    CHECK(load_error(doc) == ErrorCode::invalid_probability);

    doc = minimal();
    doc["propagation_rules"] = json::array(
        {{{"id", "r"}, {"from", "errors"}, {"relation", "conn"}, {"traversal", "reverse"}, {"to", "ghost"},
          {"attenuation", 0.5}}});
    CHECK(load_error(doc) == ErrorCode::unknown_reference);
    CHECK(error_location_of([&] { codebook_from_json(doc); }) == "propagation_rules[r]");

    doc["propagation_rules"][0]["to"] = "errors";
    CHECK_NOTHROW(codebook_from_json(doc));
    doc["propagation_rules"][0]["attenuation"] = 0.0;
    CHECK(load_error(doc) == ErrorCode::invalid_probability);
    doc["propagation_rules"][0]["attenuation"] = 0.5;
    doc["propagation_rules"][0]["relation"] = "calls";
    CHECK(load_error(doc) == ErrorCode::parse_error);
    CHECK(error_location_of([&] { codebook_from_json(doc); }) == "propagation_rules[0].relation");
    doc["propagation_rules"][0]["relation"] = "conn";
    doc["propagation_rules"][0]["traversal"] = "sideways";
    CHECK(load_error(doc) == ErrorCode::parse_error);

    doc = minimal();
    doc["root_causes"][0]["symptoms"][0]["symptom"] = "ghost";
    CHECK(load_error(doc) == ErrorCode::unknown_reference);

    doc = minimal();
    doc["symptoms"][0]["applies_to"] = "db";
    CHECK(load_error(doc) == ErrorCode::unknown_reference);

    doc = minimal();
    doc["symptoms"][0]["activation"]["attribute"] = "latency";
    CHECK(load_error(doc) == ErrorCode::unknown_reference);
    CHECK(error_location_of([&] { codebook_from_json(doc); }) == "symptoms[errors]");

    doc = minimal();
    doc["symptoms"][0]["activation"]["op"] = "~";
    CHECK(load_error(doc) == ErrorCode::parse_error);

    doc = minimal();
    doc["types"].push_back({{"name", "db"}});
    doc["symptoms"].push_back({{"name", "down"}, {"applies_to", "db"}, {"activation", {{"kind", "event"}}}});
    doc["root_causes"][0]["symptoms"].push_back({{"symptom", "down"}, {"probability", 0.5}});
    CHECK(load_error(doc) == ErrorCode::unknown_reference);

    doc = minimal();
    doc["root_causes"][0]["symptoms"].push_back({{"symptom", "errors"}, {"probability", 0.5}});
    CHECK(load_error(doc) == ErrorCode::duplicate_id);

    doc = minimal();
    doc["types"].push_back({{"name", "svc"}});
    CHECK(load_error(doc) == ErrorCode::duplicate_id);

    doc = minimal();
    doc["symptoms"].push_back(doc["symptoms"][0]);
    CHECK(load_error(doc) == ErrorCode::duplicate_id);

    doc = minimal();
    doc["schema"] = "codebook/2";
    CHECK(load_error(doc) == ErrorCode::schema_mismatch);

    doc = minimal();
    doc.erase("types");
    CHECK(load_error(doc) == ErrorCode::parse_error);

    CHECK(error_code_of([] { load_codebook("[1, 2"); }) == ErrorCode::parse_error);
}

TEST_CASE("causes_for_type keeps declaration order") {
    json doc = minimal();
    doc["root_causes"].push_back(
        {{"name", "leak"}, {"applies_to", "svc"}, {"symptoms", {{{"symptom", "errors"}, {"probability", 0.4}}}}});
    doc["types"].push_back({{"name", "db"}});
    const Codebook cb = codebook_from_json(doc);
    const auto causes = cb.causes_for_type("svc");
    REQUIRE(causes.size() == 2);
    CHECK(causes[0].name == "bug");
    CHECK(causes[1].name == "leak");
    CHECK(cb.causes_for_type("db").empty());
    CHECK(error_code_of([&] { cb.causes_for_type("mainframe"); }) == ErrorCode::unknown_type);
}

TEST_CASE("shop codebook lookups") {
    const auto cb = shop_codebook();
    bool found = false;
    for (const auto& c : cb->causes_for_type("payment_service")) found |= c.name == "code_defect_transaction_rejection";
    CHECK(found);

    const auto callers = cb->rules_for("high_error_rate", RelationKind::conn);
    bool reverse_caller = false;
    for (const auto& r : callers) {
        reverse_caller |= r.traversal == Traversal::reverse && r.to_symptom == "high_error_rate";
    }
    CHECK(reverse_caller);
    CHECK(cb->rules_for("high_error_rate", RelationKind::comp).empty());
    CHECK(cb->rules_for("frontend_user_errors", RelationKind::conn).empty());
    CHECK(error_code_of([&] { cb->rules_for("ghost", RelationKind::conn); }) == ErrorCode::unknown_reference);
}

TEST_CASE("round-trip through the file format preserves every definition") {
    const auto shop = shop_codebook();
    const Codebook again = load_codebook(render_codebook(*shop));
    CHECK(again == *shop);
    CHECK(again.fingerprint() == shop->fingerprint());
    CHECK(shop_codebook_without_rules()->fingerprint() != shop->fingerprint());

    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        Rng rng(seed);
        const auto cb = random_codebook(rng);
        const Codebook back = load_codebook(render_codebook(*cb));
        CHECK(back == *cb);
        for (const auto& c : back.root_causes()) {
            CHECK(c.prior > 0.0);
            CHECK(c.prior <= 1.0);
            for (const auto& l : c.local_symptoms) {
                CHECK(l.probability > 0.0);
                CHECK(l.probability <= 1.0);
            }
        }
        for (const auto& r : back.rules()) {
            CHECK(r.attenuation > 0.0);
            CHECK(r.attenuation <= 1.0);
        }
    }
}

TEST_CASE("validation is total on randomly corrupted documents") {
    // Every corruption either loads into a codebook that passes its own
    // invariants or throws a structured error; nothing else escapes.
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        Rng rng(seed);
        json doc = codebook_to_json(*random_codebook(rng));
        switch (below(rng, 5)) {
            case 0:
                if (!doc["root_causes"].empty()) doc["root_causes"][0]["prior"] = uniform(rng, -1.0, 2.0);
                break;
            case 1:
                if (!doc["propagation_rules"].empty()) doc["propagation_rules"][0]["to"] = "s9_9";
                break;
            case 2: doc["symptoms"].push_back(doc["symptoms"][0]); break;
            case 3: doc["types"][0]["attributes"] = json::array({"a1"}); break;
            default:
                doc["root_causes"][0]["symptoms"][0]["probability"] = uniform(rng, -0.5, 1.5);
                break;
        }
        try {
            const Codebook cb = codebook_from_json(doc);
            for (const auto& c : cb.root_causes()) {
                CHECK(c.prior > 0.0);
                CHECK(c.prior <= 1.0);
                for (const auto& l : c.local_symptoms) CHECK(cb.has_symptom(l.symptom));
            }
            for (const auto& r : cb.rules()) {
                CHECK(cb.has_symptom(r.from_symptom));
                CHECK(cb.has_symptom(r.to_symptom));
            }
        } catch (const Error& e) {
            CHECK_FALSE(e.location().empty());
        }
    }
}
