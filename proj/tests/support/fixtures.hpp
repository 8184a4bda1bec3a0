#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "cie/environment.hpp"
#include "cie/knowledge_base.hpp"
#include "cie/scenario_harness.hpp"

#ifndef CIE_DATA_DIR
#error "CIE_DATA_DIR must point at data/astronomy_shop"
#endif

namespace cie::testing {

inline std::string data_path(const std::string& file) { return std::string(CIE_DATA_DIR) + "/" + file; }

inline std::shared_ptr<const Codebook> shop_codebook() {
    static const auto cb = std::make_shared<const Codebook>(load_codebook(read_file(data_path("codebook.json"))));
    return cb;
}

inline Environment shop_environment() {
    return load_environment(read_file(data_path("environment.json")), *shop_codebook());
}

inline Scenario fault_scenario() { return read_scenario(data_path("scenario_fault.json")); }
inline Scenario healthy_scenario() { return read_scenario(data_path("scenario_healthy.json")); }

inline const std::string kPaymentDefect = "code_defect_transaction_rejection@payment";

/// The shop codebook with every propagation rule removed.
inline std::shared_ptr<const Codebook> shop_codebook_without_rules() {
    nlohmann::json doc = codebook_to_json(*shop_codebook());
    doc["propagation_rules"] = nlohmann::json::array();
    return std::make_shared<const Codebook>(codebook_from_json(doc));
}

/// The shop codebook without the named root cause.
inline std::shared_ptr<const Codebook> shop_codebook_without_cause(const std::string& name) {
    nlohmann::json doc = codebook_to_json(*shop_codebook());
    auto& causes = doc["root_causes"];
    for (auto it = causes.begin(); it != causes.end(); ++it) {
        if ((*it)["name"] == name) {
            causes.erase(it);
            break;
        }
    }
    return std::make_shared<const Codebook>(codebook_from_json(doc));
}

}  // namespace cie::testing
