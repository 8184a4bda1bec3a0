#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "cie/attributes.hpp"
#include "cie/knowledge_base.hpp"
#include "cie/topology.hpp"

namespace cie {

/// Everything an environment description file declares.
struct Environment {
    EntityGraph topology;
    AttributeGraph attributes;
    std::vector<Constraint> constraints;
};

/// Parses and validates an `env/1` document against the codebook's type set.
/// Errors carry the offending element's location, e.g. "relations[4].target".
Environment load_environment(std::string_view document, const Codebook& codebook);
Environment environment_from_json(const nlohmann::json& document, const Codebook& codebook);
nlohmann::json environment_to_json(const Environment& environment);

std::string read_file(const std::string& path);

}  // namespace cie
