#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cie {

enum class ErrorCode {
    parse_error,
    schema_mismatch,
    unknown_type,
    unknown_reference,
    dangling_endpoint,
    duplicate_id,
    unknown_id,
    invalid_probability,
    invalid_argument,
    cycle_detected,
    missing_value,
    precondition_failed,
};

std::string_view to_string(ErrorCode code);

/// Error raised by every loader and model operation. `location` names the
/// offending element, e.g. "relations[3].target" or "root_causes[code_defect]".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string location = {});

    ErrorCode code() const noexcept { return code_; }
    const std::string& location() const noexcept { return location_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    ErrorCode code_;
    std::string location_;
    std::string detail_;
};

}  // namespace cie
