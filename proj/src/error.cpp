#include "cie/error.hpp"

namespace cie {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::schema_mismatch: return "schema_mismatch";
        case ErrorCode::unknown_type: return "unknown_type";
        case ErrorCode::unknown_reference: return "unknown_reference";
        case ErrorCode::dangling_endpoint: return "dangling_endpoint";
        case ErrorCode::duplicate_id: return "duplicate_id";
        case ErrorCode::unknown_id: return "unknown_id";
        case ErrorCode::invalid_probability: return "invalid_probability";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::cycle_detected: return "cycle_detected";
        case ErrorCode::missing_value: return "missing_value";
        case ErrorCode::precondition_failed: return "precondition_failed";
    }
    return "unknown";
}

namespace {

std::string compose(ErrorCode code, const std::string& message, const std::string& location) {
    std::string out(to_string(code));
    if (!location.empty()) {
        out += " at ";
        out += location;
    }
    out += ": ";
    out += message;
    return out;
}

}  // namespace

Error::Error(ErrorCode code, std::string message, std::string location)
    : std::runtime_error(compose(code, message, location)),
      code_(code),
      location_(std::move(location)),
      detail_(std::move(message)) {}

}  // namespace cie
