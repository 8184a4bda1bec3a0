#include "json_util.hpp"

#include <sstream>

#include "cie/error.hpp"

namespace cie::detail {

using nlohmann::json;

json parse_document(std::string_view text) {
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::parse_error, e.what(), "byte " + std::to_string(e.byte));
    }
}

std::string join_location(const std::string& at, std::string_view key) {
    if (at.empty()) return std::string(key);
    return at + "." + std::string(key);
}

void require_schema(const json& doc, std::string_view expected) {
    if (!doc.is_object()) throw Error(ErrorCode::parse_error, "document must be an object");
    auto it = doc.find("schema");
    if (it == doc.end() || !it->is_string()) {
        throw Error(ErrorCode::schema_mismatch,
                    "missing schema field, expected \"" + std::string(expected) + "\"", "schema");
    }
    if (it->get<std::string>() != expected) {
        throw Error(ErrorCode::schema_mismatch,
                    "schema \"" + it->get<std::string>() + "\", expected \"" +
                        std::string(expected) + "\"",
                    "schema");
    }
}

const json& field(const json& obj, std::string_view key, const std::string& at) {
    if (!obj.is_object()) throw Error(ErrorCode::parse_error, "expected object", at);
    auto it = obj.find(key);
    if (it == obj.end()) {
        throw Error(ErrorCode::parse_error, "missing field", join_location(at, key));
    }
    return *it;
}

std::string string_field(const json& obj, std::string_view key, const std::string& at) {
    const json& value = field(obj, key, at);
    if (!value.is_string()) {
        throw Error(ErrorCode::parse_error, "expected string", join_location(at, key));
    }
    return value.get<std::string>();
}

double number_field(const json& obj, std::string_view key, const std::string& at) {
    const json& value = field(obj, key, at);
    if (!value.is_number()) {
        throw Error(ErrorCode::parse_error, "expected number", join_location(at, key));
    }
    return value.get<double>();
}

bool bool_field(const json& obj, std::string_view key, const std::string& at) {
    const json& value = field(obj, key, at);
    if (!value.is_boolean()) {
        throw Error(ErrorCode::parse_error, "expected boolean", join_location(at, key));
    }
    return value.get<bool>();
}

const json& array_field(const json& obj, std::string_view key, const std::string& at) {
    const json& value = field(obj, key, at);
    if (!value.is_array()) {
        throw Error(ErrorCode::parse_error, "expected array", join_location(at, key));
    }
    return value;
}

std::string format_number(double value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

}  // namespace cie::detail
