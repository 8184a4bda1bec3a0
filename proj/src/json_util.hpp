#pragma once

// Located field accessors shared by the file-format loaders.

#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace cie::detail {

nlohmann::json parse_document(std::string_view text);

std::string join_location(const std::string& at, std::string_view key);

void require_schema(const nlohmann::json& doc, std::string_view expected);

const nlohmann::json& field(const nlohmann::json& obj, std::string_view key, const std::string& at);
std::string string_field(const nlohmann::json& obj, std::string_view key, const std::string& at);
double number_field(const nlohmann::json& obj, std::string_view key, const std::string& at);
bool bool_field(const nlohmann::json& obj, std::string_view key, const std::string& at);
const nlohmann::json& array_field(const nlohmann::json& obj, std::string_view key,
                                  const std::string& at);

std::string format_number(double value);

}  // namespace cie::detail
