#pragma once

#include <atomic>
#include <cstddef>
#include <iosfwd>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "cie/engine.hpp"

namespace cie {

inline constexpr std::string_view kToolSchema = "tool/1";

/// Wire-level error codes; each failure class gets its own.
enum class ToolError { parse_error, invalid_request, unknown_method, invalid_params, unknown_id, internal_error };

std::string_view to_string(ToolError code);

/// The closed method surface, in the order the hello banner lists it.
const std::vector<std::string>& tool_methods();

/// Request/response handling over an engine. Each request binds the engine's
/// snapshot once at dispatch and reads nothing else.
class QueryService {
public:
    explicit QueryService(const Engine& engine) : engine_(engine) {}

    /// `request` is the decoded frame: {"id", "method", "params"}.
    nlohmann::json handle(const nlohmann::json& request) const;
    /// Same, against an explicit snapshot.
    nlohmann::json handle(const nlohmann::json& request, const Snapshot& snapshot) const;
    /// Decodes one frame and answers it; never throws.
    std::string handle_line(std::string_view line) const;

    /// One response line per non-blank request line, in arrival order, after
    /// a hello banner. With `workers` > 1 pipelined requests are answered
    /// concurrently. Returns the number of responses written.
    std::size_t serve(std::istream& in, std::ostream& out, std::size_t workers = 1,
                      const std::atomic<bool>* stop = nullptr) const;

    static nlohmann::json hello();

private:
    const Engine& engine_;
};

}  // namespace cie
