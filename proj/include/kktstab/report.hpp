#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "kktstab/newton.hpp"
#include "kktstab/stability.hpp"

namespace kktstab {

inline constexpr const char* kToolName = "kktstab";
inline constexpr const char* kToolVersion = "0.1.0";

// Non-finite reals are written as the strings "+inf", "-inf" and "nan".
nlohmann::json real_to_json(double v);
double real_from_json(const nlohmann::json& v);

nlohmann::json to_json(const NewtonTrace& t);
NewtonTrace newton_trace_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ProbeStats& p);
ProbeStats probe_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const StabilityReport& r);
StabilityReport stability_report_from_json(const nlohmann::json& j);

// Top-level document: tool, version, kind, seed, tolerances and the kind-specific result.
nlohmann::json make_report(const std::string& kind, std::uint64_t seed,
                           nlohmann::json tolerances, nlohmann::json result);

// Sorted keys, two-space indent, doubles at 17 significant digits.
std::string canonical_dump(const nlohmann::json& doc);
void emit_report(const nlohmann::json& doc, const std::string& path);
nlohmann::json load_report(const std::string& path);

}  // namespace kktstab
