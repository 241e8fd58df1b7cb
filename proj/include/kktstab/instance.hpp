#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "kktstab/problem.hpp"

namespace kktstab {

struct Instance {
  std::string name;
  CompositeProblem problem;
  std::optional<KKTPoint> known_solution;
  std::optional<KKTPoint> start;
};

// Validates dimensions, degrees and the known solution (KKT residual <= 1e-8) eagerly.
// `where` prefixes error messages (usually the file path).
Instance parse_instance(const nlohmann::json& doc, const std::string& where = "<instance>");
Instance parse_instance_text(const std::string& text, const std::string& where = "<instance>");
Instance load_instance(const std::string& path);

ConvexPiece parse_piece(const nlohmann::json& spec, const std::string& where);

// "x0,x1;mu0,mu1,..." with exactly n and m entries.
KKTPoint parse_point(const std::string& text, int n, int m);

}  // namespace kktstab
