#pragma once

#include <string>

#include <json.hpp>

#include "snlab/fusion_category.hpp"

namespace snlab {

// Evaluates a real arithmetic expression such as "1/sqrt(phi)" or
// "-(sqrt(5)-1)/2". Supports + - * / ^, parentheses, sqrt/exp/sin/cos and
// the constants phi and pi.
double evaluate_expression(const std::string& expr);

nlohmann::json category_to_json(const FusionCategory& cat);

// Runs validate_all unless force is set; throws ValidationError with the
// report text on failure.
FusionCategory category_from_json(const nlohmann::json& doc, bool force = false, double tol = 1e-9);

FusionCategory load_category(const std::string& path, bool force = false, double tol = 1e-9);
void save_category(const FusionCategory& cat, const std::string& path);

// "builtin:NAME" or a file path.
FusionCategory resolve_category(const std::string& source, bool force = false);

} // namespace snlab
