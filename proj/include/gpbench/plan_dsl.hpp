#pragma once

#include <string>
#include <vector>

#include "gpbench/plan.hpp"

namespace gpbench {

enum class Severity { Warning, Error };

struct ParseDiagnostic {
  int line_index = 0;
  Severity severity = Severity::Warning;
  std::string message;
  std::string raw_fragment;
};

struct ParseResult {
  PredictedPlan plan;
  std::vector<ParseDiagnostic> diagnostics;

  bool has_errors() const {
    for (const auto& d : diagnostics)
      if (d.severity == Severity::Error) return true;
    return false;
  }
};

// Parses noisy model output into a plan. Accepts call-style lines
// (grasp("cup", [x1,y1,x2,y2]), place("tray", [x,y]), open/close(...)) with
// pixel-integer or normalized-float coordinates, or a JSON object array
// ({action, target, bbox|point} elements) embedded anywhere in the text.
// Malformed statements become diagnostics; parsing never throws on bad input.
ParseResult parse_plan(const std::string& text, int image_width,
                       int image_height);

// Canonical call-style text, one action per line, pixel-integer coordinates
// (round half away from zero). Inverse of parse_plan to within half a pixel.
std::string serialize_plan(const PredictedPlan& plan, int image_width,
                           int image_height);

}  // namespace gpbench
