#include "gpbench/plan_dsl.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>
#include <regex>
#include <sstream>

#include <json.hpp>

namespace gpbench {
namespace {

using nlohmann::json;

constexpr double kClampSlack = 0.05;  // out-of-range tolerance before drop

struct CoordList {
  std::vector<double> values;
  bool fractional = false;  // any slot has a fractional part
};

std::optional<CoordList> parse_coords(const std::string& body) {
  CoordList out;
  std::istringstream ss(body);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      double v = std::stod(tok, &pos);
      while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos])))
        ++pos;
      if (pos != tok.size()) return std::nullopt;
      if (!std::isfinite(v)) return std::nullopt;
      out.values.push_back(v);
      if (std::floor(v) != v) out.fractional = true;
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (out.values.empty()) return std::nullopt;
  return out;
}

// Pixel-vs-normalized heuristic: any fractional slot means normalized
// (pixels are whole numbers); all-integer slots are pixels even when <= 1.
std::vector<double> to_normalized(const CoordList& c, int w, int h) {
  if (c.fractional) return c.values;
  std::vector<double> out(c.values.size());
  for (std::size_t i = 0; i < c.values.size(); ++i)
    out[i] = c.values[i] / (i % 2 == 0 ? w : h);
  return out;
}

enum class ClampOutcome { Ok, Clamped, OutOfRange };

ClampOutcome clamp_coord(double& v) {
  if (v >= 0.0 && v <= 1.0) return ClampOutcome::Ok;
  if (v >= -kClampSlack && v <= 1.0 + kClampSlack) {
    v = std::clamp(v, 0.0, 1.0);
    return ClampOutcome::Clamped;
  }
  return ClampOutcome::OutOfRange;
}

struct Statement {
  Primitive primitive;
  std::string target;
  CoordList coords;
};

// Builds the grounded action from a raw statement, appending diagnostics.
// Returns nullopt when the statement must be dropped.
std::optional<GroundedAction> build_action(const Statement& st, int w, int h,
                                           int line, const std::string& raw,
                                           std::vector<ParseDiagnostic>& diags) {
  const bool wants_point = st.primitive == Primitive::Place;
  const std::size_t want = wants_point ? 2 : 4;
  if (st.coords.values.size() != want) {
    diags.push_back({line, Severity::Error,
                     std::string(primitive_name(st.primitive)) + " expects " +
                         std::to_string(want) + " coordinates, got " +
                         std::to_string(st.coords.values.size()),
                     raw});
    return std::nullopt;
  }
  std::vector<double> norm = to_normalized(st.coords, w, h);
  bool clamped = false;
  for (double& v : norm) {
    switch (clamp_coord(v)) {
      case ClampOutcome::Ok: break;
      case ClampOutcome::Clamped: clamped = true; break;
      case ClampOutcome::OutOfRange:
        diags.push_back({line, Severity::Error,
                         "coordinate out of range beyond tolerance", raw});
        return std::nullopt;
    }
  }
  if (clamped)
    diags.push_back({line, Severity::Warning,
                     "coordinate clamped to image bounds", raw});

  std::string target = st.target;
  // trim
  while (!target.empty() && std::isspace(static_cast<unsigned char>(target.front())))
    target.erase(target.begin());
  while (!target.empty() && std::isspace(static_cast<unsigned char>(target.back())))
    target.pop_back();
  if (target.empty()) {
    diags.push_back({line, Severity::Warning, "empty target text", raw});
    target = "unknown";
  }

  try {
    if (wants_point)
      return GroundedAction{st.primitive, target, Point2D(norm[0], norm[1])};
    return GroundedAction{st.primitive, target,
                          BBox(norm[0], norm[1], norm[2], norm[3])};
  } catch (const std::invalid_argument& e) {
    diags.push_back({line, Severity::Error,
                     std::string("degenerate grounding: ") + e.what(), raw});
    return std::nullopt;
  }
}

const std::regex kCallRe(
    R"((open|close|grasp|place)\s*\(\s*["']([^"']*)["']\s*,\s*\[([^\]\[]*)\]\s*\))",
    std::regex::icase);

std::optional<Statement> parse_call_line(const std::string& line) {
  std::smatch m;
  if (!std::regex_search(line, m, kCallRe)) return std::nullopt;
  std::string prim = m[1].str();
  for (char& c : prim) c = static_cast<char>(std::tolower(c));
  auto p = parse_primitive(prim);
  auto coords = parse_coords(m[3].str());
  if (!p || !coords) return std::nullopt;
  return Statement{*p, m[2].str(), *coords};
}

// Locates the first well-formed JSON array of {action,...} objects, possibly
// embedded in surrounding prose or markup.
std::optional<json> find_object_array(const std::string& text) {
  for (std::size_t start = text.find('['); start != std::string::npos;
       start = text.find('[', start + 1)) {
    int depth = 0;
    bool in_str = false;
    bool esc = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_str) {
        if (esc) esc = false;
        else if (c == '\\') esc = true;
        else if (c == '"') in_str = false;
        continue;
      }
      if (c == '"') in_str = true;
      else if (c == '[' || c == '{') ++depth;
      else if (c == ']' || c == '}') {
        --depth;
        if (depth == 0) {
          json j = json::parse(text.substr(start, i - start + 1), nullptr,
                               false);
          if (j.is_array() && !j.empty() && j[0].is_object() &&
              j[0].contains("action"))
            return j;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

std::optional<Statement> statement_from_object(const json& obj) {
  if (!obj.is_object() || !obj.contains("action") ||
      !obj["action"].is_string())
    return std::nullopt;
  auto p = parse_primitive(obj["action"].get<std::string>());
  if (!p) return std::nullopt;
  std::string target;
  if (obj.contains("target") && obj["target"].is_string())
    target = obj["target"].get<std::string>();
  const char* key = (*p == Primitive::Place) ? "point" : "bbox";
  if (!obj.contains(key) || !obj[key].is_array()) return std::nullopt;
  CoordList coords;
  for (const auto& v : obj[key]) {
    if (!v.is_number()) return std::nullopt;
    double d = v.get<double>();
    coords.values.push_back(d);
    if (std::floor(d) != d) coords.fractional = true;
  }
  if (coords.values.empty()) return std::nullopt;
  return Statement{*p, target, coords};
}

}  // namespace

ParseResult parse_plan(const std::string& text, int image_width,
                       int image_height) {
  if (image_width <= 0 || image_height <= 0)
    throw std::invalid_argument("parse_plan: image dims must be positive");

  ParseResult result;

  bool blank = true;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) { blank = false; break; }
  if (blank) {
    result.diagnostics.push_back(
        {0, Severity::Warning, "empty input", ""});
    return result;
  }

  if (auto arr = find_object_array(text)) {
    int idx = 0;
    for (const auto& el : *arr) {
      if (auto st = statement_from_object(el)) {
        if (auto act = build_action(*st, image_width, image_height, idx,
                                    el.dump(), result.diagnostics))
          result.plan.actions.push_back(*act);
      } else {
        result.diagnostics.push_back(
            {idx, Severity::Error, "unrecognized plan element", el.dump()});
      }
      ++idx;
    }
    return result;
  }

  std::istringstream ss(text);
  std::string line;
  int idx = -1;
  while (std::getline(ss, line)) {
    ++idx;
    bool line_blank = true;
    for (char c : line)
      if (!std::isspace(static_cast<unsigned char>(c))) {
        line_blank = false;
        break;
      }
    if (line_blank) continue;
    if (auto st = parse_call_line(line)) {
      if (auto act = build_action(*st, image_width, image_height, idx, line,
                                  result.diagnostics))
        result.plan.actions.push_back(*act);
    } else {
      result.diagnostics.push_back(
          {idx, Severity::Error, "unparseable statement", line});
    }
  }
  return result;
}

namespace {

long round_half_away(double v) {
  return static_cast<long>(v >= 0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

}  // namespace

std::string serialize_plan(const PredictedPlan& plan, int image_width,
                           int image_height) {
  std::ostringstream out;
  for (const GroundedAction& a : plan.actions) {
    out << primitive_name(a.primitive) << "(\"" << a.target_text << "\", [";
    if (const BBox* b = a.bbox()) {
      out << round_half_away(b->x_min * image_width) << ", "
          << round_half_away(b->y_min * image_height) << ", "
          << round_half_away(b->x_max * image_width) << ", "
          << round_half_away(b->y_max * image_height);
    } else {
      const Point2D* p = a.point();
      out << round_half_away(p->x * image_width) << ", "
          << round_half_away(p->y * image_height);
    }
    out << "])\n";
  }
  return out.str();
}

}  // namespace gpbench
