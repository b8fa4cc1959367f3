#include "gpbench/adapters.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace gpbench {

std::string request_grounded_plan(PlannerBackend& backend,
                                  const std::string& image_ref,
                                  const std::string& instruction,
                                  const std::string& prompt_template,
                                  const std::string& key, std::uint64_t seed) {
  if (!backend.capabilities().grounded_plan)
    throw std::invalid_argument("backend does not support grounded_plan");
  PlanRequest req;
  req.key = key;
  req.image_ref = image_ref;
  req.instruction = instruction;
  req.prompt = render_prompt(prompt_template, image_ref, instruction);
  req.seed = seed;
  return backend.generate(req);
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

const std::regex kStepRe(R"(^\s*(?:\d+[\.\)]|[-*•])\s+(.+)$)");

}  // namespace

std::vector<std::string> extract_steps(const std::string& raw) {
  std::vector<std::string> steps;
  std::istringstream ss(raw);
  std::string line;
  while (std::getline(ss, line)) {
    std::smatch m;
    if (std::regex_match(line, m, kStepRe)) {
      std::string step = trim(m[1].str());
      if (!step.empty()) steps.push_back(step);
    }
  }
  return steps;
}

std::vector<std::string> request_language_plan(
    PlannerBackend& backend, const std::string& image_ref,
    const std::string& instruction, const std::string& prompt_template,
    const std::string& key, std::uint64_t seed) {
  if (!backend.capabilities().language_plan)
    throw std::invalid_argument("backend does not support language_plan");
  PlanRequest req;
  req.key = key;
  req.image_ref = image_ref;
  req.instruction = instruction;
  req.prompt = render_prompt(prompt_template, image_ref, instruction);
  req.seed = seed;
  return extract_steps(backend.generate(req));
}

namespace {

struct Keyword {
  const char* word;
  Primitive primitive;
};

constexpr Keyword kKeywords[] = {
    {"grasp", Primitive::Grasp}, {"pick", Primitive::Grasp},
    {"place", Primitive::Place}, {"put", Primitive::Place},
    {"open", Primitive::Open},   {"close", Primitive::Close},
};

std::string lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

// Earliest whole-word keyword occurrence wins.
std::optional<std::pair<Primitive, std::size_t>> find_keyword(
    const std::string& step) {
  const std::string low = lower(step);
  std::optional<std::pair<Primitive, std::size_t>> best;
  for (const Keyword& kw : kKeywords) {
    const std::string word = kw.word;
    std::size_t pos = 0;
    while ((pos = low.find(word, pos)) != std::string::npos) {
      const bool left_ok =
          pos == 0 || !std::isalpha(static_cast<unsigned char>(low[pos - 1]));
      const std::size_t end = pos + word.size();
      const bool right_ok =
          end >= low.size() ||
          !std::isalpha(static_cast<unsigned char>(low[end]));
      if (left_ok && right_ok) {
        if (!best || pos < best->second) best = {{kw.primitive, pos}};
        break;
      }
      pos = end;
    }
  }
  return best;
}

}  // namespace

std::optional<Primitive> classify_step(const std::string& step) {
  auto kw = find_keyword(step);
  if (!kw) return std::nullopt;
  return kw->first;
}

std::string step_object_phrase(const std::string& step) {
  auto kw = find_keyword(step);
  std::string rest = kw ? step.substr(kw->second) : step;
  // drop the keyword itself
  std::size_t sp = rest.find(' ');
  rest = sp == std::string::npos ? "" : trim(rest.substr(sp + 1));
  // strip prepositions/articles common in "place it on the tray"
  static const char* leading[] = {"the ", "a ",  "an ", "it ",
                                  "on ",  "in ", "onto ", "into ", "up "};
  bool stripped = true;
  while (stripped) {
    stripped = false;
    const std::string low = lower(rest);
    for (const char* pre : leading) {
      if (low.rfind(pre, 0) == 0) {
        rest = trim(rest.substr(std::string(pre).size()));
        stripped = true;
        break;
      }
    }
  }
  while (!rest.empty() && (rest.back() == '.' || rest.back() == ','))
    rest.pop_back();
  return rest.empty() ? trim(step) : rest;
}

GroundedStep ground_language_step(GroundingBackend& grounder,
                                  const std::string& image_ref,
                                  const std::string& step,
                                  const GroundingOptions& opts) {
  GroundedStep out;
  out.step = step;
  out.primitive = classify_step(step);
  if (!out.primitive) return out;
  const std::string phrase = step_object_phrase(step);

  if (*out.primitive == Primitive::Place) {
    if (auto p = grounder.point(image_ref, phrase))
      out.action = GroundedAction{Primitive::Place, phrase, *p};
    return out;
  }

  std::vector<Detection> dets = grounder.detect(image_ref, phrase);
  const Detection* best = nullptr;
  for (const Detection& d : dets)
    if (d.score >= opts.score_floor && (!best || d.score > best->score))
      best = &d;
  if (best)
    out.action = GroundedAction{*out.primitive, phrase, best->box};
  return out;
}

std::vector<AtomicUnit> units_from_grounded_steps(
    const std::vector<GroundedStep>& steps) {
  std::vector<AtomicUnit> out;
  std::size_t i = 0;
  auto failed_unit = [] { return AtomicUnit{AtomicUnit::Malformed{}}; };
  while (i < steps.size()) {
    const GroundedStep& s = steps[i];
    if (!s.primitive) {
      out.push_back(failed_unit());
      ++i;
      continue;
    }
    switch (*s.primitive) {
      case Primitive::Open:
      case Primitive::Close:
        if (s.grounded())
          out.push_back({AtomicUnit::Articulation{*s.action}});
        else
          out.push_back(failed_unit());
        ++i;
        break;
      case Primitive::Grasp:
        if (i + 1 < steps.size() &&
            steps[i + 1].primitive == Primitive::Place) {
          if (s.grounded() && steps[i + 1].grounded())
            out.push_back(
                {AtomicUnit::Manipulation{*s.action, *steps[i + 1].action}});
          else
            out.push_back(failed_unit());
          i += 2;
        } else {
          out.push_back(failed_unit());  // orphaned grasp
          ++i;
        }
        break;
      case Primitive::Place:
        out.push_back(failed_unit());  // place with no grasp
        ++i;
        break;
    }
  }
  return out;
}

std::vector<SoMMark> som_marks(const std::vector<BBox>& proposals) {
  if (proposals.empty())
    throw std::invalid_argument("som_marks: no proposals");
  std::vector<BBox> sorted = proposals;
  std::sort(sorted.begin(), sorted.end(), [](const BBox& a, const BBox& b) {
    return a.y_min != b.y_min ? a.y_min < b.y_min : a.x_min < b.x_min;
  });
  std::vector<SoMMark> marks;
  for (std::size_t i = 0; i < sorted.size(); ++i)
    marks.emplace_back(static_cast<int>(i) + 1, sorted[i]);
  return marks;
}

SoMOverlay render_som_overlay(const Image& image,
                              const std::vector<BBox>& proposals) {
  SoMOverlay overlay{image, som_marks(proposals)};
  for (const SoMMark& mark : overlay.marks) {
    overlay.image.draw_rect(mark.box, kBlue, 2);
    const int cx = static_cast<int>(mark.box.center_x() * image.width());
    const int cy = static_cast<int>(mark.box.center_y() * image.height());
    overlay.image.draw_label(cx - 3, cy - 5, std::to_string(mark.id), kBlack,
                             2);
  }
  return overlay;
}

PredictedPlan resolve_som_response(const std::string& response,
                                   const std::vector<SoMMark>& marks) {
  static const std::regex re(
      R"((open|close|grasp|place)\b[^\n]*?mark\s*(\d+))", std::regex::icase);
  PredictedPlan plan;
  std::istringstream ss(response);
  std::string line;
  while (std::getline(ss, line)) {
    std::smatch m;
    if (!std::regex_search(line, m, re)) continue;
    auto prim = parse_primitive(lower(m[1].str()));
    const int id = std::stoi(m[2].str());
    const SoMMark* mark = nullptr;
    for (const SoMMark& mk : marks)
      if (mk.id == id) mark = &mk;
    if (!prim || !mark) continue;
    const std::string target = "mark " + std::to_string(id);
    if (*prim == Primitive::Place)
      plan.actions.push_back(
          {Primitive::Place, target,
           Point2D(mark->box.center_x(), mark->box.center_y())});
    else
      plan.actions.push_back({*prim, target, mark->box});
  }
  return plan;
}

}  // namespace gpbench
