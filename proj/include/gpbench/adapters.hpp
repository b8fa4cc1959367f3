#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpbench/backend.hpp"
#include "gpbench/image.hpp"
#include "gpbench/plan.hpp"

namespace gpbench {

// End-to-end paradigm: one call, raw grounded-plan text back.
std::string request_grounded_plan(PlannerBackend& backend,
                                  const std::string& image_ref,
                                  const std::string& instruction,
                                  const std::string& prompt_template,
                                  const std::string& key = "",
                                  std::uint64_t seed = 0);

// Extracts numbered/bulleted steps from model prose, in order; surrounding
// commentary is discarded.
std::vector<std::string> extract_steps(const std::string& raw);

std::vector<std::string> request_language_plan(
    PlannerBackend& backend, const std::string& image_ref,
    const std::string& instruction, const std::string& prompt_template,
    const std::string& key = "", std::uint64_t seed = 0);

// Keyword rules mapping a free-text step onto the primitive vocabulary:
// grasp/pick -> Grasp, place/put -> Place, open -> Open, close -> Close.
std::optional<Primitive> classify_step(const std::string& step);

// The object phrase following the matched action keyword, articles stripped.
std::string step_object_phrase(const std::string& step);

struct GroundingOptions {
  double score_floor = 0.3;
};

struct GroundedStep {
  std::string step;
  std::optional<Primitive> primitive;
  std::optional<GroundedAction> action;  // nullopt = ungroundable

  bool grounded() const { return action.has_value(); }
};

// Decoupled paradigm: grounds one language step via the grounding backend.
// Grasp/open/close take the top-scoring detection box; place takes the
// pointing model's output. No detection above the score floor leaves the
// step ungroundable, which scores as an automatic unit failure.
GroundedStep ground_language_step(GroundingBackend& grounder,
                                  const std::string& image_ref,
                                  const std::string& step,
                                  const GroundingOptions& opts = {});

// Builds scoreable units from grounded steps: fully grounded grasp+place
// pairs fuse into manipulation units, grounded open/close stand alone, and
// any ungroundable or unclassifiable step collapses its unit to Malformed.
std::vector<AtomicUnit> units_from_grounded_steps(
    const std::vector<GroundedStep>& steps);

struct SoMMark {
  int id = 0;
  BBox box;

  SoMMark(int i, const BBox& b) : id(i), box(b) {}
};

struct SoMOverlay {
  Image image;
  std::vector<SoMMark> marks;
};

// Numbers proposals 1-based in (y_min, x_min) order.
std::vector<SoMMark> som_marks(const std::vector<BBox>& proposals);

// som_marks plus each id rendered at its box center.
SoMOverlay render_som_overlay(const Image& image,
                              const std::vector<BBox>& proposals);

// Resolves planner responses that reference marks ("grasp mark 2") back to
// the proposals: grasp/open/close take the mark's box, place its center.
// Lines referencing unknown marks or no mark are skipped.
PredictedPlan resolve_som_response(const std::string& response,
                                   const std::vector<SoMMark>& marks);

}  // namespace gpbench
