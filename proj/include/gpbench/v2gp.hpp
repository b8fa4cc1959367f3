#pragma once

#include <optional>
#include <string>
#include <vector>

#include "gpbench/backend.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/gripper.hpp"
#include "gpbench/plan.hpp"

namespace gpbench {

enum class InteractionClass { Manipulation, Open, Close };

struct ObjectIdentity {
  std::string description;  // visually grounded noun phrase
  std::string category;
  InteractionClass primitive_class = InteractionClass::Manipulation;
};

struct V2gpConfig {
  double min_consistency = 0.8;
  double continuity_threshold = 0.3;  // neighbor-IoU floor for track continuity
  SegmentationConfig segmentation;
  std::string identify_prompt_template;   // empty = built-in default
  std::string rewrite_prompt_template;
  std::string revise_prompt_template;
  std::uint64_t seed = 0;
};

// Per-segment state accumulated through the pipeline stages. A segment with
// no identity or no track is flagged and skipped at assembly.
struct SegmentAnalysis {
  Segment segment;
  std::optional<ObjectIdentity> identity;
  std::optional<Track> track;

  bool flagged() const { return !identity || !track; }
};

// Prompts the planner with sampled frames from the segment (first, last, up
// to 6 evenly spaced) for a grounded description, category, and whether the
// interaction is pick-and-place or an articulated open/close. Unparseable
// responses flag the segment (nullopt).
std::optional<ObjectIdentity> identify_object(const DemonstrationEpisode& ep,
                                              const Segment& segment,
                                              std::size_t segment_index,
                                              PlannerBackend& planner,
                                              const V2gpConfig& cfg);

// Fraction of segment frames whose box overlaps its temporal neighbor by at
// least the continuity threshold.
double track_consistency(const Track& track, const Segment& segment,
                         double continuity_threshold);

// Tracks once per cue (original instruction phrase, identity description,
// identity category) and keeps the most consistent non-empty track.
std::optional<Track> ground_segment(const DemonstrationEpisode& ep,
                                    const Segment& segment,
                                    std::size_t segment_index,
                                    const ObjectIdentity& identity,
                                    const std::string& original_phrase,
                                    GroundingBackend& grounder,
                                    const V2gpConfig& cfg);

struct AssembledPlan {
  GtPlan plan;  // ordered singleton blocks, first-frame coordinates
  std::vector<std::size_t> skipped_segments;
};

// Builds the GT-style plan: manipulation segments take the track box at s as
// the grasp box and the track box at e as the place region; open/close
// segments take the box at s. Flagged segments are skipped and recorded.
AssembledPlan assemble_plan(const DemonstrationEpisode& ep,
                            const std::vector<SegmentAnalysis>& analyses);

struct RewriteResult {
  std::string text;
  bool fell_back = false;  // planner returned nothing; explicit text echoed
};

RewriteResult generate_implicit_instruction(const std::string& explicit_text,
                                            PlannerBackend& planner,
                                            const V2gpConfig& cfg);

// Drops the sample when any surviving track falls below min_consistency.
// When segments were skipped, rewrites the explicit instruction to cover
// only the surviving sub-actions and regenerates the implicit variant;
// rewrite failure drops the sample.
std::optional<TrainingSample> filter_and_refine(
    TrainingSample sample, const std::vector<SegmentAnalysis>& analyses,
    PlannerBackend& planner, const V2gpConfig& cfg);

// Full per-episode pipeline: segment, identify, ground, assemble, instruction
// variants, filter. Returns nothing when the episode yields no usable plan.
std::optional<TrainingSample> process_episode(const DemonstrationEpisode& ep,
                                              PlannerBackend& planner,
                                              GroundingBackend& grounder,
                                              const V2gpConfig& cfg);

struct EmitStats {
  std::size_t total = 0;
  std::size_t short_horizon = 0;
  std::size_t medium_horizon = 0;
  std::size_t long_horizon = 0;
};

// Line-delimited sample records plus the horizon histogram. I/O failures
// abort and remove the partial file.
EmitStats emit_samples(const std::vector<TrainingSample>& samples,
                       const std::string& path);

}  // namespace gpbench
