#pragma once

#include <optional>
#include <vector>

#include "gpbench/plan.hpp"

namespace gpbench {

struct Thresholds {
  double tau_g = 0.5;  // grasp IoU threshold
  double tau_d = 0.5;  // open/close IoU threshold
};

struct UnitOutcome {
  std::size_t gt_index = 0;
  std::optional<std::size_t> matched_pred_index;
  bool success = false;
};

struct EpisodeScore {
  bool tsr = false;
  std::size_t arr_matched = 0;
  std::size_t arr_total = 0;
  std::vector<UnitOutcome> per_unit;
};

enum class InstructionType { Explicit, Implicit };

const char* instruction_type_name(InstructionType t);

struct AggregateCell {
  InstructionType instruction_type;
  HorizonBucket bucket;
  double tsr_pct = 0.0;
  double arr_pct = 0.0;
  std::size_t n_episodes = 0;
};

// Spatial success of one predicted unit against one GT unit: grasp IoU >=
// tau_g and place point inside the GT region for manipulation pairs, IoU >=
// tau_d for same-primitive articulations. Everything else fails.
bool unit_success(const AtomicUnit& pred, const AtomicUnit& gt,
                  const Thresholds& th);

// Maximum-cardinality bipartite matching over an adjacency list (left index
// -> right candidates). Deterministic: augments in left order, preferring the
// lowest right index. Returns for each left node its matched right index.
std::vector<std::optional<std::size_t>> max_bipartite_matching(
    const std::vector<std::vector<std::size_t>>& adjacency,
    std::size_t n_right);

// Strict sequential match: predicted units consumed block by block, ordered
// blocks positionally, unordered blocks by perfect matching. TSR additionally
// requires the predicted unit count to equal the GT unit count.
EpisodeScore match_episode_ordered(const std::vector<AtomicUnit>& pred_units,
                                   const GtPlan& gt_plan,
                                   const Thresholds& th);

struct ArrResult {
  std::size_t matched = 0;
  std::size_t total = 0;
};

// Order-free recall: maximum matching between all predicted and all GT units.
ArrResult arr_episode(const std::vector<AtomicUnit>& pred_units,
                      const GtPlan& gt_plan, const Thresholds& th);

// Full episode score: TSR from the sequential match, ARR from the order-free
// matching (per-unit assignments come from the ARR matching when TSR fails).
EpisodeScore score_episode(const std::vector<AtomicUnit>& pred_units,
                           const GtPlan& gt_plan, const Thresholds& th);

struct ScoredEpisode {
  HorizonBucket bucket;
  InstructionType instruction_type;
  EpisodeScore score;
};

// Table-1-style cells: TSR% is episode-level, ARR% is the micro-average over
// units, grouped by (instruction type, horizon bucket); empty cells omitted.
std::vector<AggregateCell> aggregate(const std::vector<ScoredEpisode>& scores);

}  // namespace gpbench
