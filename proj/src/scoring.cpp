#include "gpbench/scoring.hpp"

#include <algorithm>

namespace gpbench {

const char* instruction_type_name(InstructionType t) {
  return t == InstructionType::Explicit ? "explicit" : "implicit";
}

bool unit_success(const AtomicUnit& pred, const AtomicUnit& gt,
                  const Thresholds& th) {
  if (pred.is_malformed() || gt.is_malformed()) return false;
  if (pred.is_manipulation() && gt.is_manipulation()) {
    const auto& p = pred.manipulation();
    const auto& g = gt.manipulation();
    const BBox* pred_grasp = p.grasp.bbox();
    const BBox* gt_grasp = g.grasp.bbox();
    const Point2D* pred_point = p.place.point();
    const BBox* gt_region = g.place.bbox();
    if (!pred_grasp || !gt_grasp || !pred_point || !gt_region) return false;
    return iou(*pred_grasp, *gt_grasp) >= th.tau_g &&
           contains(*gt_region, *pred_point);
  }
  if (pred.is_articulation() && gt.is_articulation()) {
    const auto& p = pred.articulation().action;
    const auto& g = gt.articulation().action;
    if (p.primitive != g.primitive) return false;
    const BBox* pb = p.bbox();
    const BBox* gb = g.bbox();
    if (!pb || !gb) return false;
    return iou(*pb, *gb) >= th.tau_d;
  }
  return false;
}

namespace {

bool try_augment(std::size_t left,
                 const std::vector<std::vector<std::size_t>>& adj,
                 std::vector<bool>& visited,
                 std::vector<std::optional<std::size_t>>& right_owner) {
  for (std::size_t r : adj[left]) {
    if (visited[r]) continue;
    visited[r] = true;
    if (!right_owner[r] ||
        try_augment(*right_owner[r], adj, visited, right_owner)) {
      right_owner[r] = left;
      return true;
    }
  }
  return false;
}

}  // namespace

std::vector<std::optional<std::size_t>> max_bipartite_matching(
    const std::vector<std::vector<std::size_t>>& adjacency,
    std::size_t n_right) {
  std::vector<std::optional<std::size_t>> right_owner(n_right);
  for (std::size_t l = 0; l < adjacency.size(); ++l) {
    std::vector<bool> visited(n_right, false);
    try_augment(l, adjacency, visited, right_owner);
  }
  std::vector<std::optional<std::size_t>> left_match(adjacency.size());
  for (std::size_t r = 0; r < n_right; ++r)
    if (right_owner[r]) left_match[*right_owner[r]] = r;
  return left_match;
}

EpisodeScore match_episode_ordered(const std::vector<AtomicUnit>& pred_units,
                                   const GtPlan& gt_plan,
                                   const Thresholds& th) {
  EpisodeScore out;
  out.arr_total = gt_plan.unit_count();

  std::size_t cursor = 0;     // next unconsumed predicted unit
  std::size_t gt_offset = 0;  // flat index of the block's first GT unit
  bool all_success = true;
  for (const GtBlock& block : gt_plan.blocks) {
    const std::size_t k = block.units.size();
    const std::size_t avail = cursor < pred_units.size()
                                  ? std::min(k, pred_units.size() - cursor)
                                  : 0;
    if (!block.unordered) {
      for (std::size_t i = 0; i < k; ++i) {
        UnitOutcome o;
        o.gt_index = gt_offset + i;
        if (i < avail) {
          o.matched_pred_index = cursor + i;
          o.success = unit_success(pred_units[cursor + i], block.units[i], th);
        }
        all_success = all_success && o.success;
        out.per_unit.push_back(o);
      }
    } else {
      // Perfect matching of the next k predicted units to the block's units.
      std::vector<std::vector<std::size_t>> adj(avail);
      for (std::size_t i = 0; i < avail; ++i)
        for (std::size_t j = 0; j < k; ++j)
          if (unit_success(pred_units[cursor + i], block.units[j], th))
            adj[i].push_back(j);
      auto match = max_bipartite_matching(adj, k);
      std::vector<std::optional<std::size_t>> gt_to_pred(k);
      for (std::size_t i = 0; i < avail; ++i)
        if (match[i]) gt_to_pred[*match[i]] = cursor + i;
      for (std::size_t j = 0; j < k; ++j) {
        UnitOutcome o;
        o.gt_index = gt_offset + j;
        o.matched_pred_index = gt_to_pred[j];
        o.success = gt_to_pred[j].has_value();
        all_success = all_success && o.success;
        out.per_unit.push_back(o);
      }
    }
    cursor += avail;
    gt_offset += k;
  }
  out.tsr = all_success && pred_units.size() == out.arr_total;
  return out;
}

ArrResult arr_episode(const std::vector<AtomicUnit>& pred_units,
                      const GtPlan& gt_plan, const Thresholds& th) {
  const std::vector<AtomicUnit> gt_units = gt_plan.flattened();
  std::vector<std::vector<std::size_t>> adj(pred_units.size());
  for (std::size_t i = 0; i < pred_units.size(); ++i)
    for (std::size_t j = 0; j < gt_units.size(); ++j)
      if (unit_success(pred_units[i], gt_units[j], th)) adj[i].push_back(j);
  auto match = max_bipartite_matching(adj, gt_units.size());
  ArrResult r;
  r.total = gt_units.size();
  for (const auto& m : match)
    if (m) ++r.matched;
  return r;
}

EpisodeScore score_episode(const std::vector<AtomicUnit>& pred_units,
                           const GtPlan& gt_plan, const Thresholds& th) {
  EpisodeScore score = match_episode_ordered(pred_units, gt_plan, th);
  ArrResult arr = arr_episode(pred_units, gt_plan, th);
  score.arr_matched = arr.matched;
  score.arr_total = arr.total;
  return score;
}

std::vector<AggregateCell> aggregate(const std::vector<ScoredEpisode>& scores) {
  struct Acc {
    std::size_t n = 0;
    std::size_t tsr_true = 0;
    std::size_t matched = 0;
    std::size_t total = 0;
  };
  Acc cells[2][3] = {};
  for (const ScoredEpisode& s : scores) {
    Acc& a = cells[static_cast<int>(s.instruction_type)]
                  [static_cast<int>(s.bucket)];
    ++a.n;
    if (s.score.tsr) ++a.tsr_true;
    a.matched += s.score.arr_matched;
    a.total += s.score.arr_total;
  }
  std::vector<AggregateCell> out;
  for (int t = 0; t < 2; ++t)
    for (int b = 0; b < 3; ++b) {
      const Acc& a = cells[t][b];
      if (a.n == 0) continue;
      AggregateCell c;
      c.instruction_type = static_cast<InstructionType>(t);
      c.bucket = static_cast<HorizonBucket>(b);
      c.n_episodes = a.n;
      c.tsr_pct = 100.0 * static_cast<double>(a.tsr_true) / a.n;
      c.arr_pct = a.total == 0
                      ? 0.0
                      : 100.0 * static_cast<double>(a.matched) / a.total;
      out.push_back(c);
    }
  return out;
}

}  // namespace gpbench
