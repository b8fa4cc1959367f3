#include "gpbench/synth.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace gpbench {

namespace {

// Box constrained to the left half of the image, margins included.
BBox random_left_box(const SynthesisConfig& cfg, DetRng& rng) {
  const double w = rng.uniform(cfg.box_size_min, cfg.box_size_max);
  const double h = rng.uniform(cfg.box_size_min, cfg.box_size_max);
  const double x = rng.uniform(0.0, 0.49 - w);
  const double y = rng.uniform(0.0, 1.0 - h);
  return BBox(x, y, x + w, y + h);
}

AtomicUnit random_unit(const SynthesisConfig& cfg, DetRng& rng, int index) {
  const std::string tag = std::to_string(index);
  if (rng.bernoulli(0.6)) {
    GroundedAction grasp{Primitive::Grasp, "object-" + tag,
                         random_left_box(cfg, rng)};
    GroundedAction place{Primitive::Place, "destination-" + tag,
                         random_left_box(cfg, rng)};
    return {AtomicUnit::Manipulation{grasp, place}};
  }
  const Primitive prim =
      rng.bernoulli(0.5) ? Primitive::Open : Primitive::Close;
  GroundedAction action{prim, "fixture-" + tag, random_left_box(cfg, rng)};
  return {AtomicUnit::Articulation{action}};
}

}  // namespace

Episode gen_episode(const SynthesisConfig& cfg, DetRng& rng) {
  if (cfg.n_units_min < 1 || cfg.n_units_max > 26 ||
      cfg.n_units_min > cfg.n_units_max)
    throw std::invalid_argument("gen_episode: bad n_units range");
  if (!(cfg.box_size_min > 0.0 && cfg.box_size_min <= cfg.box_size_max &&
        cfg.box_size_max <= 0.4))
    throw std::invalid_argument("gen_episode: box size range outside (0, 0.4]");

  const std::size_t n =
      cfg.n_units_min + rng.index(cfg.n_units_max - cfg.n_units_min + 1);
  std::vector<AtomicUnit> units;
  for (std::size_t i = 0; i < n; ++i)
    units.push_back(random_unit(cfg, rng, static_cast<int>(i)));

  Episode ep;
  std::size_t i = 0;
  while (i < n) {
    GtBlock block;
    std::size_t size = 1;
    if (n - i >= 2 && rng.bernoulli(cfg.unordered_block_prob)) {
      block.unordered = true;
      size = 2 + rng.index(std::min<std::size_t>(n - i, 3) - 1);
    }
    for (std::size_t k = 0; k < size; ++k) block.units.push_back(units[i + k]);
    ep.gt_plan.blocks.push_back(std::move(block));
    i += size;
  }

  const std::uint64_t tag = rng.next_u64() % 1000000;
  ep.id = "synth-" + std::to_string(tag);
  ep.image_width = cfg.image_width;
  ep.image_height = cfg.image_height;
  ep.image_ref = ep.id + ".ppm";
  ep.explicit_instruction =
      "move each listed object to its destination (" + ep.id + ")";
  ep.implicit_instruction = "tidy up the scene (" + ep.id + ")";
  ep.source_meta["generator"] = "synth";
  return ep;
}

namespace {

BBox shifted_away(const BBox& b) {
  if (b.x_max + 0.5 <= 1.0)
    return BBox(b.x_min + 0.5, b.y_min, b.x_max + 0.5, b.y_max);
  if (b.x_min - 0.5 >= 0.0)
    return BBox(b.x_min - 0.5, b.y_min, b.x_max - 0.5, b.y_max);
  // box straddles the midline; no translation can guarantee zero overlap
  throw std::invalid_argument(
      "perturbed_planner: GT box too wide to displace past threshold");
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

PredictedPlan perturbed_planner(const GtPlan& gt_plan, double p_correct,
                                double jitter, DetRng& rng) {
  if (p_correct < 0.0 || p_correct > 1.0)
    throw std::invalid_argument("perturbed_planner: p_correct outside [0,1]");
  PredictedPlan plan;
  for (const AtomicUnit& u : gt_plan.flattened()) {
    const bool correct = rng.bernoulli(p_correct);
    if (u.is_manipulation()) {
      const auto& m = u.manipulation();
      const BBox& gt_grasp = *m.grasp.bbox();
      const BBox& region = *m.place.bbox();
      BBox grasp_box = correct ? gt_grasp : shifted_away(gt_grasp);
      double px = region.center_x();
      double py = region.center_y();
      if (!correct) {
        BBox miss = shifted_away(region);
        px = miss.center_x();
        py = clamp01(miss.center_y() + rng.uniform(-jitter, jitter));
      }
      plan.actions.push_back({Primitive::Grasp, m.grasp.target_text, grasp_box});
      plan.actions.push_back(
          {Primitive::Place, m.place.target_text, Point2D(px, py)});
    } else if (u.is_articulation()) {
      const auto& a = u.articulation().action;
      BBox box = correct ? *a.bbox() : shifted_away(*a.bbox());
      plan.actions.push_back({a.primitive, a.target_text, box});
    }
  }
  return plan;
}

namespace {

bool check_permutation(const std::vector<AtomicUnit>& pred,
                       const GtPlan& gt_plan, const Thresholds& th,
                       std::size_t block_idx, std::size_t offset) {
  if (block_idx == gt_plan.blocks.size()) return true;
  const GtBlock& block = gt_plan.blocks[block_idx];
  const std::size_t k = block.units.size();

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), 0);
  do {
    bool ok = true;
    for (std::size_t i = 0; i < k && ok; ++i)
      ok = unit_success(pred[offset + i], block.units[order[i]], th);
    if (ok &&
        check_permutation(pred, gt_plan, th, block_idx + 1, offset + k))
      return true;
    if (!block.unordered) break;  // ordered blocks get the identity only
  } while (std::next_permutation(order.begin(), order.end()));
  return false;
}

}  // namespace

bool brute_force_tsr(const std::vector<AtomicUnit>& pred_units,
                     const GtPlan& gt_plan, const Thresholds& th) {
  const std::size_t total = gt_plan.unit_count();
  if (total > 8)
    throw std::invalid_argument("brute_force_tsr: more than 8 units");
  if (pred_units.size() != total) return false;
  return check_permutation(pred_units, gt_plan, th, 0, 0);
}

GripperSignal gen_gripper_signal(const std::vector<Segment>& segments,
                                 std::size_t total_frames, double noise,
                                 DetRng& rng, double fps) {
  GripperSignal sig;
  sig.fps = fps;
  sig.values.assign(total_frames, 0.0);
  for (const Segment& seg : segments) {
    if (!(seg.s < seg.e && seg.e < total_frames))
      throw std::invalid_argument("gen_gripper_signal: segment out of range");
    for (std::size_t f = seg.s; f < seg.e; ++f) sig.values[f] = 1.0;
  }
  if (noise > 0.0)
    for (double& v : sig.values)
      v = clamp01(v + rng.uniform(-noise, noise));
  return sig;
}

}  // namespace gpbench
