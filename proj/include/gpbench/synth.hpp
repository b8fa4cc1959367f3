#pragma once

#include <cstdint>
#include <random>

#include "gpbench/gripper.hpp"
#include "gpbench/plan.hpp"
#include "gpbench/scoring.hpp"

namespace gpbench {

// Seeded generator with platform-independent uniforms (std:: distributions
// are implementation-defined, which would break cross-platform determinism).
class DetRng {
 public:
  explicit DetRng(std::uint64_t seed) : engine_(seed) {}

  double uniform() {  // [0, 1)
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  std::uint64_t next_u64() { return engine_(); }
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

struct SynthesisConfig {
  std::uint64_t seed = 1;
  std::size_t n_units_min = 1;
  std::size_t n_units_max = 6;
  double unordered_block_prob = 0.3;
  double box_size_min = 0.05;
  double box_size_max = 0.15;
  double noise_amplitude = 0.0;  // gripper signal noise
  double p_correct = 1.0;
  double bbox_jitter = 0.02;
  double point_jitter = 0.02;
  int image_width = 640;
  int image_height = 480;
};

// Random episode with mixed primitives and unordered blocks. All GT boxes
// and place regions keep x < 0.5 so a failing prediction can be displaced by
// +0.5 with guaranteed zero overlap against every GT unit.
Episode gen_episode(const SynthesisConfig& cfg, DetRng& rng);

// Per GT unit independently: correct with probability p_correct (grasp box =
// GT box, place point = region center), otherwise displaced past the image
// midline so it fails against every GT unit by construction.
PredictedPlan perturbed_planner(const GtPlan& gt_plan, double p_correct,
                                double jitter, DetRng& rng);

// Exhaustive TSR oracle: enumerates every within-block permutation. Refuses
// plans with more than 8 units (factorial guard); test-scale only.
bool brute_force_tsr(const std::vector<AtomicUnit>& pred_units,
                     const GtPlan& gt_plan, const Thresholds& th);

// Rectangular closure profile (1 on [s,e), 0 elsewhere) plus bounded uniform
// noise clamped to [0,1].
GripperSignal gen_gripper_signal(const std::vector<Segment>& segments,
                                 std::size_t total_frames, double noise,
                                 DetRng& rng, double fps = 30.0);

}  // namespace gpbench
