#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "gpbench/gripper.hpp"
#include "gpbench/plan.hpp"

namespace gpbench {

// File formats use pixel-integer coordinates; everything in memory is
// normalized. Conversion happens only here, carrying the image dims.

nlohmann::json action_to_json(const GroundedAction& a, int w, int h);
GroundedAction action_from_json(const nlohmann::json& j, int w, int h);

nlohmann::json gt_plan_to_json(const GtPlan& plan, int w, int h);
GtPlan gt_plan_from_json(const nlohmann::json& j, int w, int h);

nlohmann::json episode_to_json(const Episode& ep);
Episode episode_from_json(const nlohmann::json& j);

// One JSON record per line; validates ids unique, dims positive, unit count
// in 1..26. Throws std::runtime_error with the offending line on bad input.
std::vector<Episode> load_episodes(const std::string& path);
void save_episodes(const std::vector<Episode>& episodes,
                   const std::string& path);

struct DemonstrationEpisode {
  std::string id;
  std::vector<std::string> frames;  // one raster ref per gripper sample
  int image_width = 0;
  int image_height = 0;
  GripperSignal gripper;  // closure convention after polarity mapping
  std::string instruction;
  bool camera_static = true;
  std::map<std::string, std::string> trajectory_meta;
};

// Demonstration manifest: {id, frame_dir, image_width, image_height,
// gripper: [floats], gripper_polarity: "closure"|"aperture", fps,
// instruction, camera_static}. Aperture signals are inverted at ingest so
// 1 always means closed internally.
std::vector<DemonstrationEpisode> load_demo_manifest(const std::string& path);
void save_demo_manifest(const std::vector<DemonstrationEpisode>& episodes,
                        const std::string& path,
                        const std::string& polarity = "closure");

struct TrainingSample {
  std::string image_ref;
  int image_width = 0;
  int image_height = 0;
  std::string explicit_instruction;
  std::string implicit_instruction;
  GtPlan plan;  // GT-style: place carries the destination region
  std::string episode_id;
  std::vector<Segment> segments;
  std::vector<std::string> backend_ids;
  std::vector<std::string> flags;
};

nlohmann::json sample_to_json(const TrainingSample& s);
TrainingSample sample_from_json(const nlohmann::json& j);

std::vector<TrainingSample> load_samples(const std::string& path);

}  // namespace gpbench
