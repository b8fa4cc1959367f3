#include "gpbench/dataset.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace gpbench {

using nlohmann::json;

namespace {

long to_px(double norm, int dim) {
  return static_cast<long>(std::floor(norm * dim + 0.5));
}

double from_px(double px, int dim) { return px / dim; }

json bbox_px(const BBox& b, int w, int h) {
  return json::array(
      {to_px(b.x_min, w), to_px(b.y_min, h), to_px(b.x_max, w), to_px(b.y_max, h)});
}

BBox bbox_from_px(const json& a, int w, int h) {
  return BBox(from_px(a[0].get<double>(), w), from_px(a[1].get<double>(), h),
              from_px(a[2].get<double>(), w), from_px(a[3].get<double>(), h));
}

}  // namespace

json action_to_json(const GroundedAction& a, int w, int h) {
  json j{{"action", primitive_name(a.primitive)}, {"target", a.target_text}};
  if (a.primitive == Primitive::Place) {
    if (const BBox* region = a.bbox()) {
      // GT-style place: destination region plus its center point
      j["region"] = bbox_px(*region, w, h);
      j["point"] = json::array(
          {to_px(region->center_x(), w), to_px(region->center_y(), h)});
    } else {
      const Point2D* p = a.point();
      j["point"] = json::array({to_px(p->x, w), to_px(p->y, h)});
    }
  } else {
    j["bbox"] = bbox_px(*a.bbox(), w, h);
  }
  return j;
}

GroundedAction action_from_json(const json& j, int w, int h) {
  auto prim = parse_primitive(j.at("action").get<std::string>());
  if (!prim) throw std::runtime_error("unknown primitive: " + j.dump());
  std::string target = j.value("target", std::string("unknown"));
  if (target.empty()) target = "unknown";
  if (*prim == Primitive::Place) {
    if (j.contains("region"))
      return {*prim, target, bbox_from_px(j["region"], w, h)};
    const json& p = j.at("point");
    return {*prim, target,
            Point2D(from_px(p[0].get<double>(), w), from_px(p[1].get<double>(), h))};
  }
  return {*prim, target, bbox_from_px(j.at("bbox"), w, h)};
}

json gt_plan_to_json(const GtPlan& plan, int w, int h) {
  json blocks = json::array();
  for (const GtBlock& b : plan.blocks) {
    json actions = json::array();
    for (const AtomicUnit& u : b.units) {
      if (u.is_manipulation()) {
        actions.push_back(action_to_json(u.manipulation().grasp, w, h));
        actions.push_back(action_to_json(u.manipulation().place, w, h));
      } else if (u.is_articulation()) {
        actions.push_back(action_to_json(u.articulation().action, w, h));
      }
    }
    blocks.push_back(json{{"unordered", b.unordered}, {"actions", actions}});
  }
  return blocks;
}

GtPlan gt_plan_from_json(const json& j, int w, int h) {
  GtPlan plan;
  for (const json& jb : j) {
    GtBlock block;
    block.unordered = jb.value("unordered", false);
    std::vector<GroundedAction> actions;
    for (const json& ja : jb.at("actions"))
      actions.push_back(action_from_json(ja, w, h));
    block.units = pair_atomic_units(actions);
    for (const AtomicUnit& u : block.units)
      if (u.is_malformed())
        throw std::runtime_error("GT block contains malformed pairing");
    if (block.units.empty())
      throw std::runtime_error("GT block is empty");
    plan.blocks.push_back(std::move(block));
  }
  return plan;
}

json episode_to_json(const Episode& ep) {
  json meta = json::object();
  for (const auto& [k, v] : ep.source_meta) meta[k] = v;
  return json{{"id", ep.id},
              {"image", ep.image_ref},
              {"image_width", ep.image_width},
              {"image_height", ep.image_height},
              {"instruction_explicit", ep.explicit_instruction},
              {"instruction_implicit", ep.implicit_instruction},
              {"gt_plan", gt_plan_to_json(ep.gt_plan, ep.image_width,
                                          ep.image_height)},
              {"source_meta", meta}};
}

Episode episode_from_json(const json& j) {
  Episode ep;
  ep.id = j.at("id").get<std::string>();
  ep.image_ref = j.at("image").get<std::string>();
  ep.image_width = j.at("image_width").get<int>();
  ep.image_height = j.at("image_height").get<int>();
  if (ep.image_width <= 0 || ep.image_height <= 0)
    throw std::runtime_error("episode " + ep.id + ": non-positive image dims");
  ep.explicit_instruction = j.at("instruction_explicit").get<std::string>();
  ep.implicit_instruction = j.at("instruction_implicit").get<std::string>();
  if (ep.explicit_instruction.empty() || ep.implicit_instruction.empty())
    throw std::runtime_error("episode " + ep.id + ": empty instruction");
  ep.gt_plan = gt_plan_from_json(j.at("gt_plan"), ep.image_width,
                                 ep.image_height);
  bucket_for(ep.gt_plan.unit_count());  // rejects 0 or > 26 units
  const json meta = j.value("source_meta", json::object());
  for (const auto& [k, v] : meta.items())
    ep.source_meta[k] = v.get<std::string>();
  return ep;
}

std::vector<Episode> load_episodes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  std::vector<Episode> out;
  std::set<std::string> ids;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": invalid JSON");
    Episode ep = episode_from_json(j);
    if (!ids.insert(ep.id).second)
      throw std::runtime_error("duplicate episode id: " + ep.id);
    out.push_back(std::move(ep));
  }
  return out;
}

void save_episodes(const std::vector<Episode>& episodes,
                   const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write dataset: " + path);
  for (const Episode& ep : episodes) out << episode_to_json(ep).dump() << "\n";
}

std::vector<DemonstrationEpisode> load_demo_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  std::vector<DemonstrationEpisode> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw std::runtime_error(path + ":" + std::to_string(line_no) +
                               ": invalid JSON");
    DemonstrationEpisode ep;
    ep.id = j.at("id").get<std::string>();
    ep.image_width = j.at("image_width").get<int>();
    ep.image_height = j.at("image_height").get<int>();
    ep.instruction = j.at("instruction").get<std::string>();
    ep.camera_static = j.value("camera_static", true);
    ep.gripper.fps = j.value("fps", 30.0);
    const std::string polarity = j.value("gripper_polarity", "closure");
    for (const json& v : j.at("gripper")) {
      double x = v.get<double>();
      ep.gripper.values.push_back(polarity == "aperture" ? 1.0 - x : x);
    }
    validate_signal(ep.gripper);
    const std::string frame_dir = j.value("frame_dir", ep.id);
    for (std::size_t f = 0; f < ep.gripper.values.size(); ++f) {
      char name[32];
      std::snprintf(name, sizeof(name), "/%06zu.ppm", f);
      ep.frames.push_back(frame_dir + name);
    }
    const json tmeta = j.value("trajectory_meta", json::object());
    for (const auto& [k, v] : tmeta.items())
      ep.trajectory_meta[k] = v.get<std::string>();
    out.push_back(std::move(ep));
  }
  return out;
}

void save_demo_manifest(const std::vector<DemonstrationEpisode>& episodes,
                        const std::string& path, const std::string& polarity) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  for (const DemonstrationEpisode& ep : episodes) {
    json gripper = json::array();
    for (double v : ep.gripper.values)
      gripper.push_back(polarity == "aperture" ? 1.0 - v : v);
    std::string frame_dir =
        ep.frames.empty() ? ep.id
                          : ep.frames[0].substr(0, ep.frames[0].rfind('/'));
    json j{{"id", ep.id},
           {"frame_dir", frame_dir},
           {"image_width", ep.image_width},
           {"image_height", ep.image_height},
           {"gripper", gripper},
           {"gripper_polarity", polarity},
           {"fps", ep.gripper.fps},
           {"instruction", ep.instruction},
           {"camera_static", ep.camera_static}};
    out << j.dump() << "\n";
  }
}

json sample_to_json(const TrainingSample& s) {
  json plan = json::array();
  for (const AtomicUnit& u : s.plan.flattened()) {
    if (u.is_manipulation()) {
      plan.push_back(
          action_to_json(u.manipulation().grasp, s.image_width, s.image_height));
      plan.push_back(
          action_to_json(u.manipulation().place, s.image_width, s.image_height));
    } else if (u.is_articulation()) {
      plan.push_back(action_to_json(u.articulation().action, s.image_width,
                                    s.image_height));
    }
  }
  json segs = json::array();
  for (const Segment& seg : s.segments)
    segs.push_back(json::array({seg.s, seg.e}));
  return json{{"image", s.image_ref},
              {"image_width", s.image_width},
              {"image_height", s.image_height},
              {"instruction_explicit", s.explicit_instruction},
              {"instruction_implicit", s.implicit_instruction},
              {"plan", plan},
              {"provenance",
               {{"episode", s.episode_id},
                {"segments", segs},
                {"backends", s.backend_ids},
                {"flags", s.flags}}}};
}

TrainingSample sample_from_json(const json& j) {
  TrainingSample s;
  s.image_ref = j.at("image").get<std::string>();
  s.image_width = j.at("image_width").get<int>();
  s.image_height = j.at("image_height").get<int>();
  s.explicit_instruction = j.at("instruction_explicit").get<std::string>();
  s.implicit_instruction = j.at("instruction_implicit").get<std::string>();
  std::vector<GroundedAction> actions;
  for (const json& ja : j.at("plan"))
    actions.push_back(action_from_json(ja, s.image_width, s.image_height));
  GtBlock block;
  block.units = pair_atomic_units(actions);
  s.plan.blocks = {block};
  const json& prov = j.at("provenance");
  s.episode_id = prov.at("episode").get<std::string>();
  for (const json& seg : prov.at("segments"))
    s.segments.push_back({seg[0].get<std::size_t>(), seg[1].get<std::size_t>()});
  for (const json& b : prov.value("backends", json::array()))
    s.backend_ids.push_back(b.get<std::string>());
  for (const json& f : prov.value("flags", json::array()))
    s.flags.push_back(f.get<std::string>());
  return s;
}

std::vector<TrainingSample> load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open samples: " + path);
  std::vector<TrainingSample> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(sample_from_json(json::parse(line)));
  }
  return out;
}

}  // namespace gpbench
