#include "gpbench/v2gp.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>

#include <json.hpp>

namespace gpbench {

using nlohmann::json;

namespace {

const char* kDefaultIdentifyPrompt =
    "You are shown frames from one robot interaction segment.\n"
    "Describe the manipulated object as JSON:\n"
    "{\"description\": <detailed visually grounded phrase>,\n"
    " \"category\": <semantic category>,\n"
    " \"interaction\": \"pick_place\" | \"open\" | \"close\"}\n"
    "Frames: {I}\nOriginal instruction: {H}\n";

const char* kDefaultRewritePrompt =
    "Rewrite the following concrete task instruction as a short abstract "
    "goal (e.g. \"tidy up the table\").\nInstruction: {H}\n";

const char* kDefaultRevisePrompt =
    "The executed plan covers only part of the original instruction. "
    "Rewrite the instruction to describe only the completed steps.\n"
    "Instruction: {H}\n";

// First well-formed JSON object embedded in the response text.
std::optional<json> find_object(const std::string& text) {
  for (std::size_t start = text.find('{'); start != std::string::npos;
       start = text.find('{', start + 1)) {
    int depth = 0;
    bool in_str = false, esc = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_str) {
        if (esc) esc = false;
        else if (c == '\\') esc = true;
        else if (c == '"') in_str = false;
        continue;
      }
      if (c == '"') in_str = true;
      else if (c == '{') ++depth;
      else if (c == '}') {
        if (--depth == 0) {
          json j = json::parse(text.substr(start, i - start + 1), nullptr, false);
          if (j.is_object()) return j;
          break;
        }
      }
    }
  }
  return std::nullopt;
}

std::vector<std::string> sample_frames(const DemonstrationEpisode& ep,
                                       const Segment& seg) {
  std::vector<std::string> out;
  const std::size_t span = seg.e - seg.s;
  const std::size_t n = std::min<std::size_t>(span + 1, 8);  // first, last, <=6 between
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t f = seg.s + (span * i) / (n - 1 == 0 ? 1 : n - 1);
    if (out.empty() || out.back() != ep.frames[f]) out.push_back(ep.frames[f]);
  }
  return out;
}

}  // namespace

std::optional<ObjectIdentity> identify_object(const DemonstrationEpisode& ep,
                                              const Segment& segment,
                                              std::size_t segment_index,
                                              PlannerBackend& planner,
                                              const V2gpConfig& cfg) {
  if (!planner.capabilities().object_identification)
    throw std::invalid_argument("planner lacks object_identification");
  std::string frames;
  for (const std::string& f : sample_frames(ep, segment)) {
    if (!frames.empty()) frames += ", ";
    frames += f;
  }
  PlanRequest req;
  req.key = ep.id + "#seg" + std::to_string(segment_index) + "#identify";
  req.image_ref = ep.frames.empty() ? "" : ep.frames[segment.s];
  req.instruction = ep.instruction;
  req.prompt = render_prompt(cfg.identify_prompt_template.empty()
                                 ? kDefaultIdentifyPrompt
                                 : cfg.identify_prompt_template,
                             frames, ep.instruction);
  req.seed = cfg.seed;

  std::string raw;
  try {
    raw = planner.generate(req);
  } catch (const BackendError&) {
    return std::nullopt;
  }
  auto j = find_object(raw);
  if (!j || !j->contains("description") || !j->contains("category"))
    return std::nullopt;
  ObjectIdentity id;
  id.description = (*j)["description"].get<std::string>();
  id.category = (*j)["category"].get<std::string>();
  if (id.description.empty() || id.category.empty()) return std::nullopt;
  const std::string kind = j->value("interaction", "pick_place");
  if (kind == "open") id.primitive_class = InteractionClass::Open;
  else if (kind == "close") id.primitive_class = InteractionClass::Close;
  else id.primitive_class = InteractionClass::Manipulation;
  return id;
}

double track_consistency(const Track& track, const Segment& segment,
                         double continuity_threshold) {
  const std::size_t n_frames = segment.e - segment.s + 1;
  std::size_t good = 0;
  const BBox* prev = nullptr;
  for (std::size_t f = segment.s; f <= segment.e; ++f) {
    auto it = track.per_frame.find(f);
    if (it == track.per_frame.end()) {
      prev = nullptr;
      continue;
    }
    if (prev == nullptr || iou(*prev, it->second) >= continuity_threshold)
      ++good;
    prev = &it->second;
  }
  return static_cast<double>(good) / static_cast<double>(n_frames);
}

std::optional<Track> ground_segment(const DemonstrationEpisode& ep,
                                    const Segment& segment,
                                    std::size_t segment_index,
                                    const ObjectIdentity& identity,
                                    const std::string& original_phrase,
                                    GroundingBackend& grounder,
                                    const V2gpConfig& cfg) {
  if (!grounder.capabilities().track)
    throw std::invalid_argument("grounder lacks track capability");
  const std::string key = ep.id + "#seg" + std::to_string(segment_index);
  const std::string cues[3] = {original_phrase, identity.description,
                               identity.category};
  std::optional<Track> best;
  for (const std::string& cue : cues) {
    Track t = grounder.track(key, segment, cue);
    if (t.per_frame.empty()) continue;
    t.consistency = track_consistency(t, segment, cfg.continuity_threshold);
    if (!best || t.consistency > best->consistency) best = std::move(t);
  }
  return best;
}

namespace {

// Box at the wanted frame, or the nearest tracked frame inside the segment.
std::optional<BBox> box_near(const Track& track, std::size_t frame,
                             const Segment& seg) {
  auto it = track.per_frame.find(frame);
  if (it != track.per_frame.end()) return it->second;
  std::optional<BBox> best;
  std::size_t best_dist = 0;
  for (const auto& [f, box] : track.per_frame) {
    if (f < seg.s || f > seg.e) continue;
    const std::size_t dist = f > frame ? f - frame : frame - f;
    if (!best || dist < best_dist) {
      best = box;
      best_dist = dist;
    }
  }
  return best;
}

}  // namespace

AssembledPlan assemble_plan(const DemonstrationEpisode& ep,
                            const std::vector<SegmentAnalysis>& analyses) {
  if (!ep.camera_static)
    throw std::invalid_argument(
        "assemble_plan: episode lacks a static camera; first-frame "
        "coordinates would be invalid");
  AssembledPlan out;
  for (std::size_t i = 0; i < analyses.size(); ++i) {
    const SegmentAnalysis& a = analyses[i];
    if (a.flagged()) {
      out.skipped_segments.push_back(i);
      continue;
    }
    auto start_box = box_near(*a.track, a.segment.s, a.segment);
    auto end_box = box_near(*a.track, a.segment.e, a.segment);
    if (!start_box || !end_box) {
      out.skipped_segments.push_back(i);
      continue;
    }
    GtBlock block;
    const ObjectIdentity& id = *a.identity;
    switch (id.primitive_class) {
      case InteractionClass::Manipulation: {
        GroundedAction grasp{Primitive::Grasp, id.description, *start_box};
        GroundedAction place{Primitive::Place, id.description, *end_box};
        block.units.push_back({AtomicUnit::Manipulation{grasp, place}});
        break;
      }
      case InteractionClass::Open:
        block.units.push_back({AtomicUnit::Articulation{
            {Primitive::Open, id.description, *start_box}}});
        break;
      case InteractionClass::Close:
        block.units.push_back({AtomicUnit::Articulation{
            {Primitive::Close, id.description, *start_box}}});
        break;
    }
    out.plan.blocks.push_back(std::move(block));
  }
  return out;
}

RewriteResult generate_implicit_instruction(const std::string& explicit_text,
                                            PlannerBackend& planner,
                                            const V2gpConfig& cfg) {
  if (!planner.capabilities().instruction_rewrite)
    throw std::invalid_argument("planner lacks instruction_rewrite");
  PlanRequest req;
  req.key = "rewrite#" + explicit_text;
  req.instruction = explicit_text;
  req.prompt = render_prompt(cfg.rewrite_prompt_template.empty()
                                 ? kDefaultRewritePrompt
                                 : cfg.rewrite_prompt_template,
                             "", explicit_text);
  req.seed = cfg.seed;
  std::string raw;
  try {
    raw = planner.generate(req);
  } catch (const BackendError&) {
    raw.clear();
  }
  while (!raw.empty() && std::isspace(static_cast<unsigned char>(raw.back())))
    raw.pop_back();
  if (raw.empty()) return {explicit_text, true};
  return {raw, false};
}

std::optional<TrainingSample> filter_and_refine(
    TrainingSample sample, const std::vector<SegmentAnalysis>& analyses,
    PlannerBackend& planner, const V2gpConfig& cfg) {
  bool any_skipped = false;
  for (const SegmentAnalysis& a : analyses) {
    if (a.flagged()) {
      any_skipped = true;
      continue;
    }
    if (a.track->consistency < cfg.min_consistency) return std::nullopt;
  }

  if (any_skipped) {
    PlanRequest req;
    req.key = sample.episode_id + "#revise";
    req.instruction = sample.explicit_instruction;
    req.prompt = render_prompt(cfg.revise_prompt_template.empty()
                                   ? kDefaultRevisePrompt
                                   : cfg.revise_prompt_template,
                               "", sample.explicit_instruction);
    req.seed = cfg.seed;
    std::string revised;
    try {
      revised = planner.generate(req);
    } catch (const BackendError&) {
      return std::nullopt;  // conservative: no instruction, no sample
    }
    while (!revised.empty() &&
           std::isspace(static_cast<unsigned char>(revised.back())))
      revised.pop_back();
    if (revised.empty()) return std::nullopt;
    sample.explicit_instruction = revised;
    RewriteResult implicit =
        generate_implicit_instruction(revised, planner, cfg);
    sample.implicit_instruction = implicit.text;
    if (implicit.fell_back) sample.flags.push_back("implicit_fallback");
    sample.flags.push_back("revised_instruction");
  }
  return sample;
}

std::optional<TrainingSample> process_episode(const DemonstrationEpisode& ep,
                                              PlannerBackend& planner,
                                              GroundingBackend& grounder,
                                              const V2gpConfig& cfg) {
  if (!ep.camera_static) return std::nullopt;
  std::vector<Segment> segments = segment_signal(ep.gripper, cfg.segmentation);
  if (segments.empty()) return std::nullopt;

  std::vector<SegmentAnalysis> analyses;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    SegmentAnalysis a;
    a.segment = segments[i];
    a.identity = identify_object(ep, segments[i], i, planner, cfg);
    if (a.identity)
      a.track = ground_segment(ep, segments[i], i, *a.identity,
                               ep.instruction, grounder, cfg);
    analyses.push_back(std::move(a));
  }

  AssembledPlan assembled = assemble_plan(ep, analyses);
  if (assembled.plan.unit_count() == 0 || assembled.plan.unit_count() > 26)
    return std::nullopt;

  TrainingSample sample;
  sample.image_ref = ep.frames.empty() ? "" : ep.frames.front();
  sample.image_width = ep.image_width;
  sample.image_height = ep.image_height;
  sample.explicit_instruction = ep.instruction;
  sample.plan = assembled.plan;
  sample.episode_id = ep.id;
  sample.segments = segments;
  sample.backend_ids = {planner.id(), grounder.id()};
  for (std::size_t i : assembled.skipped_segments)
    sample.flags.push_back("skipped_segment:" + std::to_string(i));

  RewriteResult implicit =
      generate_implicit_instruction(ep.instruction, planner, cfg);
  sample.implicit_instruction = implicit.text;
  if (implicit.fell_back) sample.flags.push_back("implicit_fallback");

  return filter_and_refine(std::move(sample), analyses, planner, cfg);
}

EmitStats emit_samples(const std::vector<TrainingSample>& samples,
                       const std::string& path) {
  EmitStats stats;
  {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write samples: " + path);
    for (const TrainingSample& s : samples) {
      out << sample_to_json(s).dump() << "\n";
      if (!out) {
        out.close();
        std::remove(path.c_str());
        throw std::runtime_error("write failed, partial file removed: " + path);
      }
      ++stats.total;
      switch (bucket_for(s.plan.unit_count())) {
        case HorizonBucket::Short: ++stats.short_horizon; break;
        case HorizonBucket::Medium: ++stats.medium_horizon; break;
        case HorizonBucket::Long: ++stats.long_horizon; break;
      }
    }
  }
  return stats;
}

}  // namespace gpbench
