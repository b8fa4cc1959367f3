#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "gpbench/backend.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/image.hpp"
#include "gpbench/plan_dsl.hpp"
#include "gpbench/scoring.hpp"

namespace gpbench {

enum class Paradigm { EndToEnd, DecoupledPlannerGrounder, DecoupledSoM };

Paradigm parse_paradigm(const std::string& s);

enum class InstructionFilter { Explicit, Implicit, Both };

struct RunConfig {
  std::string dataset_path;
  Paradigm paradigm = Paradigm::EndToEnd;
  // Planner spec: mock-gt:// | mock-perturb://<p> | replay://<script.json> |
  // http(s)://host[:port]
  std::string planner_spec = "mock-gt://";
  std::string planner_model;
  std::string planner_auth_env;
  // Grounder spec (decoupled paradigms): mock-script://<script.json>
  std::string grounder_spec;
  Thresholds thresholds;
  InstructionFilter instructions = InstructionFilter::Both;
  int concurrency = 1;
  std::string cache_path;  // empty disables the request cache
  bool resume = false;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string prompt_template_path;  // empty = built-in template
};

struct ResultRecord {
  std::string episode_id;
  InstructionType instruction_type = InstructionType::Explicit;
  HorizonBucket bucket = HorizonBucket::Short;
  std::string image_ref;
  int image_width = 0;
  int image_height = 0;
  std::string raw_response;
  std::string plan_text;  // canonical serialized predicted plan
  EpisodeScore score;
  std::vector<ParseDiagnostic> diagnostics;
  long latency_ms = 0;
  bool failed = false;  // backend error; scored as a failure, run continues
};

nlohmann::json record_to_json(const ResultRecord& r);
ResultRecord record_from_json(const nlohmann::json& j);

std::vector<ResultRecord> load_results(const std::string& path);

// Runs the evaluation, appending one record per (episode, instruction type)
// to the results file in dataset order. With resume, pairs already present
// in the file are not re-run; the finished file is identical to an
// uninterrupted run.
std::vector<ResultRecord> run_eval(const RunConfig& cfg);

enum class ReportFormat { Text, Csv, Markdown };

// Table-1-style report: TSR/ARR per (instruction type x bucket) at one
// decimal place plus episode counts; unpopulated cells dashed.
std::string report(const std::vector<ResultRecord>& records,
                   ReportFormat format);

// Green boxes for grasp, red crosses for place points, blue/orange boxes for
// open/close, unit indices labeled. Pixels are deterministic in the inputs.
Image render_overlay(const Image& base, const PredictedPlan& plan);

// Built-in grounded-plan prompt template ({I} image, {H} instruction).
const std::string& default_prompt_template();

}  // namespace gpbench
