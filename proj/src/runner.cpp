#include "gpbench/runner.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include "gpbench/adapters.hpp"
#include "gpbench/sha256.hpp"
#include "gpbench/synth.hpp"

namespace gpbench {

using nlohmann::json;

Paradigm parse_paradigm(const std::string& s) {
  if (s == "end-to-end" || s == "e2e") return Paradigm::EndToEnd;
  if (s == "decoupled") return Paradigm::DecoupledPlannerGrounder;
  if (s == "som") return Paradigm::DecoupledSoM;
  throw std::invalid_argument("unknown paradigm: " + s +
                              " (want end-to-end|decoupled|som)");
}

const std::string& default_prompt_template() {
  static const std::string tmpl =
      "Input:\n"
      "- One observation image {I}\n"
      "- One high-level instruction {H}\n"
      "Goal: Generate a spatially grounded action plan using ONLY: "
      "{open, grasp, place, close}.\n"
      "Each action must operate on exactly one grounded entity.\n"
      "Primitive spec:\n"
      "- open(target_text, bbox)\n"
      "- close(target_text, bbox)\n"
      "- grasp(target_text, bbox)\n"
      "- place(target_text, point)\n";
  return tmpl;
}

namespace {

const std::string& language_prompt_template() {
  static const std::string tmpl =
      "Input:\n"
      "- One observation image {I}\n"
      "- One high-level instruction {H}\n"
      "Goal: Decompose the task into a numbered list of low-level steps "
      "using only grasp, place, open, and close actions.\n";
  return tmpl;
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& key) {
  const std::string hex =
      Sha256::hash(std::to_string(base) + "\x1f" + key).substr(0, 16);
  return std::stoull(hex, nullptr, 16);
}

std::shared_ptr<PlannerBackend> make_planner(
    const RunConfig& cfg, const std::map<std::string, const Episode*>& by_id) {
  const std::string& spec = cfg.planner_spec;
  auto scheme_arg = [&](const std::string& scheme) -> std::optional<std::string> {
    if (spec.rfind(scheme, 0) != 0) return std::nullopt;
    return spec.substr(scheme.size());
  };

  auto episode_for = [by_id](const std::string& key) -> const Episode* {
    const std::string id = key.substr(0, key.find('#'));
    auto it = by_id.find(id);
    return it == by_id.end() ? nullptr : it->second;
  };

  if (scheme_arg("mock-gt://")) {
    return std::make_shared<FunctionPlanner>(
        "mock-gt", [episode_for](const PlanRequest& req) -> std::string {
          const Episode* ep = episode_for(req.key);
          if (!ep)
            throw BackendError("mock-gt: unknown episode in key " + req.key,
                               request_hash("mock-gt", req));
          return serialize_plan(gt_as_prediction(ep->gt_plan),
                                ep->image_width, ep->image_height);
        });
  }
  if (auto arg = scheme_arg("mock-perturb://")) {
    const double p = std::stod(*arg);
    const std::uint64_t base_seed = cfg.seed;
    return std::make_shared<FunctionPlanner>(
        "mock-perturb",
        [episode_for, p, base_seed](const PlanRequest& req) -> std::string {
          const Episode* ep = episode_for(req.key);
          if (!ep)
            throw BackendError("mock-perturb: unknown episode in key " +
                                   req.key,
                               request_hash("mock-perturb", req));
          DetRng rng(derive_seed(base_seed, req.key));
          PredictedPlan plan =
              perturbed_planner(ep->gt_plan, p, 0.02, rng);
          return serialize_plan(plan, ep->image_width, ep->image_height);
        });
  }
  if (auto arg = scheme_arg("replay://")) return load_planner_script(*arg);
  if (spec.rfind("http://", 0) == 0 || spec.rfind("https://", 0) == 0) {
    HttpPlanner::Config hc;
    hc.endpoint = spec;
    hc.model = cfg.planner_model;
    hc.auth_env_var = cfg.planner_auth_env;
    return std::make_shared<HttpPlanner>(hc);
  }
  throw std::invalid_argument("unknown planner spec: " + spec);
}

std::shared_ptr<GroundingBackend> make_grounder(const RunConfig& cfg) {
  if (cfg.grounder_spec.empty()) return nullptr;
  if (cfg.grounder_spec.rfind("mock-script://", 0) == 0)
    return load_grounder_script(cfg.grounder_spec.substr(14));
  throw std::invalid_argument("unknown grounder spec: " + cfg.grounder_spec);
}

json diagnostics_to_json(const std::vector<ParseDiagnostic>& diags) {
  json out = json::array();
  for (const ParseDiagnostic& d : diags)
    out.push_back({{"line", d.line_index},
                   {"severity", d.severity == Severity::Error ? "error"
                                                              : "warning"},
                   {"message", d.message},
                   {"fragment", d.raw_fragment}});
  return out;
}

std::vector<ParseDiagnostic> diagnostics_from_json(const json& j) {
  std::vector<ParseDiagnostic> out;
  for (const json& d : j)
    out.push_back({d.value("line", 0),
                   d.value("severity", "warning") == "error"
                       ? Severity::Error
                       : Severity::Warning,
                   d.value("message", ""), d.value("fragment", "")});
  return out;
}

}  // namespace

json record_to_json(const ResultRecord& r) {
  json per_unit = json::array();
  for (const UnitOutcome& u : r.score.per_unit) {
    json ju{{"gt", u.gt_index}, {"success", u.success}};
    if (u.matched_pred_index) ju["pred"] = *u.matched_pred_index;
    per_unit.push_back(ju);
  }
  return json{{"episode", r.episode_id},
              {"instruction_type", instruction_type_name(r.instruction_type)},
              {"bucket", bucket_name(r.bucket)},
              {"image", r.image_ref},
              {"image_width", r.image_width},
              {"image_height", r.image_height},
              {"raw_response", r.raw_response},
              {"plan_text", r.plan_text},
              {"tsr", r.score.tsr},
              {"arr_matched", r.score.arr_matched},
              {"arr_total", r.score.arr_total},
              {"per_unit", per_unit},
              {"diagnostics", diagnostics_to_json(r.diagnostics)},
              {"latency_ms", r.latency_ms},
              {"failed", r.failed}};
}

ResultRecord record_from_json(const json& j) {
  ResultRecord r;
  r.episode_id = j.at("episode").get<std::string>();
  r.instruction_type = j.at("instruction_type").get<std::string>() == "implicit"
                           ? InstructionType::Implicit
                           : InstructionType::Explicit;
  const std::string b = j.at("bucket").get<std::string>();
  r.bucket = b == "long" ? HorizonBucket::Long
             : b == "medium" ? HorizonBucket::Medium
                             : HorizonBucket::Short;
  r.image_ref = j.value("image", "");
  r.image_width = j.value("image_width", 0);
  r.image_height = j.value("image_height", 0);
  r.raw_response = j.value("raw_response", "");
  r.plan_text = j.value("plan_text", "");
  r.score.tsr = j.at("tsr").get<bool>();
  r.score.arr_matched = j.at("arr_matched").get<std::size_t>();
  r.score.arr_total = j.at("arr_total").get<std::size_t>();
  for (const json& ju : j.value("per_unit", json::array())) {
    UnitOutcome u;
    u.gt_index = ju.at("gt").get<std::size_t>();
    u.success = ju.at("success").get<bool>();
    if (ju.contains("pred")) u.matched_pred_index = ju["pred"].get<std::size_t>();
    r.score.per_unit.push_back(u);
  }
  r.diagnostics = diagnostics_from_json(j.value("diagnostics", json::array()));
  r.latency_ms = j.value("latency_ms", 0L);
  r.failed = j.value("failed", false);
  return r;
}

std::vector<ResultRecord> load_results(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open results: " + path);
  std::vector<ResultRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) break;  // torn tail from an interrupted run
    out.push_back(record_from_json(j));
  }
  return out;
}

namespace {

struct EvalContext {
  const RunConfig* cfg;
  std::shared_ptr<PlannerBackend> planner;
  std::shared_ptr<GroundingBackend> grounder;
  std::string grounded_template;
  std::string language_template;
  bool measure_latency = false;
};

ResultRecord evaluate_one(const EvalContext& ctx, const Episode& ep,
                          InstructionType type) {
  const RunConfig& cfg = *ctx.cfg;
  ResultRecord r;
  r.episode_id = ep.id;
  r.instruction_type = type;
  r.bucket = ep.bucket();
  r.image_ref = ep.image_ref;
  r.image_width = ep.image_width;
  r.image_height = ep.image_height;

  const std::string& instruction = type == InstructionType::Explicit
                                       ? ep.explicit_instruction
                                       : ep.implicit_instruction;
  const std::string key = ep.id + "#" + instruction_type_name(type);

  std::vector<AtomicUnit> units;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (cfg.paradigm) {
      case Paradigm::EndToEnd: {
        r.raw_response = request_grounded_plan(*ctx.planner, ep.image_ref,
                                               instruction,
                                               ctx.grounded_template, key,
                                               cfg.seed);
        ParseResult pr =
            parse_plan(r.raw_response, ep.image_width, ep.image_height);
        r.diagnostics = pr.diagnostics;
        r.plan_text =
            serialize_plan(pr.plan, ep.image_width, ep.image_height);
        units = pr.plan.units();
        break;
      }
      case Paradigm::DecoupledPlannerGrounder: {
        if (!ctx.grounder)
          throw std::invalid_argument(
              "decoupled paradigm requires a grounder backend");
        std::vector<std::string> steps = request_language_plan(
            *ctx.planner, ep.image_ref, instruction, ctx.language_template,
            key, cfg.seed);
        std::vector<GroundedStep> grounded;
        PredictedPlan grounded_plan;
        for (const std::string& step : steps) {
          GroundedStep gs =
              ground_language_step(*ctx.grounder, ep.image_ref, step);
          if (gs.grounded()) grounded_plan.actions.push_back(*gs.action);
          r.raw_response += step + "\n";
          grounded.push_back(std::move(gs));
        }
        r.plan_text = serialize_plan(grounded_plan, ep.image_width,
                                     ep.image_height);
        units = units_from_grounded_steps(grounded);
        break;
      }
      case Paradigm::DecoupledSoM: {
        if (!ctx.grounder)
          throw std::invalid_argument(
              "som paradigm requires a grounder backend");
        std::vector<Detection> dets =
            ctx.grounder->detect(ep.image_ref, "");
        std::vector<BBox> proposals;
        for (const Detection& d : dets) proposals.push_back(d.box);
        if (proposals.empty()) break;  // nothing to mark; empty plan
        std::vector<SoMMark> marks = som_marks(proposals);
        std::ostringstream prompt;
        prompt << render_prompt(ctx.grounded_template, ep.image_ref,
                                instruction)
               << "Refer to objects by their mark number:\n";
        for (const SoMMark& m : marks)
          prompt << "mark " << m.id << "\n";
        PlanRequest req;
        req.key = key;
        req.image_ref = ep.image_ref;
        req.instruction = instruction;
        req.prompt = prompt.str();
        req.seed = cfg.seed;
        r.raw_response = ctx.planner->generate(req);
        PredictedPlan plan = resolve_som_response(r.raw_response, marks);
        r.plan_text = serialize_plan(plan, ep.image_width, ep.image_height);
        units = plan.units();
        break;
      }
    }
  } catch (const BackendError& e) {
    r.failed = true;
    r.diagnostics.push_back({0, Severity::Error,
                             std::string("backend error: ") + e.what() +
                                 " (request " + e.request_hash() + ")",
                             ""});
    units.clear();
  }
  if (ctx.measure_latency) {
    const auto t1 = std::chrono::steady_clock::now();
    r.latency_ms = static_cast<long>(
        std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
            .count());
  }
  r.score = score_episode(units, ep.gt_plan, cfg.thresholds);
  return r;
}

}  // namespace

std::vector<ResultRecord> run_eval(const RunConfig& cfg) {
  if (cfg.out_path.empty())
    throw std::invalid_argument("run_eval: out_path required");
  if (cfg.concurrency < 1)
    throw std::invalid_argument("run_eval: concurrency >= 1 required");

  const std::vector<Episode> episodes = load_episodes(cfg.dataset_path);
  std::map<std::string, const Episode*> by_id;
  for (const Episode& ep : episodes) by_id[ep.id] = &ep;

  EvalContext ctx;
  ctx.cfg = &cfg;
  std::shared_ptr<RequestCache> cache;
  if (!cfg.cache_path.empty())
    cache = std::make_shared<RequestCache>(cfg.cache_path);
  ctx.planner =
      std::make_shared<CachingPlanner>(make_planner(cfg, by_id), cache);
  ctx.grounder = make_grounder(cfg);
  ctx.measure_latency = cfg.planner_spec.rfind("http", 0) == 0;
  if (!cfg.prompt_template_path.empty()) {
    std::ifstream in(cfg.prompt_template_path);
    if (!in)
      throw std::runtime_error("cannot read prompt template: " +
                               cfg.prompt_template_path);
    ctx.grounded_template.assign(std::istreambuf_iterator<char>(in), {});
  } else {
    ctx.grounded_template = default_prompt_template();
  }
  ctx.language_template = language_prompt_template();

  std::vector<InstructionType> types;
  if (cfg.instructions != InstructionFilter::Implicit)
    types.push_back(InstructionType::Explicit);
  if (cfg.instructions != InstructionFilter::Explicit)
    types.push_back(InstructionType::Implicit);

  // Resume: keep the valid prefix of the results file and skip its pairs.
  std::vector<ResultRecord> done;
  if (cfg.resume && std::filesystem::exists(cfg.out_path)) {
    done = load_results(cfg.out_path);
    std::ofstream rewrite(cfg.out_path, std::ios::trunc);
    for (const ResultRecord& r : done)
      rewrite << record_to_json(r).dump() << "\n";
  }
  std::set<std::pair<std::string, int>> done_keys;
  for (const ResultRecord& r : done)
    done_keys.insert({r.episode_id, static_cast<int>(r.instruction_type)});

  struct Task {
    const Episode* ep;
    InstructionType type;
  };
  std::vector<Task> tasks;
  for (const Episode& ep : episodes)
    for (InstructionType t : types)
      if (!done_keys.count({ep.id, static_cast<int>(t)}))
        tasks.push_back({&ep, t});

  std::ofstream out(cfg.out_path, std::ios::app);
  if (!out) throw std::runtime_error("cannot write results: " + cfg.out_path);

  std::vector<ResultRecord> records = std::move(done);
  const std::size_t chunk = static_cast<std::size_t>(cfg.concurrency);
  for (std::size_t i = 0; i < tasks.size(); i += chunk) {
    const std::size_t n = std::min(chunk, tasks.size() - i);
    std::vector<std::future<ResultRecord>> futures;
    for (std::size_t k = 0; k < n; ++k)
      futures.push_back(std::async(
          n == 1 ? std::launch::deferred : std::launch::async,
          [&ctx, task = tasks[i + k]] {
            return evaluate_one(ctx, *task.ep, task.type);
          }));
    for (auto& f : futures) {
      ResultRecord r = f.get();
      out << record_to_json(r).dump() << "\n";
      out.flush();
      records.push_back(std::move(r));
    }
  }
  return records;
}

namespace {

std::string fmt_pct(double v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%.1f", v);
  return buf;
}

}  // namespace

std::string report(const std::vector<ResultRecord>& records,
                   ReportFormat format) {
  std::vector<ScoredEpisode> scored;
  for (const ResultRecord& r : records)
    scored.push_back({r.bucket, r.instruction_type, r.score});
  const std::vector<AggregateCell> cells = aggregate(scored);

  const AggregateCell* grid[2][3] = {};
  for (const AggregateCell& c : cells)
    grid[static_cast<int>(c.instruction_type)][static_cast<int>(c.bucket)] = &c;

  const char* cols[6] = {"explicit_short", "explicit_medium", "explicit_long",
                         "implicit_short", "implicit_medium", "implicit_long"};
  auto cell = [&](int i) { return grid[i / 3][i % 3]; };

  std::ostringstream out;
  const bool csv = format == ReportFormat::Csv;
  const bool md = format == ReportFormat::Markdown;
  const std::string dash = csv ? "" : "-";
  const char* sep = csv ? "," : md ? " | " : "  ";

  auto row = [&](const std::string& name, auto value) {
    if (md) out << "| ";
    out << name;
    for (int i = 0; i < 6; ++i) {
      const AggregateCell* c = cell(i);
      out << sep << (c ? value(*c) : dash);
    }
    if (md) out << " |";
    out << "\n";
  };

  if (md) out << "| metric ";
  else out << "metric";
  for (const char* c : cols) out << sep << c;
  if (md) {
    out << " |\n|";
    for (int i = 0; i < 7; ++i) out << "---|";
    out << "\n";
  } else {
    out << "\n";
  }
  row("tsr_pct", [](const AggregateCell& c) { return fmt_pct(c.tsr_pct); });
  row("arr_pct", [](const AggregateCell& c) { return fmt_pct(c.arr_pct); });
  row("episodes",
      [](const AggregateCell& c) { return std::to_string(c.n_episodes); });
  return out.str();
}

Image render_overlay(const Image& base, const PredictedPlan& plan) {
  Image out = base;
  int index = 0;
  for (const AtomicUnit& u : plan.units()) {
    ++index;
    const std::string label = std::to_string(index);
    auto labeled_box = [&](const BBox& b, Color c) {
      out.draw_rect(b, c, 2);
      out.draw_label(static_cast<int>(b.x_min * out.width()) + 4,
                     static_cast<int>(b.y_min * out.height()) + 4, label, c, 2);
    };
    if (u.is_manipulation()) {
      const auto& m = u.manipulation();
      labeled_box(*m.grasp.bbox(), kGreen);
      if (const Point2D* p = m.place.point()) out.draw_cross(*p, kRed);
    } else if (u.is_articulation()) {
      const auto& a = u.articulation().action;
      labeled_box(*a.bbox(),
                  a.primitive == Primitive::Open ? kBlue : kOrange);
    }
  }
  return out;
}

}  // namespace gpbench
