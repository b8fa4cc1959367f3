#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpbench/adapters.hpp"
#include "gpbench/dataset.hpp"
#include "gpbench/runner.hpp"
#include "gpbench/synth.hpp"
#include "gpbench/v2gp.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gpbench;

namespace {

// Flat placeholder scene: light background with the GT boxes sketched in.
void write_placeholder_image(const Episode& ep, const fs::path& path) {
  Image img(ep.image_width, ep.image_height, Color{200, 200, 200});
  for (const AtomicUnit& u : ep.gt_plan.flattened()) {
    if (u.is_manipulation()) {
      img.draw_rect(*u.manipulation().grasp.bbox(), Color{120, 120, 120}, 1);
      img.draw_rect(*u.manipulation().place.bbox(), Color{160, 160, 160}, 1);
    } else if (u.is_articulation()) {
      img.draw_rect(*u.articulation().action.bbox(), Color{120, 120, 120}, 1);
    }
  }
  img.save_ppm(path.string());
}

int cmd_synth_bench(const std::string& out_dir, int n, std::uint64_t seed,
                    std::size_t units_min, std::size_t units_max,
                    double unordered_prob) {
  fs::create_directories(fs::path(out_dir) / "images");
  SynthesisConfig cfg;
  cfg.seed = seed;
  cfg.n_units_min = units_min;
  cfg.n_units_max = units_max;
  cfg.unordered_block_prob = unordered_prob;
  DetRng rng(seed);
  std::vector<Episode> episodes;
  for (int i = 0; i < n; ++i) {
    Episode ep = gen_episode(cfg, rng);
    ep.id = "bench-" + std::to_string(i);
    ep.image_ref = (fs::path(out_dir) / "images" / (ep.id + ".ppm")).string();
    write_placeholder_image(ep, ep.image_ref);
    episodes.push_back(std::move(ep));
  }
  const std::string manifest = (fs::path(out_dir) / "episodes.jsonl").string();
  save_episodes(episodes, manifest);
  std::cout << "wrote " << episodes.size() << " episodes to " << manifest
            << "\n";
  return 0;
}

int cmd_synth_demo(const std::string& out_dir, int n, std::uint64_t seed,
                   std::size_t units_min, std::size_t units_max) {
  fs::create_directories(out_dir);
  SynthesisConfig cfg;
  cfg.seed = seed;
  cfg.n_units_min = units_min;
  cfg.n_units_max = units_max;
  cfg.unordered_block_prob = 0.0;
  DetRng rng(seed);

  std::vector<DemonstrationEpisode> demos;
  json planner_script{{"responses", json::object()}};
  json grounder_script{{"tracks", json::object()}};

  for (int i = 0; i < n; ++i) {
    Episode gt = gen_episode(cfg, rng);
    const std::string id = "demo-" + std::to_string(i);
    const auto units = gt.gt_plan.flattened();

    DemonstrationEpisode demo;
    demo.id = id;
    demo.image_width = gt.image_width;
    demo.image_height = gt.image_height;
    demo.instruction = "perform the scripted manipulation sequence (" + id + ")";
    demo.camera_static = true;

    constexpr std::size_t kSegLen = 12, kGap = 10;
    std::vector<Segment> segments;
    for (std::size_t u = 0; u < units.size(); ++u) {
      const std::size_t s = kGap + u * (kSegLen + kGap);
      segments.push_back({s, s + kSegLen});
    }
    const std::size_t total = kGap + units.size() * (kSegLen + kGap);
    DetRng noise_rng(seed ^ (0x9e3779b97f4a7c15ull + i));
    demo.gripper = gen_gripper_signal(segments, total, 0.0, noise_rng);
    for (std::size_t f = 0; f < demo.gripper.values.size(); ++f) {
      char name[32];
      std::snprintf(name, sizeof(name), "/%06zu.ppm", f);
      demo.frames.push_back(id + name);
    }

    for (std::size_t u = 0; u < units.size(); ++u) {
      const std::string seg_key = id + "#seg" + std::to_string(u);
      const AtomicUnit& unit = units[u];
      std::string interaction = "pick_place";
      BBox start = unit.is_manipulation()
                       ? *unit.manipulation().grasp.bbox()
                       : *unit.articulation().action.bbox();
      BBox end = unit.is_manipulation() ? *unit.manipulation().place.bbox()
                                        : start;
      std::string description, category;
      if (unit.is_manipulation()) {
        description = unit.manipulation().grasp.target_text;
        category = "object";
      } else {
        description = unit.articulation().action.target_text;
        category = "fixture";
        interaction = unit.articulation().action.primitive == Primitive::Open
                          ? "open"
                          : "close";
      }
      planner_script["responses"][seg_key + "#identify"] =
          json{{"description", description},
               {"category", category},
               {"interaction", interaction}}
              .dump();
      // start box held, one jump to the end box near the release frame
      json per_frame = json::object();
      const Segment& seg = segments[u];
      const std::size_t jump = seg.s + (seg.e - seg.s) * 3 / 4;
      for (std::size_t f = seg.s; f <= seg.e; ++f) {
        const BBox& b = f < jump ? start : end;
        per_frame[std::to_string(f)] =
            json::array({b.x_min, b.y_min, b.x_max, b.y_max});
      }
      grounder_script["tracks"][seg_key] =
          json{{"identity", description}, {"per_frame", per_frame}};
    }
    planner_script["responses"]["rewrite#" + demo.instruction] =
        "tidy up the workspace (" + id + ")";
    demos.push_back(std::move(demo));
  }

  save_demo_manifest(demos, (fs::path(out_dir) / "manifest.jsonl").string());
  std::ofstream((fs::path(out_dir) / "planner_script.json").string())
      << planner_script.dump(2) << "\n";
  std::ofstream((fs::path(out_dir) / "grounder_script.json").string())
      << grounder_script.dump(2) << "\n";
  std::cout << "wrote " << demos.size() << " demo episodes to " << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"grounded-planning evaluation and data generation toolkit"};
  app.require_subcommand(1);

  // eval
  RunConfig run_cfg;
  std::string paradigm_str = "end-to-end";
  std::string instructions_str = "both";
  std::string thresholds_str;
  auto* eval = app.add_subcommand("eval", "evaluate a planner on a dataset");
  eval->add_option("--dataset", run_cfg.dataset_path, "episode manifest (jsonl)")
      ->required();
  eval->add_option("--paradigm", paradigm_str, "end-to-end|decoupled|som");
  eval->add_option("--planner-endpoint", run_cfg.planner_spec,
                   "mock-gt:// | mock-perturb://<p> | replay://<json> | http(s)://...");
  eval->add_option("--planner-model", run_cfg.planner_model, "model id");
  eval->add_option("--planner-auth-env", run_cfg.planner_auth_env,
                   "env var holding the bearer token");
  eval->add_option("--grounder-endpoint", run_cfg.grounder_spec,
                   "mock-script://<json>");
  eval->add_option("--thresholds", thresholds_str, "tau_g,tau_d (default 0.5,0.5)");
  eval->add_option("--instructions", instructions_str, "explicit|implicit|both");
  eval->add_option("--concurrency", run_cfg.concurrency, "max in-flight requests");
  eval->add_option("--cache", run_cfg.cache_path, "request cache file");
  eval->add_flag("--resume", run_cfg.resume, "resume from an existing results file");
  eval->add_option("--seed", run_cfg.seed, "run seed");
  eval->add_option("--prompt-template", run_cfg.prompt_template_path,
                   "prompt template file with {I}/{H} placeholders");
  eval->add_option("--out", run_cfg.out_path, "results file (jsonl)")->required();

  // report
  std::string report_results, report_format = "text";
  auto* rep = app.add_subcommand("report", "aggregate results into a table");
  rep->add_option("--results", report_results, "results file")->required();
  rep->add_option("--format", report_format, "text|csv|markdown");

  // overlay
  std::string ov_results, ov_episode, ov_out;
  std::string ov_instructions = "explicit";
  auto* ov = app.add_subcommand("overlay", "render a prediction overlay");
  ov->add_option("--results", ov_results, "results file")->required();
  ov->add_option("--episode", ov_episode, "episode id")->required();
  ov->add_option("--instructions", ov_instructions, "explicit|implicit");
  ov->add_option("--out", ov_out, "output image (ppm)")->required();

  // datagen
  std::string dg_manifest, dg_out;
  std::string dg_planner = "replay://planner_script.json";
  std::string dg_grounder = "mock-script://grounder_script.json";
  double dg_min_consistency = 0.8;
  auto* dg = app.add_subcommand("datagen",
                                "generate training samples from demonstrations");
  dg->add_option("--manifest", dg_manifest, "demonstration manifest (jsonl)")
      ->required();
  dg->add_option("--out", dg_out, "training samples output (jsonl)")->required();
  dg->add_option("--min-consistency", dg_min_consistency,
                 "track consistency floor");
  dg->add_option("--planner", dg_planner, "replay://<json> | http(s)://...");
  dg->add_option("--grounder", dg_grounder, "mock-script://<json>");

  // synth
  std::string sy_kind = "bench", sy_out = "synth-out";
  int sy_n = 20;
  std::uint64_t sy_seed = 1;
  std::size_t sy_units_min = 1, sy_units_max = 6;
  double sy_unordered = 0.3;
  auto* sy = app.add_subcommand("synth", "emit synthetic datasets");
  sy->add_option("--kind", sy_kind, "bench|demo");
  sy->add_option("--n", sy_n, "episode count");
  sy->add_option("--seed", sy_seed, "generator seed");
  sy->add_option("--units-min", sy_units_min, "min units per episode");
  sy->add_option("--units-max", sy_units_max, "max units per episode");
  sy->add_option("--unordered-prob", sy_unordered,
                 "unordered block probability (bench)");
  sy->add_option("--out-dir", sy_out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (eval->parsed()) {
      run_cfg.paradigm = parse_paradigm(paradigm_str);
      if (instructions_str == "explicit")
        run_cfg.instructions = InstructionFilter::Explicit;
      else if (instructions_str == "implicit")
        run_cfg.instructions = InstructionFilter::Implicit;
      else
        run_cfg.instructions = InstructionFilter::Both;
      if (!thresholds_str.empty()) {
        const auto comma = thresholds_str.find(',');
        if (comma == std::string::npos)
          throw std::invalid_argument("--thresholds wants tau_g,tau_d");
        run_cfg.thresholds.tau_g = std::stod(thresholds_str.substr(0, comma));
        run_cfg.thresholds.tau_d = std::stod(thresholds_str.substr(comma + 1));
      }
      auto records = run_eval(run_cfg);
      std::size_t failed = 0;
      for (const auto& r : records)
        if (r.failed) ++failed;
      std::cout << "scored " << records.size() << " (episode, instruction) pairs"
                << (failed ? " (" + std::to_string(failed) + " backend failures)"
                           : "")
                << "; results in " << run_cfg.out_path << "\n";
    } else if (rep->parsed()) {
      ReportFormat fmt = report_format == "csv"        ? ReportFormat::Csv
                         : report_format == "markdown" ? ReportFormat::Markdown
                                                       : ReportFormat::Text;
      std::cout << report(load_results(report_results), fmt);
    } else if (ov->parsed()) {
      const auto records = load_results(ov_results);
      const InstructionType want = ov_instructions == "implicit"
                                       ? InstructionType::Implicit
                                       : InstructionType::Explicit;
      const ResultRecord* found = nullptr;
      for (const auto& r : records)
        if (r.episode_id == ov_episode && r.instruction_type == want)
          found = &r;
      if (!found)
        throw std::runtime_error("no record for episode " + ov_episode);
      Image base;
      try {
        base = Image::load_ppm(found->image_ref);
      } catch (const std::exception& e) {
        std::cerr << "skipping overlay, image unreadable: " << e.what() << "\n";
        return 1;
      }
      ParseResult pr =
          parse_plan(found->plan_text, found->image_width, found->image_height);
      render_overlay(base, pr.plan).save_ppm(ov_out);
      std::cout << "wrote " << ov_out << "\n";
    } else if (dg->parsed()) {
      std::shared_ptr<PlannerBackend> planner;
      if (dg_planner.rfind("replay://", 0) == 0)
        planner = load_planner_script(dg_planner.substr(9));
      else
        throw std::invalid_argument("datagen planner spec must be replay://");
      if (dg_grounder.rfind("mock-script://", 0) != 0)
        throw std::invalid_argument(
            "datagen grounder spec must be mock-script://");
      auto grounder = load_grounder_script(dg_grounder.substr(14));

      V2gpConfig cfg;
      cfg.min_consistency = dg_min_consistency;
      std::vector<TrainingSample> samples;
      std::size_t dropped = 0;
      for (const DemonstrationEpisode& ep : load_demo_manifest(dg_manifest)) {
        if (auto s = process_episode(ep, *planner, *grounder, cfg))
          samples.push_back(std::move(*s));
        else
          ++dropped;
      }
      EmitStats stats = emit_samples(samples, dg_out);
      std::cout << "emitted " << stats.total << " samples (short "
                << stats.short_horizon << ", medium " << stats.medium_horizon
                << ", long " << stats.long_horizon << "), dropped " << dropped
                << "; output " << dg_out << "\n";
    } else if (sy->parsed()) {
      if (sy_kind == "bench")
        return cmd_synth_bench(sy_out, sy_n, sy_seed, sy_units_min,
                               sy_units_max, sy_unordered);
      if (sy_kind == "demo")
        return cmd_synth_demo(sy_out, sy_n, sy_seed, sy_units_min, sy_units_max);
      throw std::invalid_argument("--kind must be bench or demo");
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
