#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <atomic>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpbench/geometry.hpp"
#include "gpbench/gripper.hpp"

namespace gpbench {

struct PlannerCapabilities {
  bool grounded_plan = false;
  bool language_plan = false;
  bool object_identification = false;
  bool instruction_rewrite = false;
};

struct GrounderCapabilities {
  bool detect = false;
  bool track = false;
  bool point = false;
};

// Everything that identifies one planner call; the cache key is a digest of
// these fields, so identical requests replay from cache.
struct PlanRequest {
  std::string key;          // routing key for scripted backends (episode/segment id)
  std::string image_ref;
  std::string instruction;
  std::string prompt;       // full prompt text after template substitution
  std::string model_id;
  std::string decoding_params;
  std::uint64_t seed = 0;
};

std::string request_hash(const std::string& backend_id, const PlanRequest& req);

class BackendError : public std::runtime_error {
 public:
  BackendError(const std::string& msg, std::string hash)
      : std::runtime_error(msg), request_hash_(std::move(hash)) {}
  const std::string& request_hash() const { return request_hash_; }

 private:
  std::string request_hash_;
};

class PlannerBackend {
 public:
  virtual ~PlannerBackend() = default;
  virtual std::string id() const = 0;
  virtual PlannerCapabilities capabilities() const = 0;
  // Raw model text; throws BackendError on transport failure.
  virtual std::string generate(const PlanRequest& req) = 0;
};

struct Detection {
  BBox box;
  double score = 0.0;
};

struct Track {
  std::map<std::size_t, BBox> per_frame;
  std::string identity_key;
  double consistency = 0.0;  // filled by the pipeline's continuity measure
};

class GroundingBackend {
 public:
  virtual ~GroundingBackend() = default;
  virtual std::string id() const = 0;
  virtual GrounderCapabilities capabilities() const = 0;
  virtual std::vector<Detection> detect(const std::string& image_ref,
                                        const std::string& query) = 0;
  virtual std::optional<Point2D> point(const std::string& image_ref,
                                       const std::string& query) = 0;
  virtual Track track(const std::string& key, const Segment& segment,
                      const std::string& query) = 0;
};

// Scripted planner: responses keyed by request key, with an optional default.
class ReplayPlanner : public PlannerBackend {
 public:
  explicit ReplayPlanner(std::string id = "replay") : id_(std::move(id)) {
    caps_ = {true, true, true, true};
  }

  void script(const std::string& key, const std::string& response) {
    responses_[key] = response;
  }
  void set_default(const std::string& response) { default_ = response; }

  std::string id() const override { return id_; }
  PlannerCapabilities capabilities() const override { return caps_; }
  std::string generate(const PlanRequest& req) override {
    ++calls_;
    auto it = responses_.find(req.key);
    if (it != responses_.end()) return it->second;
    if (default_) return *default_;
    throw BackendError("replay: no scripted response for key '" + req.key + "'",
                       request_hash(id_, req));
  }

  std::size_t calls() const { return calls_; }

 private:
  std::string id_;
  PlannerCapabilities caps_;
  std::map<std::string, std::string> responses_;
  std::optional<std::string> default_;
  std::size_t calls_ = 0;
};

// Planner backed by an arbitrary function; used for generated mock planners.
class FunctionPlanner : public PlannerBackend {
 public:
  using Fn = std::function<std::string(const PlanRequest&)>;
  FunctionPlanner(std::string id, Fn fn, PlannerCapabilities caps = {true, true, true, true})
      : id_(std::move(id)), fn_(std::move(fn)), caps_(caps) {}

  std::string id() const override { return id_; }
  PlannerCapabilities capabilities() const override { return caps_; }
  std::string generate(const PlanRequest& req) override { return fn_(req); }

 private:
  std::string id_;
  Fn fn_;
  PlannerCapabilities caps_;
};

struct RetryPolicy {
  int max_attempts = 3;
  int base_delay_ms = 200;
  double multiplier = 2.0;
};

// Append-only on-disk store of backend responses keyed by request hash.
// Single writer, safe concurrent reads.
class RequestCache {
 public:
  explicit RequestCache(std::string path);

  std::optional<std::string> lookup(const std::string& hash) const;
  void store(const std::string& hash, const std::string& response,
             long latency_ms);

 private:
  std::string path_;
  std::map<std::string, std::string> entries_;
  mutable std::mutex mutex_;
};

// Wraps a planner with the cache and retry/backoff. Cache hits issue no
// backend call and report zero latency.
class CachingPlanner : public PlannerBackend {
 public:
  CachingPlanner(std::shared_ptr<PlannerBackend> inner,
                 std::shared_ptr<RequestCache> cache, RetryPolicy retry = {});

  std::string id() const override { return inner_->id(); }
  PlannerCapabilities capabilities() const override {
    return inner_->capabilities();
  }
  std::string generate(const PlanRequest& req) override;

  std::size_t cache_hits() const { return hits_; }
  std::size_t backend_calls() const { return calls_; }
  long last_latency_ms() const { return last_latency_ms_; }

 private:
  std::shared_ptr<PlannerBackend> inner_;
  std::shared_ptr<RequestCache> cache_;
  RetryPolicy retry_;
  std::atomic<std::size_t> hits_{0};
  std::atomic<std::size_t> calls_{0};
  std::atomic<long> last_latency_ms_{0};
};

// Chat-completion-style HTTP planner with base64 image payloads.
class HttpPlanner : public PlannerBackend {
 public:
  struct Config {
    std::string endpoint;       // e.g. http://host:port
    std::string path = "/v1/chat/completions";
    std::string model;
    std::string auth_env_var;   // env var holding the bearer token
    double temperature = 0.0;
    int timeout_sec = 120;
  };

  explicit HttpPlanner(Config cfg);

  std::string id() const override;
  PlannerCapabilities capabilities() const override {
    return {true, true, true, true};
  }
  std::string generate(const PlanRequest& req) override;

 private:
  Config cfg_;
};

// Deterministic scripted grounder. Detections/points keyed by query;
// tracks keyed by "key|cue" with a plain "key" fallback.
class MockGrounder : public GroundingBackend {
 public:
  explicit MockGrounder(std::string id = "mock-grounder") : id_(std::move(id)) {}

  void script_detections(const std::string& query, std::vector<Detection> d) {
    detections_[query] = std::move(d);
  }
  void script_point(const std::string& query, Point2D p) {
    points_.emplace(query, p);
  }
  void script_track(const std::string& key, Track t) {
    tracks_[key] = std::move(t);
  }

  std::string id() const override { return id_; }
  GrounderCapabilities capabilities() const override {
    return {true, true, true};
  }
  std::vector<Detection> detect(const std::string&,
                                const std::string& query) override {
    auto it = detections_.find(query);
    return it == detections_.end() ? std::vector<Detection>{} : it->second;
  }
  std::optional<Point2D> point(const std::string&,
                               const std::string& query) override {
    auto it = points_.find(query);
    if (it == points_.end()) return std::nullopt;
    return it->second;
  }
  Track track(const std::string& key, const Segment&,
              const std::string& cue) override {
    auto it = tracks_.find(key + "|" + cue);
    if (it != tracks_.end()) return it->second;
    it = tracks_.find(key);
    return it == tracks_.end() ? Track{} : it->second;
  }

 private:
  std::string id_;
  std::map<std::string, std::vector<Detection>> detections_;
  std::map<std::string, Point2D> points_;
  std::map<std::string, Track> tracks_;
};

// Loads a MockGrounder script from a JSON file (used by the datagen CLI).
std::shared_ptr<MockGrounder> load_grounder_script(const std::string& path);

// Loads a ReplayPlanner script ({"responses": {key: text}, "default": text}).
std::shared_ptr<ReplayPlanner> load_planner_script(const std::string& path);

// Substitutes the {I} (image reference) and {H} (instruction) placeholders
// in a prompt template.
std::string render_prompt(const std::string& prompt_template,
                          const std::string& image_ref,
                          const std::string& instruction);

}  // namespace gpbench
