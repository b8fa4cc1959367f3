#include "gpbench/backend.hpp"

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

#include <json.hpp>

#define CPPHTTPLIB_NO_EXCEPTIONS 0
#include <httplib.h>

#include "gpbench/sha256.hpp"

namespace gpbench {

using nlohmann::json;

std::string request_hash(const std::string& backend_id, const PlanRequest& req) {
  Sha256 h;
  auto field = [&](const std::string& s) {
    h.update(s);
    h.update("\x1f", 1);  // unambiguous field separator
  };
  field(backend_id);
  field(req.model_id);
  field(req.prompt);
  field(req.image_ref);
  field(req.decoding_params);
  field(std::to_string(req.seed));
  return h.hex_digest();
}

RequestCache::RequestCache(std::string path) : path_(std::move(path)) {
  std::ifstream in(path_);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("hash") || !j.contains("response"))
      continue;  // torn tail from an interrupted run
    entries_[j["hash"].get<std::string>()] = j["response"].get<std::string>();
  }
}

std::optional<std::string> RequestCache::lookup(const std::string& hash) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void RequestCache::store(const std::string& hash, const std::string& response,
                         long latency_ms) {
  std::lock_guard lock(mutex_);
  if (entries_.count(hash)) return;
  entries_[hash] = response;
  json j{{"hash", hash}, {"response", response}, {"latency_ms", latency_ms}};
  std::ofstream out(path_, std::ios::app);
  out << j.dump() << "\n";
}

CachingPlanner::CachingPlanner(std::shared_ptr<PlannerBackend> inner,
                               std::shared_ptr<RequestCache> cache,
                               RetryPolicy retry)
    : inner_(std::move(inner)), cache_(std::move(cache)), retry_(retry) {}

std::string CachingPlanner::generate(const PlanRequest& req) {
  const std::string hash = request_hash(inner_->id(), req);
  if (cache_) {
    if (auto cached = cache_->lookup(hash)) {
      ++hits_;
      last_latency_ms_ = 0;
      return *cached;
    }
  }
  std::string last_error;
  double delay = retry_.base_delay_ms;
  for (int attempt = 0; attempt < retry_.max_attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(static_cast<long>(delay)));
      delay *= retry_.multiplier;
    }
    try {
      const auto t0 = std::chrono::steady_clock::now();
      std::string response = inner_->generate(req);
      const auto t1 = std::chrono::steady_clock::now();
      ++calls_;
      last_latency_ms_ = static_cast<long>(
          std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
              .count());
      if (cache_) cache_->store(hash, response, last_latency_ms_);
      return response;
    } catch (const BackendError& e) {
      ++calls_;
      last_error = e.what();
    }
  }
  throw BackendError("backend failed after " +
                         std::to_string(retry_.max_attempts) +
                         " attempts: " + last_error,
                     hash);
}

namespace {

std::string base64_encode(const std::string& data) {
  static const char* tbl =
      "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
  std::string out;
  out.reserve((data.size() + 2) / 3 * 4);
  std::size_t i = 0;
  while (i + 2 < data.size()) {
    std::uint32_t n = (static_cast<unsigned char>(data[i]) << 16) |
                      (static_cast<unsigned char>(data[i + 1]) << 8) |
                      static_cast<unsigned char>(data[i + 2]);
    out.push_back(tbl[n >> 18]);
    out.push_back(tbl[(n >> 12) & 63]);
    out.push_back(tbl[(n >> 6) & 63]);
    out.push_back(tbl[n & 63]);
    i += 3;
  }
  if (i < data.size()) {
    std::uint32_t n = static_cast<unsigned char>(data[i]) << 16;
    bool two = i + 1 < data.size();
    if (two) n |= static_cast<unsigned char>(data[i + 1]) << 8;
    out.push_back(tbl[n >> 18]);
    out.push_back(tbl[(n >> 12) & 63]);
    out.push_back(two ? tbl[(n >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read file: " + path);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

HttpPlanner::HttpPlanner(Config cfg) : cfg_(std::move(cfg)) {}

std::string HttpPlanner::id() const {
  return "http:" + cfg_.endpoint + ":" + cfg_.model;
}

std::string HttpPlanner::generate(const PlanRequest& req) {
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", req.prompt}});
  if (!req.image_ref.empty()) {
    std::string b64 = base64_encode(read_file(req.image_ref));
    content.push_back(
        {{"type", "image_url"},
         {"image_url", {{"url", "data:image/ppm;base64," + b64}}}});
  }
  json body{{"model", cfg_.model.empty() ? req.model_id : cfg_.model},
            {"temperature", cfg_.temperature},
            {"seed", req.seed},
            {"messages",
             json::array({{{"role", "user"}, {"content", content}}})}};

  httplib::Client client(cfg_.endpoint);
  client.set_read_timeout(cfg_.timeout_sec, 0);
  httplib::Headers headers;
  if (!cfg_.auth_env_var.empty()) {
    if (const char* token = std::getenv(cfg_.auth_env_var.c_str()))
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
  const std::string hash = request_hash(id(), req);
  if (!res)
    throw BackendError("transport failure: " + httplib::to_string(res.error()),
                       hash);
  if (res->status != 200)
    throw BackendError("http status " + std::to_string(res->status), hash);
  json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("choices") ||
      reply["choices"].empty())
    throw BackendError("malformed completion response", hash);
  const json& msg = reply["choices"][0]["message"];
  return msg.contains("content") && msg["content"].is_string()
             ? msg["content"].get<std::string>()
             : "";
}

std::shared_ptr<MockGrounder> load_grounder_script(const std::string& path) {
  json j = json::parse(read_file(path));
  auto g = std::make_shared<MockGrounder>("replay-grounder");
  auto to_box = [](const json& b) {
    return BBox(b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                b[3].get<double>());
  };
  const json dets_obj = j.value("detections", json::object());
  for (const auto& [query, arr] : dets_obj.items()) {
    std::vector<Detection> dets;
    for (const auto& d : arr)
      dets.push_back({to_box(d["bbox"]), d.value("score", 1.0)});
    g->script_detections(query, std::move(dets));
  }
  const json points_obj = j.value("points", json::object());
  for (const auto& [query, p] : points_obj.items())
    g->script_point(query, Point2D(p[0].get<double>(), p[1].get<double>()));
  const json tracks_obj = j.value("tracks", json::object());
  for (const auto& [key, t] : tracks_obj.items()) {
    Track track;
    track.identity_key = t.value("identity", key);
    for (const auto& [frame, box] : t["per_frame"].items())
      track.per_frame.emplace(std::stoul(frame), to_box(box));
    g->script_track(key, std::move(track));
  }
  return g;
}

std::shared_ptr<ReplayPlanner> load_planner_script(const std::string& path) {
  json j = json::parse(read_file(path));
  auto p = std::make_shared<ReplayPlanner>("replay-planner");
  const json responses_obj = j.value("responses", json::object());
  for (const auto& [key, text] : responses_obj.items())
    p->script(key, text.get<std::string>());
  if (j.contains("default")) p->set_default(j["default"].get<std::string>());
  return p;
}

std::string render_prompt(const std::string& prompt_template,
                          const std::string& image_ref,
                          const std::string& instruction) {
  std::string out = prompt_template;
  auto replace_all = [&](const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = out.find(from, pos)) != std::string::npos) {
      out.replace(pos, from.size(), to);
      pos += to.size();
    }
  };
  replace_all("{I}", image_ref);
  replace_all("{H}", instruction);
  return out;
}

}  // namespace gpbench
