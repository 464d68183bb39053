#pragma once

// HTTP/JSON session API over the active learner.
//
//   POST /sessions               {"inputs": [str], "config": {...}?}
//   GET  /sessions/{id}
//   POST /sessions/{id}/answer   {"input": str, "output": str}
//   POST /sessions/{id}/accept
//
// Every successful response is a session view. Sessions live in memory and
// expire after a period without activity.

#include <chrono>
#include <cstdint>
#include <functional>
#include <iomanip>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "apbe/active.hpp"
#include "apbe/errors.hpp"

namespace apbe::service {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

inline constexpr std::size_t kMaxRows = 10000;
inline constexpr std::size_t kMaxInputLength = 4096;

struct Response {
  int status = 200;
  json body;
};

inline Response error(int status, std::string message) { return {status, json{{"error", std::move(message)}}}; }

struct Session {
  std::string id;
  Clock::time_point createdAt;
  Clock::time_point lastActivity;
  std::mutex mutex;  // held for the whole of a state transition
  active::SessionState state;
  bool accepted = false;
};

// Per-row prediction of the best program and output entropy of the belief.
inline json view(const Session& s) {
  const auto& st = s.state;
  const auto* best = st.best();
  const auto probs = active::probabilities(st.belief);
  json rows = json::array();
  for (std::size_t i = 0; i < st.inputs.size(); ++i) {
    json row{{"input", st.inputs[i]}, {"is_example", static_cast<bool>(st.labeled[i])},
             {"is_queried", st.query && *st.query == i && !s.accepted}};
    if (best) {
      const auto out = dsl::evaluate(*best, st.inputs[i]);
      row["prediction"] = out.isNull() ? json(nullptr) : json(*out.value);
      const auto outs = active::predict(st.belief, st.inputs[i]);
      row["entropy"] = active::outcomeEntropy(active::outputDistribution(probs, outs));
    } else {
      row["prediction"] = nullptr;
      row["entropy"] = nullptr;
    }
    rows.push_back(std::move(row));
  }
  json history = json::array();
  for (const auto& r : st.history)
    history.push_back({{"iteration", r.iteration},
                       {"input", r.input},
                       {"answer", r.answer},
                       {"kind", r.kind == active::ExampleKind::Query ? "query" : "correction"}});
  const bool open = st.query && !s.accepted;
  return json{{"id", s.id},
              {"status", active::name(st.status)},
              {"accepted", s.accepted},
              {"iteration", st.iteration},
              {"query", open ? json(st.inputs[*st.query]) : json(nullptr)},
              {"query_entropy", open && st.queryEntropy ? json(*st.queryEntropy) : json(nullptr)},
              {"program", best ? json(dsl::describe(*best)) : json(nullptr)},
              {"program_json", best ? dsl::toJson(*best) : json(nullptr)},
              {"failure", st.failure.empty() ? json(nullptr) : json(st.failure)},
              {"rows", std::move(rows)},
              {"history", std::move(history)}};
}

// Applies the optional "config" object of a create request.
inline active::ActiveConfig applyOverrides(active::ActiveConfig cfg, const json& j) {
  if (!j.is_object()) throw InvalidArgument("config must be an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "top") cfg.sampling.top = value.get<std::size_t>();
    else if (key == "random") cfg.sampling.random = value.get<std::size_t>();
    else if (key == "seed") cfg.sampling.seed = value.get<std::uint64_t>();
    else if (key == "input_sampling") cfg.inputSampling = active::parseInputSampling(value.get<std::string>());
    else if (key == "candidates") cfg.candidates = value.get<std::size_t>();
    else if (key == "top_distinguish") cfg.topDistinguish = value.get<std::size_t>();
    else if (key == "max_iterations") cfg.maxIterations = value.get<std::size_t>();
    else throw InvalidArgument("unknown config key " + key);
  }
  cfg.validate();
  return cfg;
}

class SessionService {
 public:
  explicit SessionService(active::ActiveConfig defaults = {}, std::chrono::seconds ttl = std::chrono::hours(1),
                          std::function<Clock::time_point()> now = Clock::now)
      : defaults_(std::move(defaults)), ttl_(ttl), now_(std::move(now)), rng_(std::random_device{}()) {
    defaults_.validate();
  }

  Response create(std::string_view body) {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::exception&) {
      return error(400, "body is not valid JSON");
    }
    if (!req.is_object() || !req.contains("inputs") || !req["inputs"].is_array())
      return error(400, "expected {\"inputs\": [string, ...]}");
    const auto& rows = req["inputs"];
    if (rows.empty()) return error(400, "dataset is empty");
    if (rows.size() > kMaxRows) return error(413, "dataset exceeds " + std::to_string(kMaxRows) + " rows");
    std::vector<std::string> inputs;
    inputs.reserve(rows.size());
    for (const auto& r : rows) {
      if (!r.is_string()) return error(400, "inputs must be strings");
      if (r.get_ref<const std::string&>().size() > kMaxInputLength)
        return error(413, "input exceeds " + std::to_string(kMaxInputLength) + " characters");
      inputs.push_back(r.get<std::string>());
    }
    active::ActiveConfig cfg = defaults_;
    try {
      if (req.contains("config")) cfg = applyOverrides(cfg, req["config"]);
    } catch (const std::exception& e) {
      return error(400, e.what());
    }

    auto s = std::make_shared<Session>();
    s->state = active::start(inputs, cfg);
    s->createdAt = s->lastActivity = now_();
    std::lock_guard lock(mutex_);
    evictLocked();
    s->id = newIdLocked();
    sessions_.emplace(s->id, s);
    return {201, view(*s)};
  }

  Response get(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "no session " + id);
    std::lock_guard lock(s->mutex);
    return {200, view(*s)};
  }

  Response answer(const std::string& id, std::string_view body) {
    auto s = find(id);
    if (!s) return error(404, "no session " + id);
    json req;
    try {
      req = json::parse(body);
    } catch (const json::exception&) {
      return error(400, "body is not valid JSON");
    }
    if (!req.is_object() || !req.contains("input") || !req.contains("output") || !req["input"].is_string() ||
        !req["output"].is_string())
      return error(400, "expected {\"input\": string, \"output\": string}");

    std::unique_lock lock(s->mutex, std::try_to_lock);
    if (!lock.owns_lock()) return error(409, "another answer is being processed");
    if (s->accepted) return error(409, "session already accepted");
    const auto& st = s->state;
    if (!st.query || st.inputs[*st.query] != req["input"].get<std::string>())
      return error(409, "input is not the current query");
    s->state = active::step(std::move(s->state), req["output"].get<std::string>());
    s->lastActivity = now_();
    return {200, view(*s)};
  }

  Response accept(const std::string& id) {
    auto s = find(id);
    if (!s) return error(404, "no session " + id);
    std::unique_lock lock(s->mutex, std::try_to_lock);
    if (!lock.owns_lock()) return error(409, "another answer is being processed");
    if (!s->state.best()) return error(409, "no program to accept yet");
    s->accepted = true;
    s->lastActivity = now_();
    return {200, view(*s)};
  }

  std::size_t size() {
    std::lock_guard lock(mutex_);
    evictLocked();
    return sessions_.size();
  }

  // Handle for tests that need to hold a session busy.
  std::shared_ptr<Session> session(const std::string& id) { return find(id); }

 private:
  std::shared_ptr<Session> find(const std::string& id) {
    std::lock_guard lock(mutex_);
    evictLocked();
    auto it = sessions_.find(id);
    if (it == sessions_.end()) return nullptr;
    it->second->lastActivity = now_();
    return it->second;
  }

  void evictLocked() {
    const auto t = now_();
    std::erase_if(sessions_, [&](const auto& kv) { return t - kv.second->lastActivity > ttl_; });
  }

  std::string newIdLocked() {
    while (true) {
      std::ostringstream out;
      out << std::hex << std::setfill('0') << std::setw(16) << rng_() << std::setw(16) << rng_();
      if (!sessions_.count(out.str())) return out.str();
    }
  }

  active::ActiveConfig defaults_;
  std::chrono::seconds ttl_;
  std::function<Clock::time_point()> now_;
  std::mutex mutex_;
  std::mt19937_64 rng_;
  std::unordered_map<std::string, std::shared_ptr<Session>> sessions_;
};

inline void reply(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

inline void installRoutes(httplib::Server& server, SessionService& svc) {
  server.Post("/sessions", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.create(req.body));
  });
  server.Get(R"(/sessions/([0-9a-f]+))", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.get(req.matches[1]));
  });
  server.Post(R"(/sessions/([0-9a-f]+)/answer)", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.answer(req.matches[1], req.body));
  });
  server.Post(R"(/sessions/([0-9a-f]+)/accept)", [&svc](const httplib::Request& req, httplib::Response& res) {
    reply(res, svc.accept(req.matches[1]));
  });
  server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "internal error";
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    }
    reply(res, error(500, message));
  });
}

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  active::ActiveConfig config;
  std::string staticDir;
  std::chrono::seconds ttl = std::chrono::hours(1);
};

// Blocks until the server stops.
inline int serve(const ServerOptions& opts) {
  SessionService svc(opts.config, opts.ttl);
  httplib::Server server;
  installRoutes(server, svc);
  if (!opts.staticDir.empty() && !server.set_mount_point("/", opts.staticDir))
    throw NotFound("static directory " + opts.staticDir + " does not exist");
  if (!server.listen(opts.host, opts.port)) throw std::runtime_error("cannot listen on port " + std::to_string(opts.port));
  return 0;
}

}  // namespace apbe::service
