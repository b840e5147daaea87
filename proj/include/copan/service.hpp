#pragma once

#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "copan/cop.hpp"
#include "copan/features.hpp"
#include "copan/report.hpp"
#include "json.hpp"

namespace copan::service {

using EngineFactory = std::function<std::unique_ptr<engine::Engine>()>;

// Hands out one shared engine and builds a fresh one after a crash is reported.
class EnginePool {
 public:
  explicit EnginePool(EngineFactory factory);

  std::shared_ptr<engine::Engine> acquire();
  // Drops `engine` if it is still the current one.
  void discard(const std::shared_ptr<engine::Engine>& engine);

 private:
  EngineFactory factory_;
  std::mutex mu_;
  std::shared_ptr<engine::Engine> current_;
};

struct LiveOptions {
  int visits = 1;
  // Used until enough costs exist for a fit of their own.
  features::BaselineFit prior{-0.05, 12.0, 1.0, 0, {}};
  report::DangerOptions danger;
};

// One WebSocket game. Messages:
//   {"move":{"color":"B","vertex":"Q16"}} -> {"index","cost","dangerLevel","sente","sideToMove"}
//   {"config":{"boardSize":19,"komi":6.5,"rules":"japanese"}} before the first move
//   {"reset":true}
// Failures reply {"error":<code>,"message":...} and leave the session unchanged.
// Replies never name a board location.
class LiveSession {
 public:
  LiveSession(EnginePool& pool, cop::EvalCache& cache, LiveOptions options);

  nlohmann::json handle(const nlohmann::json& message);
  nlohmann::json handle_text(std::string_view text);

  size_t move_count() const { return record_.moves.size(); }

 private:
  nlohmann::json play(const nlohmann::json& move);
  nlohmann::json configure(const nlohmann::json& config);
  nlohmann::json reset();

  EnginePool& pool_;
  cop::EvalCache& cache_;
  LiveOptions options_;
  sgf::GameRecord record_;
  sgf::Board board_;
  std::vector<double> x_;
  std::vector<double> costs_;
};

struct ServiceOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 0;  // 0 picks a free port
  int visits = 1;
  EngineFactory engine_factory;
  // Served under "/" when set.
  std::string static_dir;
  features::FeatureOptions features;
  LiveOptions live;
};

// HTTP + WebSocket front end:
//   POST /games                  SGF body -> 201 {"id","status"}
//   GET  /games/{id}             {"id","status"}
//   GET  /games/{id}/analysis    202 while pending, 404 for unknown ids
//   GET  /games/{id}/features
//   GET  /games/{id}/chart
//   WS   /live                   LiveSession protocol
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds and starts serving in background threads. Throws IoError.
  void start();
  unsigned short port() const;
  // Closes the listener and every open connection, then joins workers.
  void stop();

 private:
  struct Impl;
  std::shared_ptr<Impl> impl_;
};

}  // namespace copan::service
