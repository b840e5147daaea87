#pragma once

#include <memory>

#include "copan/engine.hpp"

namespace copan::engine {

// Client for an analysis engine running as a child process, talking line-delimited
// JSON over its stdin/stdout. Concurrent evaluate() calls are multiplexed onto the
// single pipe (up to max_in_flight outstanding) and matched to responses by id.
//
// If the engine dies, it is restarted once and the unanswered queries are replayed
// one at a time. Should the restarted engine die as well, the query it was
// answering fails with EngineCrashed (caused_crash() set), every other pending
// query fails with EngineCrashed, and the client stays dead. A restart is re-armed
// once the engine answers a query successfully.
class ProcessEngine final : public Engine {
 public:
  // Throws EngineError(EngineCrashed) when the command cannot be started.
  explicit ProcessEngine(EngineConfig config);
  ~ProcessEngine() override;

  ProcessEngine(const ProcessEngine&) = delete;
  ProcessEngine& operator=(const ProcessEngine&) = delete;

  int max_in_flight() const override;
  std::string describe() const override;

  const EngineConfig& config() const;
  int restarts() const;
  bool alive() const;
  const std::string& stderr_log() const;

 protected:
  PositionEval do_evaluate(const Query& query) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Splits a command line into argv, honoring single and double quotes.
std::vector<std::string> split_command(std::string_view command);

}  // namespace copan::engine
