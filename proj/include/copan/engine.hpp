#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "copan/types.hpp"

namespace copan::engine {

// How an engine reports score leads and win rates.
enum class Perspective { Black, White, SideToMove };

const char* perspective_name(Perspective p);
Perspective parse_perspective(std::string_view s);

struct EngineConfig {
  std::vector<std::string> command;
  int visits = 500;
  std::string rules = "japanese";
  Perspective reporting_perspective = Perspective::SideToMove;
  std::chrono::duration<double> timeout{60.0};
  int max_in_flight = 4;
  // Engine stderr goes here; empty picks a file in the temp directory.
  std::string stderr_log;
};

// Engine verdict for one position, already normalized to black's perspective.
struct PositionEval {
  double score_mean = 0.0;
  double win_rate = 0.5;
  int visits_used = 1;
  Color side_to_move = Color::Black;

  bool operator==(const PositionEval&) const = default;
};

// Everything an engine needs to evaluate a single position.
struct Query {
  std::vector<Move> moves;
  std::vector<Point> initial_stones;  // black handicap stones
  // Side to move before any move; unset means white after handicap stones, else black.
  std::optional<Color> initial_player;
  double komi = 6.5;
  int board_size = 19;
  std::string rules = "japanese";
  int visits = 1;

  Color side_to_move() const;
  // Canonical text identifying the position and search budget; used as cache key.
  std::string canonical_key() const;
};

double normalize_to_black(double raw_score, Perspective perspective, Color side_to_move);
double normalize_win_rate_to_black(double raw_win_rate, Perspective perspective, Color side_to_move);

class Engine {
 public:
  virtual ~Engine() = default;

  // Thread safe. Counts every call that reaches the engine.
  PositionEval evaluate(const Query& query) {
    queries_.fetch_add(1, std::memory_order_relaxed);
    return do_evaluate(query);
  }

  std::uint64_t queries_issued() const { return queries_.load(std::memory_order_relaxed); }

  // How many evaluate calls may usefully run at once.
  virtual int max_in_flight() const { return 1; }
  virtual std::string describe() const = 0;

 protected:
  virtual PositionEval do_evaluate(const Query& query) = 0;

 private:
  std::atomic<std::uint64_t> queries_{0};
};

// One query for the position reached by `query.moves`.
PositionEval evaluate(Engine& engine, const Query& query);

// Same position with the side to move passing: the pass is appended to the move
// list, never injected by flipping the turn.
PositionEval evaluate_with_pass(Engine& engine, const Query& query);

Query with_pass(Query query);

}  // namespace copan::engine
