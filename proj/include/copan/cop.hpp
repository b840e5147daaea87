#pragma once

#include <cstdint>
#include <future>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "copan/engine.hpp"
#include "copan/sgf.hpp"

namespace copan::cop {

struct CopPoint {
  int index = 0;  // position s_i, i moves played
  Color side_to_move = Color::Black;
  double score_mean_before = 0.0;      // mu(s_i), black perspective
  double score_mean_after_pass = 0.0;  // mu(pass(s_i)), black perspective
  double cost = 0.0;                   // mover perspective
  double win_rate = 0.5;
  // Effect of the move actually played at s_i; absent for the terminal position.
  std::optional<double> effect;
  // The move played at s_i; absent for the terminal position.
  std::optional<Move> move;

  bool operator==(const CopPoint&) const = default;
};

struct GameRef {
  int board_size = 19;
  double komi = 6.5;
  std::string rules = "japanese";
  int move_count = 0;
  std::map<std::string, std::string> metadata;

  bool operator==(const GameRef&) const = default;
};

struct EngineRef {
  std::string name;
  int visits = 1;

  bool operator==(const EngineRef&) const = default;
};

struct CopSeries {
  std::vector<CopPoint> points;
  GameRef game;
  EngineRef engine;

  // Effects of the analyzed moves, in order (e_1 .. e_N).
  std::vector<double> effects() const;

  bool operator==(const CopSeries&) const = default;
};

// c_i = sign(side) * (mu_before - mu_after_pass). May be slightly negative.
double cost_of_passing(double mu_before, double mu_after_pass, Color side_to_move);

// sign(mover) * (mu_next - mu_prev): mover-perspective score change caused by a move.
double effect(double mu_prev, double mu_next, Color mover);

// cost + effect. A pass realizes 0, an engine-optimal move realizes the full cost.
double realized_value(double cost, double effect);

// Memoizes engine verdicts by position. Concurrent requests for the same key wait
// for a single engine query. Failed queries are not cached.
class EvalCache {
 public:
  engine::PositionEval get_or_evaluate(engine::Engine& engine, const engine::Query& query);

  std::uint64_t hits() const;
  std::uint64_t misses() const;
  size_t size() const;
  void clear();

 private:
  mutable std::mutex mu_;
  std::unordered_map<std::string, std::shared_future<engine::PositionEval>> entries_;
  std::uint64_t hits_ = 0;
  std::uint64_t misses_ = 0;
};

struct SeriesOptions {
  int visits = 1;
  bool include_terminal = false;
  // Null disables caching; every lookup goes to the engine.
  EvalCache* cache = nullptr;
};

// Evaluates each analyzed position and its pass-injected twin. Engine failures are
// rethrown as EngineError annotated with the position index.
CopSeries compute_series(const sgf::GameRecord& record, engine::Engine& engine,
                         const SeriesOptions& options);

engine::Query position_query(const sgf::GameRecord& record, size_t i, int visits);

}  // namespace copan::cop
