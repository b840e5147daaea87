#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>

#include "copan/engine.hpp"

namespace copan::engine {

// Deterministic stand-in for an analysis engine. Move k (1-based) is worth w(k) to
// its mover, with w(k) = max(base_value - decay*(k-1), 0) + spike(k). Both sides play
// perfectly from the queried position on, so its score mean is the negamax value
//
//   mu(n) = S(n) + sign(side to move) * A(n) - komi
//   S(n)  = sum over played, non-pass moves k <= n of sign(mover_k) * w(k)
//   A(n)  = sum_{j>=1} (-1)^(j+1) w(n+j)
//
// and the cost of passing at position n is exactly w(n+1).
struct MockModel {
  double base_value = 12.0;
  double decay = 0.05;
  std::map<int, double> spikes;
  // Last move index at which the linear part is nonzero. Defaults to where it hits 0,
  // or 400 moves when decay is 0.
  std::optional<int> horizon;

  // Throws InvalidArgument when base_value <= 0, decay < 0 or a spike is negative.
  void validate() const;
  double move_value(int k) const;
  // Index past which every w(k) is 0.
  int last_valued_move() const;
};

double negamax_tail(const MockModel& model, int n);  // A(n)
double negamax_mock_score(const MockModel& model, const Query& query);

class NegamaxMock final : public Engine {
 public:
  explicit NegamaxMock(MockModel model);

  const MockModel& model() const { return model_; }
  std::string describe() const override;

 protected:
  PositionEval do_evaluate(const Query& query) override;

 private:
  MockModel model_;
};

// Fixture table for the scripted engine. Keys are move lists written as
// space-separated "<color> <vertex>" tokens ("" is the empty board, "B Q16 W pass").
struct ScriptedFixture {
  struct Entry {
    double score_mean = 0.0;  // black perspective
    double win_rate = 0.5;
  };
  int board_size = 19;
  Color first_player = Color::Black;
  std::unordered_map<std::string, Entry> entries;

  static std::string key(const std::vector<Move>& moves, int board_size);

  // {"boardSize":19,"firstPlayer":"B","entries":[{"moves":[["B","Q16"]],"pass":true,
  //  "scoreMean":1.25,"winRate":0.5}]}. "pass" appends a pass by the side to move.
  static ScriptedFixture from_json(std::string_view text);
  static ScriptedFixture load(const std::string& path);
  void add(std::vector<Move> moves, bool pass, Entry entry);
};

class ScriptedMock final : public Engine {
 public:
  explicit ScriptedMock(ScriptedFixture fixture);

  std::string describe() const override { return "scripted-mock"; }

 protected:
  // Throws EngineError(ProtocolError, "MissingFixture ...") for unknown positions.
  PositionEval do_evaluate(const Query& query) override;

 private:
  ScriptedFixture fixture_;
};

double mock_win_rate(double score_mean);

// Behavior of `copan mock-engine` beyond answering queries. Crash/hang/shuffle
// switches exist to exercise client robustness.
struct MockServerOptions {
  Perspective perspective = Perspective::SideToMove;
  int shuffle_window = 0;      // > 1 answers batches in random order
  int max_delay_ms = 0;        // random delay before each answer
  int crash_on_length = -1;    // exit abruptly on a query with this many moves
  int hang_on_length = -1;     // never answer a query with this many moves
  unsigned seed = 1;
};

using Responder = std::function<PositionEval(const Query&)>;

// Speaks the analysis protocol over the given streams until input ends.
void run_mock_server(std::istream& in, std::ostream& out, const Responder& respond,
                     const MockServerOptions& options);

}  // namespace copan::engine
