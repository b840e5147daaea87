#pragma once

#include <array>
#include <optional>

#include "copan/cop.hpp"

namespace copan::quality {

struct PlayerPerformance {
  Color color = Color::Black;
  double cumulative_cost = 0.0;
  double cumulative_realized = 0.0;
  // Unset when cumulative_cost <= 0.
  std::optional<double> performance_pct;
  // Unset when the player has no counted moves.
  std::optional<double> mean_effect;
  int moves_counted = 0;

  bool operator==(const PlayerPerformance&) const = default;
};

struct GameSummary {
  double total_cost = 0.0;
  int move_count = 0;
  double mean_cost = 0.0;
  std::array<PlayerPerformance, 2> per_player;  // black, white

  bool operator==(const GameSummary&) const = default;
};

struct QualityOptions {
  // Clamp each move's realized value into [0, max(cost, 0)] and the percentage into [0, 100].
  bool clamp_realized = false;
  // Count passes in mean_effect.
  bool include_passes = false;
};

// Only points carrying an effect (a move was played there) are aggregated; a
// terminal position contributes nothing.
GameSummary game_summary(const cop::CopSeries& series, const QualityOptions& options = {});

std::array<PlayerPerformance, 2> player_performance(const cop::CopSeries& series,
                                                    const QualityOptions& options = {});

// Throws NoMovesForColor when `color` has no counted move.
double mean_effect(const cop::CopSeries& series, Color color, bool include_passes = false);

// Cost of passing on the empty board, through the same path as compute_series.
double handicap_value(engine::Engine& engine, int board_size, double komi, int visits = 1,
                      const std::string& rules = "japanese");

}  // namespace copan::quality
