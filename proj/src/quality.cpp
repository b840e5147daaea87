#include "copan/quality.hpp"

#include <algorithm>

#include "copan/error.hpp"

namespace copan::quality {

namespace {

bool counted(const cop::CopPoint& p) { return p.effect.has_value(); }

bool is_pass(const cop::CopPoint& p) { return p.move && p.move->is_pass(); }

}  // namespace

std::array<PlayerPerformance, 2> player_performance(const cop::CopSeries& series, const QualityOptions& options) {
  std::array<PlayerPerformance, 2> out;
  out[0].color = Color::Black;
  out[1].color = Color::White;
  std::array<double, 2> effect_sum{0.0, 0.0};
  std::array<int, 2> effect_count{0, 0};

  for (const auto& p : series.points) {
    if (!counted(p)) continue;
    const size_t k = p.side_to_move == Color::Black ? 0 : 1;
    auto& perf = out[k];
    double realized = cop::realized_value(p.cost, *p.effect);
    if (options.clamp_realized) realized = std::clamp(realized, 0.0, std::max(p.cost, 0.0));
    perf.cumulative_cost += p.cost;
    perf.cumulative_realized += realized;
    ++perf.moves_counted;
    if (options.include_passes || !is_pass(p)) {
      effect_sum[k] += *p.effect;
      ++effect_count[k];
    }
  }

  for (size_t k = 0; k < 2; ++k) {
    auto& perf = out[k];
    if (perf.cumulative_cost > 0.0) {
      double pct = 100.0 * perf.cumulative_realized / perf.cumulative_cost;
      if (options.clamp_realized) pct = std::clamp(pct, 0.0, 100.0);
      perf.performance_pct = pct;
    }
    if (effect_count[k] > 0) perf.mean_effect = effect_sum[k] / effect_count[k];
  }
  return out;
}

GameSummary game_summary(const cop::CopSeries& series, const QualityOptions& options) {
  GameSummary s;
  s.per_player = player_performance(series, options);
  s.move_count = s.per_player[0].moves_counted + s.per_player[1].moves_counted;
  if (s.move_count == 0) throw Error(ErrorCode::EmptySeries, "series has no analyzed moves");
  s.total_cost = s.per_player[0].cumulative_cost + s.per_player[1].cumulative_cost;
  s.mean_cost = s.total_cost / s.move_count;
  return s;
}

double mean_effect(const cop::CopSeries& series, Color color, bool include_passes) {
  double sum = 0.0;
  int count = 0;
  for (const auto& p : series.points) {
    if (!counted(p) || p.side_to_move != color) continue;
    if (!include_passes && is_pass(p)) continue;
    sum += *p.effect;
    ++count;
  }
  if (count == 0)
    throw Error(ErrorCode::NoMovesForColor, std::string("no moves for ") + (color == Color::Black ? "black" : "white"));
  return sum / count;
}

double handicap_value(engine::Engine& engine, int board_size, double komi, int visits, const std::string& rules) {
  sgf::GameRecord record;
  record.board_size = board_size;
  record.komi = komi;
  record.rules = rules;
  cop::SeriesOptions options;
  options.visits = visits;
  options.include_terminal = true;
  return cop::compute_series(record, engine, options).points.at(0).cost;
}

}  // namespace copan::quality
