#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "copan/cop.hpp"
#include "copan/mock.hpp"
#include "copan/sgf.hpp"

namespace copan::testing {

// A(n) by the backward recurrence A(n) = w(n+1) - A(n+1), starting from zero past the
// last valued move. Independent of the library's forward summation.
inline double tail_by_recurrence(const engine::MockModel& m, int n) {
  const int top = std::max(m.last_valued_move(), n) + 1;
  double a = 0.0;
  for (int k = top; k > n; --k) a = m.move_value(k) - a;
  return a;
}

// w(k) straight from the generator definition.
inline double w(double base, double decay, int k, double spike = 0.0) {
  return std::max(base - decay * (k - 1), 0.0) + spike;
}

// mu = S(n) + sign(side) A(n) - komi, with A from the recurrence.
inline double oracle_mu(const engine::MockModel& m, const std::vector<Move>& moves, double komi, Color first) {
  double s = 0.0;
  for (size_t i = 0; i < moves.size(); ++i)
    if (!moves[i].is_pass()) s += sign(moves[i].color) * m.move_value(static_cast<int>(i) + 1);
  const Color side = moves.empty() ? first : opposite(moves.back().color);
  return s + sign(side) * tail_by_recurrence(m, static_cast<int>(moves.size())) - komi;
}

// Distinct random points, alternating colors from black; never occupied, so always valid.
inline sgf::GameRecord random_game(int moves, unsigned seed, int size = 19, double pass_rate = 0.0) {
  std::mt19937 rng(seed);
  std::vector<Point> points;
  for (int c = 1; c <= size; ++c)
    for (int r = 1; r <= size; ++r) points.push_back({c, r});
  std::shuffle(points.begin(), points.end(), rng);
  std::bernoulli_distribution pass(pass_rate);
  sgf::GameRecord g;
  g.board_size = size;
  Color c = Color::Black;
  size_t next = 0;
  for (int i = 0; i < moves; ++i) {
    if (pass(rng) || next >= points.size())
      g.moves.push_back(Move::pass(c));
    else
      g.moves.push_back(Move::play(c, points[next++]));
    c = opposite(c);
  }
  return g;
}

inline sgf::GameRecord swap_colors(sgf::GameRecord g) {
  for (auto& m : g.moves) m.color = opposite(m.color);
  return g;
}

// Series of `costs` with alternating sides from black, effects set (0 unless given).
inline cop::CopSeries series_of(const std::vector<double>& costs, const std::vector<double>& effects = {}) {
  cop::CopSeries s;
  for (size_t i = 0; i < costs.size(); ++i) {
    cop::CopPoint p;
    p.index = static_cast<int>(i);
    p.side_to_move = i % 2 == 0 ? Color::Black : Color::White;
    p.cost = costs[i];
    p.effect = i < effects.size() ? effects[i] : 0.0;
    p.move = Move::play(p.side_to_move, Point{1 + static_cast<int>(i % 19), 1 + static_cast<int>(i / 19 % 19)});
    s.points.push_back(p);
  }
  s.game.move_count = static_cast<int>(costs.size());
  return s;
}

inline std::vector<double> line(int n, double intercept = 12.0, double slope = -0.05) {
  std::vector<double> c(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) c[static_cast<size_t>(i)] = intercept + slope * i;
  return c;
}

}  // namespace copan::testing
