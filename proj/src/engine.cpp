#include "copan/engine.hpp"

#include "copan/error.hpp"
#include "copan/format.hpp"

namespace copan::engine {

const char* perspective_name(Perspective p) {
  switch (p) {
    case Perspective::Black: return "black";
    case Perspective::White: return "white";
    case Perspective::SideToMove: return "side-to-move";
  }
  return "side-to-move";
}

Perspective parse_perspective(std::string_view s) {
  if (s == "black" || s == "BLACK") return Perspective::Black;
  if (s == "white" || s == "WHITE") return Perspective::White;
  if (s == "side-to-move" || s == "SIDETOMOVE" || s == "sidetomove") return Perspective::SideToMove;
  throw Error(ErrorCode::InvalidArgument, "unknown perspective '" + std::string(s) + "'");
}

Color Query::side_to_move() const {
  if (!moves.empty()) return opposite(moves.back().color);
  if (initial_player) return *initial_player;
  return initial_stones.empty() ? Color::Black : Color::White;
}

std::string Query::canonical_key() const {
  std::string key = std::to_string(board_size) + "|" + rules + "|" + format_number(komi) + "|" +
                    std::to_string(visits) + "|";
  for (const auto& p : initial_stones) key += to_vertex(p, board_size) + ",";
  key += "|";
  if (moves.empty()) key += color_char(side_to_move());
  for (const auto& m : moves) {
    key += color_char(m.color);
    key += to_vertex(m.point, board_size);
    key += ',';
  }
  return key;
}

double normalize_to_black(double raw_score, Perspective perspective, Color side_to_move) {
  switch (perspective) {
    case Perspective::Black: return raw_score;
    case Perspective::White: return -raw_score;
    case Perspective::SideToMove: return side_to_move == Color::Black ? raw_score : -raw_score;
  }
  return raw_score;
}

double normalize_win_rate_to_black(double raw_win_rate, Perspective perspective, Color side_to_move) {
  const bool flip = perspective == Perspective::White ||
                    (perspective == Perspective::SideToMove && side_to_move == Color::White);
  return flip ? 1.0 - raw_win_rate : raw_win_rate;
}

PositionEval evaluate(Engine& engine, const Query& query) { return engine.evaluate(query); }

Query with_pass(Query query) {
  query.moves.push_back(Move::pass(query.side_to_move()));
  return query;
}

PositionEval evaluate_with_pass(Engine& engine, const Query& query) {
  return engine.evaluate(with_pass(query));
}

}  // namespace copan::engine
