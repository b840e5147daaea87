#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "copan/types.hpp"

namespace copan::sgf {

inline constexpr int kMinBoardSize = 5;
inline constexpr int kMaxBoardSize = 19;
inline constexpr std::string_view kDefaultRules = "japanese";

struct GameRecord {
  int board_size = 19;
  double komi = 6.5;
  std::string rules{kDefaultRules};
  // Placed before move 1. Indices in `moves` are unaffected by them.
  std::vector<Point> handicap_stones;
  std::vector<Move> moves;
  // Root properties not modeled above (PB, PW, DT, RE, ...), keyed by SGF identifier.
  std::map<std::string, std::string> metadata;

  Color first_to_move() const { return handicap_stones.empty() ? Color::Black : Color::White; }

  bool operator==(const GameRecord&) const = default;
};

struct ParseOptions {
  // Accept two consecutive moves by the same color.
  bool lenient_color_order = false;
};

// Main line of the first game tree. Throws Error with MalformedSgf, OffBoardMove,
// OccupiedPoint or UnsupportedSize.
GameRecord parse_sgf(std::string_view text, const ParseOptions& options = {});

// Canonical FF[4] text; parse_sgf(serialize_sgf(r)) == r.
std::string serialize_sgf(const GameRecord& record);

// Moves leading to position s_i. Throws IndexOutOfRange when i > moves.size().
std::vector<Move> position_prefix(const GameRecord& record, size_t i);

// Occupancy tracker used to validate records. Captures are resolved so that
// re-filling a captured point is accepted; ko and suicide are not judged.
class Board {
 public:
  explicit Board(int size);

  int size() const { return size_; }
  bool occupied(Point p) const;
  bool on_board(Point p) const;
  // Throws OffBoardMove / OccupiedPoint.
  void place(Color c, Point p);

 private:
  int at(Point p) const { return (p.row - 1) * size_ + (p.col - 1); }
  void remove_if_dead(int start);

  int size_;
  // 0 empty, 1 black, 2 white
  std::vector<unsigned char> cells_;
};

std::string encode_point(Point p);

}  // namespace copan::sgf
