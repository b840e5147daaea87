#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace copan {

enum class Color { Black, White };

constexpr Color opposite(Color c) { return c == Color::Black ? Color::White : Color::Black; }

// +1 for black, -1 for white. Score means are always black-perspective.
constexpr double sign(Color c) { return c == Color::Black ? 1.0 : -1.0; }

constexpr char color_char(Color c) { return c == Color::Black ? 'B' : 'W'; }

std::optional<Color> parse_color(std::string_view s);

// Board intersection. Columns run left to right, rows top to bottom, both 1-based
// (the SGF orientation: "pd" is column 16, row 4).
struct Point {
  int col = 0;
  int row = 0;

  bool operator==(const Point&) const = default;
  auto operator<=>(const Point&) const = default;
};

struct Move {
  Color color = Color::Black;
  std::optional<Point> point;  // empty for a pass

  static Move pass(Color c) { return Move{c, std::nullopt}; }
  static Move play(Color c, Point p) { return Move{c, p}; }

  bool is_pass() const { return !point.has_value(); }
  bool operator==(const Move&) const = default;
};

// GTP-style vertex ("Q16", letter I skipped, rows counted from the bottom) or "pass".
std::string to_vertex(const std::optional<Point>& p, int board_size);
// Returns nullopt for "pass"; throws Error(InvalidArgument) for malformed or off-board input.
std::optional<Point> parse_vertex(std::string_view vertex, int board_size);

}  // namespace copan
