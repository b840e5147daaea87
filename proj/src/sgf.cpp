#include "copan/sgf.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <set>

#include "copan/error.hpp"
#include "copan/format.hpp"

namespace copan::sgf {

namespace {

struct Property {
  std::string ident;
  std::vector<std::string> values;
};

using Node = std::vector<Property>;

// Recursive-descent reader for the SGF collection grammar. Only the first
// variation at each branch point is kept.
class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  std::vector<Node> main_line() {
    skip_ws();
    if (!consume('(')) fail("expected '(' at start of game tree");
    std::vector<Node> nodes;
    read_tree_body(nodes, true);
    return nodes;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::MalformedSgf, what + " (offset " + std::to_string(pos_) + ")");
  }

  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  void skip_ws() {
    while (!at_end() && std::isspace(static_cast<unsigned char>(peek()))) ++pos_;
  }

  bool consume(char c) {
    if (!at_end() && peek() == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  // Called after '(' has been consumed; reads through the matching ')'.
  void read_tree_body(std::vector<Node>& nodes, bool keep) {
    skip_ws();
    if (at_end() || peek() != ';') fail("game tree without nodes");
    while (true) {
      skip_ws();
      if (at_end()) fail("unbalanced parentheses");
      if (peek() != ';') break;
      ++pos_;
      Node node = read_node();
      if (keep) nodes.push_back(std::move(node));
    }
    bool first_child = true;
    while (true) {
      skip_ws();
      if (at_end()) fail("unbalanced parentheses");
      if (consume(')')) return;
      if (!consume('(')) fail(std::string("unexpected character '") + peek() + "'");
      read_tree_body(nodes, keep && first_child);
      first_child = false;
    }
  }

  Node read_node() {
    Node node;
    while (true) {
      skip_ws();
      if (at_end()) fail("unbalanced parentheses");
      const char c = peek();
      if (c == ';' || c == '(' || c == ')') return node;
      if (!std::isalpha(static_cast<unsigned char>(c))) fail(std::string("bad property identifier '") + c + "'");
      Property prop;
      while (!at_end() && std::isalpha(static_cast<unsigned char>(peek()))) {
        // FF[3] allowed lowercase letters inside identifiers; they carry no meaning.
        if (std::isupper(static_cast<unsigned char>(peek()))) prop.ident += peek();
        ++pos_;
      }
      skip_ws();
      if (at_end() || peek() != '[') fail("property " + prop.ident + " has no value");
      while (true) {
        skip_ws();
        if (!consume('[')) break;
        prop.values.push_back(read_value());
      }
      node.push_back(std::move(prop));
    }
  }

  std::string read_value() {
    std::string value;
    while (true) {
      if (at_end()) fail("unterminated property value");
      const char c = text_[pos_++];
      if (c == ']') return value;
      if (c == '\\') {
        if (at_end()) fail("unterminated property value");
        const char escaped = text_[pos_++];
        // Escaped line break is a soft break and disappears.
        if (escaped == '\n' || escaped == '\r') {
          if (!at_end() && (peek() == '\n' || peek() == '\r') && peek() != escaped) ++pos_;
          continue;
        }
        value += escaped;
        continue;
      }
      value += c;
    }
  }

  std::string_view text_;
  size_t pos_ = 0;
};

const Property* find(const Node& node, std::string_view ident) {
  for (const auto& p : node)
    if (p.ident == ident) return &p;
  return nullptr;
}

int parse_size(const std::string& value) {
  int size = 0;
  const auto colon = value.find(':');
  const std::string first = value.substr(0, colon);
  const auto [ptr, ec] = std::from_chars(first.data(), first.data() + first.size(), size);
  if (ec != std::errc() || ptr != first.data() + first.size())
    throw Error(ErrorCode::MalformedSgf, "bad SZ value '" + value + "'");
  if (colon != std::string::npos && value.substr(colon + 1) != first)
    throw Error(ErrorCode::UnsupportedSize, "rectangular board " + value + " is not supported");
  if (size < kMinBoardSize || size > kMaxBoardSize)
    throw Error(ErrorCode::UnsupportedSize, "board size " + std::to_string(size) + " is not supported");
  return size;
}

double parse_komi(const std::string& value) {
  std::string trimmed = value;
  trimmed.erase(std::remove_if(trimmed.begin(), trimmed.end(),
                               [](unsigned char c) { return std::isspace(c); }),
                trimmed.end());
  double komi = 0.0;
  const auto [ptr, ec] = std::from_chars(trimmed.data(), trimmed.data() + trimmed.size(), komi);
  if (ec != std::errc() || ptr != trimmed.data() + trimmed.size())
    throw Error(ErrorCode::MalformedSgf, "bad KM value '" + value + "'");
  return komi;
}

// Two-letter SGF point. Empty value and "tt" decode to a pass.
std::optional<Point> decode_move_point(const std::string& value, int board_size) {
  if (value.empty()) return std::nullopt;
  if (value == "tt" && board_size <= 19) return std::nullopt;
  if (value.size() != 2 || !std::islower(static_cast<unsigned char>(value[0])) ||
      !std::islower(static_cast<unsigned char>(value[1])))
    throw Error(ErrorCode::MalformedSgf, "bad move value '" + value + "'");
  const Point p{value[0] - 'a' + 1, value[1] - 'a' + 1};
  if (p.col > board_size || p.row > board_size)
    throw Error(ErrorCode::OffBoardMove, "move '" + value + "' is off a " +
                                             std::to_string(board_size) + "x" +
                                             std::to_string(board_size) + " board");
  return p;
}

// AB values may use the compressed "aa:cc" rectangle form.
std::vector<Point> decode_point_list(const std::vector<std::string>& values, int board_size) {
  std::vector<Point> points;
  for (const auto& v : values) {
    const auto colon = v.find(':');
    if (colon == std::string::npos) {
      const auto p = decode_move_point(v, board_size);
      if (!p) throw Error(ErrorCode::MalformedSgf, "empty setup point");
      points.push_back(*p);
      continue;
    }
    const auto a = decode_move_point(v.substr(0, colon), board_size);
    const auto b = decode_move_point(v.substr(colon + 1), board_size);
    if (!a || !b) throw Error(ErrorCode::MalformedSgf, "bad point rectangle '" + v + "'");
    for (int row = std::min(a->row, b->row); row <= std::max(a->row, b->row); ++row)
      for (int col = std::min(a->col, b->col); col <= std::max(a->col, b->col); ++col)
        points.push_back({col, row});
  }
  return points;
}

const std::set<std::string, std::less<>> kModeledRootProps = {"GM", "FF", "CA", "SZ", "KM",
                                                               "RU", "HA", "AB"};

std::string escape(const std::string& value) {
  std::string out;
  out.reserve(value.size());
  for (char c : value) {
    if (c == ']' || c == '\\') out += '\\';
    out += c;
  }
  return out;
}

}  // namespace

Board::Board(int size) : size_(size), cells_(static_cast<size_t>(size * size), 0) {}

bool Board::on_board(Point p) const {
  return p.col >= 1 && p.col <= size_ && p.row >= 1 && p.row <= size_;
}

bool Board::occupied(Point p) const { return cells_[static_cast<size_t>(at(p))] != 0; }

void Board::place(Color c, Point p) {
  if (!on_board(p))
    throw Error(ErrorCode::OffBoardMove, "point " + encode_point(p) + " is off the board");
  if (occupied(p))
    throw Error(ErrorCode::OccupiedPoint, "point " + encode_point(p) + " is already occupied");
  const int idx = at(p);
  cells_[static_cast<size_t>(idx)] = c == Color::Black ? 1 : 2;
  const std::array<std::pair<int, int>, 4> dirs{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (auto [dc, dr] : dirs) {
    const Point n{p.col + dc, p.row + dr};
    if (!on_board(n)) continue;
    const auto v = cells_[static_cast<size_t>(at(n))];
    if (v != 0 && v != cells_[static_cast<size_t>(idx)]) remove_if_dead(at(n));
  }
  // Suicide is left to the engine; just keep occupancy consistent.
  remove_if_dead(idx);
}

void Board::remove_if_dead(int start) {
  const auto color = cells_[static_cast<size_t>(start)];
  if (color == 0) return;
  std::vector<int> group{start};
  std::vector<bool> seen(cells_.size(), false);
  seen[static_cast<size_t>(start)] = true;
  for (size_t k = 0; k < group.size(); ++k) {
    const int idx = group[k];
    const Point p{idx % size_ + 1, idx / size_ + 1};
    const std::array<Point, 4> nbrs{{{p.col + 1, p.row}, {p.col - 1, p.row}, {p.col, p.row + 1}, {p.col, p.row - 1}}};
    for (const auto& n : nbrs) {
      if (!on_board(n)) continue;
      const int ni = at(n);
      const auto v = cells_[static_cast<size_t>(ni)];
      if (v == 0) return;  // has a liberty
      if (v == color && !seen[static_cast<size_t>(ni)]) {
        seen[static_cast<size_t>(ni)] = true;
        group.push_back(ni);
      }
    }
  }
  for (int idx : group) cells_[static_cast<size_t>(idx)] = 0;
}

std::string encode_point(Point p) {
  std::string s;
  s += static_cast<char>('a' + p.col - 1);
  s += static_cast<char>('a' + p.row - 1);
  return s;
}

GameRecord parse_sgf(std::string_view text, const ParseOptions& options) {
  Reader reader(text);
  const std::vector<Node> nodes = reader.main_line();

  GameRecord record;
  const Node& root = nodes.front();
  if (const auto* sz = find(root, "SZ")) record.board_size = parse_size(sz->values.front());
  if (const auto* km = find(root, "KM"); km && !km->values.front().empty())
    record.komi = parse_komi(km->values.front());
  if (const auto* ru = find(root, "RU"); ru && !ru->values.front().empty())
    record.rules = ru->values.front();
  if (const auto* ab = find(root, "AB"))
    record.handicap_stones = decode_point_list(ab->values, record.board_size);
  for (const auto& prop : root) {
    if (prop.ident.empty() || kModeledRootProps.count(prop.ident) || prop.ident == "B" || prop.ident == "W") continue;
    record.metadata[prop.ident] = prop.values.front();
  }

  Board board(record.board_size);
  for (const auto& stone : record.handicap_stones) board.place(Color::Black, stone);

  Color expected = record.first_to_move();
  for (size_t n = 0; n < nodes.size(); ++n) {
    const Node& node = nodes[n];
    const auto* b = find(node, "B");
    const auto* w = find(node, "W");
    if (n > 0 && (find(node, "AB") || find(node, "AW") || find(node, "AE")))
      throw Error(ErrorCode::MalformedSgf, "setup properties after the root node are not supported");
    if (n == 0 && find(node, "AW"))
      throw Error(ErrorCode::MalformedSgf, "white setup stones are not supported");
    if (!b && !w) continue;
    if (b && w) throw Error(ErrorCode::MalformedSgf, "node holds both a black and a white move");
    const Color color = b ? Color::Black : Color::White;
    const auto& prop = b ? *b : *w;
    if (prop.values.size() != 1) throw Error(ErrorCode::MalformedSgf, "move with several values");
    const auto point = decode_move_point(prop.values.front(), record.board_size);
    if (color != expected && !options.lenient_color_order)
      throw Error(ErrorCode::MalformedSgf,
                  "move " + std::to_string(record.moves.size() + 1) + " repeats color " +
                      std::string(1, color_char(color)));
    if (point) board.place(color, *point);
    record.moves.push_back(Move{color, point});
    expected = opposite(color);
  }
  return record;
}

std::string serialize_sgf(const GameRecord& record) {
  std::string out = "(;GM[1]FF[4]SZ[" + std::to_string(record.board_size) + "]KM[" +
                    format_number(record.komi) + "]";
  if (record.rules != kDefaultRules) out += "RU[" + escape(record.rules) + "]";
  if (!record.handicap_stones.empty()) {
    out += "HA[" + std::to_string(record.handicap_stones.size()) + "]AB";
    for (const auto& p : record.handicap_stones) out += "[" + encode_point(p) + "]";
  }
  for (const auto& [key, value] : record.metadata) {
    if (kModeledRootProps.count(key) || key == "B" || key == "W") continue;
    out += key + "[" + escape(value) + "]";
  }
  for (const auto& move : record.moves) {
    out += ';';
    out += color_char(move.color);
    out += '[';
    if (move.point) out += encode_point(*move.point);
    out += ']';
  }
  out += ')';
  return out;
}

std::vector<Move> position_prefix(const GameRecord& record, size_t i) {
  if (i > record.moves.size())
    throw Error(ErrorCode::IndexOutOfRange, "position " + std::to_string(i) + " is beyond move " +
                                                std::to_string(record.moves.size()));
  return {record.moves.begin(), record.moves.begin() + static_cast<std::ptrdiff_t>(i)};
}

}  // namespace copan::sgf
