#include "copan/types.hpp"

#include <cctype>
#include <charconv>

#include "copan/error.hpp"

namespace copan {

namespace {

constexpr std::string_view kColumns = "ABCDEFGHJKLMNOPQRSTUVWXYZ";

}  // namespace

std::optional<Color> parse_color(std::string_view s) {
  if (s == "B" || s == "b" || s == "black" || s == "Black") return Color::Black;
  if (s == "W" || s == "w" || s == "white" || s == "White") return Color::White;
  return std::nullopt;
}

std::string to_vertex(const std::optional<Point>& p, int board_size) {
  if (!p) return "pass";
  std::string out(1, kColumns[static_cast<size_t>(p->col - 1)]);
  out += std::to_string(board_size + 1 - p->row);
  return out;
}

std::optional<Point> parse_vertex(std::string_view vertex, int board_size) {
  if (vertex == "pass" || vertex == "PASS" || vertex == "Pass") return std::nullopt;
  if (vertex.size() < 2)
    throw Error(ErrorCode::InvalidArgument, "bad vertex '" + std::string(vertex) + "'");
  const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(vertex[0])));
  const auto col_pos = kColumns.find(letter);
  int number = 0;
  const auto digits = vertex.substr(1);
  const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), number);
  if (col_pos == std::string_view::npos || ec != std::errc() || ptr != digits.data() + digits.size())
    throw Error(ErrorCode::InvalidArgument, "bad vertex '" + std::string(vertex) + "'");
  const Point p{static_cast<int>(col_pos) + 1, board_size + 1 - number};
  if (p.col > board_size || p.row < 1 || p.row > board_size)
    throw Error(ErrorCode::InvalidArgument,
                "vertex '" + std::string(vertex) + "' is off a " + std::to_string(board_size) +
                    "x" + std::to_string(board_size) + " board");
  return p;
}

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::MalformedSgf: return "MalformedSgf";
    case ErrorCode::OffBoardMove: return "OffBoardMove";
    case ErrorCode::OccupiedPoint: return "OccupiedPoint";
    case ErrorCode::UnsupportedSize: return "UnsupportedSize";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::EngineCrashed: return "EngineCrashed";
    case ErrorCode::QueryTimeout: return "QueryTimeout";
    case ErrorCode::ProtocolError: return "ProtocolError";
    case ErrorCode::EngineRejectedQuery: return "EngineRejectedQuery";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::DegenerateFit: return "DegenerateFit";
    case ErrorCode::EmptySeries: return "EmptySeries";
    case ErrorCode::NoMovesForColor: return "NoMovesForColor";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::BadDocument: return "BadDocument";
  }
  return "Unknown";
}

bool is_engine_error(ErrorCode code) {
  return code == ErrorCode::EngineCrashed || code == ErrorCode::QueryTimeout ||
         code == ErrorCode::ProtocolError || code == ErrorCode::EngineRejectedQuery;
}

EngineError EngineError::at_index(int index) const {
  EngineError annotated(code(), "index " + std::to_string(index) + ": " + what(), caused_crash_);
  annotated.index_ = index;
  return annotated;
}

}  // namespace copan
