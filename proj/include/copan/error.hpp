#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace copan {

enum class ErrorCode {
  InvalidArgument,
  MalformedSgf,
  OffBoardMove,
  OccupiedPoint,
  UnsupportedSize,
  IndexOutOfRange,
  EngineCrashed,
  QueryTimeout,
  ProtocolError,
  EngineRejectedQuery,
  TooFewPoints,
  DegenerateFit,
  EmptySeries,
  NoMovesForColor,
  IoError,
  BadDocument,
};

const char* error_code_name(ErrorCode code);

bool is_engine_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Engine failure. `index` is the analyzed position the failing query belonged to, once known.
// `caused_crash` marks the query that brought the engine down after a restart.
class EngineError : public Error {
 public:
  EngineError(ErrorCode code, const std::string& message, bool caused_crash = false)
      : Error(code, message), caused_crash_(caused_crash) {}

  std::optional<int> index() const { return index_; }
  bool caused_crash() const { return caused_crash_; }

  EngineError at_index(int index) const;

 private:
  std::optional<int> index_;
  bool caused_crash_ = false;
};

}  // namespace copan
