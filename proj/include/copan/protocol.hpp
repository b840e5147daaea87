#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

#include "copan/engine.hpp"

// Line-delimited JSON analysis protocol (KataGo analysis engine dialect).
namespace copan::protocol {

struct RootInfo {
  double score_lead = 0.0;  // in the engine's reporting perspective
  double winrate = 0.5;
  int visits = 1;
};

struct Response {
  enum class Kind { Result, Error, Warning, Unattributed };
  Kind kind = Kind::Result;
  std::string id;
  RootInfo root;
  std::string message;  // error or warning text
};

nlohmann::json encode_request(const std::string& id, const engine::Query& query);
// Throws Error(ProtocolError) on missing or mistyped fields.
engine::Query decode_request(const nlohmann::json& request);

std::string encode_result(const std::string& id, const RootInfo& root, int turn_number);
std::string encode_error(const std::string& id, const std::string& message);

// Throws Error(ProtocolError) for lines that are not JSON objects or carry a malformed rootInfo.
Response decode_response(std::string_view line);

}  // namespace copan::protocol
