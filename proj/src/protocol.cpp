#include "copan/protocol.hpp"

#include "copan/error.hpp"

namespace copan::protocol {

using nlohmann::json;

namespace {

[[noreturn]] void protocol_error(const std::string& what) {
  throw EngineError(ErrorCode::ProtocolError, what);
}

json color_vertex(Color c, const std::optional<Point>& p, int size) {
  return json::array({std::string(1, color_char(c)), to_vertex(p, size)});
}

}  // namespace

json encode_request(const std::string& id, const engine::Query& query) {
  json moves = json::array();
  for (const auto& m : query.moves) moves.push_back(color_vertex(m.color, m.point, query.board_size));
  json stones = json::array();
  for (const auto& p : query.initial_stones) stones.push_back(color_vertex(Color::Black, p, query.board_size));
  const Color initial = query.moves.empty() ? query.side_to_move() : query.moves.front().color;
  return json{{"id", id},
              {"moves", std::move(moves)},
              {"initialStones", std::move(stones)},
              {"initialPlayer", std::string(1, color_char(initial))},
              {"rules", query.rules},
              {"komi", query.komi},
              {"boardXSize", query.board_size},
              {"boardYSize", query.board_size},
              {"maxVisits", query.visits}};
}

engine::Query decode_request(const json& request) {
  try {
    engine::Query q;
    q.board_size = request.at("boardXSize").get<int>();
    if (request.value("boardYSize", q.board_size) != q.board_size)
      protocol_error("rectangular boards are not supported");
    q.komi = request.value("komi", 6.5);
    q.rules = request.value("rules", std::string("japanese"));
    q.visits = request.value("maxVisits", 1);
    for (const auto& s : request.value("initialStones", json::array())) {
      const auto p = parse_vertex(s.at(1).get<std::string>(), q.board_size);
      if (p) q.initial_stones.push_back(*p);
    }
    if (request.contains("initialPlayer")) {
      const auto c = parse_color(request.at("initialPlayer").get<std::string>());
      if (!c) protocol_error("bad initialPlayer in request");
      q.initial_player = *c;
    }
    for (const auto& m : request.at("moves")) {
      const auto color = parse_color(m.at(0).get<std::string>());
      if (!color) protocol_error("bad move color in request");
      q.moves.push_back(Move{*color, parse_vertex(m.at(1).get<std::string>(), q.board_size)});
    }
    return q;
  } catch (const json::exception& e) {
    protocol_error(std::string("malformed request: ") + e.what());
  } catch (const EngineError&) {
    throw;
  } catch (const Error& e) {
    protocol_error(e.what());
  }
}

std::string encode_result(const std::string& id, const RootInfo& root, int turn_number) {
  const json out{{"id", id},
                 {"isDuringSearch", false},
                 {"turnNumber", turn_number},
                 {"rootInfo", {{"scoreLead", root.score_lead}, {"winrate", root.winrate}, {"visits", root.visits}}}};
  return out.dump();
}

std::string encode_error(const std::string& id, const std::string& message) {
  return json{{"id", id}, {"error", message}}.dump();
}

Response decode_response(std::string_view line) {
  json doc;
  try {
    doc = json::parse(line);
  } catch (const json::parse_error& e) {
    protocol_error("unparseable engine response: " + std::string(e.what()));
  }
  if (!doc.is_object()) protocol_error("engine response is not a JSON object");

  Response r;
  if (!doc.contains("id") || !doc["id"].is_string()) {
    r.kind = Response::Kind::Unattributed;
    r.message = doc.value("error", doc.value("warning", std::string("response without id")));
    return r;
  }
  r.id = doc["id"].get<std::string>();
  if (doc.contains("error")) {
    r.kind = Response::Kind::Error;
    r.message = doc["error"].is_string() ? doc["error"].get<std::string>() : doc["error"].dump();
    return r;
  }
  if (!doc.contains("rootInfo")) {
    if (doc.contains("warning")) {
      r.kind = Response::Kind::Warning;
      r.message = doc["warning"].is_string() ? doc["warning"].get<std::string>() : doc["warning"].dump();
      return r;
    }
    protocol_error("engine response for '" + r.id + "' has no rootInfo");
  }
  try {
    const auto& root = doc["rootInfo"];
    r.root.score_lead = root.at("scoreLead").get<double>();
    r.root.winrate = root.at("winrate").get<double>();
    r.root.visits = root.value("visits", 1);
  } catch (const json::exception& e) {
    protocol_error("malformed rootInfo for '" + r.id + "': " + e.what());
  }
  return r;
}

}  // namespace copan::protocol
