#include "copan/mock.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "copan/error.hpp"
#include "copan/format.hpp"

namespace copan::engine {

using nlohmann::json;

void MockModel::validate() const {
  if (!(base_value > 0.0)) throw Error(ErrorCode::InvalidArgument, "mock base value must be positive");
  if (!(decay >= 0.0)) throw Error(ErrorCode::InvalidArgument, "mock decay must be non-negative");
  if (horizon && *horizon < 0) throw Error(ErrorCode::InvalidArgument, "mock horizon must be non-negative");
  for (const auto& [k, v] : spikes) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "spike move index must be >= 1");
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "spike values must be non-negative");
  }
}

namespace {

int linear_horizon(const MockModel& m) {
  if (m.horizon) return *m.horizon;
  if (m.decay > 0.0) return static_cast<int>(std::ceil(m.base_value / m.decay)) + 1;
  return 400;
}

}  // namespace

double MockModel::move_value(int k) const {
  double w = 0.0;
  if (k >= 1 && k <= linear_horizon(*this)) w = std::max(base_value - decay * (k - 1), 0.0);
  if (const auto it = spikes.find(k); it != spikes.end()) w += it->second;
  return w;
}

int MockModel::last_valued_move() const {
  int last = linear_horizon(*this);
  if (!spikes.empty()) last = std::max(last, spikes.rbegin()->first);
  return last;
}

double negamax_tail(const MockModel& model, int n) {
  const int last = model.last_valued_move();
  double sum = 0.0;
  double alternating = 1.0;
  for (int k = n + 1; k <= last; ++k) {
    sum += alternating * model.move_value(k);
    alternating = -alternating;
  }
  return sum;
}

double negamax_mock_score(const MockModel& model, const Query& query) {
  double played = 0.0;
  for (size_t i = 0; i < query.moves.size(); ++i) {
    const auto& m = query.moves[i];
    if (!m.is_pass()) played += sign(m.color) * model.move_value(static_cast<int>(i) + 1);
  }
  const int n = static_cast<int>(query.moves.size());
  return played + sign(query.side_to_move()) * negamax_tail(model, n) - query.komi;
}

double mock_win_rate(double score_mean) { return 1.0 / (1.0 + std::exp(-score_mean / 8.0)); }

NegamaxMock::NegamaxMock(MockModel model) : model_(std::move(model)) { model_.validate(); }

std::string NegamaxMock::describe() const {
  return "negamax-mock(base=" + format_number(model_.base_value) +
         ",decay=" + format_number(model_.decay) + ",spikes=" + std::to_string(model_.spikes.size()) + ")";
}

PositionEval NegamaxMock::do_evaluate(const Query& query) {
  const double mu = negamax_mock_score(model_, query);
  return PositionEval{mu, mock_win_rate(mu), std::max(query.visits, 1), query.side_to_move()};
}

std::string ScriptedFixture::key(const std::vector<Move>& moves, int board_size) {
  std::string k;
  for (const auto& m : moves) {
    if (!k.empty()) k += ' ';
    k += color_char(m.color);
    k += ' ';
    k += to_vertex(m.point, board_size);
  }
  return k;
}

void ScriptedFixture::add(std::vector<Move> moves, bool pass, Entry entry) {
  if (pass) {
    const Color side = moves.empty() ? first_player : opposite(moves.back().color);
    moves.push_back(Move::pass(side));
  }
  entries[key(moves, board_size)] = entry;
}

ScriptedFixture ScriptedFixture::from_json(std::string_view text) {
  try {
    const json doc = json::parse(text);
    ScriptedFixture f;
    f.board_size = doc.value("boardSize", 19);
    if (const auto c = parse_color(doc.value("firstPlayer", std::string("B")))) f.first_player = *c;
    for (const auto& e : doc.at("entries")) {
      std::vector<Move> moves;
      for (const auto& m : e.value("moves", json::array())) {
        const auto color = parse_color(m.at(0).get<std::string>());
        if (!color) throw Error(ErrorCode::BadDocument, "bad color in fixture");
        moves.push_back(Move{*color, parse_vertex(m.at(1).get<std::string>(), f.board_size)});
      }
      const double mu = e.at("scoreMean").get<double>();
      f.add(std::move(moves), e.value("pass", false), Entry{mu, e.value("winRate", mock_win_rate(mu))});
    }
    return f;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("bad fixture: ") + e.what());
  }
}

ScriptedFixture ScriptedFixture::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read fixture " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

ScriptedMock::ScriptedMock(ScriptedFixture fixture) : fixture_(std::move(fixture)) {}

PositionEval ScriptedMock::do_evaluate(const Query& query) {
  const auto k = ScriptedFixture::key(query.moves, query.board_size);
  const auto it = fixture_.entries.find(k);
  if (it == fixture_.entries.end())
    throw EngineError(ErrorCode::ProtocolError, "MissingFixture: no entry for position '" + k + "'");
  return PositionEval{it->second.score_mean, it->second.win_rate, std::max(query.visits, 1),
                      query.side_to_move()};
}

}  // namespace copan::engine
