#include "copan/report.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "copan/error.hpp"
#include "copan/format.hpp"

namespace copan::report {

using nlohmann::json;

namespace {

constexpr double kMinScale = 1e-6;

std::string color_text(Color c) { return std::string(1, color_char(c)); }

Color color_from(const json& j) {
  const auto c = parse_color(j.get<std::string>());
  if (!c) throw Error(ErrorCode::BadDocument, "bad color " + j.dump());
  return *c;
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json rounded_or_undefined(const std::optional<double>& v) { return v ? json(round2(*v)) : json("undefined"); }

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string(what) + ": " + e.what());
  }
}

}  // namespace

DangerLevel danger_level(double cost, const features::BaselineFit& fit, int index, const DangerOptions& options) {
  DangerLevel d;
  d.cost = cost;
  if (options.absolute) {
    d.residual_in_mads = cost / std::max(options.absolute_unit, kMinScale);
  } else {
    d.residual_in_mads = (cost - fit.at(index)) / std::max(fit.residual_scale, kMinScale);
  }
  const double m = d.residual_in_mads;
  d.level = m <= 1.0 ? 0 : m <= 2.0 ? 1 : m <= 4.0 ? 2 : 3;
  return d;
}

json render_chart(const cop::CopSeries& series, const features::BaselineFit& fit,
                  const std::vector<features::Segment>& segments,
                  const std::vector<features::StageSpan>& stages) {
  const json x_axis = {{"field", "index"}, {"type", "quantitative"}, {"title", "move"}};
  json layers = json::array();

  if (!stages.empty()) {
    json values = json::array();
    for (const auto& s : stages)
      values.push_back({{"stage", features::stage_name(s.stage)}, {"start", s.start}, {"end", s.end + 1}});
    layers.push_back({
        {"name", "stages"},
        {"data", {{"values", values}}},
        {"mark", {{"type", "rect"}, {"opacity", 0.08}}},
        {"encoding",
         {{"x", {{"field", "start"}, {"type", "quantitative"}}},
          {"x2", {{"field", "end"}}},
          {"color",
           {{"field", "stage"},
            {"type", "nominal"},
            {"scale", {{"domain", {"Opening", "Middle", "Endgame"}}, {"range", {"#4c78a8", "#f58518", "#54a24b"}}}},
            {"legend", {{"title", "stage"}}}}}}},
    });
  }

  json bars = json::array();
  for (const auto& p : series.points)
    bars.push_back({{"index", p.index}, {"cost", p.cost}, {"side", color_text(p.side_to_move)}});
  layers.push_back({
      {"name", "costs"},
      {"data", {{"values", bars}}},
      {"mark", {{"type", "bar"}, {"stroke", "#555555"}, {"strokeWidth", 0.3}}},
      {"encoding",
       {{"x", x_axis},
        {"y", {{"field", "cost"}, {"type", "quantitative"}, {"title", "cost of passing (points)"}}},
        {"color",
         {{"field", "side"},
          {"type", "nominal"},
          {"scale", {{"domain", {"B", "W"}}, {"range", {"#222222", "#f2f2f2"}}}},
          {"legend", {{"title", "to move"}}}}},
        {"tooltip", {{{"field", "index"}}, {{"field", "cost"}}, {{"field", "side"}}}}}},
  });

  if (!series.points.empty()) {
    const int first = series.points.front().index;
    const int last = series.points.back().index;
    layers.push_back({
        {"name", "baseline"},
        {"data",
         {{"values",
           {{{"index", first}, {"baseline", fit.at(first)}}, {{"index", last}, {"baseline", fit.at(last)}}}}}},
        {"mark", {{"type", "line"}, {"color", "#d62728"}, {"strokeDash", {6, 3}}}},
        {"encoding", {{"x", x_axis}, {"y", {{"field", "baseline"}, {"type", "quantitative"}}}}},
    });
  }

  if (!segments.empty()) {
    json values = json::array();
    for (const auto& s : segments) {
      json v = {{"kind", features::segment_kind_name(s.kind)},
                {"start", s.start},
                {"end", s.end + 1},
                {"peak", s.peak}};
      if (s.defender) v["defender"] = color_text(*s.defender);
      values.push_back(v);
    }
    layers.push_back({
        {"name", "segments"},
        {"data", {{"values", values}}},
        {"mark", {{"type", "rect"}, {"opacity", 0.25}}},
        {"encoding",
         {{"x", {{"field", "start"}, {"type", "quantitative"}}},
          {"x2", {{"field", "end"}}},
          {"color",
           {{"field", "kind"},
            {"type", "nominal"},
            {"scale",
             {{"domain", {"ForcingSpike", "TwoSidedFight", "OneSidedForcing"}},
              {"range", {"#9467bd", "#e45756", "#ff9da6"}}}},
            {"legend", {{"title", "segment"}}}}},
          {"tooltip", {{{"field", "kind"}}, {{"field", "peak"}}}}}},
    });
  }

  return {
      {"$schema", "https://vega.github.io/schema/vega-lite/v5.json"},
      {"title", "Cost of passing"},
      {"width", 720},
      {"height", 280},
      {"layer", layers},
      {"resolve", {{"scale", {{"color", "independent"}}}}},
  };
}

json analysis_to_json(const cop::CopSeries& series) {
  json points = json::array();
  for (const auto& p : series.points) {
    points.push_back({
        {"index", p.index},
        {"sideToMove", color_text(p.side_to_move)},
        {"scoreMeanBefore", p.score_mean_before},
        {"scoreMeanAfterPass", p.score_mean_after_pass},
        {"cost", p.cost},
        {"winRate", p.win_rate},
        {"effect", optional_number(p.effect)},
        {"move", p.move ? json(to_vertex(p.move->point, series.game.board_size)) : json(nullptr)},
    });
  }
  return {
      {"game",
       {{"boardSize", series.game.board_size},
        {"komi", series.game.komi},
        {"rules", series.game.rules},
        {"moveCount", series.game.move_count},
        {"metadata", series.game.metadata}}},
      {"engine", series.engine.name},
      {"visits", series.engine.visits},
      {"points", points},
  };
}

cop::CopSeries analysis_from_json(const json& doc) {
  return guarded("analysis document", [&] {
    cop::CopSeries s;
    const auto& game = doc.at("game");
    s.game.board_size = game.at("boardSize").get<int>();
    s.game.komi = game.at("komi").get<double>();
    s.game.rules = game.at("rules").get<std::string>();
    s.game.move_count = game.at("moveCount").get<int>();
    if (game.contains("metadata")) s.game.metadata = game.at("metadata").get<std::map<std::string, std::string>>();
    s.engine.name = doc.at("engine").get<std::string>();
    s.engine.visits = doc.at("visits").get<int>();
    for (const auto& j : doc.at("points")) {
      cop::CopPoint p;
      p.index = j.at("index").get<int>();
      p.side_to_move = color_from(j.at("sideToMove"));
      p.score_mean_before = j.at("scoreMeanBefore").get<double>();
      p.score_mean_after_pass = j.at("scoreMeanAfterPass").get<double>();
      p.cost = j.at("cost").get<double>();
      p.win_rate = j.at("winRate").get<double>();
      if (!j.at("effect").is_null()) p.effect = j.at("effect").get<double>();
      if (j.contains("move") && !j.at("move").is_null())
        p.move = Move{p.side_to_move, parse_vertex(j.at("move").get<std::string>(), s.game.board_size)};
      s.points.push_back(std::move(p));
    }
    return s;
  });
}

std::string analysis_to_csv(const cop::CopSeries& series) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& p : series.points) {
    out += std::to_string(p.index);
    out += ',';
    out += color_char(p.side_to_move);
    for (double v : {p.score_mean_before, p.score_mean_after_pass, p.cost, p.win_rate}) {
      out += ',';
      out += format_number(v);
    }
    out += ',';
    if (p.effect) out += format_number(*p.effect);
    out += ',';
    if (p.move) out += to_vertex(p.move->point, series.game.board_size);
    out += '\n';
  }
  return out;
}

namespace {

double parse_double(std::string_view s, int line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw Error(ErrorCode::BadDocument, "csv line " + std::to_string(line) + ": bad number '" + std::string(s) + "'");
  return v;
}

}  // namespace

cop::CopSeries analysis_from_csv(std::string_view text, int board_size) {
  cop::CopSeries s;
  s.game.board_size = board_size;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no == 1) {
      if (line != kCsvHeader) throw Error(ErrorCode::BadDocument, "csv header mismatch");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    for (;;) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 8)
      throw Error(ErrorCode::BadDocument, "csv line " + std::to_string(line_no) + ": expected 8 columns");
    cop::CopPoint p;
    p.index = static_cast<int>(parse_double(cells[0], line_no));
    const auto color = parse_color(cells[1]);
    if (!color) throw Error(ErrorCode::BadDocument, "csv line " + std::to_string(line_no) + ": bad color");
    p.side_to_move = *color;
    p.score_mean_before = parse_double(cells[2], line_no);
    p.score_mean_after_pass = parse_double(cells[3], line_no);
    p.cost = parse_double(cells[4], line_no);
    p.win_rate = parse_double(cells[5], line_no);
    if (!cells[6].empty()) p.effect = parse_double(cells[6], line_no);
    if (!cells[7].empty()) p.move = Move{p.side_to_move, parse_vertex(cells[7], board_size)};
    s.points.push_back(std::move(p));
  }
  int moves = 0;
  for (const auto& p : s.points) moves += p.move ? 1 : 0;
  s.game.move_count = moves;
  return s;
}

json features_to_json(const features::FeatureSet& f) {
  json segments = json::array();
  for (const auto& s : f.segments) {
    segments.push_back({
        {"start", s.start},
        {"end", s.end},
        {"kind", features::segment_kind_name(s.kind)},
        {"defender", s.defender ? json(color_text(*s.defender)) : json(nullptr)},
        {"peak", s.peak},
        {"elevated", s.elevated},
    });
  }
  json stages = json::array();
  for (const auto& s : f.stages)
    stages.push_back({{"stage", features::stage_name(s.stage)}, {"start", s.start}, {"end", s.end}});
  json sente = json::array();
  for (const auto& s : f.sente)
    sente.push_back({{"index", s.index},
                     {"state", s.state == features::Initiative::Sente ? "Sente" : "Gote"},
                     {"residual", s.residual}});
  json poi = json::array();
  for (const auto& p : f.points_of_interest)
    poi.push_back({{"start", p.start}, {"end", p.end}, {"kind", p.kind}, {"magnitude", p.magnitude}});
  return {
      {"baseline",
       {{"slope", f.baseline.slope},
        {"intercept", f.baseline.intercept},
        {"residualScale", f.baseline.residual_scale},
        {"inlierCount", f.baseline.inlier_count},
        {"converged", f.baseline.converged},
        {"inliers", f.baseline.inliers}}},
      {"tau", f.tau},
      {"segments", segments},
      {"stages", stages},
      {"sente", sente},
      {"pointsOfInterest", poi},
  };
}

features::FeatureSet features_from_json(const json& doc) {
  return guarded("features document", [&] {
    features::FeatureSet f;
    const auto& b = doc.at("baseline");
    f.baseline.slope = b.at("slope").get<double>();
    f.baseline.intercept = b.at("intercept").get<double>();
    f.baseline.residual_scale = b.at("residualScale").get<double>();
    f.baseline.inlier_count = b.at("inlierCount").get<int>();
    f.baseline.converged = b.value("converged", true);
    f.baseline.inliers = b.at("inliers").get<std::vector<int>>();
    f.tau = doc.at("tau").get<double>();
    for (const auto& j : doc.at("segments")) {
      features::Segment s;
      s.start = j.at("start").get<int>();
      s.end = j.at("end").get<int>();
      s.kind = features::parse_segment_kind(j.at("kind").get<std::string>());
      if (!j.at("defender").is_null()) s.defender = color_from(j.at("defender"));
      s.peak = j.at("peak").get<double>();
      s.elevated = j.at("elevated").get<std::vector<int>>();
      f.segments.push_back(std::move(s));
    }
    for (const auto& j : doc.at("stages"))
      f.stages.push_back({features::parse_stage(j.at("stage").get<std::string>()), j.at("start").get<int>(),
                          j.at("end").get<int>()});
    for (const auto& j : doc.at("sente")) {
      const auto state = j.at("state").get<std::string>();
      if (state != "Sente" && state != "Gote") throw Error(ErrorCode::BadDocument, "bad sente state " + state);
      f.sente.push_back({j.at("index").get<int>(),
                         state == "Sente" ? features::Initiative::Sente : features::Initiative::Gote,
                         j.at("residual").get<double>()});
    }
    for (const auto& j : doc.at("pointsOfInterest"))
      f.points_of_interest.push_back({j.at("start").get<int>(), j.at("end").get<int>(),
                                      j.at("kind").get<std::string>(), j.at("magnitude").get<double>()});
    return f;
  });
}

json quality_to_json(const quality::GameSummary& summary) {
  json players = json::array();
  for (const auto& p : summary.per_player) {
    players.push_back({
        {"color", color_text(p.color)},
        {"cumulativeCost", round2(p.cumulative_cost)},
        {"cumulativeRealized", round2(p.cumulative_realized)},
        {"performancePct", rounded_or_undefined(p.performance_pct)},
        {"meanEffect", rounded_or_undefined(p.mean_effect)},
        {"movesCounted", p.moves_counted},
    });
  }
  return {
      {"totalCost", round2(summary.total_cost)},
      {"meanCost", round2(summary.mean_cost)},
      {"moveCount", summary.move_count},
      {"players", players},
  };
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path + ": " + std::strerror(errno));
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path + ": " + std::strerror(errno));
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path);
}

void export_analysis(const cop::CopSeries& series, const features::FeatureSet* features,
                     const quality::GameSummary* quality, Format format, const std::string& destination) {
  if (format == Format::Csv) {
    write_text_file(destination, analysis_to_csv(series));
    return;
  }
  json doc = analysis_to_json(series);
  if (features) doc["features"] = features_to_json(*features);
  if (quality) doc["quality"] = quality_to_json(*quality);
  write_text_file(destination, doc.dump(2) + "\n");
}

cop::CopSeries import_analysis(const std::string& source) {
  const std::string text = read_text_file(source);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    json doc;
    try {
      doc = json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::BadDocument, source + ": " + e.what());
    }
    return analysis_from_json(doc);
  }
  return analysis_from_csv(text);
}

}  // namespace copan::report
