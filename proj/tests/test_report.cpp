#include <cmath>
#include <filesystem>
#include <random>

#include "copan/error.hpp"
#include "copan/mock.hpp"
#include "copan/report.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace copan;
using namespace copan::report;
using nlohmann::json;

namespace {

features::BaselineFit unit_fit() { return {-0.05, 12.0, 1.0, 10, {}}; }

cop::CopSeries mock_series(int moves, unsigned seed, bool terminal = true) {
  engine::MockModel m;
  m.spikes[17] = 5.0;
  engine::NegamaxMock mock(m);
  auto g = testing::random_game(moves, seed, 19, 0.05);
  g.komi = 7.5;
  g.metadata["PB"] = "Sören Ødegård";
  g.metadata["RE"] = "W+2.5";
  cop::SeriesOptions o;
  o.include_terminal = terminal;
  return cop::compute_series(g, mock, o);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("copan-report-" + std::to_string(::getpid()) + "-" + name);
}

size_t count_lines(const std::string& s) { return static_cast<size_t>(std::count(s.begin(), s.end(), '\n')); }

const json* layer(const json& chart, const std::string& name) {
  for (const auto& l : chart.at("layer"))
    if (l.at("name") == name) return &l;
  return nullptr;
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("danger buckets") {
    const auto fit = unit_fit();
    CHECK(danger_level(fit.at(30), fit, 30).level == 0);
    CHECK(danger_level(fit.at(30) + 1.0, fit, 30).level == 0);
    CHECK(danger_level(fit.at(30) + 1.5, fit, 30).level == 1);
    CHECK(danger_level(fit.at(30) + 3.0, fit, 30).level == 2);
    CHECK(danger_level(fit.at(30) + 10.0, fit, 30).level == 3);
    CHECK(danger_level(fit.at(30) - 8.0, fit, 30).level == 0);
    const auto d = danger_level(fit.at(30) + 3.0, fit, 30);
    CHECK(d.residual_in_mads == doctest::Approx(3.0));
    CHECK(d.cost == doctest::Approx(fit.at(30) + 3.0));
  }

  TEST_CASE("danger is relative to the baseline, with an absolute mode") {
    const auto fit = unit_fit();
    CHECK(danger_level(9.0, fit, 20).level == 0);
    CHECK(danger_level(9.0, fit, 180).level == 3);
    DangerOptions abs;
    abs.absolute = true;
    CHECK(danger_level(9.0, fit, 20, abs).level == danger_level(9.0, fit, 180, abs).level);
    CHECK(danger_level(9.0, fit, 20, abs).level == 2);
    CHECK(danger_level(2.0, fit, 20, abs).level == 0);
  }

  TEST_CASE("danger is monotone in the residual") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u(-5, 30);
    for (double scale : {0.0, 0.2, 1.0, 3.0}) {
      auto fit = unit_fit();
      fit.residual_scale = scale;
      std::vector<double> costs(300);
      for (auto& c : costs) c = u(rng);
      std::sort(costs.begin(), costs.end());
      int previous = 0;
      for (double c : costs) {
        const int level = danger_level(c, fit, 100).level;
        CHECK(level >= previous);
        CHECK(level <= 3);
        previous = level;
      }
    }
  }

  TEST_CASE("chart has one bar per position and named layers") {
    const auto s = testing::series_of(testing::line(216));
    const auto fit = features::fit_baseline(s);
    const auto stages = features::classify_stages(s, fit);
    const auto chart = render_chart(s, fit, {}, stages);
    CHECK(chart.at("$schema").get<std::string>().find("vega-lite") != std::string::npos);
    REQUIRE(layer(chart, "costs") != nullptr);
    CHECK(layer(chart, "costs")->at("data").at("values").size() == 216);
    CHECK(layer(chart, "segments") == nullptr);
    REQUIRE(layer(chart, "baseline") != nullptr);
    CHECK(layer(chart, "stages")->at("data").at("values").size() == 3);

    auto spiky = testing::line(216);
    spiky[90] += 9;
    const auto s2 = testing::series_of(spiky);
    const auto fit2 = features::fit_baseline(s2);
    const auto chart2 = render_chart(s2, fit2, features::detect_segments(s2, fit2, 3.0), stages);
    REQUIRE(layer(chart2, "segments") != nullptr);
    CHECK(layer(chart2, "segments")->at("data").at("values").size() == 1);
  }

  TEST_CASE("chart output is byte-identical for the same input") {
    const auto s = mock_series(80, 2);
    const auto f = features::analyze_features(s);
    CHECK(render_chart(s, f.baseline, f.segments, f.stages).dump() ==
          render_chart(s, f.baseline, f.segments, f.stages).dump());
  }

  TEST_CASE("json round trip is exact") {
    const auto s = mock_series(120, 3);
    CHECK(analysis_from_json(analysis_to_json(s)) == s);
    CHECK(analysis_from_json(json::parse(analysis_to_json(s).dump())) == s);
    const auto path = temp_file("a.json").string();
    const auto f = features::analyze_features(s);
    const auto q = quality::game_summary(s);
    export_analysis(s, &f, &q, Format::Json, path);
    CHECK(import_analysis(path) == s);
    const auto doc = json::parse(read_text_file(path));
    CHECK(features_from_json(doc.at("features")) == f);
    CHECK(doc.at("quality").at("moveCount") == 120);
    std::filesystem::remove(path);
  }

  TEST_CASE("csv has a header and one line per point") {
    const auto s = mock_series(60, 4);
    const auto csv = analysis_to_csv(s);
    CHECK(count_lines(csv) == s.points.size() + 1);
    CHECK(csv.substr(0, csv.find('\n')) == kCsvHeader);
    const auto back = analysis_from_csv(csv);
    REQUIRE(back.points.size() == s.points.size());
    for (size_t i = 0; i < s.points.size(); ++i) {
      const auto& a = s.points[i];
      const auto& b = back.points[i];
      CHECK(a.index == b.index);
      CHECK(a.side_to_move == b.side_to_move);
      CHECK(std::abs(a.cost - b.cost) < 1e-6);
      CHECK(std::abs(a.score_mean_before - b.score_mean_before) < 1e-6);
      CHECK(std::abs(a.score_mean_after_pass - b.score_mean_after_pass) < 1e-6);
      CHECK(std::abs(a.win_rate - b.win_rate) < 1e-6);
      CHECK(a.effect.has_value() == b.effect.has_value());
      if (a.effect) CHECK(std::abs(*a.effect - *b.effect) < 1e-6);
      CHECK(a.move == b.move);
    }
    const auto path = temp_file("a.csv").string();
    export_analysis(s, nullptr, nullptr, Format::Csv, path);
    CHECK(read_text_file(path) == csv);
    CHECK(import_analysis(path).points.size() == s.points.size());
    std::filesystem::remove(path);
  }

  TEST_CASE("bad documents") {
    auto code = [](const std::function<void()>& f) {
      try {
        f();
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::InvalidArgument;
    };
    CHECK(code([] { analysis_from_json(json::object()); }) == ErrorCode::BadDocument);
    CHECK(code([] { analysis_from_json(json::parse(R"({"game":{"boardSize":"x"}})")); }) == ErrorCode::BadDocument);
    CHECK(code([] { analysis_from_csv("index,cost\n1,2\n"); }) == ErrorCode::BadDocument);
    CHECK(code([] { analysis_from_csv(std::string(kCsvHeader) + "\n0,B,1,2,3\n"); }) == ErrorCode::BadDocument);
    CHECK(code([] { analysis_from_csv(std::string(kCsvHeader) + "\n0,X,1,2,3,0.5,,\n"); }) == ErrorCode::BadDocument);
    CHECK(code([] { features_from_json(json::parse(R"({"baseline":{}})")); }) == ErrorCode::BadDocument);
  }

  TEST_CASE("unwritable or missing paths raise IoError") {
    const auto s = mock_series(10, 5);
    auto code = [](const std::function<void()>& f) {
      try {
        f();
      } catch (const Error& e) {
        return e.code();
      }
      return ErrorCode::InvalidArgument;
    };
    CHECK(code([&] { export_analysis(s, nullptr, nullptr, Format::Json, "/nonexistent-dir/x/a.json"); }) ==
          ErrorCode::IoError);
    CHECK(code([] { import_analysis("/nonexistent-dir/x/a.json"); }) == ErrorCode::IoError);
  }

  TEST_CASE("quality json rounds to two decimals") {
    auto s = testing::series_of({10.004, 3.0, 5.0, 4.0}, {-1.001, 0.0, 0.0, -4.0});
    const auto q = quality_to_json(quality::game_summary(s));
    CHECK(q.at("totalCost") == 22.0);
    CHECK(q.at("meanCost") == 5.5);
    CHECK(q.at("players")[0].at("cumulativeCost") == 15.0);
    CHECK(q.at("players")[1].at("performancePct") == 42.86);
    auto zero = testing::series_of({0.0, 0.0});
    CHECK(quality_to_json(quality::game_summary(zero)).at("players")[0].at("performancePct") == "undefined");
  }

  TEST_CASE("features json round trip") {
    auto c = testing::line(150);
    for (int i = 40; i <= 50; ++i) c[static_cast<size_t>(i)] += 7;
    c[100] += 5;
    const auto s = testing::series_of(c, std::vector<double>(150, -0.25));
    const auto f = features::analyze_features(s);
    CHECK(features_from_json(features_to_json(f)) == f);
    CHECK(features_from_json(json::parse(features_to_json(f).dump())) == f);
  }
}
