// Exercises the shared library through its C interface only.
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "copan/copan.h"
#include "doctest.h"
#include "json.hpp"

using nlohmann::json;

namespace {

const char* kGame = "(;GM[1]FF[4]SZ[19]KM[6.5]PB[Sören Ødegård]PW[Iyama Yūta];B[pd];W[dp];B[pp];W[dd];B[fq]"
                    ";W[cn];B[jp];W[qf];B[nd];W[rd];B[qc];W[of];B[pf])";

std::string take(char* s) {
  std::string out = s ? s : "";
  copan_string_free(s);
  return out;
}

struct Fixture {
  copan_game* game = nullptr;
  copan_engine* engine = nullptr;
  Fixture() {
    REQUIRE(copan_game_parse(kGame, 0, &game) == COPAN_OK);
    copan_mock_model m;
    copan_mock_model_init(&m);
    REQUIRE(copan_engine_open_mock(&m, &engine) == COPAN_OK);
  }
  ~Fixture() {
    copan_engine_free(engine);
    copan_game_free(game);
  }
};

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("copan-capi-" + std::to_string(::getpid()) + "-" + name)).string();
}

}  // namespace

TEST_SUITE("capi") {
  TEST_CASE("status names and engine classification") {
    CHECK(std::string(copan_status_name(COPAN_OK)) == "Ok");
    CHECK(std::string(copan_status_name(COPAN_MALFORMED_SGF)) == "MalformedSgf");
    CHECK(std::string(copan_status_name(COPAN_ENGINE_REJECTED_QUERY)) == "EngineRejectedQuery");
    CHECK(copan_status_is_engine_error(COPAN_QUERY_TIMEOUT));
    CHECK_FALSE(copan_status_is_engine_error(COPAN_IO_ERROR));
  }

  TEST_CASE("game parsing reports structured errors") {
    copan_game* g = nullptr;
    CHECK(copan_game_parse("(;SZ[19];B[pd];B[dd])", 0, &g) == COPAN_MALFORMED_SGF);
    CHECK(g == nullptr);
    CHECK(std::string(copan_last_error()).size() > 0);
    CHECK(copan_game_parse("(;SZ[19];B[pd];B[dd])", 1, &g) == COPAN_OK);
    CHECK(copan_game_move_count(g) == 2);
    copan_game_free(g);
    CHECK(copan_game_parse("(;SZ[25])", 0, &g) == COPAN_UNSUPPORTED_SIZE);
    CHECK(copan_game_parse("(;SZ[19];B[pd];W[pd])", 0, &g) == COPAN_OCCUPIED_POINT);
    CHECK(copan_game_parse("(;SZ[19]", 0, &g) == COPAN_MALFORMED_SGF);
    CHECK(copan_game_parse(nullptr, 0, &g) == COPAN_INVALID_ARGUMENT);
    CHECK(copan_game_load("/nonexistent/x.sgf", 0, &g) == COPAN_IO_ERROR);
  }

  TEST_CASE("sgf round trip through handles") {
    Fixture f;
    char* text = nullptr;
    REQUIRE(copan_game_to_sgf(f.game, &text) == COPAN_OK);
    const std::string first = take(text);
    copan_game* again = nullptr;
    REQUIRE(copan_game_parse(first.c_str(), 0, &again) == COPAN_OK);
    REQUIRE(copan_game_to_sgf(again, &text) == COPAN_OK);
    CHECK(take(text) == first);
    CHECK(first.find("Sören Ødegård") != std::string::npos);
    copan_game_free(again);
  }

  TEST_CASE("analysis on the mock") {
    Fixture f;
    copan_analysis* a = nullptr;
    REQUIRE(copan_analyze(f.game, f.engine, 1, 0, &a) == COPAN_OK);
    CHECK(copan_analysis_size(a) == 13);
    CHECK(copan_engine_queries(f.engine) == 27);
    for (size_t i = 0; i < 13; ++i) {
      copan_point p;
      REQUIRE(copan_analysis_point(a, i, &p) == COPAN_OK);
      CHECK(p.index == static_cast<int>(i));
      CHECK(p.side_to_move == static_cast<int>(i % 2));
      CHECK(std::abs(p.cost - (12.0 - 0.05 * static_cast<double>(i))) < 1e-9);
      CHECK(p.has_effect == 1);
      CHECK(std::abs(p.effect) < 1e-9);
    }
    copan_point p;
    CHECK(copan_analysis_point(a, 13, &p) == COPAN_INDEX_OUT_OF_RANGE);

    copan_analysis* again = nullptr;
    REQUIRE(copan_analyze(f.game, f.engine, 1, 1, &again) == COPAN_OK);
    CHECK(copan_analysis_size(again) == 14);
    CHECK(copan_engine_queries(f.engine) == 28);
    REQUIRE(copan_analysis_point(again, 13, &p) == COPAN_OK);
    CHECK(p.has_effect == 0);
    copan_engine_cache_clear(f.engine);
    copan_analysis_free(again);
    REQUIRE(copan_analyze(f.game, f.engine, 1, 0, &again) == COPAN_OK);
    CHECK(copan_engine_queries(f.engine) == 55);
    CHECK(copan_analyze(f.game, f.engine, 0, 0, &again) == COPAN_INVALID_ARGUMENT);
    copan_analysis_free(again);
    copan_analysis_free(a);
  }

  TEST_CASE("derived documents") {
    Fixture f;
    copan_analysis* a = nullptr;
    REQUIRE(copan_analyze(f.game, f.engine, 1, 0, &a) == COPAN_OK);
    char* out = nullptr;
    copan_feature_options fo;
    copan_feature_options_init(&fo);
    REQUIRE(copan_features_json(a, &fo, &out) == COPAN_OK);
    const auto features = json::parse(take(out));
    CHECK(std::abs(features.at("baseline").at("slope").get<double>() + 0.05) < 1e-9);
    CHECK(features.at("tau") == 3.0);

    REQUIRE(copan_quality_json(a, 0, 0, &out) == COPAN_OK);
    const auto quality = json::parse(take(out));
    CHECK(quality.at("players")[0].at("performancePct") == 100.0);
    CHECK(quality.at("moveCount") == 13);

    REQUIRE(copan_chart_json(a, nullptr, &out) == COPAN_OK);
    const std::string chart = take(out);
    REQUIRE(copan_chart_json(a, features.dump().c_str(), &out) == COPAN_OK);
    CHECK(take(out) == chart);
    CHECK(copan_chart_json(a, "{}", &out) == COPAN_BAD_DOCUMENT);

    REQUIRE(copan_analysis_to_json(a, &out) == COPAN_OK);
    const std::string doc = take(out);
    copan_analysis* back = nullptr;
    REQUIRE(copan_analysis_from_json(doc.c_str(), &back) == COPAN_OK);
    REQUIRE(copan_analysis_to_json(back, &out) == COPAN_OK);
    CHECK(take(out) == doc);
    CHECK(copan_analysis_from_json("{", &back) == COPAN_BAD_DOCUMENT);
    copan_analysis_free(back);

    const auto csv = temp_path("a.csv");
    REQUIRE(copan_analysis_write(a, csv.c_str(), COPAN_FORMAT_CSV) == COPAN_OK);
    REQUIRE(copan_analysis_load(csv.c_str(), &back) == COPAN_OK);
    CHECK(copan_analysis_size(back) == 13);
    copan_analysis_free(back);
    std::filesystem::remove(csv);
    CHECK(copan_analysis_write(a, "/nonexistent/x/a.json", COPAN_FORMAT_JSON) == COPAN_IO_ERROR);

    fo.points_of_interest = 0;
    CHECK(copan_features_json(a, &fo, &out) == COPAN_INVALID_ARGUMENT);
    copan_analysis_free(a);
  }

  TEST_CASE("too few points for features") {
    copan_game* g = nullptr;
    REQUIRE(copan_game_parse("(;SZ[9];B[ee];W[cc])", 0, &g) == COPAN_OK);
    copan_mock_model m;
    copan_mock_model_init(&m);
    copan_engine* e = nullptr;
    REQUIRE(copan_engine_open_mock(&m, &e) == COPAN_OK);
    copan_analysis* a = nullptr;
    REQUIRE(copan_analyze(g, e, 1, 0, &a) == COPAN_OK);
    char* out = nullptr;
    CHECK(copan_features_json(a, nullptr, &out) == COPAN_TOO_FEW_POINTS);
    CHECK(out == nullptr);
    copan_analysis_free(a);
    copan_engine_free(e);
    copan_game_free(g);
  }

  TEST_CASE("mock models and handicap value") {
    copan_mock_model m;
    copan_mock_model_init(&m);
    CHECK(m.base_value == 12.0);
    CHECK(m.decay == 0.05);
    copan_engine* e = nullptr;
    REQUIRE(copan_engine_open_mock(&m, &e) == COPAN_OK);
    double v = 0.0;
    REQUIRE(copan_handicap_value(e, 19, 6.5, 1, &v) == COPAN_OK);
    CHECK(std::abs(v - 12.0) < 1e-9);
    copan_engine_free(e);

    m.base_value = 10.0;
    const int moves[] = {1, 1};
    const double values[] = {0.5, 0.25};
    m.spike_moves = moves;
    m.spike_values = values;
    m.spike_count = 2;
    REQUIRE(copan_engine_open_mock(&m, &e) == COPAN_OK);
    REQUIRE(copan_handicap_value(e, 19, 6.5, 1, &v) == COPAN_OK);
    CHECK(std::abs(v - 10.75) < 1e-9);
    copan_engine_free(e);

    m.base_value = -1.0;
    CHECK(copan_engine_open_mock(&m, &e) == COPAN_INVALID_ARGUMENT);
  }

  TEST_CASE("danger level") {
    int level = -1;
    REQUIRE(copan_danger_level(12.0, -0.05, 12.0, 1.0, 0, 0, &level) == COPAN_OK);
    CHECK(level == 0);
    REQUIRE(copan_danger_level(15.0, -0.05, 12.0, 1.0, 0, 0, &level) == COPAN_OK);
    CHECK(level == 2);
    REQUIRE(copan_danger_level(22.0, -0.05, 12.0, 1.0, 0, 0, &level) == COPAN_OK);
    CHECK(level == 3);
    REQUIRE(copan_danger_level(2.0, -0.05, 12.0, 1.0, 0, 1, &level) == COPAN_OK);
    CHECK(level == 0);
    CHECK(copan_danger_level(2.0, -0.05, 12.0, 1.0, 0, 1, nullptr) == COPAN_INVALID_ARGUMENT);
  }

  TEST_CASE("scripted engine reports the failing index") {
    const auto path = temp_path("fixture.json");
    std::ofstream(path) << R"({"boardSize":9,"firstPlayer":"B","entries":[
      {"moves":[],"scoreMean":0.5},{"moves":[],"pass":true,"scoreMean":-9.5},
      {"moves":[["B","E5"]],"scoreMean":0.6}]})";
    copan_engine* e = nullptr;
    REQUIRE(copan_engine_open_scripted(path.c_str(), &e) == COPAN_OK);
    copan_game* g = nullptr;
    REQUIRE(copan_game_parse("(;SZ[9];B[ee];W[cc])", 0, &g) == COPAN_OK);
    copan_analysis* a = nullptr;
    CHECK(copan_analyze(g, e, 1, 0, &a) == COPAN_PROTOCOL_ERROR);
    CHECK(copan_last_error_index() == 1);
    CHECK(std::string(copan_last_error()).find("MissingFixture") != std::string::npos);
    copan_game_free(g);
    copan_engine_free(e);
    std::filesystem::remove(path);
    CHECK(copan_engine_open_scripted("/nonexistent/f.json", &e) == COPAN_IO_ERROR);
  }

  TEST_CASE("subprocess engine through the CLI mock") {
    copan_engine_config c;
    copan_engine_config_init(&c);
    const std::string cmd = std::string("\"") + COPAN_CLI + "\" mock-engine";
    c.command = cmd.c_str();
    copan_engine* e = nullptr;
    REQUIRE(copan_engine_open(&c, &e) == COPAN_OK);
    Fixture f;
    copan_analysis* a = nullptr;
    REQUIRE(copan_analyze(f.game, e, 1, 0, &a) == COPAN_OK);
    copan_point p;
    REQUIRE(copan_analysis_point(a, 4, &p) == COPAN_OK);
    CHECK(std::abs(p.cost - 11.8) < 1e-9);
    copan_analysis_free(a);
    copan_engine_free(e);

    c.command = "";
    CHECK(copan_engine_open(&c, &e) == COPAN_INVALID_ARGUMENT);
    c.command = cmd.c_str();
    c.max_in_flight = 0;
    CHECK(copan_engine_open(&c, &e) == COPAN_INVALID_ARGUMENT);
  }

  TEST_CASE("service starts and stops") {
    copan_service_options o;
    copan_service_options_init(&o);
    const std::string cmd = std::string("\"") + COPAN_CLI + "\" mock-engine";
    o.engine.command = cmd.c_str();
    o.port = 0;
    copan_service* s = nullptr;
    REQUIRE(copan_service_start(&o, &s) == COPAN_OK);
    CHECK(copan_service_port(s) != 0);
    copan_service_stop(s);
    copan_service_free(s);
  }

  TEST_CASE("write text") {
    const auto path = temp_path("t.txt");
    REQUIRE(copan_write_text(path.c_str(), "hello") == COPAN_OK);
    std::ifstream in(path);
    std::string s;
    in >> s;
    CHECK(s == "hello");
    std::filesystem::remove(path);
    CHECK(copan_write_text("/nonexistent/x/t.txt", "hello") == COPAN_IO_ERROR);
  }
}
