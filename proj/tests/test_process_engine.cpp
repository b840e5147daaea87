#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "copan/cop.hpp"
#include "copan/error.hpp"
#include "copan/mock.hpp"
#include "copan/process_engine.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace copan;
using namespace copan::engine;

namespace {

EngineConfig mock_engine(const std::string& extra = "", int max_in_flight = 4, double timeout = 20.0) {
  EngineConfig c;
  c.command = split_command(std::string("\"") + COPAN_CLI + "\" mock-engine " + extra);
  c.max_in_flight = max_in_flight;
  c.timeout = std::chrono::duration<double>(timeout);
  return c;
}

cop::CopSeries analyze(const sgf::GameRecord& g, Engine& e) {
  cop::SeriesOptions o;
  o.include_terminal = true;
  return cop::compute_series(g, e, o);
}

}  // namespace

TEST_SUITE("process_engine") {
  TEST_CASE("split_command honors quotes") {
    CHECK(split_command("a b  c") == std::vector<std::string>{"a", "b", "c"});
    CHECK(split_command("\"/path with/space\" -x 'y z'") ==
          std::vector<std::string>{"/path with/space", "-x", "y z"});
    CHECK(split_command("").empty());
  }

  TEST_CASE("subprocess mock gives the in-process values") {
    ProcessEngine engine(mock_engine());
    NegamaxMock local({});
    const auto g = testing::random_game(30, 2);
    for (size_t i = 0; i <= g.moves.size(); i += 3) {
      const auto q = cop::position_query(g, i, 1);
      CHECK(std::abs(evaluate(engine, q).score_mean - evaluate(local, q).score_mean) < 1e-9);
      CHECK(std::abs(evaluate_with_pass(engine, q).score_mean - evaluate_with_pass(local, q).score_mean) < 1e-9);
    }
    CHECK(engine.alive());
    CHECK(engine.restarts() == 0);
    CHECK(std::filesystem::exists(engine.stderr_log()));
  }

  TEST_CASE("reporting perspective is applied to raw engine values") {
    const auto g = testing::random_game(9, 4);
    NegamaxMock local({});
    for (const char* p : {"black", "white", "side-to-move"}) {
      auto config = mock_engine(std::string("--perspective ") + p);
      config.reporting_perspective = parse_perspective(p);
      ProcessEngine engine(config);
      const auto q = cop::position_query(g, 5, 1);  // white to move
      CHECK(std::abs(evaluate(engine, q).score_mean - evaluate(local, q).score_mean) < 1e-9);
    }
    // A mismatched convention flips the sign on white's turn.
    auto config = mock_engine("--perspective black");
    ProcessEngine engine(config);
    const auto q = cop::position_query(g, 5, 1);
    CHECK(std::abs(evaluate(engine, q).score_mean + evaluate(local, q).score_mean) < 1e-9);
  }

  TEST_CASE("concurrent callers receive their own answers under shuffled delivery") {
    ProcessEngine engine(mock_engine("--shuffle 4 --delay-ms 3 --seed 9", 8));
    NegamaxMock local({});
    const auto g = testing::random_game(40, 8);
    std::vector<std::thread> threads;
    std::atomic<int> mismatches{0};
    for (int t = 0; t < 8; ++t)
      threads.emplace_back([&, t] {
        for (size_t i = static_cast<size_t>(t); i <= g.moves.size(); i += 8) {
          const auto q = cop::position_query(g, i, 1);
          if (std::abs(evaluate(engine, q).score_mean - evaluate(local, q).score_mean) > 1e-9) ++mismatches;
        }
      });
    for (auto& th : threads) th.join();
    CHECK(mismatches == 0);
  }

  TEST_CASE("shuffled series equals in-order series") {
    const auto g = testing::random_game(60, 12, 19, 0.05);
    ProcessEngine ordered(mock_engine("", 1));
    ProcessEngine shuffled(mock_engine("--shuffle 5 --delay-ms 2 --seed 3", 4));
    CHECK(analyze(g, ordered).points == analyze(g, shuffled).points);
  }

  TEST_CASE("a crash is retried once, then reported at the failing index") {
    const auto g = testing::random_game(12, 6);
    ProcessEngine engine(mock_engine("--crash-on-length 5", 1));
    try {
      analyze(g, engine);
      FAIL("expected EngineCrashed");
    } catch (const EngineError& e) {
      CHECK(e.code() == ErrorCode::EngineCrashed);
      REQUIRE(e.index().has_value());
      CHECK(*e.index() == 4);  // the pass twin of s_4 is the first 5-move query
      CHECK(std::string(e.what()).find("index 4") != std::string::npos);
    }
    CHECK(engine.restarts() == 1);
    CHECK_FALSE(engine.alive());
    CHECK_THROWS_AS(evaluate(engine, cop::position_query(g, 0, 1)), EngineError);
  }

  TEST_CASE("a crash under concurrency names one of the 5-move positions") {
    const auto g = testing::random_game(12, 6);
    ProcessEngine engine(mock_engine("--crash-on-length 5 --delay-ms 2", 4));
    try {
      analyze(g, engine);
      FAIL("expected EngineCrashed");
    } catch (const EngineError& e) {
      CHECK(e.code() == ErrorCode::EngineCrashed);
      REQUIRE(e.index().has_value());
      CHECK((*e.index() == 4 || *e.index() == 5));
    }
    CHECK(engine.restarts() == 1);
  }

  TEST_CASE("a transient crash is absorbed by the restart") {
    // The first engine instance dies once, the replacement answers normally.
    const auto marker = std::filesystem::temp_directory_path() / ("copan-once-" + std::to_string(::getpid()));
    std::filesystem::remove(marker);
    const auto script = std::filesystem::temp_directory_path() / ("copan-once-" + std::to_string(::getpid()) + ".sh");
    {
      std::ofstream s(script);
      s << "#!/bin/sh\nif [ -e '" << marker.string() << "' ]; then exec '" << COPAN_CLI << "' mock-engine; fi\n"
        << "touch '" << marker.string() << "'\nexec '" << COPAN_CLI << "' mock-engine --crash-on-length 3\n";
    }
    std::filesystem::permissions(script, std::filesystem::perms::owner_all);
    EngineConfig c;
    c.command = {script.string()};
    c.max_in_flight = 1;
    ProcessEngine engine(c);
    NegamaxMock local({});
    const auto g = testing::random_game(6, 1);
    const auto remote = analyze(g, engine);
    const auto expected = analyze(g, local);
    REQUIRE(remote.points.size() == expected.points.size());
    for (size_t i = 0; i < remote.points.size(); ++i)
      CHECK(std::abs(remote.points[i].cost - expected.points[i].cost) < 1e-9);
    CHECK(engine.restarts() == 1);
    CHECK(engine.alive());
    std::filesystem::remove(marker);
    std::filesystem::remove(script);
  }

  TEST_CASE("unanswered queries time out") {
    ProcessEngine engine(mock_engine("--hang-on-length 2", 1, 0.5));
    const auto g = testing::random_game(4, 1);
    CHECK(evaluate(engine, cop::position_query(g, 1, 1)).side_to_move == Color::White);
    try {
      evaluate(engine, cop::position_query(g, 2, 1));
      FAIL("expected QueryTimeout");
    } catch (const EngineError& e) {
      CHECK(e.code() == ErrorCode::QueryTimeout);
    }
  }

  TEST_CASE("engine error responses become EngineRejectedQuery") {
    const auto fixture = std::filesystem::temp_directory_path() / ("copan-fixture-" + std::to_string(::getpid()) + ".json");
    {
      std::ofstream f(fixture);
      f << R"({"boardSize":19,"entries":[{"moves":[],"scoreMean":0.5}]})";
    }
    ProcessEngine engine(mock_engine("--fixture " + fixture.string()));
    CHECK(evaluate(engine, Query{}).score_mean == 0.5);
    try {
      evaluate_with_pass(engine, Query{});
      FAIL("expected EngineRejectedQuery");
    } catch (const EngineError& e) {
      CHECK(e.code() == ErrorCode::EngineRejectedQuery);
    }
    CHECK(engine.alive());
    std::filesystem::remove(fixture);
  }

  TEST_CASE("a command that cannot start is an engine error") {
    EngineConfig c;
    c.command = {"/nonexistent/copan-engine"};
    CHECK_THROWS_AS(ProcessEngine{c}, EngineError);
  }
}
