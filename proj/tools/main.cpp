#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "copan/copan.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitEngine = 2;

int fail(copan_status status) {
  std::cerr << "copan: " << copan_status_name(status) << ": " << copan_last_error() << "\n";
  return copan_status_is_engine_error(status) ? kExitEngine : kExitInput;
}

// Writes to `out`, or stdout when it is empty or "-".
copan_status emit(const std::string& out, const char* text) {
  if (out.empty() || out == "-") {
    std::fputs(text, stdout);
    std::fflush(stdout);
    return COPAN_OK;
  }
  return copan_write_text(out.c_str(), text);
}

// Takes ownership of `text`.
int emit_owned(const std::string& out, char* text) {
  const copan_status st = emit(out, text);
  copan_string_free(text);
  return st == COPAN_OK ? kExitOk : fail(st);
}

copan_perspective perspective_of(const std::string& s) {
  if (s == "black") return COPAN_PERSPECTIVE_BLACK;
  if (s == "white") return COPAN_PERSPECTIVE_WHITE;
  return COPAN_PERSPECTIVE_SIDE_TO_MOVE;
}

const std::vector<std::string> kPerspectives = {"black", "white", "side-to-move"};

struct EngineArgs {
  std::string command;
  int visits = 500;
  std::string perspective = "side-to-move";
  double timeout = 60.0;
  int max_in_flight = 4;
  std::string rules = "japanese";
  std::string stderr_log;

  void add_to(CLI::App* app) {
    app->add_option("--engine-cmd", command, "Analysis engine command line")->required();
    app->add_option("--visits", visits, "Visits per query")->check(CLI::PositiveNumber);
    app->add_option("--perspective", perspective, "How the engine reports scores")
        ->check(CLI::IsMember(kPerspectives));
    app->add_option("--timeout", timeout, "Seconds per query")->check(CLI::PositiveNumber);
    app->add_option("--max-in-flight", max_in_flight, "Concurrent queries")->check(CLI::PositiveNumber);
    app->add_option("--rules", rules, "Ruleset sent to the engine");
    app->add_option("--engine-log", stderr_log, "File receiving engine stderr");
  }

  copan_engine_config config() const {
    copan_engine_config c;
    copan_engine_config_init(&c);
    c.command = command.c_str();
    c.visits = visits;
    c.rules = rules.c_str();
    c.perspective = perspective_of(perspective);
    c.timeout_seconds = timeout;
    c.max_in_flight = max_in_flight;
    c.stderr_log = stderr_log.empty() ? nullptr : stderr_log.c_str();
    return c;
  }
};

int run_analyze(const std::string& game_path, const EngineArgs& engine_args, bool include_terminal,
                const std::string& format, const std::string& out) {
  copan_game* game = nullptr;
  if (auto st = copan_game_load(game_path.c_str(), 0, &game); st != COPAN_OK) return fail(st);
  const auto config = engine_args.config();
  copan_engine* engine = nullptr;
  if (auto st = copan_engine_open(&config, &engine); st != COPAN_OK) {
    copan_game_free(game);
    return fail(st);
  }
  copan_analysis* analysis = nullptr;
  const copan_status st = copan_analyze(game, engine, engine_args.visits, include_terminal ? 1 : 0, &analysis);
  copan_engine_free(engine);
  copan_game_free(game);
  if (st != COPAN_OK) {
    const int index = copan_last_error_index();
    const int code = fail(st);
    if (index >= 0) std::cerr << "copan: failing position index " << index << "\n";
    return code;
  }
  int code = kExitOk;
  if (format == "csv" && !out.empty() && out != "-") {
    if (auto w = copan_analysis_write(analysis, out.c_str(), COPAN_FORMAT_CSV); w != COPAN_OK) code = fail(w);
  } else if (format == "csv") {
    std::cerr << "copan: csv output needs --out FILE\n";
    code = kExitInput;
  } else {
    char* text = nullptr;
    code = copan_analysis_to_json(analysis, &text) == COPAN_OK ? emit_owned(out, text) : fail(COPAN_INTERNAL);
  }
  copan_analysis_free(analysis);
  return code;
}

int with_analysis(const std::string& path, const std::function<copan_status(copan_analysis*, char**)>& f,
                  const std::string& out) {
  copan_analysis* analysis = nullptr;
  if (auto st = copan_analysis_load(path.c_str(), &analysis); st != COPAN_OK) return fail(st);
  char* text = nullptr;
  const copan_status st = f(analysis, &text);
  copan_analysis_free(analysis);
  if (st != COPAN_OK) return fail(st);
  return emit_owned(out, text);
}

int read_file(const std::string& path, std::string& text) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) {
    std::cerr << "copan: IoError: cannot read " << path << "\n";
    return kExitInput;
  }
  char buf[65536];
  for (size_t n; (n = std::fread(buf, 1, sizeof buf, f)) > 0;) text.append(buf, n);
  std::fclose(f);
  return kExitOk;
}

bool parse_spike(const std::string& s, int& move, double& value) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) return false;
  try {
    size_t used = 0;
    move = std::stoi(s.substr(0, colon), &used);
    if (used != colon) return false;
    value = std::stod(s.substr(colon + 1), &used);
    return used == s.size() - colon - 1 && move >= 1;
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cost-of-passing analysis for Go games"};
  app.require_subcommand(1);

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Compute the cost-of-passing series of a game");
  std::string game_path;
  std::string analyze_out;
  std::string analyze_format = "json";
  bool include_terminal = false;
  EngineArgs analyze_engine;
  analyze->add_option("game", game_path, "SGF file")->required();
  analyze_engine.add_to(analyze);
  analyze->add_flag("--include-terminal", include_terminal, "Also analyze the final position");
  analyze->add_option("--format", analyze_format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
  analyze->add_option("--out", analyze_out, "Output file (stdout when omitted)");

  // features
  auto* feats = app.add_subcommand("features", "Baseline, segments, stages and sente from an analysis");
  std::string features_in;
  std::string features_out;
  copan_feature_options feature_options;
  copan_feature_options_init(&feature_options);
  feats->add_option("analysis", features_in, "Analysis JSON or CSV")->required();
  feats->add_option("--tau", feature_options.tau, "Elevation threshold in points")->check(CLI::PositiveNumber);
  feats->add_option("--one-sided-frac", feature_options.one_sided_fraction, "Share of elevated turns for one-sided")
      ->check(CLI::Range(0.5, 1.0));
  feats->add_option("--max-gap", feature_options.max_gap, "Largest index gap inside one segment")
      ->check(CLI::PositiveNumber);
  feats->add_option("--points-of-interest", feature_options.points_of_interest, "Largest losses to list")
      ->check(CLI::PositiveNumber);
  feats->add_option("--out", features_out, "Output file (stdout when omitted)");

  // quality
  auto* qual = app.add_subcommand("quality", "Per-game and per-player quality metrics");
  std::string quality_in;
  std::string quality_out;
  bool clamp_realized = false;
  bool include_passes = false;
  qual->add_option("analysis", quality_in, "Analysis JSON or CSV")->required();
  qual->add_flag("--clamp-realized", clamp_realized, "Clamp realized values and percentages to [0, 100]");
  qual->add_flag("--include-passes", include_passes, "Count passes in mean effect");
  qual->add_option("--out", quality_out, "Output file (stdout when omitted)");

  // chart
  auto* chart = app.add_subcommand("chart", "Vega-Lite chart of an analysis");
  std::string chart_in;
  std::string chart_features;
  std::string chart_out;
  chart->add_option("analysis", chart_in, "Analysis JSON or CSV")->required();
  chart->add_option("features", chart_features, "Features JSON (derived when omitted)");
  chart->add_option("--out", chart_out, "Output file (stdout when omitted)");

  // handicap
  auto* handicap = app.add_subcommand("handicap", "Cost of passing on the empty board");
  EngineArgs handicap_engine;
  int handicap_size = 19;
  double handicap_komi = 6.5;
  handicap_engine.add_to(handicap);
  handicap->add_option("--size", handicap_size, "Board size")->check(CLI::Range(5, 19));
  handicap->add_option("--komi", handicap_komi, "Komi");

  // mock-engine
  auto* mock = app.add_subcommand("mock-engine", "Deterministic engine speaking the analysis protocol on stdio");
  std::string fixture;
  copan_mock_server_options mock_options;
  copan_mock_server_options_init(&mock_options);
  std::vector<std::string> spikes;
  std::string mock_perspective = "side-to-move";
  mock->add_option("--fixture", fixture, "Scripted fixture JSON");
  mock->add_option("--base", mock_options.model.base_value, "Value of the first move")->check(CLI::PositiveNumber);
  mock->add_option("--decay", mock_options.model.decay, "Value lost per move")->check(CLI::NonNegativeNumber);
  mock->add_option("--spike", spikes, "Extra value K:V for move K")->take_all();
  mock->add_option("--horizon", mock_options.model.horizon, "Last move with linear value");
  mock->add_option("--perspective", mock_perspective, "Score convention of replies")
      ->check(CLI::IsMember(kPerspectives));
  mock->add_option("--shuffle", mock_options.shuffle_window, "Answer batches of this size out of order");
  mock->add_option("--delay-ms", mock_options.max_delay_ms, "Random delay per answer");
  mock->add_option("--crash-on-length", mock_options.crash_on_length, "Exit on a query with this many moves");
  mock->add_option("--hang-on-length", mock_options.hang_on_length, "Never answer a query with this many moves");
  mock->add_option("--seed", mock_options.seed, "Seed for shuffling and delays");

  // serve
  auto* serve = app.add_subcommand("serve", "HTTP and WebSocket service");
  EngineArgs serve_engine;
  std::string address = "127.0.0.1";
  unsigned short port = 8080;
  std::string static_dir;
  serve_engine.add_to(serve);
  serve->add_option("--port", port, "Listening port (0 picks one)");
  serve->add_option("--address", address, "Listening address");
  serve->add_option("--static", static_dir, "Directory served under /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitInput;
  }

  if (*analyze) return run_analyze(game_path, analyze_engine, include_terminal, analyze_format, analyze_out);

  if (*feats)
    return with_analysis(
        features_in, [&](copan_analysis* a, char** text) { return copan_features_json(a, &feature_options, text); },
        features_out);

  if (*qual)
    return with_analysis(
        quality_in,
        [&](copan_analysis* a, char** text) {
          return copan_quality_json(a, clamp_realized ? 1 : 0, include_passes ? 1 : 0, text);
        },
        quality_out);

  if (*chart) {
    std::string features_text;
    if (!chart_features.empty())
      if (int code = read_file(chart_features, features_text); code != kExitOk) return code;
    return with_analysis(
        chart_in,
        [&](copan_analysis* a, char** text) {
          return copan_chart_json(a, chart_features.empty() ? nullptr : features_text.c_str(), text);
        },
        chart_out);
  }

  if (*handicap) {
    const auto config = handicap_engine.config();
    copan_engine* engine = nullptr;
    if (auto st = copan_engine_open(&config, &engine); st != COPAN_OK) return fail(st);
    double value = 0.0;
    const copan_status st = copan_handicap_value(engine, handicap_size, handicap_komi, handicap_engine.visits, &value);
    copan_engine_free(engine);
    if (st != COPAN_OK) return fail(st);
    std::printf("%.2f\n", value);
    return kExitOk;
  }

  if (*mock) {
    std::vector<int> spike_moves;
    std::vector<double> spike_values;
    for (const auto& s : spikes) {
      int k = 0;
      double v = 0.0;
      if (!parse_spike(s, k, v)) {
        std::cerr << "copan: bad --spike '" << s << "', expected K:V\n";
        return kExitInput;
      }
      spike_moves.push_back(k);
      spike_values.push_back(v);
    }
    mock_options.model.spike_moves = spike_moves.data();
    mock_options.model.spike_values = spike_values.data();
    mock_options.model.spike_count = spike_moves.size();
    mock_options.perspective = perspective_of(mock_perspective);
    mock_options.fixture_path = fixture.empty() ? nullptr : fixture.c_str();
    const copan_status st = copan_mock_engine_run(&mock_options);
    return st == COPAN_OK ? kExitOk : fail(st);
  }

  if (*serve) {
    // Block the stop signals before any service thread exists so only sigwait sees them.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    copan_service_options options;
    copan_service_options_init(&options);
    options.address = address.c_str();
    options.port = port;
    options.engine = serve_engine.config();
    options.visits = serve_engine.visits;
    options.static_dir = static_dir.empty() ? nullptr : static_dir.c_str();
    copan_service* service = nullptr;
    if (auto st = copan_service_start(&options, &service); st != COPAN_OK) return fail(st);
    std::printf("listening on http://%s:%u\n", address.c_str(), static_cast<unsigned>(copan_service_port(service)));
    std::fflush(stdout);
    int sig = 0;
    sigwait(&stop_signals, &sig);
    copan_service_stop(service);
    copan_service_free(service);
    return kExitOk;
  }
  return kExitInput;
}
