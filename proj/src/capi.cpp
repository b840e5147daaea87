#define COPAN_BUILDING_LIBRARY
#include "copan/copan.h"

#include <cmath>
#include <cstring>
#include <iostream>

#include "copan/cop.hpp"
#include "copan/error.hpp"
#include "copan/features.hpp"
#include "copan/mock.hpp"
#include "copan/process_engine.hpp"
#include "copan/quality.hpp"
#include "copan/report.hpp"
#include "copan/service.hpp"

using namespace copan;

struct copan_game {
  sgf::GameRecord record;
};

struct copan_engine {
  std::unique_ptr<engine::Engine> engine;
  cop::EvalCache cache;
};

struct copan_analysis {
  cop::CopSeries series;
};

struct copan_service {
  std::unique_ptr<service::Service> service;
};

static_assert(static_cast<int>(ErrorCode::BadDocument) + 1 == COPAN_BAD_DOCUMENT);
static_assert(static_cast<int>(ErrorCode::InvalidArgument) + 1 == COPAN_INVALID_ARGUMENT);

namespace {

thread_local std::string last_error;
thread_local int last_error_index = -1;

copan_status status_of(ErrorCode code) { return static_cast<copan_status>(static_cast<int>(code) + 1); }

template <typename F>
copan_status guard(F&& f) {
  last_error.clear();
  last_error_index = -1;
  try {
    f();
    return COPAN_OK;
  } catch (const EngineError& e) {
    last_error = e.what();
    last_error_index = e.index().value_or(-1);
    return status_of(e.code());
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return COPAN_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return COPAN_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

engine::Perspective to_perspective(copan_perspective p) {
  switch (p) {
    case COPAN_PERSPECTIVE_BLACK: return engine::Perspective::Black;
    case COPAN_PERSPECTIVE_WHITE: return engine::Perspective::White;
    case COPAN_PERSPECTIVE_SIDE_TO_MOVE: return engine::Perspective::SideToMove;
  }
  throw Error(ErrorCode::InvalidArgument, "unknown perspective");
}

engine::EngineConfig to_config(const copan_engine_config& c) {
  require(c.command && *c.command, "engine command is empty");
  engine::EngineConfig config;
  config.command = engine::split_command(c.command);
  config.visits = c.visits;
  if (c.rules) config.rules = c.rules;
  config.reporting_perspective = to_perspective(c.perspective);
  config.timeout = std::chrono::duration<double>(c.timeout_seconds);
  config.max_in_flight = c.max_in_flight;
  if (c.stderr_log) config.stderr_log = c.stderr_log;
  require(config.visits >= 1, "visits must be >= 1");
  require(config.max_in_flight >= 1, "max_in_flight must be >= 1");
  require(c.timeout_seconds > 0, "timeout must be positive");
  return config;
}

engine::MockModel to_model(const copan_mock_model& m) {
  engine::MockModel model;
  model.base_value = m.base_value;
  model.decay = m.decay;
  require(m.spike_count == 0 || (m.spike_moves && m.spike_values), "spike arrays are null");
  for (size_t i = 0; i < m.spike_count; ++i) model.spikes[m.spike_moves[i]] += m.spike_values[i];
  if (m.horizon > 0) model.horizon = m.horizon;
  model.validate();
  return model;
}

}  // namespace

extern "C" {

const char* copan_status_name(copan_status status) {
  if (status == COPAN_OK) return "Ok";
  if (status == COPAN_INTERNAL) return "Internal";
  if (status > COPAN_OK && status < COPAN_INTERNAL) return error_code_name(static_cast<ErrorCode>(status - 1));
  return "Unknown";
}

int copan_status_is_engine_error(copan_status status) {
  return status > COPAN_OK && status < COPAN_INTERNAL && is_engine_error(static_cast<ErrorCode>(status - 1));
}

const char* copan_last_error(void) { return last_error.c_str(); }

int copan_last_error_index(void) { return last_error_index; }

void copan_string_free(char* s) { std::free(s); }

copan_status copan_game_parse(const char* sgf, int lenient_color_order, copan_game** out) {
  return guard([&] {
    require(sgf && out, "null argument");
    auto game = std::make_unique<copan_game>();
    game->record = sgf::parse_sgf(sgf, {lenient_color_order != 0});
    *out = game.release();
  });
}

copan_status copan_game_load(const char* path, int lenient_color_order, copan_game** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto game = std::make_unique<copan_game>();
    game->record = sgf::parse_sgf(report::read_text_file(path), {lenient_color_order != 0});
    *out = game.release();
  });
}

copan_status copan_game_to_sgf(const copan_game* game, char** out) {
  return guard([&] {
    require(game && out, "null argument");
    *out = dup_string(sgf::serialize_sgf(game->record));
  });
}

size_t copan_game_move_count(const copan_game* game) { return game ? game->record.moves.size() : 0; }

void copan_game_free(copan_game* game) { delete game; }

void copan_engine_config_init(copan_engine_config* config) {
  if (!config) return;
  const engine::EngineConfig defaults;
  config->command = nullptr;
  config->visits = defaults.visits;
  config->rules = "japanese";
  config->perspective = COPAN_PERSPECTIVE_SIDE_TO_MOVE;
  config->timeout_seconds = defaults.timeout.count();
  config->max_in_flight = defaults.max_in_flight;
  config->stderr_log = nullptr;
}

copan_status copan_engine_open(const copan_engine_config* config, copan_engine** out) {
  return guard([&] {
    require(config && out, "null argument");
    auto handle = std::make_unique<copan_engine>();
    handle->engine = std::make_unique<engine::ProcessEngine>(to_config(*config));
    *out = handle.release();
  });
}

void copan_mock_model_init(copan_mock_model* model) {
  if (!model) return;
  const engine::MockModel defaults;
  model->base_value = defaults.base_value;
  model->decay = defaults.decay;
  model->spike_moves = nullptr;
  model->spike_values = nullptr;
  model->spike_count = 0;
  model->horizon = 0;
}

copan_status copan_engine_open_mock(const copan_mock_model* model, copan_engine** out) {
  return guard([&] {
    require(model && out, "null argument");
    auto handle = std::make_unique<copan_engine>();
    handle->engine = std::make_unique<engine::NegamaxMock>(to_model(*model));
    *out = handle.release();
  });
}

copan_status copan_engine_open_scripted(const char* fixture_path, copan_engine** out) {
  return guard([&] {
    require(fixture_path && out, "null argument");
    auto handle = std::make_unique<copan_engine>();
    handle->engine = std::make_unique<engine::ScriptedMock>(engine::ScriptedFixture::load(fixture_path));
    *out = handle.release();
  });
}

uint64_t copan_engine_queries(const copan_engine* engine) { return engine ? engine->engine->queries_issued() : 0; }

void copan_engine_cache_clear(copan_engine* engine) {
  if (engine) engine->cache.clear();
}

void copan_engine_free(copan_engine* engine) { delete engine; }

copan_status copan_analyze(const copan_game* game, copan_engine* engine, int visits, int include_terminal,
                           copan_analysis** out) {
  return guard([&] {
    require(game && engine && out, "null argument");
    cop::SeriesOptions options;
    options.visits = visits;
    options.include_terminal = include_terminal != 0;
    options.cache = &engine->cache;
    auto analysis = std::make_unique<copan_analysis>();
    analysis->series = cop::compute_series(game->record, *engine->engine, options);
    *out = analysis.release();
  });
}

copan_status copan_analysis_load(const char* path, copan_analysis** out) {
  return guard([&] {
    require(path && out, "null argument");
    auto analysis = std::make_unique<copan_analysis>();
    analysis->series = report::import_analysis(path);
    *out = analysis.release();
  });
}

copan_status copan_analysis_from_json(const char* json, copan_analysis** out) {
  return guard([&] {
    require(json && out, "null argument");
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::BadDocument, e.what());
    }
    auto analysis = std::make_unique<copan_analysis>();
    analysis->series = report::analysis_from_json(doc);
    *out = analysis.release();
  });
}

copan_status copan_analysis_to_json(const copan_analysis* analysis, char** out) {
  return guard([&] {
    require(analysis && out, "null argument");
    *out = dup_string(report::analysis_to_json(analysis->series).dump(2) + "\n");
  });
}

copan_status copan_analysis_write(const copan_analysis* analysis, const char* path, copan_format format) {
  return guard([&] {
    require(analysis && path, "null argument");
    require(format == COPAN_FORMAT_JSON || format == COPAN_FORMAT_CSV, "unknown format");
    report::export_analysis(analysis->series, nullptr, nullptr,
                            format == COPAN_FORMAT_CSV ? report::Format::Csv : report::Format::Json, path);
  });
}

size_t copan_analysis_size(const copan_analysis* analysis) { return analysis ? analysis->series.points.size() : 0; }

copan_status copan_analysis_point(const copan_analysis* analysis, size_t i, copan_point* out) {
  return guard([&] {
    require(analysis && out, "null argument");
    if (i >= analysis->series.points.size())
      throw Error(ErrorCode::IndexOutOfRange, "point " + std::to_string(i) + " out of range");
    const auto& p = analysis->series.points[i];
    out->index = p.index;
    out->side_to_move = p.side_to_move == Color::Black ? 0 : 1;
    out->score_mean_before = p.score_mean_before;
    out->score_mean_after_pass = p.score_mean_after_pass;
    out->cost = p.cost;
    out->win_rate = p.win_rate;
    out->effect = p.effect.value_or(0.0);
    out->has_effect = p.effect.has_value() ? 1 : 0;
  });
}

void copan_analysis_free(copan_analysis* analysis) { delete analysis; }

void copan_feature_options_init(copan_feature_options* options) {
  if (!options) return;
  const features::FeatureOptions defaults;
  options->tau = 0.0;
  options->one_sided_fraction = defaults.segments.one_sided_fraction;
  options->max_gap = defaults.segments.max_gap;
  options->points_of_interest = defaults.points_of_interest;
}

copan_status copan_features_json(const copan_analysis* analysis, const copan_feature_options* options, char** out) {
  return guard([&] {
    require(analysis && out, "null argument");
    features::FeatureOptions fo;
    if (options) {
      if (options->tau > 0) fo.tau = options->tau;
      require(options->one_sided_fraction > 0.5 && options->one_sided_fraction <= 1.0,
              "one-sided fraction must be in (0.5, 1]");
      require(options->max_gap >= 1, "max_gap must be >= 1");
      fo.segments.one_sided_fraction = options->one_sided_fraction;
      fo.segments.max_gap = options->max_gap;
      fo.points_of_interest = options->points_of_interest;
    }
    *out = dup_string(report::features_to_json(features::analyze_features(analysis->series, fo)).dump(2) + "\n");
  });
}

copan_status copan_quality_json(const copan_analysis* analysis, int clamp_realized, int include_passes, char** out) {
  return guard([&] {
    require(analysis && out, "null argument");
    quality::QualityOptions qo;
    qo.clamp_realized = clamp_realized != 0;
    qo.include_passes = include_passes != 0;
    *out = dup_string(report::quality_to_json(quality::game_summary(analysis->series, qo)).dump(2) + "\n");
  });
}

copan_status copan_chart_json(const copan_analysis* analysis, const char* features_json, char** out) {
  return guard([&] {
    require(analysis && out, "null argument");
    features::FeatureSet f;
    if (features_json) {
      nlohmann::json doc;
      try {
        doc = nlohmann::json::parse(features_json);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::BadDocument, e.what());
      }
      f = report::features_from_json(doc);
    } else {
      f = features::analyze_features(analysis->series);
    }
    *out = dup_string(report::render_chart(analysis->series, f.baseline, f.segments, f.stages).dump(2) + "\n");
  });
}

copan_status copan_handicap_value(copan_engine* engine, int board_size, double komi, int visits, double* out) {
  return guard([&] {
    require(engine && out, "null argument");
    *out = quality::handicap_value(*engine->engine, board_size, komi, visits);
  });
}

copan_status copan_danger_level(double cost, double slope, double intercept, double residual_scale, int index,
                                int absolute, int* level) {
  return guard([&] {
    require(level, "null argument");
    require(residual_scale >= 0 && std::isfinite(cost), "bad danger inputs");
    features::BaselineFit fit;
    fit.slope = slope;
    fit.intercept = intercept;
    fit.residual_scale = residual_scale;
    report::DangerOptions options;
    options.absolute = absolute != 0;
    *level = report::danger_level(cost, fit, index, options).level;
  });
}

copan_status copan_write_text(const char* path, const char* text) {
  return guard([&] {
    require(path && text, "null argument");
    report::write_text_file(path, text);
  });
}

void copan_mock_server_options_init(copan_mock_server_options* options) {
  if (!options) return;
  const engine::MockServerOptions defaults;
  options->fixture_path = nullptr;
  copan_mock_model_init(&options->model);
  options->perspective = COPAN_PERSPECTIVE_SIDE_TO_MOVE;
  options->shuffle_window = defaults.shuffle_window;
  options->max_delay_ms = defaults.max_delay_ms;
  options->crash_on_length = defaults.crash_on_length;
  options->hang_on_length = defaults.hang_on_length;
  options->seed = defaults.seed;
}

copan_status copan_mock_engine_run(const copan_mock_server_options* options) {
  return guard([&] {
    require(options, "null argument");
    engine::MockServerOptions so;
    so.perspective = to_perspective(options->perspective);
    so.shuffle_window = options->shuffle_window;
    so.max_delay_ms = options->max_delay_ms;
    so.crash_on_length = options->crash_on_length;
    so.hang_on_length = options->hang_on_length;
    so.seed = options->seed;
    std::ios::sync_with_stdio(false);
    if (options->fixture_path) {
      auto mock = std::make_shared<engine::ScriptedMock>(engine::ScriptedFixture::load(options->fixture_path));
      engine::run_mock_server(std::cin, std::cout, [mock](const engine::Query& q) { return mock->evaluate(q); }, so);
    } else {
      auto mock = std::make_shared<engine::NegamaxMock>(to_model(options->model));
      engine::run_mock_server(std::cin, std::cout, [mock](const engine::Query& q) { return mock->evaluate(q); }, so);
    }
  });
}

void copan_service_options_init(copan_service_options* options) {
  if (!options) return;
  options->address = "127.0.0.1";
  options->port = 0;
  copan_engine_config_init(&options->engine);
  options->visits = options->engine.visits;
  options->static_dir = nullptr;
}

copan_status copan_service_start(const copan_service_options* options, copan_service** out) {
  return guard([&] {
    require(options && out, "null argument");
    require(options->visits >= 1, "visits must be >= 1");
    const auto config = to_config(options->engine);
    service::ServiceOptions so;
    if (options->address) so.address = options->address;
    so.port = options->port;
    so.visits = options->visits;
    if (options->static_dir) so.static_dir = options->static_dir;
    so.engine_factory = [config] { return std::make_unique<engine::ProcessEngine>(config); };
    auto handle = std::make_unique<copan_service>();
    handle->service = std::make_unique<service::Service>(std::move(so));
    handle->service->start();
    *out = handle.release();
  });
}

unsigned short copan_service_port(const copan_service* service) { return service ? service->service->port() : 0; }

void copan_service_stop(copan_service* service) {
  if (service) service->service->stop();
}

void copan_service_free(copan_service* service) { delete service; }

}  // extern "C"
