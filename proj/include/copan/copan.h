#ifndef COPAN_COPAN_H
#define COPAN_COPAN_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(COPAN_BUILDING_LIBRARY)
#define COPAN_API __attribute__((visibility("default")))
#else
#define COPAN_API
#endif

/* Every fallible call returns a status; details are in copan_last_error() on the same thread. */
typedef enum copan_status {
  COPAN_OK = 0,
  COPAN_INVALID_ARGUMENT,
  COPAN_MALFORMED_SGF,
  COPAN_OFF_BOARD_MOVE,
  COPAN_OCCUPIED_POINT,
  COPAN_UNSUPPORTED_SIZE,
  COPAN_INDEX_OUT_OF_RANGE,
  COPAN_ENGINE_CRASHED,
  COPAN_QUERY_TIMEOUT,
  COPAN_PROTOCOL_ERROR,
  COPAN_ENGINE_REJECTED_QUERY,
  COPAN_TOO_FEW_POINTS,
  COPAN_DEGENERATE_FIT,
  COPAN_EMPTY_SERIES,
  COPAN_NO_MOVES_FOR_COLOR,
  COPAN_IO_ERROR,
  COPAN_BAD_DOCUMENT,
  COPAN_INTERNAL
} copan_status;

typedef enum copan_perspective {
  COPAN_PERSPECTIVE_BLACK = 0,
  COPAN_PERSPECTIVE_WHITE = 1,
  COPAN_PERSPECTIVE_SIDE_TO_MOVE = 2
} copan_perspective;

typedef enum copan_format { COPAN_FORMAT_JSON = 0, COPAN_FORMAT_CSV = 1 } copan_format;

typedef struct copan_game copan_game;
typedef struct copan_engine copan_engine;
typedef struct copan_analysis copan_analysis;
typedef struct copan_service copan_service;

COPAN_API const char* copan_status_name(copan_status status);
COPAN_API int copan_status_is_engine_error(copan_status status);
/* Message of the last failure on this thread; "" after success. */
COPAN_API const char* copan_last_error(void);
/* Position index attached to the last engine failure, or -1. */
COPAN_API int copan_last_error_index(void);
/* Frees strings returned through char** out-parameters. */
COPAN_API void copan_string_free(char* s);

/* Games */
COPAN_API copan_status copan_game_parse(const char* sgf, int lenient_color_order, copan_game** out);
COPAN_API copan_status copan_game_load(const char* path, int lenient_color_order, copan_game** out);
COPAN_API copan_status copan_game_to_sgf(const copan_game* game, char** out);
COPAN_API size_t copan_game_move_count(const copan_game* game);
COPAN_API void copan_game_free(copan_game* game);

/* Engines. Each engine handle owns an evaluation cache shared by its analyses. */
typedef struct copan_engine_config {
  const char* command; /* split on whitespace, quotes honored */
  int visits;
  const char* rules;
  copan_perspective perspective;
  double timeout_seconds;
  int max_in_flight;
  const char* stderr_log; /* NULL picks a temp file */
} copan_engine_config;

COPAN_API void copan_engine_config_init(copan_engine_config* config);
COPAN_API copan_status copan_engine_open(const copan_engine_config* config, copan_engine** out);

typedef struct copan_mock_model {
  double base_value;
  double decay;
  const int* spike_moves; /* 1-based move numbers */
  const double* spike_values;
  size_t spike_count;
  int horizon; /* <= 0 for the default */
} copan_mock_model;

COPAN_API void copan_mock_model_init(copan_mock_model* model);
COPAN_API copan_status copan_engine_open_mock(const copan_mock_model* model, copan_engine** out);
COPAN_API copan_status copan_engine_open_scripted(const char* fixture_path, copan_engine** out);
COPAN_API uint64_t copan_engine_queries(const copan_engine* engine);
COPAN_API void copan_engine_cache_clear(copan_engine* engine);
COPAN_API void copan_engine_free(copan_engine* engine);

/* Analyses */
typedef struct copan_point {
  int index;
  int side_to_move; /* 0 black, 1 white */
  double score_mean_before;
  double score_mean_after_pass;
  double cost;
  double win_rate;
  double effect;
  int has_effect;
} copan_point;

COPAN_API copan_status copan_analyze(const copan_game* game, copan_engine* engine, int visits,
                                     int include_terminal, copan_analysis** out);
/* JSON or CSV, detected from content. */
COPAN_API copan_status copan_analysis_load(const char* path, copan_analysis** out);
COPAN_API copan_status copan_analysis_from_json(const char* json, copan_analysis** out);
COPAN_API copan_status copan_analysis_to_json(const copan_analysis* analysis, char** out);
COPAN_API copan_status copan_analysis_write(const copan_analysis* analysis, const char* path, copan_format format);
COPAN_API size_t copan_analysis_size(const copan_analysis* analysis);
COPAN_API copan_status copan_analysis_point(const copan_analysis* analysis, size_t i, copan_point* out);
COPAN_API void copan_analysis_free(copan_analysis* analysis);

typedef struct copan_feature_options {
  double tau; /* <= 0 selects max(3, 2 x MAD) */
  double one_sided_fraction;
  int max_gap;
  int points_of_interest;
} copan_feature_options;

COPAN_API void copan_feature_options_init(copan_feature_options* options);
COPAN_API copan_status copan_features_json(const copan_analysis* analysis, const copan_feature_options* options,
                                           char** out);
COPAN_API copan_status copan_quality_json(const copan_analysis* analysis, int clamp_realized, int include_passes,
                                          char** out);
/* features_json may be NULL to derive features with default options. */
COPAN_API copan_status copan_chart_json(const copan_analysis* analysis, const char* features_json, char** out);

COPAN_API copan_status copan_handicap_value(copan_engine* engine, int board_size, double komi, int visits,
                                            double* out);
COPAN_API copan_status copan_danger_level(double cost, double slope, double intercept, double residual_scale,
                                          int index, int absolute, int* level);
COPAN_API copan_status copan_write_text(const char* path, const char* text);

/* Protocol server on stdin/stdout backed by the negamax mock, or a scripted fixture when
   fixture_path is set. Returns when stdin closes. */
typedef struct copan_mock_server_options {
  const char* fixture_path;
  copan_mock_model model;
  copan_perspective perspective;
  int shuffle_window;
  int max_delay_ms;
  int crash_on_length;
  int hang_on_length;
  unsigned seed;
} copan_mock_server_options;

COPAN_API void copan_mock_server_options_init(copan_mock_server_options* options);
COPAN_API copan_status copan_mock_engine_run(const copan_mock_server_options* options);

/* HTTP/WebSocket service */
typedef struct copan_service_options {
  const char* address;
  unsigned short port; /* 0 picks a free port */
  copan_engine_config engine;
  int visits;
  const char* static_dir; /* may be NULL */
} copan_service_options;

COPAN_API void copan_service_options_init(copan_service_options* options);
COPAN_API copan_status copan_service_start(const copan_service_options* options, copan_service** out);
COPAN_API unsigned short copan_service_port(const copan_service* service);
COPAN_API void copan_service_stop(copan_service* service);
COPAN_API void copan_service_free(copan_service* service);

#ifdef __cplusplus
}
#endif

#endif
