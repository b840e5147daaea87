#pragma once

#include <string>

#include "copan/cop.hpp"
#include "copan/features.hpp"
#include "copan/quality.hpp"
#include "json.hpp"

namespace copan::report {

struct DangerLevel {
  int level = 0;  // 0..3
  double residual_in_mads = 0.0;
  double cost = 0.0;

  bool operator==(const DangerLevel&) const = default;
};

struct DangerOptions {
  // Bucket the raw cost instead of its residual against the baseline.
  bool absolute = false;
  // Points per bucket unit in absolute mode.
  double absolute_unit = 3.0;
};

// Buckets: <= 1 unit -> 0, <= 2 -> 1, <= 4 -> 2, else 3. Carries no board location.
DangerLevel danger_level(double cost, const features::BaselineFit& fit, int index,
                         const DangerOptions& options = {});

// Deterministic Vega-Lite document: one bar per analyzed position colored by side to
// move, the fitted baseline, stage bands, and a segment layer when segments exist.
nlohmann::json render_chart(const cop::CopSeries& series, const features::BaselineFit& fit,
                            const std::vector<features::Segment>& segments,
                            const std::vector<features::StageSpan>& stages);

nlohmann::json analysis_to_json(const cop::CopSeries& series);
// Throws BadDocument.
cop::CopSeries analysis_from_json(const nlohmann::json& doc);

inline constexpr const char* kCsvHeader =
    "index,sideToMove,scoreMeanBefore,scoreMeanAfterPass,cost,winRate,effect,move";

// Values use the shortest round-trip representation.
std::string analysis_to_csv(const cop::CopSeries& series);
// Game metadata is not carried by CSV; board size defaults to 19 for vertices.
cop::CopSeries analysis_from_csv(std::string_view text, int board_size = 19);

nlohmann::json features_to_json(const features::FeatureSet& features);
features::FeatureSet features_from_json(const nlohmann::json& doc);

// Two-decimal values; percentages without a denominator read "undefined".
nlohmann::json quality_to_json(const quality::GameSummary& summary);

enum class Format { Json, Csv };

// JSON embeds features and quality when given; CSV holds the point table only.
// Throws IoError.
void export_analysis(const cop::CopSeries& series, const features::FeatureSet* features,
                     const quality::GameSummary* quality, Format format, const std::string& destination);
// Format chosen by content. Throws IoError or BadDocument.
cop::CopSeries import_analysis(const std::string& source);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, std::string_view content);

}  // namespace copan::report
