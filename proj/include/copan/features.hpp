#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "copan/cop.hpp"

namespace copan::features {

struct BaselineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual_scale = 0.0;  // MAD of inlier residuals
  int inlier_count = 0;
  std::vector<int> inliers;  // position indices kept by the final fit
  // False when the iteration cap stopped trimming before the inlier set settled.
  bool converged = true;

  double at(double index) const { return intercept + slope * index; }
  bool operator==(const BaselineFit&) const = default;
};

enum class SegmentKind { ForcingSpike, TwoSidedFight, OneSidedForcing };

const char* segment_kind_name(SegmentKind kind);
SegmentKind parse_segment_kind(std::string_view s);

struct Segment {
  int start = 0;
  int end = 0;  // inclusive
  SegmentKind kind = SegmentKind::ForcingSpike;
  std::optional<Color> defender;  // OneSidedForcing only
  double peak = 0.0;              // largest residual in the run
  std::vector<int> elevated;      // member indices, all with residual > tau

  bool operator==(const Segment&) const = default;
};

enum class Stage { Opening, Middle, Endgame };

const char* stage_name(Stage s);
Stage parse_stage(std::string_view s);

struct StageSpan {
  Stage stage = Stage::Opening;
  int start = 0;
  int end = 0;  // inclusive

  bool operator==(const StageSpan&) const = default;
};

enum class Initiative { Sente, Gote };

struct SenteState {
  int index = 0;
  Initiative state = Initiative::Sente;
  double residual = 0.0;

  bool operator==(const SenteState&) const = default;
};

struct PointOfInterest {
  int start = 0;
  int end = 0;
  std::string kind;  // a SegmentKind name, or "Loss" for a single costly move
  double magnitude = 0.0;

  bool operator==(const PointOfInterest&) const = default;
};

struct FitOptions {
  double mad_multiplier = 2.0;
  int max_iterations = 10;
};

struct SegmentOptions {
  // Elevated indices this far apart or closer share a run; 2 lets the opponent's
  // intervening turn sit on the baseline.
  int max_gap = 2;
  double one_sided_fraction = 0.8;
};

struct StageOptions {
  double opening_floor = 10.0;
  double endgame_ceiling = 7.0;
  double hysteresis = 0.5;
  int window = 11;
};

// Least squares with iterative upper-side trimming of residuals above 2 x MAD. Trimmed
// points stay out, so a converged fit is a fixed point of refitting its own inliers.
// Throws TooFewPoints (< 10 points) or DegenerateFit (all x equal).
BaselineFit fit_baseline(std::span<const double> x, std::span<const double> y, const FitOptions& options = {});
BaselineFit fit_baseline(const cop::CopSeries& series, const FitOptions& options = {});

double default_tau(const BaselineFit& fit);

std::vector<double> residuals(const cop::CopSeries& series, const BaselineFit& fit);

std::vector<Segment> detect_segments(const cop::CopSeries& series, const BaselineFit& fit, double tau,
                                     const SegmentOptions& options = {});

std::vector<SenteState> sente_states(const cop::CopSeries& series, const BaselineFit& fit, double tau);

inline double sente_value(double cost) { return cost / 2.0; }

// Black-perspective lead from secure territory, komi and the value of having the move.
double estimate_lead(double secure_black, double secure_white, double komi, double cost, Color side_to_move);

// Median of inlier costs over a centered window (edge-truncated).
std::vector<double> smoothed_baseline(const cop::CopSeries& series, const BaselineFit& fit, int window = 11);

std::vector<StageSpan> classify_stages(const cop::CopSeries& series, const BaselineFit& fit,
                                       const StageOptions& options = {});

// Boundary search on an already smoothed series (one value per entry of `index`).
std::vector<StageSpan> stages_from_smoothed(std::span<const int> index, std::span<const double> smoothed,
                                            const StageOptions& options = {});

// All segments plus the k most negative effects, largest magnitude first, earlier index on ties.
std::vector<PointOfInterest> select_points_of_interest(const std::vector<Segment>& segments,
                                                       const cop::CopSeries& series, int k);

struct FeatureOptions {
  std::optional<double> tau;  // default_tau(fit) when unset
  SegmentOptions segments;
  StageOptions stages;
  FitOptions fit;
  int points_of_interest = 10;
};

struct FeatureSet {
  BaselineFit baseline;
  double tau = 0.0;
  std::vector<Segment> segments;
  std::vector<StageSpan> stages;
  std::vector<SenteState> sente;
  std::vector<PointOfInterest> points_of_interest;

  bool operator==(const FeatureSet&) const = default;
};

FeatureSet analyze_features(const cop::CopSeries& series, const FeatureOptions& options = {});

}  // namespace copan::features
