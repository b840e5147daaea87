#include "copan/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "copan/error.hpp"

namespace copan::features {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

double mad(const std::vector<double>& v) {
  const double m = median(v);
  std::vector<double> dev;
  dev.reserve(v.size());
  for (double x : v) dev.push_back(std::abs(x - m));
  return median(std::move(dev));
}

struct Line {
  double slope;
  double intercept;
};

std::optional<Line> least_squares(std::span<const double> x, std::span<const double> y,
                                  const std::vector<size_t>& use) {
  double mx = 0.0;
  double my = 0.0;
  for (size_t i : use) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(use.size());
  my /= static_cast<double>(use.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (size_t i : use) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) return std::nullopt;
  const double slope = sxy / sxx;
  return Line{slope, my - slope * mx};
}

}  // namespace

const char* segment_kind_name(SegmentKind kind) {
  switch (kind) {
    case SegmentKind::ForcingSpike: return "ForcingSpike";
    case SegmentKind::TwoSidedFight: return "TwoSidedFight";
    case SegmentKind::OneSidedForcing: return "OneSidedForcing";
  }
  return "ForcingSpike";
}

SegmentKind parse_segment_kind(std::string_view s) {
  if (s == "ForcingSpike") return SegmentKind::ForcingSpike;
  if (s == "TwoSidedFight") return SegmentKind::TwoSidedFight;
  if (s == "OneSidedForcing") return SegmentKind::OneSidedForcing;
  throw Error(ErrorCode::BadDocument, "unknown segment kind '" + std::string(s) + "'");
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::Opening: return "Opening";
    case Stage::Middle: return "Middle";
    case Stage::Endgame: return "Endgame";
  }
  return "Opening";
}

Stage parse_stage(std::string_view s) {
  if (s == "Opening") return Stage::Opening;
  if (s == "Middle") return Stage::Middle;
  if (s == "Endgame") return Stage::Endgame;
  throw Error(ErrorCode::BadDocument, "unknown stage '" + std::string(s) + "'");
}

BaselineFit fit_baseline(std::span<const double> x, std::span<const double> y, const FitOptions& options) {
  if (x.size() != y.size()) throw Error(ErrorCode::InvalidArgument, "x and y differ in length");
  if (x.size() < 10)
    throw Error(ErrorCode::TooFewPoints, "baseline fit needs at least 10 points, got " + std::to_string(x.size()));

  std::vector<size_t> inliers(x.size());
  for (size_t i = 0; i < x.size(); ++i) inliers[i] = i;
  auto line = least_squares(x, y, inliers);
  if (!line) throw Error(ErrorCode::DegenerateFit, "all points share the same index");

  double largest = 0.0;
  for (double v : y) largest = std::max(largest, std::abs(v));
  const double floor = 1e-9 * (1.0 + largest);

  std::vector<double> r(x.size());
  bool converged = false;
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    for (size_t i = 0; i < x.size(); ++i) r[i] = y[i] - (line->intercept + line->slope * x[i]);
    std::vector<double> kept_r;
    for (size_t i : inliers) kept_r.push_back(r[i]);
    const double cutoff = std::max(options.mad_multiplier * mad(kept_r), floor);

    std::vector<size_t> next;
    for (size_t i : inliers)
      if (r[i] <= cutoff) next.push_back(i);
    if (next == inliers) {
      converged = true;
      break;
    }
    const auto refit = next.size() < 2 ? std::nullopt : least_squares(x, y, next);
    if (!refit) {
      converged = true;
      break;
    }
    inliers = std::move(next);
    line = refit;
  }

  BaselineFit fit;
  fit.slope = line->slope;
  fit.intercept = line->intercept;
  std::vector<double> kept_r;
  for (size_t i : inliers) {
    kept_r.push_back(y[i] - (fit.intercept + fit.slope * x[i]));
    fit.inliers.push_back(static_cast<int>(std::lround(x[i])));
  }
  fit.residual_scale = mad(kept_r);
  fit.inlier_count = static_cast<int>(inliers.size());
  fit.converged = converged;
  return fit;
}

BaselineFit fit_baseline(const cop::CopSeries& series, const FitOptions& options) {
  std::vector<double> x;
  std::vector<double> y;
  for (const auto& p : series.points) {
    x.push_back(p.index);
    y.push_back(p.cost);
  }
  return fit_baseline(x, y, options);
}

double default_tau(const BaselineFit& fit) { return std::max(3.0, 2.0 * fit.residual_scale); }

std::vector<double> residuals(const cop::CopSeries& series, const BaselineFit& fit) {
  std::vector<double> r;
  r.reserve(series.points.size());
  for (const auto& p : series.points) r.push_back(p.cost - fit.at(p.index));
  return r;
}

std::vector<Segment> detect_segments(const cop::CopSeries& series, const BaselineFit& fit, double tau,
                                     const SegmentOptions& options) {
  if (!(tau > 0.0)) throw Error(ErrorCode::InvalidArgument, "tau must be positive");
  const auto r = residuals(series, fit);

  std::vector<std::vector<size_t>> runs;
  for (size_t i = 0; i < series.points.size(); ++i) {
    if (!(r[i] > tau)) continue;
    if (runs.empty() || series.points[i].index - series.points[runs.back().back()].index > options.max_gap)
      runs.emplace_back();
    runs.back().push_back(i);
  }

  std::vector<Segment> segments;
  for (const auto& run : runs) {
    Segment s;
    s.start = series.points[run.front()].index;
    s.end = series.points[run.back()].index;
    int black = 0;
    int white = 0;
    s.peak = r[run.front()];
    for (size_t i : run) {
      s.elevated.push_back(series.points[i].index);
      s.peak = std::max(s.peak, r[i]);
      (series.points[i].side_to_move == Color::Black ? black : white)++;
    }
    const double total = static_cast<double>(run.size());
    if (run.size() == 1) {
      s.kind = SegmentKind::ForcingSpike;
    } else if (black >= 2 && white >= 2) {
      s.kind = SegmentKind::TwoSidedFight;
    } else if (black / total >= options.one_sided_fraction) {
      s.kind = SegmentKind::OneSidedForcing;
      s.defender = Color::Black;
    } else if (white / total >= options.one_sided_fraction) {
      s.kind = SegmentKind::OneSidedForcing;
      s.defender = Color::White;
    } else {
      // short mixed exchange
      s.kind = SegmentKind::TwoSidedFight;
    }
    segments.push_back(std::move(s));
  }
  return segments;
}

std::vector<SenteState> sente_states(const cop::CopSeries& series, const BaselineFit& fit, double tau) {
  const auto r = residuals(series, fit);
  std::vector<SenteState> out;
  out.reserve(r.size());
  for (size_t i = 0; i < r.size(); ++i)
    out.push_back({series.points[i].index, r[i] > tau ? Initiative::Gote : Initiative::Sente, r[i]});
  return out;
}

double estimate_lead(double secure_black, double secure_white, double komi, double cost, Color side_to_move) {
  return secure_black - secure_white - komi + sign(side_to_move) * sente_value(cost);
}

std::vector<double> smoothed_baseline(const cop::CopSeries& series, const BaselineFit& fit, int window) {
  const std::set<int> inliers(fit.inliers.begin(), fit.inliers.end());
  const int half = window / 2;
  std::vector<double> out;
  out.reserve(series.points.size());
  for (size_t i = 0; i < series.points.size(); ++i) {
    const int center = series.points[i].index;
    std::vector<double> values;
    for (size_t j = i; j-- > 0 && series.points[j].index >= center - half;)
      if (inliers.count(series.points[j].index)) values.push_back(series.points[j].cost);
    for (size_t j = i; j < series.points.size() && series.points[j].index <= center + half; ++j)
      if (inliers.count(series.points[j].index)) values.push_back(series.points[j].cost);
    out.push_back(values.empty() ? fit.at(center) : median(std::move(values)));
  }
  return out;
}

std::vector<StageSpan> stages_from_smoothed(std::span<const int> index, std::span<const double> smoothed,
                                            const StageOptions& options) {
  const size_t n = smoothed.size();
  if (n == 0) return {};
  std::vector<double> suffix_max(n);
  suffix_max[n - 1] = smoothed[n - 1];
  for (size_t i = n - 1; i-- > 0;) suffix_max[i] = std::max(smoothed[i], suffix_max[i + 1]);

  // First crossing that the rest of the game does not undo by more than the hysteresis.
  auto boundary = [&](size_t from, double threshold) {
    for (size_t i = from; i < n; ++i)
      if (smoothed[i] <= threshold && suffix_max[i] <= threshold + options.hysteresis) return i;
    return n;
  };
  const size_t middle = boundary(0, options.opening_floor);
  const size_t endgame = boundary(middle, options.endgame_ceiling);

  std::vector<StageSpan> spans;
  if (middle > 0) spans.push_back({Stage::Opening, index[0], index[middle - 1]});
  if (endgame > middle) spans.push_back({Stage::Middle, index[middle], index[endgame - 1]});
  if (endgame < n) spans.push_back({Stage::Endgame, index[endgame], index[n - 1]});
  return spans;
}

std::vector<StageSpan> classify_stages(const cop::CopSeries& series, const BaselineFit& fit,
                                       const StageOptions& options) {
  const auto smoothed = smoothed_baseline(series, fit, options.window);
  std::vector<int> index;
  for (const auto& p : series.points) index.push_back(p.index);
  return stages_from_smoothed(index, smoothed, options);
}

std::vector<PointOfInterest> select_points_of_interest(const std::vector<Segment>& segments,
                                                       const cop::CopSeries& series, int k) {
  if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
  std::vector<PointOfInterest> out;
  for (const auto& s : segments) out.push_back({s.start, s.end, segment_kind_name(s.kind), s.peak});

  std::vector<PointOfInterest> losses;
  for (const auto& p : series.points)
    if (p.effect && *p.effect < 0.0) losses.push_back({p.index, p.index, "Loss", -*p.effect});
  std::stable_sort(losses.begin(), losses.end(),
                   [](const auto& a, const auto& b) { return a.magnitude > b.magnitude; });
  if (losses.size() > static_cast<size_t>(k)) losses.resize(static_cast<size_t>(k));
  out.insert(out.end(), losses.begin(), losses.end());

  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.magnitude != b.magnitude) return a.magnitude > b.magnitude;
    return a.start < b.start;
  });
  return out;
}

FeatureSet analyze_features(const cop::CopSeries& series, const FeatureOptions& options) {
  FeatureSet f;
  f.baseline = fit_baseline(series, options.fit);
  f.tau = options.tau.value_or(default_tau(f.baseline));
  f.segments = detect_segments(series, f.baseline, f.tau, options.segments);
  f.stages = classify_stages(series, f.baseline, options.stages);
  f.sente = sente_states(series, f.baseline, f.tau);
  f.points_of_interest = select_points_of_interest(f.segments, series, options.points_of_interest);
  return f;
}

}  // namespace copan::features
