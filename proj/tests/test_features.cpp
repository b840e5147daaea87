#include <cmath>
#include <random>
#include <set>

#include "copan/error.hpp"
#include "copan/features.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace copan;
using namespace copan::features;
using testing::line;
using testing::series_of;

namespace {

std::vector<double> noisy_line(int n, unsigned seed, double sd = 0.3) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  auto c = line(n);
  for (auto& v : c) v += noise(rng);
  return c;
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("exact line is recovered exactly") {
    const auto fit = fit_baseline(series_of(line(216)));
    CHECK(std::abs(fit.slope + 0.05) < 1e-9);
    CHECK(std::abs(fit.intercept - 12.0) < 1e-9);
    CHECK(fit.inlier_count == 216);
    CHECK(fit.residual_scale < 1e-9);
  }

  TEST_CASE("constant series is a flat fit") {
    const auto fit = fit_baseline(series_of(std::vector<double>(30, 5.0)));
    CHECK(std::abs(fit.slope) < 1e-12);
    CHECK(std::abs(fit.intercept - 5.0) < 1e-12);
  }

  TEST_CASE("upward spikes are trimmed from the fit") {
    auto c = noisy_line(216, 3);
    std::set<int> spikes;
    for (int k = 0; k < 20; ++k) spikes.insert(5 + k * 10);
    for (int i : spikes) c[static_cast<size_t>(i)] += 8.0;
    const auto fit = fit_baseline(series_of(c));
    CHECK(std::abs(fit.slope + 0.05) <= 0.005);
    CHECK(std::abs(fit.intercept - 12.0) <= 0.2);
    for (int i : fit.inliers) CHECK(spikes.count(i) == 0);
  }

  TEST_CASE("fit preconditions") {
    CHECK_THROWS_AS(fit_baseline(series_of(line(9))), Error);
    try {
      fit_baseline(series_of(line(9)));
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::TooFewPoints);
    }
    std::vector<double> x(12, 3.0);
    std::vector<double> y(12, 1.0);
    try {
      fit_baseline(x, y);
      FAIL("expected DegenerateFit");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DegenerateFit);
    }
  }

  TEST_CASE("refitting the inliers of a converged fit reproduces it") {
    int converged = 0;
    for (unsigned seed = 1; seed <= 40; ++seed) {
      auto c = noisy_line(200, seed, 0.5);
      std::mt19937 rng(seed);
      for (int k = 0; k < 15; ++k) c[rng() % c.size()] += 6.0 + k % 4;
      const auto fit = fit_baseline(series_of(c));
      if (!fit.converged) continue;
      ++converged;
      std::vector<double> x;
      std::vector<double> y;
      for (int i : fit.inliers) {
        x.push_back(i);
        y.push_back(c[static_cast<size_t>(i)]);
      }
      const auto again = fit_baseline(x, y);
      CHECK(std::abs(again.slope - fit.slope) < 1e-9);
      CHECK(std::abs(again.intercept - fit.intercept) < 1e-9);
      CHECK(again.inlier_count == fit.inlier_count);
    }
    CHECK(converged >= 20);
  }

  TEST_CASE("without an iteration cap the fit always converges") {
    FitOptions uncapped;
    uncapped.max_iterations = 1000;
    for (unsigned seed = 1; seed <= 10; ++seed) {
      auto c = noisy_line(200, seed, 0.5);
      c[seed * 7] += 9.0;
      CHECK(fit_baseline(series_of(c), uncapped).converged);
    }
  }

  TEST_CASE("scaling costs scales the fit") {
    auto c = noisy_line(150, 7);
    c[40] += 9;
    const auto base = fit_baseline(series_of(c));
    for (double lambda : {0.5, 2.0, 10.0}) {
      std::vector<double> scaled;
      for (double v : c) scaled.push_back(v * lambda);
      const auto fit = fit_baseline(series_of(scaled));
      CHECK(fit.slope == doctest::Approx(base.slope * lambda).epsilon(1e-9));
      CHECK(fit.intercept == doctest::Approx(base.intercept * lambda).epsilon(1e-9));
      CHECK(fit.residual_scale == doctest::Approx(base.residual_scale * lambda).epsilon(1e-9));
      CHECK(sente_value(lambda * 7.0) == doctest::Approx(lambda * sente_value(7.0)));
    }
  }

  TEST_CASE("default tau") {
    BaselineFit fit;
    fit.residual_scale = 0.5;
    CHECK(default_tau(fit) == 3.0);
    fit.residual_scale = 2.5;
    CHECK(default_tau(fit) == 5.0);
  }

  TEST_CASE("segment kinds") {
    auto c = line(216);
    for (int i = 75; i <= 88; ++i) c[static_cast<size_t>(i)] += 6;         // both sides
    for (int i = 130; i <= 136; i += 2) c[static_cast<size_t>(i)] += 6;    // black turns only
    c[180] += 7;                                                           // single spike
    const auto s = series_of(c);
    const auto fit = fit_baseline(s);
    const auto segs = detect_segments(s, fit, 3.0);
    REQUIRE(segs.size() == 3);
    CHECK(segs[0].kind == SegmentKind::TwoSidedFight);
    CHECK(segs[0].start == 75);
    CHECK(segs[0].end == 88);
    CHECK_FALSE(segs[0].defender.has_value());
    CHECK(segs[1].kind == SegmentKind::OneSidedForcing);
    CHECK(segs[1].start == 130);
    CHECK(segs[1].end == 136);
    CHECK(segs[1].defender == Color::Black);
    CHECK(segs[2].kind == SegmentKind::ForcingSpike);
    CHECK(segs[2].start == 180);
    CHECK(segs[2].peak == doctest::Approx(7.0));
  }

  TEST_CASE("one-sided threshold and mixed short runs") {
    auto c = line(100);
    // White turns 41, 43, 45, 47 plus one black turn at 44: white holds 80%.
    for (int i : {41, 43, 44, 45, 47}) c[static_cast<size_t>(i)] += 6;
    // A single black/white pair is a short exchange.
    for (int i : {70, 71}) c[static_cast<size_t>(i)] += 6;
    const auto s = series_of(c);
    const auto fit = fit_baseline(s);
    auto segs = detect_segments(s, fit, 3.0);
    REQUIRE(segs.size() == 2);
    CHECK(segs[0].kind == SegmentKind::OneSidedForcing);
    CHECK(segs[0].defender == Color::White);
    CHECK(segs[1].kind == SegmentKind::TwoSidedFight);
    SegmentOptions strict;
    strict.one_sided_fraction = 0.9;
    segs = detect_segments(s, fit, 3.0, strict);
    CHECK(segs[0].kind == SegmentKind::TwoSidedFight);
  }

  TEST_CASE("pure line has no segments and is all sente") {
    const auto s = series_of(line(120));
    const auto fit = fit_baseline(s);
    CHECK(detect_segments(s, fit, default_tau(fit)).empty());
    for (const auto& st : sente_states(s, fit, default_tau(fit))) CHECK(st.state == Initiative::Sente);
    CHECK_THROWS_AS(detect_segments(s, fit, 0.0), Error);
  }

  TEST_CASE("single spike is gote only at its index") {
    auto c = line(120);
    c[50] += 10;
    const auto s = series_of(c);
    const auto fit = fit_baseline(s);
    const auto st = sente_states(s, fit, 3.0);
    CHECK(st[49].state == Initiative::Sente);
    CHECK(st[50].state == Initiative::Gote);
    CHECK(st[51].state == Initiative::Sente);
  }

  TEST_CASE("segment soundness and sente consistency on random series") {
    for (unsigned seed = 0; seed < 30; ++seed) {
      std::mt19937 rng(seed);
      auto c = noisy_line(240, seed, 0.4);
      std::uniform_int_distribution<int> where(0, 239);
      for (int k = 0; k < 25; ++k) c[static_cast<size_t>(where(rng))] += 3.0 + (rng() % 60) / 10.0;
      const auto s = series_of(c);
      const auto fit = fit_baseline(s);
      const double tau = default_tau(fit);
      const auto r = residuals(s, fit);
      const auto segs = detect_segments(s, fit, tau);
      std::map<int, int> covered;
      for (const auto& seg : segs) {
        CHECK(seg.start <= seg.end);
        CHECK(seg.defender.has_value() == (seg.kind == SegmentKind::OneSidedForcing));
        for (int i : seg.elevated) {
          CHECK(r[static_cast<size_t>(i)] > tau);
          ++covered[i];
        }
      }
      for (size_t i = 0; i < r.size(); ++i)
        if (r[i] > tau) CHECK(covered[static_cast<int>(i)] == 1);
      for (const auto& st : sente_states(s, fit, tau))
        CHECK((st.state == Initiative::Gote) == (covered.count(st.index) == 1));
    }
  }

  TEST_CASE("sente value and lead estimate") {
    CHECK(sente_value(7.0) == 3.5);
    CHECK(sente_value(13.0) == 6.5);
    CHECK(sente_value(0.0) == 0.0);
    CHECK(estimate_lead(40, 30, 6.5, 7, Color::White) == 0.0);
    CHECK(estimate_lead(40, 30, 6.5, 7, Color::Black) == 7.0);
    CHECK(estimate_lead(0, 0, 0, 0, Color::Black) == 0.0);
  }

  TEST_CASE("lead estimate is antisymmetric under a full color swap") {
    std::mt19937 rng(2);
    std::uniform_real_distribution<double> u(0, 80);
    for (int i = 0; i < 200; ++i) {
      const double b = u(rng);
      const double w = u(rng);
      const double komi = u(rng) / 10;
      const double cost = u(rng) / 4;
      for (Color side : {Color::Black, Color::White})
        CHECK(estimate_lead(w, b, -komi, cost, opposite(side)) ==
              doctest::Approx(-estimate_lead(b, w, komi, cost, side)));
    }
  }

  TEST_CASE("stages from a smoothed line") {
    std::vector<int> idx;
    std::vector<double> b;
    for (int i = 0; i < 216; ++i) {
      idx.push_back(i);
      b.push_back(12.0 - 0.05 * i);
    }
    const auto spans = stages_from_smoothed(idx, b);
    REQUIRE(spans.size() == 3);
    CHECK(spans[0] == StageSpan{Stage::Opening, 0, 39});
    CHECK(spans[1] == StageSpan{Stage::Middle, 40, 99});
    CHECK(spans[2] == StageSpan{Stage::Endgame, 100, 215});
  }

  TEST_CASE("constant smoothed series give one stage") {
    std::vector<int> idx(50);
    for (int i = 0; i < 50; ++i) idx[static_cast<size_t>(i)] = i;
    const std::vector<double> six(50, 6.0);
    const std::vector<double> eleven(50, 11.0);
    CHECK(stages_from_smoothed(idx, six) == std::vector<StageSpan>{{Stage::Endgame, 0, 49}});
    CHECK(stages_from_smoothed(idx, eleven) == std::vector<StageSpan>{{Stage::Opening, 0, 49}});
  }

  TEST_CASE("hysteresis ignores brief dips and keeps stages monotone") {
    std::vector<int> idx;
    std::vector<double> b;
    for (int i = 0; i < 100; ++i) {
      idx.push_back(i);
      double v = 12.0 - 0.08 * i;
      if (i == 10) v = 9.5;       // early dip below 10 that recovers
      if (i >= 66 && i < 69) v = 7.4;  // bounce within 0.5 of 7
      b.push_back(v);
    }
    const auto spans = stages_from_smoothed(idx, b);
    REQUIRE(spans.size() == 3);
    CHECK(spans[0].stage == Stage::Opening);
    CHECK(spans[0].end == 24);
    CHECK(spans[1].stage == Stage::Middle);
    CHECK(spans[2].stage == Stage::Endgame);
    CHECK(spans[2].start == 63);
    int expected = 0;
    for (const auto& s : spans) {
      CHECK(s.start == expected);
      expected = s.end + 1;
    }
    CHECK(expected == 100);
  }

  TEST_CASE("classify_stages smooths inliers and ignores spikes") {
    auto c = line(216);
    for (int i = 60; i < 70; ++i) c[static_cast<size_t>(i)] += 8;
    const auto s = series_of(c);
    const auto spans = classify_stages(s, fit_baseline(s));
    REQUIRE(spans.size() == 3);
    CHECK(spans[1].start == 40);
    CHECK(spans[2].start == 100);
  }

  TEST_CASE("stage monotonicity on random series") {
    for (unsigned seed = 0; seed < 20; ++seed) {
      auto c = noisy_line(230, seed, 1.5);
      const auto s = series_of(c);
      const auto spans = classify_stages(s, fit_baseline(s));
      for (size_t i = 1; i < spans.size(); ++i) {
        CHECK(static_cast<int>(spans[i].stage) > static_cast<int>(spans[i - 1].stage));
        CHECK(spans[i].start == spans[i - 1].end + 1);
      }
      CHECK(spans.front().start == 0);
      CHECK(spans.back().end == 229);
    }
  }

  TEST_CASE("points of interest ranking") {
    std::vector<Segment> segs = {{10, 14, SegmentKind::TwoSidedFight, std::nullopt, 9.0, {10, 12, 14}},
                                 {50, 50, SegmentKind::ForcingSpike, std::nullopt, 4.0, {50}}};
    auto s = series_of(line(80));
    CHECK(select_points_of_interest(segs, s, 2).front().kind == "TwoSidedFight");
    CHECK(select_points_of_interest({}, s, 3).empty());
    s.points[60].effect = -4.0;
    s.points[20].effect = -1.0;
    s.points[30].effect = -0.5;
    const auto poi = select_points_of_interest(segs, s, 2);
    REQUIRE(poi.size() == 4);
    CHECK(poi[0].start == 10);
    CHECK(poi[1].kind == "ForcingSpike");  // ties on 4.0: earlier index first
    CHECK(poi[2] == PointOfInterest{60, 60, "Loss", 4.0});
    CHECK(poi[3] == PointOfInterest{20, 20, "Loss", 1.0});
    CHECK_THROWS_AS(select_points_of_interest(segs, s, 0), Error);
  }

  TEST_CASE("analyze_features bundles everything") {
    auto c = line(216);
    c[100] += 9;
    const auto f = analyze_features(series_of(c));
    CHECK(f.tau == 3.0);
    CHECK(f.segments.size() == 1);
    CHECK(f.sente.size() == 216);
    CHECK(f.stages.size() == 3);
    CHECK(f.points_of_interest.size() == 1);
    FeatureOptions o;
    o.tau = 10.0;
    CHECK(analyze_features(series_of(c), o).segments.empty());
  }
}
