#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "warplab/grushin.hpp"

using namespace warplab;

namespace {

// α = 1/2, arc from level t0 turning at a:
// Δw = a²(π/2 - asin(t0/a)) + t0√(a² - t0²), length = 2a(π/2 - asin(t0/a)).
real half_dw(real t0, real a) { return a * a * (kPi / 2 - std::asin(t0 / a)) + t0 * std::sqrt(a * a - t0 * t0); }
real half_len(real t0, real a) { return 2 * a * (kPi / 2 - std::asin(t0 / a)); }

const SmoothedH& oscillating() {
  static const SmoothedH hs = build_oscillating_h(OscillationParams{});
  return hs;
}

std::function<Jet2(real)> osc_h() {
  return [](real r) { return oscillating()(r); };
}

}  // namespace

TEST(Grushin, TrivialPairs) {
  const GrushinMetric g{0.5L};
  EXPECT_EQ(grushin_distance(g, {1, 0}, {2, 0}).d, 1);
  EXPECT_EQ(grushin_distance(g, {1, 0}, {2, 0}).kind, PairKind::Radial);
  EXPECT_EQ(grushin_distance(g, {0.7L, 3}, {0.7L, 3}).d, 0);
  EXPECT_THROW(GrushinMetric{0.3L}.halfplane(), Error);
}

TEST(Grushin, TurningPointAtTwo) {
  EXPECT_NEAR(static_cast<double>(solve_turning_point(GrushinMetric{0.5L}.halfplane(), 2)), 0.5, 1e-15);
}

TEST(Grushin, EqualLevelClosedForm) {
  const GrushinMetric g{0.5L};
  for (real a : {1.001L, 1.2L, 2.0L, 7.0L}) {
    const PairDistance d = grushin_distance(g, {1, 0}, {1, half_dw(1, a)});
    EXPECT_EQ(d.kind, PairKind::EqualLevel);
    EXPECT_NEAR(static_cast<double>(d.t_max), static_cast<double>(a), 1e-12 * static_cast<double>(a));
    EXPECT_LE(std::abs(d.d / half_len(1, a) - 1), 1e-10L) << static_cast<double>(a);
  }
}

TEST(Grushin, EqualLevelMatchesGridOracle) {
  const GrushinMetric g{0.5L};
  const real w = 0.5L;
  const PairDistance arc = grushin_distance(g, {1, 0}, {1, w});
  DijkstraOptions o;
  o.r_lo = 0.5L;
  o.r_hi = 0.5L + 300 * 0.005L;
  o.nr = 300;
  o.v_lo = 0;
  o.v_hi = w;
  o.nv = 100;
  const DijkstraResult r = dijkstra_distance_oracle([](real t) { return 1 / t; }, {1, 0}, {1, w}, o);
  EXPECT_LE(std::abs(r.distance / arc.d - 1), 0.02L) << static_cast<double>(r.distance) << " vs "
                                                    << static_cast<double>(arc.d);
}

TEST(Grushin, GeneralPairOnGrid) {
  const GrushinMetric g{0.5L};
  const PairDistance d = grushin_distance(g, {1, 0}, {2, 1});
  EXPECT_EQ(d.kind, PairKind::Grid);
  EXPECT_GE(d.d, 1 * 0.99L);
  const real via_top = 1 + grushin_distance(g, {2, 0}, {2, 1}).d;
  const real via_bottom = grushin_distance(g, {1, 0}, {1, 1}).d + 1;
  EXPECT_LE(d.d, std::min(via_top, via_bottom) * 1.01L);
  EXPECT_EQ(d.eps_sensitivity, 0);
}

TEST(Grushin, EpsilonSensitivityIsReported) {
  const GrushinMetric g{0.5L};
  const PairDistance d = grushin_distance(g, {0.002L, 0}, {0.5L, 0.3L});
  EXPECT_EQ(d.kind, PairKind::Grid);
  EXPECT_GE(d.eps_sensitivity, 0);
  EXPECT_LT(d.eps_sensitivity, 0.05L * d.d);
}

TEST(Grushin, GridBudgetGivesUnsupportedPair) {
  GridPairOptions tiny;
  tiny.max_edges = 1000;
  try {
    grushin_distance(GrushinMetric{0.5L}, {1, 0}, {2, 1}, tiny);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedPair);
  }
}

TEST(Grushin, SelfSimilarity) {
  for (real alpha : {0.5L, 0.6L, 1.2L}) {
    const GrushinMetric g{alpha};
    const auto probes = probe_pairs(10, 3);
    for (const auto& p : probes) {
      for (real s : {0.5L, 2.0L}) EXPECT_LT(self_similarity_error(g, p, s), 0.01L);
    }
  }
}

TEST(Rescaled, RadialPairsAreLambdaInvariant) {
  const RegimeWindow w{0, 1e2000L, 0.5L, 1};
  for (real lambda : {10.0L, 1e3L, 1e5L}) {
    const RescaledModel m = rescale(power_decay_h(0.5L).eval, 0.5L, lambda, w);
    EXPECT_EQ(rescaled_distance(m, {0.3L, 1}, {4, 1}).d, 3.7L);
  }
}

TEST(Rescaled, CoefficientConvergesMonotonically) {
  const RegimeWindow w{0, 1e2000L, 0.5L, 1};
  for (real t : {0.2L, 1.0L, 5.0L}) {
    real prev = 1;
    for (real lambda : {10.0L, 100.0L, 1e3L, 1e4L}) {
      const RescaledModel m = rescale(power_decay_h(0.5L).eval, 0.5L, lambda, w);
      const real e = coefficient_error(m, t);
      EXPECT_LT(e, prev);
      // (λ²/(1+λ²t²))^(2α) ≤ t^(-4α)
      const real h = m.halfplane().value(t);
      EXPECT_LE(h * h, std::pow(t, -2.0L) * (1 + 1e-18L));
      prev = e;
    }
  }
}

TEST(Rescaled, RegimeWindowsOfTheOscillatingModel) {
  const auto ladder = build_scale_ladder(OscillationParams{});
  const RegimeWindow a0 = regime_window(oscillating(), 0, false);
  EXPECT_EQ(a0.lo, 0);
  EXPECT_NEAR(static_cast<double>(a0.hi), 80, 1e-12);
  EXPECT_EQ(a0.exponent, 0.6L);
  EXPECT_EQ(a0.constant, 1);
  const RegimeWindow b0 = regime_window(oscillating(), 0, true);
  EXPECT_EQ(b0.exponent, 1.2L);
  EXPECT_NEAR(static_cast<double>(b0.lo / (1.2L * ladder.rows[0][2])), 1, 1e-15);
  const RegimeWindow a1 = regime_window(oscillating(), 1, false);
  EXPECT_NEAR(static_cast<double>(a1.lo / (1.2L * ladder.rows[1][0])), 1, 1e-15);
  EXPECT_THROW(regime_window(oscillating(), 5, true), Error);
}

TEST(Rescaled, EqualLevelPairInAlphaAndBetaWindows) {
  for (auto [row, beta] : {std::pair{std::size_t{1}, false}, std::pair{std::size_t{0}, true}}) {
    const RegimeWindow w = regime_window(oscillating(), row, beta);
    const real lambda = std::sqrt(w.lo * w.hi);
    const RescaledModel m = rescale(osc_h(), w.exponent, lambda, w);
    const GrushinMetric g{w.exponent};
    const Point p1{1, 0}, p2{1, 2};
    const real d = rescaled_distance(m, p1, p2).d;
    const real ref = grushin_distance(g, p1, p2).d;
    EXPECT_LE(std::abs(d / ref - 1), 0.05L) << (beta ? "beta" : "alpha");
  }
}

TEST(Convergence, PureHalfModel) {
  const RegimeWindow w{0, 1e2000L, 0.5L, 1};
  const auto probes = probe_pairs(20, 11);
  const ComparisonReport rep = convergence_report(power_decay_h(0.5L).eval, w, probes, {1e2L, 1e3L, 1e4L});
  ASSERT_EQ(rep.rows.size(), 3u);
  EXPECT_TRUE(rep.trend);
  EXPECT_LT(rep.rows.back().max_rel_err, 0.05L);
  for (const auto& row : rep.rows) EXPECT_EQ(row.counted, 20u);
}

TEST(Convergence, OscillatingAlphaPeriodOne) {
  const RegimeWindow w = regime_window(oscillating(), 0, false);
  const auto probes = probe_pairs(20, 11);
  const ComparisonReport rep = convergence_report(osc_h(), w, probes, {2, 4, 8, 16});
  EXPECT_TRUE(rep.trend);
  for (const auto& row : rep.rows) EXPECT_GT(row.counted, 0u);
}

TEST(Convergence, ProbesOutsideTheWindowAreExcluded) {
  const RegimeWindow w = regime_window(oscillating(), 0, true);
  const std::vector<ProbePair> probes = {{{0.2L, 0}, {0.2L, 1}}, {{1, 0}, {1, 1}}};
  // At λ = 2e6, λ·0.2 falls below the start of the β window.
  const ComparisonReport rep = convergence_report(osc_h(), w, probes, {2e6L, 1e7L, 1e8L, 1e9L});
  EXPECT_EQ(rep.rows[0].excluded, 1u);
  EXPECT_EQ(rep.rows[0].counted, 1u);
  EXPECT_THROW(convergence_report(osc_h(), w, probes, {2, 3, 4}), Error);
}

TEST(Convergence, CsvColumns) {
  const RegimeWindow w{0, 1e2000L, 0.5L, 1};
  const ComparisonReport rep = convergence_report(power_decay_h(0.5L).eval, w, probe_pairs(4, 1), {1e2L, 1e3L, 1e4L});
  std::ostringstream os;
  write_comparison_csv(os, rep);
  const std::string text = os.str();
  EXPECT_EQ(text.substr(0, 19), "lambda,max_rel_err\n");
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4);
}
