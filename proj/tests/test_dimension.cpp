#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "warplab/dimension.hpp"

using namespace warplab;

namespace {

std::shared_ptr<OrbitTable> pure_table() {
  static auto t = std::make_shared<OrbitTable>(power_decay_halfplane(0.5L));
  return t;
}

// 50 pairs: R in {1, 2, 4, 7, 10}, R/λ log-spaced over [1.5, 150].
std::vector<std::pair<real, real>> sandwich_pairs() {
  std::vector<std::pair<real, real>> pairs;
  for (real R : {1.0L, 2.0L, 4.0L, 7.0L, 10.0L}) {
    for (real q : log_grid(1.5L, 150, 10)) pairs.push_back({R, R / q});
  }
  return pairs;
}

}  // namespace

TEST(Capacity, UnitSpacedLine) {
  const auto s = LinearOrbitMetric::uniform(1);
  EXPECT_EQ(capacity(s, 10, 1), 21);
  EXPECT_EQ(capacity(s, 10, 2.5L), 7);
  EXPECT_EQ(capacity_exhaustive(s, 10, 2.5L), 7);
  EXPECT_EQ(capacity(s, 10, 3), 7);  // closed separation: spacing 3 is allowed
  EXPECT_EQ(capacity(s, 10, 25), 1);
  EXPECT_EQ(capacity(s, 0.5L, 0.1L), 1);
  EXPECT_EQ(s.ball_count(10), 21);  // closed ball
}

TEST(Capacity, SweepMatchesExhaustiveSearch) {
  std::mt19937_64 rng(20240611);
  int checked = 0;
  for (int t = 0; t < 100; ++t) {
    const auto d = random_subadditive_table(40, rng);
    const auto s = LinearOrbitMetric::from_table(d);
    ASSERT_TRUE(check_metric_invariants(s, 20).ok);
    // Radii and separations on and between table values, so ties are hit.
    std::vector<real> radii, seps;
    for (std::size_t i = 0; i < 12; ++i) {
      radii.push_back(d[i]);
      radii.push_back(d[i] + 0.125L);
      seps.push_back(d[i]);
      seps.push_back(d[i] + 0.125L);
    }
    for (real R : radii) {
      if (s.ball_count(R) > 25) continue;
      for (real lambda : seps) {
        EXPECT_EQ(capacity(s, R, lambda), capacity_exhaustive(s, R, lambda))
            << "table " << t << " R=" << static_cast<double>(R) << " λ=" << static_cast<double>(lambda);
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 10000);
}

TEST(Capacity, ExhaustiveRefusesLargeBalls) {
  EXPECT_THROW(capacity_exhaustive(LinearOrbitMetric::uniform(1), 13, 1), Error);
}

TEST(MetricInvariants, NonMonotonePerturbationTrips) {
  std::mt19937_64 rng(7);
  auto d = random_subadditive_table(40, rng);
  EXPECT_TRUE(check_metric_invariants(LinearOrbitMetric::from_table(d), 20).ok);
  d[9] = d[8] - 0.5L;
  const InvariantReport rep = check_metric_invariants(LinearOrbitMetric::from_table(d), 20);
  EXPECT_FALSE(rep.ok);
  EXPECT_NE(rep.diagnostic.find("decreases"), std::string::npos);
}

TEST(MetricInvariants, OrbitTableMetric) {
  const auto s = LinearOrbitMetric::from_orbits(pure_table(), 100);
  EXPECT_TRUE(check_metric_invariants(s, 200, 300).ok);
  EXPECT_NEAR(static_cast<double>(s.d(10)), M_PI * std::sqrt(39.0) / 100, 1e-14);
  EXPECT_EQ(s.max_index_le(s.d(10)), 10);
  EXPECT_EQ(s.min_index_ge(s.d(10)), 10);
  EXPECT_EQ(s.min_index_ge(s.d(10) * (1 + 1e-12L)), 11);
}

TEST(GrowthConstants, UnitLine) {
  const GrowthFit fit = fit_growth_constants(LinearOrbitMetric::uniform(1), 1, 1, 100);
  EXPECT_GE(fit.c1, 1);
  EXPECT_LE(fit.c2, 3);
  EXPECT_FALSE(fit.misfit);
  const GrowthFit bad = fit_growth_constants(LinearOrbitMetric::uniform(1), 5, 1, 100);
  EXPECT_TRUE(bad.misfit);
  EXPECT_GT(bad.ratio, 1e6);
  EXPECT_THROW(fit_growth_constants(LinearOrbitMetric::uniform(1), 1, 1, 5), Error);
}

TEST(GrowthConstants, PureOrbitQuadratic) {
  const auto s = LinearOrbitMetric::from_orbits(pure_table(), 1000);
  const GrowthFit fit = fit_growth_constants(s, 2, 0.05L, 10);
  EXPECT_GT(fit.c1, 0);
  EXPECT_TRUE(std::isfinite(fit.c2));
  EXPECT_FALSE(fit.misfit);
  // #B_R ≈ 2N + 1 with d_N = π√(4N - 1) ≈ R·scale.
  EXPECT_NEAR(static_cast<double>(fit.c2 / (1e6L / (2 * kPi * kPi))), 1, 0.2);
}

TEST(CapacitySandwich, UnitLine) {
  const auto s = LinearOrbitMetric::uniform(1);
  std::vector<std::pair<real, real>> pairs;
  for (real R : {10.0L, 30.0L, 100.0L}) {
    for (real lambda : {1.0L, 2.0L, 3.5L, 7.0L}) pairs.push_back({R, lambda});
  }
  CapacityProfile p = capacity_profile(s, pairs);
  const GrowthFit fit = fit_growth_constants(s, 1, 1, 100);
  EXPECT_TRUE(check_capacity_sandwich(p, 1, fit.c1, fit.c2).ok);
  EXPECT_TRUE(check_profile_monotone(p).ok);
  EXPECT_NEAR(static_cast<double>(box_dimension_fit(p)), 1, 0.05);
}

TEST(CapacitySandwich, PureOrbit) {
  const auto s = LinearOrbitMetric::from_orbits(pure_table(), 1000);
  CapacityProfile p = capacity_profile(s, sandwich_pairs());
  ASSERT_EQ(p.samples.size(), 50u);
  const GrowthFit fit = fit_growth_constants(s, 2, 1.0L / 150, 10);
  const SandwichReport rep = check_capacity_sandwich(p, 2, fit.c1, fit.c2);
  EXPECT_TRUE(rep.ok) << rep.violations.size() << " violations";
  EXPECT_GE(rep.worst_lower_margin, 1);
  EXPECT_GE(rep.worst_upper_margin, 1);
  EXPECT_TRUE(check_profile_monotone(p).ok);
  EXPECT_NEAR(static_cast<double>(box_dimension_fit(p)), 2, 0.2);
  for (const auto& [R, lambda] : sandwich_pairs()) EXPECT_TRUE(check_two_step_chain(s, R, lambda).ok);
}

TEST(CapacitySandwich, WrongExponentIsReported) {
  const auto s = LinearOrbitMetric::from_orbits(pure_table(), 1000);
  CapacityProfile p = capacity_profile(s, sandwich_pairs());
  const GrowthFit fit = fit_growth_constants(s, 2, 1.0L / 150, 10);
  const SandwichReport rep = check_capacity_sandwich(p, 3, fit.c1, fit.c2);
  EXPECT_FALSE(rep.ok);
  EXPECT_FALSE(rep.violations.empty());
}

TEST(BoxDimension, OscillatingModelAtBetaScale) {
  // Rescaled by 2R_12, where the steep exponent 1.2 governs distances.
  const OscillationParams params;
  const auto ladder = build_scale_ladder(params);
  auto table = std::make_shared<OrbitTable>(halfplane(build_oscillating_h(params), "oscillating"));
  const auto s = LinearOrbitMetric::from_orbits(table, 2 * ladder.rows[0][2]);
  std::vector<std::pair<real, real>> pairs;
  for (real R : {1e4L, 3e4L, 1e5L}) {
    for (real q : log_grid(1.5L, 150, 10)) pairs.push_back({R, R / q});
  }
  CapacityProfile p = capacity_profile(s, pairs);
  EXPECT_NEAR(static_cast<double>(box_dimension_fit(p)), 1 + 2 * 1.2, 0.3);
}

TEST(CapacityProfile, RejectsBadPairs) {
  EXPECT_THROW(capacity_profile(LinearOrbitMetric::uniform(1), {{1, 2}}), Error);
  CapacityProfile p = capacity_profile(LinearOrbitMetric::uniform(1), {{10, 1}, {10, 2}});
  EXPECT_THROW(box_dimension_fit(p), Error);
}

TEST(Hausdorff, IntervalCalibration) {
  const real delta = 0.01L, R = 5;
  const auto s = LinearOrbitMetric::uniform(delta);
  const HausdorffEstimate up = hausdorff_upper(s, 1, R, delta);
  EXPECT_GE(up.content, R / 3);
  EXPECT_LE(up.content, 3 * R);
  const HausdorffEstimate low = hausdorff_greedy(s, 1, R, 10 * delta);
  EXPECT_GE(low.content, R / 3);
  EXPECT_LE(low.content, 3 * R);
}

TEST(Hausdorff, ZeroExponentCountsBalls) {
  const auto s = LinearOrbitMetric::uniform(1);
  const HausdorffEstimate e = hausdorff_upper(s, 0, 20, 3);
  EXPECT_EQ(e.content, capacity(s, 20, 3));
  EXPECT_EQ(e.content, e.balls);
}

TEST(Hausdorff, PureOrbitContentsWithinBounds) {
  const auto s = LinearOrbitMetric::from_orbits(pure_table(), 1000);
  const real R = 10;
  const GrowthFit fit = fit_growth_constants(s, 2, 0.05L, R);
  const ContentBounds b = hausdorff_bounds(2, R, fit.c1, fit.c2);
  std::vector<real> uppers;
  for (real delta : {1.0L, 0.5L, 0.25L, 0.125L}) {
    const HausdorffEstimate up = hausdorff_upper(s, 2, R, delta);
    const HausdorffEstimate low = hausdorff_greedy(s, 2, R, delta);
    EXPECT_LE(up.content, b.upper) << static_cast<double>(delta);
    EXPECT_GE(low.content, b.lower) << static_cast<double>(delta);
    EXPECT_LE(low.content, up.content * 3) << static_cast<double>(delta);
    uppers.push_back(up.content);
  }
  EXPECT_TRUE(content_trend_ok(uppers));
  EXPECT_FALSE(content_trend_ok({1, 2}));
  EXPECT_TRUE(content_trend_ok({1, 1.04L, 0.9L}));
}

TEST(Csv, Columns) {
  CapacityProfile p = capacity_profile(LinearOrbitMetric::uniform(1), {{10, 1}, {10, 2}});
  std::ostringstream a, b;
  write_profile_csv(a, p);
  write_fit_csv(b, p);
  EXPECT_EQ(a.str().substr(0, 13), "R,lambda,cap\n");
  EXPECT_EQ(b.str().substr(0, 29), "k_hat,c1_hat,c2_hat,residual\n");
  const std::string text = a.str();
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);
}
