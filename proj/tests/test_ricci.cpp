#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "warplab/ricci.hpp"

using namespace warplab;

namespace {

DoublyWarpedMetric nabonnand(real alpha, int k) {
  return DoublyWarpedMetric(k, nabonnand_f(), power_decay_h(alpha));
}

// Frozen from a symbolic computation of the full coordinate Ricci tensor
// (sympy): for alpha = 1/2, k = 8 the three values are
//   radial 13/(1+r²)², circle (2r²+9)/(1+r²)², and the sphere value below.
struct Frozen {
  double r, radial, circle, sphere;
};
constexpr Frozen kNabonnandHalfK8[] = {
    {1, 3.25, 2.75, 6.774494936611665341611821},
    {3, 0.13, 0.27, 2.316771513464295035999139},
    {5, 0.01923076923076923076923077, 0.08727810650887573964497041, 1.383672209368109929922696},
    {10, 0.001274384864228997157141457, 0.02048818743260464660327419, 0.6932403376898141471674807},
};

}  // namespace

TEST(Jet, MatchesDividedDifferences) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> logr(-2.0, 4.0);
  const WarpingFunction fns[] = {nabonnand_f(), power_decay_h(0.5L), power_decay_h(1.2L), sine_f()};
  for (const auto& fn : fns) {
    for (int i = 0; i < 50; ++i) {
      const real r = std::pow(10.0L, static_cast<real>(logr(rng)));
      if (fn.label == "sine_f" && r > 3) continue;
      auto central = [&](real s) {
        const real d1 = (fn.value(r + s) - fn.value(r - s)) / (2 * s);
        const real d2 = (fn.value(r + s) - 2 * fn.value(r) + fn.value(r - s)) / (s * s);
        return std::pair{d1, d2};
      };
      const real s = 1e-3L * r;
      const auto [a1, a2] = central(s);
      const auto [b1, b2] = central(s / 2);
      const real d1 = (4 * b1 - a1) / 3;
      const real d2 = (4 * b2 - a2) / 3;
      const Jet2 j = fn(r);
      EXPECT_NEAR(static_cast<double>(j.d1), static_cast<double>(d1),
                  1e-6 * static_cast<double>(std::abs(d1) + std::abs(j.value) / r))
          << fn.label << " r=" << static_cast<double>(r);
      EXPECT_NEAR(static_cast<double>(j.d2), static_cast<double>(d2),
                  1e-6 * static_cast<double>(std::abs(d2) + std::abs(j.value) / (r * r)))
          << fn.label << " r=" << static_cast<double>(r);
    }
  }
}

TEST(RicciClosedForm, FlatConeIsZero) {
  const DoublyWarpedMetric flat(2, linear_f(), constant_h(1));
  EXPECT_EQ(ricci_radial(flat, 1), 0);
  EXPECT_EQ(ricci_circle(flat, 1), 0);
  EXPECT_EQ(ricci_sphere(flat, 1), 0);
}

TEST(RicciClosedForm, NabonnandFrozenValues) {
  const auto m = nabonnand(0.5L, 8);
  for (const auto& v : kNabonnandHalfK8) {
    EXPECT_NEAR(static_cast<double>(ricci_radial(m, v.r)), v.radial, 1e-15 * v.radial + 1e-18);
    EXPECT_NEAR(static_cast<double>(ricci_circle(m, v.r)), v.circle, 1e-15 * v.circle);
    EXPECT_NEAR(static_cast<double>(ricci_sphere(m, v.r)), v.sphere, 1e-14 * v.sphere);
  }
}

TEST(RicciClosedForm, AxisLimits) {
  // h''(0) = -2 alpha and f''/f -> -3/2 give 2 alpha + (3/2) k.
  const auto m = nabonnand(0.5L, 8);
  EXPECT_NEAR(static_cast<double>(ricci_radial(m, 0)), 13.0, 1e-9);
  EXPECT_NEAR(static_cast<double>(ricci_circle(m, 0)), 9.0, 1e-9);
  EXPECT_NEAR(static_cast<double>(ricci_sphere(m, 0)), 13.0, 1e-9);
}

TEST(RicciClosedForm, NonPositiveWarpingThrows) {
  const DoublyWarpedMetric bad(2, sine_f(), constant_h(1));
  try {
    (void)ricci_radial(bad, 4);  // sin 4 < 0
    FAIL() << "expected NonPositiveWarping";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveWarping);
  }
}

TEST(RicciClosedForm, CircleSignStructure) {
  // h' < 0, h'' <= 0, f' > 0 makes both circle terms nonnegative, one positive.
  const WarpingFunction concave{[](real r) {
                                  const Jet2 x = Jet2::variable(r);
                                  return 10 - x * x;
                                },
                                "concave"};
  const DoublyWarpedMetric m(3, nabonnand_f(), concave);
  for (real r : {0.1L, 0.5L, 1.0L, 2.0L, 3.0L}) EXPECT_GT(ricci_circle(m, r), 0);
}

TEST(RicciOracle, FlatCalibration) {
  const DoublyWarpedMetric flat(2, linear_f(), constant_h(1));
  const auto rep = ricci_numeric_oracle(flat, 2);
  EXPECT_NEAR(static_cast<double>(rep.ric_radial), 0, 1e-7);
  EXPECT_NEAR(static_cast<double>(rep.ric_circle), 0, 1e-7);
  EXPECT_NEAR(static_cast<double>(rep.ric_sphere), 0, 1e-7);
}

TEST(RicciOracle, RoundSphereTimesCircle) {
  const DoublyWarpedMetric round(2, sine_f(), constant_h(1));
  const auto rep = ricci_numeric_oracle(round, kPi / 2);
  EXPECT_NEAR(static_cast<double>(rep.ric_radial), 2, 1e-5);
  EXPECT_NEAR(static_cast<double>(rep.ric_sphere), 2, 1e-5);
  EXPECT_NEAR(static_cast<double>(rep.ric_circle), 0, 1e-5);
}

TEST(RicciOracle, MatchesFrozenSymbolicValues) {
  const auto m = nabonnand(0.5L, 8);
  for (const auto& v : kNabonnandHalfK8) {
    const auto rep = ricci_numeric_oracle(m, v.r);
    EXPECT_NEAR(static_cast<double>(rep.ric_radial), v.radial, 1e-6 * v.radial);
    EXPECT_NEAR(static_cast<double>(rep.ric_circle), v.circle, 1e-6 * v.circle);
    EXPECT_NEAR(static_cast<double>(rep.ric_sphere), v.sphere, 1e-6 * v.sphere);
  }
}

TEST(RicciOracle, AgreesWithClosedFormOnRandomRadii) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> logr(-3.0, 4.0);
  const DoublyWarpedMetric models[] = {nabonnand(0.5L, 8), nabonnand(1.2L, 3),
                                       DoublyWarpedMetric(2, linear_f(), power_decay_h(0.7L))};
  for (const auto& m : models) {
    for (int i = 0; i < 15; ++i) {
      const real r = std::pow(10.0L, static_cast<real>(logr(rng)));
      const auto oracle = ricci_numeric_oracle(m, r);
      const auto closed = ricci_report(m, r);
      const auto terms = ricci_terms(m.f(r), m.h(r));
      EXPECT_LE(std::abs(oracle.ric_radial - closed.ric_radial),
                1e-5L * std::max(std::abs(closed.ric_radial), terms.radial.scale(m.k)));
      EXPECT_LE(std::abs(oracle.ric_circle - closed.ric_circle),
                1e-5L * std::max(std::abs(closed.ric_circle), terms.circle.scale(m.k)));
      EXPECT_LE(std::abs(oracle.ric_sphere - closed.ric_sphere),
                1e-5L * std::max(std::abs(closed.ric_sphere), terms.sphere.scale(m.k)));
    }
  }
}

TEST(RicciOracle, ImpossibleStepIsRejected) {
  OracleOptions opts;
  opts.relative_step = 0.9L;
  EXPECT_THROW((void)ricci_numeric_oracle(nabonnand(0.5L, 8), 3, opts), Error);
}

TEST(RicciGrid, PositivityThreshold) {
  const auto grid = log_grid(1e-3L, 1e6L, 4000);
  EXPECT_TRUE(ricci_positive_on_grid(nabonnand(0.5L, 8), grid).positive);
  const auto k1 = ricci_positive_on_grid(nabonnand(0.5L, 1), grid);
  EXPECT_FALSE(k1.positive);
  EXPECT_LT(k1.worst.ric_circle, 0);
  const DoublyWarpedMetric flat(2, linear_f(), constant_h(1));
  EXPECT_FALSE(ricci_positive_on_grid(flat, grid).positive);
}

TEST(RicciGrid, Threshold) {
  EXPECT_EQ(nabonnand_threshold(0.5L), 8);
  EXPECT_EQ(nabonnand_threshold(1.5L), 48);
}

TEST(WarpingRoles, NabonnandSatisfiesRoleConditions) {
  const auto grid = log_grid(1e-3L, 1e6L, 500);
  EXPECT_TRUE(check_f_role(nabonnand_f(), grid).ok);
  EXPECT_TRUE(check_h_role(power_decay_h(0.6L), grid).ok);
  EXPECT_FALSE(check_f_role(linear_f(), grid).ok);
  EXPECT_FALSE(check_h_role(constant_h(1), grid).ok);
}
