#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "warplab/example.hpp"

using namespace warplab;

namespace {

// 60-digit mpmath evaluation of the junction recursions for
// alpha=0.6, beta=1.2, A=0.3, B=1.5, R11=100.
constexpr long double kLadder[2][5] = {
    {0, 100, 1000150.003749437577334259L, 5001500150000.0L, 1.251125450101263501012534e+38L},
    {1.251125450101263501012534e+38L, 7.82657445945544593278009e+76L, 4.794189142310927968357751e+230L,
     1.149212476612599557189319e+462L, 1.517752640138217857658069e+1386L},
};
constexpr long double kCPlus1 = 3981.43000019705407197223L;       // (1+R11²)^(B-alpha)
constexpr long double kCMinus1 = 1.385541329373959443241658e-23L;  // (1+R13²)^(A-beta)

void expect_rel(long double got, long double want, long double tol) {
  EXPECT_LE(std::abs(got - want), tol * std::abs(want)) << static_cast<double>(got) << " vs "
                                                        << static_cast<double>(want);
}

const SmoothedH& oscillating() {
  static const SmoothedH hs = build_oscillating_h(OscillationParams{});
  return hs;
}

}  // namespace

TEST(ScaleLadder, MatchesHighPrecisionRecursion) {
  const auto ladder = build_scale_ladder(OscillationParams{});
  ASSERT_EQ(ladder.rows.size(), 2u);
  EXPECT_FALSE(ladder.overflow);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 5; ++j) {
      if (kLadder[i][j] == 0) {
        EXPECT_EQ(ladder.rows[i][j], 0);
      } else {
        expect_rel(ladder.rows[i][j], kLadder[i][j], 1e-14L);
      }
    }
  }
}

TEST(ScaleLadder, SquareRelations) {
  OscillationParams p;
  p.R11 = 250;
  const auto ladder = build_scale_ladder(p);
  for (std::size_t i = 0; i < ladder.rows.size(); ++i) {
    const auto& row = ladder.rows[i];
    EXPECT_EQ(row[3], 5 * row[2] * row[2]);
    if (i + 1 < ladder.rows.size()) {
      EXPECT_EQ(ladder.rows[i + 1][1], 5 * row[4] * row[4]);
      EXPECT_EQ(ladder.rows[i + 1][0], row[4]);
    }
    for (int j = 1; j < 4; ++j) EXPECT_GE(row[j + 1], 5 * row[j]);
  }
}

TEST(ScaleLadder, ZeroPeriodsIsEmpty) {
  OscillationParams p;
  p.periods = 0;
  const auto ladder = build_scale_ladder(p);
  EXPECT_TRUE(ladder.rows.empty());
  EXPECT_FALSE(ladder.overflow);
}

TEST(ScaleLadder, OverflowTruncatesWithFlag) {
  OscillationParams p;
  p.periods = 3;
  const auto ladder = build_scale_ladder(p);
  EXPECT_TRUE(ladder.overflow);
  EXPECT_EQ(ladder.rows.size(), 2u);
  const auto small = build_scale_ladder(OscillationParams{}, 1e300L);
  EXPECT_TRUE(small.overflow);
  EXPECT_EQ(small.rows.size(), 1u);
}

TEST(ScaleLadder, RejectsBadParameters) {
  OscillationParams p;
  p.B = 1.1L;  // B <= beta
  EXPECT_THROW(build_scale_ladder(p), Error);
  p = {};
  p.R11 = 50;
  EXPECT_THROW(build_scale_ladder(p), Error);
}

TEST(PiecewiseH, JunctionValues) {
  const OscillationParams p;
  const auto ladder = build_scale_ladder(p);
  const PiecewiseH h = build_piecewise_h(ladder, p);
  const auto& segs = h.segments();
  ASSERT_EQ(segs.size(), 9u);
  expect_rel(std::exp(segs[1].log_constant), kCPlus1, 1e-15L);
  expect_rel(std::exp(segs[3].log_constant), kCMinus1, 1e-15L);
  const real R11 = ladder.rows[0][1];
  const real R12 = ladder.rows[0][2];
  expect_rel(h(R11).value, std::pow(1 + R11 * R11, -p.alpha), 1e-15L);
  expect_rel(segs[1].eval(R11).value, std::pow(1 + R11 * R11, -p.alpha), 1e-14L);
  expect_rel(segs[1].eval(R12).value, std::pow(1 + R12 * R12, -p.beta), 1e-14L);
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    const real R = segs[i].hi;
    const real l = std::log(segs[i].eval(R).value);
    const real r = std::log(segs[i + 1].eval(R).value);
    EXPECT_LE(std::abs(std::expm1(l - r)), 1e-10L) << "junction " << i;
  }
}

TEST(PiecewiseH, ContinuityViolationDetected) {
  std::vector<Segment> segs = {{0, 100, 0.6L, 0, false}, {100, 1e9L, 1.5L, 0, true}};
  EXPECT_THROW(PiecewiseH{segs}, Error);
  try {
    PiecewiseH bad(segs);
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ContinuityViolation);
  }
}

TEST(PiecewiseH, StrictlyDecreasingOnRandomPairs) {
  const OscillationParams p;
  const PiecewiseH h = build_piecewise_h(build_scale_ladder(p), p);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> logr(-3, 1300);
  for (int i = 0; i < 2000; ++i) {
    real a = std::pow(10.0L, static_cast<real>(logr(rng)));
    real b = std::pow(10.0L, static_cast<real>(logr(rng)));
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    EXPECT_GT(h(a).value, h(b).value);
  }
}

TEST(Cutoff, ShapeAndBounds) {
  const CutoffSpec c = CutoffSpec::above();
  const real R = 1e40L;
  EXPECT_EQ(c.phi(1.005L * R, R).value, 1);
  EXPECT_EQ(c.phi(1.195L * R, R).value, 0);
  EXPECT_NEAR(static_cast<double>(c.phi(1.1L * R, R).value), 0.5, 1e-15);
  real max1 = 0, max2 = 0;
  for (int i = 0; i <= 20000; ++i) {
    const real r = R * (1 + 0.2L * i / 20000);
    const Jet2 j = c.phi(r, R);
    EXPECT_LE(j.d1, 0);
    max1 = std::max(max1, R * std::abs(j.d1));
    max2 = std::max(max2, R * R * std::abs(j.d2));
    if (r < 1.1L * R) EXPECT_LE(j.d2, 0);
    if (r > 1.1L * R) EXPECT_GE(j.d2, 0);
  }
  EXPECT_LE(max1, c.c1_bound * (1 + 1e-12L));
  EXPECT_GT(max1, c.c1_bound * (1 - 1e-6L));
  EXPECT_LE(max2, c.c2_bound * (1 + 1e-12L));
  EXPECT_GT(max2, c.c2_bound * (1 - 1e-6L));
  const CutoffSpec b = CutoffSpec::below();
  EXPECT_EQ(b.interval(R).first, 0.8L * R);
  EXPECT_NEAR(static_cast<double>(b.phi(0.9L * R, R).value), 0.5, 1e-15);
}

TEST(SmoothedH, EqualsBaseOutsideBlends) {
  const SmoothedH& hs = oscillating();
  const auto ladder = build_scale_ladder(OscillationParams{});
  for (const auto& row : ladder.rows) {
    for (real r : log_grid(1.2L * std::max(row[0], 1.0L), 0.8L * row[1], 200)) {
      EXPECT_EQ(hs(r).value, std::pow(1 + r * r, -0.6L));
    }
    for (real r : log_grid(1.2L * row[2], 0.8L * row[3], 200)) {
      EXPECT_EQ(hs(r).value, hs.base()(r).value);
      EXPECT_EQ(hs(r).value, std::pow(1 + r * r, -1.2L));
    }
  }
}

TEST(SmoothedH, MidBlendIsAverage) {
  const SmoothedH& hs = oscillating();
  const auto& b = hs.blends()[0];
  const real r = 1.1L * b.R;
  const real left = hs.base().segments()[b.left].eval(r).value;
  const real right = hs.base().segments()[b.right].eval(r).value;
  expect_rel(hs(r).value, (left + right) / 2, 1e-15L);
}

TEST(SmoothedH, SandwichAndJetContinuity) {
  const SmoothedH& hs = oscillating();
  for (const auto& b : hs.blends()) {
    const auto& l = hs.base().segments()[b.left];
    const auto& r = hs.base().segments()[b.right];
    for (int i = 0; i <= 1000; ++i) {
      const real x = b.lo + (b.hi - b.lo) * i / 1000;
      const real lv = l.eval(x).value;
      const real rv = r.eval(x).value;
      const real v = hs(x).value;
      EXPECT_GE(v, std::min(lv, rv) * (1 - 1e-15L));
      EXPECT_LE(v, std::max(lv, rv) * (1 + 1e-15L));
    }
    // Just outside the blend h_s is the left piece below lo and the right
    // piece above hi.
    const std::pair<real, const Segment*> edges[] = {{b.lo, &l}, {b.hi, &r}};
    for (const auto& [edge, seg] : edges) {
      const Jet2 inside = hs(edge);
      const Jet2 outside = seg->eval(edge);
      expect_rel(inside.value, outside.value, 1e-8L);
      expect_rel(inside.d1, outside.d1, 1e-8L);
      expect_rel(inside.d2, outside.d2, 1e-8L);
    }
  }
}

TEST(SmoothedH, StrictlyDecreasingOnDenseLogGrid) {
  const SmoothedH& hs = oscillating();
  const auto grid = log_grid(1e-3L, 1.3L * hs.last_junction(), 100000);
  real prev = hs(grid[0]).value;
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const Jet2 j = hs(grid[i]);
    ASSERT_LT(j.d1, 0) << static_cast<double>(grid[i]);
    ASSERT_LT(j.value, prev);
    prev = j.value;
  }
}

TEST(SmoothedH, BlendOverlapDetected) {
  // A bridge too short to hold both of its blends.
  const real X = 100;
  const real Y = 110;
  const real lnY2 = std::log1p(Y * Y);
  const real q = (1.5L - 0.6L) * std::log1p(X * X) / lnY2;  // exponent continuous at Y from a B=1.5 bridge
  const real q_exp = 1.5L - q;
  std::vector<Segment> segs = {{0, X, 0.6L, 0, false},
                               {X, Y, 1.5L, (1.5L - 0.6L) * std::log1p(X * X), true},
                               {Y, std::numeric_limits<real>::infinity(), q_exp, 0, false}};
  try {
    (void)smooth(PiecewiseH(segs));
    FAIL() << "expected BlendOverlap";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BlendOverlap);
  }
}

TEST(Observation, IdentityGivesUnitConstants) {
  const WarpingFunction h = power_decay_h(0.6L);
  const auto res = verify_observation(h.eval, h.eval, 100, 120);
  ASSERT_TRUE(res.ok) << res.reason;
  EXPECT_NEAR(static_cast<double>(res.c), 0.99, 1e-12);
  EXPECT_NEAR(static_cast<double>(res.C), 1.01, 1e-12);
}

TEST(Observation, IncreasingReplacementFails) {
  const WarpingFunction h = power_decay_h(0.6L);
  auto bump = [](real r) {
    const Jet2 x = Jet2::variable(r);
    return pow(1 + x * x, real(-0.6L)) + 1e-3L * sin(x);
  };
  EXPECT_FALSE(verify_observation(h.eval, bump, 100, 120).ok);
}

TEST(Observation, HoldsOnEveryBlend) {
  const SmoothedH& hs = oscillating();
  for (std::size_t b = 0; b < hs.blends().size(); ++b) {
    const auto res = verify_blend_observation(hs, b);
    EXPECT_TRUE(res.ok) << "blend " << b << ": " << res.reason;
    EXPECT_GT(res.c, 0);
    EXPECT_TRUE(std::isfinite(static_cast<double>(res.C)));
  }
}

TEST(Certification, PureModelNeedsEight) {
  ExponentSchedule s;
  s.exponents = {0.5L};
  const SmoothedH pure = build_schedule_h(s);
  EXPECT_TRUE(pure.blends().empty());
  const auto grid = certification_grid(pure);
  const auto cert = certify_positive_ricci(pure, nabonnand_f(), 16, grid);
  EXPECT_EQ(cert.k, 8);
  const DoublyWarpedMetric m(cert.k, nabonnand_f(), pure.as_warping());
  EXPECT_TRUE(ricci_positive_on_grid(m, grid).positive);
  try {
    (void)certify_positive_ricci(pure, nabonnand_f(), 7, grid);
    FAIL() << "expected NotCertified";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NotCertified);
  }
}

TEST(Certification, OscillatingModelFirstPeriod) {
  OscillationParams p;
  p.periods = 1;
  const SmoothedH hs = build_oscillating_h(p);
  const auto grid = certification_grid(hs, 2000, 100, 1000);
  const auto cert = certify_positive_ricci(hs, nabonnand_f(), 400, grid);
  // The value found by the search is reported, not predicted; it has to at
  // least clear the pure beta threshold.
  EXPECT_GE(cert.k, static_cast<int>(nabonnand_threshold(1.2L)));
  EXPECT_GE(cert.margins.size(), 5u);
  for (const auto& m : cert.margins) EXPECT_GT(m.worst.min_value, 0) << m.regime;
  EXPECT_THROW((void)certify_positive_ricci(hs, nabonnand_f(), 40, grid), Error);
}

TEST(Schedule, LengthOneIsPureModel) {
  ExponentSchedule s;
  s.exponents = {0.7L};
  const SmoothedH hs = build_schedule_h(s);
  for (real r : log_grid(1e-3L, 1e30L, 300)) EXPECT_EQ(hs(r).value, std::pow(1 + r * r, -0.7L));
}

TEST(Schedule, MatchesOscillatingPath) {
  ExponentSchedule s;
  s.exponents = {0.6L, 1.2L, 0.6L, 1.2L};
  const SmoothedH a = build_schedule_h(s);
  const SmoothedH& b = oscillating();
  ASSERT_EQ(a.base().segments().size(), b.base().segments().size());
  for (real r : log_grid(1e-3L, 1.3L * b.last_junction(), 20000)) {
    const Jet2 x = a(r);
    const Jet2 y = b(r);
    EXPECT_EQ(x.value, y.value);
    EXPECT_EQ(x.d1, y.d1);
    EXPECT_EQ(x.d2, y.d2);
  }
}

TEST(Schedule, ThreeExponentsMonotoneWithObservation) {
  ExponentSchedule s;
  s.exponents = {0.5L, 0.75L, 1.0L};
  s.A = 0.3L;
  s.B = 1.5L;
  bool truncated = true;
  const SmoothedH hs = build_schedule_h(s, kDefaultRadiusBound, &truncated);
  EXPECT_FALSE(truncated);
  EXPECT_EQ(hs.blends().size(), 6u);
  for (real r : log_grid(1e-3L, 1.3L * hs.last_junction(), 20000)) ASSERT_LT(hs(r).d1, 0);
  for (std::size_t b = 0; b < hs.blends().size(); ++b) {
    const auto res = verify_blend_observation(hs, b);
    EXPECT_TRUE(res.ok) << b << ": " << res.reason;
  }
}

TEST(Schedule, RejectsBadBridges) {
  ExponentSchedule s;
  s.exponents = {0.6L, 1.6L};
  EXPECT_THROW(build_schedule_h(s), Error);
  s.exponents = {0.4L};
  EXPECT_THROW(build_schedule_h(s), Error);
}

TEST(Construction, FileRoundTrip) {
  const OscillationParams p;
  const auto ladder = build_scale_ladder(p);
  const SmoothedH& hs = oscillating();
  std::stringstream ss;
  write_construction(ss, p, ladder, hs);
  OscillationParams back;
  const SmoothedH re = read_construction(ss, &back);
  EXPECT_EQ(back.alpha, p.alpha);
  EXPECT_EQ(back.periods, p.periods);
  for (real r : log_grid(1.0L, hs.last_junction(), 500)) EXPECT_EQ(re(r).value, hs(r).value);

  std::string text = ss.str();
  const auto pos = text.find("segment.3 = ");
  ASSERT_NE(pos, std::string::npos);
  text[pos + 12] = text[pos + 12] == '9' ? '8' : '9';
  std::istringstream tampered(text);
  EXPECT_THROW(read_construction(tampered), Error);
}
