#pragma once

#include <functional>
#include <iosfwd>
#include <utility>
#include <vector>

#include "warplab/orbit.hpp"

namespace warplab {

/// dt² + t^(-4α) dw² on t > 0.
struct GrushinMetric {
  real alpha = 0.5L;
  real eps = 1e-3L;  // grids never go below this t

  /// h(t) = t^(-2α); InvalidArgument unless alpha ≥ 1/2 and eps > 0.
  HalfplaneMetric halfplane() const;
};

using Point = std::pair<real, real>;  // (t, w)

enum class PairKind { Same, Radial, EqualLevel, Grid };

struct PairDistance {
  real d = 0;
  PairKind kind = PairKind::Same;
  real t_max = 0;           // turning level of the equal-level arc
  real error_estimate = 0;  // grid runs only
  real eps_sensitivity = 0;  // grid runs touching t = eps: change when eps doubles
};

struct GridPairOptions {
  std::size_t nr = 300;
  real aspect = 0.5L;
  std::size_t max_edges = 100000000;
};

/// Distance in dt² + h(t)² dw². Equal w: |t1 - t2|. Equal t: the symmetric
/// Clairaut arc from t0 out to t_max and back, with delta_w(t_max) = |Δw|.
/// Anything else runs the grid oracle above t = eps; UnsupportedPair if the
/// grid would exceed its edge budget.
PairDistance pair_distance(const HalfplaneMetric& m, Point p1, Point p2, real eps = 1e-3L,
                           const GridPairOptions& grid = {});

PairDistance grushin_distance(const GrushinMetric& g, Point p1, Point p2, const GridPairOptions& grid = {});

/// λ^(2α) h_s(λt) / C: the circle coefficient of the rescaled metric, with C
/// the constant of the pure segment λt is expected to lie in.
struct RescaledModel {
  std::function<Jet2(real)> h_s;
  real alpha = 0.5L;
  real lambda = 1;
  real constant = 1;
  real window_lo = 0;  // pure segment [lo, hi] in unscaled r
  real window_hi = 1e2000L;

  HalfplaneMetric halfplane() const;
  /// True if λt lies in the window for every t in [t_lo, t_hi].
  bool covers(real t_lo, real t_hi) const;
};

/// The pure segment of regime `exponent` in row `row` of the ladder, as a
/// window [R_i0, R_i1] (alpha) or [R_i2, R_i3] (beta), with its constant.
struct RegimeWindow {
  real lo = 0;
  real hi = 0;
  real exponent = 0;
  real constant = 1;
};
RegimeWindow regime_window(const SmoothedH& hs, std::size_t row, bool beta);

RescaledModel rescale(const std::function<Jet2(real)>& h_s, real alpha, real lambda, const RegimeWindow& w);

PairDistance rescaled_distance(const RescaledModel& model, Point p1, Point p2, const GridPairOptions& grid = {});

/// |λ^(4α) h_s(λt)²/C² - t^(-4α)| / t^(-4α).
real coefficient_error(const RescaledModel& model, real t);

struct ProbePair {
  Point p1;
  Point p2;
};

/// Half radial, half equal-level pairs with t in [t_lo, t_hi] and |Δw| ≤ w_max.
std::vector<ProbePair> probe_pairs(std::size_t n, unsigned seed, real t_lo = 0.2L, real t_hi = 5, real w_max = 5);

struct ComparisonRow {
  real lambda = 0;
  real max_rel_err = 0;
  std::size_t counted = 0;
  std::size_t excluded = 0;  // pairs whose path leaves the window image at this λ
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  bool trend = false;  // errors nonincreasing up to 10% noise
};

/// Max relative error of rescaled against Grushin distances over the probes,
/// for each λ. WindowTooNarrow if fewer than 3 λ values count any probe.
ComparisonReport convergence_report(const std::function<Jet2(real)>& h_s, const RegimeWindow& w,
                                    const std::vector<ProbePair>& probes, const std::vector<real>& lambdas);

/// |d(δ_s p1, δ_s p2) - s d(p1, p2)| / (s d(p1, p2)) for δ_s(t, w) = (st, s^(1+2α) w).
real self_similarity_error(const GrushinMetric& g, const ProbePair& pair, real s);

void write_comparison_csv(std::ostream& os, const ComparisonReport& r);

}  // namespace warplab
