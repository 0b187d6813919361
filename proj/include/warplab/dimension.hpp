#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "warplab/orbit.hpp"

namespace warplab {

/// ρ(a, b) = d_{|a-b|} / scale on ℤ, with d_0 = 0 and d nondecreasing.
/// Indices are reals holding integers so that counts past 2^64 still work.
class LinearOrbitMetric {
 public:
  using Distance = std::function<real(real)>;
  /// Largest integer n ≥ 0 with d_n ≤ R (in unscaled units).
  using Inverse = std::function<real(real)>;

  LinearOrbitMetric(Distance d, Inverse max_index_le, real scale = 1, std::string label = {});

  /// d_0 = 0, d_n = table[n - 1]; indices past the table are not in any ball
  /// that the table does not cover (OutOfRange).
  static LinearOrbitMetric from_table(std::vector<real> d, std::string label = "table");
  /// d_l = step · l.
  static LinearOrbitMetric uniform(real step = 1);
  /// d_l from an orbit table, divided by `scale`.
  static LinearOrbitMetric from_orbits(std::shared_ptr<OrbitTable> table, real scale = 1);

  real scale() const { return scale_; }
  const std::string& label() const { return label_; }
  /// ρ(0, n).
  real d(real n) const;
  real rho(real a, real b) const { return d(std::abs(a - b)); }
  /// Largest n ≥ 0 with ρ(0, n) ≤ R.
  real max_index_le(real R) const;
  /// Smallest n ≥ 1 with ρ(0, n) ≥ λ.
  real min_index_ge(real lambda) const;
  /// #B_R(0) = 2 max_index_le(R) + 1.
  real ball_count(real R) const { return 2 * max_index_le(R) + 1; }
  /// Largest index the metric can evaluate (infinite unless table-backed).
  real extent() const { return extent_; }

 private:
  Distance d_;
  Inverse inv_;
  real scale_ = 1;
  real extent_ = 0;
  std::string label_;
};

struct InvariantReport {
  bool ok = true;
  std::string diagnostic;
};

/// Nondecreasing on consecutive indices up to `n_max`, subadditive and
/// triangle inequality on `triples` random triples of indices in [-n_max, n_max].
InvariantReport check_metric_invariants(const LinearOrbitMetric& s, real n_max, std::size_t triples = 2000,
                                        unsigned seed = 1);

/// Cap(B_R(0); λ): the largest λ-separated (ρ ≥ λ) subset of the closed ball.
/// Greedy sweep from the left end: consecutive chosen indices must be at
/// least m = min{n : d_n ≥ λ} apart, giving floor(2N/m) + 1 with N = max_index_le(R).
real capacity(const LinearOrbitMetric& s, real R, real lambda);

/// Exact maximum λ-separated subset by branch and bound over all subsets of
/// the ball; InvalidArgument if the ball has more than 25 points.
int capacity_exhaustive(const LinearOrbitMetric& s, real R, real lambda);

/// A random nondecreasing subadditive table of length n, with repeated
/// values and increments spread over [0, 2].
std::vector<real> random_subadditive_table(std::size_t n, std::mt19937_64& rng);

struct GrowthFit {
  real k = 0;
  real c1 = 0;
  real c2 = 0;
  real ratio = 0;
  bool misfit = false;  // c2/c1 above the threshold
  std::vector<real> R;
  std::vector<real> count;
};

/// c1 = min, c2 = max of #B_R / R^k over `samples` log-spaced R in [lo, hi].
/// DegenerateRange if hi/lo < 10.
GrowthFit fit_growth_constants(const LinearOrbitMetric& s, real k, real lo, real hi, std::size_t samples = 50,
                               real ratio_threshold = 10);

struct CapacitySample {
  real R = 0;
  real lambda = 0;
  real cap = 0;
};

struct CapacityProfile {
  std::vector<CapacitySample> samples;
  real k_hat = 0;
  real c1_hat = 0;
  real c2_hat = 0;
  real residual = 0;
};

/// Capacity at every (R, λ) pair with λ < R (InvalidArgument otherwise).
CapacityProfile capacity_profile(const LinearOrbitMetric& s, const std::vector<std::pair<real, real>>& pairs);

/// cap ≥ 1, nonincreasing in λ at fixed R, nondecreasing in R at fixed λ.
InvariantReport check_profile_monotone(const CapacityProfile& p);

struct SandwichViolation {
  CapacitySample sample;
  real lower = 0;
  real upper = 0;
};

struct SandwichReport {
  bool ok = true;
  real worst_lower_margin = 0;  // min cap / lower
  real worst_upper_margin = 0;  // min upper / cap
  std::vector<SandwichViolation> violations;
};

/// (c1/c2)(R/λ)^k ≤ cap ≤ (3^(k+1) c2/c1)(R/λ)^k for every sample.
SandwichReport check_capacity_sandwich(const CapacityProfile& p, real k, real c1, real c2);

/// Cap(B_{R-λ/3}; λ)·#B_{λ/3} ≤ #B_R ≤ Cap(B_R; λ)·#B_λ.
InvariantReport check_two_step_chain(const LinearOrbitMetric& s, real R, real lambda);

enum class ContentDirection { Upper, Lower };

struct HausdorffEstimate {
  real k = 0;
  real delta = 0;
  real content = 0;
  ContentDirection direction = ContentDirection::Upper;
  real balls = 0;   // number of balls in the cover
  real radius = 0;  // their common radius
};

/// Upper: balls of radius δ about a maximal δ-separated set, Cap(B_R; δ)·δ^k.
HausdorffEstimate hausdorff_upper(const LinearOrbitMetric& s, real k, real R, real delta);
/// Lower side: the cheapest cover by runs of 2M+1 consecutive points with
/// radius d_M ≤ δ, ceil((2N+1)/(2M+1))·d_M^k minimized over M. Any cover
/// must respect the lower bound, so this is the candidate that is checked.
HausdorffEstimate hausdorff_greedy(const LinearOrbitMetric& s, real k, real R, real delta);

struct ContentBounds {
  real lower = 0;  // c1² / (3^(k+1) c2²) R^k
  real upper = 0;  // 3^(k+1) c2/c1 R^k
};
ContentBounds hausdorff_bounds(real k, real R, real c1, real c2);

/// True if the sequence (ordered by decreasing δ) never rises by more than
/// `tol` relative to the running minimum.
bool content_trend_ok(const std::vector<real>& contents, real tol = 0.05L);

/// Least-squares slope of log cap against log(R/λ); stores k_hat and the
/// residual in the profile. DegenerateRange with fewer than 8 samples or
/// a single R/λ value.
real box_dimension_fit(CapacityProfile& p);

void write_profile_csv(std::ostream& os, const CapacityProfile& p);
void write_fit_csv(std::ostream& os, const CapacityProfile& p);

}  // namespace warplab
