#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "warplab/ricci.hpp"

namespace warplab {

/// Radii beyond this are refused: r² must stay inside long double range.
inline constexpr real kDefaultRadiusBound = 1e2000L;

struct OscillationParams {
  real alpha = 0.6L;
  real beta = 1.2L;
  real A = 0.3L;
  real B = 1.5L;
  real R11 = 100;
  int periods = 2;

  /// Throws InvalidArgument unless B > beta > alpha > A > 0, R11 ≥ 100, periods ≥ 0.
  void validate() const;

  bool operator==(const OscillationParams&) const = default;
};

/// Row i holds (R_i0, R_i1, R_i2, R_i3, R_i4); R_10 = 0 and R_{i+1,0} = R_i4.
struct ScaleLadder {
  std::vector<std::array<real, 5>> rows;
  bool overflow = false;  // true if rows were dropped because a radius passed `bound`
  real bound = kDefaultRadiusBound;
};

ScaleLadder build_scale_ladder(const OscillationParams& p, real bound = kDefaultRadiusBound);

/// exp(log_constant) * (1 + r²)^(-exponent) on [lo, hi].
struct Segment {
  real lo = 0;
  real hi = 0;
  real exponent = 0;
  real log_constant = 0;
  bool bridge = false;

  /// Evaluates the closed form at any r, ignoring [lo, hi].
  Jet2 eval(real r) const;
};

class PiecewiseH {
 public:
  PiecewiseH() = default;
  /// Checks continuity at every interior boundary (ContinuityViolation past
  /// 1e-10 relative) and that each segment decays.
  explicit PiecewiseH(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  std::size_t segment_index(real r) const;
  Jet2 operator()(real r) const { return segments_[segment_index(r)].eval(r); }
  /// Interior segment boundaries.
  std::vector<real> junctions() const;

 private:
  std::vector<Segment> segments_;
};

PiecewiseH build_piecewise_h(const ScaleLadder& ladder, const OscillationParams& p);

enum class BlendSide { AboveR, BelowR };

/// φ(r) = 1 - S(x), S(x) = 10x³ - 15x⁴ + 6x⁵, x = (r/R - lo_frac)/(hi_frac - lo_frac).
struct CutoffSpec {
  real lo_frac = 1.01L;
  real mid_frac = 1.1L;
  real hi_frac = 1.19L;
  real c1_bound = 0;  // sup R |φ'|
  real c2_bound = 0;  // sup R² |φ''|
  BlendSide side = BlendSide::AboveR;

  /// Quintic on (1.01, 1.1, 1.19) R, used where the exponent increases.
  static CutoffSpec above();
  /// Mirror image on (0.81, 0.9, 0.99) R, used where the exponent decreases.
  static CutoffSpec below();
  static CutoffSpec make(real lo, real hi, BlendSide side);

  Jet2 phi(real r, real R) const;
  /// Blend support: [R, 1.2R] above, [0.8R, R] below.
  std::pair<real, real> interval(real R) const;
};

struct Blend {
  real R = 0;
  CutoffSpec spec;
  real lo = 0;
  real hi = 0;
  std::size_t left = 0;  // segment index of the piece φ weights
  std::size_t right = 0;
};

enum class Regime { Pure, Bridge, Blend };

struct RegimeInfo {
  Regime kind = Regime::Pure;
  real exponent = 0;  // pure/bridge exponent; for a blend, the steeper side
  std::size_t index = 0;
};

class SmoothedH {
 public:
  SmoothedH() = default;
  SmoothedH(PiecewiseH base, std::vector<Blend> blends);

  Jet2 operator()(real r) const;
  const PiecewiseH& base() const { return base_; }
  const std::vector<Blend>& blends() const { return blends_; }
  /// Index into blends() containing r, or -1.
  int blend_index(real r) const;
  RegimeInfo regime(real r) const;
  /// Junctions plus blend ends, sorted; useful as quadrature breakpoints.
  std::vector<real> breakpoints() const;
  /// Largest junction radius (0 for a single pure piece).
  real last_junction() const;
  WarpingFunction as_warping(std::string label = "smoothed_h") const;

 private:
  PiecewiseH base_;
  std::vector<Blend> blends_;
};

/// Blends every junction: above R where the exponent increases, below R where
/// it decreases. Throws BlendOverlap if supports meet and MonotonicityLoss if
/// h_s' ≥ 0 at any of `samples_per_blend` points of a blend.
SmoothedH smooth(const PiecewiseH& hp, const CutoffSpec& above = CutoffSpec::above(),
                 const CutoffSpec& below = CutoffSpec::below(), std::size_t samples_per_blend = 10000);

struct ObservationResult {
  bool ok = false;
  real c = 0;
  real C = 0;
  std::string reason;
};

/// Checks h_new' < 0, |h_new'/h_new| > c |h'/h| and h_new''/h_new < C h''/h on
/// `samples` points of [lo, hi]. c is 0.99 × the sampled infimum of the first
/// ratio, C is 1.01 × the sampled supremum of the second.
ObservationResult verify_observation(const std::function<Jet2(real)>& h_old,
                                     const std::function<Jet2(real)>& h_new, real lo, real hi,
                                     std::size_t samples = 10000);

/// Observation check for one blend, with h_old the piece the blend departs from.
ObservationResult verify_blend_observation(const SmoothedH& hs, std::size_t blend, std::size_t samples = 10000);

struct RegimeMargin {
  std::string regime;
  RicciReport worst;
};

struct Certification {
  int k = 0;
  real k_required = 0;  // sup over the grid of the k at which Ric changes sign
  GridCheck check;
  std::vector<RegimeMargin> margins;
};

/// Grid for certification: a log grid over [1e-3, 1.3 × last junction], log
/// samples inside every segment, and dense samples inside every blend.
std::vector<real> certification_grid(const SmoothedH& hs, std::size_t global_points = 4000,
                                     std::size_t per_segment = 200, std::size_t per_blend = 2000);

/// Smallest k ≤ k_max with Ric > 0 on the grid, re-verified with
/// ricci_positive_on_grid. Throws NotCertified otherwise.
Certification certify_positive_ricci(const SmoothedH& hs, const WarpingFunction& f, int k_max,
                                     std::span<const real> grid);

std::string regime_label(const RegimeInfo& info);

struct ExponentSchedule {
  std::vector<real> exponents;
  real A = 0.3L;
  real B = 1.5L;
  real R11 = 100;
  real lower = 0.5L;  // every exponent must lie in [lower, upper]
  real upper = 10;

  void validate() const;
};

/// Pure pieces follow the schedule and close back to its first exponent, which
/// continues to infinity; consecutive equal exponents merge.
SmoothedH build_schedule_h(const ExponentSchedule& s, real bound = kDefaultRadiusBound,
                           bool* truncated = nullptr);

/// The oscillating model: (alpha, beta) repeated `periods` times.
SmoothedH build_oscillating_h(const OscillationParams& p, real bound = kDefaultRadiusBound);

/// key = value text with the parameters, cutoff fractions and every junction
/// radius and bridge constant in scientific notation.
void write_construction(std::ostream& os, const OscillationParams& p, const ScaleLadder& ladder,
                        const SmoothedH& hs);
/// Reads a construction file, rebuilds the model and checks the stored
/// radii and constants against the rebuild (ConfigError on mismatch).
SmoothedH read_construction(std::istream& is, OscillationParams* params = nullptr);

}  // namespace warplab
