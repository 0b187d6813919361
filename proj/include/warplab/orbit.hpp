#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "warplab/example.hpp"
#include "warplab/numerics.hpp"

namespace warplab {

/// dr² + h(r)² dv² on [lo, hi) (lo = 0: the axis of the manifold reduction)
/// or (lo, hi) for the Grushin halfplane.
struct HalfplaneMetric {
  std::function<Jet2(real)> h;
  real lo = 0;
  real hi = 1e2000L;         // largest radius the model represents
  std::vector<real> breaks;  // radii where h changes formula; quadrature splits there
  std::string id;            // stable description, hashed for caches

  real value(real r) const { return h(r).value; }
  std::uint64_t hash() const;
};

HalfplaneMetric halfplane(const WarpingFunction& h, std::string id, real lo = 0, real hi = 1e2000L);
/// Domain ends at 1.3 × the last junction (or 1e2000 for a pure model).
HalfplaneMetric halfplane(const SmoothedH& hs, std::string id);
/// (1+r²)^(-alpha) on [0, ∞).
HalfplaneMetric power_decay_halfplane(real alpha);

/// 2π h(r).
real circle_length(const HalfplaneMetric& m, real r);

/// r with h(r) = c (relative 1e-15). OutOfRange unless h(hi) < c < h(lo).
real solve_turning_point(const HalfplaneMetric& m, real c);

struct GeodesicSolution {
  real clairaut_c = 0;
  real r_start = 0;
  real r_max = 0;
  real delta_v = 0;
  real length = 0;
};

/// The symmetric arc leaving r_start, turning at r_max and returning:
/// delta_v = 2∫ c/(h√(h²-c²)), length = 2∫ h/√(h²-c²), with c = h(r_max).
/// The endpoint singularity is removed by r = r_max - δ s². QuadratureFailure
/// if refinement stalls above the relative tolerance.
GeodesicSolution clairaut_arc_at(const HalfplaneMetric& m, real r_max, real r_start,
                                 const QuadOptions& q = {});
/// Same arc from the Clairaut constant; starts at m.lo.
GeodesicSolution clairaut_arc(const HalfplaneMetric& m, real c, const QuadOptions& q = {});

struct MonotoneCheck {
  bool ok = true;
  std::string diagnostic;
};

/// delta_v as a function of c = h(r_max) must strictly decrease; sampled at
/// `samples` turning radii log-spaced in [r_lo, r_hi].
MonotoneCheck check_delta_v_monotone(const HalfplaneMetric& m, real r_lo, real r_hi, std::size_t samples = 200,
                                     real r_start = 0);

enum class PathKind { Arc, Axis, TestLoop };

struct OrbitDistance {
  real l = 0;
  real d = 0;
  GeodesicSolution arc;
  PathKind kind = PathKind::Arc;
  bool flagged = false;  // true when the arc could not be used and a bound stands in
  std::string note;
};

struct OrbitOptions {
  QuadOptions quad;
  real root_tol = 1e-14L;
  bool check_monotone = true;
};

/// d(γ^l p, p) for the deck translation v -> v + 2πl, by root-finding
/// delta_v(r_max) = 2πl. Below the small-arc limit of delta_v the axis path
/// h(0)·2πl is used; if the arc cannot reach 2πl inside the domain the
/// test-loop bound min_r(2r + 2πl h(r)) is returned and flagged.
OrbitDistance orbit_distance(const HalfplaneMetric& m, real l, const OrbitOptions& opts = {});

/// min over a log grid of 2r + 2πl h(r): the length of the loop that runs out
/// to r, around the circle l times and back.
real test_loop_bound(const HalfplaneMetric& m, real l, real r_hi, std::size_t samples = 2000);

/// Tabulated orbit distances with an optional line-oriented disk cache
/// (header carries the model hash; a mismatch discards the file).
class OrbitTable {
 public:
  explicit OrbitTable(HalfplaneMetric m, std::filesystem::path cache_dir = {}, OrbitOptions opts = {});
  ~OrbitTable();
  OrbitTable(const OrbitTable&) = delete;
  OrbitTable& operator=(const OrbitTable&) = delete;

  const HalfplaneMetric& metric() const { return m_; }
  real period() const { return kTwoPi; }
  /// d_l, computed on first use.
  const OrbitDistance& get(real l);
  /// Computes every missing l, spread over `threads` workers (0: hardware).
  void prefetch(const std::vector<real>& ls, unsigned threads = 0);
  /// Every tabulated entry, by l.
  std::map<real, OrbitDistance> entries() const;
  std::filesystem::path cache_file() const;
  /// Writes pending entries to the cache file (also done by the destructor).
  void flush();
  std::size_t computed() const { return computed_; }
  std::size_t loaded() const { return loaded_; }

  /// Largest real l with d_l ≤ R (continuous in l; -1 if R < d at the
  /// smallest arc), by inverting the arc length.
  real max_power_within(real R);

 private:
  void load();

  HalfplaneMetric m_;
  std::filesystem::path dir_;
  OrbitOptions opts_;
  std::map<real, OrbitDistance> table_;
  std::vector<real> pending_;
  std::size_t computed_ = 0;
  std::size_t loaded_ = 0;
  mutable std::mutex mu_;
};

/// #Γ(R) = 2 max{l ≥ 0 : d_l ≤ R} + 1, with d_{-l} = d_l. Exact (integer
/// valued) while the count is below 2^53; beyond that it is the floor of the
/// continuous inversion.
real orbit_count(OrbitTable& table, real R);

struct GrowthWindow {
  real lo = 0;
  real hi = 0;
  real slope = 0;
  real residual = 0;
  std::vector<real> R;
  std::vector<real> count;
};

/// Least-squares slope of log #Γ(R) against log R over `samples` log-spaced R
/// in [lo, hi]. DegenerateRange unless lo < hi and samples ≥ 10.
GrowthWindow growth_slope(OrbitTable& table, real lo, real hi, std::size_t samples = 24);

/// C(α) = (2 + 1/α)(2πα)^(1/(2α+1)) and the derived window constants.
struct PowerWindow {
  real alpha = 0;
  real R = 0;
  real C = 0;
  real rho1 = 0;
  real rho2 = 0;
  real C1 = 0;  // (2π/C)^(1/(2α))
  real C2 = 0;  // C
  real l_lo = 0;  // ρ1 R^(2α+1)
  real l_hi = 0;  // ρ2 R^(4α+2)
};

/// WindowEmpty if ρ1 R^(2α+1) > ρ2 R^(4α+2).
PowerWindow power_window(real alpha, real R);

/// The two-sided estimate C l^(1/(1+2α)) - 2 ≤ d_l ≤ 9 l^(1/(1+2α)),
/// C = 2·9^(-1/(2α)), for the pure model.
struct PowerBounds {
  real lower = 0;
  real upper = 0;
};
PowerBounds length_estimate(real alpha, real l);

struct DijkstraOptions {
  real r_lo = 0;
  real r_hi = 10;
  real v_lo = 0;
  real v_hi = 10;
  std::size_t nr = 200;  // coarse grid cells; the fine run doubles both
  std::size_t nv = 200;
  int stencil = 5;       // neighbour offsets (a, b), gcd 1, max(|a|,|b|) ≤ stencil
  int substeps = 4;      // midpoint samples of h per r-cell along an edge
  std::size_t max_edges = 100000000;
};

struct DijkstraResult {
  real distance = 0;  // 2 fine - coarse
  real coarse = 0;
  real fine = 0;
  real error_estimate = 0;  // |fine - coarse|
  real anisotropy = 1;      // worst local 1/cos(half angular gap) along the fine path
  std::size_t edges = 0;
};

/// Shortest path on a grid graph over the rectangle with straight-edge costs
/// ∫ √(dr² + h² dv²) (composite midpoint), at two resolutions, extrapolated
/// to first order. Endpoints snap to the nearest node. ResourceLimit if the
/// fine graph would exceed max_edges.
DijkstraResult dijkstra_distance_oracle(const std::function<real(real)>& h, std::pair<real, real> p1,
                                        std::pair<real, real> p2, const DijkstraOptions& opts);

/// Oracle run for the pair (0, 0), (0, 2πl) on [0, 2 r_max] × [0, 2πl], where
/// r_max is the turning radius of the Clairaut arc. Cells have radial size dr
/// and h(r_max)·dv = aspect·dr, so the stencil resolves the arc where it runs
/// along the circle.
DijkstraResult dijkstra_orbit_oracle(const HalfplaneMetric& m, real l, real dr = 0.05L, real aspect = 0.5L,
                                     const DijkstraOptions& base = {});

std::uint64_t fnv1a(const std::string& text);

}  // namespace warplab
