#pragma once

#include <span>
#include <vector>

#include "warplab/warping.hpp"

namespace warplab {

/// Principal Ricci values of dr² + f² ds_k² + h² ds_1² at one radius, for
/// unit vectors along ∂_r, the circle and the sphere.
struct RicciReport {
  real r = 0;
  real ric_radial = 0;
  real ric_circle = 0;
  real ric_sphere = 0;
  real min_value = 0;
};

/// Each principal Ricci value is affine in k: ric = base + k * slope.
/// `scale` is the magnitude of the individual terms before cancellation; it is
/// the natural yardstick for comparing two evaluation routes.
struct RicciAffine {
  real base = 0;
  real slope = 0;
  real at(int k) const { return base + static_cast<real>(k) * slope; }
  real scale(int k) const;
};

struct RicciTerms {
  RicciAffine radial;
  RicciAffine circle;
  RicciAffine sphere;
};

/// Closed-form decomposition from the jets of f and h at one radius.
RicciTerms ricci_terms(const Jet2& f, const Jet2& h);

/// -h''/h - k f''/f. At r = 0 returns the axis limit by Richardson
/// extrapolation of the r > 0 values (error O(1e-12) for smooth even data).
real ricci_radial(const DoublyWarpedMetric& m, real r);
/// -h''/h - k f'h'/(f h).
real ricci_circle(const DoublyWarpedMetric& m, real r);
/// -f''/f + (k-1)(1 - f'²)/f² - f'h'/(f h).
real ricci_sphere(const DoublyWarpedMetric& m, real r);

RicciReport ricci_report(const DoublyWarpedMetric& m, real r);

struct OracleOptions {
  real relative_step = 1e-3L;   // radial step as a fraction of r
  real angular_step = 1e-3L;
  real consistency_tol = 1e-3L; // max |R(s) - R(s/2)| / scale before StepTooLarge
  real diagonal_tol = 1e-6L;
};

/// Independent route: assembles the full coordinate metric on
/// (r, θ_1..θ_k, v), differentiates it by nested central differences, builds
/// Christoffel symbols and the Ricci tensor, and Richardson-combines two step
/// sizes. Only f(r) and h(r) values are used, never their jets.
RicciReport ricci_numeric_oracle(const DoublyWarpedMetric& m, real r,
                                 const OracleOptions& opts = {});

struct GridCheck {
  bool positive = false;
  RicciReport worst;
};

GridCheck ricci_positive_on_grid(const DoublyWarpedMetric& m, std::span<const real> grid);

/// n logarithmically spaced points in [lo, hi], endpoints included.
std::vector<real> log_grid(real lo, real hi, std::size_t n);

/// K(alpha) = max{4 alpha + 2, 16 alpha² + 8 alpha}: the sphere dimension
/// above which the pure power-decay model has Ric > 0.
real nabonnand_threshold(real alpha);

}  // namespace warplab
