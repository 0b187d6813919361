#pragma once

#include <functional>
#include <span>
#include <vector>

#include "warplab/types.hpp"

namespace warplab {

struct QuadOptions {
  real rel_tol = 1e-11L;
  real abs_tol = 1e-12L;
  unsigned max_intervals = 2000;
};

struct QuadResult {
  real value = 0;
  real error = 0;
  bool converged = true;
};

/// Globally adaptive 21-point Gauss-Kronrod on [a, b]: the interval with the
/// largest error estimate is bisected until the total error is below
/// max(rel_tol·∫|f|, abs_tol) or max_intervals is reached.
QuadResult integrate(const std::function<real(real)>& f, real a, real b, const QuadOptions& opts = {});

/// Sum of `integrate` over consecutive breakpoints (sorted, at least two).
QuadResult integrate_pieces(const std::function<real(real)>& f, std::span<const real> breaks,
                            const QuadOptions& opts = {});

/// Root of f on [lo, hi], bracket width ≤ max(rel_tol·|x|, abs_tol); f(lo)
/// and f(hi) must differ in sign (InvalidArgument otherwise).
real find_root(const std::function<real(real)>& f, real lo, real hi, real rel_tol = 1e-15L,
               real abs_tol = 0, unsigned max_iter = 300);

struct LineFit {
  real slope = 0;
  real intercept = 0;
  real residual = 0;  // rms of y - fit
};

LineFit fit_line(std::span<const real> x, std::span<const real> y);

}  // namespace warplab
