#include "warplab/numerics.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <queue>
#include <sstream>

namespace warplab {

namespace {

struct Interval {
  real a, b, value, error, l1;
  bool operator<(const Interval& o) const { return error < o.error; }
};

Interval gk21(const std::function<real(real)>& f, real a, real b) {
  Interval iv{a, b, 0, 0, 0};
  // max_depth 0: a single rule. Its error estimate comes back in units of the
  // reference interval [-1, 1], so it is scaled here.
  iv.value = boost::math::quadrature::gauss_kronrod<real, 21>::integrate(f, a, b, 0, real(0), &iv.error, &iv.l1);
  iv.error *= std::abs(b - a) / 2;
  return iv;
}

}  // namespace

QuadResult integrate(const std::function<real(real)>& f, real a, real b, const QuadOptions& opts) {
  QuadResult out;
  if (a == b) return out;
  std::priority_queue<Interval> heap;
  heap.push(gk21(f, a, b));
  real value = heap.top().value, error = heap.top().error, l1 = heap.top().l1;
  auto target = [&] { return std::max(opts.rel_tol * l1, opts.abs_tol); };
  while (error > target() && heap.size() < opts.max_intervals) {
    const Interval worst = heap.top();
    const real mid = (worst.a + worst.b) / 2;
    if (!(mid > worst.a && mid < worst.b)) break;
    heap.pop();
    const Interval left = gk21(f, worst.a, mid), right = gk21(f, mid, worst.b);
    value += left.value + right.value - worst.value;
    error += left.error + right.error - worst.error;
    l1 += left.l1 + right.l1 - worst.l1;
    heap.push(left);
    heap.push(right);
  }
  // Re-sum to shed the drift of the running updates.
  value = error = 0;
  for (; !heap.empty(); heap.pop()) {
    value += heap.top().value;
    error += heap.top().error;
  }
  out.value = value;
  out.error = error;
  out.converged = std::isfinite(value) && error <= target() * 10;
  return out;
}

QuadResult integrate_pieces(const std::function<real(real)>& f, std::span<const real> breaks,
                            const QuadOptions& opts) {
  QuadResult out;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const QuadResult piece = integrate(f, breaks[i], breaks[i + 1], opts);
    out.value += piece.value;
    out.error += piece.error;
    out.converged = out.converged && piece.converged;
  }
  return out;
}

real find_root(const std::function<real(real)>& f, real lo, real hi, real rel_tol, real abs_tol,
               unsigned max_iter) {
  const real flo = f(lo);
  const real fhi = f(hi);
  if (flo == 0) return lo;
  if (fhi == 0) return hi;
  if ((flo < 0) == (fhi < 0)) {
    std::ostringstream os;
    os << "no sign change on [" << lo << ", " << hi << "]: f=" << flo << ", " << fhi;
    throw Error(ErrorKind::InvalidArgument, os.str());
  }
  auto tol = [rel_tol, abs_tol](real a, real b) {
    return std::abs(a - b) <= std::max(rel_tol * std::max(std::abs(a), std::abs(b)), abs_tol);
  };
  std::uintmax_t iters = max_iter;
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, iters);
  return (a + b) / 2;
}

LineFit fit_line(std::span<const real> x, std::span<const real> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error(ErrorKind::InvalidArgument, "fit_line needs ≥ 2 points");
  const real n = static_cast<real>(x.size());
  real mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  real sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw Error(ErrorKind::DegenerateRange, "all abscissae equal");
  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  real ss = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const real e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss += e * e;
  }
  fit.residual = std::sqrt(ss / n);
  return fit;
}

}  // namespace warplab
