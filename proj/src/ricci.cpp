#include "warplab/ricci.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace warplab {

real RicciAffine::scale(int k) const {
  return std::abs(base) + std::abs(static_cast<real>(k) * slope);
}

RicciTerms ricci_terms(const Jet2& f, const Jet2& h) {
  const real f1 = f.d1 / f.value;
  const real f2 = f.d2 / f.value;
  const real h1 = h.d1 / h.value;
  const real h2 = h.d2 / h.value;
  const real sphere_curv = (1 - f.d1 * f.d1) / (f.value * f.value);
  RicciTerms t;
  t.radial = {-h2, -f2};
  t.circle = {-h2, -f1 * h1};
  t.sphere = {-f2 - f1 * h1 - sphere_curv, sphere_curv};
  return t;
}

namespace {

RicciTerms terms_at(const DoublyWarpedMetric& m, real r) {
  const Jet2 f = m.f(r);
  const Jet2 h = m.h(r);
  if (!(f.value > 0) || !(h.value > 0)) {
    std::ostringstream os;
    os << "f=" << f.value << " h=" << h.value << " at r=" << r;
    throw Error(ErrorKind::NonPositiveWarping, os.str());
  }
  return ricci_terms(f, h);
}

// Ricci data is even in r for metrics smooth across the axis, so
// F(eps) = F(0) + a eps² + O(eps⁴) and one Richardson step suffices.
template <class Fn>
real axis_limit(Fn&& fn) {
  constexpr real eps = 1e-3L;
  return (4 * fn(eps / 2) - fn(eps)) / 3;
}

template <class Pick>
real evaluate(const DoublyWarpedMetric& m, real r, Pick pick) {
  if (r < 0) throw Error(ErrorKind::InvalidArgument, "r must be >= 0");
  if (r == 0) {
    return axis_limit([&](real x) { return pick(terms_at(m, x)).at(m.k); });
  }
  return pick(terms_at(m, r)).at(m.k);
}

}  // namespace

real ricci_radial(const DoublyWarpedMetric& m, real r) {
  return evaluate(m, r, [](const RicciTerms& t) { return t.radial; });
}

real ricci_circle(const DoublyWarpedMetric& m, real r) {
  return evaluate(m, r, [](const RicciTerms& t) { return t.circle; });
}

real ricci_sphere(const DoublyWarpedMetric& m, real r) {
  return evaluate(m, r, [](const RicciTerms& t) { return t.sphere; });
}

RicciReport ricci_report(const DoublyWarpedMetric& m, real r) {
  RicciReport rep;
  rep.r = r;
  rep.ric_radial = ricci_radial(m, r);
  rep.ric_circle = ricci_circle(m, r);
  rep.ric_sphere = ricci_sphere(m, r);
  rep.min_value = std::min({rep.ric_radial, rep.ric_circle, rep.ric_sphere});
  return rep;
}

// ---------------------------------------------------------------------------
// Coordinate oracle

namespace {

class CoordinateMetric {
 public:
  explicit CoordinateMetric(const DoublyWarpedMetric& m) : m_(m), n_(m.k + 2) {}

  int dim() const { return n_; }

  // Full n×n metric at coordinates x = (r, θ_1..θ_k, v).
  void assemble(const std::vector<real>& x, std::vector<real>& g) const {
    g.assign(static_cast<std::size_t>(n_ * n_), 0);
    const real f = m_.f.value(x[0]);
    const real h = m_.h.value(x[0]);
    g[0] = 1;
    real sphere_factor = f * f;
    for (int i = 1; i <= m_.k; ++i) {
      g[static_cast<std::size_t>(i * n_ + i)] = sphere_factor;
      const real s = std::sin(x[static_cast<std::size_t>(i)]);
      sphere_factor *= s * s;
    }
    g[static_cast<std::size_t>((n_ - 1) * n_ + (n_ - 1))] = h * h;
  }

 private:
  const DoublyWarpedMetric& m_;
  int n_;
};

// Dense Gauss-Jordan inverse; the metric here is small and well conditioned
// after row scaling.
std::vector<real> invert(std::vector<real> a, int n) {
  std::vector<real> inv(static_cast<std::size_t>(n * n), 0);
  for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(i * n + i)] = 1;
  auto at = [n](std::vector<real>& v, int i, int j) -> real& {
    return v[static_cast<std::size_t>(i * n + j)];
  };
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i) {
      if (std::abs(at(a, i, col)) > std::abs(at(a, piv, col))) piv = i;
    }
    if (at(a, piv, col) == 0) throw Error(ErrorKind::InvalidArgument, "singular metric");
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(at(a, col, j), at(a, piv, j));
        std::swap(at(inv, col, j), at(inv, piv, j));
      }
    }
    const real d = at(a, col, col);
    for (int j = 0; j < n; ++j) {
      at(a, col, j) /= d;
      at(inv, col, j) /= d;
    }
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      const real factor = at(a, i, col);
      if (factor == 0) continue;
      for (int j = 0; j < n; ++j) {
        at(a, i, j) -= factor * at(a, col, j);
        at(inv, i, j) -= factor * at(inv, col, j);
      }
    }
  }
  return inv;
}

class ChristoffelOracle {
 public:
  ChristoffelOracle(const CoordinateMetric& metric, std::vector<real> steps)
      : metric_(metric), n_(metric.dim()), steps_(std::move(steps)) {}

  // Γ^a_bc stored at [a*n*n + b*n + c].
  std::vector<real> christoffel(const std::vector<real>& x) const {
    const auto n = static_cast<std::size_t>(n_);
    std::vector<real> g;
    metric_.assemble(x, g);
    const std::vector<real> ginv = invert(g, n_);

    // dg[c][a][b] = ∂_c g_ab
    std::vector<real> dg(n * n * n, 0);
    std::vector<real> xp = x, xm = x, gp, gm;
    for (std::size_t c = 0; c < n; ++c) {
      const real s = steps_[c];
      xp[c] = x[c] + s;
      xm[c] = x[c] - s;
      metric_.assemble(xp, gp);
      metric_.assemble(xm, gm);
      for (std::size_t i = 0; i < n * n; ++i) dg[c * n * n + i] = (gp[i] - gm[i]) / (2 * s);
      xp[c] = x[c];
      xm[c] = x[c];
    }

    std::vector<real> gamma(n * n * n, 0);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t c = b; c < n; ++c) {
          real sum = 0;
          for (std::size_t d = 0; d < n; ++d) {
            const real gi = ginv[a * n + d];
            if (gi == 0) continue;
            sum += gi * (dg[b * n * n + d * n + c] + dg[c * n * n + d * n + b] -
                         dg[d * n * n + b * n + c]);
          }
          gamma[a * n * n + b * n + c] = sum / 2;
          gamma[a * n * n + c * n + b] = sum / 2;
        }
      }
    }
    return gamma;
  }

  // Ric_bc = ∂_a Γ^a_bc - ∂_c Γ^a_ab + Γ^a_ad Γ^d_bc - Γ^a_cd Γ^d_ab
  std::vector<real> ricci(const std::vector<real>& x) const {
    const auto n = static_cast<std::size_t>(n_);
    const std::vector<real> gamma = christoffel(x);
    std::vector<real> dgamma(n * n * n * n, 0);  // [e][a][b][c] = ∂_e Γ^a_bc
    std::vector<real> xp = x, xm = x;
    for (std::size_t e = 0; e < n; ++e) {
      const real s = steps_[e];
      xp[e] = x[e] + s;
      xm[e] = x[e] - s;
      const auto gp = christoffel(xp);
      const auto gm = christoffel(xm);
      for (std::size_t i = 0; i < n * n * n; ++i) {
        dgamma[e * n * n * n + i] = (gp[i] - gm[i]) / (2 * s);
      }
      xp[e] = x[e];
      xm[e] = x[e];
    }
    auto G = [&](std::size_t a, std::size_t b, std::size_t c) { return gamma[a * n * n + b * n + c]; };
    auto dG = [&](std::size_t e, std::size_t a, std::size_t b, std::size_t c) {
      return dgamma[e * n * n * n + a * n * n + b * n + c];
    };
    std::vector<real> ric(n * n, 0);
    for (std::size_t b = 0; b < n; ++b) {
      for (std::size_t c = 0; c < n; ++c) {
        real sum = 0;
        for (std::size_t a = 0; a < n; ++a) {
          sum += dG(a, a, b, c) - dG(c, a, a, b);
          for (std::size_t d = 0; d < n; ++d) {
            sum += G(a, a, d) * G(d, b, c) - G(a, c, d) * G(d, a, b);
          }
        }
        ric[b * n + c] = sum;
      }
    }
    return ric;
  }

 private:
  const CoordinateMetric& metric_;
  int n_;
  std::vector<real> steps_;
};

struct PrincipalValues {
  std::array<real, 3> values{};  // radial, circle, sphere
  real off_diagonal = 0;         // largest normalized off-diagonal entry
};

PrincipalValues principal(const std::vector<real>& ric, const std::vector<real>& g, int n) {
  auto at = [n](const std::vector<real>& v, int i, int j) {
    return v[static_cast<std::size_t>(i * n + j)];
  };
  PrincipalValues p;
  p.values[0] = at(ric, 0, 0) / at(g, 0, 0);
  p.values[1] = at(ric, n - 1, n - 1) / at(g, n - 1, n - 1);
  p.values[2] = at(ric, 1, 1) / at(g, 1, 1);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const real norm = std::sqrt(at(g, i, i) * at(g, j, j));
      p.off_diagonal = std::max(p.off_diagonal, std::abs(at(ric, i, j)) / norm);
    }
  }
  return p;
}

}  // namespace

RicciReport ricci_numeric_oracle(const DoublyWarpedMetric& m, real r, const OracleOptions& opts) {
  if (!(r > 0)) throw Error(ErrorKind::InvalidArgument, "oracle needs r > 0");
  const CoordinateMetric metric(m);
  const int n = metric.dim();
  if (!(m.f.value(r) > 0) || !(m.h.value(r) > 0)) {
    throw Error(ErrorKind::NonPositiveWarping, "oracle evaluated where f or h <= 0");
  }

  // A generic sphere point well away from the coordinate singularities.
  std::vector<real> x(static_cast<std::size_t>(n), 0);
  x[0] = r;
  for (int i = 1; i <= m.k; ++i) x[static_cast<std::size_t>(i)] = 1.1L - 0.05L * static_cast<real>(i % 7);
  x[static_cast<std::size_t>(n - 1)] = 0.3L;

  std::vector<real> g;
  metric.assemble(x, g);

  auto run = [&](real factor) {
    std::vector<real> steps(static_cast<std::size_t>(n), opts.angular_step * factor);
    steps[0] = opts.relative_step * r * factor;
    const ChristoffelOracle oracle(metric, steps);
    return principal(oracle.ricci(x), g, n);
  };
  const PrincipalValues coarse = run(1);
  const PrincipalValues fine = run(0.5L);

  // Yardstick for consistency checks: the size of the individual terms that
  // cancel in each component, which can be far larger than the component.
  const RicciTerms terms = terms_at(m, r);
  const Jet2 fj = m.f(r);
  const Jet2 hj = m.h(r);
  const real lf = fj.d1 / fj.value;
  const real lh = hj.d1 / hj.value;
  const real intrinsic = static_cast<real>(m.k) * (lf * lf + std::abs(fj.d2 / fj.value)) + lh * lh +
                         std::abs(hj.d2 / hj.value) + 1 / (fj.value * fj.value);
  const std::array<real, 3> scales = {std::max(terms.radial.scale(m.k), intrinsic),
                                      std::max(terms.circle.scale(m.k), intrinsic),
                                      std::max(terms.sphere.scale(m.k), intrinsic)};
  std::array<real, 3> extrapolated{};
  for (std::size_t i = 0; i < 3; ++i) {
    const real diff = std::abs(fine.values[i] - coarse.values[i]);
    const real scale = std::max(scales[i], std::abs(fine.values[i]));
    if (diff > opts.consistency_tol * scale + 1e-300L) {
      std::ostringstream os;
      os << "Richardson consistency failed at r=" << r << " (direction " << i << ", diff " << diff
         << ", scale " << scale << ")";
      throw Error(ErrorKind::StepTooLarge, os.str());
    }
    extrapolated[i] = (4 * fine.values[i] - coarse.values[i]) / 3;
  }
  const real max_scale = std::max({scales[0], scales[1], scales[2]});
  if (fine.off_diagonal > opts.diagonal_tol * max_scale + 1e-300L) {
    std::ostringstream os;
    os << "non-diagonal Ricci tensor at r=" << r << ": " << fine.off_diagonal;
    throw Error(ErrorKind::InvalidArgument, os.str());
  }

  RicciReport rep;
  rep.r = r;
  rep.ric_radial = extrapolated[0];
  rep.ric_circle = extrapolated[1];
  rep.ric_sphere = extrapolated[2];
  rep.min_value = std::min({rep.ric_radial, rep.ric_circle, rep.ric_sphere});
  return rep;
}

GridCheck ricci_positive_on_grid(const DoublyWarpedMetric& m, std::span<const real> grid) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty grid");
  GridCheck out;
  bool first = true;
  for (real r : grid) {
    if (!(r > 0)) throw Error(ErrorKind::InvalidArgument, "grid radii must be > 0");
    const RicciReport rep = ricci_report(m, r);
    if (first || rep.min_value < out.worst.min_value) {
      out.worst = rep;
      first = false;
    }
  }
  out.positive = out.worst.min_value > 0;
  return out;
}

std::vector<real> log_grid(real lo, real hi, std::size_t n) {
  if (!(lo > 0) || !(hi > lo) || n < 2) {
    throw Error(ErrorKind::InvalidArgument, "log_grid needs 0 < lo < hi and n >= 2");
  }
  std::vector<real> out(n);
  const real a = std::log(lo);
  const real b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(a + (b - a) * static_cast<real>(i) / static_cast<real>(n - 1));
  }
  out.front() = lo;
  out.back() = hi;
  return out;
}

real nabonnand_threshold(real alpha) {
  return std::max(4 * alpha + 2, 16 * alpha * alpha + 8 * alpha);
}

}  // namespace warplab
