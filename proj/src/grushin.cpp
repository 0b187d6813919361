#include "warplab/grushin.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <random>
#include <sstream>

#include "warplab/kv.hpp"

namespace warplab {

namespace {

// Clairaut arc from level t0 with delta_w = target, by root-finding on
// x = ln(t_max - t0); delta_w grows from 0 as t_max leaves t0.
PairDistance equal_level(const HalfplaneMetric& m, real t0, real target) {
  auto dw = [&](real u) { return clairaut_arc_at(m, t0 + u, t0).delta_v; };
  real lo = t0 * 1e-3L;
  for (int i = 0; i < 40 && dw(lo) >= target; ++i) lo /= 1e3L;
  real hi = t0;
  for (int i = 0; i < 400 && dw(hi) < target; ++i) {
    if (t0 + 4 * hi > m.hi) throw Error(ErrorKind::TargetUnreachable, "equal-level arc leaves the domain");
    hi *= 4;
  }
  const real lt = std::log(target);
  const real x = find_root([&](real x) { return std::log(dw(std::exp(x))) - lt; }, std::log(lo), std::log(hi),
                           1e-14L, 1e-14L);
  const GeodesicSolution arc = clairaut_arc_at(m, t0 + std::exp(x), t0);
  PairDistance out;
  out.d = arc.length;
  out.kind = PairKind::EqualLevel;
  out.t_max = arc.r_max;
  return out;
}

DijkstraResult grid_run(const HalfplaneMetric& m, Point p1, Point p2, real t_floor, const GridPairOptions& g) {
  const real t_top = std::max(p1.first, p2.first);
  const real dw = std::abs(p1.second - p2.second);
  // The path climbs to roughly the turning level of the equal-level arc
  // at the upper endpoint.
  const real t_turn = equal_level(m, t_top, dw).t_max;
  DijkstraOptions o;
  o.r_lo = std::max(t_floor, std::min(p1.first, p2.first) / 4);
  o.r_hi = 1.5L * t_turn + std::abs(p1.first - p2.first);
  o.nr = g.nr;
  const real dr = (o.r_hi - o.r_lo) / static_cast<real>(o.nr);
  const real dv = g.aspect * dr / m.value(t_turn);
  o.v_lo = std::min(p1.second, p2.second);
  o.v_hi = std::max(p1.second, p2.second);
  o.nv = static_cast<std::size_t>(std::ceil((o.v_hi - o.v_lo) / dv));
  o.max_edges = g.max_edges;
  try {
    return dijkstra_distance_oracle([&m](real t) { return m.value(t); }, p1, p2, o);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::ResourceLimit) throw Error(ErrorKind::UnsupportedPair, e.what());
    throw;
  }
}

}  // namespace

HalfplaneMetric GrushinMetric::halfplane() const {
  if (!(alpha >= 0.5L) || !(eps > 0)) throw Error(ErrorKind::InvalidArgument, "Grushin needs alpha ≥ 1/2, eps > 0");
  const real a = alpha;
  HalfplaneMetric m;
  m.h = [a](real t) {
    const real v = std::pow(t, -2 * a);
    return Jet2{v, -2 * a * v / t, 2 * a * (2 * a + 1) * v / (t * t)};
  };
  m.lo = 0;
  m.hi = 1e300L;
  std::ostringstream id;
  id << "grushin:" << format_real(alpha);
  m.id = id.str();
  return m;
}

PairDistance pair_distance(const HalfplaneMetric& m, Point p1, Point p2, real eps, const GridPairOptions& grid) {
  if (!(p1.first > m.lo && p2.first > m.lo)) throw Error(ErrorKind::InvalidArgument, "points must lie above t = 0");
  PairDistance out;
  if (p1 == p2) return out;
  if (p1.second == p2.second) {
    out.d = std::abs(p1.first - p2.first);
    out.kind = PairKind::Radial;
    return out;
  }
  if (p1.first == p2.first) return equal_level(m, p1.first, std::abs(p1.second - p2.second));
  const DijkstraResult r = grid_run(m, p1, p2, eps, grid);
  out.d = r.distance;
  out.kind = PairKind::Grid;
  out.error_estimate = r.error_estimate;
  if (std::min(p1.first, p2.first) / 4 <= eps) {
    out.eps_sensitivity = std::abs(grid_run(m, p1, p2, 2 * eps, grid).distance - r.distance);
  }
  return out;
}

PairDistance grushin_distance(const GrushinMetric& g, Point p1, Point p2, const GridPairOptions& grid) {
  return pair_distance(g.halfplane(), p1, p2, g.eps, grid);
}

HalfplaneMetric RescaledModel::halfplane() const {
  // λ^(2α)/C in log form: λ and C can both be far outside double range.
  const real factor = std::exp(2 * alpha * std::log(lambda) - std::log(constant));
  const real lam = lambda;
  auto h = h_s;
  HalfplaneMetric m;
  m.h = [h, factor, lam](real t) {
    const Jet2 j = h(lam * t);
    return Jet2{factor * j.value, factor * lam * j.d1, factor * lam * lam * j.d2};
  };
  m.lo = 0;
  m.hi = window_hi / lambda;
  std::ostringstream id;
  id << "rescaled:" << format_real(lambda);
  m.id = id.str();
  return m;
}

bool RescaledModel::covers(real t_lo, real t_hi) const {
  return lambda * t_lo >= window_lo && lambda * t_hi <= window_hi;
}

RegimeWindow regime_window(const SmoothedH& hs, std::size_t row, bool beta) {
  const auto& segs = hs.base().segments();
  const real first = segs.front().exponent;
  std::vector<const Segment*> pure;
  for (const auto& s : segs) {
    if (!s.bridge && (s.exponent == first) != beta) pure.push_back(&s);
  }
  if (row >= pure.size()) throw Error(ErrorKind::OutOfRange, "the model has no such regime row");
  const Segment& s = *pure[row];
  // Blends reach 0.2R into a segment on either side.
  RegimeWindow w;
  w.lo = 1.2L * s.lo;
  w.hi = 0.8L * s.hi;
  w.exponent = s.exponent;
  w.constant = std::exp(s.log_constant);
  return w;
}

RescaledModel rescale(const std::function<Jet2(real)>& h_s, real alpha, real lambda, const RegimeWindow& w) {
  if (!(lambda > 1)) throw Error(ErrorKind::InvalidArgument, "lambda must exceed 1");
  RescaledModel m;
  m.h_s = h_s;
  m.alpha = alpha;
  m.lambda = lambda;
  m.constant = w.constant;
  m.window_lo = w.lo;
  m.window_hi = w.hi;
  return m;
}

PairDistance rescaled_distance(const RescaledModel& model, Point p1, Point p2, const GridPairOptions& grid) {
  return pair_distance(model.halfplane(), p1, p2, 1e-3L, grid);
}

real coefficient_error(const RescaledModel& model, real t) {
  const real h = model.halfplane().value(t);
  const real g = std::pow(t, -4 * model.alpha);
  return std::abs(h * h - g) / g;
}

std::vector<ProbePair> probe_pairs(std::size_t n, unsigned seed, real t_lo, real t_hi, real w_max) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ut(std::log(static_cast<double>(t_lo)), std::log(static_cast<double>(t_hi)));
  std::uniform_real_distribution<double> uw(0.05, static_cast<double>(w_max));
  std::vector<ProbePair> out;
  for (std::size_t i = 0; i < n; ++i) {
    const real t1 = std::exp(static_cast<real>(ut(rng)));
    const real w = static_cast<real>(uw(rng)) - w_max / 2;
    if (i % 2 == 0) {
      real t2 = std::exp(static_cast<real>(ut(rng)));
      if (t2 == t1) t2 = std::min(t_hi, t1 * 1.5L);
      out.push_back({{t1, w}, {t2, w}});
    } else {
      const real dw = static_cast<real>(uw(rng));
      out.push_back({{t1, w}, {t1, w + dw}});
    }
  }
  return out;
}

ComparisonReport convergence_report(const std::function<Jet2(real)>& h_s, const RegimeWindow& w,
                                    const std::vector<ProbePair>& probes, const std::vector<real>& lambdas) {
  const GrushinMetric g{w.exponent};
  std::vector<PairDistance> ref;
  for (const auto& p : probes) ref.push_back(grushin_distance(g, p.p1, p.p2));
  ComparisonReport rep;
  std::size_t usable = 0;
  for (real lambda : lambdas) {
    const RescaledModel model = rescale(h_s, w.exponent, lambda, w);
    ComparisonRow row;
    row.lambda = lambda;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      const auto& p = probes[i];
      const real t_lo = std::min(p.p1.first, p.p2.first);
      real t_hi = std::max({p.p1.first, p.p2.first, ref[i].t_max});
      if (!model.covers(t_lo, t_hi)) {
        ++row.excluded;
        continue;
      }
      const PairDistance d = rescaled_distance(model, p.p1, p.p2);
      t_hi = std::max(t_hi, d.t_max);
      if (!model.covers(t_lo, t_hi)) {
        ++row.excluded;
        continue;
      }
      if (ref[i].d > 0) row.max_rel_err = std::max(row.max_rel_err, std::abs(d.d - ref[i].d) / ref[i].d);
      ++row.counted;
    }
    if (row.counted > 0) ++usable;
    rep.rows.push_back(row);
  }
  if (usable < 3) {
    std::ostringstream os;
    os << "only " << usable << " λ values keep probes inside the window";
    throw Error(ErrorKind::WindowTooNarrow, os.str());
  }
  rep.trend = true;
  const ComparisonRow* prev = nullptr;
  for (const auto& row : rep.rows) {
    if (row.counted == 0) continue;
    if (prev && row.max_rel_err > prev->max_rel_err * 1.1L) rep.trend = false;
    prev = &row;
  }
  return rep;
}

real self_similarity_error(const GrushinMetric& g, const ProbePair& pair, real s) {
  auto dilate = [&](Point p) { return Point{s * p.first, std::pow(s, 1 + 2 * g.alpha) * p.second}; };
  const real d = grushin_distance(g, pair.p1, pair.p2).d;
  const real ds = grushin_distance(g, dilate(pair.p1), dilate(pair.p2)).d;
  return std::abs(ds - s * d) / (s * d);
}

void write_comparison_csv(std::ostream& os, const ComparisonReport& r) {
  os << "lambda,max_rel_err\n";
  for (const auto& row : r.rows) os << format_real(row.lambda) << "," << format_real(row.max_rel_err) << "\n";
}

}  // namespace warplab
