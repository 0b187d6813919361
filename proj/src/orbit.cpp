#include "warplab/orbit.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <memory>
#include <numeric>
#include <queue>
#include <sstream>
#include <thread>

#include "warplab/kv.hpp"

namespace warplab {

namespace {

constexpr real kInf = std::numeric_limits<real>::infinity();

// Integrand pieces of the arc: the turning point sits at r_max, c = h(r_max).
struct ArcIntegrand {
  const HalfplaneMetric& m;
  real r_max;
  Jet2 hm;  // jet of h at r_max

  // h(r) - c. Close to the turning point the difference cancels, so it is
  // taken as the integral of -h' over [r, r_max] by 4-point Gauss-Legendre;
  // h' comes from the jets and carries no cancellation.
  real gap(real r, real hr) const {
    const real dr = r_max - r;
    if (dr >= 0.05L * std::max(r_max, 1.0L)) return hr - hm.value;
    static constexpr real x[4] = {-0.861136311594052575224L, -0.339981043584856264803L,
                                  0.339981043584856264803L, 0.861136311594052575224L};
    static constexpr real w[4] = {0.347854845137453857373L, 0.652145154862546142627L,
                                  0.652145154862546142627L, 0.347854845137453857373L};
    const real mid = r + dr / 2;
    real sum = 0;
    for (int i = 0; i < 4; ++i) sum -= w[i] * m.h(mid + x[i] * dr / 2).d1;
    return sum * dr / 2;
  }
  // (dv/dr, ds/dr) along the arc.
  std::pair<real, real> at(real r) const {
    const real hr = m.value(r);
    const real root = std::sqrt(gap(r, hr) * (hr + hm.value));
    return {hm.value / (hr * root), hr / root};
  }
};

void split_at(std::vector<real>& pts, const std::vector<real>& breaks, real a, real b) {
  pts.push_back(a);
  for (real x : breaks) {
    if (x > a && x < b) pts.push_back(x);
  }
  pts.push_back(b);
}

QuadResult integrate_linear(const std::function<real(real)>& f, real a, real b, const std::vector<real>& breaks,
                            const QuadOptions& q) {
  std::vector<real> pts;
  split_at(pts, breaks, a, b);
  return integrate_pieces(f, pts, q);
}

QuadResult integrate_log(const std::function<real(real)>& f, real a, real b, const std::vector<real>& breaks,
                         const QuadOptions& q) {
  std::vector<real> pts;
  split_at(pts, breaks, a, b);
  for (real& x : pts) x = std::log(x);
  // Cap each piece at 40 e-folds so no single rule spans too many decades.
  std::vector<real> fine;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const int n = std::max(1, static_cast<int>(std::ceil((pts[i + 1] - pts[i]) / 40)));
    for (int j = 0; j < n; ++j) fine.push_back(pts[i] + (pts[i + 1] - pts[i]) * j / n);
  }
  fine.push_back(pts.back());
  return integrate_pieces([&f](real u) {
    const real r = std::exp(u);
    return f(r) * r;
  }, fine, q);
}

}  // namespace

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::uint64_t HalfplaneMetric::hash() const {
  // Sampled values of h go into the key so two models sharing an id never
  // share a cache file.
  std::string key = id + "|" + format_real(lo) + "|" + format_real(hi);
  const real top = std::min(hi, 1e2000L) * 0.999L;
  for (real r : log_grid(1e-3L, std::max(top, 1e-2L), 64)) key += "|" + format_real(h(r).value);
  return fnv1a(key);
}

HalfplaneMetric halfplane(const WarpingFunction& h, std::string id, real lo, real hi) {
  HalfplaneMetric m;
  m.h = h.eval;
  m.lo = lo;
  m.hi = hi;
  m.id = std::move(id);
  return m;
}

HalfplaneMetric halfplane(const SmoothedH& hs, std::string id) {
  HalfplaneMetric m;
  auto self = std::make_shared<const SmoothedH>(hs);
  m.h = [self](real r) { return (*self)(r); };
  m.lo = 0;
  m.hi = hs.last_junction() > 0 ? 1.3L * hs.last_junction() : 1e2000L;
  m.breaks = hs.breakpoints();
  m.id = std::move(id);
  return m;
}

HalfplaneMetric power_decay_halfplane(real alpha) {
  const WarpingFunction h = power_decay_h(alpha);
  return halfplane(h, h.label);
}

real circle_length(const HalfplaneMetric& m, real r) { return kTwoPi * m.value(r); }

real solve_turning_point(const HalfplaneMetric& m, real c) {
  const real sup = m.lo > 0 || std::isfinite(m.value(m.lo)) ? m.value(m.lo) : kInf;
  const real inf = m.value(m.hi);
  if (!(c < sup && c > inf)) {
    std::ostringstream os;
    os << "c=" << c << " outside (" << inf << ", " << sup << ")";
    throw Error(ErrorKind::OutOfRange, os.str());
  }
  real b = std::max(1.0L, 2 * m.lo);
  for (int i = 0; i < 400 && !(m.value(b) < c); ++i) b = std::min(b * 16, m.hi);
  real a = b;
  for (int i = 0; i < 4000 && !(m.value(a) > c); ++i) a = m.lo + (a - m.lo) / 16;
  if (!(m.value(a) > c && m.value(b) < c)) throw Error(ErrorKind::OutOfRange, "could not bracket h(r) = c");
  const real lc = std::log(c);
  auto g = [&](real x) { return std::log(m.value(std::exp(x))) - lc; };
  if (a > 0) return std::exp(find_root(g, std::log(a), std::log(b), 1e-18L, 1e-18L));
  return find_root([&](real r) { return m.value(r) - c; }, a, b, 1e-18L, 1e-300L);
}

GeodesicSolution clairaut_arc_at(const HalfplaneMetric& m, real r_max, real r_start, const QuadOptions& q) {
  if (!(r_max > r_start)) throw Error(ErrorKind::InvalidArgument, "turning point must lie beyond the start");
  const ArcIntegrand arc{m, r_max, m.h(r_max)};
  if (!(arc.hm.d1 < 0)) throw Error(ErrorKind::InvalidArgument, "h must decrease at the turning point");
  const real delta = (r_max - r_start) / 2;
  const real mid = r_max - delta;

  auto dv = [&](real r) { return arc.at(r).first; };
  auto ds = [&](real r) { return arc.at(r).second; };

  QuadResult lower_v, lower_s;
  auto add = [](QuadResult& acc, const QuadResult& x) {
    acc.value += x.value;
    acc.error += x.error;
    acc.converged = acc.converged && x.converged;
  };
  if (r_start == 0) {
    const real t = std::min(mid, 1.0L);
    add(lower_v, integrate_linear(dv, 0, t, m.breaks, q));
    add(lower_s, integrate_linear(ds, 0, t, m.breaks, q));
    if (mid > t) {
      add(lower_v, integrate_log(dv, t, mid, m.breaks, q));
      add(lower_s, integrate_log(ds, t, mid, m.breaks, q));
    }
  } else if (mid / r_start <= 8) {
    add(lower_v, integrate_linear(dv, r_start, mid, m.breaks, q));
    add(lower_s, integrate_linear(ds, r_start, mid, m.breaks, q));
  } else {
    add(lower_v, integrate_log(dv, r_start, mid, m.breaks, q));
    add(lower_s, integrate_log(ds, r_start, mid, m.breaks, q));
  }

  // r = r_max - δ s², s ∈ [0, 1]: the 1/√(r_max - r) singularity becomes smooth.
  std::vector<real> s_breaks = {0};
  for (auto it = m.breaks.rbegin(); it != m.breaks.rend(); ++it) {
    if (*it > mid && *it < r_max) s_breaks.push_back(std::sqrt((r_max - *it) / delta));
  }
  s_breaks.push_back(1);
  std::sort(s_breaks.begin(), s_breaks.end());
  auto sv = [&](real s) { return arc.at(r_max - delta * s * s).first * 2 * delta * s; };
  auto ss = [&](real s) { return arc.at(r_max - delta * s * s).second * 2 * delta * s; };
  const QuadResult upper_v = integrate_pieces(sv, s_breaks, q);
  const QuadResult upper_s = integrate_pieces(ss, s_breaks, q);

  if (!(lower_v.converged && lower_s.converged && upper_v.converged && upper_s.converged)) {
    std::ostringstream os;
    os << "arc integrals did not converge for r_max=" << r_max;
    throw Error(ErrorKind::QuadratureFailure, os.str());
  }
  GeodesicSolution sol;
  sol.clairaut_c = arc.hm.value;
  sol.r_start = r_start;
  sol.r_max = r_max;
  sol.delta_v = 2 * (lower_v.value + upper_v.value);
  sol.length = 2 * (lower_s.value + upper_s.value);
  return sol;
}

GeodesicSolution clairaut_arc(const HalfplaneMetric& m, real c, const QuadOptions& q) {
  return clairaut_arc_at(m, solve_turning_point(m, c), m.lo, q);
}

MonotoneCheck check_delta_v_monotone(const HalfplaneMetric& m, real r_lo, real r_hi, std::size_t samples,
                                     real r_start) {
  MonotoneCheck out;
  real prev_c = kInf;
  real prev_dv = -kInf;
  for (real r : log_grid(r_lo, r_hi, samples)) {
    const GeodesicSolution g = clairaut_arc_at(m, r, r_start);
    if (!(g.clairaut_c < prev_c && g.delta_v > prev_dv)) {
      std::ostringstream os;
      os << "delta_v not strictly decreasing in c near r_max=" << r << " (c=" << g.clairaut_c
         << ", delta_v=" << g.delta_v << ", previous " << prev_dv << ")";
      out.ok = false;
      out.diagnostic = os.str();
      return out;
    }
    prev_c = g.clairaut_c;
    prev_dv = g.delta_v;
  }
  return out;
}

real test_loop_bound(const HalfplaneMetric& m, real l, real r_hi, std::size_t samples) {
  real best = kTwoPi * l * m.value(m.lo) + 0;
  for (real r : log_grid(std::max(m.lo, 1e-3L), r_hi, samples)) {
    best = std::min(best, 2 * (r - m.lo) + kTwoPi * l * m.value(r));
  }
  return best;
}

OrbitDistance orbit_distance(const HalfplaneMetric& m, real l, const OrbitOptions& opts) {
  OrbitDistance out;
  out.l = l;
  if (l < 0) throw Error(ErrorKind::InvalidArgument, "l must be nonnegative");
  if (l == 0) {
    out.kind = PathKind::Axis;
    return out;
  }
  const real target = kTwoPi * l;
  const real r0 = m.lo + 1e-4L * std::max(m.lo, 1.0L);
  auto fallback = [&](const std::string& why) {
    out.kind = PathKind::TestLoop;
    out.flagged = true;
    const real hi = std::isfinite(m.hi) ? std::min(m.hi, 1e300L) : 1e300L;
    out.d = test_loop_bound(m, l, hi);
    out.note = why;
    return out;
  };
  if (!(m.h(r0).d1 < 0)) return fallback("h does not decrease");
  const GeodesicSolution small = clairaut_arc_at(m, r0, m.lo, opts.quad);
  if (target <= small.delta_v) {
    out.kind = PathKind::Axis;
    out.d = m.value(m.lo) * target;
    return out;
  }
  // Expand the bracket by repeated squaring of the growth factor.
  real lo = r0;
  real hi = std::max(1.0L, 2 * r0);
  real factor = 2;
  GeodesicSolution top = clairaut_arc_at(m, std::min(hi, m.hi), m.lo, opts.quad);
  while (top.delta_v < target) {
    if (hi >= m.hi) {
      std::ostringstream os;
      os << "delta_v reaches only " << top.delta_v << " < " << target << " inside the domain";
      if (std::isfinite(m.hi)) return fallback(os.str());
      throw Error(ErrorKind::TargetUnreachable, os.str());
    }
    lo = hi;
    hi = std::min(hi * factor, m.hi);
    factor = std::min(factor * factor, 1e300L);
    top = clairaut_arc_at(m, hi, m.lo, opts.quad);
  }
  if (opts.check_monotone) {
    const MonotoneCheck mc = check_delta_v_monotone(m, r0, hi, 200, m.lo);
    if (!mc.ok) throw Error(ErrorKind::TargetUnreachable, mc.diagnostic);
  }
  const real lt = std::log(target);
  auto g = [&](real x) { return std::log(clairaut_arc_at(m, std::exp(x), m.lo, opts.quad).delta_v) - lt; };
  const real x = find_root(g, std::log(lo), std::log(hi), opts.root_tol, opts.root_tol);
  out.arc = clairaut_arc_at(m, std::exp(x), m.lo, opts.quad);
  out.d = out.arc.length;
  return out;
}

OrbitTable::OrbitTable(HalfplaneMetric m, std::filesystem::path cache_dir, OrbitOptions opts)
    : m_(std::move(m)), dir_(std::move(cache_dir)), opts_(opts) {
  if (opts_.check_monotone) {
    const real top = std::min(m_.hi, 1e300L);
    const MonotoneCheck mc = check_delta_v_monotone(m_, m_.lo + 1e-4L * std::max(m_.lo, 1.0L), top, 200, m_.lo);
    if (!mc.ok) throw Error(ErrorKind::TargetUnreachable, mc.diagnostic);
    opts_.check_monotone = false;
  }
  load();
}

OrbitTable::~OrbitTable() {
  try {
    flush();
  } catch (...) {
  }
}

std::filesystem::path OrbitTable::cache_file() const {
  if (dir_.empty()) return {};
  char name[64];
  std::snprintf(name, sizeof name, "orbit_%016llx.txt", static_cast<unsigned long long>(m_.hash()));
  return dir_ / name;
}

void OrbitTable::load() {
  const auto path = cache_file();
  if (path.empty() || !std::filesystem::exists(path)) return;
  std::ifstream in(path);
  std::string line;
  if (!std::getline(in, line) || line != "# warplab orbit cache") return;
  if (!std::getline(in, line) || line != "model = " + std::to_string(m_.hash())) return;
  std::map<real, OrbitDistance> loaded;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string l, d, c, r, kind;
    if (!(ls >> l >> d >> c >> r >> kind)) return;  // torn file: ignore it entirely
    OrbitDistance e;
    try {
      e.l = parse_real(l, "l");
      e.d = parse_real(d, "d_l");
      e.arc.clairaut_c = parse_real(c, "c");
      e.arc.r_max = parse_real(r, "r_max");
    } catch (const Error&) {
      return;
    }
    e.arc.r_start = m_.lo;
    e.kind = kind == "arc" ? PathKind::Arc : kind == "axis" ? PathKind::Axis : PathKind::TestLoop;
    e.flagged = e.kind == PathKind::TestLoop;
    e.arc.length = e.kind == PathKind::Arc ? e.d : 0;
    e.arc.delta_v = e.kind == PathKind::Arc ? kTwoPi * e.l : 0;
    loaded[e.l] = e;
  }
  table_ = std::move(loaded);
  loaded_ = table_.size();
}

void OrbitTable::flush() {
  std::lock_guard lock(mu_);
  const auto path = cache_file();
  if (path.empty() || pending_.empty()) return;
  std::filesystem::create_directories(dir_);
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error(ErrorKind::CacheError, "cannot write " + tmp);
    out << "# warplab orbit cache\n";
    out << "model = " << m_.hash() << "\n";
    for (const auto& [l, e] : table_) {
      const char* kind = e.kind == PathKind::Arc ? "arc" : e.kind == PathKind::Axis ? "axis" : "loop";
      out << format_real(l) << " " << format_real(e.d) << " " << format_real(e.arc.clairaut_c) << " "
          << format_real(e.arc.r_max) << " " << kind << "\n";
    }
  }
  std::filesystem::rename(tmp, path);
  pending_.clear();
}

const OrbitDistance& OrbitTable::get(real l) {
  {
    std::lock_guard lock(mu_);
    if (auto it = table_.find(l); it != table_.end()) return it->second;
  }
  OrbitDistance e = orbit_distance(m_, l, opts_);
  std::lock_guard lock(mu_);
  ++computed_;
  pending_.push_back(l);
  return table_.emplace(l, std::move(e)).first->second;
}

void OrbitTable::prefetch(const std::vector<real>& ls, unsigned threads) {
  std::vector<real> todo;
  {
    std::lock_guard lock(mu_);
    for (real l : ls) {
      if (!table_.count(l)) todo.push_back(l);
    }
  }
  std::sort(todo.begin(), todo.end());
  todo.erase(std::unique(todo.begin(), todo.end()), todo.end());
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, todo.size()));
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < todo.size();) {
      try {
        get(todo[i]);
      } catch (...) {
        std::lock_guard lock(fail_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::map<real, OrbitDistance> OrbitTable::entries() const {
  std::lock_guard lock(mu_);
  return table_;
}

real OrbitTable::max_power_within(real R) {
  const real r0 = m_.lo + 1e-4L * std::max(m_.lo, 1.0L);
  const GeodesicSolution small = clairaut_arc_at(m_, r0, m_.lo, opts_.quad);
  if (R < small.length) {
    // Only axis paths are this short.
    return std::min(R / (kTwoPi * m_.value(m_.lo)), small.delta_v / kTwoPi);
  }
  real lo = r0;
  real hi = std::max(1.0L, 2 * r0);
  real factor = 2;
  GeodesicSolution top = clairaut_arc_at(m_, hi, m_.lo, opts_.quad);
  while (top.length < R) {
    if (hi >= m_.hi) throw Error(ErrorKind::OutOfRange, "R beyond the represented domain");
    lo = hi;
    hi = std::min(hi * factor, m_.hi);
    factor = std::min(factor * factor, 1e300L);
    top = clairaut_arc_at(m_, hi, m_.lo, opts_.quad);
  }
  const real lR = std::log(R);
  auto g = [&](real x) { return std::log(clairaut_arc_at(m_, std::exp(x), m_.lo, opts_.quad).length) - lR; };
  const real x = find_root(g, std::log(lo), std::log(hi), opts_.root_tol, opts_.root_tol);
  return clairaut_arc_at(m_, std::exp(x), m_.lo, opts_.quad).delta_v / kTwoPi;
}

real orbit_count(OrbitTable& table, real R) {
  if (R < 0) return 0;
  const real x = table.max_power_within(R);
  real n = std::max(0.0L, std::floor(x));
  if (n < 1e15L) {
    // Settle the boundary against tabulated distances (closed ball).
    while (n >= 1 && table.get(n).d > R) n -= 1;
    while (table.get(n + 1).d <= R) n += 1;
  }
  return 2 * n + 1;
}

GrowthWindow growth_slope(OrbitTable& table, real lo, real hi, std::size_t samples) {
  if (!(lo > 0 && lo < hi) || samples < 10) throw Error(ErrorKind::DegenerateRange, "need 0 < lo < hi and ≥ 10 samples");
  GrowthWindow w;
  w.lo = lo;
  w.hi = hi;
  std::vector<real> x, y;
  for (real R : log_grid(lo, hi, samples)) {
    const real n = orbit_count(table, R);
    w.R.push_back(R);
    w.count.push_back(n);
    x.push_back(std::log(R));
    y.push_back(std::log(n));
  }
  const LineFit fit = fit_line(x, y);
  w.slope = fit.slope;
  w.residual = fit.residual;
  return w;
}

PowerWindow power_window(real alpha, real R) {
  if (!(alpha > 0 && R > 0)) throw Error(ErrorKind::InvalidArgument, "need alpha > 0 and R > 0");
  PowerWindow w;
  w.alpha = alpha;
  w.R = R;
  const real e = 2 * alpha + 1;
  w.C = (2 + 1 / alpha) * std::pow(kTwoPi * alpha, 1 / e);
  w.rho1 = std::pow(w.C, e / (2 * alpha));
  w.rho2 = std::pow(w.C, -e);
  w.C1 = std::pow(kTwoPi / w.C, 1 / (2 * alpha));
  w.C2 = w.C;
  w.l_lo = w.rho1 * std::pow(R, e);
  w.l_hi = w.rho2 * std::pow(R, 2 * e);
  if (w.l_lo > w.l_hi) {
    std::ostringstream os;
    os << "window [" << w.l_lo << ", " << w.l_hi << "] empty at R=" << R;
    throw Error(ErrorKind::WindowEmpty, os.str());
  }
  return w;
}

PowerBounds length_estimate(real alpha, real l) {
  const real p = std::pow(l, 1 / (1 + 2 * alpha));
  return {2 * std::pow(9.0L, -1 / (2 * alpha)) * p - 2, 9 * p};
}

namespace {

struct Direction {
  int a;
  int b;
};

std::vector<Direction> stencil_directions(int radius) {
  std::vector<Direction> dirs;
  for (int a = -radius; a <= radius; ++a) {
    for (int b = -radius; b <= radius; ++b) {
      if ((a != 0 || b != 0) && std::gcd(a, b) == 1) dirs.push_back({a, b});
    }
  }
  return dirs;
}

struct GridRun {
  double distance = 0;
  double anisotropy = 1;
  std::size_t edges = 0;
};

GridRun grid_shortest_path(const std::function<real(real)>& h, std::pair<real, real> p1, std::pair<real, real> p2,
                           const DijkstraOptions& o, std::size_t nr, std::size_t nv) {
  const std::vector<Direction> dirs = stencil_directions(o.stencil);
  const double dr = static_cast<double>((o.r_hi - o.r_lo) / static_cast<real>(nr));
  const double dv = static_cast<double>((o.v_hi - o.v_lo) / static_cast<real>(nv));
  const std::size_t NR = nr + 1;
  const std::size_t NV = nv + 1;
  const int M = std::max(1, o.substeps);

  std::vector<double> hn(NR), hc(nr * static_cast<std::size_t>(M));
  for (std::size_t i = 0; i < NR; ++i) hn[i] = static_cast<double>(h(o.r_lo + static_cast<real>(i) * static_cast<real>(dr)));
  for (std::size_t c = 0; c < nr; ++c) {
    for (int k = 0; k < M; ++k) {
      const real r = o.r_lo + (static_cast<real>(c) + (k + 0.5L) / M) * static_cast<real>(dr);
      hc[c * static_cast<std::size_t>(M) + static_cast<std::size_t>(k)] = static_cast<double>(h(r));
    }
  }
  // The metric does not depend on v, so every edge cost is a function of the
  // start row and the direction only.
  const std::size_t D = dirs.size();
  std::vector<double> cost(NR * D, -1);
  for (std::size_t i = 0; i < NR; ++i) {
    for (std::size_t d = 0; d < D; ++d) {
      const auto [a, b] = dirs[d];
      const long j = static_cast<long>(i) + a;
      if (j < 0 || j >= static_cast<long>(NR)) continue;
      double len = 0;
      if (a == 0) {
        len = hn[i] * std::abs(b) * dv;
      } else {
        const double sr = dr / M;
        const double sv = std::abs(b) * dv / (std::abs(a) * M);
        const long c0 = a > 0 ? static_cast<long>(i) : j;
        for (long c = c0; c < c0 + std::abs(a); ++c) {
          for (int k = 0; k < M; ++k) {
            const double hv = hc[static_cast<std::size_t>(c) * static_cast<std::size_t>(M) + static_cast<std::size_t>(k)];
            len += std::sqrt(sr * sr + hv * hv * sv * sv);
          }
        }
      }
      cost[i * D + d] = len;
    }
  }
  auto snap = [&](std::pair<real, real> p) {
    const long i = std::lround(static_cast<double>((p.first - o.r_lo) / static_cast<real>(dr)));
    const long j = std::lround(static_cast<double>((p.second - o.v_lo) / static_cast<real>(dv)));
    if (i < 0 || i >= static_cast<long>(NR) || j < 0 || j >= static_cast<long>(NV)) {
      throw Error(ErrorKind::InvalidArgument, "endpoint outside the rectangle");
    }
    return static_cast<std::size_t>(i) * NV + static_cast<std::size_t>(j);
  };
  const std::size_t src = snap(p1);
  const std::size_t dst = snap(p2);
  GridRun run;
  run.edges = NR * NV * D;
  if (src == dst) return run;

  const std::size_t N = NR * NV;
  std::vector<double> dist(N, std::numeric_limits<double>::infinity());
  std::vector<std::uint8_t> via(N, 255);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist[src] = 0;
  pq.push({0, src});
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (du > dist[u]) continue;
    if (u == dst) break;
    const std::size_t i = u / NV;
    const long j = static_cast<long>(u % NV);
    for (std::size_t d = 0; d < D; ++d) {
      const double w = cost[i * D + d];
      if (w < 0) continue;
      const long jj = j + dirs[d].b;
      if (jj < 0 || jj >= static_cast<long>(NV)) continue;
      const std::size_t node =
          static_cast<std::size_t>(static_cast<long>(i) + dirs[d].a) * NV + static_cast<std::size_t>(jj);
      if (du + w < dist[node]) {
        dist[node] = du + w;
        via[node] = static_cast<std::uint8_t>(d);
        pq.push({dist[node], node});
      }
    }
  }
  run.distance = dist[dst];
  // Worst angular gap of the stencil, in the local orthonormal frame, along the path.
  auto row_anisotropy = [&](std::size_t i) {
    std::vector<double> ang;
    for (const auto& [a, b] : dirs) ang.push_back(std::atan2(b * dv * hn[i], a * dr));
    std::sort(ang.begin(), ang.end());
    double gap = ang.front() + 2 * M_PI - ang.back();
    for (std::size_t k = 1; k < ang.size(); ++k) gap = std::max(gap, ang[k] - ang[k - 1]);
    return 1 / std::cos(gap / 2);
  };
  std::size_t node = dst;
  while (node != src && via[node] != 255) {
    const std::size_t i = node / NV;
    run.anisotropy = std::max(run.anisotropy, row_anisotropy(i));
    const Direction d = dirs[via[node]];
    node = static_cast<std::size_t>(static_cast<long>(i) - d.a) * NV +
           static_cast<std::size_t>(static_cast<long>(node % NV) - d.b);
  }
  return run;
}

}  // namespace

DijkstraResult dijkstra_distance_oracle(const std::function<real(real)>& h, std::pair<real, real> p1,
                                        std::pair<real, real> p2, const DijkstraOptions& opts) {
  if (!(opts.r_lo < opts.r_hi && opts.v_lo < opts.v_hi) || opts.nr == 0 || opts.nv == 0 || opts.stencil < 1) {
    throw Error(ErrorKind::InvalidArgument, "bad Dijkstra rectangle or resolution");
  }
  const std::size_t dirs = stencil_directions(opts.stencil).size();
  const std::size_t fine_edges = (2 * opts.nr + 1) * (2 * opts.nv + 1) * dirs;
  if (fine_edges > opts.max_edges) {
    std::ostringstream os;
    os << "fine grid needs " << fine_edges << " edges (budget " << opts.max_edges << ")";
    throw Error(ErrorKind::ResourceLimit, os.str());
  }
  const GridRun coarse = grid_shortest_path(h, p1, p2, opts, opts.nr, opts.nv);
  const GridRun fine = grid_shortest_path(h, p1, p2, opts, 2 * opts.nr, 2 * opts.nv);
  DijkstraResult res;
  res.coarse = coarse.distance;
  res.fine = fine.distance;
  res.distance = 2 * res.fine - res.coarse;
  res.error_estimate = std::abs(res.fine - res.coarse);
  res.anisotropy = fine.anisotropy;
  res.edges = coarse.edges + fine.edges;
  return res;
}

DijkstraResult dijkstra_orbit_oracle(const HalfplaneMetric& m, real l, real dr, real aspect,
                                     const DijkstraOptions& base) {
  if (!(l > 0) || !(dr > 0) || !(aspect > 0)) throw Error(ErrorKind::InvalidArgument, "oracle needs l, dr, aspect > 0");
  const OrbitDistance od = orbit_distance(m, l);
  const real rm = od.arc.r_max > 0 ? od.arc.r_max : dr;
  const real V = kTwoPi * l;
  DijkstraOptions o = base;
  o.nr = static_cast<std::size_t>(std::ceil(2 * rm / dr));
  o.r_lo = m.lo;
  o.r_hi = m.lo + o.nr * dr;
  const real dv = aspect * dr / m.value(rm);
  o.nv = static_cast<std::size_t>(std::ceil(V / dv));
  o.v_lo = 0;
  o.v_hi = V;
  auto h = [&m](real r) { return m.value(r); };
  return dijkstra_distance_oracle(h, {m.lo, 0}, {m.lo, V}, o);
}

}  // namespace warplab
