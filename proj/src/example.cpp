#include "warplab/example.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <memory>
#include <ostream>
#include <sstream>

#include "warplab/kv.hpp"

namespace warplab {

namespace {

constexpr real kInf = std::numeric_limits<real>::infinity();

// ln(1 + x²) without forming 1 + x² when x is huge.
real log1p_sq(real x) {
  if (x > 1e30L) return 2 * std::log(x) + std::log1p(1 / (x * x));
  return std::log1p(x * x);
}

std::vector<real> merge_equal(std::vector<real> exps) {
  exps.erase(std::unique(exps.begin(), exps.end()), exps.end());
  return exps;
}

// Junction radii (X_1, Y_1, X_2, Y_2, ...) for the transitions between
// consecutive exponents. A transition p -> q goes through the bridge exponent
// b (B if q > p, else A): the bridge starts at X with value (1+X²)^(-p) and
// meets (1+r²)^(-q) at Y; the next transition starts at 5Y². Stops before the
// first transition whose radii pass `bound`.
std::vector<real> chain_radii(const std::vector<real>& exps, real A, real B, real X1, real bound) {
  std::vector<real> radii;
  real X = X1;
  const real log_bound = std::log(bound);
  for (std::size_t t = 0; t + 1 < exps.size(); ++t) {
    const real p = exps[t];
    const real q = exps[t + 1];
    const real b = q > p ? B : A;
    const real lnY2 = (b - p) / (b - q) * log1p_sq(X);  // ln(1 + Y²)
    if (lnY2 / 2 > log_bound || X > bound) break;
    const real Y = std::sqrt(std::expm1(lnY2));
    radii.push_back(X);
    radii.push_back(Y);
    if (t + 2 < exps.size()) {
      if (std::log(5.0L) + 2 * std::log(Y) > log_bound) break;
      X = 5 * Y * Y;
    }
  }
  return radii;
}

std::vector<Segment> chain_segments(const std::vector<real>& exps, const std::vector<real>& radii, real A,
                                    real B) {
  std::vector<Segment> segs;
  const std::size_t transitions = radii.size() / 2;
  real lo = 0;
  for (std::size_t t = 0; t < transitions; ++t) {
    const real p = exps[t];
    const real q = exps[t + 1];
    const real b = q > p ? B : A;
    const real X = radii[2 * t];
    const real Y = radii[2 * t + 1];
    segs.push_back({lo, X, p, 0, false});
    segs.push_back({X, Y, b, (b - p) * log1p_sq(X), true});
    lo = Y;
  }
  segs.push_back({lo, kInf, exps[transitions], 0, false});
  return segs;
}

std::vector<real> oscillating_exponents(const OscillationParams& p, std::size_t rows) {
  std::vector<real> exps;
  for (std::size_t i = 0; i < rows; ++i) {
    exps.push_back(p.alpha);
    exps.push_back(p.beta);
  }
  exps.push_back(p.alpha);
  return exps;
}

}  // namespace

void OscillationParams::validate() const {
  if (!(B > beta && beta > alpha && alpha > A && A > 0)) {
    throw Error(ErrorKind::InvalidArgument, "need B > beta > alpha > A > 0");
  }
  if (!(R11 >= 100)) throw Error(ErrorKind::InvalidArgument, "need R11 >= 100");
  if (periods < 0) throw Error(ErrorKind::InvalidArgument, "periods must be nonnegative");
}

ScaleLadder build_scale_ladder(const OscillationParams& p, real bound) {
  p.validate();
  ScaleLadder ladder;
  ladder.bound = bound;
  if (p.periods == 0) return ladder;
  const auto exps = oscillating_exponents(p, static_cast<std::size_t>(p.periods));
  const auto radii = chain_radii(exps, p.A, p.B, p.R11, bound);
  const std::size_t rows = radii.size() / 4;
  ladder.overflow = rows < static_cast<std::size_t>(p.periods);
  real prev = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    ladder.rows.push_back({prev, radii[4 * i], radii[4 * i + 1], radii[4 * i + 2], radii[4 * i + 3]});
    prev = radii[4 * i + 3];
  }
  for (std::size_t i = 0; i < rows; ++i) {
    const auto& row = ladder.rows[i];
    for (int j = 1; j < 4; ++j) {
      if (!(row[j + 1] >= 5 * row[j])) throw Error(ErrorKind::InvalidArgument, "ladder ratio below 5");
    }
    if (i + 1 < rows && !(ladder.rows[i + 1][1] >= 5 * row[4])) {
      throw Error(ErrorKind::InvalidArgument, "ladder ratio below 5 across periods");
    }
  }
  return ladder;
}

Jet2 Segment::eval(real r) const {
  const Jet2 x = Jet2::variable(r);
  const Jet2 base = pow(1 + x * x, -exponent);
  return log_constant == 0 ? base : base * std::exp(log_constant);
}

PiecewiseH::PiecewiseH(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw Error(ErrorKind::InvalidArgument, "no segments");
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const auto& s = segments_[i];
    if (!(s.exponent > 0) || !(s.lo < s.hi)) throw Error(ErrorKind::InvalidArgument, "bad segment");
    if (i + 1 < segments_.size()) {
      const auto& n = segments_[i + 1];
      if (n.lo != s.hi) throw Error(ErrorKind::ContinuityViolation, "segments not adjacent");
      // Compare in log form: the values themselves can sit near 1e-3000.
      const real left = s.log_constant - s.exponent * log1p_sq(s.hi);
      const real right = n.log_constant - n.exponent * log1p_sq(s.hi);
      if (std::abs(std::expm1(left - right)) > 1e-10L) {
        std::ostringstream os;
        os << "mismatch " << std::abs(std::expm1(left - right)) << " at r=" << s.hi;
        throw Error(ErrorKind::ContinuityViolation, os.str());
      }
    }
  }
}

std::size_t PiecewiseH::segment_index(real r) const {
  const auto it = std::upper_bound(segments_.begin(), segments_.end(), r,
                                   [](real x, const Segment& s) { return x < s.hi; });
  if (it == segments_.end()) return segments_.size() - 1;
  return static_cast<std::size_t>(it - segments_.begin());
}

std::vector<real> PiecewiseH::junctions() const {
  std::vector<real> out;
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i) out.push_back(segments_[i].hi);
  return out;
}

PiecewiseH build_piecewise_h(const ScaleLadder& ladder, const OscillationParams& p) {
  const auto exps = oscillating_exponents(p, ladder.rows.size());
  std::vector<real> radii;
  for (const auto& row : ladder.rows) radii.insert(radii.end(), row.begin() + 1, row.end());
  return PiecewiseH(chain_segments(exps, radii, p.A, p.B));
}

CutoffSpec CutoffSpec::make(real lo, real hi, BlendSide side) {
  if (!(lo < hi)) throw Error(ErrorKind::InvalidArgument, "cutoff needs lo < hi");
  CutoffSpec c;
  c.lo_frac = lo;
  c.hi_frac = hi;
  c.mid_frac = (lo + hi) / 2;
  c.side = side;
  // max S' = 15/8 at x = 1/2; max |S''| = 10/sqrt(3) at x = (3 ± sqrt 3)/6.
  c.c1_bound = 1.875L / (hi - lo);
  c.c2_bound = 10 / std::sqrt(3.0L) / ((hi - lo) * (hi - lo));
  return c;
}

CutoffSpec CutoffSpec::above() { return make(1.01L, 1.19L, BlendSide::AboveR); }
CutoffSpec CutoffSpec::below() { return make(0.81L, 0.99L, BlendSide::BelowR); }

Jet2 CutoffSpec::phi(real r, real R) const {
  const real w = hi_frac - lo_frac;
  const real xv = (r / R - lo_frac) / w;
  if (xv <= 0) return Jet2::constant(1);
  if (xv >= 1) return Jet2::constant(0);
  const Jet2 x{xv, 1 / (R * w), 0};
  const Jet2 s = x * x * x * (10 + x * (-15 + 6 * x));
  return 1 - s;
}

std::pair<real, real> CutoffSpec::interval(real R) const {
  return side == BlendSide::AboveR ? std::pair{R, 1.2L * R} : std::pair{0.8L * R, R};
}

SmoothedH::SmoothedH(PiecewiseH base, std::vector<Blend> blends)
    : base_(std::move(base)), blends_(std::move(blends)) {}

int SmoothedH::blend_index(real r) const {
  const auto it = std::upper_bound(blends_.begin(), blends_.end(), r,
                                   [](real x, const Blend& b) { return x < b.hi; });
  if (it == blends_.end() || r < it->lo) {
    // r == hi of the previous blend belongs to it as well.
    if (it != blends_.begin() && std::prev(it)->hi == r) return static_cast<int>(it - blends_.begin()) - 1;
    return -1;
  }
  return static_cast<int>(it - blends_.begin());
}

Jet2 SmoothedH::operator()(real r) const {
  const int b = blend_index(r);
  if (b < 0) return base_(r);
  const Blend& bl = blends_[static_cast<std::size_t>(b)];
  const Jet2 phi = bl.spec.phi(r, bl.R);
  const Jet2 left = base_.segments()[bl.left].eval(r);
  const Jet2 right = base_.segments()[bl.right].eval(r);
  return phi * left + (1 - phi) * right;
}

RegimeInfo SmoothedH::regime(real r) const {
  RegimeInfo info;
  const int b = blend_index(r);
  if (b >= 0) {
    const Blend& bl = blends_[static_cast<std::size_t>(b)];
    info.kind = Regime::Blend;
    info.index = static_cast<std::size_t>(b);
    info.exponent = std::max(base_.segments()[bl.left].exponent, base_.segments()[bl.right].exponent);
    return info;
  }
  info.index = base_.segment_index(r);
  const Segment& s = base_.segments()[info.index];
  info.kind = s.bridge ? Regime::Bridge : Regime::Pure;
  info.exponent = s.exponent;
  return info;
}

std::vector<real> SmoothedH::breakpoints() const {
  std::vector<real> out = base_.junctions();
  for (const auto& b : blends_) {
    out.push_back(b.lo);
    out.push_back(b.hi);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

real SmoothedH::last_junction() const {
  const auto j = base_.junctions();
  return j.empty() ? 0 : j.back();
}

WarpingFunction SmoothedH::as_warping(std::string label) const {
  auto self = std::make_shared<const SmoothedH>(*this);
  return {[self](real r) { return (*self)(r); }, std::move(label)};
}

std::string regime_label(const RegimeInfo& info) {
  std::ostringstream os;
  os << (info.kind == Regime::Pure ? "pure" : info.kind == Regime::Bridge ? "bridge" : "blend") << ":"
     << static_cast<double>(info.exponent);
  return os.str();
}

SmoothedH smooth(const PiecewiseH& hp, const CutoffSpec& above, const CutoffSpec& below,
                 std::size_t samples_per_blend) {
  const auto& segs = hp.segments();
  std::vector<Blend> blends;
  for (std::size_t i = 0; i + 1 < segs.size(); ++i) {
    Blend b;
    b.R = segs[i].hi;
    b.left = i;
    b.right = i + 1;
    b.spec = segs[i + 1].exponent > segs[i].exponent ? above : below;
    std::tie(b.lo, b.hi) = b.spec.interval(b.R);
    if (b.lo < segs[i].lo || b.hi > segs[i + 1].hi) {
      throw Error(ErrorKind::BlendOverlap, "blend leaves its two segments");
    }
    if (!blends.empty() && !(blends.back().hi < b.lo)) {
      std::ostringstream os;
      os << "blends at " << blends.back().R << " and " << b.R << " intersect";
      throw Error(ErrorKind::BlendOverlap, os.str());
    }
    blends.push_back(b);
  }
  SmoothedH hs(hp, std::move(blends));
  const std::size_t n = std::max<std::size_t>(samples_per_blend, 2);
  for (const auto& b : hs.blends()) {
    for (std::size_t j = 0; j < n; ++j) {
      const real r = b.lo + (b.hi - b.lo) * static_cast<real>(j) / static_cast<real>(n - 1);
      if (!(hs(r).d1 < 0)) {
        std::ostringstream os;
        os << "h_s' >= 0 at r=" << r;
        throw Error(ErrorKind::MonotonicityLoss, os.str());
      }
    }
  }
  return hs;
}

ObservationResult verify_observation(const std::function<Jet2(real)>& h_old,
                                     const std::function<Jet2(real)>& h_new, real lo, real hi,
                                     std::size_t samples) {
  ObservationResult res;
  real ratio_inf = kInf;
  real c_lo = -kInf;  // C must exceed this
  real c_hi = kInf;   // and stay below this
  const std::size_t n = std::max<std::size_t>(samples, 2);
  for (std::size_t j = 0; j < n; ++j) {
    const real r = lo + (hi - lo) * static_cast<real>(j) / static_cast<real>(n - 1);
    const Jet2 o = h_old(r);
    const Jet2 w = h_new(r);
    if (!(w.d1 < 0)) {
      std::ostringstream os;
      os << "h_new' >= 0 at r=" << r;
      res.reason = os.str();
      return res;
    }
    if (o.d1 != 0) ratio_inf = std::min(ratio_inf, std::abs(w.d1 / w.value) / std::abs(o.d1 / o.value));
    const real qn = w.d2 / w.value;
    const real qo = o.d2 / o.value;
    if (qo > 0) {
      c_lo = std::max(c_lo, qn / qo);
    } else if (qo < 0) {
      c_hi = std::min(c_hi, qn / qo);
    } else if (!(qn < 0)) {
      std::ostringstream os;
      os << "h'' = 0 with h_new'' >= 0 at r=" << r;
      res.reason = os.str();
      return res;
    }
  }
  res.c = std::isfinite(ratio_inf) ? 0.99L * ratio_inf : 1;
  res.C = c_lo > 0 ? 1.01L * c_lo : (std::isfinite(c_hi) ? 0.5L * c_hi : 1);
  if (!(res.C > 0 && res.C < c_hi)) {
    res.reason = "no C > 0 satisfies the second-derivative bound";
    return res;
  }
  res.ok = true;
  return res;
}

ObservationResult verify_blend_observation(const SmoothedH& hs, std::size_t blend, std::size_t samples) {
  const Blend& b = hs.blends().at(blend);
  const Segment old = hs.base().segments()[b.left];
  return verify_observation([old](real r) { return old.eval(r); }, [&hs](real r) { return hs(r); }, b.lo, b.hi,
                            samples);
}

std::vector<real> certification_grid(const SmoothedH& hs, std::size_t global_points, std::size_t per_segment,
                                     std::size_t per_blend) {
  const real top = std::max(1.3L * hs.last_junction(), 10.0L);
  std::vector<real> grid = log_grid(1e-3L, top, global_points);
  for (const auto& s : hs.base().segments()) {
    const real lo = std::max(s.lo, 1e-3L);
    const real hi = std::isfinite(s.hi) ? s.hi : top;
    if (hi > lo) {
      const auto g = log_grid(lo, hi, per_segment);
      grid.insert(grid.end(), g.begin(), g.end());
    }
  }
  for (const auto& b : hs.blends()) {
    for (std::size_t j = 0; j < per_blend; ++j) {
      grid.push_back(b.lo + (b.hi - b.lo) * static_cast<real>(j) / static_cast<real>(per_blend - 1));
    }
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

Certification certify_positive_ricci(const SmoothedH& hs, const WarpingFunction& f, int k_max,
                                     std::span<const real> grid) {
  if (grid.empty()) throw Error(ErrorKind::InvalidArgument, "empty grid");
  real k_req = -kInf;
  real worst_r = grid.front();
  for (real r : grid) {
    const RicciTerms t = ricci_terms(f(r), hs(r));
    for (const RicciAffine& a : {t.radial, t.circle, t.sphere}) {
      real need;
      if (a.slope > 0) {
        need = -a.base / a.slope;
      } else {
        need = a.base > 0 ? -kInf : kInf;
      }
      if (need > k_req) {
        k_req = need;
        worst_r = r;
      }
    }
  }
  const WarpingFunction h = hs.as_warping();
  int k = std::isfinite(k_req) ? std::max(1, static_cast<int>(std::floor(k_req)) + 1) : k_max + 1;
  if (k_req > static_cast<real>(k_max)) k = k_max + 1;
  Certification cert;
  cert.k_required = k_req;
  for (; k <= k_max; ++k) {
    const DoublyWarpedMetric m(k, f, h);
    cert.check = ricci_positive_on_grid(m, grid);
    if (cert.check.positive) break;
  }
  if (k > k_max) {
    const DoublyWarpedMetric m(std::max(k_max, 1), f, h);
    const RicciReport worst = ricci_report(m, worst_r);
    std::ostringstream os;
    os << "no k <= " << k_max << " certifies; required k > " << k_req << " at r=" << worst_r
       << " (at k_max: radial " << worst.ric_radial << ", circle " << worst.ric_circle << ", sphere "
       << worst.ric_sphere << ")";
    throw Error(ErrorKind::NotCertified, os.str());
  }
  cert.k = k;
  const DoublyWarpedMetric m(k, f, h);
  std::map<std::string, RicciReport> worst;
  for (real r : grid) {
    const RicciReport rep = ricci_report(m, r);
    const std::string label = regime_label(hs.regime(r));
    auto it = worst.find(label);
    if (it == worst.end() || rep.min_value < it->second.min_value) worst[label] = rep;
  }
  for (auto& [label, rep] : worst) cert.margins.push_back({label, rep});
  return cert;
}

void ExponentSchedule::validate() const {
  if (exponents.empty()) throw Error(ErrorKind::InvalidArgument, "empty schedule");
  if (!(lower >= 0.5L)) throw Error(ErrorKind::InvalidArgument, "exponent range must start at or above 1/2");
  for (real e : exponents) {
    if (!(e >= lower && e <= upper)) throw Error(ErrorKind::InvalidArgument, "exponent outside declared range");
  }
  const auto [mn, mx] = std::minmax_element(exponents.begin(), exponents.end());
  if (!(A > 0 && A < *mn && B > *mx)) throw Error(ErrorKind::InvalidArgument, "need 0 < A < min and B > max");
  if (!(R11 >= 100)) throw Error(ErrorKind::InvalidArgument, "need R11 >= 100");
}

SmoothedH build_schedule_h(const ExponentSchedule& s, real bound, bool* truncated) {
  s.validate();
  std::vector<real> exps = s.exponents;
  exps.push_back(s.exponents.front());
  exps = merge_equal(std::move(exps));
  const auto radii = chain_radii(exps, s.A, s.B, s.R11, bound);
  if (truncated) *truncated = radii.size() / 2 + 1 < exps.size();
  return smooth(PiecewiseH(chain_segments(exps, radii, s.A, s.B)));
}

SmoothedH build_oscillating_h(const OscillationParams& p, real bound) {
  return smooth(build_piecewise_h(build_scale_ladder(p, bound), p));
}

void write_construction(std::ostream& os, const OscillationParams& p, const ScaleLadder& ladder,
                        const SmoothedH& hs) {
  os << "alpha = " << format_real(p.alpha) << "\n";
  os << "beta = " << format_real(p.beta) << "\n";
  os << "A = " << format_real(p.A) << "\n";
  os << "B = " << format_real(p.B) << "\n";
  os << "R11 = " << format_real(p.R11) << "\n";
  os << "periods = " << p.periods << "\n";
  os << "rows = " << ladder.rows.size() << "\n";
  os << "bound = " << format_real(ladder.bound) << "\n";
  const CutoffSpec a = CutoffSpec::above();
  const CutoffSpec b = CutoffSpec::below();
  os << "cutoff_above = " << format_real(a.lo_frac) << " " << format_real(a.mid_frac) << " "
     << format_real(a.hi_frac) << "\n";
  os << "cutoff_below = " << format_real(b.lo_frac) << " " << format_real(b.mid_frac) << " "
     << format_real(b.hi_frac) << "\n";
  const auto& segs = hs.base().segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    os << "segment." << i << " = " << format_real(segs[i].lo) << " " << format_real(segs[i].exponent) << " "
       << format_real(segs[i].log_constant) << "\n";
  }
}

SmoothedH read_construction(std::istream& is, OscillationParams* params) {
  auto kv = read_key_values(is);
  auto take = [&](const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw Error(ErrorKind::ConfigError, "missing key '" + key + "'");
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  OscillationParams p;
  p.alpha = parse_real(take("alpha"), "alpha");
  p.beta = parse_real(take("beta"), "beta");
  p.A = parse_real(take("A"), "A");
  p.B = parse_real(take("B"), "B");
  p.R11 = parse_real(take("R11"), "R11");
  p.periods = static_cast<int>(parse_integer(take("periods"), "periods"));
  const auto rows = parse_integer(take("rows"), "rows");
  const real bound = parse_real(take("bound"), "bound");
  take("cutoff_above");
  take("cutoff_below");
  const ScaleLadder ladder = build_scale_ladder(p, bound);
  if (static_cast<long long>(ladder.rows.size()) != rows) {
    throw Error(ErrorKind::ConfigError, "stored row count does not match the rebuild");
  }
  SmoothedH hs = smooth(build_piecewise_h(ladder, p));
  const auto& segs = hs.base().segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const std::string key = "segment." + std::to_string(i);
    std::istringstream line(take(key));
    std::string lo, e, c;
    line >> lo >> e >> c;
    const real vals[3] = {parse_real(lo, key), parse_real(e, key), parse_real(c, key)};
    const real want[3] = {segs[i].lo, segs[i].exponent, segs[i].log_constant};
    for (int j = 0; j < 3; ++j) {
      if (std::abs(vals[j] - want[j]) > 1e-15L * std::max(std::abs(want[j]), 1.0L)) {
        throw Error(ErrorKind::ConfigError, "'" + key + "' does not match the rebuilt construction");
      }
    }
  }
  if (!kv.empty()) throw Error(ErrorKind::ConfigError, "unknown key '" + kv.begin()->first + "'");
  if (params) *params = p;
  return hs;
}

}  // namespace warplab
