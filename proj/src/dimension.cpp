#include "warplab/dimension.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "warplab/kv.hpp"

namespace warplab {

namespace {

constexpr real kInf = std::numeric_limits<real>::infinity();

}  // namespace

LinearOrbitMetric::LinearOrbitMetric(Distance d, Inverse max_index_le, real scale, std::string label)
    : d_(std::move(d)), inv_(std::move(max_index_le)), scale_(scale), extent_(kInf), label_(std::move(label)) {
  if (!(scale > 0)) throw Error(ErrorKind::InvalidArgument, "scale must be positive");
}

LinearOrbitMetric LinearOrbitMetric::from_table(std::vector<real> d, std::string label) {
  auto t = std::make_shared<const std::vector<real>>(std::move(d));
  auto dist = [t](real n) {
    const auto i = static_cast<std::size_t>(n);
    if (i > t->size()) throw Error(ErrorKind::OutOfRange, "index past the end of the table");
    return i == 0 ? real(0) : (*t)[i - 1];
  };
  auto inv = [t](real R) {
    const auto it = std::upper_bound(t->begin(), t->end(), R);
    if (it == t->end()) throw Error(ErrorKind::OutOfRange, "ball not covered by the table");
    return static_cast<real>(it - t->begin());
  };
  LinearOrbitMetric s(dist, inv, 1, std::move(label));
  s.extent_ = static_cast<real>(t->size());
  return s;
}

LinearOrbitMetric LinearOrbitMetric::uniform(real step) {
  if (!(step > 0)) throw Error(ErrorKind::InvalidArgument, "step must be positive");
  auto inv = [step](real R) {
    real n = std::floor(R / step);
    while (step * (n + 1) <= R) n += 1;
    while (n > 0 && step * n > R) n -= 1;
    return n;
  };
  std::ostringstream label;
  label << "uniform:" << format_real(step);
  return LinearOrbitMetric([step](real n) { return step * n; }, inv, 1, label.str());
}

LinearOrbitMetric LinearOrbitMetric::from_orbits(std::shared_ptr<OrbitTable> table, real scale) {
  auto dist = [table](real n) { return table->get(n).d; };
  auto inv = [table](real R) { return (orbit_count(*table, R) - 1) / 2; };
  return LinearOrbitMetric(dist, inv, scale, table->metric().id);
}

real LinearOrbitMetric::d(real n) const { return n == 0 ? real(0) : d_(n) / scale_; }

real LinearOrbitMetric::max_index_le(real R) const {
  if (!(R >= 0)) throw Error(ErrorKind::InvalidArgument, "ball radius must be nonnegative");
  return inv_(R * scale_);
}

real LinearOrbitMetric::min_index_ge(real lambda) const {
  // Compare unscaled so the two directions agree on ties.
  const real t = lambda * scale_;
  const real n = max_index_le(lambda);
  if (!(n >= 1 && d_(n) >= t)) return n + 1;
  // Past this, indices are no longer exact and ties cannot be resolved.
  if (n >= 1e15L) return n;
  // d_n = λ; step back over a run of equal values by galloping, then bisect.
  real hi = n, step = 1, lo = n - 1;
  while (lo >= 1 && d_(lo) >= t) {
    hi = lo;
    step *= 2;
    lo = std::max(real(0), hi - step);
  }
  while (hi - lo > 1) {
    const real mid = std::floor((lo + hi) / 2);
    (mid >= 1 && d_(mid) >= t ? hi : lo) = mid;
  }
  return hi;
}

InvariantReport check_metric_invariants(const LinearOrbitMetric& s, real n_max, std::size_t triples, unsigned seed) {
  InvariantReport out;
  auto fail = [&](const std::string& what) {
    out.ok = false;
    out.diagnostic = what;
    return out;
  };
  // Consecutive indices: all of them up to 10^4, then a log-spaced sample.
  std::vector<real> ns;
  for (real n = 0; n < std::min(n_max, real(10000)); n += 1) ns.push_back(n);
  if (n_max > 10000) {
    for (real x : log_grid(10000, n_max - 1, 200)) ns.push_back(std::floor(x));
  }
  for (real n : ns) {
    const real a = s.d(n), b = s.d(n + 1);
    if (!(b >= a)) {
      std::ostringstream os;
      os << "d decreases at n=" << n << ": " << a << " > " << b;
      return fail(os.str());
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<real> u(-n_max, n_max);
  const real slack = 1e-12L;
  for (std::size_t i = 0; i < triples; ++i) {
    const real a = std::round(u(rng)), b = std::round(u(rng)), c = std::round(u(rng));
    const real ac = s.rho(a, c), ab = s.rho(a, b), bc = s.rho(b, c);
    if (ac > (ab + bc) * (1 + slack)) {
      std::ostringstream os;
      os << "triangle inequality fails for (" << a << ", " << b << ", " << c << ")";
      return fail(os.str());
    }
    const real x = std::floor(std::abs(a) / 2), y = std::floor(std::abs(b) / 2);
    if (s.d(x + y) > (s.d(x) + s.d(y)) * (1 + slack)) {
      std::ostringstream os;
      os << "not subadditive at " << x << " + " << y;
      return fail(os.str());
    }
  }
  return out;
}

real capacity(const LinearOrbitMetric& s, real R, real lambda) {
  if (!(lambda > 0)) throw Error(ErrorKind::InvalidArgument, "separation must be positive");
  const real N = s.max_index_le(R);
  if (N == 0 || s.d(2 * N) < lambda) return 1;
  const real m = s.min_index_ge(lambda);
  return std::floor(2 * N / m) + 1;
}

int capacity_exhaustive(const LinearOrbitMetric& s, real R, real lambda) {
  const real Nr = s.max_index_le(R);
  if (2 * Nr + 1 > 25) throw Error(ErrorKind::InvalidArgument, "exhaustive search is limited to 25 points");
  const int n = static_cast<int>(2 * Nr + 1);
  std::vector<std::uint32_t> conflict(static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j && s.rho(i, j) < lambda) conflict[static_cast<std::size_t>(i)] |= 1u << j;
    }
  }
  int best = 0;
  auto search = [&](auto&& self, std::uint32_t open, int taken) -> void {
    if (taken + std::popcount(open) <= best) return;
    if (open == 0) {
      best = taken;
      return;
    }
    const int v = std::countr_zero(open);
    const std::uint32_t bit = 1u << v;
    self(self, open & ~bit & ~conflict[static_cast<std::size_t>(v)], taken + 1);
    self(self, open & ~bit, taken);
  };
  search(search, n == 32 ? ~0u : (1u << n) - 1, 0);
  return best;
}

std::vector<real> random_subadditive_table(std::size_t n, std::mt19937_64& rng) {
  // Quarter-integer steps keep every sum exact, so ties with λ are real ties.
  std::uniform_int_distribution<int> first(1, 8), step(0, 8);
  std::vector<real> d(n + 1, 0);
  if (n > 0) d[1] = first(rng) * 0.25L;
  for (std::size_t i = 2; i <= n; ++i) {
    real v = d[i - 1] + step(rng) * 0.25L;
    for (std::size_t a = 1; a < i; ++a) v = std::min(v, d[a] + d[i - a]);
    d[i] = v;
  }
  return {d.begin() + 1, d.end()};
}

GrowthFit fit_growth_constants(const LinearOrbitMetric& s, real k, real lo, real hi, std::size_t samples,
                               real ratio_threshold) {
  if (!(lo > 0 && hi >= 10 * lo) || samples < 2) {
    throw Error(ErrorKind::DegenerateRange, "growth fit needs at least one decade of R");
  }
  GrowthFit fit;
  fit.k = k;
  fit.c1 = kInf;
  fit.c2 = 0;
  for (real R : log_grid(lo, hi, samples)) {
    const real n = s.ball_count(R);
    const real q = n / std::pow(R, k);
    fit.c1 = std::min(fit.c1, q);
    fit.c2 = std::max(fit.c2, q);
    fit.R.push_back(R);
    fit.count.push_back(n);
  }
  fit.ratio = fit.c2 / fit.c1;
  fit.misfit = !(fit.ratio <= ratio_threshold);
  return fit;
}

CapacityProfile capacity_profile(const LinearOrbitMetric& s, const std::vector<std::pair<real, real>>& pairs) {
  CapacityProfile p;
  p.samples.resize(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto [R, lambda] = pairs[i];
    if (!(lambda > 0 && lambda < R)) throw Error(ErrorKind::InvalidArgument, "need 0 < λ < R");
    p.samples[i].R = R;
    p.samples[i].lambda = lambda;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex fail_mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < p.samples.size();) {
      try {
        p.samples[i].cap = capacity(s, p.samples[i].R, p.samples[i].lambda);
      } catch (...) {
        std::lock_guard lock(fail_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const unsigned threads =
      static_cast<unsigned>(std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), pairs.size()));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
  return p;
}

InvariantReport check_profile_monotone(const CapacityProfile& p) {
  InvariantReport out;
  std::map<real, std::vector<std::pair<real, real>>> by_R, by_lambda;
  for (const auto& s : p.samples) {
    if (!(s.cap >= 1)) {
      out.ok = false;
      out.diagnostic = "capacity below 1";
      return out;
    }
    by_R[s.R].push_back({s.lambda, s.cap});
    by_lambda[s.lambda].push_back({s.R, s.cap});
  }
  auto scan = [&](const auto& groups, bool increasing, const char* what) {
    for (auto [key, v] : groups) {
      std::sort(v.begin(), v.end());
      for (std::size_t i = 1; i < v.size(); ++i) {
        const bool bad = increasing ? v[i].second < v[i - 1].second : v[i].second > v[i - 1].second;
        if (bad) {
          std::ostringstream os;
          os << what << " at " << key;
          out.ok = false;
          out.diagnostic = os.str();
          return false;
        }
      }
    }
    return true;
  };
  if (scan(by_R, false, "capacity increases with λ")) scan(by_lambda, true, "capacity decreases with R");
  return out;
}

SandwichReport check_capacity_sandwich(const CapacityProfile& p, real k, real c1, real c2) {
  SandwichReport rep;
  rep.worst_lower_margin = kInf;
  rep.worst_upper_margin = kInf;
  for (const auto& s : p.samples) {
    const real x = std::pow(s.R / s.lambda, k);
    const real lower = c1 / c2 * x;
    const real upper = std::pow(3.0L, k + 1) * c2 / c1 * x;
    rep.worst_lower_margin = std::min(rep.worst_lower_margin, s.cap / lower);
    rep.worst_upper_margin = std::min(rep.worst_upper_margin, upper / s.cap);
    if (!(s.cap >= lower && s.cap <= upper)) {
      rep.ok = false;
      rep.violations.push_back({s, lower, upper});
    }
  }
  return rep;
}

InvariantReport check_two_step_chain(const LinearOrbitMetric& s, real R, real lambda) {
  InvariantReport out;
  const real inner = R - lambda / 3;
  const real left = inner >= 0 ? capacity(s, inner, lambda) * s.ball_count(lambda / 3) : 0;
  const real mid = s.ball_count(R);
  const real right = capacity(s, R, lambda) * s.ball_count(lambda);
  if (!(left <= mid && mid <= right)) {
    std::ostringstream os;
    os << "chain fails at R=" << R << ", λ=" << lambda << ": " << left << " ≤ " << mid << " ≤ " << right;
    out.ok = false;
    out.diagnostic = os.str();
  }
  return out;
}

HausdorffEstimate hausdorff_upper(const LinearOrbitMetric& s, real k, real R, real delta) {
  if (!(delta > 0 && delta < R)) throw Error(ErrorKind::InvalidArgument, "need 0 < δ < R");
  HausdorffEstimate e;
  e.k = k;
  e.delta = delta;
  e.direction = ContentDirection::Upper;
  e.balls = capacity(s, R, delta);
  e.radius = delta;
  e.content = e.balls * std::pow(delta, k);
  return e;
}

HausdorffEstimate hausdorff_greedy(const LinearOrbitMetric& s, real k, real R, real delta) {
  if (!(delta > 0 && delta < R)) throw Error(ErrorKind::InvalidArgument, "need 0 < δ < R");
  HausdorffEstimate e;
  e.k = k;
  e.delta = delta;
  e.direction = ContentDirection::Lower;
  const real N = s.max_index_le(R);
  const real M_max = s.max_index_le(delta);
  // Single points (M = 0) are left out: below the orbit spacing the set is
  // discrete and its content collapses to zero.
  if (M_max < 1) throw Error(ErrorKind::InvalidArgument, "δ is below the orbit spacing");
  std::vector<real> Ms;
  for (real M = 1; M <= std::min(M_max, real(64)); M += 1) Ms.push_back(M);
  if (M_max > 64) {
    for (real x : log_grid(64, M_max, 200)) Ms.push_back(std::floor(x));
  }
  e.content = kInf;
  for (real M : Ms) {
    const real balls = std::ceil((2 * N + 1) / (2 * M + 1));
    const real r = s.d(M);
    const real c = balls * std::pow(r, k);
    if (c < e.content) {
      e.content = c;
      e.balls = balls;
      e.radius = r;
    }
  }
  return e;
}

ContentBounds hausdorff_bounds(real k, real R, real c1, real c2) {
  const real three = std::pow(3.0L, k + 1);
  const real Rk = std::pow(R, k);
  return {c1 * c1 / (three * c2 * c2) * Rk, three * c2 / c1 * Rk};
}

bool content_trend_ok(const std::vector<real>& contents, real tol) {
  real low = kInf;
  for (real c : contents) {
    if (c > low * (1 + tol)) return false;
    low = std::min(low, c);
  }
  return true;
}

real box_dimension_fit(CapacityProfile& p) {
  if (p.samples.size() < 8) throw Error(ErrorKind::DegenerateRange, "box fit needs at least 8 samples");
  std::vector<real> x, y;
  for (const auto& s : p.samples) {
    x.push_back(std::log(s.R / s.lambda));
    y.push_back(std::log(s.cap));
  }
  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  if (!(*hi > *lo)) throw Error(ErrorKind::DegenerateRange, "box fit needs more than one R/λ");
  const LineFit fit = fit_line(x, y);
  p.k_hat = fit.slope;
  p.residual = fit.residual;
  return fit.slope;
}

void write_profile_csv(std::ostream& os, const CapacityProfile& p) {
  os << "R,lambda,cap\n";
  for (const auto& s : p.samples) os << format_real(s.R) << "," << format_real(s.lambda) << "," << format_real(s.cap) << "\n";
}

void write_fit_csv(std::ostream& os, const CapacityProfile& p) {
  os << "k_hat,c1_hat,c2_hat,residual\n";
  os << format_real(p.k_hat) << "," << format_real(p.c1_hat) << "," << format_real(p.c2_hat) << ","
     << format_real(p.residual) << "\n";
}

}  // namespace warplab
