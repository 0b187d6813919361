#include "harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "warplab/dimension.hpp"
#include "warplab/grushin.hpp"
#include "warplab/kv.hpp"

namespace warplab::harness {

namespace {

const std::pair<Mode, const char*> kModes[] = {
    {Mode::RicciCheck, "ricci-check"}, {Mode::BuildExample, "build-example"},
    {Mode::OrbitGrowth, "orbit-growth"}, {Mode::Capacity, "capacity"},
    {Mode::GrushinCompare, "grushin-compare"}, {Mode::FullSuite, "full-suite"},
};

Mode parse_mode(const std::string& s) {
  for (const auto& [m, name] : kModes) {
    if (s == name) return m;
  }
  throw Error(ErrorKind::ConfigError, "mode: unknown mode '" + s + "'");
}

ModelKind parse_model(const std::string& s) {
  if (s == "pure") return ModelKind::Pure;
  if (s == "oscillating") return ModelKind::Oscillating;
  throw Error(ErrorKind::ConfigError, "model: expected pure or oscillating, got '" + s + "'");
}

std::string num(real x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6Lg", x);
  return buf;
}

void require(bool ok, const std::string& key, const std::string& reason) {
  if (!ok) throw Error(ErrorKind::ConfigError, key + ": " + reason);
}

std::size_t parse_count(const std::string& text, const std::string& key) {
  const long long v = parse_integer(text, key);
  require(v >= 0, key, "must be non-negative");
  return static_cast<std::size_t>(v);
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

unsigned worker_count(unsigned requested, std::size_t n) {
  unsigned t = requested ? requested : std::max(1u, std::thread::hardware_concurrency());
  return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(n, 1)));
}

// Calls body(i) for i < n on `threads` workers; the first exception is rethrown.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& body) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < worker_count(threads, n); ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

struct Ctx {
  const RunConfig& c;
  RunReport& report;

  std::filesystem::path artifact(const std::string& name, const std::string& file) {
    const auto path = c.output_dir / file;
    for (const auto& a : report.artifacts) {
      if (a.first == name) return path;
    }
    report.artifacts.push_back({name, path});
    return path;
  }

  std::ofstream open(const std::string& name, const std::string& file) {
    const auto path = artifact(name, file);
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::ConfigError, "output_dir: cannot write " + path.string());
    return out;
  }

  OrbitOptions orbit_options() const {
    OrbitOptions o;
    o.quad.rel_tol = c.quad_rel_tol;
    o.quad.abs_tol = c.quad_abs_tol;
    o.root_tol = c.root_tol;
    return o;
  }

  std::shared_ptr<OrbitTable> table(HalfplaneMetric m) const {
    if (!c.cache_dir.empty()) std::filesystem::create_directories(c.cache_dir);
    return std::make_shared<OrbitTable>(std::move(m), c.cache_dir, orbit_options());
  }

  void add(CheckResult r) { report.checks.push_back(std::move(r)); }

  // Times `body`, and prefixes module errors with the check name.
  template <class F>
  void timed(const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    const std::size_t first = report.checks.size();
    try {
      body();
    } catch (const Error& e) {
      throw Error(e.kind(), name + ": " + e.what());
    }
    if (report.checks.size() > first) report.checks[first].seconds += since(t0);
  }
};

CheckResult make(const std::string& name, int criterion, bool pass, real margin, std::string detail) {
  CheckResult r;
  r.name = name;
  r.criterion = criterion;
  r.status = pass ? CheckStatus::Pass : CheckStatus::Fail;
  r.margin = margin;
  r.detail = std::move(detail);
  return r;
}

void flag_if(CheckResult& r, bool flagged, const std::string& why) {
  if (!flagged) return;
  r.status = CheckStatus::Flagged;
  r.detail += " flagged=" + why;
}

// --- Ricci ---------------------------------------------------------------

void ricci_positivity(Ctx& x, real alpha, int k) {
  x.timed("ricci_positivity", [&] {
    const DoublyWarpedMetric m(k, nabonnand_f(), power_decay_h(alpha));
    const auto grid = log_grid(1e-3L, 1e6L, x.c.ricci_points);
    const GridCheck g = ricci_positive_on_grid(m, grid);
    // Oracle and closed form compared on the scale of the individual terms,
    // which is where cancellation happens.
    std::vector<real> err(grid.size());
    std::vector<RicciReport> closed(grid.size());
    parallel_for(grid.size(), x.c.threads, [&](std::size_t i) {
      const real r = grid[i];
      const RicciReport o = ricci_numeric_oracle(m, r);
      const RicciReport c = ricci_report(m, r);
      const RicciTerms t = ricci_terms(m.f(r), m.h(r));
      err[i] = std::max({std::abs(o.ric_radial - c.ric_radial) / std::max(std::abs(c.ric_radial), t.radial.scale(k)),
                         std::abs(o.ric_circle - c.ric_circle) / std::max(std::abs(c.ric_circle), t.circle.scale(k)),
                         std::abs(o.ric_sphere - c.ric_sphere) / std::max(std::abs(c.ric_sphere), t.sphere.scale(k))});
      closed[i] = c;
    });
    const auto worst = std::max_element(err.begin(), err.end());
    const real tol = 1e-5L;
    auto out = x.open("ricci", "ricci.csv");
    out << "r,ric_radial,ric_circle,ric_sphere\n";
    for (const auto& c : closed) {
      out << format_real(c.r) << "," << format_real(c.ric_radial) << "," << format_real(c.ric_circle) << ","
          << format_real(c.ric_sphere) << "\n";
    }
    const bool pass = g.positive && *worst <= tol;
    x.add(make("ricci_positivity", 1, pass, g.positive ? 1 - *worst / tol : g.worst.min_value,
               "alpha=" + num(alpha) + " k=" + std::to_string(k) + " points=" + std::to_string(grid.size()) +
                   " min_ric=" + num(g.worst.min_value) + " at_r=" + num(g.worst.r) + " oracle_rel_err=" +
                   num(*worst) + " oracle_at_r=" + num(grid[worst - err.begin()])));
  });
}

void round_sphere(Ctx& x) {
  x.timed("round_sphere_calibration", [&] {
    const DoublyWarpedMetric m(2, sine_f(), constant_h(1));
    const RicciReport o = ricci_numeric_oracle(m, kPi / 2);
    const real err = std::max({std::abs(o.ric_radial - 2), std::abs(o.ric_sphere - 2), std::abs(o.ric_circle)}) / 2;
    const real tol = 1e-5L;
    x.add(make("round_sphere_calibration", 2, err <= tol, 1 - err / tol,
               "ric_radial=" + num(o.ric_radial) + " ric_sphere=" + num(o.ric_sphere) + " ric_circle=" +
                   num(o.ric_circle) + " rel_err=" + num(err)));
  });
}

// --- Construction --------------------------------------------------------

void construction(Ctx& x) {
  x.timed("construction_invariants", [&] {
    const OscillationParams& p = x.c.params;
    const ScaleLadder ladder = build_scale_ladder(p);
    const SmoothedH hs = build_oscillating_h(p);
    {
      auto out = x.open("construction", "construction.txt");
      write_construction(out, p, ladder, hs);
    }
    std::ostringstream d;
    bool pass = true;

    const auto& segs = hs.base().segments();
    real jump = 0;
    for (std::size_t i = 1; i < segs.size(); ++i) {
      const real a = segs[i - 1].eval(segs[i].lo).value;
      const real b = segs[i].eval(segs[i].lo).value;
      jump = std::max(jump, std::abs(a - b) / std::max(std::abs(a), std::abs(b)));
    }
    pass = pass && jump <= 1e-10L;
    d << "junction_rel_jump=" << num(jump);

    const real top = hs.last_junction() > 0 ? 1.3L * hs.last_junction() : 1e6L;
    const auto grid = log_grid(1e-3L, top, 100000);
    std::size_t rises = 0;
    real prev = hs(grid[0]).value;
    for (std::size_t i = 1; i < grid.size(); ++i) {
      const Jet2 j = hs(grid[i]);
      if (!(j.d1 < 0) || !(j.value < prev)) ++rises;
      prev = j.value;
    }
    pass = pass && rises == 0;
    d << " decreasing_violations=" << rises << "/" << grid.size();

    std::size_t bad_blends = 0;
    for (std::size_t b = 0; b < hs.blends().size(); ++b) {
      if (!verify_blend_observation(hs, b).ok) ++bad_blends;
    }
    pass = pass && bad_blends == 0;
    d << " observation_failures=" << bad_blends << "/" << hs.blends().size();

    const int cap = x.c.certification_cap();
    const auto cgrid = certification_grid(hs);
    real margin = 0;
    try {
      const Certification cert = certify_positive_ricci(hs, nabonnand_f(), cap, cgrid);
      d << " certified_k=" << cert.k << " cap=" << cap;
      margin = static_cast<real>(cap) / cert.k - 1;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotCertified) throw;
      pass = false;
      d << " certified_k=none cap=" << cap;
      // What the search would need without the cap.
      try {
        const Certification free = certify_positive_ricci(hs, nabonnand_f(), 1 << 20, cgrid);
        d << " uncapped_k=" << free.k << " k_required=" << num(free.k_required);
        margin = static_cast<real>(cap) / free.k - 1;
      } catch (const Error& e2) {
        if (e2.kind() != ErrorKind::NotCertified) throw;
        margin = -1;
      }
    }
    x.add(make("construction_invariants", 10, pass, margin, d.str()));
  });
}

// --- Orbits --------------------------------------------------------------

std::vector<real> integer_grid(real lo, real hi, std::size_t n) {
  std::vector<real> out;
  for (real l : log_grid(lo, hi, n)) out.push_back(std::clamp(std::round(l), std::ceil(lo), std::floor(hi)));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void write_distances(Ctx& x, OrbitTable& table, const std::vector<real>& ls, const std::string& tag) {
  auto out = x.open("orbit_distances_" + tag, "orbit_distances_" + tag + ".csv");
  out << "l,d_l\n";
  for (real l : ls) out << format_real(l) << "," << format_real(table.get(l).d) << "\n";
}

void write_counts(Ctx& x, std::vector<std::pair<real, real>> rows, const std::string& tag) {
  std::sort(rows.begin(), rows.end());
  auto out = x.open("orbit_counts_" + tag, "orbit_counts_" + tag + ".csv");
  out << "R,count\n";
  for (const auto& [R, n] : rows) out << format_real(R) << "," << format_real(n) << "\n";
}

void orbit_pure(Ctx& x, real alpha, bool want3, bool want4, bool want_slope) {
  const auto table = x.table(power_decay_halfplane(alpha));
  const std::vector<real> ls = integer_grid(81, 1e5L, 40);

  if (want3) x.timed("orbit_sandwich", [&] {
    table->prefetch(ls, x.c.threads);
    real margin = std::numeric_limits<real>::infinity();
    std::size_t bad = 0;
    bool flagged = false;
    for (real l : ls) {
      const OrbitDistance& od = table->get(l);
      const PowerBounds b = length_estimate(alpha, l);
      flagged = flagged || od.flagged;
      if (od.d < b.lower || od.d > b.upper) ++bad;
      margin = std::min({margin, (od.d - b.lower) / b.upper, (b.upper - od.d) / b.upper});
    }
    write_distances(x, *table, ls, "pure");
    CheckResult r = make("orbit_sandwich", 3, bad == 0, margin,
                         "alpha=" + num(alpha) + " samples=" + std::to_string(ls.size()) + " l_range=[81,1e5]" +
                             " violations=" + std::to_string(bad));
    flag_if(r, flagged, "fallback_distance");
    x.add(r);
  });

  if (want4) x.timed("oracle_agreement", [&] {
    const real ls3[] = {3, 10, 30};
    std::vector<DijkstraResult> runs(3);
    parallel_for(3, x.c.threads, [&](std::size_t i) {
      runs[i] = dijkstra_orbit_oracle(table->metric(), ls3[i], x.c.dijkstra_dr, x.c.dijkstra_aspect);
    });
    real worst = 0;
    std::ostringstream d;
    d << "alpha=" << num(alpha);
    for (std::size_t i = 0; i < 3; ++i) {
      const real exact = table->get(ls3[i]).d;
      const real e = std::abs(runs[i].distance / exact - 1);
      worst = std::max(worst, e);
      d << " l" << num(ls3[i]) << "_clairaut=" << num(exact) << " l" << num(ls3[i]) << "_grid=" << num(runs[i].distance);
    }
    d << " max_rel_err=" << num(worst);
    x.add(make("oracle_agreement", 4, worst <= 0.02L, 1 - worst / 0.02L, d.str()));
  });

  if (want_slope) x.timed("growth_slope", [&] {
    const GrowthWindow g = growth_slope(*table, 100, 1e5L, 24);
    const real expect = 1 + 2 * alpha;
    std::vector<std::pair<real, real>> rows;
    for (std::size_t i = 0; i < g.R.size(); ++i) rows.push_back({g.R[i], g.count[i]});
    write_counts(x, rows, "pure");
    x.add(make("growth_slope", 0, std::abs(g.slope - expect) <= 0.15L, 1 - std::abs(g.slope - expect) / 0.15L,
               "slope=" + num(g.slope) + " expected=" + num(expect) + " R_range=[100,1e5]"));
  });
  table->flush();
}

struct WindowRun {
  std::string name;
  real exponent = 0;
  real R = 0;
  PowerWindow window;
  std::vector<real> ls;
  GrowthWindow growth;
  GrowthFit fit;
};

void orbit_oscillating(Ctx& x, bool want5, bool want6) {
  const OscillationParams& p = x.c.params;
  const ScaleLadder ladder = build_scale_ladder(p);
  if (ladder.rows.empty()) throw Error(ErrorKind::ConfigError, "periods: the model needs at least one period");
  const auto table = x.table(halfplane(build_oscillating_h(p), "oscillating"));
  // alpha: twice the radius where the first period ends (R_{2,0}); beta:
  // twice the start of the first beta segment.
  std::vector<WindowRun> runs = {{"alpha", p.alpha, 2 * ladder.rows[0][4], {}, {}, {}, {}},
                                 {"beta", p.beta, 2 * ladder.rows[0][2], {}, {}, {}, {}}};
  std::vector<real> all_ls;
  bool flagged = false;
  x.timed("growth_slopes", [&] {
    std::vector<std::pair<real, real>> rows;
    std::ostringstream d;
    bool pass = true;
    real margin = std::numeric_limits<real>::infinity();
    for (auto& w : runs) {
      w.window = power_window(w.exponent, w.R);
      w.ls = integer_grid(w.window.l_lo, w.window.l_hi, 40);
      table->prefetch(w.ls, x.c.threads);
      all_ls.insert(all_ls.end(), w.ls.begin(), w.ls.end());
      const real dlo = table->get(w.ls.front()).d;
      const real dhi = table->get(w.ls.back()).d;
      w.growth = growth_slope(*table, dlo, dhi, 24);
      w.fit = fit_growth_constants(LinearOrbitMetric::from_orbits(table, 1), 1 + 2 * w.exponent, dlo, dhi);
      for (std::size_t i = 0; i < w.growth.R.size(); ++i) rows.push_back({w.growth.R[i], w.growth.count[i]});
      const real expect = 1 + 2 * w.exponent;
      const real ratio = w.fit.c2 / w.fit.c1;
      const bool finite = w.fit.c1 > 0 && std::isfinite(static_cast<double>(ratio));
      pass = pass && std::abs(w.growth.slope - expect) <= 0.3L && finite;
      margin = std::min(margin, 1 - std::abs(w.growth.slope - expect) / 0.3L);
      d << (d.tellp() > 0 ? " " : "") << w.name << "_R=" << num(w.R) << " " << w.name
        << "_slope=" << num(w.growth.slope) << " " << w.name << "_expected=" << num(expect) << " " << w.name
        << "_c2_over_c1=" << num(ratio);
    }
    std::sort(all_ls.begin(), all_ls.end());
    for (real l : all_ls) flagged = flagged || table->get(l).flagged;
    write_distances(x, *table, all_ls, "oscillating");
    write_counts(x, rows, "oscillating");
    CheckResult r = make("growth_slopes", 5, pass, margin, d.str());
    flag_if(r, flagged, "fallback_distance");
    if (want5) x.add(r);
  });

  if (want6) {
    x.timed("window_bounds", [&] {
      const auto entries = table->entries();
      std::ostringstream d;
      bool pass = true;
      real margin = std::numeric_limits<real>::infinity();
      for (const auto& w : runs) {
        const PowerWindow& lw = w.window;
        std::size_t n = 0, bad = 0;
        for (auto it = entries.lower_bound(lw.l_lo); it != entries.end() && it->first <= lw.l_hi; ++it) {
          const real pw = std::pow(it->first, 1 / (2 * w.exponent + 1));
          const real d_l = it->second.d;
          ++n;
          if (d_l < lw.C1 * pw || d_l > lw.C2 * pw) ++bad;
          margin = std::min({margin, d_l / (lw.C1 * pw) - 1, 1 - d_l / (lw.C2 * pw)});
        }
        pass = pass && n > 0 && bad == 0;
        d << (d.tellp() > 0 ? " " : "") << w.name << "_l=[" << num(lw.l_lo) << "," << num(lw.l_hi) << "] "
          << w.name << "_C1=" << num(lw.C1) << " " << w.name << "_C2=" << num(lw.C2) << " " << w.name
          << "_tabulated=" << n << " " << w.name << "_violations=" << bad;
      }
      CheckResult r = make("window_bounds", 6, pass, margin, d.str());
      flag_if(r, flagged, "fallback_distance");
      x.add(r);
    });
  }
  table->flush();
}

// --- Capacity and content ------------------------------------------------

std::vector<std::pair<real, real>> sandwich_pairs() {
  std::vector<std::pair<real, real>> pairs;
  for (real R : {1.0L, 2.0L, 4.0L, 7.0L, 10.0L}) {
    for (real q : log_grid(1.5L, 150, 10)) pairs.push_back({R, R / q});
  }
  return pairs;
}

// Sweep capacity against branch-and-bound on every ball of at most 25
// points, over randomized monotone subadditive tables.
std::pair<std::size_t, std::size_t> exhaustive_agreement() {
  std::mt19937_64 rng(20240611);
  std::size_t checked = 0, mismatched = 0;
  for (int t = 0; t < 100; ++t) {
    const auto d = random_subadditive_table(40, rng);
    const auto s = LinearOrbitMetric::from_table(d);
    std::vector<real> values;
    for (std::size_t i = 0; i < 12; ++i) {
      values.push_back(d[i]);
      values.push_back(d[i] + 0.125L);
    }
    for (real R : values) {
      if (s.ball_count(R) > 25) continue;
      for (real lambda : values) {
        ++checked;
        if (capacity(s, R, lambda) != capacity_exhaustive(s, R, lambda)) ++mismatched;
      }
    }
  }
  return {checked, mismatched};
}

void capacity_pure(Ctx& x, real alpha, bool want7, bool want8) {
  const auto table = x.table(power_decay_halfplane(alpha));
  const auto s = LinearOrbitMetric::from_orbits(table, 1000);
  const real k = 1 + 2 * alpha;
  if (want7) {
    x.timed("capacity_sandwich", [&] {
      const InvariantReport inv = check_metric_invariants(s, 200, 300);
      CapacityProfile p = capacity_profile(s, sandwich_pairs());
      const GrowthFit fit = fit_growth_constants(s, k, 1.0L / 150, 10);
      const SandwichReport sw = check_capacity_sandwich(p, k, fit.c1, fit.c2);
      const InvariantReport mono = check_profile_monotone(p);
      const real dim = box_dimension_fit(p);
      std::size_t chain_bad = 0;
      for (const auto& [R, lambda] : sandwich_pairs()) chain_bad += check_two_step_chain(s, R, lambda).ok ? 0 : 1;
      const auto [checked, mismatched] = exhaustive_agreement();
      {
        auto out = x.open("capacity_pure", "capacity_pure.csv");
        write_profile_csv(out, p);
        auto fit_out = x.open("capacity_fit_pure", "capacity_fit_pure.csv");
        write_fit_csv(fit_out, p);
      }
      const bool pass = inv.ok && sw.ok && mono.ok && std::abs(dim - k) <= 0.2L && chain_bad == 0 && mismatched == 0;
      const real margin = std::min({sw.worst_lower_margin - 1, sw.worst_upper_margin - 1, 1 - std::abs(dim - k) / 0.2L});
      x.add(make("capacity_sandwich", 7, pass, margin,
                 "samples=" + std::to_string(p.samples.size()) + " k=" + num(k) + " c1=" + num(fit.c1) +
                     " c2=" + num(fit.c2) + " sandwich_violations=" + std::to_string(sw.violations.size()) +
                     " box_dimension=" + num(dim) + " monotone=" + (mono.ok ? "yes" : "no") + " metric_invariants=" +
                     (inv.ok ? "yes" : "no") + " chain_failures=" + std::to_string(chain_bad) +
                     " exhaustive_checks=" + std::to_string(checked) + " exhaustive_mismatches=" +
                     std::to_string(mismatched)));
    });
  }
  if (want8) {
    x.timed("hausdorff_content", [&] {
      const real R = 10;
      const GrowthFit fit = fit_growth_constants(s, k, 0.05L, R);
      const ContentBounds b = hausdorff_bounds(k, R, fit.c1, fit.c2);
      std::vector<real> uppers;
      bool pass = true;
      real margin = std::numeric_limits<real>::infinity();
      auto out = x.open("hausdorff", "hausdorff.csv");
      out << "delta,upper,lower\n";
      for (real delta : {1.0L, 0.5L, 0.25L, 0.125L}) {
        const HausdorffEstimate up = hausdorff_upper(s, k, R, delta);
        const HausdorffEstimate low = hausdorff_greedy(s, k, R, delta);
        pass = pass && up.content <= b.upper && low.content >= b.lower && low.content <= up.content * 3;
        margin = std::min({margin, 1 - up.content / b.upper, 1 - b.lower / low.content});
        uppers.push_back(up.content);
        out << format_real(delta) << "," << format_real(up.content) << "," << format_real(low.content) << "\n";
      }
      const bool trend = content_trend_ok(uppers);
      x.add(make("hausdorff_content", 8, pass && trend, margin,
                 "R=10 k=" + num(k) + " bound_lower=" + num(b.lower) + " bound_upper=" + num(b.upper) +
                     " upper_at_0.125=" + num(uppers.back()) + " trend=" + (trend ? "yes" : "no")));
    });
  }
  table->flush();
}

void capacity_oscillating(Ctx& x) {
  x.timed("box_dimension_beta", [&] {
    const OscillationParams& p = x.c.params;
    const ScaleLadder ladder = build_scale_ladder(p);
    if (ladder.rows.empty()) throw Error(ErrorKind::ConfigError, "periods: the model needs at least one period");
    const auto table = x.table(halfplane(build_oscillating_h(p), "oscillating"));
    const auto s = LinearOrbitMetric::from_orbits(table, 2 * ladder.rows[0][2]);
    std::vector<std::pair<real, real>> pairs;
    for (real R : {1e4L, 3e4L, 1e5L}) {
      for (real q : log_grid(1.5L, 150, 10)) pairs.push_back({R, R / q});
    }
    CapacityProfile prof = capacity_profile(s, pairs);
    const real dim = box_dimension_fit(prof);
    const real expect = 1 + 2 * p.beta;
    {
      auto out = x.open("capacity_oscillating", "capacity_oscillating.csv");
      write_profile_csv(out, prof);
    }
    table->flush();
    x.add(make("box_dimension_beta", 0, std::abs(dim - expect) <= 0.3L, 1 - std::abs(dim - expect) / 0.3L,
               "scale=" + num(2 * ladder.rows[0][2]) + " box_dimension=" + num(dim) + " expected=" + num(expect)));
  });
}

// --- Grushin -------------------------------------------------------------

bool strictly_decreasing(const ComparisonReport& rep) {
  const ComparisonRow* prev = nullptr;
  for (const auto& row : rep.rows) {
    if (row.counted == 0) continue;
    if (prev && !(row.max_rel_err < prev->max_rel_err)) return false;
    prev = &row;
  }
  return true;
}

std::string row_detail(const ComparisonReport& rep) {
  std::string s;
  for (const auto& row : rep.rows) {
    s += " err_at_" + num(row.lambda) + "=" + num(row.max_rel_err) + " counted_at_" + num(row.lambda) + "=" +
         std::to_string(row.counted);
  }
  return s;
}

void grushin_pure(Ctx& x, real alpha) {
  x.timed("grushin_convergence", [&] {
    const RegimeWindow w{0, 1e2000L, alpha, 1};
    const auto probes = probe_pairs(x.c.probes, x.c.seed);
    const ComparisonReport rep = convergence_report(power_decay_h(alpha).eval, w, probes, {1e2L, 1e3L, 1e4L});
    {
      auto out = x.open("grushin_pure", "grushin_pure.csv");
      write_comparison_csv(out, rep);
    }
    const GrushinMetric g{alpha};
    real self = 0;
    for (const auto& pr : probe_pairs(10, x.c.seed + 1)) {
      for (real s : {0.5L, 2.0L}) self = std::max(self, self_similarity_error(g, pr, s));
    }
    const real last = rep.rows.back().max_rel_err;
    const bool decreasing = strictly_decreasing(rep);
    const bool pass = decreasing && last < 0.05L && self <= 0.01L;
    x.add(make("grushin_convergence", 9, pass, std::min(1 - last / 0.05L, 1 - self / 0.01L),
               "alpha=" + num(alpha) + " probes=" + std::to_string(probes.size()) + row_detail(rep) +
                   " decreasing=" + (decreasing ? "yes" : "no") + " self_similarity_err=" + num(self)));
  });
}

void grushin_oscillating(Ctx& x) {
  const SmoothedH hs = build_oscillating_h(x.c.params);
  const auto h = [&hs](real r) { return hs(r); };
  x.timed("grushin_alpha_window", [&] {
    const RegimeWindow w = regime_window(hs, 0, false);
    const ComparisonReport rep = convergence_report(h, w, probe_pairs(x.c.probes, x.c.seed), {2, 4, 8, 16});
    {
      auto out = x.open("grushin_oscillating", "grushin_oscillating.csv");
      write_comparison_csv(out, rep);
    }
    const bool decreasing = strictly_decreasing(rep);
    x.add(make("grushin_alpha_window", 0, decreasing, decreasing ? 1 : -1,
               "window=[" + num(w.lo) + "," + num(w.hi) + "]" + row_detail(rep)));
  });
  x.timed("grushin_beta_window", [&] {
    const RegimeWindow w = regime_window(hs, 0, true);
    const real lambda = std::sqrt(w.lo * w.hi);
    const RescaledModel m = rescale(h, w.exponent, lambda, w);
    const Point p1{1, 0}, p2{1, 2};
    const real d = rescaled_distance(m, p1, p2).d;
    const real ref = grushin_distance(GrushinMetric{w.exponent}, p1, p2).d;
    const real err = std::abs(d / ref - 1);
    x.add(make("grushin_beta_window", 0, err <= 0.05L, 1 - err / 0.05L,
               "lambda=" + num(lambda) + " rescaled=" + num(d) + " grushin=" + num(ref) + " rel_err=" + num(err)));
  });
}

void write_files(const RunReport& rep) {
  std::ofstream out(rep.config.output_dir / "report.txt");
  if (!out) throw Error(ErrorKind::ConfigError, "output_dir: cannot write report.txt");
  write_report(out, rep);
}

RunReport start(const RunConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.output_dir);
  RunReport rep;
  rep.config = config;
  rep.artifacts.push_back({"report", config.output_dir / "report.txt"});
  return rep;
}

}  // namespace

std::string to_string(Mode m) {
  for (const auto& [mode, name] : kModes) {
    if (mode == m) return name;
  }
  return "?";
}

std::string to_string(ModelKind m) { return m == ModelKind::Pure ? "pure" : "oscillating"; }

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass:
      return "pass";
    case CheckStatus::Fail:
      return "fail";
    case CheckStatus::Flagged:
      return "flagged";
  }
  return "?";
}

void RunConfig::validate() const {
  const auto& p = params;
  require(p.A > 0, "A", "A > 0 required (A = " + num(p.A) + ")");
  require(p.alpha > p.A, "alpha", "alpha > A required (alpha = " + num(p.alpha) + ", A = " + num(p.A) + ")");
  require(p.beta > p.alpha, "beta",
          "beta > alpha required (beta = " + num(p.beta) + ", alpha = " + num(p.alpha) + ")");
  require(p.B > p.beta, "B", "B > beta required (B = " + num(p.B) + ", beta = " + num(p.beta) + ")");
  require(p.R11 >= 100, "R11", "R11 >= 100 required (R11 = " + num(p.R11) + ")");
  require(p.periods >= 0, "periods", "periods >= 0 required");
  const bool needs_period = mode == Mode::FullSuite || (model == ModelKind::Oscillating &&
                                                        (mode == Mode::OrbitGrowth || mode == Mode::Capacity ||
                                                         mode == Mode::GrushinCompare));
  require(!needs_period || p.periods >= 1, "periods",
          to_string(mode) + " needs periods >= 1 (periods = " + std::to_string(p.periods) + ")");
  require(k >= 0, "k", "k >= 0 required (0 picks ceil K(alpha))");
  require(k_max >= 0, "k_max", "k_max >= 0 required (0 picks floor 4 K(B))");
  require(quad_rel_tol > 0, "quad_rel_tol", "tolerance must be positive");
  require(quad_abs_tol > 0, "quad_abs_tol", "tolerance must be positive");
  require(root_tol > 0, "root_tol", "tolerance must be positive");
  require(dijkstra_dr > 0, "dijkstra_dr", "must be positive");
  require(dijkstra_aspect > 0, "dijkstra_aspect", "must be positive");
  require(ricci_points >= 2, "ricci_points", "at least 2 points required");
  require(probes >= 1, "probes", "at least 1 probe pair required");
  require(!(mode == Mode::GrushinCompare && model == ModelKind::Pure) || p.alpha >= 0.5L, "alpha",
          "the Grushin comparison needs alpha >= 1/2 (alpha = " + num(p.alpha) + ")");
  require(!output_dir.empty(), "output_dir", "must not be empty");
}

int RunConfig::sphere_dimension() const {
  return k > 0 ? k : static_cast<int>(std::ceil(nabonnand_threshold(params.alpha) - 1e-12L));
}

int RunConfig::certification_cap() const {
  return k_max > 0 ? k_max : static_cast<int>(std::floor(4 * nabonnand_threshold(params.B) + 1e-9L));
}

const std::vector<std::pair<std::string, std::string>>& config_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"mode", "ricci-check, build-example, orbit-growth, capacity, grushin-compare or full-suite"},
      {"model", "pure: h = (1+r^2)^(-alpha); oscillating: the alpha/beta model"},
      {"alpha", "slow decay exponent"},
      {"beta", "fast decay exponent"},
      {"A", "lower bridge exponent"},
      {"B", "upper bridge exponent"},
      {"R11", "first junction radius"},
      {"periods", "number of (alpha, beta) periods"},
      {"k", "sphere dimension for ricci-check; 0 picks ceil K(alpha)"},
      {"k_max", "certification search cap; 0 picks floor 4 K(B)"},
      {"quad_rel_tol", "relative quadrature tolerance"},
      {"quad_abs_tol", "absolute quadrature tolerance"},
      {"root_tol", "root finding tolerance on ln r_max"},
      {"ricci_points", "log grid size on [1e-3, 1e6] for ricci-check"},
      {"dijkstra_dr", "radial cell size of the grid oracle"},
      {"dijkstra_aspect", "h(r_max) dv / dr of the grid oracle"},
      {"probes", "number of Grushin probe pairs"},
      {"seed", "seed for probe sampling"},
      {"threads", "worker threads; 0 uses every core"},
      {"output_dir", "directory for CSV files and report.txt"},
      {"cache_dir", "orbit table cache; empty disables it (WARPLAB_CACHE_DIR overrides the file)"},
  };
  return keys;
}

RunConfig config_from_keys(const std::map<std::string, std::string>& kv) {
  RunConfig c;
  for (const auto& [key, value] : kv) {
    const bool known = std::any_of(config_keys().begin(), config_keys().end(),
                                   [&](const auto& k) { return k.first == key; });
    if (!known) throw Error(ErrorKind::ConfigError, key + ": unknown key");
    if (key == "mode") c.mode = parse_mode(value);
    else if (key == "model") c.model = parse_model(value);
    else if (key == "alpha") c.params.alpha = parse_real(value, key);
    else if (key == "beta") c.params.beta = parse_real(value, key);
    else if (key == "A") c.params.A = parse_real(value, key);
    else if (key == "B") c.params.B = parse_real(value, key);
    else if (key == "R11") c.params.R11 = parse_real(value, key);
    else if (key == "periods") c.params.periods = static_cast<int>(parse_integer(value, key));
    else if (key == "k") c.k = static_cast<int>(parse_integer(value, key));
    else if (key == "k_max") c.k_max = static_cast<int>(parse_integer(value, key));
    else if (key == "quad_rel_tol") c.quad_rel_tol = parse_real(value, key);
    else if (key == "quad_abs_tol") c.quad_abs_tol = parse_real(value, key);
    else if (key == "root_tol") c.root_tol = parse_real(value, key);
    else if (key == "ricci_points") c.ricci_points = parse_count(value, key);
    else if (key == "dijkstra_dr") c.dijkstra_dr = parse_real(value, key);
    else if (key == "dijkstra_aspect") c.dijkstra_aspect = parse_real(value, key);
    else if (key == "probes") c.probes = parse_count(value, key);
    else if (key == "seed") c.seed = static_cast<unsigned>(parse_count(value, key));
    else if (key == "threads") c.threads = static_cast<unsigned>(parse_count(value, key));
    else if (key == "output_dir") c.output_dir = value;
    else if (key == "cache_dir") c.cache_dir = value;
  }
  c.validate();
  return c;
}

namespace {

std::string config_text(const RunConfig& c, std::string (*fmt)(real)) {
  std::ostringstream os;
  os << "mode = " << to_string(c.mode) << "\n"
     << "model = " << to_string(c.model) << "\n"
     << "alpha = " << fmt(c.params.alpha) << "\n"
     << "beta = " << fmt(c.params.beta) << "\n"
     << "A = " << fmt(c.params.A) << "\n"
     << "B = " << fmt(c.params.B) << "\n"
     << "R11 = " << fmt(c.params.R11) << "\n"
     << "periods = " << c.params.periods << "\n"
     << "k = " << c.k << "\n"
     << "k_max = " << c.k_max << "\n"
     << "quad_rel_tol = " << fmt(c.quad_rel_tol) << "\n"
     << "quad_abs_tol = " << fmt(c.quad_abs_tol) << "\n"
     << "root_tol = " << fmt(c.root_tol) << "\n"
     << "ricci_points = " << c.ricci_points << "\n"
     << "dijkstra_dr = " << fmt(c.dijkstra_dr) << "\n"
     << "dijkstra_aspect = " << fmt(c.dijkstra_aspect) << "\n"
     << "probes = " << c.probes << "\n"
     << "seed = " << c.seed << "\n"
     << "threads = " << c.threads << "\n"
     << "output_dir = " << c.output_dir.string() << "\n"
     << "cache_dir = " << c.cache_dir.string() << "\n";
  return os.str();
}

}  // namespace

std::string to_text(const RunConfig& c) { return config_text(c, format_real); }


bool parse_args(int argc, const char* const* argv, RunConfig& config, std::ostream& out) {
  CLI::App app{"Experiments on doubly warped metrics with oscillating circle factor."};
  app.set_help_flag("-h,--help", "Print this help and exit");
  std::string config_path;
  bool emit = false;
  app.add_option("--config", config_path, "key = value file; flags override its keys")->type_name("FILE");
  app.add_flag("--emit-config", emit, "Print the resolved configuration and exit");

  std::map<std::string, std::string> defaults;
  {
    std::istringstream is(config_text(RunConfig{}, num));
    defaults = read_key_values(is);
  }
  std::map<std::string, std::string> values;
  std::map<std::string, CLI::Option*> options;
  for (const auto& [key, help] : config_keys()) {
    const std::string def = defaults.count(key) && !defaults[key].empty() ? defaults[key] : "empty";
    options[key] = app.add_option("--" + key, values[key], help + " (default: " + def + ")")->type_name("VALUE");
  }
  std::vector<std::pair<CLI::App*, std::string>> subs;
  for (const auto& [mode, name] : kModes) {
    CLI::App* sub = app.add_subcommand(name, "Same as --mode " + std::string(name));
    sub->fallthrough();
    subs.push_back({sub, name});
  }
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return false;
  } catch (const CLI::ParseError& e) {
    throw Error(ErrorKind::ConfigError, std::string("command line: ") + e.what());
  }

  std::map<std::string, std::string> kv;
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw Error(ErrorKind::ConfigError, "config: cannot open " + config_path);
    kv = read_key_values(in);
  }
  if (const char* env = std::getenv("WARPLAB_CACHE_DIR"); env && *env) kv["cache_dir"] = env;
  for (const auto& [key, opt] : options) {
    if (opt->count() > 0) kv[key] = values[key];
  }
  for (const auto& [sub, name] : subs) {
    if (!sub->parsed()) continue;
    if (options["mode"]->count() > 0 && values["mode"] != name) {
      throw Error(ErrorKind::ConfigError, "mode: subcommand " + name + " conflicts with --mode " + values["mode"]);
    }
    kv["mode"] = name;
  }
  if (!kv.count("mode")) throw Error(ErrorKind::ConfigError, "mode: required (subcommand, --mode or config file)");
  config = config_from_keys(kv);
  if (emit) {
    out << to_text(config);
    return false;
  }
  return true;
}

bool RunReport::ok() const {
  return std::none_of(checks.begin(), checks.end(), [](const CheckResult& c) { return c.status == CheckStatus::Fail; });
}

RunReport run_criteria(const RunConfig& config, const std::set<int>& criteria) {
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep = start(config);
  Ctx x{rep.config, rep};
  auto want = [&](int c) { return criteria.count(c) > 0; };
  // Criteria on the pure model are stated for alpha = 1/2.
  const real half = 0.5L;
  if (want(1)) ricci_positivity(x, half, 8);
  if (want(2)) round_sphere(x);
  if (want(3) || want(4)) orbit_pure(x, half, want(3), want(4), false);
  if (want(5) || want(6)) orbit_oscillating(x, want(5), want(6));
  if (want(7) || want(8)) capacity_pure(x, half, want(7), want(8));
  if (want(9)) grushin_pure(x, half);
  if (want(10)) construction(x);
  rep.seconds = since(t0);
  write_files(rep);
  return rep;
}

RunReport run(const RunConfig& config) {
  if (config.mode == Mode::FullSuite) return run_criteria(config, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  const auto t0 = std::chrono::steady_clock::now();
  RunReport rep = start(config);
  Ctx x{rep.config, rep};
  const bool pure = config.model == ModelKind::Pure;
  const real alpha = config.params.alpha;
  switch (config.mode) {
    case Mode::RicciCheck:
      ricci_positivity(x, alpha, config.sphere_dimension());
      round_sphere(x);
      break;
    case Mode::BuildExample:
      construction(x);
      break;
    case Mode::OrbitGrowth:
      if (pure) orbit_pure(x, alpha, true, true, true);
      else orbit_oscillating(x, true, true);
      break;
    case Mode::Capacity:
      if (pure) capacity_pure(x, alpha, true, true);
      else capacity_oscillating(x);
      break;
    case Mode::GrushinCompare:
      if (pure) grushin_pure(x, alpha);
      else grushin_oscillating(x);
      break;
    case Mode::FullSuite:
      break;
  }
  rep.seconds = since(t0);
  write_files(rep);
  return rep;
}

void write_report(std::ostream& os, const RunReport& r) {
  char buf[64];
  os << "# warplab run report\n";
  std::istringstream cfg(to_text(r.config));
  for (std::string line; std::getline(cfg, line);) os << "config." << line << "\n";
  for (const auto& c : r.checks) {
    const std::string p = "check." + c.name + ".";
    os << p << "criterion = " << c.criterion << "\n";
    os << p << "status = " << to_string(c.status) << "\n";
    os << p << "margin = " << num(c.margin) << "\n";
    os << p << "detail = " << c.detail << "\n";
    std::snprintf(buf, sizeof buf, "%.3f", c.seconds);
    os << p << "seconds = " << buf << "\n";
  }
  for (const auto& [name, path] : r.artifacts) os << "artifact." << name << " = " << path.string() << "\n";
  std::snprintf(buf, sizeof buf, "%.3f", r.seconds);
  os << "seconds = " << buf << "\n";
  os << "result = " << (r.ok() ? "pass" : "fail") << "\n";
}

}  // namespace warplab::harness
