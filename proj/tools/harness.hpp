#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "warplab/example.hpp"

namespace warplab::harness {

enum class Mode { RicciCheck, BuildExample, OrbitGrowth, Capacity, GrushinCompare, FullSuite };
enum class ModelKind { Pure, Oscillating };

std::string to_string(Mode m);
std::string to_string(ModelKind m);

struct RunConfig {
  Mode mode = Mode::FullSuite;
  // pure: h = (1+r²)^(-alpha); oscillating: the (alpha, beta) model.
  ModelKind model = ModelKind::Oscillating;
  OscillationParams params;
  int k = 0;      // sphere dimension for ricci-check; 0 picks ceil K(alpha)
  int k_max = 0;  // certification search cap; 0 picks floor 4 K(B)
  real quad_rel_tol = 1e-11L;
  real quad_abs_tol = 1e-12L;
  real root_tol = 1e-14L;
  std::size_t ricci_points = 4000;
  real dijkstra_dr = 0.05L;
  real dijkstra_aspect = 0.5L;
  std::size_t probes = 20;
  unsigned seed = 11;
  unsigned threads = 0;  // 0: hardware concurrency
  std::filesystem::path output_dir = "warplab_out";
  std::filesystem::path cache_dir;  // empty: no orbit cache

  /// ConfigError naming the key and the violated constraint.
  void validate() const;
  int sphere_dimension() const;
  int certification_cap() const;

  bool operator==(const RunConfig&) const = default;
};

/// Every key accepted in a config file or as a --flag, with its help text, in
/// the order to_text writes them.
const std::vector<std::pair<std::string, std::string>>& config_keys();

/// Unknown keys and malformed values raise ConfigError. The result is validated.
RunConfig config_from_keys(const std::map<std::string, std::string>& kv);
/// key = value text that config_from_keys reads back to an equal config.
std::string to_text(const RunConfig& c);

/// Command line: `warplab [MODE] [--config FILE] [--KEY VALUE ...]`. MODE may
/// also come from --mode or the file. Flags override the file and
/// WARPLAB_CACHE_DIR overrides a cache_dir from the file. Returns false when
/// there is nothing to run (--help, --emit-config); their text goes to `out`.
bool parse_args(int argc, const char* const* argv, RunConfig& config, std::ostream& out);

enum class CheckStatus { Pass, Fail, Flagged };
std::string to_string(CheckStatus s);

struct CheckResult {
  std::string name;
  int criterion = 0;  // acceptance criterion number, 0 for extra checks
  CheckStatus status = CheckStatus::Fail;
  real margin = 0;  // ≥ 0 inside tolerance; scale is check specific
  std::string detail;
  double seconds = 0;
};

struct RunReport {
  RunConfig config;
  std::vector<CheckResult> checks;
  std::vector<std::pair<std::string, std::filesystem::path>> artifacts;
  double seconds = 0;

  /// False iff a check that is not flagged failed.
  bool ok() const;
};

/// Runs the pipeline of config.mode, writes CSV files and report.txt into
/// output_dir. Module errors other than expected check failures propagate
/// with the check name prepended.
RunReport run(const RunConfig& config);

/// The full suite restricted to the given acceptance criteria (1..10).
RunReport run_criteria(const RunConfig& config, const std::set<int>& criteria);

void write_report(std::ostream& os, const RunReport& r);

}  // namespace warplab::harness
