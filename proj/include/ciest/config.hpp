#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ciest/estimator.hpp"
#include "ciest/expfam.hpp"
#include "ciest/network.hpp"

namespace ciest {

struct CheckpointPolicy {
  // Checkpoints are geometrically spaced with this ratio; the horizon is
  // always included.
  double ratio = 1.2;
};

struct Diagnostics {
  bool comparator = true;
  bool lyapunov = true;
  bool mle = true;
  bool debug_checks = false;
};

struct OutputSpec {
  std::string dir;  // empty: write nothing
  bool trajectory = false;
};

// A fully validated experiment description.
struct RunConfig {
  SensorNetworkModel network;
  RandomGraphProcess graph;
  WeightSchedule schedule;
  bool t0_auto = true;
  Parameter theta_star;
  std::int64_t horizon = 1;
  std::int64_t replications = 1;
  std::uint64_t seed = 0;
  CheckpointPolicy checkpoints;
  Diagnostics diagnostics;
  InitOptions init;
  OutputSpec output;
  int workers = 0;  // 0: environment or hardware default

  // Pre-flight results, derived from the fields above.
  ObservabilityReport observability;
  std::vector<std::string> warnings;
};

// Parses and validates a JSON run configuration. Errors are InputError with
// the offending field path in the message.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

// Canonical JSON for a config; parse_config(to_json(c).dump()) == c.
nlohmann::json to_json(const RunConfig& config);

bool operator==(const RunConfig& a, const RunConfig& b);

// FNV-1a over the canonical serialization; independent of key order in the
// source document.
std::string config_hash(const RunConfig& config);

std::vector<std::int64_t> checkpoint_times(std::int64_t horizon, double ratio);

// Perturbed point used by the observability pre-check.
Parameter observability_probe(const Parameter& theta_star);

}  // namespace ciest
