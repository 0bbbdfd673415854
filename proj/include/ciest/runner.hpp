#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ciest/analysis.hpp"
#include "ciest/config.hpp"

namespace ciest {

// Metrics of one replication at one checkpoint. NaN marks a metric that is
// disabled or undefined (e.g. singular I(theta*)).
struct CheckpointRecord {
  std::int64_t t = 0;
  std::vector<Vector> opt_x;
  Disagreement disagreement;
  double gain_err = 0.0;
  double lin_dev = 0.0;
  double V = 0.0;
  double mle_err = 0.0;
};

struct ReplicationTrace {
  std::int64_t index = 0;
  std::uint64_t seed = 0;
  bool diverged = false;
  std::string failure;
  std::vector<CheckpointRecord> checkpoints;
  double max_lin_dev = 0.0;  // over every step, not only checkpoints
  std::uint64_t clamp_count = 0;
  std::int64_t mle_failures = 0;
};

// Runs replication `index` with seed child_seed(config.seed, index).
ReplicationTrace run_replication(const RunConfig& config, std::int64_t index);

struct AgentSummary {
  Matrix emp_cov;  // covariance of sqrt(t+1)(x_n(t) - theta*)
  Vector bias;
  double mean_err = 0.0;
};

struct CheckpointSummary {
  std::int64_t t = 0;
  std::vector<AgentSummary> agents;
  // Means over replications.
  double disagreement = 0.0;
  double gain_err = 0.0;
  double lin_dev = 0.0;
  double V = 0.0;
  double mle_err = 0.0;
};

struct MonteCarloSummary {
  std::vector<CheckpointSummary> checkpoints;
  std::int64_t replications = 0;  // non-diverged replications used
  std::int64_t diverged = 0;
  double max_lin_dev = 0.0;
};

// Aggregates non-diverged traces in index order; diverged ones are only
// counted.
MonteCarloSummary summarize(const RunConfig& config, const std::vector<ReplicationTrace>& traces);

struct RunManifest {
  std::string config_hash;
  std::string version;
  double wall_seconds = 0.0;
  std::vector<std::uint64_t> seeds;
  std::vector<std::int64_t> diverged;
  std::uint64_t clamp_count = 0;
  std::int64_t mle_failures = 0;
  std::vector<std::string> warnings;
};

struct RunResult {
  RunManifest manifest;
  MonteCarloSummary summary;
  std::vector<ReplicationTrace> traces;
};

struct RunOptions {
  int workers = 0;  // 0: CIEST_WORKERS, then config, then hardware
  std::int64_t replications = -1;  // -1: config value
};

int resolve_workers(const RunConfig& config, const RunOptions& options);

RunResult run(const RunConfig& config, const RunOptions& options = {});

// Writes config.json, manifest.json, summary.csv, summary.txt,
// final_errors.csv and, if enabled, trajectory.csv.
void write_artifacts(const RunConfig& config, const RunResult& result,
                     const std::filesystem::path& dir);

std::string format_number(double v);

}  // namespace ciest
