// ciest: run, accept, check-model, describe.
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "ciest/acceptance.hpp"
#include "ciest/config.hpp"
#include "ciest/errors.hpp"
#include "ciest/runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kInputError = 2;

double fd_gradient_error(const ciest::AgentModel& model, const ciest::Parameter& theta) {
  const double h = 1e-5;
  ciest::Vector fd(theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    ciest::Parameter p = theta, q = theta;
    p[j] += h;
    q[j] -= h;
    fd[j] = (model.log_partition(p) - model.log_partition(q)) / (2 * h);
  }
  const ciest::Vector mean = model.mean_map(theta);
  return (mean - fd).norm() / (1.0 + mean.norm());
}

double fd_hessian_error(const ciest::AgentModel& model, const ciest::Parameter& theta) {
  const double h = 1e-5;
  ciest::Matrix fd(theta.size(), theta.size());
  for (Eigen::Index j = 0; j < theta.size(); ++j) {
    ciest::Parameter p = theta, q = theta;
    p[j] += h;
    q[j] -= h;
    fd.col(j) = (model.mean_map(p) - model.mean_map(q)) / (2 * h);
  }
  const ciest::Matrix I = model.fisher(theta);
  return (I - fd).norm() / (1.0 + I.norm());
}

void print_warnings(const ciest::RunConfig& config) {
  for (const auto& w : config.warnings) std::cerr << "warning: " << w << "\n";
}

int cmd_run(const std::string& path, const std::string& out_dir, int workers) {
  const auto config = ciest::load_config(path);
  print_warnings(config);
  const auto result = ciest::run(config, ciest::RunOptions{workers, -1});
  const std::string dir = out_dir.empty() ? config.output.dir : out_dir;
  if (!dir.empty()) ciest::write_artifacts(config, result, dir);
  const auto& s = result.summary;
  std::printf("replications=%lld diverged=%lld wall=%.2fs\n", static_cast<long long>(s.replications),
              static_cast<long long>(s.diverged), result.manifest.wall_seconds);
  if (!s.checkpoints.empty()) {
    const auto& last = s.checkpoints.back();
    std::printf("t=%lld disagreement=%s gain_err=%s mle_err=%s\n", static_cast<long long>(last.t),
                ciest::format_number(last.disagreement).c_str(),
                ciest::format_number(last.gain_err).c_str(),
                ciest::format_number(last.mle_err).c_str());
  }
  if (!dir.empty()) std::printf("artifacts in %s\n", dir.c_str());
  return s.replications > 0 ? kOk : kFail;
}

int cmd_accept(const std::string& dir, int workers) {
  ciest::AcceptOptions options;
  options.workers = workers;
  options.log = &std::cerr;
  const auto report = ciest::accept(dir, options);
  for (const auto& r : report.results) std::cout << ciest::format_result(r) << "\n";
  std::cout << (report.pass() ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED") << "\n";
  return report.pass() ? kOk : kFail;
}

int cmd_check_model(const std::string& path) {
  const auto config = ciest::load_config(path);
  print_warnings(config);
  const auto& obs = config.observability;
  std::printf("observability: kl_fwd=%.6g kl_bwd=%.6g min_eig_fisher=%.6g -> %s\n", obs.kl_fwd,
              obs.kl_bwd, obs.min_eig_global_fisher, obs.pass ? "pass" : "FAIL");
  bool ok = obs.pass;
  for (int n = 0; n < config.network.size(); ++n) {
    const auto& model = config.network.agent(n);
    const double g = fd_gradient_error(model, config.theta_star);
    const double h = fd_hessian_error(model, config.theta_star);
    const bool pass = g <= 1e-6 && h <= 1e-5;
    ok = ok && pass;
    std::printf("agent %d (%s): gradient FD err=%.3g hessian FD err=%.3g -> %s\n", n,
                std::string(ciest::family_tag(model.kind())).c_str(), g, h,
                pass ? "pass" : "FAIL");
  }
  return ok ? kOk : kFail;
}

int cmd_describe(const std::string& path) {
  const auto config = ciest::load_config(path);
  auto j = ciest::to_json(config);
  j["resolved"] = {{"t0", config.schedule.t0},
                   {"config_hash", ciest::config_hash(config)},
                   {"workers", ciest::resolve_workers(config, {})},
                   {"checkpoints",
                    ciest::checkpoint_times(config.horizon, config.checkpoints.ratio).size()},
                   {"observable", config.observability.pass},
                   {"warnings", config.warnings}};
  std::cout << j.dump(2) << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Consensus + innovations distributed estimation"};
  app.require_subcommand(1);
  std::string path, out_dir;
  int workers = 0;

  auto* run = app.add_subcommand("run", "Run a Monte Carlo experiment");
  run->add_option("config", path, "Run configuration (JSON)")->required();
  run->add_option("-o,--out", out_dir, "Artifact directory (overrides output.dir)");
  run->add_option("-j,--workers", workers, "Worker threads");

  auto* acc = app.add_subcommand("accept", "Run the acceptance suite");
  acc->add_option("suite", path, "Suite directory")->required();
  acc->add_option("-j,--workers", workers, "Worker threads");

  auto* check = app.add_subcommand("check-model", "Observability and derivative checks");
  check->add_option("config", path, "Run configuration (JSON)")->required();

  auto* desc = app.add_subcommand("describe", "Print the resolved configuration");
  desc->add_option("config", path, "Run configuration (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*run) return cmd_run(path, out_dir, workers);
    if (*acc) return cmd_accept(path, workers);
    if (*check) return cmd_check_model(path);
    if (*desc) return cmd_describe(path);
  } catch (const ciest::InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kInputError;
}
