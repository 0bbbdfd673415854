#include "ciest/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <thread>

#include "ciest/baseline.hpp"
#include "ciest/errors.hpp"

namespace ciest {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::optional<Matrix> try_optimal_gain(const RunConfig& config) {
  try {
    return optimal_gain(config.network, config.theta_star);
  } catch (const SolverError&) {
    return std::nullopt;
  }
}

double mean_finite(double sum, std::int64_t count) {
  return count > 0 ? sum / static_cast<double>(count) : kNaN;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw InputError(path.string() + ": cannot open for writing");
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ReplicationTrace run_replication(const RunConfig& config, std::int64_t index) {
  const auto& net = config.network;
  const int n_agents = net.size();
  const int m = net.param_dim();

  ReplicationTrace trace;
  trace.index = index;
  trace.seed = child_seed(config.seed, static_cast<std::uint64_t>(index));
  Rng rng(trace.seed);

  const auto times = checkpoint_times(config.horizon, config.checkpoints.ratio);
  const auto k_opt = try_optimal_gain(config);
  const bool comparator = config.diagnostics.comparator;

  Stepper stepper(net, config.graph, config.schedule, config.theta_star,
                  StepOptions{config.diagnostics.debug_checks});
  InitOptions init = config.init;
  init.comparator = comparator;
  EstimatorState cur = initial_state(net, init);
  EstimatorState next;
  StepInputs inputs;
  PooledStatistics pooled(m);
  Parameter mle_guess = Parameter::Zero(m);

  std::size_t ci = 0;
  try {
    for (std::int64_t step = 0; step < config.horizon; ++step) {
      stepper.sample_inputs(rng, inputs);
      stepper.advance(cur, inputs, next);
      std::swap(cur, next);
      if (config.diagnostics.mle) pooled.add(net, inputs.observations);
      if (comparator) trace.max_lin_dev = std::max(trace.max_lin_dev, lin_deviation(cur));

      if (ci >= times.size() || cur.t != times[ci]) continue;
      ++ci;
      CheckpointRecord rec;
      rec.t = cur.t;
      rec.opt_x.reserve(static_cast<std::size_t>(n_agents));
      for (const auto& a : cur.agents) rec.opt_x.push_back(a.opt_x);
      rec.disagreement = disagreement(cur);
      rec.lin_dev = comparator ? lin_deviation(cur) : kNaN;
      rec.gain_err = k_opt ? gain_error(cur, net, config.theta_star,
                                        weights_at(config.schedule, cur.t).phi)
                           : kNaN;
      rec.V = (k_opt && config.diagnostics.lyapunov) ? lyapunov_V(cur, config.theta_star, *k_opt)
                                                     : kNaN;
      rec.mle_err = kNaN;
      if (config.diagnostics.mle) {
        try {
          mle_guess = centralized_mle(net, pooled, mle_guess);
          rec.mle_err = (mle_guess - config.theta_star).norm();
        } catch (const SolverError&) {
          // The MLE need not exist for small samples (e.g. separable logit
          // data); count and restart from zero.
          ++trace.mle_failures;
          mle_guess.setZero();
        }
      }
      trace.checkpoints.push_back(std::move(rec));
    }
  } catch (const DivergenceError& e) {
    trace.diverged = true;
    trace.failure = e.what();
  } catch (const SolverError& e) {
    trace.diverged = true;
    trace.failure = e.what();
  }
  trace.clamp_count = stepper.clamp_counter().count;
  return trace;
}

MonteCarloSummary summarize(const RunConfig& config, const std::vector<ReplicationTrace>& traces) {
  const int n_agents = config.network.size();
  const int m = config.network.param_dim();
  const auto times = checkpoint_times(config.horizon, config.checkpoints.ratio);

  MonteCarloSummary out;
  std::vector<const ReplicationTrace*> ok;
  for (const auto& tr : traces) {
    if (tr.diverged) {
      ++out.diverged;
      continue;
    }
    ok.push_back(&tr);
    out.max_lin_dev = std::max(out.max_lin_dev, tr.max_lin_dev);
  }
  out.replications = static_cast<std::int64_t>(ok.size());

  for (std::size_t ci = 0; ci < times.size(); ++ci) {
    CheckpointSummary cs;
    cs.t = times[ci];
    const double scale = std::sqrt(static_cast<double>(cs.t) + 1.0);
    std::vector<CovarianceAccumulator> acc(static_cast<std::size_t>(n_agents),
                                           CovarianceAccumulator(m));
    std::vector<double> err(static_cast<std::size_t>(n_agents), 0.0);
    double dis = 0.0, gerr = 0.0, lin = 0.0, v = 0.0, mle = 0.0;
    std::int64_t mle_count = 0;
    for (const auto* tr : ok) {
      const auto& rec = tr->checkpoints.at(ci);
      for (int n = 0; n < n_agents; ++n) {
        const Vector e = rec.opt_x[static_cast<std::size_t>(n)] - config.theta_star;
        acc[static_cast<std::size_t>(n)].add(scale * e);
        err[static_cast<std::size_t>(n)] += e.norm();
      }
      dis += rec.disagreement.opt;
      gerr += rec.gain_err;
      lin += rec.lin_dev;
      v += rec.V;
      if (!std::isnan(rec.mle_err)) {
        mle += rec.mle_err;
        ++mle_count;
      }
    }
    for (int n = 0; n < n_agents; ++n) {
      const auto& a = acc[static_cast<std::size_t>(n)];
      cs.agents.push_back({a.covariance(true), a.count() ? a.mean() : Vector(Vector::Zero(m)),
                           mean_finite(err[static_cast<std::size_t>(n)], out.replications)});
    }
    cs.disagreement = mean_finite(dis, out.replications);
    cs.gain_err = mean_finite(gerr, out.replications);
    cs.lin_dev = mean_finite(lin, out.replications);
    cs.V = mean_finite(v, out.replications);
    cs.mle_err = mean_finite(mle, mle_count);
    out.checkpoints.push_back(std::move(cs));
  }
  return out;
}

int resolve_workers(const RunConfig& config, const RunOptions& options) {
  if (options.workers > 0) return options.workers;
  if (const char* env = std::getenv("CIEST_WORKERS")) {
    char* end = nullptr;
    const long w = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || w < 1)
      throw InputError(std::string("CIEST_WORKERS: expected a positive integer, got '") + env + "'");
    return static_cast<int>(w);
  }
  if (config.workers > 0) return config.workers;
  return std::max(1u, std::thread::hardware_concurrency());
}

RunResult run(const RunConfig& config, const RunOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  const std::int64_t reps = options.replications >= 0 ? options.replications : config.replications;
  if (reps < 1) throw InputError("replications must be >= 1");
  const int workers =
      static_cast<int>(std::min<std::int64_t>(resolve_workers(config, options), reps));

  RunResult result;
  result.traces.resize(static_cast<std::size_t>(reps));
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (;;) {
      const std::int64_t i = next.fetch_add(1);
      if (i >= reps) return;
      try {
        result.traces[static_cast<std::size_t>(i)] = run_replication(config, i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = reps;
        return;
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  if (error) std::rethrow_exception(error);

  result.summary = summarize(config, result.traces);
  auto& man = result.manifest;
  man.config_hash = config_hash(config);
  man.version = CIEST_VERSION;
  man.warnings = config.warnings;
  for (const auto& tr : result.traces) {
    man.seeds.push_back(tr.seed);
    if (tr.diverged) man.diverged.push_back(tr.index);
    man.clamp_count += tr.clamp_count;
    man.mle_failures += tr.mle_failures;
  }
  man.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

void write_artifacts(const RunConfig& config, const RunResult& result,
                     const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const int n_agents = config.network.size();
  const int m = config.network.param_dim();
  const auto& summary = result.summary;

  open_out(dir / "config.json") << to_json(config).dump(2) << "\n";

  {
    const auto& man = result.manifest;
    nlohmann::json j;
    j["config_hash"] = man.config_hash;
    j["version"] = man.version;
    j["wall_seconds"] = man.wall_seconds;
    j["seeds"] = man.seeds;
    j["diverged"] = man.diverged;
    j["clamp_count"] = man.clamp_count;
    j["mle_failures"] = man.mle_failures;
    j["warnings"] = man.warnings;
    nlohmann::json failures = nlohmann::json::object();
    for (const auto& tr : result.traces)
      if (tr.diverged) failures[std::to_string(tr.index)] = tr.failure;
    j["failures"] = std::move(failures);
    open_out(dir / "manifest.json") << j.dump(2) << "\n";
  }

  {
    auto out = open_out(dir / "summary.csv");
    out << "t,agent,replications,mean_err,disagreement,gain_err,lin_dev,V,mle_err";
    for (int i = 0; i < m; ++i) out << ",bias_" << i;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out << ",cov_" << i << "_" << j;
    out << "\n";
    for (const auto& cs : summary.checkpoints)
      for (int n = 0; n < n_agents; ++n) {
        const auto& a = cs.agents[static_cast<std::size_t>(n)];
        out << cs.t << "," << n << "," << summary.replications << "," << format_number(a.mean_err)
            << "," << format_number(cs.disagreement) << "," << format_number(cs.gain_err) << ","
            << format_number(cs.lin_dev) << "," << format_number(cs.V) << ","
            << format_number(cs.mle_err);
        for (int i = 0; i < m; ++i) out << "," << format_number(a.bias[i]);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) out << "," << format_number(a.emp_cov(i, j));
        out << "\n";
      }
  }

  {
    auto out = open_out(dir / "summary.txt");
    out << "config_hash=" << result.manifest.config_hash << "\n";
    out << "horizon=" << config.horizon << "\n";
    out << "replications=" << summary.replications << "\n";
    out << "diverged=" << summary.diverged << "\n";
    out << "max_lin_dev=" << format_number(summary.max_lin_dev) << "\n";
    if (!summary.checkpoints.empty()) {
      const auto& last = summary.checkpoints.back();
      out << "final.t=" << last.t << "\n";
      out << "final.disagreement=" << format_number(last.disagreement) << "\n";
      out << "final.gain_err=" << format_number(last.gain_err) << "\n";
      out << "final.lin_dev=" << format_number(last.lin_dev) << "\n";
      out << "final.V=" << format_number(last.V) << "\n";
      out << "final.mle_err=" << format_number(last.mle_err) << "\n";
      std::optional<Matrix> target;
      try {
        target = crlb(config.network, config.theta_star, 1);
      } catch (const SolverError&) {
      }
      for (int n = 0; n < n_agents; ++n) {
        const auto& a = last.agents[static_cast<std::size_t>(n)];
        const std::string p = "final.agent" + std::to_string(n) + ".";
        out << p << "mean_err=" << format_number(a.mean_err) << "\n";
        if (target)
          out << p << "cov_rel_err="
              << format_number((a.emp_cov - *target).norm() / target->norm()) << "\n";
      }
    }
  }

  {
    auto out = open_out(dir / "final_errors.csv");
    out << "replication,agent";
    for (int i = 0; i < m; ++i) out << ",u_" << i;
    out << "\n";
    for (const auto& tr : result.traces) {
      if (tr.diverged || tr.checkpoints.empty()) continue;
      const auto& rec = tr.checkpoints.back();
      const double scale = std::sqrt(static_cast<double>(rec.t) + 1.0);
      for (int n = 0; n < n_agents; ++n) {
        out << tr.index << "," << n;
        const Vector u = scale * (rec.opt_x[static_cast<std::size_t>(n)] - config.theta_star);
        for (int i = 0; i < m; ++i) out << "," << format_number(u[i]);
        out << "\n";
      }
    }
  }

  if (config.output.trajectory) {
    auto out = open_out(dir / "trajectory.csv");
    out << "replication,t,agent";
    for (int i = 0; i < m; ++i) out << ",x_" << i;
    out << ",disagreement,gain_err,lin_dev,V,mle_err\n";
    for (const auto& tr : result.traces)
      for (const auto& rec : tr.checkpoints)
        for (int n = 0; n < n_agents; ++n) {
          out << tr.index << "," << rec.t << "," << n;
          for (int i = 0; i < m; ++i)
            out << "," << format_number(rec.opt_x[static_cast<std::size_t>(n)][i]);
          out << "," << format_number(rec.disagreement.opt) << "," << format_number(rec.gain_err)
              << "," << format_number(rec.lin_dev) << "," << format_number(rec.V) << ","
              << format_number(rec.mle_err) << "\n";
        }
  }
}

}  // namespace ciest
