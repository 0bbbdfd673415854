#include "ciest/acceptance.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "ciest/analysis.hpp"
#include "ciest/baseline.hpp"
#include "ciest/config.hpp"
#include "ciest/errors.hpp"
#include "ciest/runner.hpp"

namespace ciest {

using nlohmann::json;

namespace {

struct Scenario {
  std::optional<RunConfig> config;
  std::vector<ReplicationTrace> traces;
  std::string error;  // set when the scenario could not be loaded or run
};

class ScenarioCache {
 public:
  ScenarioCache(std::filesystem::path dir, std::map<std::string, std::string> files,
                std::map<std::string, std::int64_t> needed, const AcceptOptions& options)
      : dir_(std::move(dir)), files_(std::move(files)), needed_(std::move(needed)),
        options_(options) {}

  const Scenario& get(const std::string& name) {
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    Scenario& s = cache_[name];
    const auto f = files_.find(name);
    if (f == files_.end()) {
      s.error = "scenario '" + name + "' is not declared in criteria.json";
      return s;
    }
    const auto path = dir_ / f->second;
    if (!std::filesystem::exists(path)) {
      s.error = "missing artifact " + path.string() + " (scenario '" + name + "')";
      return s;
    }
    try {
      s.config = load_config(path);
      const std::int64_t reps = std::max<std::int64_t>(needed_[name], s.config->replications);
      if (options_.log)
        *options_.log << "running scenario " << name << ": R=" << reps
                      << " T=" << s.config->horizon << std::endl;
      const auto start = std::chrono::steady_clock::now();
      auto result = run(*s.config, RunOptions{options_.workers, reps});
      s.traces = std::move(result.traces);
      if (options_.log)
        *options_.log << "  done in "
                      << std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                             .count()
                      << " s" << std::endl;
    } catch (const std::exception& e) {
      s.config.reset();
      s.error = path.string() + ": " + e.what();
    }
    return s;
  }

 private:
  std::filesystem::path dir_;
  std::map<std::string, std::string> files_;
  std::map<std::string, std::int64_t> needed_;
  const AcceptOptions& options_;
  std::map<std::string, Scenario> cache_;
};

double num(const json& c, const char* key) {
  if (!c.contains(key) || !c.at(key).is_number())
    throw InputError("criterion " + c.value("id", std::string("?")) + ": missing numeric '" +
                     key + "'");
  return c.at(key).get<double>();
}

std::string str(const json& c, const char* key) {
  if (!c.contains(key) || !c.at(key).is_string())
    throw InputError("criterion " + c.value("id", std::string("?")) + ": missing string '" +
                     key + "'");
  return c.at(key).get<std::string>();
}

std::int64_t reps_of(const json& c) {
  return c.contains("replications") ? c.at("replications").get<std::int64_t>() : -1;
}

// First R non-diverged traces (all of them when R < 0).
std::vector<ReplicationTrace> take(const Scenario& s, std::int64_t r, std::int64_t* diverged) {
  std::vector<ReplicationTrace> out;
  *diverged = 0;
  for (const auto& tr : s.traces) {
    if (r >= 0 && static_cast<std::int64_t>(out.size() + static_cast<std::size_t>(*diverged)) >= r)
      break;
    if (tr.diverged)
      ++*diverged;
    else
      out.push_back(tr);
  }
  return out;
}

std::vector<double> times_of(const MonteCarloSummary& s) {
  std::vector<double> t;
  for (const auto& cs : s.checkpoints) t.push_back(static_cast<double>(cs.t));
  return t;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(4);
  os << v;
  return os.str();
}

double t_min_of(const json& c) { return c.contains("t_min") ? num(c, "t_min") : 1000.0; }

// Each evaluator fills measured/tolerance/pass/detail.
using Evaluator = void (*)(const json&, ScenarioCache&, CriterionResult&);

const Scenario& need(ScenarioCache& cache, const std::string& name) {
  const Scenario& s = cache.get(name);
  if (!s.config) throw std::runtime_error(s.error);
  return s;
}

void eval_efficiency(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& s = need(cache, str(c, "scenario"));
  const double tol = num(c, "tolerance");
  std::int64_t div = 0;
  const auto traces = take(s, reps_of(c), &div);
  const auto sum = summarize(*s.config, traces);
  const Matrix target = crlb(s.config->network, s.config->theta_star, 1);
  double worst = 0.0;
  int worst_agent = 0;
  const auto& last = sum.checkpoints.back();
  for (std::size_t n = 0; n < last.agents.size(); ++n) {
    const double rel = (last.agents[n].emp_cov - target).norm() / target.norm();
    if (rel > worst) {
      worst = rel;
      worst_agent = static_cast<int>(n);
    }
  }
  r.measured = worst;
  r.tolerance = "max_n rel. Frobenius error <= " + fmt(tol);
  r.pass = sum.replications >= 2 && div == 0 && worst <= tol;
  r.detail = "R=" + std::to_string(sum.replications) + " T=" + std::to_string(last.t) +
             " worst agent " + std::to_string(worst_agent) + ", diverged=" + std::to_string(div);
}

void eval_consistency(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& s = need(cache, str(c, "scenario"));
  const double target = num(c, "target"), tol = num(c, "tolerance");
  std::int64_t div = 0;
  const auto sum = summarize(*s.config, take(s, reps_of(c), &div));
  const auto t = times_of(sum);
  const double t_max = t.back();
  double worst_dev = -1.0, worst_slope = 0.0;
  double lo = 1e300, hi = -1e300;
  for (std::size_t n = 0; n < s.config->network.agents().size(); ++n) {
    std::vector<double> v;
    for (const auto& cs : sum.checkpoints) v.push_back(cs.agents[n].mean_err);
    const double slope = rate_fit_range(t, v, t_min_of(c), t_max).slope;
    lo = std::min(lo, slope);
    hi = std::max(hi, slope);
    if (std::abs(slope - target) > worst_dev) {
      worst_dev = std::abs(slope - target);
      worst_slope = slope;
    }
  }
  r.measured = worst_slope;
  r.tolerance = "every agent slope in " + fmt(target) + " +/- " + fmt(tol);
  r.pass = div == 0 && worst_dev <= tol;
  r.detail = "agent slopes in [" + fmt(lo) + ", " + fmt(hi) + "], R=" +
             std::to_string(sum.replications);
}

void eval_consensus(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& s = need(cache, str(c, "scenario"));
  const double threshold = num(c, "threshold");
  std::int64_t div = 0;
  const auto sum = summarize(*s.config, take(s, reps_of(c), &div));
  const auto t = times_of(sum);
  std::vector<double> v;
  for (const auto& cs : sum.checkpoints) v.push_back(cs.disagreement);
  const auto fit = rate_fit_range(t, v, t_min_of(c), t.back());
  r.measured = fit.slope;
  r.tolerance = "slope <= " + fmt(threshold);
  r.pass = div == 0 && fit.slope <= threshold;
  r.detail = "stderr " + fmt(fit.slope_stderr) + ", R=" + std::to_string(sum.replications);
}

void eval_gain(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& s = need(cache, str(c, "scenario"));
  const double tol = num(c, "tolerance");
  std::int64_t div = 0;
  const auto traces = take(s, reps_of(c), &div);
  const auto sum = summarize(*s.config, traces);
  const Matrix k_opt = optimal_gain(s.config->network, s.config->theta_star);
  const double norm = k_opt.selfadjointView<Eigen::Lower>().eigenvalues().cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (const auto& tr : traces) worst = std::max(worst, tr.checkpoints.back().gain_err);
  const auto t = times_of(sum);
  std::vector<double> v;
  for (const auto& cs : sum.checkpoints) v.push_back(cs.gain_err);
  const auto fit = rate_fit_range(t, v, t_min_of(c), t.back());
  r.measured = worst / norm;
  r.tolerance = "max error / ||N I^-1|| <= " + fmt(tol) + " and tail slope < 0";
  r.pass = div == 0 && r.measured <= tol && fit.slope < 0.0;
  r.detail = "max abs error " + fmt(worst) + ", tail slope " + fmt(fit.slope);
}

void eval_linearization(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& exact = need(cache, str(c, "scenario"));
  const Scenario& nonlin = need(cache, str(c, "nonlinear_scenario"));
  const double exact_tol = num(c, "exact_tolerance"), threshold = num(c, "threshold");
  std::int64_t div_a = 0, div_b = 0;
  const auto ta = take(exact, reps_of(c), &div_a);
  double exact_dev = 0.0;
  for (const auto& tr : ta) exact_dev = std::max(exact_dev, tr.max_lin_dev);
  const auto sum = summarize(*nonlin.config, take(nonlin, reps_of(c), &div_b));
  const auto t = times_of(sum);
  std::vector<double> v;
  for (const auto& cs : sum.checkpoints) v.push_back(cs.lin_dev);
  const auto fit = rate_fit_range(t, v, t_min_of(c), t.back());
  r.measured = fit.slope;
  r.tolerance = "affine max deviation <= " + fmt(exact_tol) + " and nonlinear slope < " +
                fmt(threshold);
  r.pass = div_a == 0 && div_b == 0 && exact_dev <= exact_tol && fit.slope < threshold;
  r.detail = "affine max deviation over all steps " + fmt(exact_dev) + ", nonlinear stderr " +
             fmt(fit.slope_stderr);
}

void eval_centralized(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& s = need(cache, str(c, "scenario"));
  const double factor = num(c, "factor");
  std::int64_t div = 0;
  const auto traces = take(s, reps_of(c), &div);
  const auto sum = summarize(*s.config, traces);
  const auto& last = sum.checkpoints.back();
  double worst = 1.0;
  for (const auto& a : last.agents) {
    const double ratio = a.mean_err / last.mle_err;
    if (std::abs(std::log(ratio)) > std::abs(std::log(worst))) worst = ratio;
  }
  r.measured = worst;
  r.tolerance = "every agent's error ratio in [1/" + fmt(factor) + ", " + fmt(factor) + "]";
  r.pass = div == 0 && std::isfinite(worst) && worst <= factor && worst >= 1.0 / factor;
  r.detail = "MLE mean error " + fmt(last.mle_err) + " at T=" + std::to_string(last.t);
}

void eval_observability(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& s = need(cache, str(c, "scenario"));
  const double threshold = num(c, "threshold");
  const auto coord = static_cast<Eigen::Index>(num(c, "coordinate"));
  const auto& cfg = *s.config;
  if (coord < 0 || coord >= cfg.theta_star.size())
    throw InputError("coordinate out of range for scenario parameter");
  std::int64_t div = 0;
  const auto traces = take(s, reps_of(c), &div);
  const auto sum = summarize(cfg, traces);
  const auto t = times_of(sum);
  std::vector<double> v(t.size(), 0.0);
  for (const auto& tr : traces)
    for (std::size_t i = 0; i < t.size(); ++i)
      for (const auto& x : tr.checkpoints[i].opt_x) v[i] += std::abs(x[coord] - cfg.theta_star[coord]);
  const auto fit = rate_fit_range(t, v, t_min_of(c), t.back());
  const auto& last = sum.checkpoints.back();
  double var = 0.0;
  for (const auto& a : last.agents) var = std::max(var, a.emp_cov(coord, coord));
  double second_moment = 0.0;
  for (const auto& a : last.agents)
    second_moment = std::max(second_moment, a.emp_cov(coord, coord) + a.bias[coord] * a.bias[coord]);
  r.measured = fit.slope;
  r.tolerance = "observability check fails and coordinate slope > " + fmt(threshold);
  r.pass = !cfg.observability.pass && fit.slope > threshold;
  r.detail = std::string("observability ") + (cfg.observability.pass ? "pass" : "fail") +
             " (lambda_min " + fmt(cfg.observability.min_eig_global_fisher) +
             "), scaled second moment at T " + fmt(second_moment) + " vs 0.5 in observed coords";
}

void eval_connectivity(const json& c, ScenarioCache& cache, CriterionResult& r) {
  const Scenario& s = need(cache, str(c, "scenario"));
  const double threshold = num(c, "threshold");
  const auto& cfg = *s.config;
  const double lambda2 = fiedler_value(mean_laplacian(cfg.graph));
  const auto edges = cfg.graph.union_edges();
  const auto groups = connected_components(cfg.network.size(), edges);
  std::int64_t div = 0;
  const auto traces = take(s, reps_of(c), &div);
  const auto sum = summarize(cfg, traces);
  const auto t = times_of(sum);
  // Largest distance between component averages.
  std::vector<double> v(t.size(), 0.0);
  for (const auto& tr : traces)
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::vector<Vector> avg;
      for (const auto& g : groups) {
        Vector a = Vector::Zero(cfg.network.param_dim());
        for (int n : g) a += tr.checkpoints[i].opt_x[static_cast<std::size_t>(n)];
        avg.push_back(a / static_cast<double>(g.size()));
      }
      double gap = 0.0;
      for (std::size_t a = 0; a < avg.size(); ++a)
        for (std::size_t b = a + 1; b < avg.size(); ++b) gap = std::max(gap, (avg[a] - avg[b]).norm());
      v[i] += gap / static_cast<double>(traces.size());
    }
  const auto fit = rate_fit_range(t, v, t_min_of(c), t.back());
  r.measured = fit.slope;
  r.tolerance = "lambda2(mean L) = 0 and between-component gap slope > " + fmt(threshold);
  r.pass = groups.size() >= 2 && lambda2 <= 1e-12 && fit.slope > threshold;
  r.detail = std::to_string(groups.size()) + " components, lambda2 " + fmt(lambda2) +
             ", final gap " + fmt(v.back());
}

void eval_unit_oracles(const json& c, ScenarioCache&, CriterionResult& r) {
  const double budget = num(c, "budget_seconds");
  const auto start = std::chrono::steady_clock::now();
  const auto failures = unit_oracle_failures();
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.measured = static_cast<double>(failures.size());
  r.tolerance = "0 failures within " + fmt(budget) + " s";
  r.pass = failures.empty() && secs <= budget;
  r.detail = "elapsed " + fmt(secs) + " s";
  for (const auto& f : failures) r.detail += "; " + f;
}

const std::map<std::string, Evaluator>& evaluators() {
  static const std::map<std::string, Evaluator> table = {
      {"efficiency", eval_efficiency},
      {"consistency_rate", eval_consistency},
      {"consensus_rate", eval_consensus},
      {"gain_learning", eval_gain},
      {"linearization", eval_linearization},
      {"centralized_comparison", eval_centralized},
      {"observability_control", eval_observability},
      {"connectivity_control", eval_connectivity},
      {"unit_oracles", eval_unit_oracles},
  };
  return table;
}

}  // namespace

bool AcceptanceReport::pass() const {
  if (results.empty()) return false;
  for (const auto& r : results)
    if (!r.pass) return false;
  return true;
}

std::string format_result(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.pass ? "[PASS] " : "[FAIL] ") << r.id << " " << r.name << " measured=" << fmt(r.measured)
     << " require " << r.tolerance;
  if (!r.detail.empty()) os << " (" << r.detail << ")";
  return os.str();
}

AcceptanceReport accept(const std::filesystem::path& suite_dir, const AcceptOptions& options) {
  if (!std::filesystem::is_directory(suite_dir))
    throw InputError(suite_dir.string() + ": suite directory does not exist");
  if (std::filesystem::is_empty(suite_dir))
    throw InputError(suite_dir.string() + ": suite directory is empty");
  const auto criteria_path = suite_dir / "criteria.json";
  std::ifstream in(criteria_path);
  if (!in) throw InputError(criteria_path.string() + ": missing criteria file");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(criteria_path.string() + ": " + e.what());
  }
  if (!doc.contains("criteria") || !doc.at("criteria").is_array() || doc.at("criteria").empty())
    throw InputError(criteria_path.string() + ": 'criteria' must be a non-empty array");

  std::map<std::string, std::string> files;
  if (doc.contains("scenarios"))
    for (const auto& [name, file] : doc.at("scenarios").items()) {
      if (!file.is_string()) throw InputError("scenarios." + name + ": expected a file name");
      files[name] = file.get<std::string>();
    }

  // Replications needed per scenario, so each is run once.
  std::map<std::string, std::int64_t> needed;
  for (const auto& c : doc.at("criteria"))
    for (const char* key : {"scenario", "nonlinear_scenario"})
      if (c.contains(key) && c.at(key).is_string()) {
        auto& n = needed[c.at(key).get<std::string>()];
        n = std::max(n, reps_of(c));
      }

  ScenarioCache cache(suite_dir, files, needed, options);
  AcceptanceReport report;
  for (const auto& c : doc.at("criteria")) {
    CriterionResult r;
    r.id = c.contains("id") ? (c.at("id").is_string() ? c.at("id").get<std::string>()
                                                      : c.at("id").dump())
                            : "?";
    r.name = c.value("name", std::string());
    const std::string kind = c.value("kind", std::string());
    const auto it = evaluators().find(kind);
    if (it == evaluators().end())
      throw InputError("criterion " + r.id + ": unknown kind '" + kind + "'");
    if (r.name.empty()) r.name = kind;
    try {
      it->second(c, cache, r);
    } catch (const std::exception& e) {
      r.pass = false;
      r.measured = std::numeric_limits<double>::quiet_NaN();
      if (r.tolerance.empty()) r.tolerance = "(not evaluated)";
      r.detail = e.what();
    }
    if (options.log) *options.log << format_result(r) << std::endl;
    report.results.push_back(std::move(r));
  }
  return report;
}

namespace {

// ---- unit oracles ----

struct Failures {
  std::vector<std::string> items;
  void check(bool ok, const std::string& what) {
    if (!ok) items.push_back(what);
  }
};

Matrix fd_jacobian(const AgentModel& model, const Parameter& theta, double h) {
  const auto m = theta.size();
  Matrix J(m, m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Parameter p = theta, q = theta;
    p[j] += h;
    q[j] -= h;
    J.col(j) = (model.mean_map(p) - model.mean_map(q)) / (2.0 * h);
  }
  return J;
}

Vector fd_gradient(const AgentModel& model, const Parameter& theta, double h) {
  const auto m = theta.size();
  Vector g(m);
  for (Eigen::Index j = 0; j < m; ++j) {
    Parameter p = theta, q = theta;
    p[j] += h;
    q[j] -= h;
    g[j] = (model.log_partition(p) - model.log_partition(q)) / (2.0 * h);
  }
  return g;
}

void family_oracles(Failures& f) {
  Rng rng(20240601);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto rand_vec = [&](int n) {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = u(rng);
    return v;
  };
  Matrix A(2, 3);
  A << 1.0, 0.5, -0.2, 0.0, 1.5, 0.7;
  Matrix S(2, 2);
  S << 2.0, 0.3, 0.3, 1.0;
  const std::vector<AgentModel> models = {AgentModel::gaussian_linear(A, S),
                                          AgentModel::poisson_log_linear(rand_vec(3)),
                                          AgentModel::bernoulli_logit(2.0 * rand_vec(3))};
  for (const auto& model : models) {
    const std::string tag(family_tag(model.kind()));
    double worst_grad = 0.0, worst_hess = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Parameter theta = rand_vec(3);
      const Vector h = model.mean_map(theta);
      worst_grad = std::max(worst_grad, (h - fd_gradient(model, theta, 1e-5)).norm() / (1.0 + h.norm()));
      const Matrix I = model.fisher(theta);
      worst_hess = std::max(worst_hess,
                            (I - fd_jacobian(model, theta, 1e-5)).norm() / (1.0 + I.norm()));
    }
    f.check(worst_grad <= 1e-6, tag + " gradient FD error " + fmt(worst_grad));
    f.check(worst_hess <= 1e-5, tag + " Hessian FD error " + fmt(worst_hess));
  }

  // Gaussian KL: 0.5 d' A' S^-1 A d, assembled without the exponential-family path.
  const SensorNetworkModel gnet({models[0]});
  const Matrix S_inv = S.inverse();
  double worst_kl = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Parameter a = rand_vec(3), b = rand_vec(3);
    const Vector mu_diff = A * (a - b);
    const double oracle = 0.5 * mu_diff.dot(S_inv * mu_diff);
    worst_kl = std::max(worst_kl, std::abs(kl_divergence(gnet, a, b) - oracle) / (1.0 + oracle));
  }
  f.check(worst_kl <= 1e-10, "Gaussian KL closed form vs oracle error " + fmt(worst_kl));
  const SensorNetworkModel scalar(
      {AgentModel::gaussian_linear(Matrix::Ones(1, 1), Matrix::Ones(1, 1))});
  f.check(std::abs(kl_divergence(scalar, Parameter::Ones(1), Parameter::Zero(1)) - 0.5) <= 1e-12,
          "scalar Gaussian KL != 0.5");
}

void spectral_oracles(Failures& f) {
  const std::vector<Edge> k2 = {{0, 1}};
  const std::vector<Edge> p3 = {{0, 1}, {1, 2}};
  const std::vector<Edge> k3 = {{0, 1}, {0, 2}, {1, 2}};
  const std::vector<Edge> two_k2 = {{0, 1}, {2, 3}};
  f.check(std::abs(fiedler_value(Laplacian::from_edges(2, k2).matrix()) - 2.0) <= 1e-12,
          "K2 Fiedler value != 2");
  const Matrix lp3 = Laplacian::from_edges(3, p3).matrix();
  f.check(std::abs(fiedler_value(lp3) - 1.0) <= 1e-12, "P3 Fiedler value != 1");
  f.check(std::abs(max_eigenvalue(lp3) - 3.0) <= 1e-12, "P3 largest eigenvalue != 3");
  f.check(fiedler_value(Laplacian::from_edges(4, two_k2).matrix()) <= 1e-12,
          "two disjoint K2 Fiedler value != 0");
  Matrix k3_oracle(3, 3);
  k3_oracle << 2, -1, -1, -1, 2, -1, -1, -1, 2;
  f.check(Laplacian::from_edges(3, k3).matrix() == k3_oracle, "K3 Laplacian mismatch");
  const RandomGraphProcess er(2, ErdosRenyi{0.5});
  Matrix er_oracle(2, 2);
  er_oracle << 0.5, -0.5, -0.5, 0.5;
  f.check((mean_laplacian(er) - er_oracle).cwiseAbs().maxCoeff() <= 1e-15,
          "ErdosRenyi(0.5) mean Laplacian mismatch");
}

void projection_oracles(Failures& f) {
  StackedState z(2);
  z << 0.0, 2.0;
  const auto split = consensus_split(z, 2);
  Vector zc(2), zp(2);
  zc << 1.0, 1.0;
  zp << -1.0, 1.0;
  f.check((split.z_c - zc).norm() <= 1e-15 && (split.z_cperp - zp).norm() <= 1e-15,
          "consensus_split N=2 example mismatch");
  Rng rng(7);
  std::normal_distribution<double> g;
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    StackedState r(4 * 3);
    for (Eigen::Index i = 0; i < r.size(); ++i) r[i] = g(rng);
    const auto s = consensus_split(r, 4);
    worst = std::max({worst, (s.z_c + s.z_cperp - r).norm(), std::abs(s.z_c.dot(s.z_cperp))});
  }
  f.check(worst <= 1e-12, "consensus_split reconstruction/orthogonality error " + fmt(worst));
}

void running_mean_oracle(Failures& f) {
  const SensorNetworkModel net({AgentModel::gaussian_linear(Matrix::Ones(1, 1), Matrix::Ones(1, 1))});
  const RandomGraphProcess proc(1, StaticGraph{});
  WeightSchedule sched;
  sched.phi0 = 1e-12;
  InitOptions init;
  init.comparator = false;
  Stepper stepper(net, proc, sched, Parameter::Zero(1));
  EstimatorState s = initial_state(net, init), next;
  StepInputs in{Laplacian::from_edges(1, {}), {Vector::Constant(1, 2.0)}};
  stepper.advance(s, in, next);
  std::swap(s, next);
  in.observations[0] = Vector::Constant(1, 4.0);
  stepper.advance(s, in, next);
  f.check(std::abs(next.agents[0].opt_x[0] - 3.0) <= 1e-9,
          "running mean after (2, 4) is " + fmt(next.agents[0].opt_x[0]) + ", expected 3");
}

}  // namespace

std::vector<std::string> unit_oracle_failures() {
  Failures f;
  family_oracles(f);
  spectral_oracles(f);
  projection_oracles(f);
  running_mean_oracle(f);
  return f.items;
}

}  // namespace ciest
