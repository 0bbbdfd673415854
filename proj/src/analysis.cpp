#include "ciest/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ciest/baseline.hpp"
#include "ciest/errors.hpp"

namespace ciest {

namespace {

double spectral_norm_symmetric(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

RateFit fit_log_log(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 10)
    throw InputError("rate fit needs at least 10 positive samples, got " + std::to_string(n));
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw InputError("rate fit needs distinct time points");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ssr = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - fit.intercept - fit.slope * x[i];
    ssr += r * r;
  }
  fit.slope_stderr = std::sqrt(ssr / static_cast<double>(n - 2) / sxx);
  fit.points = n;
  return fit;
}

void collect(std::span<const double> times, std::span<const double> values, std::size_t first,
             std::size_t last, std::vector<double>& x, std::vector<double>& y) {
  for (std::size_t i = first; i < last; ++i) {
    if (!(values[i] > 0.0) || !std::isfinite(values[i])) continue;
    x.push_back(std::log(times[i] + 1.0));
    y.push_back(std::log(values[i]));
  }
}

}  // namespace

StackedState stack(const EstimatorState& state, StackSource source) {
  if (state.agents.empty()) return {};
  const auto m = state.agents.front().opt_x.size();
  StackedState z(m * state.size());
  for (int n = 0; n < state.size(); ++n) {
    const auto& a = state.agents[static_cast<std::size_t>(n)];
    const Vector* v = &a.opt_x;
    if (source == StackSource::kAux) v = &a.aux_x;
    if (source == StackSource::kLin) {
      if (!a.lin_v) throw InputError("linearized comparator is not enabled");
      v = &*a.lin_v;
    }
    z.segment(n * m, m) = *v;
  }
  return z;
}

ConsensusSplit consensus_split(const StackedState& z, int n_agents) {
  if (n_agents < 1 || z.size() % n_agents != 0)
    throw InputError("stacked state length is not a multiple of the agent count");
  const auto m = z.size() / n_agents;
  ConsensusSplit out;
  out.z_avg = Vector::Zero(m);
  for (int n = 0; n < n_agents; ++n) out.z_avg += z.segment(n * m, m);
  out.z_avg /= static_cast<double>(n_agents);
  out.z_c = out.z_avg.replicate(n_agents, 1);
  out.z_cperp = z - out.z_c;
  return out;
}

Disagreement disagreement(const EstimatorState& state) {
  Disagreement d;
  const auto& agents = state.agents;
  for (std::size_t i = 0; i < agents.size(); ++i)
    for (std::size_t j = i + 1; j < agents.size(); ++j) {
      d.aux = std::max(d.aux, (agents[i].aux_x - agents[j].aux_x).norm());
      d.opt = std::max(d.opt, (agents[i].opt_x - agents[j].opt_x).norm());
      d.gain = std::max(d.gain, (agents[i].gain_G - agents[j].gain_G).norm());
    }
  return d;
}

Matrix optimal_gain(const SensorNetworkModel& network, const Parameter& theta_star) {
  // crlb(., ., 1) is I^-1 and reports the unobservable subspace if singular.
  return static_cast<double>(network.size()) * crlb(network, theta_star, 1);
}

double lyapunov_V(const EstimatorState& state, const Parameter& theta_star, const Matrix& Kmat) {
  Eigen::LLT<Matrix> llt(Kmat);
  if (llt.info() != Eigen::Success) throw SolverError("Lyapunov weight matrix is not positive definite");
  double v = 0.0;
  for (const auto& a : state.agents) {
    const Vector e = a.opt_x - theta_star;
    v += e.dot(llt.solve(e));
  }
  return v;
}

double lyapunov_H(const StackedState& z, std::int64_t t, const WeightSchedule& schedule,
                  const RandomGraphProcess& proc, const SensorNetworkModel& network,
                  const Parameter& theta_star, double b_beta) {
  const int n_agents = network.size();
  const auto m = network.param_dim();
  if (z.size() != n_agents * m) throw InputError("stacked state has the wrong length");
  const Matrix lbar = mean_laplacian(proc);
  // Kc^-1 = I(theta*) / N.
  const Matrix kc_inv = global_fisher(network, theta_star) / static_cast<double>(n_agents);
  const Weights w = weights_at(schedule, t);

  double consensus = 0.0;
  double innovation = 0.0;
  for (int n = 0; n < n_agents; ++n) {
    const Vector e_n = z.segment(n * m, m) - theta_star;
    const Vector k_e_n = kc_inv * e_n;
    for (int l = 0; l < n_agents; ++l) {
      if (lbar(n, l) == 0.0) continue;
      consensus += lbar(n, l) * (z.segment(l * m, m) - theta_star).dot(k_e_n);
    }
    const Vector z_n = z.segment(n * m, m);
    innovation += e_n.dot(network.agent(n).mean_map(z_n) - network.agent(n).mean_map(theta_star));
  }
  return b_beta * w.beta / w.alpha * consensus + innovation;
}

RateFit rate_fit(std::span<const double> times, std::span<const double> values, double window) {
  if (times.size() != values.size()) throw InputError("rate fit: length mismatch");
  if (!(window > 0.0 && window <= 1.0)) throw InputError("rate fit window must lie in (0, 1]");
  const std::size_t n = times.size();
  const auto keep = static_cast<std::size_t>(std::ceil(window * static_cast<double>(n)));
  std::vector<double> x, y;
  collect(times, values, n - std::min(keep, n), n, x, y);
  return fit_log_log(x, y);
}

RateFit rate_fit_range(std::span<const double> times, std::span<const double> values,
                       double t_min, double t_max) {
  if (times.size() != values.size()) throw InputError("rate fit: length mismatch");
  std::vector<double> x, y;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] < t_min || times[i] > t_max) continue;
    collect(times, values, i, i + 1, x, y);
  }
  return fit_log_log(x, y);
}

CovarianceEstimate mc_covariance(std::span<const CheckpointSample> samples,
                                 const Parameter& theta_star, bool subtract_mean) {
  if (samples.size() < 2) throw InputError("Monte Carlo covariance needs at least 2 replications");
  const std::int64_t t = samples.front().t;
  CovarianceAccumulator acc(static_cast<int>(theta_star.size()));
  for (const auto& s : samples) {
    if (s.t != t) throw InputError("Monte Carlo covariance: mismatched checkpoints");
    if (s.x.size() != theta_star.size()) throw InputError("Monte Carlo covariance: wrong length");
    acc.add(std::sqrt(static_cast<double>(t) + 1.0) * (s.x - theta_star));
  }
  return {acc.covariance(subtract_mean), acc.mean(), acc.count()};
}

CovarianceAccumulator::CovarianceAccumulator(int dim)
    : mean_(Vector::Zero(dim)), m2_(Matrix::Zero(dim, dim)) {}

void CovarianceAccumulator::add(const Vector& u) {
  if (count_ == 0 && mean_.size() == 0) *this = CovarianceAccumulator(static_cast<int>(u.size()));
  ++count_;
  const Vector delta = u - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_.noalias() += delta * (u - mean_).transpose();
}

void CovarianceAccumulator::merge(const CovarianceAccumulator& other) {
  if (other.count_ == 0) return;
  if (count_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(count_);
  const double nb = static_cast<double>(other.count_);
  const double n = na + nb;
  const Vector delta = other.mean_ - mean_;
  m2_ += other.m2_ + (na * nb / n) * delta * delta.transpose();
  mean_ += (nb / n) * delta;
  count_ += other.count_;
}

Matrix CovarianceAccumulator::covariance(bool subtract_mean) const {
  const auto dim = mean_.size();
  if (count_ == 0) return Matrix::Zero(dim, dim);
  Matrix c;
  if (subtract_mean) {
    c = count_ < 2 ? Matrix(Matrix::Zero(dim, dim)) : Matrix(m2_ / static_cast<double>(count_ - 1));
  } else {
    c = (m2_ + static_cast<double>(count_) * mean_ * mean_.transpose()) /
        static_cast<double>(count_);
  }
  return 0.5 * (c + c.transpose());
}

double gain_error(const EstimatorState& state, const SensorNetworkModel& network,
                  const Parameter& theta_star, double phi) {
  const Matrix target = optimal_gain(network, theta_star);
  double worst = 0.0;
  for (const auto& a : state.agents)
    worst = std::max(worst, spectral_norm_symmetric(gain_invert(a.gain_G, phi) - target));
  return worst;
}

double lin_deviation(const EstimatorState& state) {
  if (!state.has_comparator()) throw InputError("linearized comparator is not enabled");
  double worst = 0.0;
  for (const auto& a : state.agents) worst = std::max(worst, (a.opt_x - *a.lin_v).norm());
  return worst;
}

}  // namespace ciest
