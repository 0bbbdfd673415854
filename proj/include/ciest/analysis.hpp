#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ciest/estimator.hpp"
#include "ciest/expfam.hpp"
#include "ciest/network.hpp"

namespace ciest {

// Block stack vec(z_1, ..., z_N) of per-agent vectors, length N*M.
using StackedState = Eigen::VectorXd;

enum class StackSource { kAux, kOpt, kLin };
StackedState stack(const EstimatorState& state, StackSource source = StackSource::kOpt);

// Orthogonal decomposition onto the consensus subspace {1_N (x) a} and its
// complement.
struct ConsensusSplit {
  StackedState z_c;
  StackedState z_cperp;
  Vector z_avg;
};

ConsensusSplit consensus_split(const StackedState& z, int n_agents);

// Largest pairwise distance between agents; Frobenius norm for gains.
struct Disagreement {
  double aux = 0.0;
  double opt = 0.0;
  double gain = 0.0;
};

Disagreement disagreement(const EstimatorState& state);

// N * I^-1(theta*), the limit of every agent's gain.
Matrix optimal_gain(const SensorNetworkModel& network, const Parameter& theta_star);

// V_t = sum_n (x_n - theta*)' Kmat^-1 (x_n - theta*) over the optimal
// estimates.
double lyapunov_V(const EstimatorState& state, const Parameter& theta_star, const Matrix& Kmat);

// H_t(z) = (b_beta beta_t / alpha_t) e' (Lbar (x) Kc^-1) e + e' (h(z) - h(1 (x) theta*)),
// with e = z - 1 (x) theta*, Kc = N I^-1(theta*) and h applied blockwise.
double lyapunov_H(const StackedState& z, std::int64_t t, const WeightSchedule& schedule,
                  const RandomGraphProcess& proc, const SensorNetworkModel& network,
                  const Parameter& theta_star, double b_beta = 0.5);

struct RateFit {
  double slope = 0.0;
  double slope_stderr = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
};

// Least-squares slope of log(value) against log(t + 1) over the last
// `window` fraction of the samples. Nonpositive values are dropped; fewer
// than 10 surviving points is an InputError.
RateFit rate_fit(std::span<const double> times, std::span<const double> values, double window);

// Same fit restricted to samples with t_min <= t <= t_max.
RateFit rate_fit_range(std::span<const double> times, std::span<const double> values,
                       double t_min, double t_max);

struct CheckpointSample {
  std::int64_t t = 0;
  Vector x;
};

struct CovarianceEstimate {
  Matrix cov;   // covariance of sqrt(t+1) (x - theta*)
  Vector bias;  // mean of sqrt(t+1) (x - theta*)
  std::size_t replications = 0;
};

// Empirical covariance across replications of sqrt(t+1)(x(t) - theta*).
// With subtract_mean the empirical mean is removed and reported as `bias`;
// otherwise the raw second moment is returned.
CovarianceEstimate mc_covariance(std::span<const CheckpointSample> samples,
                                 const Parameter& theta_star, bool subtract_mean = true);

// Streaming mean / covariance with an associative merge, so partial results
// from independent replications can be combined in any grouping.
class CovarianceAccumulator {
 public:
  CovarianceAccumulator() = default;
  explicit CovarianceAccumulator(int dim);

  void add(const Vector& u);
  void merge(const CovarianceAccumulator& other);

  std::size_t count() const { return count_; }
  const Vector& mean() const { return mean_; }
  Matrix covariance(bool subtract_mean = true) const;

 private:
  std::size_t count_ = 0;
  Vector mean_;
  Matrix m2_;
};

// max_n || (G_n + phi I)^-1 - N I^-1(theta*) ||_2
double gain_error(const EstimatorState& state, const SensorNetworkModel& network,
                  const Parameter& theta_star, double phi);

// max_n || x_n - v_n ||. InputError if the comparator is disabled.
double lin_deviation(const EstimatorState& state);

}  // namespace ciest
