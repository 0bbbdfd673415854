#pragma once

#include <cstdint>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ciest/random.hpp"

namespace ciest {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Parameter = Eigen::VectorXd;

// Natural-parameter inner products a'theta are clamped to this range for the
// Poisson and Bernoulli families.
inline constexpr double kNaturalClamp = 30.0;

// Counts evaluations whose natural parameter hit the clamp. Owned by the
// caller, one per replication.
struct ClampCounter {
  std::uint64_t count = 0;
};

// y ~ N(A theta, Sigma), g(y) = A' Sigma^-1 y.
struct GaussianLinear {
  Matrix A;
  Matrix Sigma;
};

// Scalar y ~ Poisson(exp(a'theta)), g(y) = y a.
struct PoissonLogLinear {
  Vector a;
};

// Scalar y ~ Bernoulli(sigmoid(a'theta)), g(y) = y a.
struct BernoulliLogit {
  Vector a;
};

using FamilySpec = std::variant<GaussianLinear, PoissonLogLinear, BernoulliLogit>;

enum class FamilyKind { kGaussianLinear, kPoissonLogLinear, kBernoulliLogit };

std::string_view family_tag(FamilyKind kind);

struct FamilyTraits {
  // True when the mean map satisfies a global linear growth bound, which the
  // convergence guarantees need. Poisson does not.
  bool linear_growth;
  bool experimental;
};

FamilyTraits family_traits(FamilyKind kind);

// One agent's exponential-family observation model, with analytic
// sufficient statistic, log-partition, mean map and Fisher information.
//
// All evaluation methods are const and thread-safe. The *_into variants write
// into caller-provided storage and do not allocate once `out` has the right
// size; the estimator hot loop uses them.
class AgentModel {
 public:
  explicit AgentModel(FamilySpec spec);

  static AgentModel gaussian_linear(Matrix A, Matrix Sigma);
  static AgentModel poisson_log_linear(Vector a);
  static AgentModel bernoulli_logit(Vector a);

  FamilyKind kind() const;
  const FamilySpec& spec() const { return spec_; }
  int param_dim() const { return param_dim_; }
  int obs_dim() const { return obs_dim_; }

  Vector sufficient_stat(const Vector& y) const;
  void sufficient_stat_into(const Vector& y, Vector& out) const;

  double log_partition(const Parameter& theta, ClampCounter* clamp = nullptr) const;

  Vector mean_map(const Parameter& theta, ClampCounter* clamp = nullptr) const;
  void mean_map_into(const Parameter& theta, Vector& out,
                     ClampCounter* clamp = nullptr) const;

  Matrix fisher(const Parameter& theta, ClampCounter* clamp = nullptr) const;
  void fisher_into(const Parameter& theta, Matrix& out,
                   ClampCounter* clamp = nullptr) const;

  Vector sample(const Parameter& theta_star, Rng& rng) const;
  void sample_into(const Parameter& theta_star, Rng& rng, Vector& out) const;

 private:
  double natural_inner(const Parameter& theta, ClampCounter* clamp) const;
  void check_theta(const Parameter& theta) const;

  FamilySpec spec_;
  int param_dim_ = 0;
  int obs_dim_ = 0;
  // Gaussian caches: A' Sigma^-1, A' Sigma^-1 A, lower Cholesky factor of
  // Sigma.
  Matrix info_weight_;
  Matrix fisher_;
  Matrix sigma_chol_;
};

// The product family over all agents.
class SensorNetworkModel {
 public:
  explicit SensorNetworkModel(std::vector<AgentModel> agents);

  int size() const { return static_cast<int>(agents_.size()); }
  int param_dim() const { return param_dim_; }
  const AgentModel& agent(int n) const { return agents_[static_cast<std::size_t>(n)]; }
  const std::vector<AgentModel>& agents() const { return agents_; }

  bool all_gaussian() const;

  double log_partition(const Parameter& theta, ClampCounter* clamp = nullptr) const;
  Vector mean_map(const Parameter& theta, ClampCounter* clamp = nullptr) const;

 private:
  std::vector<AgentModel> agents_;
  int param_dim_ = 0;
};

// Sum of the local Fisher matrices.
Matrix global_fisher(const SensorNetworkModel& network, const Parameter& theta);

// KL(mu^theta || mu^theta') in closed form:
// (theta - theta')' h(theta) - psi(theta) + psi(theta').
double kl_divergence(const SensorNetworkModel& network, const Parameter& theta,
                     const Parameter& theta_prime, ClampCounter* clamp = nullptr);

struct ObservabilityReport {
  double kl_fwd = 0.0;
  double kl_bwd = 0.0;
  double min_eig_global_fisher = 0.0;
  bool pass = false;

  bool operator==(const ObservabilityReport&) const = default;
};

ObservabilityReport check_observability(const SensorNetworkModel& network,
                                        const Parameter& theta,
                                        const Parameter& theta_prime,
                                        double tol = 1e-10);

}  // namespace ciest
