#pragma once

#include <cstdint>
#include <span>

#include "ciest/expfam.hpp"

namespace ciest {

// Running sum of the global sufficient statistic over pooled observations.
struct PooledStatistics {
  std::int64_t t = 0;
  Vector sum_g;

  explicit PooledStatistics(int param_dim) : sum_g(Vector::Zero(param_dim)) {}

  // Adds g(y) = sum_n g_n(y_n) for one time step.
  void add(const SensorNetworkModel& network, std::span<const Vector> observations);
};

struct MleOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;
};

// Centralized maximum-likelihood estimate: solves h(theta) = sum_g / t with
// damped Newton steps (Hessian = global Fisher). Gaussian-linear networks are
// solved in closed form. Throws SolverError on non-convergence or a singular
// Fisher matrix.
Parameter centralized_mle(const SensorNetworkModel& network, const PooledStatistics& pooled,
                          const Parameter& init, const MleOptions& options = {});

// Cramer-Rao bound t^-1 I^-1(theta*).
Matrix crlb(const SensorNetworkModel& network, const Parameter& theta_star, std::int64_t t);

}  // namespace ciest
