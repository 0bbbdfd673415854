#include <doctest.h>

#include <cmath>

#include "ciest/analysis.hpp"
#include "ciest/baseline.hpp"
#include "ciest/errors.hpp"
#include "helpers.hpp"

using namespace ciest;
using testing::mat;
using testing::vec;

TEST_CASE("Gaussian MLE examples") {
  const SensorNetworkModel one({testing::scalar_gaussian()});
  PooledStatistics p(1);
  p.add(one, std::vector<Vector>{vec({2.0})});
  p.add(one, std::vector<Vector>{vec({4.0})});
  CHECK(p.t == 2);
  CHECK(centralized_mle(one, p, vec({0.0}))[0] == doctest::Approx(3.0));

  PooledStatistics z(1);
  z.add(one, std::vector<Vector>{vec({0.0})});
  CHECK(centralized_mle(one, z, vec({5.0}))[0] == 0.0);

  const auto net = testing::unit_row_network(2, 2);
  PooledStatistics q(2);
  q.add(net, std::vector<Vector>{vec({1.0}), vec({10.0})});
  q.add(net, std::vector<Vector>{vec({3.0}), vec({20.0})});
  CHECK(centralized_mle(net, q, vec({0.0, 0.0})).isApprox(vec({2.0, 15.0})));
}

TEST_CASE("non-Gaussian MLE solves the moment equation") {
  // Poisson: exp(theta) = mean y; Bernoulli: sigmoid(theta) = mean y.
  const SensorNetworkModel pois({AgentModel::poisson_log_linear(vec({1.0}))});
  PooledStatistics p(1);
  for (double y : {1.0, 4.0, 2.0, 0.0, 3.0}) p.add(pois, std::vector<Vector>{vec({y})});
  CHECK(centralized_mle(pois, p, vec({0.0}))[0] == doctest::Approx(std::log(2.0)).epsilon(1e-10));

  const SensorNetworkModel bern({AgentModel::bernoulli_logit(vec({1.0}))});
  PooledStatistics b(1);
  for (double y : {1.0, 0.0, 1.0, 1.0}) b.add(bern, std::vector<Vector>{vec({y})});
  CHECK(centralized_mle(bern, b, vec({0.0}))[0] == doctest::Approx(std::log(3.0)).epsilon(1e-10));

  // Too few Newton iterations is reported with the residual.
  try {
    centralized_mle(bern, b, vec({-3.0}), MleOptions{1, 1e-8});
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("residual") != std::string::npos);
  }
}

TEST_CASE("Newton solution is independent of the starting point") {
  const SensorNetworkModel net({AgentModel::bernoulli_logit(vec({1.0, 0.0})),
                                AgentModel::bernoulli_logit(vec({0.0, 1.0})),
                                AgentModel::poisson_log_linear(vec({0.5, 0.5}))});
  Rng rng(4);
  const Parameter theta = vec({0.3, -0.5});
  PooledStatistics pooled(2);
  for (int t = 0; t < 500; ++t) {
    std::vector<Vector> ys;
    for (const auto& a : net.agents()) ys.push_back(a.sample(theta, rng));
    pooled.add(net, ys);
  }
  const Parameter ref = centralized_mle(net, pooled, Parameter::Zero(2));
  const Vector residual = net.mean_map(ref) - pooled.sum_g / static_cast<double>(pooled.t);
  CHECK(residual.norm() <= 1e-8);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 10; ++k)
    CHECK((centralized_mle(net, pooled, vec({u(rng), u(rng)})) - ref).norm() <= 1e-6);
}

TEST_CASE("singular Fisher is reported") {
  const SensorNetworkModel blind(
      {AgentModel::gaussian_linear(mat({{1.0, 0.0}}), mat({{1.0}}))});
  PooledStatistics p(2);
  p.add(blind, std::vector<Vector>{vec({1.0})});
  CHECK_THROWS_AS(centralized_mle(blind, p, vec({0.0, 0.0})), SolverError);
  try {
    crlb(blind, vec({0.0, 0.0}), 1);
    FAIL("expected SolverError");
  } catch (const SolverError& e) {
    CHECK(std::string(e.what()).find("unobservable") != std::string::npos);
  }
}

TEST_CASE("CRLB examples") {
  const SensorNetworkModel two({testing::scalar_gaussian(), testing::scalar_gaussian()});
  CHECK(crlb(two, vec({0.0}), 100)(0, 0) == doctest::Approx(0.005));
  const auto id = AgentModel::gaussian_linear(Matrix::Identity(3, 3), Matrix::Identity(3, 3));
  CHECK(crlb(SensorNetworkModel({id}), vec({0, 0, 0}), 7).isApprox(Matrix::Identity(3, 3) / 7.0));
  const SensorNetworkModel mixed({AgentModel::bernoulli_logit(vec({1.0, 0.3})),
                                  AgentModel::poisson_log_linear(vec({-0.2, 1.0}))});
  CHECK(crlb(mixed, vec({0.1, 0.2}), 40).isApprox(crlb(mixed, vec({0.1, 0.2}), 10) / 4.0));
}

TEST_CASE("Gaussian MLE consistency rate and efficiency") {
  const auto net = testing::unit_row_network(4, 2);
  const Parameter theta = vec({1.0, -0.5});

  // Rate: mean error over 20 runs at geometric t in [1e2, 1e5].
  std::vector<double> times, errs;
  for (double t = 100; t <= 1e5; t *= 1.5) times.push_back(std::floor(t));
  std::vector<double> acc(times.size(), 0.0);
  Rng rng(21);
  for (int r = 0; r < 20; ++r) {
    PooledStatistics p(2);
    std::size_t next = 0;
    std::vector<Vector> ys(4);
    for (std::int64_t t = 1; next < times.size(); ++t) {
      for (int n = 0; n < 4; ++n) ys[static_cast<std::size_t>(n)] = net.agent(n).sample(theta, rng);
      p.add(net, ys);
      if (static_cast<double>(t) == times[next])
        acc[next++] += (centralized_mle(net, p, theta) - theta).norm() / 20.0;
    }
  }
  const auto fit = rate_fit(times, acc, 1.0);
  CHECK(fit.slope == doctest::Approx(-0.5).epsilon(0.2));

  // Efficiency: covariance of sqrt(t)(mle - theta) at t = 1e4 over 200 runs.
  CovarianceAccumulator cov(2);
  for (int r = 0; r < 200; ++r) {
    PooledStatistics p(2);
    std::vector<Vector> ys(4);
    for (int t = 0; t < 10000; ++t) {
      for (int n = 0; n < 4; ++n) ys[static_cast<std::size_t>(n)] = net.agent(n).sample(theta, rng);
      p.add(net, ys);
    }
    cov.add(100.0 * (centralized_mle(net, p, theta) - theta));
  }
  const Matrix target = crlb(net, theta, 1);
  CHECK((cov.covariance() - target).norm() / target.norm() <= 0.2);
}
