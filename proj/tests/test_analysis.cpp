#include <doctest.h>

#include <cmath>

#include "ciest/analysis.hpp"
#include "ciest/baseline.hpp"
#include "ciest/errors.hpp"
#include "helpers.hpp"

using namespace ciest;
using testing::mat;
using testing::vec;

namespace {

EstimatorState scalar_state(std::vector<double> xs, double g = 1.0) {
  EstimatorState s;
  for (double x : xs) {
    AgentState a;
    a.aux_x = vec({x});
    a.opt_x = vec({x});
    a.gain_G = mat({{g}});
    s.agents.push_back(a);
  }
  return s;
}

StackedState random_stack(Rng& rng, int n) {
  std::normal_distribution<double> z;
  StackedState s(n);
  for (int i = 0; i < n; ++i) s[i] = z(rng);
  return s;
}

}  // namespace

TEST_CASE("consensus split examples") {
  const auto on = consensus_split(vec({1.0, 2.0, 1.0, 2.0, 1.0, 2.0}), 3);
  CHECK(on.z_cperp.isZero());
  CHECK(on.z_avg.isApprox(vec({1.0, 2.0})));

  const auto two = consensus_split(vec({0.0, 2.0}), 2);
  CHECK(two.z_c.isApprox(vec({1.0, 1.0})));
  CHECK(two.z_cperp.isApprox(vec({-1.0, 1.0})));

  const auto again = consensus_split(two.z_c, 2);
  CHECK(again.z_c.isApprox(two.z_c));
  CHECK(again.z_cperp.norm() <= 1e-15);
}

TEST_CASE("consensus split: reconstruction and orthogonality") {
  Rng rng(31);
  for (int k = 0; k < 100; ++k) {
    const StackedState z = random_stack(rng, 12);
    const auto s = consensus_split(z, 4);
    CHECK((s.z_c + s.z_cperp - z).norm() <= 1e-12);
    CHECK(std::abs(s.z_c.dot(s.z_cperp)) <= 1e-12);
  }
}

TEST_CASE("disagreement examples") {
  CHECK(disagreement(scalar_state({1.0, 1.0, 1.0})).opt == 0.0);
  CHECK(disagreement(scalar_state({0.0, 3.0})).opt == 3.0);
  const auto d = disagreement(scalar_state({0.0, 1.0, 5.0}));
  CHECK(d.opt == 5.0);
  CHECK(d.aux == 5.0);
  CHECK(d.gain == 0.0);
}

TEST_CASE("lyapunov V examples") {
  CHECK(lyapunov_V(scalar_state({0.7, 0.7}), vec({0.7}), mat({{1.0}})) == 0.0);
  CHECK(lyapunov_V(scalar_state({3.0}), vec({1.0}), mat({{4.0}})) == doctest::Approx(1.0));
  CHECK(lyapunov_V(scalar_state({1.0, -1.0, 2.0}), vec({0.0}), mat({{1.0}})) ==
        doctest::Approx(6.0));
  CHECK_THROWS(lyapunov_V(scalar_state({1.0}), vec({0.0}), mat({{0.0}})));
}

TEST_CASE("lyapunov H") {
  // Agents y = a_n theta + noise with a = (1, 2): I_n = a_n^2, I = 5, Kc = 2/5.
  const SensorNetworkModel net({AgentModel::gaussian_linear(mat({{1.0}}), mat({{1.0}})),
                                AgentModel::gaussian_linear(mat({{2.0}}), mat({{1.0}}))});
  const RandomGraphProcess k2(2, ErdosRenyi{1.0});
  const WeightSchedule sched{1.0, 1.0, 0.3, 1.0, 0.45, 3};
  const Parameter theta = vec({0.5});

  CHECK(lyapunov_H(vec({0.5, 0.5}), 10, sched, k2, net, theta) == doctest::Approx(0.0));

  // Consensus: first term vanishes, second is sum_n I_n (a - theta)^2.
  CHECK(lyapunov_H(vec({1.5, 1.5}), 10, sched, k2, net, theta) == doctest::Approx(5.0));

  Rng rng(32);
  for (int k = 0; k < 20; ++k) {
    const StackedState z = random_stack(rng, 2);
    const std::int64_t t = 7 * k;
    const Weights w = weights_at(sched, t);
    const double e0 = z[0] - 0.5, e1 = z[1] - 0.5;
    const double oracle = 0.5 * w.beta / w.alpha * 2.5 * (e0 - e1) * (e0 - e1) + e0 * e0 + 4 * e1 * e1;
    CHECK(lyapunov_H(z, t, sched, k2, net, theta) == doctest::Approx(oracle).epsilon(1e-12));
  }
}

TEST_CASE("lyapunov H is positive on an annulus") {
  const SensorNetworkModel net({AgentModel::bernoulli_logit(vec({1.0, 0.0})),
                                AgentModel::gaussian_linear(mat({{0.0, 1.0}}), mat({{1.0}})),
                                AgentModel::bernoulli_logit(vec({0.5, 0.5})),
                                AgentModel::poisson_log_linear(vec({0.0, 0.3}))});
  const RandomGraphProcess proc(4, EdgeSubsample{{{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 0.5});
  WeightSchedule sched;
  sched.t0 = auto_schedule_offset(sched, proc);
  const Parameter theta = vec({0.3, -0.2});
  const StackedState star = vec({0.3, -0.2, 0.3, -0.2, 0.3, -0.2, 0.3, -0.2});
  Rng rng(33);
  std::uniform_real_distribution<double> radius(0.1, 10.0);
  double c = INFINITY;
  for (int k = 0; k < 1000; ++k) {
    StackedState dir = random_stack(rng, 8);
    const StackedState e = radius(rng) * dir / dir.norm();
    c = std::min(c, lyapunov_H(star + e, 10000, sched, proc, net, theta) / e.squaredNorm());
  }
  INFO("c = " << c);
  CHECK(c > 0.0);
}

TEST_CASE("rate fit") {
  std::vector<double> t, v;
  for (int i = 0; i < 60; ++i) t.push_back(std::floor(std::pow(1.2, i)));
  for (double x : t) v.push_back(std::pow(x + 1, -0.5));
  CHECK(rate_fit(t, v, 1.0).slope == doctest::Approx(-0.5).epsilon(1e-10));

  std::vector<double> flat(t.size(), 2.0);
  CHECK(std::abs(rate_fit(t, flat, 0.5).slope) <= 1e-12);

  Rng rng(34);
  std::normal_distribution<double> noise(0.0, 0.01);
  std::vector<double> noisy;
  for (double x : t) noisy.push_back(3.0 * std::pow(x + 1, -0.8) * (1.0 + noise(rng)));
  CHECK(std::abs(rate_fit(t, noisy, 1.0).slope + 0.8) <= 0.02);

  const std::vector<double> few_t(t.begin(), t.begin() + 9), few_v(v.begin(), v.begin() + 9);
  CHECK_THROWS_AS(rate_fit(few_t, few_v, 1.0), InputError);
  std::vector<double> neg = v;
  for (std::size_t i = 0; i + 5 < neg.size(); ++i) neg[i] = -1.0;
  CHECK_THROWS_AS(rate_fit(t, neg, 1.0), InputError);
}

TEST_CASE("mc_covariance") {
  std::vector<CheckpointSample> same(5, CheckpointSample{99, vec({1.1, 0.0})});
  const auto est = mc_covariance(same, vec({1.0, 0.0}));
  CHECK(est.cov.isZero(1e-12));
  CHECK(est.bias.isApprox(vec({1.0, 0.0})));
  CHECK(est.replications == 5);

  // Synthetic N(0, C / (t+1)) draws.
  const Matrix C = mat({{2.0, 0.6}, {0.6, 1.0}});
  const Matrix L = C.llt().matrixL();
  Rng rng(35);
  std::normal_distribution<double> z;
  const int R = 4000;
  const std::int64_t t = 399;
  std::vector<CheckpointSample> draws;
  for (int r = 0; r < R; ++r)
    draws.push_back({t, L * vec({z(rng), z(rng)}) / std::sqrt(static_cast<double>(t + 1))});
  const Matrix got = mc_covariance(draws, vec({0.0, 0.0})).cov;
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      const double se = std::sqrt((C(i, j) * C(i, j) + C(i, i) * C(j, j)) / R);
      CHECK(std::abs(got(i, j) - C(i, j)) <= 3 * se);
    }
  CHECK(got == got.transpose());
  CHECK(Eigen::SelfAdjointEigenSolver<Matrix>(got).eigenvalues().minCoeff() >= 0.0);

  draws[3].t = 400;
  CHECK_THROWS_AS(mc_covariance(draws, vec({0.0, 0.0})), InputError);
  CHECK_THROWS(mc_covariance(std::vector<CheckpointSample>{same[0]}, vec({1.0, 0.0})));
}

TEST_CASE("running-mean asymptotic covariance") {
  // One scalar Gaussian agent with a negligible regularizer reduces to the
  // sample mean, whose scaled variance is I^-1 = 1.
  const SensorNetworkModel one({testing::scalar_gaussian()});
  const RandomGraphProcess proc(1, StaticGraph{});
  WeightSchedule s{1.0, 1.0, 0.3, 1e-12, 0.45, 0};
  Stepper stepper(one, proc, s, vec({0.0}));
  InitOptions init;
  init.comparator = false;
  Rng rng(36);
  std::vector<CheckpointSample> finals;
  StepInputs in;
  for (int r = 0; r < 500; ++r) {
    EstimatorState st = initial_state(one, init), next = st;
    for (int t = 0; t < 10000; ++t) {
      stepper.sample_inputs(rng, in);
      stepper.advance(st, in, next);
      std::swap(st, next);
    }
    finals.push_back({st.t, st.agents[0].opt_x});
  }
  const auto est = mc_covariance(finals, vec({0.0}));
  CHECK(est.cov(0, 0) == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("covariance accumulator merge is order independent") {
  Rng rng(37);
  std::normal_distribution<double> z;
  CovarianceAccumulator all(3), a(3), b(3), c(3);
  for (int i = 0; i < 300; ++i) {
    const Vector u = vec({z(rng), 2 * z(rng) + 1, z(rng) - 3});
    all.add(u);
    (i < 50 ? a : i < 170 ? b : c).add(u);
  }
  CovarianceAccumulator left = a, right = b;
  left.merge(b);
  left.merge(c);
  right.merge(c);
  right.merge(a);
  CHECK(left.count() == 300);
  CHECK((left.covariance() - all.covariance()).norm() <= 1e-9);
  CHECK((right.covariance() - all.covariance()).norm() <= 1e-9);
  CHECK((right.mean() - all.mean()).norm() <= 1e-9);
  CovarianceAccumulator empty(3);
  empty.merge(all);
  CHECK((empty.covariance() - all.covariance()).norm() <= 1e-12);
}

TEST_CASE("optimal gain and gain error") {
  const SensorNetworkModel two({testing::scalar_gaussian(), testing::scalar_gaussian()});
  CHECK(optimal_gain(two, vec({0.0}))(0, 0) == doctest::Approx(1.0));
  // G_n = I / N = 1 gives K = 1 = N I^-1.
  CHECK(gain_error(scalar_state({0.0, 0.0}, 1.0), two, vec({0.0}), 0.0) == doctest::Approx(0.0));

  const SensorNetworkModel wide({AgentModel::gaussian_linear(mat({{std::sqrt(2.0)}}), mat({{1.0}})),
                                 AgentModel::gaussian_linear(Matrix::Zero(1, 1), mat({{1.0}}))});
  // I = 2, N = 2, G = 0.5: |1/0.5 - 2/2| = 1.
  CHECK(gain_error(scalar_state({0.0, 0.0}, 0.5), wide, vec({0.0}), 0.0) == doctest::Approx(1.0));

  EstimatorState s = scalar_state({0.0, 1.0, 2.0});
  s.agents[0].gain_G = mat({{0.3}});
  s.agents[2].gain_G = mat({{4.0}});
  EstimatorState p = s;
  std::swap(p.agents[0], p.agents[2]);
  const SensorNetworkModel three(
      {testing::scalar_gaussian(), testing::scalar_gaussian(), testing::scalar_gaussian()});
  CHECK(gain_error(s, three, vec({0.0}), 0.1) == gain_error(p, three, vec({0.0}), 0.1));
}

TEST_CASE("linearization deviation") {
  EstimatorState s = scalar_state({1.5});
  s.agents[0].lin_v = vec({1.2});
  CHECK(lin_deviation(s) == doctest::Approx(0.3));
  s.agents[0].lin_v = vec({1.5});
  CHECK(lin_deviation(s) == 0.0);
  CHECK_THROWS_AS(lin_deviation(scalar_state({1.0})), InputError);
}

TEST_CASE("V decreases in mean after the transient") {
  const auto net = testing::unit_row_network(4, 2);
  const RandomGraphProcess proc(4, EdgeSubsample{{{0, 1}, {1, 2}, {2, 3}, {3, 0}}, 0.5});
  WeightSchedule sched;
  sched.t0 = auto_schedule_offset(sched, proc);
  const Parameter theta = vec({1.0, -1.0});
  const Matrix K = optimal_gain(net, theta);
  Stepper stepper(net, proc, sched, theta);
  InitOptions init;
  init.comparator = false;
  const std::vector<std::int64_t> marks{250, 500, 1000, 2000};
  std::vector<double> meanV(marks.size(), 0.0);
  Rng rng(38);
  StepInputs in;
  const int R = 100;
  for (int r = 0; r < R; ++r) {
    EstimatorState st = initial_state(net, init), next = st;
    std::size_t m = 0;
    while (m < marks.size()) {
      stepper.sample_inputs(rng, in);
      stepper.advance(st, in, next);
      std::swap(st, next);
      if (st.t == marks[m]) meanV[m++] += lyapunov_V(st, theta, K) / R;
    }
  }
  for (std::size_t m = 1; m < marks.size(); ++m) {
    INFO("t = " << marks[m]);
    CHECK(meanV[m] - meanV[m - 1] <= 0.0);
  }
}
