#include "ciest/estimator.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "ciest/errors.hpp"

namespace ciest {

struct StepScratch {
  Vector g, h, innov, acc;
  Matrix accG, fisher, work;
  Eigen::LLT<Matrix> llt;
};

namespace {

using Scratch = StepScratch;

// acc = sum over l in Omega_n of (v_n - v_l).
template <class Get, class Acc>
void neighbor_sum(int n, const Neighborhoods& nb, Get get, Acc& acc) {
  const auto& own = get(n);
  acc.setZero(own.rows(), own.cols());
  for (int l : nb[static_cast<std::size_t>(n)]) acc += get(n) - get(l);
}

void symmetrize(Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = i + 1; j < m.cols(); ++j) {
      const double v = 0.5 * (m(i, j) + m(j, i));
      m(i, j) = v;
      m(j, i) = v;
    }
}

void invert_into(const Matrix& G, double phi, Scratch& s, Matrix& K) {
  s.work = G;
  s.work.diagonal().array() += phi;
  s.llt.compute(s.work);
  if (s.llt.info() != Eigen::Success) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(s.work, Eigen::EigenvaluesOnly);
    std::ostringstream msg;
    msg << "gain inversion failed: G + phi I is not positive definite (phi=" << phi
        << ", eigenvalue range [" << eig.eigenvalues().minCoeff() << ", "
        << eig.eigenvalues().maxCoeff() << "], condition number "
        << eig.eigenvalues().cwiseAbs().maxCoeff() /
               std::max(eig.eigenvalues().cwiseAbs().minCoeff(), 1e-300)
        << ")";
    throw SolverError(msg.str());
  }
  K.setIdentity(G.rows(), G.cols());
  s.llt.solveInPlace(K);
  symmetrize(K);
}

const Vector& aux_of(const EstimatorState& s, int n) {
  return s.agents[static_cast<std::size_t>(n)].aux_x;
}
const Vector& opt_of(const EstimatorState& s, int n) {
  return s.agents[static_cast<std::size_t>(n)].opt_x;
}
const Matrix& gain_of(const EstimatorState& s, int n) {
  return s.agents[static_cast<std::size_t>(n)].gain_G;
}
const Vector& lin_of(const EstimatorState& s, int n) {
  return *s.agents[static_cast<std::size_t>(n)].lin_v;
}

// The four per-agent kernels. `g` holds g_n(y_n(t)).

void aux_kernel(int n, const EstimatorState& state, const Neighborhoods& nb, const Weights& w,
                const AgentModel& model, const Vector& g, Scratch& s, ClampCounter* clamp,
                Vector& out) {
  const Vector& x = aux_of(state, n);
  model.mean_map_into(x, s.h, clamp);
  neighbor_sum(n, nb, [&](int i) -> const Vector& { return aux_of(state, i); }, s.acc);
  out = x - w.beta * s.acc + w.alpha * (g - s.h);
}

void gain_kernel(int n, const EstimatorState& state, const Neighborhoods& nb, const Weights& w,
                 const AgentModel& model, Scratch& s, ClampCounter* clamp, Matrix& out) {
  const Matrix& G = gain_of(state, n);
  model.fisher_into(aux_of(state, n), s.fisher, clamp);
  neighbor_sum(n, nb, [&](int i) -> const Matrix& { return gain_of(state, i); }, s.accG);
  out = G - w.beta * s.accG + w.alpha * (s.fisher - G);
  symmetrize(out);
}

void opt_kernel(int n, const EstimatorState& state, const Neighborhoods& nb, const Weights& w,
                const AgentModel& model, const Vector& g, const Matrix& K, Scratch& s,
                ClampCounter* clamp, Vector& out) {
  const Vector& x = opt_of(state, n);
  model.mean_map_into(x, s.h, clamp);
  s.innov = g - s.h;
  neighbor_sum(n, nb, [&](int i) -> const Vector& { return opt_of(state, i); }, s.acc);
  out = x - w.beta * s.acc;
  out.noalias() += w.alpha * (K * s.innov);
}

void lin_kernel(int n, const EstimatorState& state, const Neighborhoods& nb, const Weights& w,
                const Vector& g, const Matrix& K, const Matrix& fisher_star,
                const Vector& h_star, const Parameter& theta_star, Scratch& s, Vector& out) {
  const Vector& v = lin_of(state, n);
  s.acc = theta_star - v;
  s.innov.noalias() = fisher_star * s.acc;
  s.innov += g - h_star;
  neighbor_sum(n, nb, [&](int i) -> const Vector& { return lin_of(state, i); }, s.acc);
  out = v - w.beta * s.acc;
  out.noalias() += w.alpha * (K * s.innov);
}

void require_finite(const Vector& v, std::int64_t t, int n, const char* what) {
  if (!v.allFinite()) throw DivergenceError(t, n, what);
}
void require_finite(const Matrix& m, std::int64_t t, int n, const char* what) {
  if (!m.allFinite()) throw DivergenceError(t, n, what);
}

void check_inputs(const EstimatorState& state, const StepInputs& inputs,
                  const SensorNetworkModel& network) {
  if (state.size() != network.size())
    throw InputError("state has " + std::to_string(state.size()) + " agents, model has " +
                     std::to_string(network.size()));
  if (inputs.laplacian.size() != network.size())
    throw InputError("Laplacian size does not match the number of agents");
  if (static_cast<int>(inputs.observations.size()) != network.size())
    throw InputError("one observation per agent is required");
}

}  // namespace

void WeightSchedule::validate() const {
  if (!(b > 0.0)) throw InputError("schedule.b: must be > 0");
  if (!(tau2 > 0.0 && tau2 < 0.5)) throw InputError("schedule.tau2: must lie in (0, 0.5)");
  if (!(phi0 > 0.0)) throw InputError("schedule.phi0: must be > 0");
  if (!(tau_phi > 0.0)) throw InputError("schedule.tau_phi: must be > 0");
  if (!(a > 0.0)) throw InputError("schedule.a: must be > 0");
  if (t0 < 0) throw InputError("schedule.t0: must be >= 0");
}

Weights weights_at(const WeightSchedule& schedule, std::int64_t t) {
  const double k = static_cast<double>(t + schedule.t0 + 1);
  return {schedule.a / k, schedule.b / std::pow(k, schedule.tau2),
          schedule.phi0 / std::pow(k, schedule.tau_phi)};
}

std::int64_t auto_schedule_offset(const WeightSchedule& schedule, const RandomGraphProcess& proc) {
  const double lambda_bar = max_eigenvalue(mean_laplacian(proc));
  const double d_max = union_laplacian(proc).max_degree();
  auto ok = [&](std::int64_t t0) {
    WeightSchedule s = schedule;
    s.t0 = t0;
    const Weights w = weights_at(s, 0);
    return w.beta * lambda_bar <= 1.0 && w.alpha + w.beta * d_max <= 1.0;
  };
  if (ok(0)) return 0;
  std::int64_t hi = 1;
  while (!ok(hi)) {
    if (hi > (std::int64_t{1} << 50)) throw InputError("schedule: no stable offset found");
    hi *= 2;
  }
  std::int64_t lo = hi / 2;  // !ok(lo)
  while (hi - lo > 1) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

bool EstimatorState::has_comparator() const {
  return !agents.empty() && agents.front().lin_v.has_value();
}

EstimatorState initial_state(const SensorNetworkModel& network, const InitOptions& init) {
  const int n_agents = network.size();
  const int m = network.param_dim();
  auto pick = [&](const std::vector<Vector>& given, int n, const char* what) {
    if (given.empty()) return Vector(Vector::Zero(m));
    if (static_cast<int>(given.size()) != n_agents)
      throw InputError(std::string("init.") + what + ": expected one vector per agent");
    const Vector& v = given[static_cast<std::size_t>(n)];
    if (v.size() != m)
      throw InputError(std::string("init.") + what + "[" + std::to_string(n) +
                       "]: wrong length");
    return v;
  };
  EstimatorState state;
  state.agents.resize(static_cast<std::size_t>(n_agents));
  for (int n = 0; n < n_agents; ++n) {
    auto& a = state.agents[static_cast<std::size_t>(n)];
    a.aux_x = pick(init.aux_x, n, "aux_x");
    a.opt_x = pick(init.opt_x, n, "opt_x");
    a.gain_G = init.gain_init == GainInit::kFisher ? network.agent(n).fisher(a.aux_x)
                                                    : Matrix(Matrix::Zero(m, m));
    if (init.comparator) a.lin_v = a.opt_x;
  }
  return state;
}

Matrix gain_invert(const Matrix& G, double phi) {
  if (G.rows() != G.cols()) throw InputError("gain matrix must be square");
  if (!(phi >= 0.0)) throw InputError("phi must be nonnegative");
  Scratch s;
  Matrix K;
  invert_into(G, phi, s, K);
  return K;
}

std::vector<Matrix> gains(const EstimatorState& state, const WeightSchedule& schedule) {
  const double phi = weights_at(schedule, state.t).phi;
  std::vector<Matrix> out;
  out.reserve(state.agents.size());
  for (const auto& a : state.agents) out.push_back(gain_invert(a.gain_G, phi));
  return out;
}

std::vector<Vector> aux_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network) {
  check_inputs(state, inputs, network);
  const Weights w = weights_at(schedule, state.t);
  const Neighborhoods nb = neighborhoods(inputs.laplacian);
  Scratch s;
  std::vector<Vector> out(state.agents.size());
  for (int n = 0; n < state.size(); ++n) {
    const AgentModel& model = network.agent(n);
    model.sufficient_stat_into(inputs.observations[static_cast<std::size_t>(n)], s.g);
    aux_kernel(n, state, nb, w, model, s.g, s, nullptr, out[static_cast<std::size_t>(n)]);
    require_finite(out[static_cast<std::size_t>(n)], state.t, n, "aux_x");
  }
  return out;
}

std::vector<Matrix> gain_matrix_update(const EstimatorState& state, const StepInputs& inputs,
                                       const WeightSchedule& schedule,
                                       const SensorNetworkModel& network) {
  check_inputs(state, inputs, network);
  const Weights w = weights_at(schedule, state.t);
  const Neighborhoods nb = neighborhoods(inputs.laplacian);
  Scratch s;
  std::vector<Matrix> out(state.agents.size());
  for (int n = 0; n < state.size(); ++n) {
    gain_kernel(n, state, nb, w, network.agent(n), s, nullptr, out[static_cast<std::size_t>(n)]);
    require_finite(out[static_cast<std::size_t>(n)], state.t, n, "gain_G");
  }
  return out;
}

std::vector<Vector> opt_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network) {
  const auto K = gains(state, schedule);
  return opt_update(state, inputs, schedule, network, K);
}

std::vector<Vector> opt_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network,
                               std::span<const Matrix> gain_K) {
  check_inputs(state, inputs, network);
  if (static_cast<int>(gain_K.size()) != state.size())
    throw InputError("one gain matrix per agent is required");
  const Weights w = weights_at(schedule, state.t);
  const Neighborhoods nb = neighborhoods(inputs.laplacian);
  Scratch s;
  std::vector<Vector> out(state.agents.size());
  for (int n = 0; n < state.size(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const AgentModel& model = network.agent(n);
    model.sufficient_stat_into(inputs.observations[i], s.g);
    opt_kernel(n, state, nb, w, model, s.g, gain_K[i], s, nullptr, out[i]);
    require_finite(out[i], state.t, n, "opt_x");
  }
  return out;
}

std::vector<Vector> lin_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network, const Parameter& theta_star) {
  const auto K = gains(state, schedule);
  return lin_update(state, inputs, schedule, network, theta_star, K);
}

std::vector<Vector> lin_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network, const Parameter& theta_star,
                               std::span<const Matrix> gain_K) {
  check_inputs(state, inputs, network);
  if (!state.has_comparator()) throw InputError("linearized comparator is not enabled");
  if (static_cast<int>(gain_K.size()) != state.size())
    throw InputError("one gain matrix per agent is required");
  const Weights w = weights_at(schedule, state.t);
  const Neighborhoods nb = neighborhoods(inputs.laplacian);
  Scratch s;
  std::vector<Vector> out(state.agents.size());
  for (int n = 0; n < state.size(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const AgentModel& model = network.agent(n);
    model.sufficient_stat_into(inputs.observations[i], s.g);
    lin_kernel(n, state, nb, w, s.g, gain_K[i], model.fisher(theta_star),
               model.mean_map(theta_star), theta_star, s, out[i]);
    require_finite(out[i], state.t, n, "lin_v");
  }
  return out;
}

EstimatorState step(const EstimatorState& state, const RandomGraphProcess& proc,
                    const SensorNetworkModel& network, const WeightSchedule& schedule,
                    const Parameter& theta_star, Rng& rng, const StepOptions& options) {
  Stepper stepper(network, proc, schedule, theta_star, options);
  StepInputs inputs;
  stepper.sample_inputs(rng, inputs);
  EstimatorState next;
  stepper.advance(state, inputs, next);
  return next;
}

Stepper::Stepper(const SensorNetworkModel& network, const RandomGraphProcess& proc,
                 const WeightSchedule& schedule, Parameter theta_star, StepOptions options)
    : network_(network),
      proc_(proc),
      schedule_(schedule),
      theta_star_(std::move(theta_star)),
      options_(options) {
  if (proc_.n_agents() != network_.size())
    throw InputError("graph process and network model disagree on the number of agents");
  if (theta_star_.size() != network_.param_dim())
    throw InputError("theta_star has the wrong length");
  for (const auto& m : network_.agents()) {
    h_star_.push_back(m.mean_map(theta_star_));
    fisher_star_.push_back(m.fisher(theta_star_));
  }
  gain_K_.resize(static_cast<std::size_t>(network_.size()));
  scratch_ = std::make_unique<StepScratch>();
}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;

void Stepper::sample_inputs(Rng& rng, StepInputs& inputs) const {
  sample_laplacian_into(proc_, rng, inputs.laplacian);
  inputs.observations.resize(static_cast<std::size_t>(network_.size()));
  for (int n = 0; n < network_.size(); ++n)
    network_.agent(n).sample_into(theta_star_, rng,
                                  inputs.observations[static_cast<std::size_t>(n)]);
}

void Stepper::advance(const EstimatorState& state, const StepInputs& inputs,
                      EstimatorState& next) {
  check_inputs(state, inputs, network_);
  const Weights w = weights_at(schedule_, state.t);
  neighborhoods_into(inputs.laplacian, neighbors_);
  const bool comparator = state.has_comparator();

  if (options_.debug_checks) {
    const double bound = 2.0 * inputs.laplacian.max_degree();
    if (max_eigenvalue(inputs.laplacian.matrix()) > bound + 1e-9)
      throw SolverError("Gershgorin bound violated by sampled Laplacian");
  }

  Scratch& s = *scratch_;
  next.t = state.t + 1;
  next.agents.resize(state.agents.size());
  for (int n = 0; n < state.size(); ++n) {
    const auto i = static_cast<std::size_t>(n);
    const AgentModel& model = network_.agent(n);
    auto& out = next.agents[i];
    invert_into(state.agents[i].gain_G, w.phi, s, gain_K_[i]);
    model.sufficient_stat_into(inputs.observations[i], s.g);

    aux_kernel(n, state, neighbors_, w, model, s.g, s, &clamp_, out.aux_x);
    require_finite(out.aux_x, state.t, n, "aux_x");
    gain_kernel(n, state, neighbors_, w, model, s, &clamp_, out.gain_G);
    require_finite(out.gain_G, state.t, n, "gain_G");
    opt_kernel(n, state, neighbors_, w, model, s.g, gain_K_[i], s, &clamp_, out.opt_x);
    require_finite(out.opt_x, state.t, n, "opt_x");
    if (comparator) {
      if (!out.lin_v) out.lin_v.emplace(network_.param_dim());
      lin_kernel(n, state, neighbors_, w, s.g, gain_K_[i], fisher_star_[i], h_star_[i],
                 theta_star_, s, *out.lin_v);
      require_finite(*out.lin_v, state.t, n, "lin_v");
    } else {
      out.lin_v.reset();
    }
  }

  if (options_.debug_checks) {
    const bool guarded = w.alpha + w.beta * inputs.laplacian.max_degree() <= 1.0;
    for (int n = 0; guarded && n < next.size(); ++n) {
      const Matrix& G = next.agents[static_cast<std::size_t>(n)].gain_G;
      Eigen::SelfAdjointEigenSolver<Matrix> eig(G, Eigen::EigenvaluesOnly);
      const double scale = std::max(1.0, G.cwiseAbs().maxCoeff());
      if (eig.eigenvalues().minCoeff() < -1e-10 * scale)
        throw SolverError("gain matrix lost positive semidefiniteness at t=" +
                          std::to_string(state.t) + " agent=" + std::to_string(n));
    }
  }
}

}  // namespace ciest
