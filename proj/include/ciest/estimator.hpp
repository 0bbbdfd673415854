#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "ciest/expfam.hpp"
#include "ciest/network.hpp"
#include "ciest/random.hpp"

namespace ciest {

// Decaying step sizes:
//   alpha_t = a / (t + t0 + 1)
//   beta_t  = b / (t + t0 + 1)^tau2
//   phi_t   = phi0 / (t + t0 + 1)^tau_phi
struct WeightSchedule {
  double a = 1.0;
  double b = 1.0;
  double tau2 = 0.3;
  double phi0 = 1.0;
  double tau_phi = 0.45;
  std::int64_t t0 = 0;

  // Throws InputError naming the offending constant.
  void validate() const;

  bool operator==(const WeightSchedule&) const = default;
};

struct Weights {
  double alpha;
  double beta;
  double phi;
};

Weights weights_at(const WeightSchedule& schedule, std::int64_t t);

// Smallest offset t0 with beta_0 * lambda_max(mean L) <= 1 and
// alpha_0 + beta_0 * d_max <= 1, where d_max is the largest degree of the
// union graph. The second condition keeps every per-step consensus update a
// convex combination.
std::int64_t auto_schedule_offset(const WeightSchedule& schedule, const RandomGraphProcess& proc);

struct AgentState {
  Vector aux_x;             // auxiliary estimate
  Matrix gain_G;            // gain-learning matrix
  Vector opt_x;             // optimal estimate
  std::optional<Vector> lin_v;  // linearized comparator, diagnostic only
};

struct EstimatorState {
  std::int64_t t = 0;
  std::vector<AgentState> agents;

  int size() const { return static_cast<int>(agents.size()); }
  bool has_comparator() const;
};

struct StepInputs {
  Laplacian laplacian;
  std::vector<Vector> observations;
};

enum class GainInit { kFisher, kZero };

struct InitOptions {
  // Per-agent initial estimates; empty means the zero vector.
  std::vector<Vector> aux_x;
  std::vector<Vector> opt_x;
  GainInit gain_init = GainInit::kFisher;
  bool comparator = true;
};

EstimatorState initial_state(const SensorNetworkModel& network, const InitOptions& init);

// K = (G + phi I)^-1, symmetrized. Throws SolverError when G + phi I is not
// numerically positive definite.
Matrix gain_invert(const Matrix& G, double phi);

// K_n(t) for every agent at the state's time index.
std::vector<Matrix> gains(const EstimatorState& state, const WeightSchedule& schedule);

// Each update reads only time-t quantities of `state` and returns the
// time-(t+1) value for every agent. Throws DivergenceError on non-finite
// output.
std::vector<Vector> aux_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network);

std::vector<Matrix> gain_matrix_update(const EstimatorState& state, const StepInputs& inputs,
                                       const WeightSchedule& schedule,
                                       const SensorNetworkModel& network);

std::vector<Vector> opt_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network);
std::vector<Vector> opt_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network,
                               std::span<const Matrix> gain_K);

std::vector<Vector> lin_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network, const Parameter& theta_star);
std::vector<Vector> lin_update(const EstimatorState& state, const StepInputs& inputs,
                               const WeightSchedule& schedule,
                               const SensorNetworkModel& network, const Parameter& theta_star,
                               std::span<const Matrix> gain_K);

struct StepOptions {
  // Per-step PSD check of the gain matrices and Gershgorin check of L_t.
  bool debug_checks = false;
};

// Samples one Laplacian and one observation set, then advances all
// recursions synchronously.
EstimatorState step(const EstimatorState& state, const RandomGraphProcess& proc,
                    const SensorNetworkModel& network, const WeightSchedule& schedule,
                    const Parameter& theta_star, Rng& rng, const StepOptions& options = {});

struct StepScratch;

// Allocation-free engine behind step(). Holds per-step scratch so a long
// replication reuses its buffers; one instance per thread.
class Stepper {
 public:
  Stepper(const SensorNetworkModel& network, const RandomGraphProcess& proc,
          const WeightSchedule& schedule, Parameter theta_star, StepOptions options = {});
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) = delete;

  // Draws L_t then y_n(t) for n = 0..N-1, in that order.
  void sample_inputs(Rng& rng, StepInputs& inputs) const;

  // next <- state advanced by one step using `inputs`. `next` must not alias
  // `state`.
  void advance(const EstimatorState& state, const StepInputs& inputs, EstimatorState& next);

  // Gains used by the most recent advance().
  const std::vector<Matrix>& last_gains() const { return gain_K_; }

  ClampCounter& clamp_counter() { return clamp_; }

 private:
  const SensorNetworkModel& network_;
  const RandomGraphProcess& proc_;
  WeightSchedule schedule_;
  Parameter theta_star_;
  StepOptions options_;
  ClampCounter clamp_;

  Neighborhoods neighbors_;
  std::vector<Matrix> gain_K_;
  std::vector<Vector> h_star_;
  std::vector<Matrix> fisher_star_;
  std::unique_ptr<StepScratch> scratch_;
};

}  // namespace ciest
