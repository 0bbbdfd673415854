#include "ciest/expfam.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ciest/errors.hpp"

namespace ciest {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + e^x) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw InputError(std::string(what) + ": non-finite entry");
}

}  // namespace

std::string_view family_tag(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kGaussianLinear:
      return "gaussian_linear";
    case FamilyKind::kPoissonLogLinear:
      return "poisson_log_linear";
    case FamilyKind::kBernoulliLogit:
      return "bernoulli_logit";
  }
  return "unknown";
}

FamilyTraits family_traits(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::kGaussianLinear:
    case FamilyKind::kBernoulliLogit:
      return {true, false};
    case FamilyKind::kPoissonLogLinear:
      return {false, true};
  }
  return {false, true};
}

AgentModel::AgentModel(FamilySpec spec) : spec_(std::move(spec)) {
  std::visit(
      Overloaded{
          [&](const GaussianLinear& g) {
            if (g.A.rows() < 1 || g.A.cols() < 1) throw InputError("GaussianLinear: A is empty");
            if (g.Sigma.rows() != g.A.rows() || g.Sigma.cols() != g.A.rows())
              throw InputError("GaussianLinear: Sigma must be " + std::to_string(g.A.rows()) +
                               "x" + std::to_string(g.A.rows()));
            if (!g.A.allFinite() || !g.Sigma.allFinite())
              throw InputError("GaussianLinear: non-finite entry");
            if (g.Sigma != g.Sigma.transpose())
              throw InputError("GaussianLinear: Sigma is not symmetric");
            Eigen::LLT<Matrix> llt(g.Sigma);
            if (llt.info() != Eigen::Success)
              throw InputError("GaussianLinear: Sigma is not positive definite");
            param_dim_ = static_cast<int>(g.A.cols());
            obs_dim_ = static_cast<int>(g.A.rows());
            sigma_chol_ = llt.matrixL();
            info_weight_ = llt.solve(g.A).transpose();
            fisher_ = info_weight_ * g.A;
            fisher_ = 0.5 * (fisher_ + fisher_.transpose()).eval();
          },
          [&](const auto& scalar_family) {
            if (scalar_family.a.size() < 1) throw InputError("family vector a is empty");
            require_finite(scalar_family.a, "a");
            param_dim_ = static_cast<int>(scalar_family.a.size());
            obs_dim_ = 1;
          },
      },
      spec_);
}

AgentModel AgentModel::gaussian_linear(Matrix A, Matrix Sigma) {
  return AgentModel(GaussianLinear{std::move(A), std::move(Sigma)});
}
AgentModel AgentModel::poisson_log_linear(Vector a) {
  return AgentModel(PoissonLogLinear{std::move(a)});
}
AgentModel AgentModel::bernoulli_logit(Vector a) {
  return AgentModel(BernoulliLogit{std::move(a)});
}

FamilyKind AgentModel::kind() const {
  return static_cast<FamilyKind>(spec_.index());
}

void AgentModel::check_theta(const Parameter& theta) const {
  if (theta.size() != param_dim_)
    throw InputError("parameter has length " + std::to_string(theta.size()) + ", expected " +
                     std::to_string(param_dim_));
}

double AgentModel::natural_inner(const Parameter& theta, ClampCounter* clamp) const {
  const Vector& a = kind() == FamilyKind::kPoissonLogLinear
                        ? std::get<PoissonLogLinear>(spec_).a
                        : std::get<BernoulliLogit>(spec_).a;
  const double eta = a.dot(theta);
  if (eta > kNaturalClamp || eta < -kNaturalClamp) {
    if (clamp != nullptr) ++clamp->count;
    return std::clamp(eta, -kNaturalClamp, kNaturalClamp);
  }
  return eta;
}

Vector AgentModel::sufficient_stat(const Vector& y) const {
  Vector out(param_dim_);
  sufficient_stat_into(y, out);
  return out;
}

void AgentModel::sufficient_stat_into(const Vector& y, Vector& out) const {
  if (y.size() != obs_dim_)
    throw InputError("observation has length " + std::to_string(y.size()) + ", expected " +
                     std::to_string(obs_dim_));
  out.resize(param_dim_);
  switch (kind()) {
    case FamilyKind::kGaussianLinear:
      out.noalias() = info_weight_ * y;
      break;
    case FamilyKind::kPoissonLogLinear:
      out = y[0] * std::get<PoissonLogLinear>(spec_).a;
      break;
    case FamilyKind::kBernoulliLogit:
      out = y[0] * std::get<BernoulliLogit>(spec_).a;
      break;
  }
}

double AgentModel::log_partition(const Parameter& theta, ClampCounter* clamp) const {
  check_theta(theta);
  switch (kind()) {
    case FamilyKind::kGaussianLinear:
      return 0.5 * theta.dot(fisher_ * theta);
    case FamilyKind::kPoissonLogLinear:
      return std::exp(natural_inner(theta, clamp));
    case FamilyKind::kBernoulliLogit:
      return softplus(natural_inner(theta, clamp));
  }
  return 0.0;
}

Vector AgentModel::mean_map(const Parameter& theta, ClampCounter* clamp) const {
  Vector out(param_dim_);
  mean_map_into(theta, out, clamp);
  return out;
}

void AgentModel::mean_map_into(const Parameter& theta, Vector& out, ClampCounter* clamp) const {
  check_theta(theta);
  out.resize(param_dim_);
  switch (kind()) {
    case FamilyKind::kGaussianLinear:
      out.noalias() = fisher_ * theta;
      break;
    case FamilyKind::kPoissonLogLinear:
      out = std::exp(natural_inner(theta, clamp)) * std::get<PoissonLogLinear>(spec_).a;
      break;
    case FamilyKind::kBernoulliLogit:
      out = sigmoid(natural_inner(theta, clamp)) * std::get<BernoulliLogit>(spec_).a;
      break;
  }
}

Matrix AgentModel::fisher(const Parameter& theta, ClampCounter* clamp) const {
  Matrix out(param_dim_, param_dim_);
  fisher_into(theta, out, clamp);
  return out;
}

void AgentModel::fisher_into(const Parameter& theta, Matrix& out, ClampCounter* clamp) const {
  check_theta(theta);
  out.resize(param_dim_, param_dim_);
  switch (kind()) {
    case FamilyKind::kGaussianLinear:
      out = fisher_;
      break;
    case FamilyKind::kPoissonLogLinear: {
      const Vector& a = std::get<PoissonLogLinear>(spec_).a;
      out.noalias() = a * a.transpose();
      out *= std::exp(natural_inner(theta, clamp));
      break;
    }
    case FamilyKind::kBernoulliLogit: {
      const Vector& a = std::get<BernoulliLogit>(spec_).a;
      const double p = sigmoid(natural_inner(theta, clamp));
      out.noalias() = a * a.transpose();  // scale after, so out is exactly symmetric
      out *= p * (1.0 - p);
      break;
    }
  }
}

Vector AgentModel::sample(const Parameter& theta_star, Rng& rng) const {
  Vector out(obs_dim_);
  sample_into(theta_star, rng, out);
  return out;
}

void AgentModel::sample_into(const Parameter& theta_star, Rng& rng, Vector& out) const {
  check_theta(theta_star);
  out.resize(obs_dim_);
  switch (kind()) {
    case FamilyKind::kGaussianLinear: {
      std::normal_distribution<double> normal;
      for (int i = 0; i < obs_dim_; ++i) out[i] = normal(rng);
      // In-place lower-triangular product, bottom row first.
      for (int i = obs_dim_ - 1; i >= 0; --i) {
        double s = 0.0;
        for (int j = 0; j <= i; ++j) s += sigma_chol_(i, j) * out[j];
        out[i] = s;
      }
      out.noalias() += std::get<GaussianLinear>(spec_).A * theta_star;
      break;
    }
    case FamilyKind::kPoissonLogLinear: {
      std::poisson_distribution<long long> poisson(std::exp(natural_inner(theta_star, nullptr)));
      out[0] = static_cast<double>(poisson(rng));
      break;
    }
    case FamilyKind::kBernoulliLogit: {
      std::bernoulli_distribution coin(sigmoid(natural_inner(theta_star, nullptr)));
      out[0] = coin(rng) ? 1.0 : 0.0;
      break;
    }
  }
}

SensorNetworkModel::SensorNetworkModel(std::vector<AgentModel> agents)
    : agents_(std::move(agents)) {
  if (agents_.empty()) throw InputError("network needs at least one agent");
  param_dim_ = agents_.front().param_dim();
  for (std::size_t n = 0; n < agents_.size(); ++n) {
    if (agents_[n].param_dim() != param_dim_)
      throw InputError("agents[" + std::to_string(n) + "]: parameter dimension " +
                       std::to_string(agents_[n].param_dim()) + " differs from " +
                       std::to_string(param_dim_));
  }
}

bool SensorNetworkModel::all_gaussian() const {
  return std::all_of(agents_.begin(), agents_.end(), [](const AgentModel& m) {
    return m.kind() == FamilyKind::kGaussianLinear;
  });
}

double SensorNetworkModel::log_partition(const Parameter& theta, ClampCounter* clamp) const {
  double psi = 0.0;
  for (const auto& m : agents_) psi += m.log_partition(theta, clamp);
  return psi;
}

Vector SensorNetworkModel::mean_map(const Parameter& theta, ClampCounter* clamp) const {
  Vector h = Vector::Zero(param_dim_);
  for (const auto& m : agents_) h += m.mean_map(theta, clamp);
  return h;
}

Matrix global_fisher(const SensorNetworkModel& network, const Parameter& theta) {
  Matrix total = Matrix::Zero(network.param_dim(), network.param_dim());
  for (const auto& m : network.agents()) total += m.fisher(theta);
  return total;
}

double kl_divergence(const SensorNetworkModel& network, const Parameter& theta,
                     const Parameter& theta_prime, ClampCounter* clamp) {
  const double kl = (theta - theta_prime).dot(network.mean_map(theta, clamp)) -
                    network.log_partition(theta, clamp) +
                    network.log_partition(theta_prime, clamp);
  // Rounding can leave a tiny negative residue near theta == theta'.
  return std::max(kl, 0.0);
}

ObservabilityReport check_observability(const SensorNetworkModel& network,
                                        const Parameter& theta,
                                        const Parameter& theta_prime, double tol) {
  if (theta.size() != network.param_dim() || theta_prime.size() != network.param_dim())
    throw InputError("observability check: parameter length mismatch");
  if (theta == theta_prime)
    throw InputError("observability check needs two distinct parameters");
  ObservabilityReport r;
  r.kl_fwd = kl_divergence(network, theta, theta_prime);
  r.kl_bwd = kl_divergence(network, theta_prime, theta);
  Eigen::SelfAdjointEigenSolver<Matrix> eig(global_fisher(network, theta),
                                            Eigen::EigenvaluesOnly);
  r.min_eig_global_fisher = eig.eigenvalues().minCoeff();
  r.pass = r.kl_fwd > tol && r.kl_bwd > tol && r.min_eig_global_fisher > tol;
  return r;
}

}  // namespace ciest
