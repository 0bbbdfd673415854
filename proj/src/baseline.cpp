#include "ciest/baseline.hpp"

#include <sstream>
#include <string>

#include "ciest/errors.hpp"

namespace ciest {

namespace {

// Tolerance on Fisher eigenvalues, relative to the largest one.
constexpr double kSingularRelTol = 1e-12;

std::string null_space_description(const Matrix& fisher) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(fisher);
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  std::ostringstream out;
  out << "unobservable directions:";
  Eigen::IOFormat fmt(6, Eigen::DontAlignCols, ", ", ", ", "", "", "[", "]");
  for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
    if (eig.eigenvalues()[i] <= kSingularRelTol * top)
      out << ' ' << eig.eigenvectors().col(i).transpose().format(fmt);
  return out.str();
}

bool is_singular(const Matrix& fisher) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(fisher, Eigen::EigenvaluesOnly);
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  return eig.eigenvalues().minCoeff() <= kSingularRelTol * top;
}

}  // namespace

void PooledStatistics::add(const SensorNetworkModel& network,
                           std::span<const Vector> observations) {
  if (static_cast<int>(observations.size()) != network.size())
    throw InputError("pooled statistics: one observation per agent is required");
  for (int n = 0; n < network.size(); ++n)
    sum_g += network.agent(n).sufficient_stat(observations[static_cast<std::size_t>(n)]);
  ++t;
}

Parameter centralized_mle(const SensorNetworkModel& network, const PooledStatistics& pooled,
                          const Parameter& init, const MleOptions& options) {
  if (pooled.t < 1) throw InputError("centralized MLE needs at least one observation");
  if (init.size() != network.param_dim()) throw InputError("MLE init has the wrong length");
  const Vector target = pooled.sum_g / static_cast<double>(pooled.t);

  if (network.all_gaussian()) {
    const Matrix fisher = global_fisher(network, init);
    if (is_singular(fisher))
      throw SolverError("global Fisher matrix is singular; " + null_space_description(fisher));
    return fisher.llt().solve(target);
  }

  Parameter theta = init;
  Vector residual = network.mean_map(theta) - target;
  double norm = residual.norm();
  for (int it = 0; it < options.max_iterations; ++it) {
    if (norm <= options.tolerance) return theta;
    const Matrix fisher = global_fisher(network, theta);
    Eigen::LLT<Matrix> llt(fisher);
    if (llt.info() != Eigen::Success || is_singular(fisher))
      throw SolverError("Fisher matrix singular during Newton iteration; " +
                        null_space_description(fisher));
    const Vector direction = llt.solve(residual);
    double step = 1.0;
    bool improved = false;
    while (step > 1e-12) {
      Parameter candidate = theta - step * direction;
      Vector r = network.mean_map(candidate) - target;
      if (r.norm() < norm) {
        theta = std::move(candidate);
        residual = std::move(r);
        norm = residual.norm();
        improved = true;
        break;
      }
      step *= 0.5;
    }
    if (!improved) break;
  }
  if (norm <= options.tolerance) return theta;
  std::ostringstream msg;
  msg << "centralized MLE did not converge: residual " << norm << " after "
      << options.max_iterations << " iterations";
  throw SolverError(msg.str());
}

Matrix crlb(const SensorNetworkModel& network, const Parameter& theta_star, std::int64_t t) {
  if (t < 1) throw InputError("CRLB needs t >= 1");
  const Matrix fisher = global_fisher(network, theta_star);
  if (is_singular(fisher))
    throw SolverError("global Fisher matrix is singular; " + null_space_description(fisher));
  Matrix inv = fisher.llt().solve(Matrix::Identity(fisher.rows(), fisher.cols()));
  inv = 0.5 * (inv + inv.transpose()).eval();
  return inv / static_cast<double>(t);
}

}  // namespace ciest
