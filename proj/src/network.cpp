#include "ciest/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <type_traits>

#include "ciest/errors.hpp"

namespace ciest {

namespace {

void validate_edges(int n_agents, std::span<const Edge> edges) {
  std::set<Edge> seen;
  for (const auto& [i, j] : edges) {
    if (i < 0 || j < 0 || i >= n_agents || j >= n_agents)
      throw InputError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                       ") out of range for " + std::to_string(n_agents) + " agents");
    if (i == j) throw InputError("self-loop at agent " + std::to_string(i));
    if (!seen.insert({std::min(i, j), std::max(i, j)}).second)
      throw InputError("duplicate edge (" + std::to_string(i) + "," + std::to_string(j) + ")");
  }
}

void validate_probability(double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("edge probability must lie in [0,1]");
}

void require_symmetric(const Eigen::MatrixXd& L) {
  if (L.rows() != L.cols()) throw InputError("Laplacian must be square");
  if (!L.allFinite()) throw InputError("Laplacian has non-finite entries");
  const double scale = std::max(1.0, L.cwiseAbs().maxCoeff());
  if ((L - L.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InputError("Laplacian-like matrix is not symmetric");
}

Eigen::VectorXd sorted_eigenvalues(const Eigen::MatrixXd& L) {
  require_symmetric(L);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(L, Eigen::EigenvaluesOnly);
  return eig.eigenvalues();  // ascending
}

}  // namespace

Laplacian::Laplacian(int n_agents) : matrix_(Eigen::MatrixXd::Zero(n_agents, n_agents)) {}

Laplacian Laplacian::from_edges(int n_agents, std::span<const Edge> edges) {
  if (n_agents < 1) throw InputError("graph needs at least one agent");
  validate_edges(n_agents, edges);
  Laplacian L(n_agents);
  for (const auto& [i, j] : edges) L.add_edge(i, j);
  return L;
}

Laplacian Laplacian::from_matrix(Eigen::MatrixXd matrix) {
  if (matrix.rows() != matrix.cols() || matrix.rows() < 1)
    throw InputError("Laplacian must be a non-empty square matrix");
  const auto n = matrix.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    double degree = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double v = matrix(i, j);
      if (v != 0.0 && v != -1.0) throw InputError("Laplacian off-diagonal must be 0 or -1");
      if (v != matrix(j, i)) throw InputError("Laplacian is not symmetric");
      degree -= v;
    }
    if (matrix(i, i) != degree) throw InputError("Laplacian diagonal must equal degree");
  }
  Laplacian L;
  L.matrix_ = std::move(matrix);
  return L;
}

int Laplacian::max_degree() const {
  return matrix_.size() == 0 ? 0 : static_cast<int>(matrix_.diagonal().maxCoeff());
}

void Laplacian::add_edge(int i, int j) {
  matrix_(i, j) = -1.0;
  matrix_(j, i) = -1.0;
  matrix_(i, i) += 1.0;
  matrix_(j, j) += 1.0;
}

RandomGraphProcess::RandomGraphProcess(int n_agents, GraphMode mode)
    : n_agents_(n_agents), mode_(std::move(mode)) {
  if (n_agents_ < 1) throw InputError("graph needs at least one agent");
  if (const auto* er = std::get_if<ErdosRenyi>(&mode_)) {
    validate_probability(er->p);
  } else if (const auto* es = std::get_if<EdgeSubsample>(&mode_)) {
    validate_probability(es->p);
    validate_edges(n_agents_, es->base_edges);
  } else {
    validate_edges(n_agents_, std::get<StaticGraph>(mode_).edges);
  }
}

std::vector<Edge> RandomGraphProcess::union_edges() const {
  if (const auto* er = std::get_if<ErdosRenyi>(&mode_)) {
    std::vector<Edge> all;
    if (er->p <= 0.0) return all;
    for (int i = 0; i < n_agents_; ++i)
      for (int j = i + 1; j < n_agents_; ++j) all.emplace_back(i, j);
    return all;
  }
  if (const auto* es = std::get_if<EdgeSubsample>(&mode_))
    return es->p > 0.0 ? es->base_edges : std::vector<Edge>{};
  return std::get<StaticGraph>(mode_).edges;
}

double RandomGraphProcess::edge_probability() const {
  if (const auto* er = std::get_if<ErdosRenyi>(&mode_)) return er->p;
  if (const auto* es = std::get_if<EdgeSubsample>(&mode_)) return es->p;
  return 1.0;
}

Laplacian sample_laplacian(const RandomGraphProcess& proc, Rng& rng) {
  Laplacian L(proc.n_agents());
  sample_laplacian_into(proc, rng, L);
  return L;
}

void sample_laplacian_into(const RandomGraphProcess& proc, Rng& rng, Laplacian& out) {
  if (out.size() != proc.n_agents()) out = Laplacian(proc.n_agents());
  out.clear();
  const int n = proc.n_agents();
  std::visit(
      [&](const auto& mode) {
        using T = std::decay_t<decltype(mode)>;
        if constexpr (std::is_same_v<T, ErdosRenyi>) {
          std::bernoulli_distribution coin(mode.p);
          for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
              if (coin(rng)) out.add_edge(i, j);
        } else if constexpr (std::is_same_v<T, EdgeSubsample>) {
          std::bernoulli_distribution coin(mode.p);
          for (const auto& [i, j] : mode.base_edges)
            if (coin(rng)) out.add_edge(i, j);
        } else {
          for (const auto& [i, j] : mode.edges) out.add_edge(i, j);
        }
      },
      proc.mode());
}

Eigen::MatrixXd mean_laplacian(const RandomGraphProcess& proc) {
  const auto edges = proc.union_edges();
  return proc.edge_probability() * Laplacian::from_edges(proc.n_agents(), edges).matrix();
}

Laplacian union_laplacian(const RandomGraphProcess& proc) {
  const auto edges = proc.union_edges();
  return Laplacian::from_edges(proc.n_agents(), edges);
}

double fiedler_value(const Eigen::MatrixXd& L) {
  const Eigen::VectorXd ev = sorted_eigenvalues(L);
  if (ev.size() < 2) return 0.0;
  return std::max(ev[1], 0.0);
}

double max_eigenvalue(const Eigen::MatrixXd& L) {
  return sorted_eigenvalues(L).maxCoeff();
}

Neighborhoods neighborhoods(const Laplacian& L) {
  Neighborhoods out;
  neighborhoods_into(L, out);
  return out;
}

void neighborhoods_into(const Laplacian& L, Neighborhoods& out) {
  const int n = L.size();
  out.resize(static_cast<std::size_t>(n));
  const auto& m = L.matrix();
  for (int i = 0; i < n; ++i) {
    auto& omega = out[static_cast<std::size_t>(i)];
    omega.clear();
    for (int j = 0; j < n; ++j)
      if (j != i && m(i, j) == -1.0) omega.push_back(j);
  }
}

std::vector<std::vector<int>> connected_components(int n_agents, std::span<const Edge> edges) {
  std::vector<int> parent(static_cast<std::size_t>(n_agents));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      auto& p = parent[static_cast<std::size_t>(x)];
      p = parent[static_cast<std::size_t>(p)];
      x = p;
    }
    return x;
  };
  for (const auto& [i, j] : edges) parent[static_cast<std::size_t>(find(i))] = find(j);
  std::vector<std::vector<int>> groups;
  std::vector<int> slot(static_cast<std::size_t>(n_agents), -1);
  for (int v = 0; v < n_agents; ++v) {
    const int root = find(v);
    auto& s = slot[static_cast<std::size_t>(root)];
    if (s < 0) {
      s = static_cast<int>(groups.size());
      groups.emplace_back();
    }
    groups[static_cast<std::size_t>(s)].push_back(v);
  }
  return groups;
}

}  // namespace ciest
