#pragma once

#include <span>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "ciest/random.hpp"

namespace ciest {

using Edge = std::pair<int, int>;
using Neighborhoods = std::vector<std::vector<int>>;

// Graph Laplacian L = D - A of a simple undirected graph.
class Laplacian {
 public:
  Laplacian() = default;
  explicit Laplacian(int n_agents);

  static Laplacian from_edges(int n_agents, std::span<const Edge> edges);
  // Validates the Laplacian invariants (symmetric, off-diagonals in {0,-1},
  // diagonal equal to degree).
  static Laplacian from_matrix(Eigen::MatrixXd matrix);

  int size() const { return static_cast<int>(matrix_.rows()); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  int degree(int n) const { return static_cast<int>(matrix_(n, n)); }
  int max_degree() const;

  void clear() { matrix_.setZero(); }
  void add_edge(int i, int j);

 private:
  Eigen::MatrixXd matrix_;
};

struct ErdosRenyi {
  double p = 0.5;
};

struct EdgeSubsample {
  std::vector<Edge> base_edges;
  double p = 0.5;
};

struct StaticGraph {
  std::vector<Edge> edges;
};

using GraphMode = std::variant<ErdosRenyi, EdgeSubsample, StaticGraph>;

// Generator of the i.i.d. Laplacian sequence {L_t}.
class RandomGraphProcess {
 public:
  RandomGraphProcess(int n_agents, GraphMode mode);

  int n_agents() const { return n_agents_; }
  const GraphMode& mode() const { return mode_; }

  // Every edge with positive activation probability.
  std::vector<Edge> union_edges() const;
  double edge_probability() const;

 private:
  int n_agents_;
  GraphMode mode_;
};

Laplacian sample_laplacian(const RandomGraphProcess& proc, Rng& rng);
void sample_laplacian_into(const RandomGraphProcess& proc, Rng& rng, Laplacian& out);

// E[L_t] in closed form.
Eigen::MatrixXd mean_laplacian(const RandomGraphProcess& proc);

// Laplacian of the union graph (every possible edge active).
Laplacian union_laplacian(const RandomGraphProcess& proc);

// Second-smallest eigenvalue (algebraic connectivity).
double fiedler_value(const Eigen::MatrixXd& L);
double max_eigenvalue(const Eigen::MatrixXd& L);

Neighborhoods neighborhoods(const Laplacian& L);
void neighborhoods_into(const Laplacian& L, Neighborhoods& out);

// Connected components of the union graph, each sorted ascending.
std::vector<std::vector<int>> connected_components(int n_agents, std::span<const Edge> edges);

}  // namespace ciest
