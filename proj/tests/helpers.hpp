#pragma once

#include <initializer_list>
#include <vector>

#include "ciest/expfam.hpp"

namespace testing {

using ciest::Matrix;
using ciest::Vector;

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = static_cast<Eigen::Index>(rows.begin()->size());
  Matrix m(r, c);
  Eigen::Index i = 0;
  for (const auto& row : rows) {
    Eigen::Index j = 0;
    for (double x : row) m(i, j++) = x;
    ++i;
  }
  return m;
}

inline ciest::AgentModel scalar_gaussian() {
  return ciest::AgentModel::gaussian_linear(Matrix::Ones(1, 1), Matrix::Ones(1, 1));
}

inline Matrix unit_row(int m, int k) {
  Matrix a = Matrix::Zero(1, m);
  a(0, k) = 1.0;
  return a;
}

// N agents, agent n observes coordinate n mod M with unit noise.
inline ciest::SensorNetworkModel unit_row_network(int n_agents, int m) {
  std::vector<ciest::AgentModel> agents;
  for (int n = 0; n < n_agents; ++n)
    agents.push_back(ciest::AgentModel::gaussian_linear(unit_row(m, n % m), Matrix::Ones(1, 1)));
  return ciest::SensorNetworkModel(std::move(agents));
}

}  // namespace testing
