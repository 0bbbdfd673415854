#include <doctest.h>

#include "ciest/errors.hpp"
#include "ciest/network.hpp"
#include "helpers.hpp"

using namespace ciest;
using testing::mat;

namespace {

std::vector<Edge> ring(int n) {
  std::vector<Edge> e;
  for (int i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
  return e;
}

void require_laplacian(const Laplacian& L) {
  const auto& m = L.matrix();
  CHECK(m == m.transpose());
  for (Eigen::Index i = 0; i < m.rows(); ++i) CHECK(m.row(i).sum() == 0.0);
  CHECK_NOTHROW(Laplacian::from_matrix(m));
}

}  // namespace

TEST_CASE("sample_laplacian examples") {
  Rng rng(1);
  const RandomGraphProcess k3(3, StaticGraph{{{0, 1}, {0, 2}, {1, 2}}});
  CHECK(sample_laplacian(k3, rng).matrix() == mat({{2, -1, -1}, {-1, 2, -1}, {-1, -1, 2}}));
  const RandomGraphProcess er(2, ErdosRenyi{1.0});
  CHECK(sample_laplacian(er, rng).matrix() == mat({{1, -1}, {-1, 1}}));
  const RandomGraphProcess none(4, EdgeSubsample{ring(4), 0.0});
  CHECK(sample_laplacian(none, rng).matrix().isZero());
}

TEST_CASE("sampled Laplacians satisfy the invariants and are reproducible") {
  const RandomGraphProcess proc(7, ErdosRenyi{0.4});
  Rng a(99), b(99);
  for (int k = 0; k < 50; ++k) {
    const auto L = sample_laplacian(proc, a);
    require_laplacian(L);
    CHECK(L.matrix() == sample_laplacian(proc, b).matrix());
    CHECK(max_eigenvalue(L.matrix()) <= 2.0 * L.max_degree() + 1e-12);
  }
}

TEST_CASE("mean Laplacian") {
  const RandomGraphProcess er(2, ErdosRenyi{0.5});
  CHECK(mean_laplacian(er).isApprox(mat({{0.5, -0.5}, {-0.5, 0.5}})));
  const RandomGraphProcess st(4, StaticGraph{ring(4)});
  CHECK(mean_laplacian(st) == Laplacian::from_edges(4, ring(4)).matrix());

  const RandomGraphProcess sub(6, EdgeSubsample{ring(6), 0.3});
  Rng rng(2);
  Matrix acc = Matrix::Zero(6, 6);
  Laplacian L;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    sample_laplacian_into(sub, rng, L);
    acc += L.matrix();
  }
  CHECK((acc / draws - mean_laplacian(sub)).cwiseAbs().maxCoeff() <= 0.01);
  for (Eigen::Index i = 0; i < 6; ++i) CHECK(std::abs(mean_laplacian(sub).row(i).sum()) <= 1e-15);
}

TEST_CASE("Fiedler value examples") {
  CHECK(fiedler_value(mat({{1, -1}, {-1, 1}})) == doctest::Approx(2.0));
  const Matrix p3 = Laplacian::from_edges(3, std::vector<Edge>{{0, 1}, {1, 2}}).matrix();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(p3);
  CHECK(eig.eigenvalues()[0] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(eig.eigenvalues()[1] == doctest::Approx(1.0));
  CHECK(eig.eigenvalues()[2] == doctest::Approx(3.0));
  CHECK(fiedler_value(p3) == doctest::Approx(1.0));
  const Matrix two_k2 = Laplacian::from_edges(4, std::vector<Edge>{{0, 1}, {2, 3}}).matrix();
  CHECK(fiedler_value(two_k2) <= 1e-12);
  CHECK_THROWS_AS(fiedler_value(mat({{1, -1}, {0, 1}})), InputError);
}

TEST_CASE("mean connectivity follows the union graph") {
  CHECK(fiedler_value(mean_laplacian(RandomGraphProcess(10, EdgeSubsample{ring(10), 0.5}))) > 0.0);
  auto cut = ring(10);
  std::erase(cut, Edge{2, 3});
  std::erase(cut, Edge{9, 0});
  CHECK(fiedler_value(mean_laplacian(RandomGraphProcess(10, EdgeSubsample{cut, 0.5}))) <= 1e-12);
  CHECK(connected_components(10, cut).size() == 2);
}

TEST_CASE("neighborhoods") {
  const auto k3 = neighborhoods(Laplacian::from_edges(3, std::vector<Edge>{{0, 1}, {0, 2}, {1, 2}}));
  CHECK(k3[0] == std::vector<int>{1, 2});
  CHECK(k3[1] == std::vector<int>{0, 2});
  CHECK(k3[2] == std::vector<int>{0, 1});
  const auto empty = neighborhoods(Laplacian(4));
  for (const auto& o : empty) CHECK(o.empty());
  const auto p3 = neighborhoods(Laplacian::from_edges(3, std::vector<Edge>{{0, 1}, {1, 2}}));
  CHECK(p3[1] == std::vector<int>{0, 2});
}

TEST_CASE("graph validation") {
  CHECK_THROWS_AS(RandomGraphProcess(3, ErdosRenyi{1.5}), InputError);
  CHECK_THROWS_AS(RandomGraphProcess(3, StaticGraph{{{0, 0}}}), InputError);
  CHECK_THROWS_AS(RandomGraphProcess(3, StaticGraph{{{0, 1}, {1, 0}}}), InputError);
  CHECK_THROWS_AS(RandomGraphProcess(3, EdgeSubsample{{{0, 3}}, 0.5}), InputError);
  CHECK_THROWS_AS(Laplacian::from_matrix(mat({{1, -1}, {-1, 2}})), InputError);
}
