#include "doctest.h"

#include "singspec/numerics.hpp"

#include <cmath>
#include <random>

using namespace singspec;
using namespace singspec::numerics;

TEST_CASE("Gauss-Legendre integrates polynomials of degree 2n-1") {
  for (int n : {1, 3, 6, 10}) {
    const auto r = gauss_legendre(n);
    for (int deg = 0; deg <= 2 * n - 1; ++deg) {
      double s = 0;
      for (int i = 0; i < n; ++i) s += r.weights[i] * std::pow(r.nodes[i][0], deg);
      const double exact = deg % 2 ? 0.0 : 2.0 / (deg + 1);
      CHECK(std::abs(s - exact) < 1e-14);
    }
  }
}

TEST_CASE("triangle rules are exact to their order") {
  for (int order : {1, 2, 5}) {
    const auto r = triangle_rule(order);
    double wsum = 0;
    for (double w : r.weights) {
      CHECK(w > 0);
      wsum += w;
    }
    CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));
    // int x^a y^b over the reference triangle = a! b! / (a + b + 2)!
    for (int a = 0; a <= order; ++a) {
      for (int b = 0; a + b <= order; ++b) {
        double s = 0;
        for (std::size_t i = 0; i < r.nodes.size(); ++i)
          s += r.weights[i] * std::pow(r.nodes[i][0], a) * std::pow(r.nodes[i][1], b);
        const double exact = std::tgamma(a + 1) * std::tgamma(b + 1) / std::tgamma(a + b + 3);
        CHECK(std::abs(s - exact) < 1e-14);
      }
    }
  }
}

TEST_CASE("adaptive integration of an endpoint singularity") {
  const auto r = integrate_adaptive([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-10);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
  const double pts[] = {0.0, 0.3, 1.0};
  const auto p = integrate_piecewise([](double x) { return x < 0.3 ? 1.0 : 2.0; }, pts);
  CHECK(p.value == doctest::Approx(0.3 + 1.4).epsilon(1e-13));
}

TEST_CASE("graded cubature: integrable point singularity converges") {
  Box<2> dom{{-1, -1}, {1, 1}};
  const Box<2> sing[] = {Box<2>::point({0, 0})};
  // int_{[-1,1]^2} |x|^{-1} is finite (about 7.05).
  auto f = [](const Eigen::Vector2d& x) { return 1.0 / x.norm(); };
  const auto e = integrate_graded<2>(f, dom, sing);
  CHECK(e.converged);
  CHECK_FALSE(e.diverged);
  const double exact = 8.0 * std::log(1.0 + std::sqrt(2.0));
  CHECK(e.value == doctest::Approx(exact).epsilon(1e-7));
}

TEST_CASE("graded cubature: non-integrable singularity is flagged") {
  Box<2> dom{{-1, -1}, {1, 1}};
  const Box<2> sing[] = {Box<2>::point({0, 0})};
  auto f = [](const Eigen::Vector2d& x) { return 1.0 / x.squaredNorm(); };
  GradedOptions o;
  o.max_level = 60;
  const auto e = integrate_graded<2>(f, dom, sing, o);
  CHECK(e.diverged);
  CHECK_FALSE(e.converged);
}

TEST_CASE("root scan finds simple and tangent roots") {
  auto f = [](double x) { return std::sin(x) * (x - 4.0) * (x - 4.0); };
  const auto s = bracketed_roots(f, 0.5, 10.0, 0.05, 10);
  REQUIRE(s.roots.size() == 4);
  CHECK(s.roots[0].value == doctest::Approx(kPi).epsilon(1e-12));
  CHECK(s.roots[1].value == doctest::Approx(4.0).epsilon(1e-6));
  CHECK(s.roots[1].multiplicity == 2);
  CHECK(s.roots[2].value == doctest::Approx(2 * kPi).epsilon(1e-12));
  CHECK(s.roots[3].value == doctest::Approx(3 * kPi).epsilon(1e-12));
}

TEST_CASE("root scan stops at the requested count and reports continuation") {
  auto f = [](double x) { return std::sin(x); };
  const auto s = bracketed_roots(f, 0.5, 20.0, 0.1, 2);
  CHECK(s.roots.size() == 2);
  CHECK_FALSE(s.complete);
  CHECK(s.continuation > 2 * kPi);
  CHECK(s.continuation < 3 * kPi);
}

TEST_CASE("spectral order and clusters") {
  Eigen::VectorXcd v(5);
  v << Complex(2, 1), Complex(1, 0), Complex(2, -1), Complex(1 + 1e-12, 0), Complex(0.5, 3);
  const auto idx = spectral_order(v);
  CHECK(idx[0] == 4);
  CHECK(idx[3] == 2);  // 2 - i before 2 + i
  CHECK(idx[4] == 0);
  Eigen::VectorXcd sorted(5);
  for (int i = 0; i < 5; ++i) sorted[i] = v[idx[i]];
  const auto c = cluster_ids(sorted);
  CHECK(c[1] == c[2]);
  CHECK(c[0] != c[1]);
  CHECK(c[3] != c[4]);
}

namespace {

// 1D Laplacian pencil: exact discrete eigenvalues are known in closed form.
std::pair<Eigen::SparseMatrix<double>, Eigen::SparseMatrix<double>> laplace_pencil(int n) {
  const double h = 1.0 / (n + 1);
  std::vector<Eigen::Triplet<double>> k, m;
  for (int i = 0; i < n; ++i) {
    k.emplace_back(i, i, 2.0 / h);
    m.emplace_back(i, i, 4.0 * h / 6.0);
    if (i + 1 < n) {
      k.emplace_back(i, i + 1, -1.0 / h);
      k.emplace_back(i + 1, i, -1.0 / h);
      m.emplace_back(i, i + 1, h / 6.0);
      m.emplace_back(i + 1, i, h / 6.0);
    }
  }
  Eigen::SparseMatrix<double> K(n, n), M(n, n);
  K.setFromTriplets(k.begin(), k.end());
  M.setFromTriplets(m.begin(), m.end());
  return {K, M};
}

double laplace_exact(int n, int j) {
  const double h = 1.0 / (n + 1);
  const double c = std::cos(j * kPi * h);
  return 6.0 / (h * h) * (1 - c) / (2 + c);
}

}  // namespace

TEST_CASE("Hermitian pencil: dense and sparse paths agree with the closed form") {
  for (int n : {200, 3000}) {
    auto [K, M] = laplace_pencil(n);
    PencilProblem<double> p{K, M, 6, 1e-10};
    const auto e = hermitian_pencil_solve(p);
    CHECK(e.dense == (n <= 600));
    for (int j = 1; j <= 6; ++j) CHECK(e.values[j - 1].real() == doctest::Approx(laplace_exact(n, j)).epsilon(1e-8));
    // M-orthonormal right vectors.
    const Eigen::MatrixXcd G = e.right.adjoint() * M.cast<Complex>() * e.right;
    CHECK((G - Eigen::MatrixXcd::Identity(6, 6)).norm() < 1e-8);
    for (int j = 0; j < 6; ++j) CHECK(e.residuals[j] < 1e-9);
  }
}

TEST_CASE("Hermitian pencil: indefinite shift search") {
  auto [K, M] = laplace_pencil(1000);
  Eigen::SparseMatrix<double> Ks = K - 500.0 * M;
  PencilProblem<double> p{Ks, M, 3, 1e-10};
  const auto e = hermitian_pencil_solve(p);
  for (int j = 1; j <= 3; ++j)
    CHECK(e.values[j - 1].real() == doctest::Approx(laplace_exact(1000, j) - 500.0).epsilon(1e-8));
}

TEST_CASE("general pencil: biorthonormal left and right vectors") {
  const int n = 300;
  auto [K, M] = laplace_pencil(n);
  Eigen::SparseMatrix<Complex> Kc = K.cast<Complex>();
  // Non-Hermitian first-order perturbation.
  std::vector<Eigen::Triplet<Complex>> t;
  for (int i = 0; i + 1 < n; ++i) {
    t.emplace_back(i, i + 1, Complex(0, 2.0));
    t.emplace_back(i + 1, i, Complex(0, -1.0));
  }
  Eigen::SparseMatrix<Complex> P(n, n);
  P.setFromTriplets(t.begin(), t.end());
  Kc += P;
  const Eigen::SparseMatrix<Complex> Mc = M.cast<Complex>();
  for (bool dense : {true, false}) {
    SolverOptions o;
    o.force_dense = dense;
    o.dense_cap = dense ? 600 : 10;
    PencilProblem<Complex> p{Kc, Mc, 5, 1e-10};
    const auto e = general_pencil_solve(p, o);
    const Eigen::MatrixXcd G = e.left.adjoint() * Mc * e.right;
    CHECK((G - Eigen::MatrixXcd::Identity(5, 5)).norm() < 1e-8);
    for (int j = 0; j < 5; ++j) CHECK(e.residuals[j] < 1e-9);
    for (int j = 1; j < 5; ++j) CHECK(e.values[j].real() >= e.values[j - 1].real() - 1e-9);
    if (!dense) {
      SolverOptions od;
      od.force_dense = true;
      const auto ref = general_pencil_solve(p, od);
      for (int j = 0; j < 5; ++j) CHECK(std::abs(e.values[j] - ref.values[j]) < 1e-7 * std::abs(ref.values[j]));
    }
  }
}

TEST_CASE("norm bound dominates the spectral norm") {
  auto [K, M] = laplace_pencil(50);
  const double b = norm_bound(K);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(K)};
  CHECK(b >= es.eigenvalues().cwiseAbs().maxCoeff() * (1 - 1e-12));
}
