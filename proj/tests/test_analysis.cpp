#include "doctest.h"
#include "oracles.hpp"

#include "singspec/analysis.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace singspec;
using namespace singspec::analysis;
using potentials::Delta;
using potentials::Grid1D;
using potentials::Primitive1D;

namespace {

std::shared_ptr<const Primitive1D> delta_profile(Complex s) {
  const Delta d[] = {{0.5, s}};
  return std::make_shared<Primitive1D>(
      potentials::primitive_from_deltas([](double) { return Complex(0.0); }, d, Grid1D::uniform(0.0, 1.0, 16)));
}

std::vector<double> interval_spectrum(double len, double up_to) {
  const double sides[] = {len};
  return free_box_spectrum(sides, Space::Dirichlet, up_to);
}

}  // namespace

TEST_CASE("counting function jumps by the multiplicity") {
  const CountingFunction N({5.0, 2.0, 5.0, 8.0});
  CHECK(N(1.0) == 0);
  CHECK(N(2.0) == 1);
  CHECK(N(5.0) - N.left_limit(5.0) == 2);
  CHECK(N(100.0) == 4);
}

TEST_CASE("unit ball volumes") {
  CHECK(unit_ball_volume(1) == doctest::Approx(2.0));
  CHECK(unit_ball_volume(2) == doctest::Approx(kPi));
  CHECK(unit_ball_volume(3) == doctest::Approx(4.0 / 3.0 * kPi));
}

TEST_CASE("free box spectra in closed form") {
  const double sq[] = {oracle::pi, oracle::pi};
  const auto d = free_box_spectrum(sq, Space::Dirichlet, 10.5);
  const std::vector<double> expect{2, 5, 5, 8, 10, 10};
  CHECK(d == expect);
  const auto n = free_box_spectrum(sq, Space::Neumann, 2.5);
  CHECK(n == std::vector<double>{0, 1, 1, 2});
}

TEST_CASE("Weyl profile in 1D: integer counts and exact leading term") {
  const auto spec = interval_spectrum(oracle::pi, 1e4);
  std::vector<double> radii;
  for (int i = 1; i <= 400; ++i) radii.push_back(0.37 + 11.0 * i);
  const auto w = weyl_profile(spec, 1, oracle::pi, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    CHECK(w.counts[i] == std::floor(std::sqrt(radii[i])));
    CHECK(w.leading[i] == doctest::Approx(std::sqrt(radii[i])).epsilon(1e-14));
    CHECK(std::abs(w.remainder[i]) <= 1.0);
  }
  // Length times four scales the leading term by four.
  const auto w4 = weyl_profile(interval_spectrum(4 * oracle::pi, 1e4), 1, 4 * oracle::pi, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) CHECK(w4.leading[i] == doctest::Approx(4 * w.leading[i]));
}

TEST_CASE("Weyl profile on the square against the lattice count") {
  const double sq[] = {oracle::pi, oracle::pi};
  const auto spec = free_box_spectrum(sq, Space::Dirichlet, 810.0);
  std::vector<double> radii;
  // One-sided limits at every integer: counts jump only at integers.
  for (int i = 1; i <= 400; ++i) {
    radii.push_back(i - 1e-6);
    radii.push_back(i + 1e-6);
  }
  const auto w = weyl_profile(spec, 2, oracle::pi * oracle::pi, radii);
  for (std::size_t i = 0; i < radii.size(); ++i) {
    CHECK(w.counts[i] == static_cast<double>(oracle::lattice_count(radii[i])));
    CHECK(w.leading[i] == doctest::Approx(oracle::pi * radii[i] / 4));
  }
  CHECK(w.max_abs_remainder() <= 1.5);
}

TEST_CASE("Weyl profile rejects radii beyond the resolved range") {
  const auto spec = interval_spectrum(oracle::pi, 100.0);
  const double ok[] = {50.0};
  const double bad[] = {50.1};
  CHECK_NOTHROW(weyl_profile(spec, 1, oracle::pi, ok));
  CHECK_THROWS_AS(weyl_profile(spec, 1, oracle::pi, bad), ConfigError);
}

TEST_CASE("sandwich: identical spectra") {
  const auto spec = interval_spectrum(1.0, 1e4);
  const double radii[] = {10, 100, 1000};
  const auto s = sandwich_check(CountingFunction(spec), CountingFunction(spec), 0.5, radii);
  CHECK(s.verdict);
  for (const auto& row : s.rows) CHECK(row.lhs == 0.0);
}

TEST_CASE("sandwich: bounded shift works with c equal to the shift at theta = 0") {
  const double sq[] = {oracle::pi, oracle::pi};
  const auto free = free_box_spectrum(sq, Space::Dirichlet, 2000.0);
  std::vector<double> shifted;
  for (double v : free) shifted.push_back(v + 0.7);
  std::vector<double> radii;
  for (int i = 1; i <= 100; ++i) radii.push_back(10.0 * i);
  const auto s = sandwich_check(CountingFunction(shifted), CountingFunction(free), 0.0, radii);
  CHECK(s.verdict);
  CHECK(s.c <= 0.7 * (1 + 1e-8));
}

TEST_CASE("sandwich: unresolved range is an error") {
  const auto spec = interval_spectrum(1.0, 200.0);
  std::vector<double> other = spec;
  other[0] += 3.0;
  const double radii[] = {10, 150};
  CHECK_THROWS_AS(sandwich_check(CountingFunction(other), CountingFunction(spec), 0.5, radii), ConfigError);
}

TEST_CASE("sandwich for the delta potential with the shooting engine") {
  const auto s = quasi1d::eigenvalues_selfadjoint(delta_profile(10.0), quasi1d::BoundaryCondition1D::dirichlet(), 25);
  std::vector<double> ev;
  for (auto v : s.eigenvalues) ev.push_back(v.real());
  std::vector<double> radii;
  for (int i = 1; i <= 250; ++i) radii.push_back(10.0 * i);
  const auto r = sandwich_check(CountingFunction(ev), CountingFunction(interval_spectrum(1.0, 1e5)), 0.5, radii);
  CHECK(r.verdict);
  CHECK(r.c > 0);
  CHECK(r.C >= 1);
}

TEST_CASE("log-log slope") {
  const double x[] = {1, 2, 4, 8};
  const double y[] = {3, 12, 48, 192};
  CHECK(loglog_slope(x, y) == doctest::Approx(2.0));
}

TEST_CASE("convergence table on a constant family stays at the floor") {
  const double scales[] = {0.5, 0.25, 0.125};
  const double norms[] = {0.0, 0.0, 0.0};
  const Complex ref[] = {1.0, 4.0};
  const auto t = convergence_rates(scales, norms, ref, [](std::size_t) { return std::vector<Complex>{1.0, 4.0}; });
  CHECK(t.at_floor);
  CHECK(std::isnan(t.slope));
  CHECK(t.rows.size() == 3);
  for (const auto& row : t.rows) CHECK(row.gaps[0] == 0.0);
}

TEST_CASE("convergence table keeps the prefix before a failing scale") {
  const double scales[] = {0.5, 0.25, 0.125, 0.0625};
  const double norms[] = {1, 0.5, 0.25, 0.125};
  const Complex ref[] = {1.0};
  const auto t = convergence_rates(scales, norms, ref, [](std::size_t k) -> std::vector<Complex> {
    if (k == 2) throw NumericalError("quasi1d", "synthetic failure");
    return {1.0 + std::ldexp(1.0, -static_cast<int>(k))};
  });
  CHECK_FALSE(t.complete);
  CHECK(t.rows.size() == 2);
  CHECK(t.failure.find("synthetic failure") != std::string::npos);
  CHECK(t.slope == doctest::Approx(1.0));
}

TEST_CASE("mollifier sweep for the delta potential") {
  std::vector<double> scales;
  for (int k = 2; k <= 6; ++k) scales.push_back(std::ldexp(1.0, -k));
  const auto t = mollifier_sweep_1d(delta_profile(10.0), quasi1d::BoundaryCondition1D::dirichlet(), scales, 2);
  CHECK(t.complete);
  CHECK(t.slope >= 0.9);
  for (std::size_t i = 1; i < t.rows.size(); ++i) CHECK(t.rows[i].gaps[0] < t.rows[i - 1].gaps[0]);
}

TEST_CASE("resolvent gap: identical forms and a shrinking family") {
  auto u = delta_profile(10.0);
  const auto bc = quasi1d::BoundaryCondition1D::dirichlet();
  const auto mesh = Grid1D::uniform(0.0, 1.0, 256);
  const auto f = quasi1d::galerkin_1d(*u, bc, mesh);
  CHECK(resolvent_gap(f, f, 1.0) == 0.0);
  const auto f1 = quasi1d::galerkin_1d(potentials::mollify(u, 0.25), bc, mesh);
  const auto f2 = quasi1d::galerkin_1d(potentials::mollify(u, 0.0625), bc, mesh);
  const double g1 = resolvent_gap(f1, f, 1.0), g2 = resolvent_gap(f2, f, 1.0);
  CHECK(g1 > g2);
  CHECK(g2 > 0);
}

TEST_CASE("resolvent gap against a dense computation") {
  auto u = delta_profile(10.0);
  const auto bc = quasi1d::BoundaryCondition1D::dirichlet();
  const auto mesh = Grid1D::uniform(0.0, 1.0, 64);
  const auto f = quasi1d::galerkin_1d(*u, bc, mesh);
  const auto fk = quasi1d::galerkin_1d(potentials::mollify(u, 0.125), bc, mesh);
  const Eigen::MatrixXcd M = Eigen::MatrixXcd(f.M);
  const Eigen::MatrixXcd A = Eigen::MatrixXcd(fk.total()) + M, B = Eigen::MatrixXcd(f.total()) + M;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(M);
  const Eigen::MatrixXcd Mh = es.operatorSqrt();
  const Eigen::MatrixXcd D = Mh * (A.inverse() - B.inverse()) * Mh;
  const double ref = Eigen::JacobiSVD<Eigen::MatrixXcd>(D).singularValues()[0];
  CHECK(resolvent_gap(fk, f, 1.0) == doctest::Approx(ref).epsilon(1e-8));
}

TEST_CASE("subordination: zero, identity and scale invariance") {
  const auto mesh = Grid1D::uniform(0.0, 1.0, 100);
  const auto zero = Primitive1D::constant(0.0, 1.0, 0.0);
  CHECK(subordination_estimate(subordination_problem_1d(zero, mesh), 0.3, 4, 1).value == 0.0);
  // q = 1 with primitive u = x.
  const auto one = potentials::primitive_from_deltas([](double x) { return Complex(x); }, {}, Grid1D::uniform(0, 1, 4));
  const auto p1 = subordination_problem_1d(one, mesh);
  CHECK(subordination_estimate(p1, 0.0, 4, 1).value == doctest::Approx(1.0).epsilon(1e-10));

  const auto pd = subordination_problem_1d(*delta_profile(10.0), mesh);
  std::mt19937 rng(3);
  std::normal_distribution<double> nd;
  for (int k = 0; k < 5; ++k) {
    Eigen::VectorXcd c(pd.t0_values.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) c[i] = Complex(nd(rng), nd(rng));
    const double r = subordination_ratio(pd, 0.6, c);
    CHECK(subordination_ratio(pd, 0.6, Complex(3.0, -2.0) * c) == doctest::Approx(r).epsilon(1e-12));
  }
}

TEST_CASE("subordination estimate for the delta potential is the rank-one value") {
  // Q = 10 e(1/2) e(1/2)^*: the supremum is 10 sum |e_i(1/2)|^2 / d_i^theta.
  const auto pd = subordination_problem_1d(*delta_profile(10.0), Grid1D::uniform(0.0, 1.0, 100));
  double exact = 0.0;
  for (Eigen::Index i = 0; i < pd.t0_values.size(); ++i)
    exact += pd.perturbation(i, i).real() / std::pow(pd.t0_values[i], 0.6);
  CHECK(subordination_estimate(pd, 0.6, 4, 11).value == doctest::Approx(exact).epsilon(1e-8));
}

TEST_CASE("Abel reconstruction: 2 x 2 closed form") {
  Eigen::SparseMatrix<Complex> K(2, 2), M(2, 2);
  K.insert(0, 0) = 1.0;
  K.insert(0, 1) = 1.0;
  K.insert(1, 1) = 2.0;
  M.insert(0, 0) = 1.0;
  M.insert(1, 1) = 1.0;
  numerics::SolverOptions o;
  o.force_dense = true;
  const auto e = numerics::general_pencil_solve(numerics::PencilProblem<Complex>{K, M, 2, 1e-12}, o);
  const auto sys = eigensystem_from(e, M);
  Eigen::VectorXcd f(2);
  f << 0.0, 1.0;
  const double t[] = {1.0, 0.1, 0.01};
  const auto a = abel_reconstruct(sys, f, 1.0, t, 2);
  for (int i = 0; i < 3; ++i) {
    const double e1 = std::exp(-t[i]), e2 = std::exp(-2 * t[i]);
    const double exact = std::sqrt((e2 - e1) * (e2 - e1) + (e2 - 1) * (e2 - 1));
    CHECK(a.errors[i] == doctest::Approx(exact).epsilon(1e-12));
  }
  CHECK(a.truncation_error < 1e-14);
  CHECK_FALSE(a.branch_violation);
}

TEST_CASE("Abel reconstruction: self-adjoint errors decrease as t decreases") {
  const auto f0 = quasi1d::galerkin_1d(Primitive1D::constant(0, 1, 0.0), quasi1d::BoundaryCondition1D::dirichlet(),
                                       Grid1D::uniform(0, 1, 100));
  numerics::SolverOptions o;
  o.force_dense = true;
  const auto e = numerics::general_pencil_solve(numerics::PencilProblem<Complex>{f0.total(), f0.M, 99, 1e-10}, o);
  const auto sys = eigensystem_from(e, f0.M);
  Eigen::VectorXcd f(99);
  for (int i = 0; i < 99; ++i) f[i] = (i + 1) * (99 - i) / 2500.0;
  std::vector<double> t;
  for (int k = 0; k <= 12; ++k) t.push_back(std::pow(10.0, -0.5 * k));
  const auto a = abel_reconstruct(sys, f, 0.7, t, 60);
  for (std::size_t i = 1; i < t.size(); ++i) CHECK(a.errors[i] <= a.errors[i - 1] + 1e-12);
  CHECK(a.errors.back() >= a.truncation_error - 1e-12);
  CHECK(a.biorthogonality < 1e-10);
}

TEST_CASE("Abel reconstruction flags a non-decaying branch") {
  Eigensystem sys;
  sys.values = Eigen::Vector2cd(1.0, Complex(0.0, 6.0));
  sys.right = Eigen::Matrix2cd::Identity();
  sys.left = Eigen::Matrix2cd::Identity();
  sys.M.resize(2, 2);
  sys.M.insert(0, 0) = 1.0;
  sys.M.insert(1, 1) = 1.0;
  sys.cluster = {0, 1};
  Eigen::VectorXcd f(2);
  f << 1.0, 1.0;
  const double t[] = {0.1};
  // Principal branch: (6i)^alpha has argument alpha pi / 2.
  CHECK_FALSE(abel_reconstruct(sys, f, 0.5, t, 2).branch_violation);
  CHECK(abel_reconstruct(sys, f, 1.0, t, 2).branch_violation);
  CHECK(abel_reconstruct(sys, f, 1.5, t, 2).branch_violation);
}
