#include "doctest.h"
#include "oracles.hpp"

#include "singspec/quasi1d.hpp"

#include <cmath>
#include <memory>

using namespace singspec;
using namespace singspec::quasi1d;
using singspec::potentials::Delta;
using singspec::potentials::Grid1D;
using singspec::potentials::Primitive1D;

namespace {

std::shared_ptr<const Primitive1D> free_profile(double a, double b) {
  return std::make_shared<Primitive1D>(Primitive1D::constant(a, b, 0.0));
}

std::shared_ptr<const Primitive1D> delta_profile(Complex s, int cells = 16) {
  const Delta d[] = {{0.5, s}};
  return std::make_shared<Primitive1D>(potentials::primitive_from_deltas(
      [](double) { return Complex(0.0); }, d, Grid1D::uniform(0.0, 1.0, cells)));
}

}  // namespace

TEST_CASE("cell transfer is unimodular and squares to the double step") {
  for (Complex lam : {Complex(4.0), Complex(-3.0), Complex(2.0, 5.0), Complex(1e-12)}) {
    const auto t = cell_transfer(Complex(0.7, -0.2), lam, 0.3);
    CHECK(std::abs(t.det() - 1.0) < 1e-13);
    const auto t2 = cell_transfer(Complex(0.7, -0.2), lam, 0.6);
    CHECK((t.matrix * t.matrix - t2.matrix).norm() < 1e-12 * (1 + t2.matrix.norm()));
  }
}

TEST_CASE("free Dirichlet and Neumann spectra on (0, pi)") {
  auto u = free_profile(0.0, oracle::pi);
  const auto d = eigenvalues_selfadjoint(u, BoundaryCondition1D::dirichlet(), 10);
  for (int k = 1; k <= 10; ++k) CHECK(std::abs(d.eigenvalues[k - 1].real() - k * k) <= 1e-10 * k * k);
  const auto n = eigenvalues_selfadjoint(u, BoundaryCondition1D::generalized_neumann(), 10);
  CHECK(std::abs(n.eigenvalues[0].real()) <= 1e-10);
  for (int k = 1; k < 10; ++k) CHECK(std::abs(n.eigenvalues[k].real() - k * k) <= 1e-10 * k * k);
}

TEST_CASE("constant primitive leaves the Dirichlet spectrum unchanged") {
  // u = c gives q = 0; the quasi-derivative shifts but y does not.
  auto u = std::make_shared<Primitive1D>(Primitive1D::constant(0.0, oracle::pi, 0.8));
  const auto d = eigenvalues_selfadjoint(u, BoundaryCondition1D::dirichlet(), 5);
  for (int k = 1; k <= 5; ++k) CHECK(std::abs(d.eigenvalues[k - 1].real() - k * k) <= 1e-9 * k * k);
}

TEST_CASE("delta potential matches the jump-matching oracle") {
  const auto ref = oracle::delta_dirichlet(10.0, 0.5, 8);
  const auto s = eigenvalues_selfadjoint(delta_profile(10.0), BoundaryCondition1D::dirichlet(), 8);
  for (int i = 0; i < 8; ++i) CHECK(std::abs(s.eigenvalues[i].real() - ref[i]) <= 1e-8 * ref[i]);
  for (int i = 0; i < 8; ++i) CHECK(s.eigenfunctions[i].sign_changes == i);
}

TEST_CASE("periodic free spectrum has double eigenvalues") {
  auto u = free_profile(0.0, 2 * oracle::pi);
  const auto s = eigenvalues_selfadjoint(u, BoundaryCondition1D::quasi_periodic(0.0), 5);
  const double expect[] = {0, 1, 1, 4, 4};
  for (int i = 0; i < 5; ++i) CHECK(std::abs(s.eigenvalues[i].real() - expect[i]) <= 1e-9);
  CHECK(s.cluster[1] == s.cluster[2]);
}

TEST_CASE("third-kind data with zero coefficients reduce to Neumann") {
  auto u = free_profile(0.0, oracle::pi);
  const auto s = eigenvalues_selfadjoint(u, BoundaryCondition1D::third_kind(0.0, 0.0), 4);
  for (int k = 0; k < 4; ++k) CHECK(std::abs(s.eigenvalues[k].real() - k * k) <= 1e-9 * (1 + k * k));
}

TEST_CASE("boundary condition parsing") {
  CHECK(BoundaryCondition1D::parse("dirichlet").kind() == BoundaryCondition1D::Kind::Dirichlet);
  CHECK(BoundaryCondition1D::parse("gneumann").kind() == BoundaryCondition1D::Kind::GeneralizedNeumann);
  const auto t = BoundaryCondition1D::parse("third:1.5,-2");
  CHECK(t.alpha() == Complex(1.5));
  CHECK(t.beta() == Complex(-2.0));
  CHECK_THROWS_AS(BoundaryCondition1D::parse("third:1"), ConfigError);
  CHECK_THROWS_AS(BoundaryCondition1D::parse("robin"), ConfigError);
}

TEST_CASE("third-kind Galerkin agrees with shooting") {
  auto u = free_profile(0.0, 1.0);
  const auto bc = BoundaryCondition1D::third_kind(2.0, -1.0);
  const auto s = eigenvalues_selfadjoint(u, bc, 3);
  const auto g = galerkin_spectrum(*u, bc, Grid1D::uniform(0.0, 1.0, 800), 3);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(g.eigenvalues[i].real() - s.eigenvalues[i].real()) <= 1e-3 * (1 + std::abs(s.eigenvalues[i])));
}

TEST_CASE("quasi-periodic Galerkin agrees with shooting") {
  auto u = free_profile(0.0, 1.0);
  const auto bc = BoundaryCondition1D::quasi_periodic(1.0);
  const auto s = eigenvalues_selfadjoint(u, bc, 3);
  const auto g = galerkin_spectrum(*u, bc, Grid1D::uniform(0.0, 1.0, 800), 3);
  for (int i = 0; i < 3; ++i)
    CHECK(std::abs(g.eigenvalues[i].real() - s.eigenvalues[i].real()) <= 1e-3 * (1 + std::abs(s.eigenvalues[i])));
}

TEST_CASE("Galerkin converges at second order for the delta potential") {
  const auto ref = oracle::delta_dirichlet(10.0, 0.5, 4);
  auto u = delta_profile(10.0);
  double prev = 0;
  for (int m : {100, 200, 400}) {
    const auto g = galerkin_spectrum(*u, BoundaryCondition1D::dirichlet(), Grid1D::uniform(0.0, 1.0, m), 4);
    double err = 0;
    for (int i = 0; i < 4; ++i) err = std::max(err, std::abs(g.eigenvalues[i].real() - ref[i]) / ref[i]);
    if (prev > 0) CHECK(std::log2(prev / err) == doctest::Approx(2.0).epsilon(0.1));
    prev = err;
  }
}

TEST_CASE("quasi-derivative is continuous across the delta site") {
  auto u = delta_profile(10.0);
  const ShootingEngine engine(u);
  const auto ref = oracle::delta_dirichlet(10.0, 0.5, 3);
  for (double lam : ref) {
    const auto lim = engine.site_limits(lam, BoundaryCondition1D::dirichlet(), 0.5);
    const double ymax = std::abs(lim.left.y) + 1.0;
    CHECK(std::abs(lim.left.y1 - lim.right.y1) <= 1e-8 * ymax);
  }
}

TEST_CASE("complex delta potential: Newton-refined eigenvalues solve the characteristic equation") {
  auto u = delta_profile(Complex(0.0, 10.0));
  const auto s = eigenvalues_complex(u, BoundaryCondition1D::dirichlet(), 5);
  REQUIRE(s.eigenvalues.size() == 5);
  for (int i = 0; i < 5; ++i) {
    CHECK(s.refined[i]);
    CHECK(s.residuals[i] <= 1e-8);
  }
  // Closed form: k sin k + s sin^2(k/2) = 0 with s = 10i.
  for (int i = 0; i < 5; ++i) {
    const Complex k = std::sqrt(s.eigenvalues[i]);
    const Complex D = k * std::sin(k) + Complex(0, 10) * std::sin(k / 2.0) * std::sin(k / 2.0);
    CHECK(std::abs(D) <= 1e-6 * (1 + std::abs(k)));
  }
}

TEST_CASE("self-adjoint solver rejects complex data") {
  auto u = delta_profile(Complex(0.0, 1.0));
  CHECK_THROWS_AS(eigenvalues_selfadjoint(u, BoundaryCondition1D::dirichlet(), 3), ConfigError);
}
