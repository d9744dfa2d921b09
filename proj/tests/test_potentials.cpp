#include "doctest.h"

#include "singspec/potentials.hpp"

#include <cmath>
#include <memory>

using namespace singspec;
using namespace singspec::potentials;

namespace {

std::shared_ptr<const Primitive1D> unit_step(double site = 0.5, int cells = 8) {
  const Delta d[] = {{site, 1.0}};
  return std::make_shared<Primitive1D>(
      primitive_from_deltas([](double) { return Complex(0.0); }, d, Grid1D::uniform(0.0, 1.0, cells)));
}

// Independent value of int_{-1}^{1} (Phi(t) - H(t))^2 dt for the standard
// bump, Phi its distribution function. Plain composite Simpson on a fine grid.
double step_defect_constant() {
  const int n = 200000;
  auto rho = [](double t) { return std::abs(t) < 1 ? std::exp(-1.0 / (1 - t * t)) : 0.0; };
  std::vector<double> cdf(n + 1, 0.0);
  const double dt = 2.0 / n;
  for (int i = 1; i <= n; ++i) {
    const double a = -1 + (i - 1) * dt, b = a + dt;
    cdf[i] = cdf[i - 1] + dt / 6 * (rho(a) + 4 * rho(0.5 * (a + b)) + rho(b));
  }
  const double Z = cdf[n];
  double s = 0;
  for (int i = 0; i < n; ++i) {
    const double t0 = -1 + i * dt;
    const double f0 = cdf[i] / Z - (t0 >= 0 ? 1 : 0), f1 = cdf[i + 1] / Z - (t0 + dt > 0 ? 1 : 0);
    s += 0.5 * dt * (f0 * f0 + f1 * f1);
  }
  return s;
}

}  // namespace

TEST_CASE("grid construction and lookup") {
  const double sites[] = {0.37};
  const auto g = Grid1D::uniform_with_sites(0.0, 1.0, 10, sites);
  CHECK(g.node_index(0.37).has_value());
  CHECK(g.cells() == 11);
  CHECK(g.cell_of(0.0) == 0);
  CHECK(g.cell_of(1.0) == g.cells() - 1);
  CHECK_THROWS_AS(Grid1D({0.0, 0.0, 1.0}), ConfigError);
  CHECK(g.refined(3).cells() == 33);
}

TEST_CASE("primitive from deltas: jumps and one-sided values") {
  auto u = unit_step(0.5);
  CHECK(u->value(0.25) == Complex(0.0));
  CHECK(u->value(0.75) == Complex(1.0));
  CHECK(u->value(0.5) == Complex(1.0));
  CHECK(u->value_left(0.5) == Complex(0.0));
  REQUIRE(u->jumps().size() == 1);
  CHECK(u->jumps()[0].height == Complex(1.0));
  CHECK(u->integral() == Complex(0.5));
  CHECK(lp_norm(*u, 2.0) == doctest::Approx(std::sqrt(0.5)));
}

TEST_CASE("quadratic base is reproduced exactly") {
  const auto u = primitive_from_deltas([](double x) { return Complex(x * x - 2 * x + 0.5); }, {},
                                       Grid1D::uniform(0.0, 1.0, 7));
  for (double x : {0.01, 0.33, 0.5, 0.99}) CHECK(std::abs(u.value(x) - (x * x - 2 * x + 0.5)) < 1e-14);
}

TEST_CASE("bump has unit mass and matching moments") {
  const auto m = bump_moments(1.0);
  CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(std::abs(m[1]) < 1e-14);
  CHECK(bump(1.0) == 0.0);
  CHECK(bump(0.0) > 0.0);
}

TEST_CASE("mollified step: L2 defect scales as sqrt(h) with the frozen constant") {
  const double c = step_defect_constant();
  CHECK(c == doctest::Approx(0.10571801780643889).epsilon(1e-8));
  auto u = unit_step(0.5);
  for (double h : {0.25, 1.0 / 16, 1.0 / 256}) {
    const auto uh = mollify(u, h);
    const double d = lp_distance(uh, *u, 2.0);
    CHECK(d * d == doctest::Approx(h * 0.10571801780643889).epsilon(1e-8));
  }
}

TEST_CASE("mollifier reproduces quadratics away from jumps and reflects at endpoints") {
  const Delta none[] = {{0.5, 0.0}};
  auto u = std::make_shared<Primitive1D>(primitive_from_deltas(
      [](double x) { return Complex(3 * x * x - x); }, none, Grid1D::uniform(0.0, 1.0, 4)));
  const auto uh = mollify(u, 0.1);
  // Interior: rho even, so the quadratic picks up h^2 * 3 * second moment.
  const double m2 = bump_moments(1.0)[2];
  CHECK(std::abs(uh.value(0.5) - (3 * 0.25 - 0.5 + 3 * 0.01 * m2)) < 1e-12);
  CHECK(std::abs(uh.value(0.0).imag()) == 0.0);
}

TEST_CASE("mollifier precondition on the jump clearance") {
  auto u = unit_step(0.5);
  CHECK_NOTHROW(mollify(u, 0.25));
  CHECK_THROWS_AS(mollify(u, 0.26), ConfigError);
}

TEST_CASE("mollified family distances decrease") {
  std::vector<double> scales;
  for (int k = 2; k <= 8; ++k) scales.push_back(std::ldexp(1.0, -k));
  MollifiedFamily1D fam(unit_step(0.5), scales);
  for (std::size_t i = 1; i < scales.size(); ++i) CHECK(fam.distances()[i] < fam.distances()[i - 1]);
}

TEST_CASE("domains") {
  CHECK(domain_volume(Interval{0, 3}) == 3.0);
  CHECK(domain_volume(Disk{0, 0, 2}) == doctest::Approx(4 * kPi));
  CHECK(domain_volume(Ball{Eigen::Vector3d::Zero(), 1}) == doctest::Approx(4.0 / 3 * kPi));
  CHECK(domain_dimension(Rectangle{}) == 2);
  CHECK(describe(Interval{0, 1}) == "interval:0,1");
}

TEST_CASE("radial field norms: finite below the critical exponent, divergent at it") {
  const auto V = VectorField::radial_power(2, Disk{0, 0, 1}, Point::Zero(), -0.5, 1.0, 2.5);
  // int_disk r^{-p/2} = 2 pi / (2 - p/2)
  const auto n = lp_norm(V, 2.5);
  CHECK_FALSE(n.diverged);
  CHECK(n.value == doctest::Approx(std::pow(2 * kPi / 0.75, 1 / 2.5)).epsilon(1e-6));
  NormOptions o;
  o.max_level = 80;
  CHECK(lp_norm(V, 4.0, o).diverged);
  CHECK(lp_norm(V, 4.0, o).label == "structural upper bound");
}

TEST_CASE("three-dimensional ball norm") {
  const auto V = VectorField::radial_power(3, Ball{Eigen::Vector3d::Zero(), 1}, Point::Zero(), -0.5, 1.0, 3.0);
  // int_ball r^{-3/2} = 4 pi / 1.5
  const auto n = lp_norm(V, 3.0);
  CHECK_FALSE(n.diverged);
  CHECK(n.value == doctest::Approx(std::pow(4 * kPi / 1.5, 1.0 / 3)).epsilon(1e-6));
}

TEST_CASE("step field: norm and mollified distance") {
  const auto V = VectorField::step(2, Rectangle{0, 0, 1, 1}, 0, 0.5, FieldValue(2.0, 0, 0));
  CHECK(lp_norm(V, 2.0).value == doctest::Approx(std::sqrt(2.0)).epsilon(1e-8));
  // Tensor mollification of a plane jump: |V_h - V|_2^2 = 4 h c.
  const auto Vh = mollify(V, 0.05);
  const auto d = lp_distance(Vh, V, 2.0);
  CHECK(d.value * d.value == doctest::Approx(4 * 0.05 * 0.10571801780643889).epsilon(1e-5));
}

TEST_CASE("field arithmetic") {
  const auto a = VectorField::constant(2, Rectangle{}, FieldValue(1, 2, 0));
  const auto b = a.scaled(Complex(0, 1)) + a;
  const auto v = b(Point(0.3, 0.3, 0));
  CHECK(v[0] == Complex(1, 1));
  CHECK_FALSE(b.is_real());
  CHECK(a.is_real());
}

TEST_CASE("admissibility reports") {
  auto u = unit_step(0.5);
  const auto r1 = admissibility(*u);
  CHECK(r1.admissible);
  CHECK(r1.condition == "H^{-1}_2");
  const auto good = VectorField::radial_power(2, Disk{0, 0, 1}, Point::Zero(), -0.5, 1.0, 2.5);
  const auto r2 = admissibility(good, 2);
  CHECK(r2.admissible);
  CHECK(r2.condition == "H^{-1}_{2+eps}");
  CHECK(r2.exponent == 2.5);
  const auto bad = VectorField::radial_power(2, Disk{0, 0, 1}, Point::Zero(), -0.9, 1.0, 2.5);
  const auto r3 = admissibility(bad, 2, TheoremTag::Dirichlet, 0.5);
  CHECK_FALSE(r3.admissible);
  const auto ball = VectorField::radial_power(3, Ball{}, Point::Zero(), -0.5, 1.0, 3.0);
  CHECK(admissibility(ball, 3).condition == "H^{-1}_n");
}
