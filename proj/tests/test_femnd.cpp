#include "doctest.h"
#include "oracles.hpp"

#include "singspec/femnd.hpp"

#include <cmath>
#include <sstream>

using namespace singspec;
using namespace singspec::femnd;
using potentials::VectorField;

TEST_CASE("rectangle mesh: counts, orientation and area") {
  const auto m = mesh_rectangle(2.0, 3.0, 4, 5);
  CHECK(m.vertices.size() == 30);
  CHECK(m.triangles.size() == 40);
  CHECK(m.area() == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(m.boundary_count() == 2 * (4 + 5));
  CHECK(m.boundary_edges().size() == 2 * (4 + 5));
  CHECK_NOTHROW(m.validate());
  CHECK_THROWS_AS(mesh_rectangle(1, 1, 1, 4), ConfigError);
}

TEST_CASE("disk mesh: refinement keeps boundary vertices on the circle") {
  for (int level : {0, 1, 3}) {
    const auto m = mesh_disk(1.5, level);
    CHECK(m.triangles.size() == 6u << (2 * level));
    CHECK_NOTHROW(m.validate());
    for (std::size_t i = 0; i < m.vertices.size(); ++i)
      if (m.boundary[i]) CHECK(m.vertices[i].norm() == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(m.boundary_count() == 6u << level);
  }
  const double a4 = mesh_disk(1.0, 4).area(), a5 = mesh_disk(1.0, 5).area();
  CHECK(std::abs(a5 - kPi) < std::abs(a4 - kPi));
}

TEST_CASE("mesh file format") {
  std::ostringstream os;
  write_mesh(os, mesh_rectangle(1, 1, 2, 2));
  const auto s = os.str();
  CHECK(s.rfind("# singspec mesh", 0) == 0);
  CHECK(s.find("vertices 9") != std::string::npos);
  CHECK(s.find("triangles 8") != std::string::npos);
}

TEST_CASE("free Dirichlet and Neumann square spectra") {
  const auto m = mesh_rectangle(oracle::pi, oracle::pi, 32, 32);
  const auto d = lowest_eigenpairs(assemble_forms(m, nullptr, Space::Dirichlet), 5);
  const auto dref = oracle::square_dirichlet(5);
  for (int i = 0; i < 5; ++i) CHECK(std::abs(d.values[i].real() / dref[i] - 1) < 0.02);
  const auto nf = assemble_forms(m, nullptr, Space::Neumann);
  const auto n = lowest_eigenpairs(nf, 5);
  CHECK(std::abs(n.values[0]) < 1e-9);
  const auto nref = oracle::square_neumann(5);
  for (int i = 1; i < 5; ++i) CHECK(std::abs(n.values[i].real() / nref[i] - 1) < 0.02);
  CHECK(boundary_flux(n, 0, nf, m, nullptr) <= 1e-6);
  CHECK_THROWS_AS(boundary_flux(d, 0, assemble_forms(m, nullptr, Space::Dirichlet), m, nullptr), ConfigError);
}

TEST_CASE("constant field leaves the Dirichlet forms unchanged") {
  // div V = 0, and int V . grad(phi_i phi_j) vanishes when phi_i phi_j = 0 on the boundary.
  const auto m = mesh_rectangle(oracle::pi, oracle::pi, 24, 24);
  const auto V = VectorField::constant(2, potentials::Rectangle{0, 0, oracle::pi, oracle::pi},
                                       potentials::FieldValue(0.7, -0.3, 0.0));
  const auto f0 = assemble_forms(m, nullptr, Space::Dirichlet);
  const auto f1 = assemble_forms(m, &V, Space::Dirichlet);
  CHECK(f1.B.norm() <= 1e-12 * f1.A.norm());
  const auto e0 = lowest_eigenpairs(f0, 4);
  const auto e1 = lowest_eigenpairs(f1, 4);
  for (int i = 0; i < 4; ++i) CHECK(std::abs(e1.values[i] - e0.values[i]) < 1e-8 * std::abs(e0.values[i]));
}

TEST_CASE("singular radial field: A + B is exactly Hermitian") {
  const auto m = mesh_disk(1.0, 3);
  const auto V = VectorField::radial_power(2, potentials::Disk{0, 0, 1}, potentials::Point::Zero(), -0.5, 1.0, 2.5);
  const auto f = assemble_forms(m, &V, Space::Dirichlet);
  const Eigen::SparseMatrix<Complex> T = f.total();
  const Eigen::SparseMatrix<Complex> Ta = T.adjoint();
  CHECK((T - Ta).norm() == 0.0);
  CHECK(f.hermitian);
}

TEST_CASE("complex field gives a non-Hermitian pencil") {
  const auto m = mesh_rectangle(1, 1, 6, 6);
  const auto V = VectorField::constant(2, potentials::Rectangle{}, potentials::FieldValue(Complex(0, 1), 0, 0));
  const auto f = assemble_forms(m, &V, Space::Neumann);
  CHECK_FALSE(f.hermitian);
  CHECK(f.size() == 49);
}
