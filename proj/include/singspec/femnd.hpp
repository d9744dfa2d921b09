#pragma once

#include <Eigen/Dense>

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "singspec/forms.hpp"
#include "singspec/numerics.hpp"
#include "singspec/potentials.hpp"

namespace singspec::femnd {

/// Conforming triangulation with counterclockwise triangles.
struct Mesh2D {
  std::vector<Eigen::Vector2d> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<bool> boundary;
  std::string descriptor;  ///< "rect:Lx,Ly,nx,ny" or "disk:R,level"

  double triangle_area(std::size_t t) const;
  double area() const;
  /// Edges that belong to exactly one triangle, oriented counterclockwise.
  std::vector<std::array<int, 2>> boundary_edges() const;
  std::size_t boundary_count() const;
  /// Throws unless areas are positive, edges are shared by at most two
  /// triangles and the boundary flags match the boundary edges.
  void validate() const;
};

/// Structured triangulation of [0, Lx] x [0, Ly]; each cell is split along the
/// diagonal from its lower-left to its upper-right corner.
Mesh2D mesh_rectangle(double Lx, double Ly, int nx, int ny);

/// Hexagon fan refined `level` times by edge midpoints; boundary midpoints are
/// moved onto the circle.
Mesh2D mesh_disk(double R, int level, Eigen::Vector2d center = Eigen::Vector2d::Zero());

/// Flat text: header lines starting with '#', then "vertices n", n lines
/// "x y boundary", then "triangles m", m lines "i j k".
void write_mesh(std::ostream& os, const Mesh2D& mesh);

struct AssemblyOptions {
  int quadrature_order = 2;     ///< triangle rule for regular triangles (1, 2 or 5)
  double singular_tol = 1e-6;   ///< agreement between graded levels, per entry
  int max_refinement = 40;
};

/// P1 forms of  l[u] = (grad u, grad u) - (grad u, V u) - (V u, grad u)  on
/// the Dirichlet (interior vertices) or Neumann (all vertices) space.
/// B_ij = -grad phi_j . m_i - grad phi_i . m_j  with  m_i = int V phi_i.
AssembledForms assemble_forms(const Mesh2D& mesh, const potentials::VectorField* V, Space space,
                              const AssemblyOptions& opts = {});

struct SpectrumND {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd vectors;  ///< degrees of freedom, M-normalized
  Eigen::MatrixXcd nodal;    ///< values at every mesh vertex
  Eigen::VectorXd residuals;
  std::vector<int> cluster;
  bool dense = true;
};

SpectrumND lowest_eigenpairs(const AssembledForms& forms, Eigen::Index k,
                             const numerics::SolverOptions& opts = {}, double tol = 1e-9);

/// int over the boundary of |(grad f - V f) . n| for eigenvector `index`.
double boundary_flux(const SpectrumND& spectrum, Eigen::Index index, const AssembledForms& forms,
                     const Mesh2D& mesh, const potentials::VectorField* V);

}  // namespace singspec::femnd
