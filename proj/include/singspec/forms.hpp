#pragma once

#include <Eigen/Sparse>

#include "singspec/common.hpp"

namespace singspec {

/// Boundary space of a Galerkin discretization.
enum class Space {
  Dirichlet,      ///< interior nodes only
  Neumann,        ///< all nodes, natural condition on the quasi-derivative
  ThirdKind,      ///< all nodes plus boundary point terms (1D)
  QuasiPeriodic,  ///< last node identified with the first up to a phase (1D)
};

const char* space_name(Space s);

/// Matrices of a Galerkin discretization of  l[y] = (y', y') + (potential part)
/// on a finite element space. The operator pencil is (A + B, M).
struct AssembledForms {
  using SpMat = Eigen::SparseMatrix<Complex>;

  SpMat A;  ///< stiffness (gradient part)
  SpMat B;  ///< singular potential part, including boundary point terms
  SpMat M;  ///< mass
  Space space = Space::Dirichlet;
  int dimension = 1;
  /// Maps degree-of-freedom vectors to values at every mesh node.
  SpMat prolongation;
  /// True when the data make A + B Hermitian (real field, real boundary data).
  bool hermitian = true;

  SpMat total() const { return A + B; }
  Eigen::Index size() const { return M.rows(); }
};

}  // namespace singspec
