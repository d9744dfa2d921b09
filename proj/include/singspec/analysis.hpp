#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "singspec/femnd.hpp"
#include "singspec/forms.hpp"
#include "singspec/numerics.hpp"
#include "singspec/potentials.hpp"
#include "singspec/quasi1d.hpp"

namespace singspec::analysis {

// ---------------------------------------------------------------------------
// Counting functions and Weyl asymptotics
// ---------------------------------------------------------------------------

/// N(r) = #{lambda_s <= r} over a finite sorted list.
class CountingFunction {
 public:
  explicit CountingFunction(std::vector<double> eigenvalues);

  std::size_t operator()(double r) const;
  /// N(r - 0) = #{lambda_s < r}.
  std::size_t left_limit(double r) const;
  const std::vector<double>& eigenvalues() const { return values_; }
  double top() const { return values_.empty() ? 0.0 : values_.back(); }

 private:
  std::vector<double> values_;
};

/// Volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// Eigenvalues <= up_to of the Laplacian on a box with the given side
/// lengths, in closed form (sums of (k pi / side)^2).
std::vector<double> free_box_spectrum(std::span<const double> sides, Space space, double up_to);

struct WeylProfile {
  int dimension = 1;
  double volume = 0.0;
  std::vector<double> radii;
  std::vector<double> counts;
  std::vector<double> leading;    ///< (2 pi)^-n v_n |Omega| r^{n/2}
  std::vector<double> remainder;  ///< (N(r) - leading) / r^{(n-1)/2}

  double max_abs_remainder() const;
};

/// Throws ConfigError for radii outside (0, 0.5 * lambda_max].
WeylProfile weyl_profile(std::span<const double> spectrum, int n, double volume, std::span<const double> radii,
                         double resolved_fraction = 0.5);

// ---------------------------------------------------------------------------
// Two-spectrum sandwich
// ---------------------------------------------------------------------------

struct SandwichRow {
  double r = 0.0;
  double lhs = 0.0;  ///< |N(r, free) - N(r, perturbed)|
  double rhs = 0.0;  ///< C (N(r + c r^theta, free) - N(r - c r^theta, free))
};

struct SandwichResult {
  double theta = 0.5;
  double C = 0.0;
  double c = 0.0;
  std::vector<SandwichRow> rows;
  bool verdict = false;
};

/// Fits the smallest window constant c for which every radius with lhs > 0
/// sees a free eigenvalue in (r - c r^theta, r + c r^theta], then the smallest
/// C. Radii are augmented by both one-sided limits at every eigenvalue of
/// either spectrum inside the range. Throws ConfigError when either spectrum
/// ends before max(radii) + c max(radii)^theta.
SandwichResult sandwich_check(const CountingFunction& perturbed, const CountingFunction& free, double theta,
                              std::span<const double> radii);

// ---------------------------------------------------------------------------
// Convergence sweeps
// ---------------------------------------------------------------------------

struct ConvergenceRow {
  double scale = 0.0;
  double norm = 0.0;          ///< |u_k - u| or |V_k - V|_p
  std::vector<double> gaps;   ///< |lambda_{s,k} - lambda_s|
};

struct ConvergenceTable {
  std::vector<double> reference;
  std::vector<ConvergenceRow> rows;
  double slope = 0.0;        ///< log-log fit of gaps[0] against norm
  bool at_floor = false;     ///< fewer than two rows above the floor: no rate reported
  bool complete = true;      ///< false when a scale failed; rows hold the prefix
  std::string failure;
};

/// Eigenvalues (ascending real part) of the problem for member k.
using ScaleSolver = std::function<std::vector<Complex>(std::size_t k)>;

/// Scales must be decreasing. Gaps at or below `floor` are excluded from the
/// fit. Members are solved concurrently; a failing member truncates the table
/// to the rows before it.
ConvergenceTable convergence_rates(std::span<const double> scales, std::span<const double> norms,
                                   std::span<const Complex> reference, const ScaleSolver& solve,
                                   double floor = 1e-10);

/// Least-squares slope of log y against log x.
double loglog_slope(std::span<const double> x, std::span<const double> y);

/// Mollifier sweep for a 1D primitive with the shooting engine on every
/// member and on the limit.
ConvergenceTable mollifier_sweep_1d(std::shared_ptr<const potentials::Primitive1D> u,
                                    const quasi1d::BoundaryCondition1D& bc, std::span<const double> scales,
                                    std::size_t count, double floor = 1e-10);

/// Mollifier sweep for a 2D field on a fixed mesh; the limit uses the singular
/// assembly on the same mesh.
ConvergenceTable mollifier_sweep_2d(const potentials::VectorField& V, const femnd::Mesh2D& mesh, Space space,
                                    std::span<const double> scales, std::size_t count, double p,
                                    double floor = 1e-10);

// ---------------------------------------------------------------------------
// Resolvent convergence gauge
// ---------------------------------------------------------------------------

struct ResolventOptions {
  double rel_tol = 1e-10;
  int max_iterations = 2000;
  unsigned seed = 20240607u;
};

/// Largest singular value of M^{1/2} [(K_k + rho M)^{-1} - (K + rho M)^{-1}] M^{1/2}
/// with K = A + B of each set of forms. The forms must share M.
double resolvent_gap(const AssembledForms& forms_k, const AssembledForms& forms_limit, double rho,
                     const ResolventOptions& opts = {});

// ---------------------------------------------------------------------------
// Subordination
// ---------------------------------------------------------------------------

/// Discrete T0 (free operator) eigenbasis with the perturbation expressed in it.
struct SubordinationProblem {
  Eigen::VectorXd t0_values;     ///< positive eigenvalues of T0
  Eigen::MatrixXcd perturbation; ///< E^* B E, B the perturbation form
};

/// T0 = free Dirichlet operator on `mesh`, B = Galerkin form of q = u'.
SubordinationProblem subordination_problem_1d(const potentials::Profile1D& u, const potentials::Grid1D& mesh);

/// |(Q f, f)| / (T0^theta f, f) for coefficients c of f in the T0 eigenbasis.
double subordination_ratio(const SubordinationProblem& p, double theta, const Eigen::VectorXcd& c);

struct SubordinationEstimate {
  double value = 0.0;
  std::size_t samples = 0;
  unsigned seed = 0;
  double theta = 0.0;
};

/// Randomized maximization of the ratio: `samples` random coefficient vectors,
/// each followed by local ascent.
SubordinationEstimate subordination_estimate(const SubordinationProblem& p, double theta, std::size_t samples,
                                             unsigned seed);

// ---------------------------------------------------------------------------
// Abel summation
// ---------------------------------------------------------------------------

struct Eigensystem {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd right;  ///< y_k
  Eigen::MatrixXcd left;   ///< z_k with z_k^* M y_j = delta_kj
  Eigen::SparseMatrix<Complex> M;
  std::vector<int> cluster;
};

Eigensystem eigensystem_from(const numerics::Eigenpairs& e, const Eigen::SparseMatrix<Complex>& M);

struct AbelExperiment {
  double alpha = 1.0;
  std::size_t modes = 0;          ///< after extending to cluster ends
  std::vector<double> t;
  std::vector<double> errors;     ///< |f(t) - f|_M
  double truncation_error = 0.0;  ///< t -> 0 limit
  double biorthogonality = 0.0;   ///< max |z_k^* M y_j - delta_kj| over used modes
  bool branch_violation = false;  ///< Re(lambda^alpha) <= 0 in the upper half of the modes
};

/// f(t) = sum_k (z_k^* M f) exp(-lambda_k^alpha t) y_k on the principal branch.
AbelExperiment abel_reconstruct(const Eigensystem& sys, const Eigen::VectorXcd& f, double alpha,
                                std::span<const double> t, std::size_t truncation);

}  // namespace singspec::analysis
