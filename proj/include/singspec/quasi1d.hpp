#pragma once

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "singspec/forms.hpp"
#include "singspec/numerics.hpp"
#include "singspec/potentials.hpp"

namespace singspec::quasi1d {

using potentials::Grid1D;
using potentials::Profile1D;

/// (y, y^[1]) with the quasi-derivative y^[1] = y' - u y.
struct QuasiState {
  Complex y = 0.0;
  Complex y1 = 0.0;
};

struct TransferMatrix {
  Eigen::Matrix2cd matrix;
  Complex lambda;
  double width;

  Complex det() const { return matrix.determinant(); }
  QuasiState apply(const QuasiState& s) const {
    return {matrix(0, 0) * s.y + matrix(0, 1) * s.y1, matrix(1, 0) * s.y + matrix(1, 1) * s.y1};
  }
};

/// Exact propagator of  y' = u y + y1,  y1' = -u y1 - (u^2 + lambda) y  over a
/// cell of width h with constant u.
TransferMatrix cell_transfer(Complex u, Complex lambda, double h);

class BoundaryCondition1D {
 public:
  enum class Kind { Dirichlet, GeneralizedNeumann, ThirdKind, QuasiPeriodic };

  static BoundaryCondition1D dirichlet() { return BoundaryCondition1D(Kind::Dirichlet); }
  static BoundaryCondition1D generalized_neumann() { return BoundaryCondition1D(Kind::GeneralizedNeumann); }
  /// y^[1](a) = alpha y(a),  y^[1](b) = beta y(b).
  static BoundaryCondition1D third_kind(Complex alpha, Complex beta);
  /// y(a) = e^{i theta} y(b),  y^[1](a) = e^{i theta} y^[1](b).
  static BoundaryCondition1D quasi_periodic(double theta);
  /// Parses "dirichlet", "gneumann", "third:alpha,beta", "quasi:theta".
  static BoundaryCondition1D parse(const std::string& text);

  Kind kind() const { return kind_; }
  Complex alpha() const { return alpha_; }
  Complex beta() const { return beta_; }
  double theta() const { return theta_; }
  /// Rows act on (y(a), y^[1](a), y(b), y^[1](b)).
  Eigen::Matrix<Complex, 2, 4> matrix() const;
  bool real_data() const { return alpha_.imag() == 0.0 && beta_.imag() == 0.0; }
  std::string describe() const;

 private:
  explicit BoundaryCondition1D(Kind k) : kind_(k) {}
  Kind kind_;
  Complex alpha_ = 0.0, beta_ = 0.0;
  double theta_ = 0.0;
};

struct ShootingOptions {
  /// Panels are refined until the variation of u across each one is at most
  /// this times max(1, sup|u|).
  double panel_variation = 1e-3;
};

/// Determinant of the boundary system for the fundamental matrix, stored as
/// mantissa * exp(log_scale).
struct Characteristic {
  Complex mantissa = 0.0;
  double log_scale = 0.0;
  /// |det| / (|row 1| |row 2|) of the normalized boundary system.
  double relative_residual = 0.0;

  Complex value() const { return mantissa * std::exp(log_scale); }
};

/// Samples of a propagated solution; state_i * exp(log_scale_i) is the true state.
struct Trajectory {
  std::vector<double> x;
  std::vector<QuasiState> state;
  std::vector<double> log_scale;
};

/// Values of a solution at both sides of an interior point, computed by
/// forward propagation from a and backward propagation from b.
struct SiteLimits {
  double site = 0.0;
  QuasiState left;       ///< forward solution at site
  QuasiState right;      ///< backward solution at site, scaled to match left.y
  Complex u_left = 0.0;  ///< u(site - 0)
  Complex u_right = 0.0;
  Complex derivative_left() const { return left.y1 + u_left * left.y; }
  Complex derivative_right() const { return right.y1 + u_right * right.y; }
};

class ShootingEngine {
 public:
  explicit ShootingEngine(std::shared_ptr<const Profile1D> profile, ShootingOptions opts = {});

  const Profile1D& profile() const { return *profile_; }
  std::size_t panel_count() const { return panels_.size(); }

  Characteristic characteristic(Complex lambda, const BoundaryCondition1D& bc) const;
  /// Fundamental matrix over (a, b): T = exp(log_scale) * matrix.
  std::pair<Eigen::Matrix2cd, double> fundamental(Complex lambda) const;
  /// Solution from `init` at a, sampled at every sub-step boundary.
  Trajectory propagate(Complex lambda, const QuasiState& init) const;
  /// Solution from `init` at a, sampled at the given increasing points.
  Trajectory evaluate(Complex lambda, const QuasiState& init, std::span<const double> points) const;
  /// Initial state at a of the eigenfunction for an eigenvalue lambda.
  QuasiState eigen_initial(Complex lambda, const BoundaryCondition1D& bc) const;
  SiteLimits site_limits(Complex lambda, const BoundaryCondition1D& bc, double site) const;

 private:
  struct Panel {
    double x0, w;
    Complex u;
    double slope;  // |du/dx| estimate
  };
  int substeps(const Panel& p, Complex lambda) const;

  std::shared_ptr<const Profile1D> profile_;
  ShootingOptions opts_;
  std::vector<Panel> panels_;
};

struct Eigenfunction1D {
  std::vector<double> x;
  std::vector<Complex> y;
  std::vector<Complex> y1;
  int sign_changes = 0;
};

enum class Engine { Shooting, Galerkin };
const char* engine_name(Engine e);

struct Spectrum1D {
  std::vector<Complex> eigenvalues;
  std::vector<Eigenfunction1D> eigenfunctions;
  std::vector<double> residuals;
  std::vector<int> cluster;
  std::vector<bool> refined;
  Engine engine = Engine::Shooting;
};

struct SelfAdjointOptions {
  ShootingOptions shooting;
  bool eigenfunctions = true;
  /// Verify the Dirichlet oscillation count of every eigenfunction.
  bool verify_oscillation = true;
};

/// Rigorous lower bound on the spectrum of the self-adjoint problem.
double spectrum_lower_bound(const Profile1D& u, const BoundaryCondition1D& bc);

/// The `count` smallest eigenvalues of the self-adjoint problem (real u and
/// real boundary data), bracketed on the characteristic function.
Spectrum1D eigenvalues_selfadjoint(std::shared_ptr<const Profile1D> u, const BoundaryCondition1D& bc,
                                   std::size_t count, const SelfAdjointOptions& opts = {});

/// Galerkin forms of l[y] on continuous piecewise-linear functions over `mesh`.
AssembledForms galerkin_1d(const Profile1D& u, const BoundaryCondition1D& bc, const Grid1D& mesh);

struct GalerkinOptions {
  numerics::SolverOptions solver;
  double tol = 1e-9;
};

/// Smallest-real-part eigenpairs of the Galerkin pencil.
Spectrum1D galerkin_spectrum(const Profile1D& u, const BoundaryCondition1D& bc, const Grid1D& mesh,
                             std::size_t count, const GalerkinOptions& opts = {});

struct ComplexOptions {
  int mesh_cells = 400;
  ShootingOptions shooting;
  int max_newton = 60;
  double target_residual = 1e-8;
};

/// Eigenvalues of smallest real part for general (complex) data: dense
/// Galerkin solve followed by Newton refinement on the characteristic function.
Spectrum1D eigenvalues_complex(std::shared_ptr<const Profile1D> u, const BoundaryCondition1D& bc,
                               std::size_t count, const ComplexOptions& opts = {});

}  // namespace singspec::quasi1d
