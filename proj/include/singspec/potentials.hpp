#pragma once

#include <Eigen/Dense>

#include <array>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "singspec/common.hpp"

namespace singspec::potentials {

// ---------------------------------------------------------------------------
// 1D grids and primitives
// ---------------------------------------------------------------------------

class Grid1D {
 public:
  explicit Grid1D(std::vector<double> nodes);

  static Grid1D uniform(double a, double b, int cells);
  /// Uniform grid with the given interior sites inserted as nodes (a site
  /// closer than 1e-12 (b - a) to an existing node replaces it).
  static Grid1D uniform_with_sites(double a, double b, int cells, std::span<const double> sites);

  double a() const { return nodes_.front(); }
  double b() const { return nodes_.back(); }
  int cells() const { return static_cast<int>(nodes_.size()) - 1; }
  const std::vector<double>& nodes() const { return nodes_; }
  double node(int i) const { return nodes_[i]; }
  double width(int cell) const { return nodes_[cell + 1] - nodes_[cell]; }

  /// Cell containing x; nodes belong to the cell on their right, b to the last.
  int cell_of(double x) const;
  std::optional<int> node_index(double x, double rel_tol = 1e-12) const;
  /// Every cell split into `factor` equal parts.
  Grid1D refined(int factor) const;

 private:
  std::vector<double> nodes_;
};

/// Source of primitive values for the 1D engines.
class Profile1D {
 public:
  virtual ~Profile1D() = default;

  virtual double a() const = 0;
  virtual double b() const = 0;
  /// Points (including a and b) between which the profile is smooth.
  virtual std::vector<double> breakpoints() const = 0;
  /// Value at x; right limit at breakpoints, left limit at b.
  virtual Complex value(double x) const = 0;
  /// Value at x inside the open piece that starts at breakpoint index `piece`.
  virtual Complex value_in_piece(int piece, double x) const { (void)piece; return value(x); }
  virtual bool is_real() const = 0;
  virtual double sup_abs() const = 0;
  /// Polynomial degree per piece, or -1 when the pieces are not polynomials.
  virtual int polynomial_degree() const = 0;
};

struct Jump {
  double site;
  Complex height;
};

/// Square-integrable primitive u of a distributional potential q = u', given
/// by quadratic polynomials per grid cell (in the local variable x - x_i)
/// and the jump list at grid nodes.
class Primitive1D : public Profile1D {
 public:
  using Coeffs = std::array<Complex, 3>;

  Primitive1D(Grid1D grid, std::vector<Coeffs> cells, std::vector<Jump> jumps);

  /// u == c on [a, b].
  static Primitive1D constant(double a, double b, Complex c);

  const Grid1D& grid() const { return grid_; }
  const std::vector<Coeffs>& cells() const { return cells_; }
  const std::vector<Jump>& jumps() const { return jumps_; }

  double a() const override { return grid_.a(); }
  double b() const override { return grid_.b(); }
  std::vector<double> breakpoints() const override { return grid_.nodes(); }
  Complex value(double x) const override;
  Complex value_in_piece(int piece, double x) const override;
  Complex value_left(double x) const;
  bool is_real() const override;
  double sup_abs() const override;
  int polynomial_degree() const override { return 2; }

  Primitive1D shifted(Complex c) const;
  Primitive1D scaled(Complex c) const;
  /// u restricted-and-resampled on a finer grid containing this grid.
  Primitive1D on_grid(const Grid1D& finer) const;

  Complex integral() const;

 private:
  Grid1D grid_;
  std::vector<Coeffs> cells_;
  std::vector<Jump> jumps_;
};

using Closure1D = std::function<Complex(double)>;

struct Delta {
  double site;
  Complex strength;
};

/// u = base + sum strength_j H(x - site_j). base is sampled as a quadratic per
/// cell (exact for polynomial bases of degree <= 2).
Primitive1D primitive_from_deltas(const Closure1D& base, std::span<const Delta> deltas,
                                  const Grid1D& grid);

// ---------------------------------------------------------------------------
// Mollifier
// ---------------------------------------------------------------------------

/// C-infinity bump rho(t) = exp(-1/(1 - t^2)) / Z on (-1, 1), unit mass.
double bump(double t);
/// Incomplete moments  int_{-1}^{t} s^k rho(s) ds  for k = 0, 1, 2.
std::array<double, 3> bump_moments(double t);

/// Smooth approximant u_h = rho_h * u_ext, u_ext the even reflection of u at
/// the endpoints. Exact for the quadratic pieces of u.
class MollifiedPrimitive1D : public Profile1D {
 public:
  MollifiedPrimitive1D(std::shared_ptr<const Primitive1D> base, double h);

  double scale() const { return h_; }
  const Primitive1D& base() const { return *base_; }

  double a() const override { return base_->a(); }
  double b() const override { return base_->b(); }
  std::vector<double> breakpoints() const override;
  Complex value(double x) const override;
  bool is_real() const override { return base_->is_real(); }
  double sup_abs() const override { return base_->sup_abs(); }
  int polynomial_degree() const override { return -1; }

 private:
  std::shared_ptr<const Primitive1D> base_;
  double h_;
  std::vector<double> ext_nodes_;  // grid of u_ext on [2a - b, 2b - a]
};

/// Minimum distance between jump sites and endpoints.
double jump_clearance(const Primitive1D& u);

/// L_p norm of u over (a, b).
double lp_norm(const Profile1D& u, double p);
/// L_p norm of u - v; breakpoints of both are respected.
double lp_distance(const Profile1D& u, const Profile1D& v, double p);

class MollifiedFamily1D {
 public:
  MollifiedFamily1D(std::shared_ptr<const Primitive1D> base, std::vector<double> scales);

  const std::vector<double>& scales() const { return scales_; }
  const std::vector<std::shared_ptr<const MollifiedPrimitive1D>>& members() const { return members_; }
  /// |u_k - u|_{L2} per member.
  const std::vector<double>& distances() const { return distances_; }

 private:
  std::shared_ptr<const Primitive1D> base_;
  std::vector<double> scales_;
  std::vector<std::shared_ptr<const MollifiedPrimitive1D>> members_;
  std::vector<double> distances_;
};

// ---------------------------------------------------------------------------
// Vector fields in 1-3 dimensions
// ---------------------------------------------------------------------------

struct Interval {
  double a = 0, b = 1;
};
struct Rectangle {
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;
};
struct Disk {
  double cx = 0, cy = 0, r = 1;
};
struct Box3 {
  Eigen::Vector3d lo = Eigen::Vector3d::Zero(), hi = Eigen::Vector3d::Ones();
};
struct Ball {
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  double r = 1;
};
using Domain = std::variant<Interval, Rectangle, Disk, Box3, Ball>;

int domain_dimension(const Domain& d);
double domain_volume(const Domain& d);
std::string describe(const Domain& d);

using Point = Eigen::Vector3d;
using FieldValue = Eigen::Vector3cd;

struct FieldTerm {
  std::string label;
  std::function<FieldValue(const Point&)> evaluate;
  std::vector<Point> singular_sites;
  /// Planes x_axis = position across which the term jumps.
  std::vector<std::pair<int, double>> planes;
  /// Closed-form mollification at scale h, when available.
  std::function<FieldTerm(double)> mollified;
};

/// Field V with q = div V. Points and values always carry three components;
/// the unused ones are zero.
class VectorField {
 public:
  VectorField(int dimension, Domain domain, std::vector<FieldTerm> terms, double exponent);

  int dimension() const { return n_; }
  const Domain& domain() const { return domain_; }
  const std::vector<FieldTerm>& terms() const { return terms_; }
  double exponent() const { return p_; }
  std::vector<Point> singular_sites() const;
  bool is_real() const { return real_; }

  FieldValue operator()(const Point& x) const;
  VectorField scaled(Complex c) const;
  VectorField operator+(const VectorField& o) const;

  static VectorField zero(int n, Domain d);
  static VectorField constant(int n, Domain d, FieldValue c, double p = 2.0);
  /// V = height H(x_axis - position): q is a layer on the plane x_axis = position.
  static VectorField step(int n, Domain d, int axis, double position, FieldValue height,
                          double p = 2.0);
  /// V = amplitude |x - c|^(beta - 1) (x - c), so |V| = |amplitude| r^beta.
  static VectorField radial_power(int n, Domain d, Point center, double beta, Complex amplitude,
                                  double p);
  static VectorField custom(int n, Domain d, std::function<FieldValue(const Point&)> f,
                            std::vector<Point> singular_sites, double p, bool real,
                            std::string label = "custom");

 private:
  int n_;
  Domain domain_;
  std::vector<FieldTerm> terms_;
  double p_;
  bool real_ = true;
};

struct NormEstimate {
  double value = 0.0;
  bool diverged = false;
  int levels = 0;
  std::string label = "structural upper bound";
};

struct NormOptions {
  double rel_tol = 1e-8;
  int max_level = 160;
};

NormEstimate lp_norm(const VectorField& v, double p, const NormOptions& opts = {});
NormEstimate lp_distance(const VectorField& u, const VectorField& v, double p,
                         const NormOptions& opts = {});

/// Tensor-product bump mollification at scale h (no reflection; the field is
/// evaluated on the h-neighbourhood of the domain).
VectorField mollify(const VectorField& v, double h);
/// 1D mollification of a primitive, with even reflection at the endpoints.
MollifiedPrimitive1D mollify(std::shared_ptr<const Primitive1D> u, double h);

class MollifiedFamilyND {
 public:
  MollifiedFamilyND(VectorField base, std::vector<double> scales, double p);

  const std::vector<double>& scales() const { return scales_; }
  const std::vector<VectorField>& members() const { return members_; }
  const std::vector<NormEstimate>& distances() const { return distances_; }

 private:
  VectorField base_;
  std::vector<double> scales_;
  std::vector<VectorField> members_;
  std::vector<NormEstimate> distances_;
};

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

enum class TheoremTag { Dirichlet, Neumann };

struct AdmissibilityReport {
  int dimension = 1;
  TheoremTag tag = TheoremTag::Dirichlet;
  std::string condition;  ///< "H^{-1}_2", "H^{-1}_{2+eps}" or "H^{-1}_n"
  double exponent = 2.0;  ///< L_p exponent checked
  NormEstimate norm;
  bool admissible = false;
};

AdmissibilityReport admissibility(const Primitive1D& u, TheoremTag tag = TheoremTag::Dirichlet);
AdmissibilityReport admissibility(const VectorField& v, int n, TheoremTag tag = TheoremTag::Dirichlet,
                                  double eps = 0.5);

}  // namespace singspec::potentials
