#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include "singspec/common.hpp"

namespace singspec::numerics {

// ---------------------------------------------------------------------------
// Quadrature
// ---------------------------------------------------------------------------

template <int Dim>
struct QuadratureRule {
  using Point = Eigen::Matrix<double, Dim, 1>;
  std::vector<Point> nodes;
  std::vector<double> weights;
  int order = 0;  ///< highest total polynomial degree integrated exactly
};

/// n-point Gauss-Legendre rule on [-1, 1].
QuadratureRule<1> gauss_legendre(int n);

/// Rules on the reference triangle (0,0), (1,0), (0,1). order 1: centroid,
/// order 2: three-point Gauss rule, order 5: seven-point rule. All weights
/// are positive and sum to 1/2.
QuadratureRule<2> triangle_rule(int order);

template <class T>
double magnitude(const T& v) {
  if constexpr (std::is_arithmetic_v<T>) {
    return std::abs(v);
  } else if constexpr (std::is_same_v<T, Complex>) {
    return std::abs(v);
  } else {
    return v.norm();
  }
}

template <class T>
struct IntegrationResult {
  T value{};
  double error = 0.0;
  bool converged = false;
};

namespace detail {

// Gauss-Kronrod 7/15 nodes and weights (QUADPACK qk15).
inline constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
auto gk15(F& f, double a, double b) {
  using T = std::decay_t<decltype(f(a))>;
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const T fc = f(c);
  T kronrod = fc * kWgk[7];
  T gauss = fc * kWg[3];
  for (int j = 0; j < 7; ++j) {
    const double dx = h * kXgk[j];
    const T f1 = f(c - dx);
    const T f2 = f(c + dx);
    kronrod = kronrod + (f1 + f2) * kWgk[j];
    if (j % 2 == 1) gauss = gauss + (f1 + f2) * kWg[j / 2];
  }
  kronrod = kronrod * h;
  gauss = gauss * h;
  return std::pair<T, double>{kronrod, magnitude(T(kronrod - gauss))};
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod integration of f over [a, b]. f may return
/// double, Complex, or a fixed-size Eigen vector.
template <class F>
auto integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-12,
                        double abs_tol = 1e-300, int max_intervals = 4000) {
  using T = std::decay_t<decltype(f(a))>;
  struct Piece {
    double a, b;
    T value;
    double error;
    bool operator<(const Piece& o) const { return error < o.error; }
  };
  std::priority_queue<Piece> queue;
  auto [v0, e0] = detail::gk15(f, a, b);
  queue.push({a, b, v0, e0});
  T total = v0;
  double err = e0;
  IntegrationResult<T> result;
  int intervals = 1;
  while (err > std::max(abs_tol, rel_tol * magnitude(total)) && intervals < max_intervals) {
    Piece p = queue.top();
    queue.pop();
    const double mid = 0.5 * (p.a + p.b);
    if (!(mid > p.a && mid < p.b)) {  // interval at machine resolution
      queue.push(p);
      break;
    }
    auto [vl, el] = detail::gk15(f, p.a, mid);
    auto [vr, er] = detail::gk15(f, mid, p.b);
    total = total - p.value + vl + vr;
    err = err - p.error + el + er;
    queue.push({p.a, mid, vl, el});
    queue.push({mid, p.b, vr, er});
    ++intervals;
  }
  // Re-sum to remove drift from incremental updates.
  T sum{};
  if constexpr (!std::is_arithmetic_v<T> && !std::is_same_v<T, Complex>) sum.setZero();
  double esum = 0.0;
  while (!queue.empty()) {
    sum = sum + queue.top().value;
    esum += queue.top().error;
    queue.pop();
  }
  result.value = sum;
  result.error = esum;
  result.converged = esum <= std::max(abs_tol, rel_tol * magnitude(sum));
  return result;
}

/// Integrates over [a, b] split at the given interior breakpoints.
template <class F>
auto integrate_piecewise(F&& f, std::span<const double> points, double rel_tol = 1e-12,
                         double abs_tol = 1e-300) {
  using T = std::decay_t<decltype(f(points[0]))>;
  IntegrationResult<T> total;
  if constexpr (!std::is_arithmetic_v<T> && !std::is_same_v<T, Complex>) total.value.setZero();
  total.converged = true;
  for (std::size_t i = 0; i + 1 < points.size(); ++i) {
    if (!(points[i + 1] > points[i])) continue;
    auto r = integrate_adaptive(f, points[i], points[i + 1], rel_tol, abs_tol);
    total.value = total.value + r.value;
    total.error += r.error;
    total.converged = total.converged && r.converged;
  }
  return total;
}

// ---------------------------------------------------------------------------
// Graded tensor-product cubature toward singular sets
// ---------------------------------------------------------------------------

template <int Dim>
struct Box {
  using Point = Eigen::Matrix<double, Dim, 1>;
  Point lo, hi;

  bool intersects(const Box& o, double slack = 0.0) const {
    for (int d = 0; d < Dim; ++d) {
      if (o.hi[d] < lo[d] - slack || o.lo[d] > hi[d] + slack) return false;
    }
    return true;
  }
  static Box point(const Point& p) { return {p, p}; }
};

struct GradedOptions {
  int base_cells = 4;      ///< per axis
  int gauss_points = 6;    ///< per axis on every leaf
  double rel_tol = 1e-8;   ///< consecutive-level agreement
  int max_level = 160;
};

template <class T>
struct GradedEstimate {
  T value{};
  int levels = 0;
  bool converged = false;
  bool diverged = false;
};

/// Integrates f over a box with geometric refinement (ratio 1/2) of every
/// cell that touches one of the singular sets. A singular set is a box; axes
/// along which it is degenerate are the refinement axes (a point refines all
/// axes, the line r = 0 of a polar map refines only r). Converged when two
/// consecutive levels agree to rel_tol; diverged when the level-to-level
/// increments stop shrinking or the level cap is hit.
template <int Dim, class F>
auto integrate_graded(F&& f, const Box<Dim>& domain, std::span<const Box<Dim>> singular,
                      const GradedOptions& opts = {}) {
  using Point = typename Box<Dim>::Point;
  using T = std::decay_t<decltype(f(Point{}))>;
  const auto rule = gauss_legendre(opts.gauss_points);
  const int q = opts.gauss_points;

  auto zero = []() {
    T z{};
    if constexpr (!std::is_arithmetic_v<T> && !std::is_same_v<T, Complex>) z.setZero();
    return z;
  };

  auto cell_integral = [&](const Box<Dim>& c) {
    T sum = zero();
    Point half = 0.5 * (c.hi - c.lo);
    Point mid = 0.5 * (c.hi + c.lo);
    double jac = 1.0;
    for (int d = 0; d < Dim; ++d) jac *= half[d];
    std::array<int, Dim> idx{};
    int total = 1;
    for (int d = 0; d < Dim; ++d) total *= q;
    for (int n = 0; n < total; ++n) {
      int r = n;
      double w = jac;
      Point x;
      for (int d = 0; d < Dim; ++d) {
        idx[d] = r % q;
        r /= q;
        x[d] = mid[d] + half[d] * rule.nodes[idx[d]][0];
        w *= rule.weights[idx[d]];
      }
      sum = sum + f(x) * w;
    }
    return sum;
  };

  auto touches = [&](const Box<Dim>& c) {
    for (const auto& s : singular) {
      if (c.intersects(s, 1e-14 * (c.hi - c.lo).norm())) return true;
    }
    return false;
  };

  // Axes refined toward the sets touching a cell.
  auto refine_mask = [&](const Box<Dim>& c) {
    std::array<bool, Dim> mask{};
    for (const auto& s : singular) {
      if (!c.intersects(s, 1e-14 * (c.hi - c.lo).norm())) continue;
      for (int d = 0; d < Dim; ++d) {
        if (s.hi[d] - s.lo[d] <= 1e-300 + 0.0) mask[d] = true;
      }
    }
    bool any = false;
    for (bool m : mask) any = any || m;
    if (!any) mask.fill(true);
    return mask;
  };

  struct Active {
    Box<Dim> box;
    T value;
  };

  GradedEstimate<T> est;
  T regular = zero();
  std::vector<Active> active;
  {
    const int nb = opts.base_cells;
    int total = 1;
    for (int d = 0; d < Dim; ++d) total *= nb;
    Point step = (domain.hi - domain.lo) / nb;
    for (int n = 0; n < total; ++n) {
      int r = n;
      Box<Dim> c;
      for (int d = 0; d < Dim; ++d) {
        const int i = r % nb;
        r /= nb;
        c.lo[d] = domain.lo[d] + i * step[d];
        c.hi[d] = (i + 1 == nb) ? domain.hi[d] : domain.lo[d] + (i + 1) * step[d];
      }
      T v = cell_integral(c);
      if (touches(c)) {
        active.push_back({c, v});
      } else {
        regular = regular + v;
      }
    }
  }
  auto current = [&]() {
    T s = regular;
    for (const auto& a : active) s = s + a.value;
    return s;
  };
  T previous = current();
  std::vector<double> increments;
  if (active.empty()) {
    est.value = previous;
    est.converged = true;
    return est;
  }
  for (int level = 1; level <= opts.max_level; ++level) {
    std::vector<Active> next;
    for (const auto& a : active) {
      const auto mask = refine_mask(a.box);
      int nsplit = 0;
      for (bool m : mask) nsplit += m ? 1 : 0;
      for (int child = 0; child < (1 << nsplit); ++child) {
        Box<Dim> c = a.box;
        int bit = 0;
        for (int d = 0; d < Dim; ++d) {
          if (!mask[d]) continue;
          const double m = 0.5 * (a.box.lo[d] + a.box.hi[d]);
          if ((child >> bit) & 1) {
            c.lo[d] = m;
          } else {
            c.hi[d] = m;
          }
          ++bit;
        }
        T v = cell_integral(c);
        if (touches(c)) {
          next.push_back({c, v});
        } else {
          regular = regular + v;
        }
      }
    }
    active = std::move(next);
    T now = current();
    est.levels = level;
    const double inc = magnitude(T(now - previous));
    const double scale = magnitude(now);
    if (!std::isfinite(scale) || !std::isfinite(inc)) {
      est.value = now;
      est.diverged = true;
      return est;
    }
    increments.push_back(inc);
    previous = now;
    if (active.empty() || inc <= opts.rel_tol * scale) {
      est.value = now;
      est.converged = true;
      return est;
    }
    const std::size_t w = 8;
    if (increments.size() > 2 * w) {
      const double a0 = increments[increments.size() - 1 - w];
      const double ratio = std::pow(inc / a0, 1.0 / static_cast<double>(w));
      if (ratio >= 0.97) {
        est.value = now;
        est.diverged = true;
        return est;
      }
    }
  }
  est.value = previous;
  est.diverged = true;
  return est;
}

// ---------------------------------------------------------------------------
// Root bracketing
// ---------------------------------------------------------------------------

struct Root {
  double value = 0.0;
  int multiplicity = 1;
  bool tangent = false;  ///< found as a touching zero (no sign change)
};

struct RootScan {
  std::vector<Root> roots;
  bool complete = true;  ///< false when max_count stopped the scan early
  /// Scan abscissa after the last accepted root; resume scanning from here.
  double continuation = std::numeric_limits<double>::quiet_NaN();
};

struct RootOptions {
  double rel_tol = 1e-12;
  /// A local extremum of |f| without sign change counts as a double root when
  /// its refined value is below this fraction of the neighbouring samples.
  double tangency_tol = 1e-8;
};

/// Finds roots of a real function by scanning the given increasing abscissae,
/// bisecting sign changes and refining tangential touches. Roots are returned
/// in increasing order; multiplicities count toward max_count.
RootScan bracketed_roots(const std::function<double(double)>& f, std::span<const double> scan,
                         std::size_t max_count, const RootOptions& opts = {});

/// Uniform scan of [lo, hi] with the given step.
RootScan bracketed_roots(const std::function<double(double)>& f, double lo, double hi,
                         double step, std::size_t max_count, const RootOptions& opts = {});

// ---------------------------------------------------------------------------
// Generalized eigenproblems
// ---------------------------------------------------------------------------

template <class Scalar>
struct PencilProblem {
  Eigen::SparseMatrix<Scalar> K;  ///< left matrix
  Eigen::SparseMatrix<Scalar> M;  ///< Hermitian positive definite mass
  Eigen::Index count = 1;
  double tol = 1e-8;
};

struct SolverOptions {
  Eigen::Index dense_cap = 600;       ///< dense solve up to this many unknowns
  Eigen::Index dimension_cap = 400000;
  double shift_hint = -1.0;           ///< starting shift for the inertia search
  int block_size = 4;
  unsigned seed = 20240607u;
  bool force_dense = false;
};

/// Eigenpairs of K v = lambda M v sorted by ascending real part (ties by
/// imaginary part). Right vectors are M-normalized; left vectors satisfy
/// left_k^* M right_j = delta_jk. cluster[i] is shared by eigenvalues within
/// 1e-8 (1 + |lambda|) of each other.
struct Eigenpairs {
  Eigen::VectorXcd values;
  Eigen::MatrixXcd right;
  Eigen::MatrixXcd left;
  Eigen::VectorXd residuals;  ///< backward errors |Kv - lambda M v| / ((|K| + |lambda||M|)|v|)
  std::vector<int> cluster;
  bool defective = false;
  bool dense = true;

  Eigen::Index size() const { return values.size(); }
  bool clustered(Eigen::Index i) const;
};

inline constexpr double kClusterTol = 1e-8;

/// Sorts indices by ascending real part, ties (within the cluster tolerance)
/// by ascending imaginary part.
std::vector<Eigen::Index> spectral_order(const Eigen::VectorXcd& values);

/// Assigns cluster ids to eigenvalues already in spectral order.
std::vector<int> cluster_ids(const Eigen::VectorXcd& values);

template <class Scalar>
Eigenpairs hermitian_pencil_solve(const PencilProblem<Scalar>& p, const SolverOptions& opts = {});

template <class Scalar>
Eigenpairs general_pencil_solve(const PencilProblem<Scalar>& p, const SolverOptions& opts = {});

/// Backward error of a single pair.
double pencil_residual(const Eigen::SparseMatrix<Complex>& K, const Eigen::SparseMatrix<Complex>& M,
                       Complex lambda, const Eigen::VectorXcd& v);

/// Cheap upper bound on the spectral norm: sqrt(|A|_1 |A|_inf).
template <class Scalar>
double norm_bound(const Eigen::SparseMatrix<Scalar>& A) {
  Eigen::VectorXd col = Eigen::VectorXd::Zero(A.cols());
  Eigen::VectorXd row = Eigen::VectorXd::Zero(A.rows());
  for (int k = 0; k < A.outerSize(); ++k) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(A, k); it; ++it) {
      col[it.col()] += std::abs(it.value());
      row[it.row()] += std::abs(it.value());
    }
  }
  return std::sqrt(col.maxCoeff() * row.maxCoeff());
}

}  // namespace singspec::numerics
