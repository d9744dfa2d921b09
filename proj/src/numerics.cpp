#include "singspec/numerics.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include <numeric>
#include <random>

namespace singspec::numerics {

QuadratureRule<1> gauss_legendre(int n) {
  if (n < 1) throw ConfigError("numerics", "gauss_legendre needs n >= 1");
  QuadratureRule<1> rule;
  rule.order = 2 * n - 1;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i][0] = -x;
    rule.nodes[n - 1 - i][0] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2][0] = 0.0;
  return rule;
}

QuadratureRule<2> triangle_rule(int order) {
  QuadratureRule<2> rule;
  auto add = [&](double a, double b, double w) {
    rule.nodes.emplace_back(a, b);
    rule.weights.push_back(0.5 * w);
  };
  auto orbit = [&](double a, double w) {
    const double c = 1.0 - 2.0 * a;
    add(a, a, w);
    add(c, a, w);
    add(a, c, w);
  };
  if (order <= 1) {
    rule.order = 1;
    add(1.0 / 3.0, 1.0 / 3.0, 1.0);
  } else if (order == 2) {
    rule.order = 2;
    orbit(1.0 / 6.0, 1.0 / 3.0);
  } else if (order <= 5) {
    rule.order = 5;
    const double s = std::sqrt(15.0);
    add(1.0 / 3.0, 1.0 / 3.0, 9.0 / 40.0);
    orbit((6.0 - s) / 21.0, (155.0 - s) / 1200.0);
    orbit((6.0 + s) / 21.0, (155.0 + s) / 1200.0);
  } else {
    throw ConfigError("numerics", "triangle_rule supports orders up to 5");
  }
  return rule;
}

// ---------------------------------------------------------------------------

namespace {

int sign_of(double v) { return (v > 0) - (v < 0); }

double bisect(const std::function<double(double)>& f, double a, double b, double fa,
              double rel_tol) {
  for (int it = 0; it < 200; ++it) {
    const double m = 0.5 * (a + b);
    if (b - a <= rel_tol * std::max({std::abs(a), std::abs(b), 1e-300}) || m <= a || m >= b) break;
    const double fm = f(m);
    if (fm == 0.0) return m;
    if (sign_of(fm) == sign_of(fa)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

// Extremum of f on [a, b] where f keeps the sign s at both ends: minimizes s*f.
std::pair<double, double> golden_extremum(const std::function<double(double)>& f, double a,
                                          double b, int s, double rel_tol) {
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200; ++it) {
    if (b - a <= rel_tol * std::max(std::abs(a) + std::abs(b), 1e-300)) break;
    if (sign_of(fc) == -s) return {c, fc};
    if (sign_of(fd) == -s) return {d, fd};
    if (s * fc < s * fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = f(d);
    }
  }
  return s * fc < s * fd ? std::pair{c, fc} : std::pair{d, fd};
}

}  // namespace

RootScan bracketed_roots(const std::function<double(double)>& f, std::span<const double> scan,
                         std::size_t max_count, const RootOptions& opts) {
  RootScan out;
  const std::size_t n = scan.size();
  if (n < 2 || max_count == 0) {
    out.complete = n < 2;
    if (n >= 1) out.continuation = scan[0];
    return out;
  }
  std::vector<double> v(n);
  std::size_t filled = 0;  // v[0 .. filled) are evaluated
  auto fill_to = [&](std::size_t k) {
    for (; filled <= k && filled < n; ++filled) v[filled] = f(scan[filled]);
  };
  std::size_t found = 0;
  auto push = [&](Root r, std::size_t resume) {
    out.roots.push_back(r);
    found += r.multiplicity;
    out.continuation = scan[std::min(resume, n - 1)];
  };
  for (std::size_t i = 0; i + 1 < n; ++i) {
    fill_to(i + 2);
    const double a = scan[i], b = scan[i + 1];
    if (v[i] == 0.0) {
      if (i == 0) push({a, 1, false}, i + 1);
      // interior exact zeros are taken when they end an interval below
    } else if (v[i + 1] == 0.0) {
      fill_to(i + 2);
      if (i + 2 < n && v[i + 2] != 0.0 && sign_of(v[i + 2]) == sign_of(v[i])) {
        push({b, 2, true}, i + 2);  // exact touching zero on a scan point
        ++i;
      } else {
        push({b, 1, false}, i + 1);
      }
    } else if (sign_of(v[i]) != sign_of(v[i + 1])) {
      push({bisect(f, a, b, v[i], opts.rel_tol), 1, false}, i + 1);
    } else if (i + 2 < n && v[i + 2] != 0.0 && sign_of(v[i + 2]) == sign_of(v[i + 1]) &&
               std::abs(v[i + 1]) < std::abs(v[i]) && std::abs(v[i + 1]) < std::abs(v[i + 2])) {
      // Local dip of |f| around scan[i+1] without sign change.
      const int s = sign_of(v[i + 1]);
      auto [xm, fm] = golden_extremum(f, a, scan[i + 2], s, 1e-13);
      if (sign_of(fm) == -s) {
        const double r1 = bisect(f, a, xm, v[i], opts.rel_tol);
        const double r2 = bisect(f, xm, scan[i + 2], fm, opts.rel_tol);
        push({r1, 1, false}, i + 2);
        if (found < max_count) push({r2, 1, false}, i + 2);
        ++i;  // both roots lie in [scan[i], scan[i+2]]
      } else if (std::abs(fm) <= opts.tangency_tol * std::max(std::abs(v[i]), std::abs(v[i + 2]))) {
        push({xm, 2, true}, i + 2);
        ++i;
      }
    }
    if (found >= max_count) {
      out.complete = out.continuation >= scan[n - 1];
      return out;
    }
  }
  out.complete = true;
  out.continuation = scan[n - 1];
  return out;
}

RootScan bracketed_roots(const std::function<double(double)>& f, double lo, double hi,
                         double step, std::size_t max_count, const RootOptions& opts) {
  if (!(hi > lo) || !(step > 0)) throw ConfigError("numerics", "invalid root window");
  const auto count = static_cast<std::size_t>(std::ceil((hi - lo) / step));
  std::vector<double> scan(count + 1);
  for (std::size_t i = 0; i <= count; ++i) scan[i] = std::min(hi, lo + step * static_cast<double>(i));
  return bracketed_roots(f, std::span<const double>(scan), max_count, opts);
}

// ---------------------------------------------------------------------------
// Ordering and clustering
// ---------------------------------------------------------------------------

static bool near(Complex a, Complex b) {
  return std::abs(a - b) <= kClusterTol * (1.0 + std::max(std::abs(a), std::abs(b)));
}

std::vector<Eigen::Index> spectral_order(const Eigen::VectorXcd& values) {
  std::vector<Eigen::Index> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return values[a].real() < values[b].real(); });
  // Runs of equal real part (within tolerance) are ordered by imaginary part.
  std::size_t start = 0;
  while (start < idx.size()) {
    std::size_t end = start + 1;
    while (end < idx.size()) {
      const double ra = values[idx[end - 1]].real(), rb = values[idx[end]].real();
      if (std::abs(rb - ra) > kClusterTol * (1.0 + std::max(std::abs(values[idx[end - 1]]),
                                                           std::abs(values[idx[end]]))))
        break;
      ++end;
    }
    std::stable_sort(idx.begin() + start, idx.begin() + end,
                     [&](Eigen::Index a, Eigen::Index b) { return values[a].imag() < values[b].imag(); });
    start = end;
  }
  return idx;
}

std::vector<int> cluster_ids(const Eigen::VectorXcd& values) {
  std::vector<int> ids(values.size(), 0);
  int id = 0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (!near(values[i], values[i - 1])) ++id;
    ids[i] = id;
  }
  return ids;
}

bool Eigenpairs::clustered(Eigen::Index i) const {
  const auto n = static_cast<Eigen::Index>(cluster.size());
  return (i > 0 && cluster[i] == cluster[i - 1]) || (i + 1 < n && cluster[i] == cluster[i + 1]);
}

double pencil_residual(const Eigen::SparseMatrix<Complex>& K, const Eigen::SparseMatrix<Complex>& M,
                       Complex lambda, const Eigen::VectorXcd& v) {
  const Eigen::VectorXcd r = K * v - lambda * (M * v);
  const double scale = (norm_bound(K) + std::abs(lambda) * norm_bound(M)) * v.norm();
  return scale > 0 ? r.norm() / scale : r.norm();
}

// ---------------------------------------------------------------------------
// Solvers
// ---------------------------------------------------------------------------

namespace {

using SpC = Eigen::SparseMatrix<Complex>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;

template <class Scalar>
SpC to_complex(const Eigen::SparseMatrix<Scalar>& A) {
  if constexpr (std::is_same_v<Scalar, Complex>) {
    return A;
  } else {
    return A.template cast<Complex>();
  }
}

template <class Scalar>
void check_shapes(const PencilProblem<Scalar>& p) {
  if (p.K.rows() != p.K.cols() || p.M.rows() != p.M.cols() || p.K.rows() != p.M.rows())
    throw ConfigError("numerics", "pencil matrices must be square with equal sizes");
  if (p.count < 1 || p.count > p.K.rows())
    throw ConfigError("numerics", "requested eigenpair count out of range");
  if (!(p.tol > 0)) throw ConfigError("numerics", "tolerance must be positive");
}

// Sorts, truncates to count, computes residuals and cluster ids.
Eigenpairs finalize(const SpC& K, const SpC& M, const Vec& values, const Mat& right, const Mat& left,
                    Eigen::Index count, bool dense) {
  const auto order = spectral_order(values);
  Eigenpairs out;
  out.dense = dense;
  const Eigen::Index k = std::min<Eigen::Index>(count, values.size());
  out.values.resize(k);
  out.right.resize(right.rows(), k);
  out.left.resize(left.rows(), k);
  out.residuals.resize(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    out.values[i] = values[order[i]];
    out.right.col(i) = right.col(order[i]);
    out.left.col(i) = left.col(order[i]);
    out.residuals[i] = pencil_residual(K, M, out.values[i], out.right.col(i));
  }
  out.cluster = cluster_ids(out.values);
  return out;
}

// Dense generalized eigenproblem K v = lambda M v with M Hermitian positive
// definite, all pairs. Left vectors come from the rows of the inverse
// eigenvector matrix, so they are biorthonormal by construction.
struct DenseGeneral {
  Vec values;
  Mat right, left;
  bool defective = false;
};

DenseGeneral dense_general(const Mat& K, const Mat& M) {
  Eigen::LLT<Mat> llt(M);
  if (llt.info() != Eigen::Success)
    throw NumericalError("numerics", "mass matrix is not positive definite");
  const Mat L = llt.matrixL();
  Mat C = llt.matrixL().solve(K);
  C = llt.matrixL().solve(C.adjoint()).adjoint();
  Eigen::ComplexEigenSolver<Mat> es(C);
  if (es.info() != Eigen::Success) throw NumericalError("numerics", "dense eigensolver failed");
  Mat W = es.eigenvectors();
  for (Eigen::Index j = 0; j < W.cols(); ++j) W.col(j).normalize();
  Eigen::FullPivLU<Mat> lu(W);
  DenseGeneral out;
  out.values = es.eigenvalues();
  const double rcond = lu.rcond();
  out.defective = !(rcond > 1e-10) || !lu.isInvertible();
  Mat G = out.defective ? Mat(W.adjoint()) : Mat(lu.inverse());
  // right: L^{-*} w, left: L^{-*} conj(g) where g^T is a row of W^{-1}.
  out.right = L.adjoint().triangularView<Eigen::Upper>().solve(W);
  out.left = L.adjoint().triangularView<Eigen::Upper>().solve(Mat(G.adjoint()));
  return out;
}

std::mt19937_64 make_rng(unsigned seed) { return std::mt19937_64(seed); }

Mat random_block(Eigen::Index n, int b, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Mat X(n, b);
  for (Eigen::Index j = 0; j < b; ++j)
    for (Eigen::Index i = 0; i < n; ++i) X(i, j) = Complex(g(rng), g(rng));
  return X;
}

// Orthonormalizes the columns of W against V and among themselves (Euclidean,
// two passes of classical Gram-Schmidt). Columns that vanish are dropped.
Mat orthonormalize(const Mat& V, Mat W) {
  for (int pass = 0; pass < 2; ++pass) {
    if (V.cols() > 0) W -= V * (V.adjoint() * W);
  }
  Mat Q(W.rows(), 0);
  for (Eigen::Index j = 0; j < W.cols(); ++j) {
    Vec w = W.col(j);
    const double before = w.norm();
    for (int pass = 0; pass < 2; ++pass) {
      if (V.cols() > 0) w -= V * (V.adjoint() * w);
      if (Q.cols() > 0) w -= Q * (Q.adjoint() * w);
    }
    const double after = w.norm();
    if (!(after > 1e-10 * std::max(before, 1e-300))) continue;
    Q.conservativeResize(Eigen::NoChange, Q.cols() + 1);
    Q.col(Q.cols() - 1) = w / after;
  }
  return Q;
}

// Block shift-invert Krylov with Rayleigh-Ritz on the original pencil.
// apply(X) returns (K - sigma M)^{-1} M X.
template <bool Hermitian>
DenseGeneral krylov_lowest(const SpC& K, const SpC& M, Eigen::Index count, double tol,
                           const std::function<Mat(const Mat&)>& apply, const SolverOptions& opts,
                           Complex sigma) {
  const Eigen::Index n = K.rows();
  const int b = std::max(1, opts.block_size);
  const Eigen::Index cap = std::min<Eigen::Index>(n, std::max<Eigen::Index>(3 * count + 6 * b, 60));
  const Eigen::Index keep = std::min<Eigen::Index>(n, count + 2 * b);
  const double knorm = norm_bound(K), mnorm = norm_bound(M);
  auto rng = make_rng(opts.seed);

  Mat V(n, 0), KV(n, 0), MV(n, 0);
  Mat W = apply(random_block(n, b, rng));
  DenseGeneral best;
  for (int outer = 0; outer < 400; ++outer) {
    Mat Q = orthonormalize(V, W);
    if (Q.cols() == 0) Q = orthonormalize(V, random_block(n, b, rng));
    if (Q.cols() > 0) {
      const Eigen::Index c0 = V.cols();
      V.conservativeResize(Eigen::NoChange, c0 + Q.cols());
      KV.conservativeResize(Eigen::NoChange, c0 + Q.cols());
      MV.conservativeResize(Eigen::NoChange, c0 + Q.cols());
      V.rightCols(Q.cols()) = Q;
      KV.rightCols(Q.cols()) = K * Q;
      MV.rightCols(Q.cols()) = M * Q;
    }
    if (V.cols() < std::min<Eigen::Index>(n, count + b) && Q.cols() > 0) {
      W = apply(Q);
      continue;
    }
    Mat Kp = V.adjoint() * KV;
    Mat Mp = V.adjoint() * MV;
    Mp = 0.5 * (Mp + Mat(Mp.adjoint()));
    Vec theta;
    Mat S;
    if constexpr (Hermitian) {
      Kp = 0.5 * (Kp + Mat(Kp.adjoint()));
      Eigen::GeneralizedSelfAdjointEigenSolver<Mat> es(Kp, Mp);
      if (es.info() != Eigen::Success) throw NumericalError("numerics", "projected eigensolve failed");
      theta = es.eigenvalues().cast<Complex>();
      S = es.eigenvectors();
    } else {
      auto dg = dense_general(Kp, Mp);
      theta = dg.values;
      S = dg.right;
    }
    const auto order = spectral_order(theta);
    const Eigen::Index m = std::min<Eigen::Index>(keep, theta.size());
    Mat X(n, m), KX(n, m), MX(n, m);
    Vec th(m);
    for (Eigen::Index i = 0; i < m; ++i) {
      th[i] = theta[order[i]];
      X.col(i) = V * S.col(order[i]);
      KX.col(i) = KV * S.col(order[i]);
      MX.col(i) = MV * S.col(order[i]);
    }
    // Convergence of the wanted pairs.
    Eigen::Index converged = 0;
    Mat R(n, m);
    for (Eigen::Index i = 0; i < m; ++i) {
      R.col(i) = KX.col(i) - th[i] * MX.col(i);
      const double scale = (knorm + std::abs(th[i]) * mnorm) * X.col(i).norm();
      if (i < count && R.col(i).norm() <= 0.1 * tol * scale) ++converged;
    }
    const bool full = V.cols() >= n;
    if (converged >= std::min(count, m) || full) {
      best.values = th;
      best.right = X;
      return best;
    }
    // Next block: shift-invert applied to the residuals of the least converged wanted pairs.
    std::vector<std::pair<double, Eigen::Index>> rank;
    for (Eigen::Index i = 0; i < std::min(m, count + b); ++i) {
      const double scale = (knorm + std::abs(th[i]) * mnorm) * X.col(i).norm();
      rank.push_back({R.col(i).norm() / scale, i});
    }
    std::stable_sort(rank.begin(), rank.end(), [](auto& a, auto& c) { return a.first > c.first; });
    Mat next(n, std::min<Eigen::Index>(b, static_cast<Eigen::Index>(rank.size())));
    for (Eigen::Index j = 0; j < next.cols(); ++j) next.col(j) = R.col(rank[j].second);
    W = apply(next);
    if (V.cols() + b > cap) {
      // Thick restart on the leading Ritz vectors.
      Mat Xo = orthonormalize(Mat(n, 0), X);
      V = Xo;
      KV = K * V;
      MV = M * V;
    }
    (void)sigma;
  }
  throw NumericalError("numerics", "shift-invert iteration did not converge");
}

}  // namespace

template <class Scalar>
Eigenpairs hermitian_pencil_solve(const PencilProblem<Scalar>& p, const SolverOptions& opts) {
  check_shapes(p);
  const Eigen::Index n = p.K.rows();
  const SpC K = to_complex(p.K), M = to_complex(p.M);
  const bool dense = opts.force_dense || n <= opts.dense_cap || p.count > n / 3;
  if (dense) {
    using DMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    DMat Kd = DMat(p.K), Md = DMat(p.M);
    Kd = (0.5 * (Kd + DMat(Kd.adjoint()))).eval();
    Md = (0.5 * (Md + DMat(Md.adjoint()))).eval();
    Eigen::LLT<DMat> llt(Md);
    if (llt.info() != Eigen::Success)
      throw NumericalError("numerics", "mass matrix is not positive definite");
    Eigen::GeneralizedSelfAdjointEigenSolver<DMat> es(Kd, Md);
    if (es.info() != Eigen::Success) throw NumericalError("numerics", "dense eigensolver failed");
    const Vec values = es.eigenvalues().template cast<Complex>();
    const Mat vecs = es.eigenvectors().template cast<Complex>();
    return finalize(K, M, values, vecs, vecs, p.count, true);
  }
  if (n > opts.dimension_cap) throw NumericalError("numerics", "dimension cap exceeded");
  // Shift below the spectrum: K - sigma M positive definite.
  double sigma = opts.shift_hint;
  Eigen::SimplicialLLT<Eigen::SparseMatrix<Scalar>> chol;
  Eigen::SparseMatrix<Scalar> Msp = p.M;
  {
    Eigen::SimplicialLLT<Eigen::SparseMatrix<Scalar>> mcheck(Msp);
    if (mcheck.info() != Eigen::Success)
      throw NumericalError("numerics", "mass matrix is not positive definite");
  }
  bool ok = false;
  for (int attempt = 0; attempt < 80; ++attempt) {
    Eigen::SparseMatrix<Scalar> S = p.K - Scalar(sigma) * p.M;
    chol.compute(S);
    if (chol.info() == Eigen::Success) {
      ok = true;
      break;
    }
    sigma = 2.0 * sigma - 1.0;
  }
  if (!ok) throw NumericalError("numerics", "no shift found below the spectrum");
  auto apply = [&](const Mat& X) -> Mat {
    Mat Y(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      const Vec mx = M * X.col(j);
      if constexpr (std::is_same_v<Scalar, Complex>) {
        Y.col(j) = chol.solve(mx);
      } else {
        const Eigen::VectorXd re = chol.solve(Eigen::VectorXd(mx.real()));
        const Eigen::VectorXd im = chol.solve(Eigen::VectorXd(mx.imag()));
        Y.col(j) = re.cast<Complex>() + Complex(0, 1) * im.cast<Complex>();
      }
    }
    return Y;
  };
  auto res = krylov_lowest<true>(K, M, p.count, p.tol, apply, opts, sigma);
  for (Eigen::Index j = 0; j < res.right.cols(); ++j) {
    const double mn = std::sqrt(std::abs(res.right.col(j).dot(M * res.right.col(j))));
    res.right.col(j) /= mn;
  }
  return finalize(K, M, res.values, res.right, res.right, p.count, false);
}

template <class Scalar>
Eigenpairs general_pencil_solve(const PencilProblem<Scalar>& p, const SolverOptions& opts) {
  check_shapes(p);
  const Eigen::Index n = p.K.rows();
  const SpC K = to_complex(p.K), M = to_complex(p.M);
  const bool dense = opts.force_dense || n <= opts.dense_cap || p.count > n / 3;
  if (dense) {
    auto dg = dense_general(Mat(K), Mat(M));
    auto out = finalize(K, M, dg.values, dg.right, dg.left, p.count, true);
    out.defective = dg.defective;
    return out;
  }
  if (n > opts.dimension_cap) throw NumericalError("numerics", "dimension cap exceeded");
  // Re(lambda) is bounded below by the least eigenvalue of the Hermitian part.
  PencilProblem<Complex> herm{SpC(0.5 * (K + SpC(K.adjoint()))), M, 1, 1e-6};
  const double low = hermitian_pencil_solve(herm, opts).values[0].real();
  const Complex sigma = low - 1.0 - 1e-3 * std::abs(low);

  auto run = [&](const SpC& A) {
    Eigen::SparseLU<SpC> lu;
    SpC S = A - sigma * M;
    S.makeCompressed();
    lu.compute(S);
    if (lu.info() != Eigen::Success) throw NumericalError("numerics", "shifted pencil is singular");
    auto apply = [&](const Mat& X) -> Mat {
      Mat Y(X.rows(), X.cols());
      for (Eigen::Index j = 0; j < X.cols(); ++j) Y.col(j) = lu.solve(Vec(M * X.col(j)));
      return Y;
    };
    return krylov_lowest<false>(A, M, p.count, p.tol, apply, opts, sigma);
  };
  auto right = run(K);
  const SpC Kh = K.adjoint();
  auto adj = run(Kh);
  // Match left vectors: eigenvalues of the adjoint pencil are conjugates.
  Mat left(n, right.values.size());
  bool defective = false;
  for (Eigen::Index i = 0; i < right.values.size(); ++i) {
    Eigen::Index best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < adj.values.size(); ++j) {
      const double d = std::abs(std::conj(adj.values[j]) - right.values[i]);
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
    Vec z = adj.right.col(best);
    const Complex s = z.dot(M * right.right.col(i));  // z^* M v
    if (std::abs(s) < 1e-10 * z.norm() * right.right.col(i).norm()) defective = true;
    left.col(i) = z / std::conj(s);
  }
  for (Eigen::Index j = 0; j < right.right.cols(); ++j) {
    const double mn = std::sqrt(std::abs(right.right.col(j).dot(M * right.right.col(j))));
    right.right.col(j) /= mn;
    left.col(j) *= mn;
  }
  auto out = finalize(K, M, right.values, right.right, left, p.count, false);
  out.defective = defective;
  return out;
}

template Eigenpairs hermitian_pencil_solve<double>(const PencilProblem<double>&, const SolverOptions&);
template Eigenpairs hermitian_pencil_solve<Complex>(const PencilProblem<Complex>&, const SolverOptions&);
template Eigenpairs general_pencil_solve<double>(const PencilProblem<double>&, const SolverOptions&);
template Eigenpairs general_pencil_solve<Complex>(const PencilProblem<Complex>&, const SolverOptions&);

}  // namespace singspec::numerics
