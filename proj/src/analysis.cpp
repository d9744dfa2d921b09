#include "singspec/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace singspec::analysis {

namespace {
constexpr const char* kModule = "analysis";
}

// ---------------------------------------------------------------------------
// Counting functions and Weyl asymptotics
// ---------------------------------------------------------------------------

CountingFunction::CountingFunction(std::vector<double> eigenvalues) : values_(std::move(eigenvalues)) {
  for (double v : values_)
    if (!std::isfinite(v)) throw ConfigError(kModule, "counting function needs finite eigenvalues");
  std::sort(values_.begin(), values_.end());
}

std::size_t CountingFunction::operator()(double r) const {
  return static_cast<std::size_t>(std::upper_bound(values_.begin(), values_.end(), r) - values_.begin());
}

std::size_t CountingFunction::left_limit(double r) const {
  return static_cast<std::size_t>(std::lower_bound(values_.begin(), values_.end(), r) - values_.begin());
}

double unit_ball_volume(int n) {
  return std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n + 1.0);
}

std::vector<double> free_box_spectrum(std::span<const double> sides, Space space, double up_to) {
  if (sides.empty() || sides.size() > 3) throw ConfigError(kModule, "box spectrum needs 1 to 3 sides");
  if (space != Space::Dirichlet && space != Space::Neumann)
    throw ConfigError(kModule, "box spectrum supports Dirichlet and Neumann only");
  for (double s : sides)
    if (!(s > 0)) throw ConfigError(kModule, "box sides must be positive");
  const int k0 = space == Space::Dirichlet ? 1 : 0;
  std::vector<double> out;
  std::function<void(std::size_t, double)> rec = [&](std::size_t axis, double partial) {
    if (axis == sides.size()) {
      out.push_back(partial);
      return;
    }
    for (int k = k0;; ++k) {
      const double term = std::pow(k * kPi / sides[axis], 2);
      if (partial + term > up_to) break;
      rec(axis + 1, partial + term);
    }
  };
  rec(0, 0.0);
  std::sort(out.begin(), out.end());
  return out;
}

double WeylProfile::max_abs_remainder() const {
  double m = 0.0;
  for (double r : remainder) m = std::max(m, std::abs(r));
  return m;
}

WeylProfile weyl_profile(std::span<const double> spectrum, int n, double volume, std::span<const double> radii,
                         double resolved_fraction) {
  if (n < 1 || n > 3) throw ConfigError(kModule, "dimension must be 1, 2 or 3");
  if (!(volume > 0)) throw ConfigError(kModule, "volume must be positive");
  if (spectrum.empty()) throw ConfigError(kModule, "empty spectrum");
  const CountingFunction N(std::vector<double>(spectrum.begin(), spectrum.end()));
  const double limit = resolved_fraction * N.top();
  WeylProfile w;
  w.dimension = n;
  w.volume = volume;
  const double constant = std::pow(2.0 * kPi, -n) * unit_ball_volume(n) * volume;
  double prev = 0.0;
  for (double r : radii) {
    if (!(r > prev)) throw ConfigError(kModule, "radii must be positive and increasing");
    if (r > limit) {
      std::ostringstream os;
      os << "radius " << r << " is beyond the resolved range " << resolved_fraction << " * lambda_max = " << limit;
      throw ConfigError(kModule, os.str());
    }
    prev = r;
    const double count = static_cast<double>(N(r));
    const double lead = constant * std::pow(r, 0.5 * n);
    w.radii.push_back(r);
    w.counts.push_back(count);
    w.leading.push_back(lead);
    w.remainder.push_back((count - lead) / std::pow(r, 0.5 * (n - 1)));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Sandwich
// ---------------------------------------------------------------------------

SandwichResult sandwich_check(const CountingFunction& perturbed, const CountingFunction& free, double theta,
                              std::span<const double> radii) {
  if (radii.empty()) throw ConfigError(kModule, "sandwich check needs radii");
  if (!(theta >= 0 && theta < 1)) throw ConfigError(kModule, "theta must lie in [0, 1)");
  std::vector<double> r(radii.begin(), radii.end());
  for (double x : r)
    if (!(x > 0)) throw ConfigError(kModule, "radii must be positive");
  std::sort(r.begin(), r.end());
  const double lo = r.front(), hi = r.back();
  for (const auto* cf : {&perturbed, &free}) {
    for (double lam : cf->eigenvalues()) {
      if (lam < lo || lam > hi) continue;
      r.push_back(lam);
      const double below = std::nextafter(lam, -std::numeric_limits<double>::infinity());
      if (below >= lo) r.push_back(below);
    }
  }
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());

  const auto& fv = free.eigenvalues();
  auto lhs_at = [&](double x) {
    return std::abs(static_cast<double>(free(x)) - static_cast<double>(perturbed(x)));
  };
  // Smallest half-width w with a free eigenvalue in (x - w, x + w].
  auto needed = [&](double x) {
    double d = std::numeric_limits<double>::infinity();
    auto it = std::upper_bound(fv.begin(), fv.end(), x);  // first > x
    if (it != fv.end()) d = std::min(d, *it - x);
    if (it != fv.begin()) d = std::min(d, x - *(it - 1));
    return d;
  };

  SandwichResult out;
  out.theta = theta;
  bool any = false;
  double c = 0.0;
  for (double x : r) {
    if (lhs_at(x) <= 0) continue;
    any = true;
    c = std::max(c, needed(x) / std::pow(x, theta));
  }
  if (any) {
    c = c > 0 ? c * (1.0 + 1e-9) : 1e-9;
    if (!std::isfinite(c)) throw ConfigError(kModule, "free spectrum is empty where the spectra differ");
  }
  const double reach = hi + c * std::pow(hi, theta);
  if (reach > free.top() || reach > perturbed.top()) {
    std::ostringstream os;
    os << "unresolved range: spectra must extend past " << reach << " (free to " << free.top()
       << ", perturbed to " << perturbed.top() << ")";
    throw ConfigError(kModule, os.str());
  }
  auto window = [&](double x) {
    const double w = c * std::pow(x, theta);
    return static_cast<double>(free(x + w)) - static_cast<double>(free(x - w));
  };
  double C = 0.0;
  for (double x : r) {
    const double l = lhs_at(x);
    if (l > 0) C = std::max(C, l / window(x));
  }
  out.C = C;
  out.c = c;
  out.verdict = true;
  for (double x : r) {
    SandwichRow row{x, lhs_at(x), C * window(x)};
    if (row.lhs > row.rhs * (1.0 + 1e-12)) out.verdict = false;
    out.rows.push_back(row);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Convergence sweeps
// ---------------------------------------------------------------------------

double loglog_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError(kModule, "slope fit needs two or more points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0) || !(y[i] > 0)) throw ConfigError(kModule, "slope fit needs positive data");
    const double lx = std::log(x[i]), ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw ConfigError(kModule, "slope fit needs distinct abscissae");
  return (n * sxy - sx * sy) / den;
}

ConvergenceTable convergence_rates(std::span<const double> scales, std::span<const double> norms,
                                   std::span<const Complex> reference, const ScaleSolver& solve, double floor) {
  if (scales.size() != norms.size()) throw ConfigError(kModule, "scales and norms differ in length");
  if (reference.empty()) throw ConfigError(kModule, "empty reference spectrum");
  for (std::size_t i = 1; i < scales.size(); ++i)
    if (!(scales[i] < scales[i - 1])) throw ConfigError(kModule, "scales must be decreasing");
  ConvergenceTable table;
  for (const auto& v : reference) table.reference.push_back(v.real());
  const std::size_t K = scales.size();
  std::vector<ConvergenceRow> rows(K);
  std::vector<std::string> errors(K);
  parallel_for(K, [&](std::size_t k) {
    try {
      const auto ev = solve(k);
      rows[k].scale = scales[k];
      rows[k].norm = norms[k];
      const std::size_t S = std::min(ev.size(), reference.size());
      if (S == 0) throw NumericalError(kModule, "no eigenvalues returned");
      for (std::size_t s = 0; s < S; ++s) {
        const double g = std::abs(ev[s] - reference[s]);
        if (!std::isfinite(g)) throw NumericalError(kModule, "non-finite eigenvalue gap");
        rows[k].gaps.push_back(g);
      }
    } catch (const std::exception& e) {
      errors[k] = e.what();
    }
  });
  for (std::size_t k = 0; k < K; ++k) {
    if (!errors[k].empty()) {
      std::ostringstream os;
      os << "scale " << scales[k] << ": " << errors[k];
      table.failure = os.str();
      table.complete = false;
      break;
    }
    table.rows.push_back(rows[k]);
  }
  std::vector<double> x, y;
  for (const auto& row : table.rows) {
    if (row.gaps[0] > floor && row.norm > 0) {
      x.push_back(row.norm);
      y.push_back(row.gaps[0]);
    }
  }
  if (x.size() >= 2) {
    table.slope = loglog_slope(x, y);
  } else {
    table.at_floor = true;
    table.slope = std::numeric_limits<double>::quiet_NaN();
  }
  return table;
}

namespace {

std::vector<Complex> spectrum_1d(std::shared_ptr<const potentials::Profile1D> u,
                                 const quasi1d::BoundaryCondition1D& bc, std::size_t count) {
  if (u->is_real() && bc.real_data()) {
    quasi1d::SelfAdjointOptions o;
    o.eigenfunctions = false;
    return quasi1d::eigenvalues_selfadjoint(u, bc, count, o).eigenvalues;
  }
  return quasi1d::eigenvalues_complex(u, bc, count).eigenvalues;
}

}  // namespace

ConvergenceTable mollifier_sweep_1d(std::shared_ptr<const potentials::Primitive1D> u,
                                    const quasi1d::BoundaryCondition1D& bc, std::span<const double> scales,
                                    std::size_t count, double floor) {
  const auto reference = spectrum_1d(u, bc, count);
  const potentials::MollifiedFamily1D family(u, std::vector<double>(scales.begin(), scales.end()));
  return convergence_rates(
      scales, family.distances(), reference,
      [&](std::size_t k) { return spectrum_1d(family.members()[k], bc, count); }, floor);
}

ConvergenceTable mollifier_sweep_2d(const potentials::VectorField& V, const femnd::Mesh2D& mesh, Space space,
                                    std::span<const double> scales, std::size_t count, double p, double floor) {
  femnd::AssemblyOptions ao;
  ao.quadrature_order = 5;
  const auto limit = femnd::lowest_eigenpairs(femnd::assemble_forms(mesh, &V, space, ao),
                                              static_cast<Eigen::Index>(count));
  std::vector<Complex> reference(limit.values.data(), limit.values.data() + limit.values.size());
  const potentials::MollifiedFamilyND family(V, std::vector<double>(scales.begin(), scales.end()), p);
  std::vector<double> norms;
  for (const auto& d : family.distances()) norms.push_back(d.value);
  return convergence_rates(
      scales, norms, reference,
      [&](std::size_t k) {
        const auto s = femnd::lowest_eigenpairs(femnd::assemble_forms(mesh, &family.members()[k], space, ao),
                                                static_cast<Eigen::Index>(count));
        return std::vector<Complex>(s.values.data(), s.values.data() + s.values.size());
      },
      floor);
}

// ---------------------------------------------------------------------------
// Resolvent gap
// ---------------------------------------------------------------------------

double resolvent_gap(const AssembledForms& forms_k, const AssembledForms& forms_limit, double rho,
                     const ResolventOptions& opts) {
  using SpMat = Eigen::SparseMatrix<Complex>;
  const Eigen::Index n = forms_limit.size();
  if (forms_k.size() != n) throw ConfigError(kModule, "forms live on different spaces");
  const double mnorm = forms_limit.M.norm();
  if ((forms_k.M - forms_limit.M).norm() > 1e-12 * mnorm)
    throw ConfigError(kModule, "forms must share the mass matrix");
  if (!(rho > 0) || !std::isfinite(rho)) throw ConfigError(kModule, "shift rho must be positive");

  Eigen::SimplicialLLT<SpMat> llt(forms_limit.M);
  if (llt.info() != Eigen::Success) throw NumericalError(kModule, "mass matrix is not positive definite");
  const SpMat L = llt.matrixL();
  const auto& P = llt.permutationP();
  // M = R R^* with R = P^T L.
  auto R = [&](const Eigen::VectorXcd& x) -> Eigen::VectorXcd { return P.transpose() * (L * x); };
  auto Rs = [&](const Eigen::VectorXcd& y) -> Eigen::VectorXcd { return L.adjoint() * (P * y); };

  struct Shifted {
    Eigen::SparseLU<SpMat> lu, lu_adj;
    bool self_adjoint = false;
  };
  auto factor = [&](const AssembledForms& f, Shifted& s) {
    SpMat A = f.total() + Complex(rho) * forms_limit.M;
    A.makeCompressed();
    s.lu.compute(A);
    if (s.lu.info() != Eigen::Success) throw NumericalError(kModule, "singular shifted pencil");
    s.self_adjoint = f.hermitian;
    if (!s.self_adjoint) {
      SpMat Aa = A.adjoint();
      Aa.makeCompressed();
      s.lu_adj.compute(Aa);
      if (s.lu_adj.info() != Eigen::Success) throw NumericalError(kModule, "singular shifted pencil");
    }
  };
  Shifted a, b;
  factor(forms_k, a);
  factor(forms_limit, b);
  auto solve = [](const Shifted& s, const Eigen::VectorXcd& x, bool adjoint) -> Eigen::VectorXcd {
    if (adjoint && !s.self_adjoint) return s.lu_adj.solve(x);
    return s.lu.solve(x);
  };
  auto G = [&](const Eigen::VectorXcd& x, bool adjoint) -> Eigen::VectorXcd {
    const Eigen::VectorXcd rx = R(x);
    return Rs(Eigen::VectorXcd(solve(a, rx, adjoint) - solve(b, rx, adjoint)));
  };

  std::mt19937 rng(opts.seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXcd x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = Complex(normal(rng), normal(rng));
  x.normalize();
  double sigma = 0.0;
  for (int it = 0; it < opts.max_iterations; ++it) {
    const Eigen::VectorXcd y = G(x, false);
    const double s = y.norm();
    if (s == 0.0) return 0.0;
    Eigen::VectorXcd z = G(y / s, true);
    const double zn = z.norm();
    if (zn == 0.0) return s;
    x = z / zn;
    if (std::abs(s - sigma) <= opts.rel_tol * s) return s;
    sigma = s;
  }
  return sigma;
}

// ---------------------------------------------------------------------------
// Subordination
// ---------------------------------------------------------------------------

SubordinationProblem subordination_problem_1d(const potentials::Profile1D& u, const potentials::Grid1D& mesh) {
  const auto free = potentials::Primitive1D::constant(u.a(), u.b(), 0.0);
  const auto bc = quasi1d::BoundaryCondition1D::dirichlet();
  const auto f0 = quasi1d::galerkin_1d(free, bc, mesh);
  const auto fq = quasi1d::galerkin_1d(u, bc, mesh);
  const Eigen::MatrixXd A = Eigen::MatrixXd(f0.A.real());
  const Eigen::MatrixXd M = Eigen::MatrixXd(f0.M.real());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(A, M);
  if (es.info() != Eigen::Success) throw NumericalError(kModule, "free eigenbasis failed");
  SubordinationProblem p;
  p.t0_values = es.eigenvalues();
  if (p.t0_values.minCoeff() <= 0) throw NumericalError(kModule, "free operator is not positive");
  const Eigen::MatrixXcd E = es.eigenvectors().cast<Complex>();
  p.perturbation = E.adjoint() * Eigen::MatrixXcd(fq.B) * E;
  return p;
}

double subordination_ratio(const SubordinationProblem& p, double theta, const Eigen::VectorXcd& c) {
  const Complex num = c.dot(p.perturbation * c);
  double den = 0.0;
  for (Eigen::Index i = 0; i < c.size(); ++i) den += std::pow(p.t0_values[i], theta) * std::norm(c[i]);
  if (!(den > 0)) throw ConfigError(kModule, "zero field in subordination ratio");
  return std::abs(num) / den;
}

SubordinationEstimate subordination_estimate(const SubordinationProblem& p, double theta, std::size_t samples,
                                             unsigned seed) {
  if (!(theta >= 0 && theta < 1)) throw ConfigError(kModule, "theta must lie in [0, 1)");
  if (samples == 0) throw ConfigError(kModule, "sample count must be positive");
  const Eigen::Index n = p.t0_values.size();
  const Eigen::VectorXd s = p.t0_values.array().pow(-0.5 * theta);
  // Ratio in the variable w = D^{theta/2} c is |w^* S w| / |w|^2.
  const Eigen::MatrixXcd S = s.asDiagonal() * p.perturbation * s.asDiagonal();
  const double shift = S.norm();
  SubordinationEstimate out;
  out.samples = samples;
  out.seed = seed;
  out.theta = theta;
  if (shift == 0.0) return out;
  std::mt19937 rng(seed);
  std::normal_distribution<double> normal;
  for (std::size_t k = 0; k < samples; ++k) {
    Eigen::VectorXcd w(n);
    for (Eigen::Index i = 0; i < n; ++i) w[i] = Complex(normal(rng), normal(rng));
    w.normalize();
    double best = std::abs(w.dot(S * w));
    for (int it = 0; it < 2000; ++it) {
      const Complex z = w.dot(S * w);
      const Complex phase = std::abs(z) > 0 ? std::conj(z) / std::abs(z) : Complex(1.0);
      // Power step on the rotated Hermitian part, shifted to be positive.
      Eigen::VectorXcd next = 0.5 * (phase * (S * w) + std::conj(phase) * (S.adjoint() * w)) + shift * w;
      next.normalize();
      const double value = std::abs(next.dot(S * next));
      w = next;
      const bool stalled = value <= best * (1.0 + 1e-13);
      best = std::max(best, value);
      if (stalled) break;
    }
    out.value = std::max(out.value, best);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Abel summation
// ---------------------------------------------------------------------------

Eigensystem eigensystem_from(const numerics::Eigenpairs& e, const Eigen::SparseMatrix<Complex>& M) {
  Eigensystem s;
  s.values = e.values;
  s.right = e.right;
  s.left = e.left;
  s.M = M;
  s.cluster = e.cluster;
  return s;
}

AbelExperiment abel_reconstruct(const Eigensystem& sys, const Eigen::VectorXcd& f, double alpha,
                                std::span<const double> t, std::size_t truncation) {
  if (!(alpha > 0)) throw ConfigError(kModule, "order alpha must be positive");
  const auto n = static_cast<std::size_t>(sys.values.size());
  if (truncation == 0 || truncation > n) throw ConfigError(kModule, "truncation exceeds the available modes");
  if (f.size() != sys.right.rows()) throw ConfigError(kModule, "vector size does not match the eigensystem");
  for (double x : t)
    if (!(x >= 0)) throw ConfigError(kModule, "times must be nonnegative");
  std::size_t modes = truncation;
  if (sys.cluster.size() == n)
    while (modes < n && sys.cluster[modes] == sys.cluster[modes - 1]) ++modes;
  const auto m = static_cast<Eigen::Index>(modes);

  AbelExperiment out;
  out.alpha = alpha;
  out.modes = modes;
  const Eigen::MatrixXcd Y = sys.right.leftCols(m);
  const Eigen::MatrixXcd Z = sys.left.leftCols(m);
  const Eigen::MatrixXcd MY = sys.M * Y;
  out.biorthogonality = (Z.adjoint() * MY - Eigen::MatrixXcd::Identity(m, m)).cwiseAbs().maxCoeff();
  const Eigen::VectorXcd c = Z.adjoint() * (sys.M * f);
  Eigen::VectorXcd power(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    power[k] = std::pow(sys.values[k], alpha);
    if (k >= m / 2 && power[k].real() <= 1e-12 * std::abs(power[k])) out.branch_violation = true;
  }
  auto mnorm = [&](const Eigen::VectorXcd& v) { return std::sqrt(std::max(0.0, v.dot(sys.M * v).real())); };
  out.truncation_error = mnorm(Y * c - f);
  for (double x : t) {
    Eigen::VectorXcd damped(m);
    for (Eigen::Index k = 0; k < m; ++k) damped[k] = c[k] * std::exp(-power[k] * x);
    out.t.push_back(x);
    out.errors.push_back(mnorm(Y * damped - f));
  }
  return out;
}

}  // namespace singspec::analysis
