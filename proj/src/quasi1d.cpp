#include "singspec/quasi1d.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace singspec::quasi1d {

namespace {
constexpr const char* kModule = "quasi1d";
constexpr double kRenorm = 1e100;
}  // namespace

TransferMatrix cell_transfer(Complex u, Complex lambda, double h) {
  if (!(h > 0)) throw ConfigError(kModule, "cell width must be positive");
  const Complex k = std::sqrt(lambda);
  const Complex z = h * k;
  Complex c, s;  // cos(hk), sin(hk)/k
  if (std::abs(z) < 1e-4) {
    const Complex z2 = z * z;
    c = 1.0 - z2 / 2.0 + z2 * z2 / 24.0;
    s = h * (1.0 - z2 / 6.0 + z2 * z2 / 120.0);
  } else {
    c = std::cos(z);
    s = std::sin(z) / k;
  }
  Eigen::Matrix2cd A;
  A << u, 1.0, -(u * u + lambda), -u;
  TransferMatrix t;
  t.matrix = c * Eigen::Matrix2cd::Identity() + s * A;
  t.lambda = lambda;
  t.width = h;
  return t;
}

// ---------------------------------------------------------------------------

BoundaryCondition1D BoundaryCondition1D::third_kind(Complex alpha, Complex beta) {
  BoundaryCondition1D bc(Kind::ThirdKind);
  bc.alpha_ = alpha;
  bc.beta_ = beta;
  return bc;
}

BoundaryCondition1D BoundaryCondition1D::quasi_periodic(double theta) {
  if (!std::isfinite(theta)) throw ConfigError(kModule, "quasi-periodic phase must be finite");
  BoundaryCondition1D bc(Kind::QuasiPeriodic);
  bc.theta_ = theta;
  return bc;
}

BoundaryCondition1D BoundaryCondition1D::parse(const std::string& text) {
  auto numbers = [&](const std::string& rest) {
    std::vector<double> v;
    std::stringstream ss(rest);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        throw ConfigError(kModule, "bad number '" + item + "' in boundary condition '" + text + "'");
      }
    }
    return v;
  };
  if (text == "dirichlet") return dirichlet();
  if (text == "gneumann" || text == "neumann") return generalized_neumann();
  if (text.rfind("third:", 0) == 0) {
    auto v = numbers(text.substr(6));
    if (v.size() != 2) throw ConfigError(kModule, "third-kind condition needs 'third:alpha,beta'");
    return third_kind(v[0], v[1]);
  }
  if (text.rfind("quasi:", 0) == 0) {
    auto v = numbers(text.substr(6));
    if (v.size() != 1) throw ConfigError(kModule, "quasi-periodic condition needs 'quasi:theta'");
    return quasi_periodic(v[0]);
  }
  throw ConfigError(kModule, "unknown boundary condition '" + text + "'");
}

Eigen::Matrix<Complex, 2, 4> BoundaryCondition1D::matrix() const {
  Eigen::Matrix<Complex, 2, 4> U = Eigen::Matrix<Complex, 2, 4>::Zero();
  switch (kind_) {
    case Kind::Dirichlet:
      U(0, 0) = 1.0;
      U(1, 2) = 1.0;
      break;
    case Kind::GeneralizedNeumann:
      U(0, 1) = 1.0;
      U(1, 3) = 1.0;
      break;
    case Kind::ThirdKind:
      U(0, 0) = -alpha_;
      U(0, 1) = 1.0;
      U(1, 2) = -beta_;
      U(1, 3) = 1.0;
      break;
    case Kind::QuasiPeriodic: {
      const Complex e = std::polar(1.0, theta_);
      U(0, 0) = 1.0;
      U(0, 2) = -e;
      U(1, 1) = 1.0;
      U(1, 3) = -e;
      break;
    }
  }
  return U;
}

std::string BoundaryCondition1D::describe() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case Kind::Dirichlet: return "dirichlet";
    case Kind::GeneralizedNeumann: return "gneumann";
    case Kind::ThirdKind:
      os << "third:" << alpha_.real() << "," << beta_.real();
      return os.str();
    case Kind::QuasiPeriodic:
      os << "quasi:" << theta_;
      return os.str();
  }
  return "";
}

const char* engine_name(Engine e) { return e == Engine::Shooting ? "shooting" : "galerkin"; }

// ---------------------------------------------------------------------------
// Shooting engine
// ---------------------------------------------------------------------------

ShootingEngine::ShootingEngine(std::shared_ptr<const Profile1D> profile, ShootingOptions opts)
    : profile_(std::move(profile)), opts_(opts) {
  if (!profile_) throw ConfigError(kModule, "shooting engine needs a profile");
  const auto bp = profile_->breakpoints();
  const double tol = opts_.panel_variation * std::max(1.0, profile_->sup_abs());
  for (std::size_t piece = 0; piece + 1 < bp.size(); ++piece) {
    const int pc = static_cast<int>(piece);
    struct Span {
      double x0, x1;
      int depth;
    };
    std::vector<Span> stack{{bp[piece], bp[piece + 1], 0}};
    std::vector<Panel> local;
    while (!stack.empty()) {
      Span s = stack.back();
      stack.pop_back();
      const double xm = 0.5 * (s.x0 + s.x1);
      const Complex u0 = profile_->value_in_piece(pc, s.x0);
      const Complex u1 = profile_->value_in_piece(pc, s.x1);
      const Complex um = profile_->value_in_piece(pc, xm);
      const Complex uq1 = profile_->value_in_piece(pc, 0.5 * (s.x0 + xm));
      const Complex uq3 = profile_->value_in_piece(pc, 0.5 * (xm + s.x1));
      const double var = std::max({std::abs(u1 - u0), std::abs(um - u0), std::abs(u1 - um),
                                   std::abs(uq1 - u0), std::abs(uq3 - u1)});
      if (var <= tol || s.depth >= 40) {
        local.push_back({s.x0, s.x1 - s.x0, um, std::abs(u1 - u0) / (s.x1 - s.x0)});
      } else {
        // Push the right half first so panels come out left to right.
        stack.push_back({xm, s.x1, s.depth + 1});
        stack.push_back({s.x0, xm, s.depth + 1});
      }
    }
    panels_.insert(panels_.end(), local.begin(), local.end());
  }
}

int ShootingEngine::substeps(const Panel& p, Complex lambda) const {
  const double freq = std::sqrt(std::abs(lambda) + p.slope);
  const double im = std::abs(std::sqrt(lambda).imag());
  const double n = std::max({1.0, std::ceil(p.w * freq), std::ceil(p.w * im / 50.0)});
  return static_cast<int>(std::min(n, 1e8));
}

std::pair<Eigen::Matrix2cd, double> ShootingEngine::fundamental(Complex lambda) const {
  Eigen::Matrix2cd F = Eigen::Matrix2cd::Identity();
  double log_scale = 0.0;
  for (const auto& p : panels_) {
    const int n = substeps(p, lambda);
    const Eigen::Matrix2cd T = cell_transfer(p.u, lambda, p.w / n).matrix;
    for (int j = 0; j < n; ++j) {
      F = T * F;
      const double s = F.cwiseAbs().maxCoeff();
      if (s > kRenorm) {
        F /= s;
        log_scale += std::log(s);
      }
    }
  }
  const double s = F.cwiseAbs().maxCoeff();
  if (s > 0) {
    F /= s;
    log_scale += std::log(s);
  }
  return {F, log_scale};
}

Characteristic ShootingEngine::characteristic(Complex lambda, const BoundaryCondition1D& bc) const {
  const auto [T, L] = fundamental(lambda);
  const auto U = bc.matrix();
  const Eigen::Matrix2cd Mb = U.leftCols<2>() * std::exp(-L) + U.rightCols<2>() * T;
  Characteristic c;
  c.mantissa = Mb.determinant();
  if (bc.kind() == BoundaryCondition1D::Kind::QuasiPeriodic) c.mantissa *= std::polar(1.0, -bc.theta());
  c.log_scale = 2.0 * L;
  const double rows = Mb.row(0).norm() * Mb.row(1).norm();
  c.relative_residual = rows > 0 ? std::abs(Mb.determinant()) / rows : 0.0;
  return c;
}

Trajectory ShootingEngine::propagate(Complex lambda, const QuasiState& init) const {
  Trajectory tr;
  Eigen::Vector2cd s(init.y, init.y1);
  double log_scale = 0.0;
  tr.x.push_back(profile_->a());
  tr.state.push_back(init);
  tr.log_scale.push_back(0.0);
  for (const auto& p : panels_) {
    const int n = substeps(p, lambda);
    const double w = p.w / n;
    const Eigen::Matrix2cd T = cell_transfer(p.u, lambda, w).matrix;
    for (int j = 0; j < n; ++j) {
      s = T * s;
      const double m = s.cwiseAbs().maxCoeff();
      if (m > kRenorm) {
        s /= m;
        log_scale += std::log(m);
      }
      tr.x.push_back(j + 1 == n ? p.x0 + p.w : p.x0 + (j + 1) * w);
      tr.state.push_back({s[0], s[1]});
      tr.log_scale.push_back(log_scale);
    }
  }
  return tr;
}

Trajectory ShootingEngine::evaluate(Complex lambda, const QuasiState& init, std::span<const double> points) const {
  Trajectory tr;
  Eigen::Vector2cd s(init.y, init.y1);
  double log_scale = 0.0;
  std::size_t next = 0;
  auto emit = [&](double x, const Eigen::Vector2cd& v) {
    tr.x.push_back(x);
    tr.state.push_back({v[0], v[1]});
    tr.log_scale.push_back(log_scale);
  };
  while (next < points.size() && points[next] <= profile_->a()) emit(points[next++], s);
  for (const auto& p : panels_) {
    const int n = substeps(p, lambda);
    const double w = p.w / n;
    const Eigen::Matrix2cd T = cell_transfer(p.u, lambda, w).matrix;
    for (int j = 0; j < n; ++j) {
      const double x0 = p.x0 + j * w;
      const double x1 = j + 1 == n ? p.x0 + p.w : x0 + w;
      while (next < points.size() && points[next] < x1) {
        const double d = points[next] - x0;
        emit(points[next++], d > 0 ? Eigen::Vector2cd(cell_transfer(p.u, lambda, d).matrix * s) : s);
      }
      s = T * s;
      const double m = s.cwiseAbs().maxCoeff();
      if (m > kRenorm) {
        s /= m;
        log_scale += std::log(m);
      }
    }
  }
  while (next < points.size()) emit(points[next++], s);
  return tr;
}

QuasiState ShootingEngine::eigen_initial(Complex lambda, const BoundaryCondition1D& bc) const {
  using K = BoundaryCondition1D::Kind;
  if (bc.kind() == K::Dirichlet) return {0.0, 1.0};
  if (bc.kind() == K::GeneralizedNeumann) return {1.0, 0.0};
  if (bc.kind() == K::ThirdKind) return {1.0, bc.alpha()};
  const auto [T, L] = fundamental(lambda);
  const auto U = bc.matrix();
  const Eigen::Matrix2cd Mb = U.leftCols<2>() * std::exp(-L) + U.rightCols<2>() * T;
  const int r = Mb.row(0).norm() >= Mb.row(1).norm() ? 0 : 1;
  Eigen::Vector2cd c(-Mb(r, 1), Mb(r, 0));
  if (c.norm() == 0.0) return {1.0, 0.0};
  c.normalize();
  return {c[0], c[1]};
}

SiteLimits ShootingEngine::site_limits(Complex lambda, const BoundaryCondition1D& bc, double site) const {
  using K = BoundaryCondition1D::Kind;
  if (!(site > profile_->a() && site < profile_->b())) throw ConfigError(kModule, "site must be interior");
  Eigen::Vector2cd end;
  switch (bc.kind()) {
    case K::Dirichlet: end << 0.0, 1.0; break;
    case K::GeneralizedNeumann: end << 1.0, 0.0; break;
    case K::ThirdKind: end << 1.0, bc.beta(); break;
    default: throw ConfigError(kModule, "site limits need separated boundary conditions");
  }
  SiteLimits out;
  out.site = site;
  const double pts[1] = {site};
  const auto fwd = evaluate(lambda, eigen_initial(lambda, bc), std::span<const double>(pts, 1));
  out.left = fwd.state[0];
  // Transfer from site to b, inverted (unimodular) to carry the right-end state back.
  Eigen::Matrix2cd F = Eigen::Matrix2cd::Identity();
  for (const auto& p : panels_) {
    const double x0 = std::max(p.x0, site), x1 = p.x0 + p.w;
    if (!(x1 > x0)) continue;
    const int n = substeps(p, lambda);
    const int steps = std::max(1, static_cast<int>(std::ceil(n * (x1 - x0) / p.w)));
    const Eigen::Matrix2cd T = cell_transfer(p.u, lambda, (x1 - x0) / steps).matrix;
    for (int j = 0; j < steps; ++j) {
      F = T * F;
      const double s = F.cwiseAbs().maxCoeff();
      if (s > kRenorm) F /= s;
    }
  }
  Eigen::Matrix2cd inv;
  inv << F(1, 1), -F(0, 1), -F(1, 0), F(0, 0);
  Eigen::Vector2cd back = inv * end;
  const Complex scale = std::abs(back[0]) > 1e-300 && std::abs(out.left.y) > 1e-12 * std::abs(out.left.y1)
                            ? out.left.y / back[0]
                            : out.left.y1 / back[1];
  back *= scale;
  out.right = {back[0], back[1]};
  const auto bp = profile_->breakpoints();
  auto it = std::find_if(bp.begin(), bp.end(), [&](double x) { return std::abs(x - site) <= 1e-12; });
  if (it != bp.end()) {
    const int j = static_cast<int>(it - bp.begin());
    out.u_left = profile_->value_in_piece(j - 1, site);
    out.u_right = profile_->value_in_piece(j, site);
  } else {
    out.u_left = out.u_right = profile_->value(site);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Self-adjoint spectra by bracketing
// ---------------------------------------------------------------------------

double spectrum_lower_bound(const Profile1D& u, const BoundaryCondition1D& bc) {
  const double U = u.sup_abs();
  if (bc.kind() != BoundaryCondition1D::Kind::ThirdKind) return -(U * U) - 1.0;
  const double g = std::max(std::abs(bc.alpha()), std::abs(bc.beta()));
  const double len = u.b() - u.a();
  return -(2.0 * U * U + 16.0 * g * g + 2.0 * g / len) - 1.0;
}

namespace {

Eigenfunction1D sample_eigenfunction(const Trajectory& tr) {
  Eigenfunction1D ef;
  const double top = *std::max_element(tr.log_scale.begin(), tr.log_scale.end());
  ef.x = tr.x;
  ef.y.resize(tr.x.size());
  ef.y1.resize(tr.x.size());
  double ymax = 0.0;
  std::size_t imax = 0;
  for (std::size_t i = 0; i < tr.x.size(); ++i) {
    const double f = std::exp(tr.log_scale[i] - top);
    ef.y[i] = tr.state[i].y * f;
    ef.y1[i] = tr.state[i].y1 * f;
    if (std::abs(ef.y[i]) > ymax) {
      ymax = std::abs(ef.y[i]);
      imax = i;
    }
  }
  if (ymax > 0) {
    // Unit maximum, real and positive at the maximum.
    const Complex norm = std::abs(ef.y[imax]) / ef.y[imax];
    for (auto& v : ef.y) v *= norm;
    for (auto& v : ef.y1) v *= norm;
  }
  int sign = 0;
  for (const auto& v : ef.y) {
    if (std::abs(v) <= 1e-8) continue;
    const int s = v.real() > 0 ? 1 : (v.real() < 0 ? -1 : 0);
    if (s == 0) continue;
    if (sign != 0 && s != sign) ++ef.sign_changes;
    sign = s;
  }
  return ef;
}

std::vector<int> clusters_of(const std::vector<Complex>& v) {
  Eigen::VectorXcd e(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) e[i] = v[i];
  return numerics::cluster_ids(e);
}

const potentials::Primitive1D* as_primitive(const Profile1D& u) {
  return dynamic_cast<const potentials::Primitive1D*>(&u);
}

}  // namespace

Spectrum1D eigenvalues_selfadjoint(std::shared_ptr<const Profile1D> u, const BoundaryCondition1D& bc,
                                   std::size_t count, const SelfAdjointOptions& opts) {
  if (!u) throw ConfigError(kModule, "missing profile");
  if (!u->is_real() || !bc.real_data())
    throw ConfigError(kModule, "self-adjoint solver needs a real primitive and real boundary data");
  if (count == 0) throw ConfigError(kModule, "eigenvalue count must be positive");
  const ShootingEngine engine(u, opts.shooting);
  const double L = spectrum_lower_bound(*u, bc);
  const double len = u->b() - u->a();
  const double step = kPi / (16.0 * len);
  auto f = [&](double s) { return engine.characteristic(s * s + L, bc).mantissa.real(); };

  double top = (static_cast<double>(count) + 2.0) * kPi / len + 2.0 * std::sqrt(-L);
  numerics::RootScan scan;
  bool found = false;
  for (int grow = 0; grow <= 40; ++grow) {
    scan = numerics::bracketed_roots(f, 0.0, top, step, count);
    std::size_t total = 0;
    for (const auto& r : scan.roots) total += r.multiplicity;
    if (total >= count) {
      found = true;
      break;
    }
    top *= 1.5;
  }
  if (!found) throw NumericalError(kModule, "bracket exhaustion: eigenvalue window grew 40 times");

  Spectrum1D out;
  out.engine = Engine::Shooting;
  for (const auto& r : scan.roots) {
    const double lambda = r.value * r.value + L;
    for (int m = 0; m < r.multiplicity && out.eigenvalues.size() < count; ++m) {
      out.eigenvalues.push_back(lambda);
      out.residuals.push_back(engine.characteristic(lambda, bc).relative_residual);
      out.refined.push_back(true);
      if (opts.eigenfunctions) {
        QuasiState init = engine.eigen_initial(lambda, bc);
        if (r.multiplicity > 1) init = m == 0 ? QuasiState{1.0, 0.0} : QuasiState{0.0, 1.0};
        out.eigenfunctions.push_back(sample_eigenfunction(engine.propagate(lambda, init)));
      }
    }
  }
  out.cluster = clusters_of(out.eigenvalues);
  if (opts.eigenfunctions && opts.verify_oscillation && bc.kind() == BoundaryCondition1D::Kind::Dirichlet) {
    for (std::size_t i = 0; i < out.eigenfunctions.size(); ++i) {
      if (out.eigenfunctions[i].sign_changes != static_cast<int>(i)) {
        std::ostringstream os;
        os << "oscillation count " << out.eigenfunctions[i].sign_changes << " does not match index " << i
           << " (lambda = " << out.eigenvalues[i].real() << ")";
        throw NumericalError(kModule, os.str());
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Galerkin engine
// ---------------------------------------------------------------------------

AssembledForms galerkin_1d(const Profile1D& u, const BoundaryCondition1D& bc, const Grid1D& mesh) {
  using K = BoundaryCondition1D::Kind;
  const double len = u.b() - u.a();
  if (std::abs(mesh.a() - u.a()) > 1e-12 * len || std::abs(mesh.b() - u.b()) > 1e-12 * len)
    throw ConfigError(kModule, "mesh spans a different interval than the primitive");
  if (const auto* prim = as_primitive(u)) {
    for (const auto& j : prim->jumps()) {
      if (!mesh.node_index(j.site)) {
        std::ostringstream os;
        os << "mesh does not contain the jump site " << j.site;
        throw ConfigError(kModule, os.str());
      }
    }
  }
  const int m = mesh.cells();
  const auto gl = numerics::gauss_legendre(u.polynomial_degree() >= 0 ? 3 : 6);
  auto bp = u.breakpoints();

  // Node -> (dof, weight); dof -1 drops the node.
  std::vector<int> dof(m + 1);
  std::vector<Complex> weight(m + 1, 1.0);
  int ndof = 0;
  switch (bc.kind()) {
    case K::Dirichlet:
      dof[0] = dof[m] = -1;
      for (int i = 1; i < m; ++i) dof[i] = i - 1;
      ndof = m - 1;
      break;
    case K::QuasiPeriodic:
      for (int i = 0; i < m; ++i) dof[i] = i;
      dof[m] = 0;
      weight[m] = std::polar(1.0, -bc.theta());
      ndof = m;
      break;
    default:
      for (int i = 0; i <= m; ++i) dof[i] = i;
      ndof = m + 1;
  }

  std::vector<Eigen::Triplet<Complex>> ta, tb, tm;
  ta.reserve(4 * m);
  tb.reserve(4 * m + 2);
  tm.reserve(4 * m);
  auto add = [&](std::vector<Eigen::Triplet<Complex>>& t, int i, int j, Complex v) {
    if (dof[i] < 0 || dof[j] < 0) return;
    t.emplace_back(dof[i], dof[j], std::conj(weight[i]) * weight[j] * v);
  };

  for (int e = 0; e < m; ++e) {
    const double x0 = mesh.node(e), x1 = mesh.node(e + 1), h = x1 - x0;
    // Quadrature pieces: the element split at interior breakpoints of u.
    std::vector<double> cuts{x0};
    auto lo = std::upper_bound(bp.begin(), bp.end(), x0 + 1e-14 * len);
    for (auto it = lo; it != bp.end() && *it < x1 - 1e-14 * len; ++it) cuts.push_back(*it);
    cuts.push_back(x1);
    // t[i][j] = int u phi_j phi_i'
    Complex t[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const double mid = 0.5 * (cuts[c] + cuts[c + 1]), half = 0.5 * (cuts[c + 1] - cuts[c]);
      for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
        const double x = mid + half * gl.nodes[q][0];
        const double w = half * gl.weights[q];
        const Complex ux = u.value(x);
        const double phi[2] = {(x1 - x) / h, (x - x0) / h};
        const double dphi[2] = {-1.0 / h, 1.0 / h};
        for (int i = 0; i < 2; ++i)
          for (int j = 0; j < 2; ++j) t[i][j] += w * ux * phi[j] * dphi[i];
      }
    }
    const int n[2] = {e, e + 1};
    for (int i = 0; i < 2; ++i) {
      for (int j = 0; j < 2; ++j) {
        add(ta, n[i], n[j], (i == j ? 1.0 : -1.0) / h);
        add(tm, n[i], n[j], (i == j ? 2.0 : 1.0) * h / 6.0);
        add(tb, n[i], n[j], -(t[i][j] + t[j][i]));
      }
    }
  }
  if (bc.kind() == K::ThirdKind) {
    add(tb, 0, 0, bc.alpha());
    add(tb, m, m, -bc.beta());
  }

  AssembledForms f;
  f.dimension = 1;
  switch (bc.kind()) {
    case K::Dirichlet: f.space = Space::Dirichlet; break;
    case K::GeneralizedNeumann: f.space = Space::Neumann; break;
    case K::ThirdKind: f.space = Space::ThirdKind; break;
    case K::QuasiPeriodic: f.space = Space::QuasiPeriodic; break;
  }
  f.A.resize(ndof, ndof);
  f.B.resize(ndof, ndof);
  f.M.resize(ndof, ndof);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.B.setFromTriplets(tb.begin(), tb.end());
  f.M.setFromTriplets(tm.begin(), tm.end());
  std::vector<Eigen::Triplet<Complex>> tp;
  for (int i = 0; i <= m; ++i)
    if (dof[i] >= 0) tp.emplace_back(i, dof[i], weight[i]);
  f.prolongation.resize(m + 1, ndof);
  f.prolongation.setFromTriplets(tp.begin(), tp.end());
  f.hermitian = u.is_real() && bc.real_data();
  return f;
}

namespace {

bool all_real(const Eigen::SparseMatrix<Complex>& A) {
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(A, k); it; ++it)
      if (it.value().imag() != 0.0) return false;
  return true;
}

Eigenfunction1D nodal_eigenfunction(const Profile1D& u, const Grid1D& mesh, const Eigen::VectorXcd& nodal) {
  Trajectory tr;
  const int m = mesh.cells();
  for (int i = 0; i <= m; ++i) {
    tr.x.push_back(mesh.node(i));
    double slope_n = 0.0;
    Complex slope = 0.0;
    if (i > 0) {
      slope += (nodal[i] - nodal[i - 1]) / mesh.width(i - 1);
      slope_n += 1;
    }
    if (i < m) {
      slope += (nodal[i + 1] - nodal[i]) / mesh.width(i);
      slope_n += 1;
    }
    slope /= slope_n;
    tr.state.push_back({nodal[i], slope - u.value(mesh.node(i)) * nodal[i]});
    tr.log_scale.push_back(0.0);
  }
  return sample_eigenfunction(tr);
}

}  // namespace

Spectrum1D galerkin_spectrum(const Profile1D& u, const BoundaryCondition1D& bc, const Grid1D& mesh,
                             std::size_t count, const GalerkinOptions& opts) {
  const auto forms = galerkin_1d(u, bc, mesh);
  const auto K = forms.total();
  numerics::Eigenpairs ep;
  if (forms.hermitian && all_real(K)) {
    numerics::PencilProblem<double> p{K.real(), forms.M.real(), static_cast<Eigen::Index>(count), opts.tol};
    ep = numerics::hermitian_pencil_solve(p, opts.solver);
  } else if (forms.hermitian) {
    numerics::PencilProblem<Complex> p{K, forms.M, static_cast<Eigen::Index>(count), opts.tol};
    ep = numerics::hermitian_pencil_solve(p, opts.solver);
  } else {
    numerics::PencilProblem<Complex> p{K, forms.M, static_cast<Eigen::Index>(count), opts.tol};
    ep = numerics::general_pencil_solve(p, opts.solver);
  }
  Spectrum1D out;
  out.engine = Engine::Galerkin;
  for (Eigen::Index i = 0; i < ep.size(); ++i) {
    out.eigenvalues.push_back(ep.values[i]);
    out.residuals.push_back(ep.residuals[i]);
    out.refined.push_back(false);
    const Eigen::VectorXcd nodal = forms.prolongation * ep.right.col(i);
    out.eigenfunctions.push_back(nodal_eigenfunction(u, mesh, nodal));
  }
  out.cluster = ep.cluster;
  return out;
}

// ---------------------------------------------------------------------------
// Complex spectra
// ---------------------------------------------------------------------------

Spectrum1D eigenvalues_complex(std::shared_ptr<const Profile1D> u, const BoundaryCondition1D& bc,
                               std::size_t count, const ComplexOptions& opts) {
  if (!u) throw ConfigError(kModule, "missing profile");
  if (count == 0) throw ConfigError(kModule, "eigenvalue count must be positive");
  std::vector<double> sites;
  if (const auto* prim = as_primitive(*u)) {
    for (const auto& j : prim->jumps()) sites.push_back(j.site);
    for (double x : prim->grid().nodes()) sites.push_back(x);
  }
  std::erase_if(sites, [&](double x) { return !(x > u->a() && x < u->b()); });
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  const Grid1D mesh = Grid1D::uniform_with_sites(u->a(), u->b(), opts.mesh_cells, sites);
  const auto forms = galerkin_1d(*u, bc, mesh);
  numerics::SolverOptions so;
  so.force_dense = forms.size() <= 2000;
  numerics::PencilProblem<Complex> p{forms.total(), forms.M, static_cast<Eigen::Index>(std::min<std::size_t>(count, forms.size())), 1e-9};
  const auto ep = numerics::general_pencil_solve(p, so);

  const ShootingEngine engine(u, opts.shooting);
  auto g = [&](Complex lam, double ref) {
    const auto c = engine.characteristic(lam, bc);
    return c.mantissa * std::exp(c.log_scale - ref);
  };
  std::vector<Complex> values;
  std::vector<double> residuals;
  std::vector<bool> refined;
  for (Eigen::Index i = 0; i < ep.size(); ++i) {
    const Complex lam0 = ep.values[i];
    double gap = 1.0 + std::abs(lam0);
    for (Eigen::Index j = 0; j < ep.size(); ++j)
      if (j != i) gap = std::min(gap, std::abs(ep.values[j] - lam0));
    Complex lam = lam0;
    bool ok = false;
    for (int it = 0; it < opts.max_newton; ++it) {
      const auto c = engine.characteristic(lam, bc);
      if (c.relative_residual <= 1e-15) {
        ok = true;
        break;
      }
      const double d = 1e-6 * (1.0 + std::abs(lam));
      const Complex f0 = c.mantissa;
      const Complex fp = g(lam + d, c.log_scale), fm = g(lam - d, c.log_scale);
      const Complex deriv = (fp - fm) / (2.0 * d);
      if (deriv == Complex(0) || !std::isfinite(std::abs(deriv))) break;
      const Complex stepv = f0 / deriv;
      lam -= stepv;
      if (!std::isfinite(std::abs(lam))) break;
      if (std::abs(stepv) <= 1e-14 * (1.0 + std::abs(lam))) {
        ok = true;
        break;
      }
    }
    const auto c = engine.characteristic(lam, bc);
    ok = ok && c.relative_residual <= opts.target_residual && std::abs(lam - lam0) <= 0.25 * gap;
    if (ok) {
      values.push_back(lam);
      residuals.push_back(c.relative_residual);
    } else {
      values.push_back(lam0);
      residuals.push_back(ep.residuals[i]);
    }
    refined.push_back(ok);
  }
  Eigen::VectorXcd ev(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) ev[i] = values[i];
  const auto order = numerics::spectral_order(ev);
  Spectrum1D out;
  out.engine = Engine::Shooting;
  for (auto k : order) {
    out.eigenvalues.push_back(values[k]);
    out.residuals.push_back(residuals[k]);
    out.refined.push_back(refined[k]);
    out.eigenfunctions.push_back(sample_eigenfunction(engine.propagate(values[k], engine.eigen_initial(values[k], bc))));
  }
  out.cluster = clusters_of(out.eigenvalues);
  return out;
}

}  // namespace singspec::quasi1d
