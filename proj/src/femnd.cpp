#include "singspec/femnd.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

namespace singspec::femnd {

namespace {
constexpr const char* kModule = "femnd";

using Vec2 = Eigen::Vector2d;

std::pair<int, int> edge_key(int a, int b) { return a < b ? std::pair{a, b} : std::pair{b, a}; }

double signed_area(const Vec2& a, const Vec2& b, const Vec2& c) {
  return 0.5 * ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x());
}
}  // namespace

double Mesh2D::triangle_area(std::size_t t) const {
  const auto& tr = triangles[t];
  return signed_area(vertices[tr[0]], vertices[tr[1]], vertices[tr[2]]);
}

double Mesh2D::area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) s += triangle_area(t);
  return s;
}

std::vector<std::array<int, 2>> Mesh2D::boundary_edges() const {
  std::map<std::pair<int, int>, int> count;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k) ++count[edge_key(t[k], t[(k + 1) % 3])];
  std::vector<std::array<int, 2>> out;
  for (const auto& t : triangles)
    for (int k = 0; k < 3; ++k)
      if (count[edge_key(t[k], t[(k + 1) % 3])] == 1) out.push_back({t[k], t[(k + 1) % 3]});
  return out;
}

std::size_t Mesh2D::boundary_count() const {
  return static_cast<std::size_t>(std::count(boundary.begin(), boundary.end(), true));
}

void Mesh2D::validate() const {
  if (boundary.size() != vertices.size()) throw ConfigError(kModule, "boundary flags do not match vertices");
  std::map<std::pair<int, int>, int> count;
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (int v : triangles[t])
      if (v < 0 || v >= static_cast<int>(vertices.size())) throw ConfigError(kModule, "triangle index out of range");
    if (!(triangle_area(t) > 0)) throw ConfigError(kModule, "triangle with nonpositive area");
    for (int k = 0; k < 3; ++k) ++count[edge_key(triangles[t][k], triangles[t][(k + 1) % 3])];
  }
  std::vector<bool> on_edge(vertices.size(), false);
  for (const auto& [e, c] : count) {
    if (c > 2) throw ConfigError(kModule, "edge shared by more than two triangles");
    if (c == 1) on_edge[e.first] = on_edge[e.second] = true;
  }
  if (on_edge != boundary) throw ConfigError(kModule, "boundary flags disagree with boundary edges");
}

Mesh2D mesh_rectangle(double Lx, double Ly, int nx, int ny) {
  if (nx < 2 || ny < 2) throw ConfigError(kModule, "rectangle mesh needs nx, ny >= 2");
  if (!(Lx > 0 && Ly > 0)) throw ConfigError(kModule, "rectangle sides must be positive");
  Mesh2D m;
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      m.vertices.emplace_back(i == nx ? Lx : Lx * i / nx, j == ny ? Ly : Ly * j / ny);
      m.boundary.push_back(i == 0 || j == 0 || i == nx || j == ny);
    }
  }
  auto v = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      m.triangles.push_back({v(i, j), v(i + 1, j), v(i + 1, j + 1)});
      m.triangles.push_back({v(i, j), v(i + 1, j + 1), v(i, j + 1)});
    }
  }
  std::ostringstream os;
  os.precision(17);
  os << "rect:" << Lx << "," << Ly << "," << nx << "," << ny;
  m.descriptor = os.str();
  return m;
}

Mesh2D mesh_disk(double R, int level, Eigen::Vector2d center) {
  if (!(R > 0)) throw ConfigError(kModule, "disk radius must be positive");
  if (level < 0) throw ConfigError(kModule, "refinement level must be >= 0");
  Mesh2D m;
  m.vertices.push_back(center);
  m.boundary.push_back(false);
  for (int k = 0; k < 6; ++k) {
    const double a = kPi * k / 3.0;
    m.vertices.push_back(center + R * Vec2(std::cos(a), std::sin(a)));
    m.boundary.push_back(true);
  }
  for (int k = 0; k < 6; ++k) m.triangles.push_back({0, 1 + k, 1 + (k + 1) % 6});

  for (int l = 0; l < level; ++l) {
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : m.triangles)
      for (int k = 0; k < 3; ++k) ++count[edge_key(t[k], t[(k + 1) % 3])];
    std::map<std::pair<int, int>, int> mid;
    auto midpoint = [&](int a, int b) {
      const auto key = edge_key(a, b);
      auto it = mid.find(key);
      if (it != mid.end()) return it->second;
      Vec2 p = 0.5 * (m.vertices[a] + m.vertices[b]);
      const bool on_boundary = count[key] == 1;
      if (on_boundary) p = center + R * (p - center).normalized();
      m.vertices.push_back(p);
      m.boundary.push_back(on_boundary);
      const int id = static_cast<int>(m.vertices.size()) - 1;
      mid.emplace(key, id);
      return id;
    };
    std::vector<std::array<int, 3>> next;
    next.reserve(4 * m.triangles.size());
    for (const auto& t : m.triangles) {
      const int ab = midpoint(t[0], t[1]), bc = midpoint(t[1], t[2]), ca = midpoint(t[2], t[0]);
      next.push_back({t[0], ab, ca});
      next.push_back({ab, t[1], bc});
      next.push_back({ca, bc, t[2]});
      next.push_back({ab, bc, ca});
    }
    m.triangles = std::move(next);
  }
  std::ostringstream os;
  os.precision(17);
  os << "disk:" << R << "," << level;
  m.descriptor = os.str();
  return m;
}

void write_mesh(std::ostream& os, const Mesh2D& mesh) {
  os << "# singspec mesh\n# domain " << mesh.descriptor << "\n";
  os << "# vertex lines: x y boundary(0|1); triangle lines: i j k (counterclockwise, 0-based)\n";
  os.precision(17);
  os << "vertices " << mesh.vertices.size() << "\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i)
    os << mesh.vertices[i].x() << " " << mesh.vertices[i].y() << " " << (mesh.boundary[i] ? 1 : 0) << "\n";
  os << "triangles " << mesh.triangles.size() << "\n";
  for (const auto& t : mesh.triangles) os << t[0] << " " << t[1] << " " << t[2] << "\n";
}

// ---------------------------------------------------------------------------
// Assembly
// ---------------------------------------------------------------------------

namespace {

using Moments = Eigen::Matrix<Complex, 3, 2>;  // row i: int V phi_i

struct Tri {
  Vec2 p[3];
};

bool contains(const Tri& t, const Vec2& x) {
  const double scale = (t.p[1] - t.p[0]).norm() + (t.p[2] - t.p[0]).norm();
  const double tol = 1e-12 * scale * scale;
  const double a = signed_area(t.p[0], t.p[1], x), b = signed_area(t.p[1], t.p[2], x),
               c = signed_area(t.p[2], t.p[0], x);
  return a >= -tol && b >= -tol && c >= -tol;
}

class MomentIntegrator {
 public:
  MomentIntegrator(const potentials::VectorField& V, const numerics::QuadratureRule<2>& rule)
      : V_(V), rule_(rule) {}

  // Moments over `child` of V times the barycentric functions of `parent`.
  Moments on(const Tri& parent, const Tri& child) const {
    Eigen::Matrix2d J;
    J.col(0) = parent.p[1] - parent.p[0];
    J.col(1) = parent.p[2] - parent.p[0];
    const Eigen::Matrix2d Jinv = J.inverse();
    const double area = signed_area(child.p[0], child.p[1], child.p[2]);
    Moments m = Moments::Zero();
    for (std::size_t q = 0; q < rule_.nodes.size(); ++q) {
      const auto& xi = rule_.nodes[q];
      const Vec2 x = child.p[0] + xi[0] * (child.p[1] - child.p[0]) + xi[1] * (child.p[2] - child.p[0]);
      const Vec2 bary = Jinv * (x - parent.p[0]);
      const double phi[3] = {1.0 - bary[0] - bary[1], bary[0], bary[1]};
      const auto v = V_(potentials::Point(x.x(), x.y(), 0.0));
      if (!std::isfinite(std::abs(v[0])) || !std::isfinite(std::abs(v[1])))
        throw NumericalError(kModule, "field is not finite at a quadrature point");
      const double w = 2.0 * area * rule_.weights[q];
      for (int i = 0; i < 3; ++i) {
        m(i, 0) += w * phi[i] * v[0];
        m(i, 1) += w * phi[i] * v[1];
      }
    }
    return m;
  }

 private:
  const potentials::VectorField& V_;
  const numerics::QuadratureRule<2>& rule_;
};

std::array<Tri, 4> split(const Tri& t) {
  const Vec2 ab = 0.5 * (t.p[0] + t.p[1]), bc = 0.5 * (t.p[1] + t.p[2]), ca = 0.5 * (t.p[2] + t.p[0]);
  return {Tri{{t.p[0], ab, ca}}, Tri{{ab, t.p[1], bc}}, Tri{{ca, bc, t.p[2]}}, Tri{{ab, bc, ca}}};
}

Moments graded_moments(const MomentIntegrator& mi, const Tri& t, const std::vector<Vec2>& sites,
                       const AssemblyOptions& opts) {
  auto singular = [&](const Tri& c) {
    for (const auto& s : sites)
      if (contains(c, s)) return true;
    return false;
  };
  Moments regular = Moments::Zero();
  std::vector<Tri> active{t};
  Moments previous = mi.on(t, t);
  for (int level = 1; level <= opts.max_refinement; ++level) {
    std::vector<Tri> next;
    for (const auto& a : active) {
      for (const auto& c : split(a)) {
        if (singular(c)) {
          next.push_back(c);
        } else {
          regular += mi.on(t, c);
        }
      }
    }
    active = std::move(next);
    Moments now = regular;
    for (const auto& a : active) now += mi.on(t, a);
    const double scale = std::max(now.cwiseAbs().maxCoeff(), 1e-300);
    if ((now - previous).cwiseAbs().maxCoeff() <= opts.singular_tol * scale) return now;
    previous = now;
  }
  throw NumericalError(kModule, "singular quadrature refinement exceeded");
}

}  // namespace

AssembledForms assemble_forms(const Mesh2D& mesh, const potentials::VectorField* V, Space space,
                              const AssemblyOptions& opts) {
  if (space != Space::Dirichlet && space != Space::Neumann)
    throw ConfigError(kModule, "2D assembly supports the Dirichlet and Neumann spaces");
  if (V && V->dimension() != 2) throw ConfigError(kModule, "vector field must be two-dimensional");
  mesh.validate();
  const auto rule = numerics::triangle_rule(opts.quadrature_order);
  const int nv = static_cast<int>(mesh.vertices.size());
  std::vector<int> dof(nv, -1);
  int ndof = 0;
  for (int i = 0; i < nv; ++i)
    if (space == Space::Neumann || !mesh.boundary[i]) dof[i] = ndof++;

  std::vector<Vec2> sites;
  if (V) {
    for (const auto& s : V->singular_sites()) sites.emplace_back(s.x(), s.y());
  }
  std::optional<MomentIntegrator> mi;
  if (V) mi.emplace(*V, rule);

  std::vector<Eigen::Triplet<Complex>> ta, tb, tm;
  ta.reserve(9 * mesh.triangles.size());
  tm.reserve(9 * mesh.triangles.size());
  if (V) tb.reserve(9 * mesh.triangles.size());
  for (const auto& tri : mesh.triangles) {
    Tri t{{mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]}};
    Eigen::Matrix2d J;
    J.col(0) = t.p[1] - t.p[0];
    J.col(1) = t.p[2] - t.p[0];
    const double area = 0.5 * J.determinant();
    const Eigen::Matrix2d JinvT = J.inverse().transpose();
    Eigen::Matrix<double, 3, 2> G;
    G.row(1) = (JinvT * Vec2(1, 0)).transpose();
    G.row(2) = (JinvT * Vec2(0, 1)).transpose();
    G.row(0) = -G.row(1) - G.row(2);
    Eigen::Matrix3d K;
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) K(i, j) = K(j, i) = area * (G(i, 0) * G(j, 0) + G(i, 1) * G(j, 1));
    Eigen::Matrix3cd Bl = Eigen::Matrix3cd::Zero();
    if (V) {
      bool touches = false;
      for (const auto& s : sites) touches = touches || contains(t, s);
      const Moments m = touches ? graded_moments(*mi, t, sites, opts) : mi->on(t, t);
      Eigen::Matrix3cd b;  // b(i, j) = grad phi_j . m_i
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b(i, j) = G(j, 0) * m(i, 0) + G(j, 1) * m(i, 1);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) Bl(i, j) = -(b(i, j) + b(j, i));
    }
    for (int i = 0; i < 3; ++i) {
      const int I = dof[tri[i]];
      if (I < 0) continue;
      for (int j = 0; j < 3; ++j) {
        const int Jd = dof[tri[j]];
        if (Jd < 0) continue;
        ta.emplace_back(I, Jd, K(i, j));
        tm.emplace_back(I, Jd, area / 12.0 * (i == j ? 2.0 : 1.0));
        if (V) tb.emplace_back(I, Jd, Bl(i, j));
      }
    }
  }
  AssembledForms f;
  f.dimension = 2;
  f.space = space;
  f.A.resize(ndof, ndof);
  f.B.resize(ndof, ndof);
  f.M.resize(ndof, ndof);
  f.A.setFromTriplets(ta.begin(), ta.end());
  f.B.setFromTriplets(tb.begin(), tb.end());
  f.M.setFromTriplets(tm.begin(), tm.end());
  std::vector<Eigen::Triplet<Complex>> tp;
  for (int i = 0; i < nv; ++i)
    if (dof[i] >= 0) tp.emplace_back(i, dof[i], 1.0);
  f.prolongation.resize(nv, ndof);
  f.prolongation.setFromTriplets(tp.begin(), tp.end());
  f.hermitian = !V || V->is_real();
  return f;
}

SpectrumND lowest_eigenpairs(const AssembledForms& forms, Eigen::Index k, const numerics::SolverOptions& opts,
                             double tol) {
  if (k < 1 || k >= forms.size()) throw ConfigError(kModule, "requested count must be below the dimension");
  const auto K = forms.total();
  bool real = true;
  for (int c = 0; c < K.outerSize() && real; ++c)
    for (Eigen::SparseMatrix<Complex>::InnerIterator it(K, c); it; ++it)
      if (it.value().imag() != 0.0) {
        real = false;
        break;
      }
  numerics::Eigenpairs ep;
  if (forms.hermitian && real) {
    numerics::PencilProblem<double> p{K.real(), forms.M.real(), k, tol};
    ep = numerics::hermitian_pencil_solve(p, opts);
  } else if (forms.hermitian) {
    numerics::PencilProblem<Complex> p{K, forms.M, k, tol};
    ep = numerics::hermitian_pencil_solve(p, opts);
  } else {
    numerics::PencilProblem<Complex> p{K, forms.M, k, tol};
    ep = numerics::general_pencil_solve(p, opts);
  }
  SpectrumND s;
  s.values = ep.values;
  s.vectors = ep.right;
  s.nodal = forms.prolongation * ep.right;
  s.residuals = ep.residuals;
  s.cluster = ep.cluster;
  s.dense = ep.dense;
  return s;
}

double boundary_flux(const SpectrumND& spectrum, Eigen::Index index, const AssembledForms& forms,
                     const Mesh2D& mesh, const potentials::VectorField* V) {
  if (forms.space != Space::Neumann) throw ConfigError(kModule, "boundary flux is defined on the Neumann space only");
  if (index < 0 || index >= spectrum.nodal.cols()) throw ConfigError(kModule, "eigenpair index out of range");
  if (static_cast<std::size_t>(spectrum.nodal.rows()) != mesh.vertices.size())
    throw ConfigError(kModule, "spectrum does not belong to this mesh");
  const Eigen::VectorXcd f = spectrum.nodal.col(index);
  std::map<std::pair<int, int>, std::size_t> owner;
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t)
    for (int k = 0; k < 3; ++k) owner[{mesh.triangles[t][k], mesh.triangles[t][(k + 1) % 3]}] = t;
  const auto gl = numerics::gauss_legendre(4);
  double flux = 0.0;
  for (const auto& e : mesh.boundary_edges()) {
    const auto& tri = mesh.triangles[owner.at({e[0], e[1]})];
    const Vec2 p0 = mesh.vertices[tri[0]], p1 = mesh.vertices[tri[1]], p2 = mesh.vertices[tri[2]];
    Eigen::Matrix2d J;
    J.col(0) = p1 - p0;
    J.col(1) = p2 - p0;
    const Eigen::Matrix2d JinvT = J.inverse().transpose();
    const Vec2 g1 = JinvT * Vec2(1, 0), g2 = JinvT * Vec2(0, 1), g0 = -g1 - g2;
    const Eigen::Vector2cd grad = f[tri[0]] * g0.cast<Complex>() + f[tri[1]] * g1.cast<Complex>() +
                                  f[tri[2]] * g2.cast<Complex>();
    const Vec2 a = mesh.vertices[e[0]], b = mesh.vertices[e[1]];
    const double len = (b - a).norm();
    const Vec2 n = Vec2((b - a).y(), -(b - a).x()) / len;
    if (!V) {
      flux += std::abs(grad.dot(n.cast<Complex>())) * len;
      continue;
    }
    for (std::size_t q = 0; q < gl.nodes.size(); ++q) {
      const double s = 0.5 * (1.0 + gl.nodes[q][0]);
      const Vec2 x = a + s * (b - a);
      const Complex fx = (1.0 - s) * f[e[0]] + s * f[e[1]];
      const auto v = (*V)(potentials::Point(x.x(), x.y(), 0.0));
      const Complex qn = (grad[0] - v[0] * fx) * n.x() + (grad[1] - v[1] * fx) * n.y();
      flux += 0.5 * len * gl.weights[q] * std::abs(qn);
    }
  }
  return flux;
}

}  // namespace singspec::femnd
