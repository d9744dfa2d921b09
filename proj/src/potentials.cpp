#include "singspec/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "singspec/numerics.hpp"

namespace singspec::potentials {

namespace {
constexpr const char* kModule = "potentials";

Complex horner(const Primitive1D::Coeffs& c, double t) { return c[0] + t * (c[1] + t * c[2]); }

// Shift of the local origin: p(t + d) as a polynomial in t.
Primitive1D::Coeffs reexpand(const Primitive1D::Coeffs& c, double d) {
  return {c[0] + d * (c[1] + d * c[2]), c[1] + 2.0 * d * c[2], c[2]};
}
}  // namespace

// ---------------------------------------------------------------------------
// Grid1D
// ---------------------------------------------------------------------------

Grid1D::Grid1D(std::vector<double> nodes) : nodes_(std::move(nodes)) {
  if (nodes_.size() < 3) throw ConfigError(kModule, "grid needs at least two cells");
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (!std::isfinite(nodes_[i])) throw ConfigError(kModule, "grid node is not finite");
    if (i > 0 && !(nodes_[i] > nodes_[i - 1]))
      throw ConfigError(kModule, "grid nodes must be strictly increasing");
  }
}

Grid1D Grid1D::uniform(double a, double b, int cells) {
  if (!(b > a)) throw ConfigError(kModule, "interval must satisfy a < b");
  if (cells < 2) throw ConfigError(kModule, "grid needs at least two cells");
  std::vector<double> x(cells + 1);
  for (int i = 0; i <= cells; ++i) x[i] = a + (b - a) * static_cast<double>(i) / cells;
  x.back() = b;
  return Grid1D(std::move(x));
}

Grid1D Grid1D::uniform_with_sites(double a, double b, int cells, std::span<const double> sites) {
  Grid1D g = uniform(a, b, cells);
  std::vector<double> x = g.nodes_;
  for (double s : sites) {
    if (!(s > a && s < b)) {
      std::ostringstream os;
      os << "site " << s << " is outside the open interval (" << a << ", " << b << ")";
      throw ConfigError(kModule, os.str());
    }
    auto it = std::lower_bound(x.begin(), x.end(), s);
    const double tol = 1e-12 * (b - a);
    if (it != x.end() && std::abs(*it - s) <= tol) {
      if (it != x.begin() && it + 1 != x.end()) *it = s;
    } else if (it != x.begin() && std::abs(*(it - 1) - s) <= tol) {
      if (it - 1 != x.begin()) *(it - 1) = s;
    } else {
      x.insert(it, s);
    }
  }
  return Grid1D(std::move(x));
}

int Grid1D::cell_of(double x) const {
  auto it = std::upper_bound(nodes_.begin(), nodes_.end(), x);
  int i = static_cast<int>(it - nodes_.begin()) - 1;
  return std::clamp(i, 0, cells() - 1);
}

std::optional<int> Grid1D::node_index(double x, double rel_tol) const {
  auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
  const double tol = rel_tol * (b() - a());
  if (it != nodes_.end() && std::abs(*it - x) <= tol) return static_cast<int>(it - nodes_.begin());
  if (it != nodes_.begin() && std::abs(*(it - 1) - x) <= tol)
    return static_cast<int>(it - nodes_.begin()) - 1;
  return std::nullopt;
}

Grid1D Grid1D::refined(int factor) const {
  if (factor < 1) throw ConfigError(kModule, "refinement factor must be positive");
  std::vector<double> x;
  x.reserve(cells() * factor + 1);
  for (int i = 0; i < cells(); ++i) {
    for (int j = 0; j < factor; ++j) x.push_back(nodes_[i] + width(i) * j / factor);
  }
  x.push_back(b());
  return Grid1D(std::move(x));
}

// ---------------------------------------------------------------------------
// Primitive1D
// ---------------------------------------------------------------------------

Primitive1D::Primitive1D(Grid1D grid, std::vector<Coeffs> cells, std::vector<Jump> jumps)
    : grid_(std::move(grid)), cells_(std::move(cells)), jumps_(std::move(jumps)) {
  if (static_cast<int>(cells_.size()) != grid_.cells())
    throw ConfigError(kModule, "one coefficient triple per cell is required");
  for (const auto& c : cells_) {
    for (const auto& v : c) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
        throw ConfigError(kModule, "cell coefficient is not finite");
    }
  }
  std::sort(jumps_.begin(), jumps_.end(), [](const Jump& l, const Jump& r) { return l.site < r.site; });
  std::vector<Complex> at_node(grid_.nodes().size(), Complex(0));
  for (std::size_t j = 0; j < jumps_.size(); ++j) {
    const auto& jp = jumps_[j];
    if (!(jp.site > a() && jp.site < b())) throw ConfigError(kModule, "jump site outside the open interval");
    auto idx = grid_.node_index(jp.site);
    if (!idx) throw ConfigError(kModule, "jump site is not a grid node");
    if (jp.height == Complex(0)) throw ConfigError(kModule, "jump heights must be nonzero");
    if (j > 0 && *grid_.node_index(jumps_[j - 1].site) == *idx)
      throw ConfigError(kModule, "duplicate jump site");
    jumps_[j].site = grid_.node(*idx);
    at_node[*idx] = jp.height;
  }
  for (int i = 1; i < grid_.cells(); ++i) {
    const Complex left = horner(cells_[i - 1], grid_.width(i - 1));
    const Complex right = cells_[i][0];
    const double tol = 1e-9 * (1.0 + std::abs(left) + std::abs(right));
    if (std::abs(right - left - at_node[i]) > tol) {
      std::ostringstream os;
      os << "cell values disagree with the jump list at x = " << grid_.node(i);
      throw ConfigError(kModule, os.str());
    }
  }
}

Primitive1D Primitive1D::constant(double a, double b, Complex c) {
  return Primitive1D(Grid1D::uniform(a, b, 2), {Coeffs{c, 0.0, 0.0}, Coeffs{c, 0.0, 0.0}}, {});
}

Complex Primitive1D::value(double x) const {
  const int i = grid_.cell_of(x);
  return horner(cells_[i], x - grid_.node(i));
}

Complex Primitive1D::value_in_piece(int piece, double x) const {
  return horner(cells_[piece], x - grid_.node(piece));
}

Complex Primitive1D::value_left(double x) const {
  auto idx = grid_.node_index(x, 0.0);
  if (idx && *idx > 0) return horner(cells_[*idx - 1], grid_.width(*idx - 1));
  return value(x);
}

bool Primitive1D::is_real() const {
  for (const auto& c : cells_)
    for (const auto& v : c)
      if (v.imag() != 0.0) return false;
  return true;
}

double Primitive1D::sup_abs() const {
  // |p| <= sqrt(max|Re p|^2 + max|Im p|^2); each part is a real quadratic.
  auto real_max = [](double c0, double c1, double c2, double w) {
    double m = std::max(std::abs(c0), std::abs(c0 + w * (c1 + w * c2)));
    if (c2 != 0.0) {
      const double t = -c1 / (2.0 * c2);
      if (t > 0 && t < w) m = std::max(m, std::abs(c0 + t * (c1 + t * c2)));
    }
    return m;
  };
  double s = 0.0;
  for (int i = 0; i < grid_.cells(); ++i) {
    const auto& c = cells_[i];
    const double w = grid_.width(i);
    const double re = real_max(c[0].real(), c[1].real(), c[2].real(), w);
    const double im = real_max(c[0].imag(), c[1].imag(), c[2].imag(), w);
    s = std::max(s, std::hypot(re, im));
  }
  return s;
}

Primitive1D Primitive1D::shifted(Complex c) const {
  auto cells = cells_;
  for (auto& k : cells) k[0] += c;
  return Primitive1D(grid_, std::move(cells), jumps_);
}

Primitive1D Primitive1D::scaled(Complex c) const {
  auto cells = cells_;
  for (auto& k : cells)
    for (auto& v : k) v *= c;
  std::vector<Jump> jumps;
  if (c != Complex(0)) {
    for (auto j : jumps_) jumps.push_back({j.site, j.height * c});
  }
  return Primitive1D(grid_, std::move(cells), std::move(jumps));
}

Primitive1D Primitive1D::on_grid(const Grid1D& finer) const {
  for (double x : grid_.nodes()) {
    if (!finer.node_index(x)) throw ConfigError(kModule, "grid does not contain the primitive's nodes");
  }
  if (std::abs(finer.a() - a()) > 1e-12 * (b() - a()) || std::abs(finer.b() - b()) > 1e-12 * (b() - a()))
    throw ConfigError(kModule, "grid spans a different interval");
  std::vector<Coeffs> cells(finer.cells());
  for (int i = 0; i < finer.cells(); ++i) {
    const double mid = 0.5 * (finer.node(i) + finer.node(i + 1));
    const int j = grid_.cell_of(mid);
    cells[i] = reexpand(cells_[j], finer.node(i) - grid_.node(j));
  }
  return Primitive1D(finer, std::move(cells), jumps_);
}

Complex Primitive1D::integral() const {
  Complex s = 0.0;
  for (int i = 0; i < grid_.cells(); ++i) {
    const double w = grid_.width(i);
    const auto& c = cells_[i];
    s += c[0] * w + c[1] * (w * w / 2.0) + c[2] * (w * w * w / 3.0);
  }
  return s;
}

Primitive1D primitive_from_deltas(const Closure1D& base, std::span<const Delta> deltas,
                                  const Grid1D& grid) {
  std::vector<Jump> jumps;
  for (const auto& d : deltas) {
    if (!(d.site > grid.a() && d.site < grid.b())) {
      std::ostringstream os;
      os << "delta site " << d.site << " is outside the open interval";
      throw ConfigError(kModule, os.str());
    }
    auto idx = grid.node_index(d.site);
    if (!idx) {
      std::ostringstream os;
      os << "delta site " << d.site << " is not a grid node";
      throw ConfigError(kModule, os.str());
    }
    auto it = std::find_if(jumps.begin(), jumps.end(),
                           [&](const Jump& j) { return j.site == grid.node(*idx); });
    if (it == jumps.end()) {
      jumps.push_back({grid.node(*idx), d.strength});
    } else {
      it->height += d.strength;
    }
  }
  std::erase_if(jumps, [](const Jump& j) { return j.height == Complex(0); });
  std::sort(jumps.begin(), jumps.end(), [](const Jump& l, const Jump& r) { return l.site < r.site; });

  std::vector<Primitive1D::Coeffs> cells(grid.cells());
  Complex level = 0.0;
  std::size_t next = 0;
  for (int i = 0; i < grid.cells(); ++i) {
    while (next < jumps.size() && jumps[next].site <= grid.node(i)) level += jumps[next++].height;
    const double x0 = grid.node(i), w = grid.width(i);
    const Complex f0 = base(x0), fm = base(x0 + 0.5 * w), f1 = base(grid.node(i + 1));
    const Complex c2 = 2.0 * (f0 - 2.0 * fm + f1) / (w * w);
    const Complex c1 = (f1 - f0) / w - c2 * w;
    cells[i] = {f0 + level, c1, c2};
  }
  // Sampling a non-polynomial base leaves tiny mismatches at nodes; make the
  // cells continuous apart from the declared jumps.
  std::size_t j = 0;
  for (int i = 1; i < grid.cells(); ++i) {
    Complex h = 0.0;
    while (j < jumps.size() && jumps[j].site < grid.node(i)) ++j;
    if (j < jumps.size() && jumps[j].site == grid.node(i)) h = jumps[j].height;
    cells[i][0] = horner(cells[i - 1], grid.width(i - 1)) + h;
  }
  return Primitive1D(grid, std::move(cells), std::move(jumps));
}

// ---------------------------------------------------------------------------
// Mollifier kernel
// ---------------------------------------------------------------------------

namespace {

double raw_bump(double t) {
  const double s = 1.0 - t * t;
  return s > 0.0 ? std::exp(-1.0 / s) : 0.0;
}

struct MomentTable {
  static constexpr int kIntervals = 4096;
  std::vector<std::array<double, 3>> cum;
  numerics::QuadratureRule<1> gl = numerics::gauss_legendre(10);
  double mass = 1.0;

  MomentTable() {
    cum.resize(kIntervals + 1);
    cum[0] = {0, 0, 0};
    for (int j = 0; j < kIntervals; ++j) {
      cum[j + 1] = cum[j];
      auto part = partial(left(j), left(j + 1));
      for (int k = 0; k < 3; ++k) cum[j + 1][k] += part[k];
    }
    mass = cum[kIntervals][0];
  }
  static double left(int j) { return -1.0 + 2.0 * j / kIntervals; }
  std::array<double, 3> partial(double lo, double hi) const {
    std::array<double, 3> s{0, 0, 0};
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    for (std::size_t i = 0; i < gl.nodes.size(); ++i) {
      const double t = c + h * gl.nodes[i][0];
      const double w = h * gl.weights[i] * raw_bump(t);
      s[0] += w;
      s[1] += w * t;
      s[2] += w * t * t;
    }
    return s;
  }
  std::array<double, 3> at(double t) const {
    if (t <= -1.0) return {0, 0, 0};
    if (t >= 1.0) return {1.0, cum[kIntervals][1] / mass, cum[kIntervals][2] / mass};
    int j = static_cast<int>((t + 1.0) * 0.5 * kIntervals);
    j = std::clamp(j, 0, kIntervals - 1);
    auto base = cum[j];
    auto part = partial(left(j), t);
    return {(base[0] + part[0]) / mass, (base[1] + part[1]) / mass, (base[2] + part[2]) / mass};
  }
};

const MomentTable& moment_table() {
  static const MomentTable table;
  return table;
}

}  // namespace

double bump(double t) { return raw_bump(t) / moment_table().mass; }

std::array<double, 3> bump_moments(double t) { return moment_table().at(t); }

double jump_clearance(const Primitive1D& u) {
  std::vector<double> pts{u.a()};
  for (const auto& j : u.jumps()) pts.push_back(j.site);
  pts.push_back(u.b());
  double d = u.b() - u.a();
  for (std::size_t i = 1; i < pts.size(); ++i) d = std::min(d, pts[i] - pts[i - 1]);
  return d;
}

MollifiedPrimitive1D::MollifiedPrimitive1D(std::shared_ptr<const Primitive1D> base, double h)
    : base_(std::move(base)), h_(h) {
  if (!base_) throw ConfigError(kModule, "mollify needs a primitive");
  if (!(h > 0) || !std::isfinite(h)) throw ConfigError(kModule, "mollification scale must be positive");
  const double limit = 0.5 * jump_clearance(*base_);
  if (h > limit * (1.0 + 1e-12)) {
    std::ostringstream os;
    os << "mollification scale " << h << " exceeds half the jump clearance " << limit;
    throw ConfigError(kModule, os.str());
  }
  const auto& x = base_->grid().nodes();
  const double a = x.front(), b = x.back();
  for (auto it = x.rbegin(); it != x.rend(); ++it) ext_nodes_.push_back(2 * a - *it);
  ext_nodes_.pop_back();
  ext_nodes_.insert(ext_nodes_.end(), x.begin(), x.end());
  for (auto it = x.rbegin() + 1; it != x.rend(); ++it) ext_nodes_.push_back(2 * b - *it);
}

std::vector<double> MollifiedPrimitive1D::breakpoints() const {
  std::vector<double> p{a(), b()};
  for (const auto& j : base_->jumps()) {
    p.push_back(std::max(a(), j.site - h_));
    p.push_back(std::min(b(), j.site + h_));
  }
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p;
}

Complex MollifiedPrimitive1D::value(double x) const {
  const auto& g = base_->grid();
  const int m = g.cells();
  const double a = g.a(), b = g.b();
  const double lo = x - h_, hi = x + h_;
  auto first = std::upper_bound(ext_nodes_.begin(), ext_nodes_.end(), lo);
  std::size_t k = first == ext_nodes_.begin() ? 0 : static_cast<std::size_t>(first - ext_nodes_.begin()) - 1;
  Complex sum = 0.0;
  for (; k + 1 < ext_nodes_.size() && ext_nodes_[k] < hi; ++k) {
    const double y0 = ext_nodes_[k], y1 = ext_nodes_[k + 1];
    if (y1 <= lo) continue;
    // Piece coefficients in the local variable s = y - y0.
    Primitive1D::Coeffs c;
    const int idx = static_cast<int>(k) - m;  // cell index inside [a, b] when 0 <= idx < m
    if (idx >= 0 && idx < m) {
      c = base_->cells()[idx];
    } else {
      // Reflected cell: original cell j, local variable w - s.
      const int j = idx < 0 ? (-idx - 1) : (2 * m - 1 - idx);
      const auto& o = base_->cells()[j];
      const double w = g.width(j);
      c = {o[0] + w * (o[1] + w * o[2]), -o[1] - 2.0 * w * o[2], o[2]};
      (void)a;
      (void)b;
    }
    const double d = x - y0;
    const Complex q0 = horner(c, d);
    const Complex q1 = -h_ * (c[1] + 2.0 * d * c[2]);
    const Complex q2 = c[2] * (h_ * h_);
    const double t1 = std::max(-1.0, (x - y1) / h_);
    const double t2 = std::min(1.0, (x - y0) / h_);
    if (!(t2 > t1)) continue;
    const auto m1 = bump_moments(t1), m2 = bump_moments(t2);
    sum += q0 * (m2[0] - m1[0]) + q1 * (m2[1] - m1[1]) + q2 * (m2[2] - m1[2]);
  }
  return sum;
}

MollifiedPrimitive1D mollify(std::shared_ptr<const Primitive1D> u, double h) {
  return MollifiedPrimitive1D(std::move(u), h);
}

// ---------------------------------------------------------------------------
// 1D norms
// ---------------------------------------------------------------------------

namespace {
std::vector<double> merged_breaks(const Profile1D& u, const Profile1D* v) {
  auto p = u.breakpoints();
  if (v) {
    auto q = v->breakpoints();
    p.insert(p.end(), q.begin(), q.end());
  }
  std::sort(p.begin(), p.end());
  p.erase(std::unique(p.begin(), p.end()), p.end());
  return p;
}
}  // namespace

double lp_norm(const Profile1D& u, double p) {
  if (!(p >= 1)) throw ConfigError(kModule, "exponent p must be >= 1");
  const auto pts = merged_breaks(u, nullptr);
  auto r = numerics::integrate_piecewise(
      [&](double x) { return std::pow(std::abs(u.value(x)), p); }, std::span<const double>(pts), 1e-13);
  return std::pow(r.value, 1.0 / p);
}

double lp_distance(const Profile1D& u, const Profile1D& v, double p) {
  if (!(p >= 1)) throw ConfigError(kModule, "exponent p must be >= 1");
  if (std::abs(u.a() - v.a()) > 1e-12 || std::abs(u.b() - v.b()) > 1e-12)
    throw ConfigError(kModule, "profiles live on different intervals");
  const auto pts = merged_breaks(u, &v);
  auto r = numerics::integrate_piecewise(
      [&](double x) { return std::pow(std::abs(u.value(x) - v.value(x)), p); },
      std::span<const double>(pts), 1e-12);
  return std::pow(r.value, 1.0 / p);
}

MollifiedFamily1D::MollifiedFamily1D(std::shared_ptr<const Primitive1D> base, std::vector<double> scales)
    : base_(std::move(base)), scales_(std::move(scales)) {
  if (scales_.empty()) throw ConfigError(kModule, "mollifier family needs at least one scale");
  for (std::size_t i = 1; i < scales_.size(); ++i) {
    if (!(scales_[i] < scales_[i - 1])) throw ConfigError(kModule, "scales must be strictly decreasing");
  }
  members_.resize(scales_.size());
  distances_.resize(scales_.size());
  parallel_for(scales_.size(), [&](std::size_t k) {
    members_[k] = std::make_shared<MollifiedPrimitive1D>(base_, scales_[k]);
    distances_[k] = lp_distance(*members_[k], *base_, 2.0);
  });
  for (std::size_t i = 1; i < distances_.size(); ++i) {
    if (distances_[i] > 1.1 * distances_[i - 1])
      throw NumericalError(kModule, "approximation norms are not decreasing along the family");
  }
}

// ---------------------------------------------------------------------------
// Domains and vector fields
// ---------------------------------------------------------------------------

int domain_dimension(const Domain& d) {
  return std::visit(
      [](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Interval>) return 1;
        if constexpr (std::is_same_v<T, Rectangle> || std::is_same_v<T, Disk>) return 2;
        return 3;
      },
      d);
}

double domain_volume(const Domain& d) {
  return std::visit(
      [](const auto& v) -> double {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Interval>) return v.b - v.a;
        if constexpr (std::is_same_v<T, Rectangle>) return (v.x1 - v.x0) * (v.y1 - v.y0);
        if constexpr (std::is_same_v<T, Disk>) return kPi * v.r * v.r;
        if constexpr (std::is_same_v<T, Box3>) return (v.hi - v.lo).prod();
        if constexpr (std::is_same_v<T, Ball>) return 4.0 / 3.0 * kPi * v.r * v.r * v.r;
        return 0.0;
      },
      d);
}

std::string describe(const Domain& d) {
  std::ostringstream os;
  os.precision(17);
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, Interval>) os << "interval:" << v.a << "," << v.b;
        if constexpr (std::is_same_v<T, Rectangle>) os << "rect:" << v.x0 << "," << v.y0 << "," << v.x1 << "," << v.y1;
        if constexpr (std::is_same_v<T, Disk>) os << "disk:" << v.cx << "," << v.cy << "," << v.r;
        if constexpr (std::is_same_v<T, Box3>)
          os << "box:" << v.lo.x() << "," << v.lo.y() << "," << v.lo.z() << "," << v.hi.x() << ","
             << v.hi.y() << "," << v.hi.z();
        if constexpr (std::is_same_v<T, Ball>) os << "ball:" << v.c.x() << "," << v.c.y() << "," << v.c.z() << "," << v.r;
      },
      d);
  return os.str();
}

namespace {
bool value_is_real(const FieldValue& v) { return v.imag().isZero(0.0); }
}  // namespace

VectorField::VectorField(int dimension, Domain domain, std::vector<FieldTerm> terms, double exponent)
    : n_(dimension), domain_(std::move(domain)), terms_(std::move(terms)), p_(exponent) {
  if (n_ < 1 || n_ > 3) throw ConfigError(kModule, "field dimension must be 1, 2 or 3");
  if (domain_dimension(domain_) != n_) throw ConfigError(kModule, "domain dimension does not match the field");
  if (!(p_ > 1)) throw ConfigError(kModule, "declared exponent must exceed 1");
  for (const auto& t : terms_) {
    if (!t.evaluate) throw ConfigError(kModule, "field term without evaluator");
  }
}

std::vector<Point> VectorField::singular_sites() const {
  std::vector<Point> s;
  for (const auto& t : terms_) s.insert(s.end(), t.singular_sites.begin(), t.singular_sites.end());
  return s;
}

FieldValue VectorField::operator()(const Point& x) const {
  FieldValue v = FieldValue::Zero();
  for (const auto& t : terms_) v += t.evaluate(x);
  return v;
}

namespace {
FieldTerm scale_term(const FieldTerm& t, Complex c) {
  FieldTerm s = t;
  auto f = t.evaluate;
  s.evaluate = [f, c](const Point& x) -> FieldValue { return c * f(x); };
  if (t.mollified) {
    auto m = t.mollified;
    s.mollified = [m, c](double h) { return scale_term(m(h), c); };
  }
  return s;
}
}  // namespace

VectorField VectorField::scaled(Complex c) const {
  std::vector<FieldTerm> terms;
  for (const auto& t : terms_) terms.push_back(scale_term(t, c));
  VectorField out(n_, domain_, std::move(terms), p_);
  out.real_ = real_ && c.imag() == 0.0;
  return out;
}

VectorField VectorField::operator+(const VectorField& o) const {
  if (o.n_ != n_) throw ConfigError(kModule, "cannot add fields of different dimension");
  std::vector<FieldTerm> terms = terms_;
  terms.insert(terms.end(), o.terms_.begin(), o.terms_.end());
  VectorField out(n_, domain_, std::move(terms), std::min(p_, o.p_));
  out.real_ = real_ && o.real_;
  return out;
}

VectorField VectorField::zero(int n, Domain d) { return VectorField(n, std::move(d), {}, 2.0); }

VectorField VectorField::constant(int n, Domain d, FieldValue c, double p) {
  for (int i = n; i < 3; ++i) c[i] = 0.0;
  FieldTerm t;
  t.label = "constant";
  t.evaluate = [c](const Point&) -> FieldValue { return c; };
  FieldTerm copy = t;
  t.mollified = [copy](double) { return copy; };
  VectorField out(n, std::move(d), {t}, p);
  out.real_ = value_is_real(c);
  return out;
}

VectorField VectorField::step(int n, Domain d, int axis, double position, FieldValue height, double p) {
  if (axis < 0 || axis >= n) throw ConfigError(kModule, "step axis out of range");
  for (int i = n; i < 3; ++i) height[i] = 0.0;
  FieldTerm t;
  t.label = "step";
  t.evaluate = [=](const Point& x) -> FieldValue {
    return x[axis] >= position ? height : FieldValue(FieldValue::Zero());
  };
  t.planes.push_back({axis, position});
  t.mollified = [=](double h) {
    FieldTerm m;
    m.label = "step-mollified";
    m.evaluate = [=](const Point& x) -> FieldValue {
      return height * bump_moments((x[axis] - position) / h)[0];
    };
    FieldTerm fixed = m;
    m.mollified = [fixed](double) { return fixed; };
    return m;
  };
  VectorField out(n, std::move(d), {t}, p);
  out.real_ = value_is_real(height);
  return out;
}

VectorField VectorField::radial_power(int n, Domain d, Point center, double beta, Complex amplitude,
                                      double p) {
  for (int i = n; i < 3; ++i) center[i] = 0.0;
  FieldTerm t;
  t.label = "radial-power";
  t.evaluate = [=](const Point& x) -> FieldValue {
    Point r = x - center;
    for (int i = n; i < 3; ++i) r[i] = 0.0;
    const double rho = r.norm();
    if (rho == 0.0) return FieldValue::Zero();
    return (amplitude * std::pow(rho, beta - 1.0)) * r.cast<Complex>();
  };
  t.singular_sites.push_back(center);
  VectorField out(n, std::move(d), {t}, p);
  out.real_ = amplitude.imag() == 0.0;
  return out;
}

VectorField VectorField::custom(int n, Domain d, std::function<FieldValue(const Point&)> f,
                                std::vector<Point> singular_sites, double p, bool real, std::string label) {
  FieldTerm t;
  t.label = std::move(label);
  t.evaluate = std::move(f);
  t.singular_sites = std::move(singular_sites);
  VectorField out(n, std::move(d), {t}, p);
  out.real_ = real;
  return out;
}

// ---------------------------------------------------------------------------
// L_p norms of fields
// ---------------------------------------------------------------------------

namespace {

template <int D>
using GBox = numerics::Box<D>;

template <int D>
NormEstimate finish(const numerics::GradedEstimate<double>& e, double p) {
  NormEstimate out;
  out.levels = e.levels;
  out.diverged = e.diverged || !std::isfinite(e.value);
  out.value = out.diverged ? std::numeric_limits<double>::infinity() : std::pow(e.value, 1.0 / p);
  return out;
}

template <int D>
numerics::GradedOptions graded_opts(const NormOptions& o) {
  numerics::GradedOptions g;
  g.rel_tol = o.rel_tol;
  g.max_level = o.max_level;
  return g;
}

}  // namespace

NormEstimate lp_norm(const VectorField& v, double p, const NormOptions& opts) {
  if (!(p >= 1)) throw ConfigError(kModule, "exponent p must be >= 1");
  auto mag = [&](const Point& x) { return std::pow(v(x).norm(), p); };
  const auto sites = v.singular_sites();
  std::vector<std::pair<int, double>> planes;
  for (const auto& t : v.terms()) planes.insert(planes.end(), t.planes.begin(), t.planes.end());

  return std::visit(
      [&](const auto& dom) -> NormEstimate {
        using T = std::decay_t<decltype(dom)>;
        if constexpr (std::is_same_v<T, Interval>) {
          GBox<1> box{Eigen::Matrix<double, 1, 1>(dom.a), Eigen::Matrix<double, 1, 1>(dom.b)};
          std::vector<GBox<1>> sing;
          for (const auto& s : sites) sing.push_back(GBox<1>::point(Eigen::Matrix<double, 1, 1>(s[0])));
          for (const auto& [ax, pos] : planes) sing.push_back(GBox<1>::point(Eigen::Matrix<double, 1, 1>(pos)));
          auto e = numerics::integrate_graded<1>(
              [&](const Eigen::Matrix<double, 1, 1>& x) { return mag(Point(x[0], 0, 0)); }, box,
              std::span<const GBox<1>>(sing), graded_opts<1>(opts));
          return finish<1>(e, p);
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          GBox<2> box{Eigen::Vector2d(dom.x0, dom.y0), Eigen::Vector2d(dom.x1, dom.y1)};
          std::vector<GBox<2>> sing;
          for (const auto& s : sites) sing.push_back(GBox<2>::point(Eigen::Vector2d(s[0], s[1])));
          for (const auto& [ax, pos] : planes) {
            GBox<2> b = box;
            b.lo[ax] = b.hi[ax] = pos;
            sing.push_back(b);
          }
          auto e = numerics::integrate_graded<2>(
              [&](const Eigen::Vector2d& x) { return mag(Point(x[0], x[1], 0)); }, box,
              std::span<const GBox<2>>(sing), graded_opts<2>(opts));
          return finish<2>(e, p);
        } else if constexpr (std::is_same_v<T, Disk>) {
          GBox<2> box{Eigen::Vector2d(0, 0), Eigen::Vector2d(dom.r, 2 * kPi)};
          std::vector<GBox<2>> sing{GBox<2>{Eigen::Vector2d(0, 0), Eigen::Vector2d(0, 2 * kPi)}};
          for (const auto& s : sites) {
            const double dx = s[0] - dom.cx, dy = s[1] - dom.cy;
            const double r = std::hypot(dx, dy);
            if (r > 1e-14 * dom.r) {
              double phi = std::atan2(dy, dx);
              if (phi < 0) phi += 2 * kPi;
              sing.push_back(GBox<2>::point(Eigen::Vector2d(r, phi)));
            }
          }
          auto e = numerics::integrate_graded<2>(
              [&](const Eigen::Vector2d& q) {
                const double r = q[0];
                return mag(Point(dom.cx + r * std::cos(q[1]), dom.cy + r * std::sin(q[1]), 0)) * r;
              },
              box, std::span<const GBox<2>>(sing), graded_opts<2>(opts));
          return finish<2>(e, p);
        } else if constexpr (std::is_same_v<T, Box3>) {
          GBox<3> box{dom.lo, dom.hi};
          std::vector<GBox<3>> sing;
          for (const auto& s : sites) sing.push_back(GBox<3>::point(s));
          for (const auto& [ax, pos] : planes) {
            GBox<3> b = box;
            b.lo[ax] = b.hi[ax] = pos;
            sing.push_back(b);
          }
          auto e = numerics::integrate_graded<3>(mag, box, std::span<const GBox<3>>(sing), graded_opts<3>(opts));
          return finish<3>(e, p);
        } else {
          GBox<3> box{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(dom.r, kPi, 2 * kPi)};
          std::vector<GBox<3>> sing{GBox<3>{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(0, kPi, 2 * kPi)}};
          for (const auto& s : sites) {
            const Point d = s - dom.c;
            const double r = d.norm();
            if (r > 1e-14 * dom.r) {
              double phi = std::atan2(d.y(), d.x());
              if (phi < 0) phi += 2 * kPi;
              sing.push_back(GBox<3>::point(Eigen::Vector3d(r, std::acos(std::clamp(d.z() / r, -1.0, 1.0)), phi)));
            }
          }
          auto e = numerics::integrate_graded<3>(
              [&](const Eigen::Vector3d& q) {
                const double r = q[0], th = q[1], ph = q[2];
                const Point x = dom.c + r * Point(std::sin(th) * std::cos(ph), std::sin(th) * std::sin(ph), std::cos(th));
                return mag(x) * r * r * std::sin(th);
              },
              box, std::span<const GBox<3>>(sing), graded_opts<3>(opts));
          return finish<3>(e, p);
        }
      },
      v.domain());
}

NormEstimate lp_distance(const VectorField& u, const VectorField& v, double p, const NormOptions& opts) {
  return lp_norm(u + v.scaled(-1.0), p, opts);
}

// ---------------------------------------------------------------------------
// Field mollification
// ---------------------------------------------------------------------------

namespace {

template <int D>
FieldValue convolve(const FieldTerm& t, const Point& x, double h, int n) {
  using P = Eigen::Matrix<double, D, 1>;
  numerics::Box<D> box{P::Constant(-1.0), P::Constant(1.0)};
  std::vector<numerics::Box<D>> sing;
  for (const auto& s : t.singular_sites) {
    P ts;
    bool inside = true;
    for (int i = 0; i < D; ++i) {
      ts[i] = (x[i] - s[i]) / h;
      inside = inside && std::abs(ts[i]) <= 1.0;
    }
    if (inside) sing.push_back(numerics::Box<D>::point(ts));
  }
  for (const auto& [ax, pos] : t.planes) {
    const double tp = (x[ax] - pos) / h;
    if (std::abs(tp) < 1.0) {
      auto b = box;
      b.lo[ax] = b.hi[ax] = tp;
      sing.push_back(b);
    }
  }
  numerics::GradedOptions g;
  g.gauss_points = 4;
  g.rel_tol = 1e-7;
  g.max_level = 60;
  auto e = numerics::integrate_graded<D>(
      [&](const P& tt) -> FieldValue {
        double w = 1.0;
        Point y = x;
        for (int i = 0; i < D; ++i) {
          w *= bump(tt[i]);
          y[i] = x[i] - h * tt[i];
        }
        if (w == 0.0) return FieldValue::Zero();
        return w * t.evaluate(y);
      },
      box, std::span<const numerics::Box<D>>(sing), g);
  (void)n;
  return e.value;
}

}  // namespace

VectorField mollify(const VectorField& v, double h) {
  if (!(h > 0)) throw ConfigError(kModule, "mollification scale must be positive");
  std::vector<FieldTerm> terms;
  const int n = v.dimension();
  for (const auto& t : v.terms()) {
    if (t.mollified) {
      FieldTerm m = t.mollified(h);
      m.singular_sites.clear();
      m.planes.clear();
      terms.push_back(std::move(m));
      continue;
    }
    FieldTerm m;
    m.label = t.label + "-mollified";
    m.evaluate = [t, h, n](const Point& x) -> FieldValue {
      if (n == 1) return convolve<1>(t, x, h, n);
      if (n == 2) return convolve<2>(t, x, h, n);
      return convolve<3>(t, x, h, n);
    };
    terms.push_back(std::move(m));
  }
  return VectorField::custom(n, v.domain(),
                             [terms](const Point& x) -> FieldValue {
                               FieldValue s = FieldValue::Zero();
                               for (const auto& t : terms) s += t.evaluate(x);
                               return s;
                             },
                             {}, v.exponent(), v.is_real(), "mollified");
}

MollifiedFamilyND::MollifiedFamilyND(VectorField base, std::vector<double> scales, double p)
    : base_(std::move(base)), scales_(std::move(scales)) {
  if (scales_.empty()) throw ConfigError(kModule, "mollifier family needs at least one scale");
  for (std::size_t i = 1; i < scales_.size(); ++i) {
    if (!(scales_[i] < scales_[i - 1])) throw ConfigError(kModule, "scales must be strictly decreasing");
  }
  for (double h : scales_) members_.push_back(mollify(base_, h));
  distances_.resize(scales_.size());
  parallel_for(scales_.size(), [&](std::size_t k) { distances_[k] = lp_distance(members_[k], base_, p); });
  for (std::size_t i = 1; i < distances_.size(); ++i) {
    if (distances_[i].value > 1.1 * distances_[i - 1].value)
      throw NumericalError(kModule, "approximation norms are not decreasing along the family");
  }
}

// ---------------------------------------------------------------------------
// Admissibility
// ---------------------------------------------------------------------------

AdmissibilityReport admissibility(const Primitive1D& u, TheoremTag tag) {
  AdmissibilityReport r;
  r.dimension = 1;
  r.tag = tag;
  r.condition = "H^{-1}_2";
  r.exponent = 2.0;
  r.norm.value = lp_norm(u, 2.0);
  r.norm.diverged = !std::isfinite(r.norm.value);
  r.admissible = !r.norm.diverged;
  return r;
}

AdmissibilityReport admissibility(const VectorField& v, int n, TheoremTag tag, double eps) {
  if (v.dimension() != n) throw ConfigError(kModule, "field dimension does not match n");
  if (!(eps > 0)) throw ConfigError(kModule, "epsilon must be positive");
  AdmissibilityReport r;
  r.dimension = n;
  r.tag = tag;
  if (n == 1) {
    r.condition = "H^{-1}_2";
    r.exponent = 2.0;
  } else if (n == 2) {
    r.condition = "H^{-1}_{2+eps}";
    r.exponent = 2.0 + eps;
  } else {
    r.condition = "H^{-1}_n";
    r.exponent = static_cast<double>(n);
  }
  r.norm = lp_norm(v, r.exponent);
  r.admissible = !r.norm.diverged && std::isfinite(r.norm.value);
  return r;
}

}  // namespace singspec::potentials
