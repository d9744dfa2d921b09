#include "singspec/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <mutex>
#include <numeric>
#include <sstream>

#include "singspec/analysis.hpp"
#include "singspec/quasi1d.hpp"

namespace singspec::cli {

namespace fs = std::filesystem;
using potentials::Primitive1D;
using potentials::VectorField;
using quasi1d::BoundaryCondition1D;

namespace {

constexpr const char* kModule = "cli";

[[noreturn]] void fail(const std::string& field, const std::string& msg) {
  throw ConfigError(kModule, field + ": " + msg);
}

std::string sub(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string idx(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

double number(const Json& j, const std::string& field) {
  if (!j.is_number()) fail(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(field, "must be finite");
  return v;
}

double number_at(const Json& obj, const std::string& key, const std::string& path, std::optional<double> def = {}) {
  if (!obj.contains(key)) {
    if (def) return *def;
    fail(sub(path, key), "missing");
  }
  return number(obj.at(key), sub(path, key));
}

long long integer_at(const Json& obj, const std::string& key, const std::string& path,
                     std::optional<long long> def = {}) {
  if (!obj.contains(key)) {
    if (def) return *def;
    fail(sub(path, key), "missing");
  }
  const Json& v = obj.at(key);
  if (!v.is_number_integer()) fail(sub(path, key), "expected an integer");
  return v.get<long long>();
}

std::string string_at(const Json& obj, const std::string& key, const std::string& path,
                      std::optional<std::string> def = {}) {
  if (!obj.contains(key)) {
    if (def) return *def;
    fail(sub(path, key), "missing");
  }
  const Json& v = obj.at(key);
  if (!v.is_string()) fail(sub(path, key), "expected a string");
  return v.get<std::string>();
}

bool bool_at(const Json& obj, const std::string& key, const std::string& path, bool def) {
  if (!obj.contains(key)) return def;
  if (!obj.at(key).is_boolean()) fail(sub(path, key), "expected true or false");
  return obj.at(key).get<bool>();
}

Complex complex_value(const Json& j, const std::string& field) {
  if (j.is_number()) return number(j, field);
  if (j.is_array() && j.size() == 2) return {number(j[0], idx(field, 0)), number(j[1], idx(field, 1))};
  fail(field, "expected a number or [re, im]");
}

std::vector<double> number_list(const std::string& text, const std::string& field, char sep) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      fail(field, "bad number '" + item + "' in '" + text + "'");
    }
  }
  return v;
}

potentials::Domain parse_domain_object(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const std::string type = string_at(j, "type", path);
  auto vec = [&](const char* key, int n) {
    const std::string f = sub(path, key);
    if (!j.contains(key)) fail(f, "missing");
    const Json& a = j.at(key);
    if (!a.is_array() || static_cast<int>(a.size()) != n) fail(f, "expected " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < a.size(); ++i) out.push_back(number(a[i], idx(f, i)));
    return out;
  };
  if (type == "rect") {
    const auto lo = vec("lo", 2), hi = vec("hi", 2);
    if (!(hi[0] > lo[0] && hi[1] > lo[1])) fail(sub(path, "hi"), "must exceed lo");
    return potentials::Rectangle{lo[0], lo[1], hi[0], hi[1]};
  }
  if (type == "disk") {
    const auto c = vec("center", 2);
    const double r = number_at(j, "radius", path);
    if (!(r > 0)) fail(sub(path, "radius"), "must be positive");
    return potentials::Disk{c[0], c[1], r};
  }
  if (type == "box") {
    const auto lo = vec("lo", 3), hi = vec("hi", 3);
    potentials::Box3 b;
    b.lo = Eigen::Vector3d(lo[0], lo[1], lo[2]);
    b.hi = Eigen::Vector3d(hi[0], hi[1], hi[2]);
    if (!(b.hi.array() > b.lo.array()).all()) fail(sub(path, "hi"), "must exceed lo");
    return b;
  }
  if (type == "ball") {
    const auto c = vec("center", 3);
    const double r = number_at(j, "radius", path);
    if (!(r > 0)) fail(sub(path, "radius"), "must be positive");
    return potentials::Ball{Eigen::Vector3d(c[0], c[1], c[2]), r};
  }
  fail(sub(path, "type"), "unknown domain type '" + type + "'");
}

bool is_primitive(const Json& pot) { return pot.is_object() && pot.value("kind", "") == "primitive1d"; }
bool is_field(const Json& pot) { return pot.is_object() && pot.value("kind", "") == "vectorfield"; }

std::string default_output(const std::string& kind) {
  return kind + (kind == "subord" || kind == "admissible" ? ".json" : ".csv");
}

std::vector<double> jump_sites(const Primitive1D& u) {
  std::vector<double> s;
  for (const auto& j : u.jumps()) s.push_back(j.site);
  return s;
}

potentials::Grid1D mesh_for(const Primitive1D& u, int m) {
  return potentials::Grid1D::uniform_with_sites(u.a(), u.b(), m, jump_sites(u));
}

Space space_for_2d(const std::string& bc, const std::string& field) {
  if (bc == "dirichlet") return Space::Dirichlet;
  if (bc == "gneumann" || bc == "neumann") return Space::Neumann;
  fail(field, "2D boundary condition must be dirichlet or gneumann");
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

std::string fmt_int(long long v) { return std::to_string(v); }

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::string header) : body_(std::move(header)) { body_ += '\n'; }
  template <class... T>
  void row(const T&... cells) {
    std::string line;
    ((line += (line.empty() ? "" : ","), line += cells), ...);
    body_ += line + '\n';
  }
  void line(const std::string& s) { body_ += s + '\n'; }
  const std::string& str() const { return body_; }

 private:
  std::string body_;
};

fs::path write_text(const fs::path& out_dir, const fs::path& name, const std::string& text) {
  const fs::path target = name.is_absolute() ? name : out_dir / name;
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream os(target, std::ios::binary);
  if (!os) throw ConfigError(kModule, "output: cannot write " + target.string());
  os << text;
  if (!os) throw ConfigError(kModule, "output: write failed for " + target.string());
  log(LogLevel::Info, "wrote " + target.string());
  return target;
}

Json meta_json(const ExperimentConfig& cfg) {
  Json m;
  m["singspec"] = kVersion;
  m["kind"] = cfg.kind;
  m["seed"] = cfg.seed;
  m["config_hash"] = config_hash(cfg.raw);
  return m;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct Context {
  const ExperimentConfig& cfg;
  const RunOptions& opts;
  RunResult& result;

  const Json& j() const { return cfg.raw; }
  void emit(const std::string& body) {
    result.artifacts.push_back(write_text(opts.out_dir, cfg.output, metadata_header(cfg) + body));
  }
  void emit_json(Json body) {
    Json doc;
    doc["meta"] = meta_json(cfg);
    for (auto& [k, v] : body.items()) doc[k] = v;
    result.artifacts.push_back(write_text(opts.out_dir, cfg.output, doc.dump(2) + "\n"));
  }
};

void run_solve1d(Context& ctx) {
  const Json& j = ctx.j();
  const auto u = parse_primitive(j.at("potential"));
  const auto bc = BoundaryCondition1D::parse(string_at(j, "bc", ""));
  const auto count = static_cast<std::size_t>(integer_at(j, "count", ""));
  const std::string engine = string_at(j, "engine", "", "shooting");
  const int mesh = static_cast<int>(integer_at(j, "mesh", "", 400));
  const bool selfadjoint = u->is_real() && bc.real_data();
  Csv csv("index,lambda_re,lambda_im,residual,engine");
  auto add = [&](const quasi1d::Spectrum1D& s) {
    for (std::size_t i = 0; i < s.eigenvalues.size(); ++i)
      csv.row(fmt_int(static_cast<long long>(i)), format_number(s.eigenvalues[i].real()),
              format_number(s.eigenvalues[i].imag()), format_number(s.residuals[i]),
              std::string(quasi1d::engine_name(s.engine)));
  };
  if (engine == "shooting" || engine == "both") {
    if (selfadjoint) {
      quasi1d::SelfAdjointOptions o;
      o.eigenfunctions = false;
      add(quasi1d::eigenvalues_selfadjoint(u, bc, count, o));
    } else {
      quasi1d::ComplexOptions o;
      o.mesh_cells = mesh;
      add(quasi1d::eigenvalues_complex(u, bc, count, o));
    }
  }
  if (engine == "galerkin" || engine == "both") {
    quasi1d::GalerkinOptions o;
    o.solver.seed = static_cast<unsigned>(ctx.cfg.seed);
    if (j.contains("tolerances")) o.tol = number_at(j.at("tolerances"), "eigen", "tolerances", o.tol);
    add(quasi1d::galerkin_spectrum(*u, bc, mesh_for(*u, mesh), count, o));
  }
  ctx.emit(csv.str());
}

void run_solve2d(Context& ctx) {
  const Json& j = ctx.j();
  const auto mesh = parse_domain(string_at(j, "domain", ""));
  std::optional<VectorField> V;
  if (j.contains("potential") && !j.at("potential").is_null()) V = parse_field(j.at("potential"));
  const Space space = space_for_2d(string_at(j, "bc", ""), "bc");
  femnd::AssemblyOptions ao;
  ao.quadrature_order = static_cast<int>(integer_at(j, "quadrature_order", "", ao.quadrature_order));
  const auto forms = femnd::assemble_forms(mesh, V ? &*V : nullptr, space, ao);
  numerics::SolverOptions so;
  so.seed = static_cast<unsigned>(ctx.cfg.seed);
  const auto s = femnd::lowest_eigenpairs(forms, integer_at(j, "count", ""), so);
  Csv csv("index,lambda_re,lambda_im,residual,engine");
  for (Eigen::Index i = 0; i < s.values.size(); ++i)
    csv.row(fmt_int(i), format_number(s.values[i].real()), format_number(s.values[i].imag()),
            format_number(s.residuals[i]), std::string("fem"));
  ctx.emit(csv.str());
  if (j.contains("mesh_out")) {
    std::ostringstream os;
    femnd::write_mesh(os, mesh);
    ctx.result.artifacts.push_back(write_text(ctx.opts.out_dir, string_at(j, "mesh_out", ""), os.str()));
  }
}

std::vector<double> read_spectrum_csv(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError(kModule, "spectrum: cannot read " + file.string());
  std::vector<double> out;
  std::string line, engine;
  int col = 0, engine_col = -1;
  bool header_seen = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (!header_seen) {
      header_seen = true;
      const auto it = std::find(cells.begin(), cells.end(), "lambda_re");
      if (it != cells.end()) {
        col = static_cast<int>(it - cells.begin());
        const auto e = std::find(cells.begin(), cells.end(), "engine");
        if (e != cells.end()) engine_col = static_cast<int>(e - cells.begin());
        continue;
      }
    }
    if (static_cast<int>(cells.size()) <= col) continue;
    if (engine_col >= 0 && engine_col < static_cast<int>(cells.size())) {
      if (engine.empty()) engine = cells[engine_col];
      if (cells[engine_col] != engine) continue;
    }
    char* end = nullptr;
    const double v = std::strtod(cells[col].c_str(), &end);
    if (end == cells[col].c_str() || *end != '\0') continue;  // footer lines
    out.push_back(v);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> spectrum_from(const Json& s, const fs::path& base_dir) {
  if (s.is_string()) {
    fs::path p = s.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return read_spectrum_csv(p);
  }
  if (!s.is_object()) fail("spectrum", "expected a CSV path or a free-box descriptor");
  const Json& sides_j = s.contains("sides") ? s.at("sides") : Json();
  if (!sides_j.is_array() || sides_j.empty() || sides_j.size() > 3) fail("spectrum.sides", "expected 1 to 3 lengths");
  std::vector<double> sides;
  for (std::size_t i = 0; i < sides_j.size(); ++i) sides.push_back(number(sides_j[i], idx("spectrum.sides", i)));
  const std::string bc = string_at(s, "bc", "spectrum", "dirichlet");
  return analysis::free_box_spectrum(sides, space_for_2d(bc, "spectrum.bc"), number_at(s, "up_to", "spectrum"));
}

void run_weyl(Context& ctx) {
  const Json& j = ctx.j();
  const auto spec = spectrum_from(j.at("spectrum"), ctx.cfg.base_dir);
  const auto radii = parse_grid(string_at(j, "radii", ""));
  const auto prof = analysis::weyl_profile(spec, static_cast<int>(integer_at(j, "dim", "")),
                                           number_at(j, "volume", ""), radii);
  Csv csv("r,count,leading,remainder");
  for (std::size_t i = 0; i < prof.radii.size(); ++i)
    csv.row(format_number(prof.radii[i]), fmt_int(static_cast<long long>(prof.counts[i])),
            format_number(prof.leading[i]), format_number(prof.remainder[i]));
  csv.line("max_abs_remainder," + format_number(prof.max_abs_remainder()));
  ctx.emit(csv.str());
}

void run_converge(Context& ctx) {
  const Json& j = ctx.j();
  const auto scales = parse_scales(string_at(j, "scales", ""));
  const auto count = static_cast<std::size_t>(integer_at(j, "count", "", 1));
  const double floor = j.contains("tolerances") ? number_at(j.at("tolerances"), "floor", "tolerances", 1e-10) : 1e-10;
  const Json& pot = j.at("potential");
  analysis::ConvergenceTable t;
  std::vector<double> resolvent;
  if (is_field(pot)) {
    const auto V = parse_field(pot);
    const auto mesh = parse_domain(string_at(j, "domain", ""));
    t = analysis::mollifier_sweep_2d(V, mesh, space_for_2d(string_at(j, "bc", "", "dirichlet"), "bc"), scales, count,
                                     V.exponent(), floor);
  } else {
    const auto u = parse_primitive(pot);
    const auto bc = BoundaryCondition1D::parse(string_at(j, "bc", "", "dirichlet"));
    t = analysis::mollifier_sweep_1d(u, bc, scales, count, floor);
    if (j.contains("resolvent") && t.complete) {
      const Json& r = j.at("resolvent");
      const auto mesh = mesh_for(*u, static_cast<int>(integer_at(r, "mesh", "resolvent", 1024)));
      const double rho = number_at(r, "rho", "resolvent", 1.0);
      const auto limit = quasi1d::galerkin_1d(*u, bc, mesh);
      const potentials::MollifiedFamily1D fam(u, scales);
      analysis::ResolventOptions ro;
      ro.seed = static_cast<unsigned>(ctx.cfg.seed);
      resolvent.assign(scales.size(), 0.0);
      parallel_for(scales.size(), [&](std::size_t k) {
        resolvent[k] = analysis::resolvent_gap(quasi1d::galerkin_1d(*fam.members()[k], bc, mesh), limit, rho, ro);
      });
    }
  }
  std::string header = "scale,norm";
  for (std::size_t s = 0; s < count; ++s) header += ",gap_" + std::to_string(s + 1);
  if (!resolvent.empty()) header += ",resolvent_gap";
  Csv csv(header);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    std::string line = format_number(t.rows[i].scale) + "," + format_number(t.rows[i].norm);
    for (double g : t.rows[i].gaps) line += "," + format_number(g);
    if (!resolvent.empty()) line += "," + format_number(resolvent[i]);
    csv.line(line);
  }
  csv.line("slope," + format_number(t.at_floor ? std::nan("") : t.slope));
  if (!resolvent.empty()) csv.line("resolvent_ratio," + format_number(resolvent.front() / resolvent.back()));
  if (!t.complete) csv.line("# partial: " + t.failure);
  ctx.emit(csv.str());
  if (!t.complete) {
    ctx.result.exit_code = 2;
    ctx.result.message = t.failure;
  }
}

Eigen::VectorXcd sine_vector(const std::string& spec, const Primitive1D& u, const potentials::Grid1D& mesh,
                             const AssembledForms& forms) {
  int k = 1;
  if (spec.rfind("sine:", 0) == 0) {
    const auto v = number_list(spec.substr(5), "vector", ',');
    if (v.size() != 1 || v[0] < 1 || v[0] != std::floor(v[0])) fail("vector", "expected 'sine:k' with k >= 1");
    k = static_cast<int>(v[0]);
  } else if (spec != "sine") {
    fail("vector", "unknown vector '" + spec + "'");
  }
  Eigen::VectorXcd g(mesh.cells() + 1);
  for (int i = 0; i <= mesh.cells(); ++i)
    g[i] = std::sqrt(2.0) * std::sin(k * kPi * (mesh.node(i) - u.a()) / (u.b() - u.a()));
  Eigen::VectorXcd f = forms.prolongation.adjoint() * g;
  const double n = std::sqrt(std::abs(f.dot(forms.M * f)));
  if (!(n > 0)) fail("vector", "vanishes on the mesh");
  return f / n;
}

void run_abel(Context& ctx) {
  const Json& j = ctx.j();
  const auto u = parse_primitive(j.at("potential"));
  const auto bc = BoundaryCondition1D::parse(string_at(j, "bc", "", "dirichlet"));
  const int m = static_cast<int>(integer_at(j, "mesh", "", 400));
  const auto mesh = mesh_for(*u, m);
  const auto forms = quasi1d::galerkin_1d(*u, bc, mesh);
  if (forms.size() > 2000) fail("mesh", "too many unknowns for the dense eigensolve (limit 2000)");
  numerics::SolverOptions so;
  so.force_dense = true;
  so.seed = static_cast<unsigned>(ctx.cfg.seed);
  const auto ep =
      numerics::general_pencil_solve(numerics::PencilProblem<Complex>{forms.total(), forms.M, forms.size(), 1e-9}, so);
  if (ep.defective) throw NumericalError(kModule, "defective pencil: associated vectors are not supported");
  const auto sys = analysis::eigensystem_from(ep, forms.M);
  const auto f = sine_vector(string_at(j, "vector", "", "sine:1"), *u, mesh, forms);
  const auto t = parse_grid(string_at(j, "tgrid", ""), true);
  const auto a = analysis::abel_reconstruct(sys, f, number_at(j, "alpha", ""), t,
                                            static_cast<std::size_t>(integer_at(j, "truncation", "", 200)));
  Csv csv("t,error");
  for (std::size_t i = 0; i < a.t.size(); ++i) csv.row(format_number(a.t[i]), format_number(a.errors[i]));
  csv.line("truncation_error," + format_number(a.truncation_error));
  csv.line("biorthogonality," + format_number(a.biorthogonality));
  csv.line("modes," + fmt_int(static_cast<long long>(a.modes)));
  csv.line(std::string("branch_violation,") + (a.branch_violation ? "1" : "0"));
  ctx.emit(csv.str());
}

void run_subord(Context& ctx) {
  const Json& j = ctx.j();
  const auto u = parse_primitive(j.at("potential"));
  const double theta = number_at(j, "theta", "");
  const auto samples = static_cast<std::size_t>(integer_at(j, "samples", ""));
  const int m = static_cast<int>(integer_at(j, "mesh", "", 400));
  const bool refine = bool_at(j, "refine", "", false);
  const auto seed = static_cast<unsigned>(ctx.cfg.seed);
  std::vector<int> meshes{m};
  if (refine) meshes.push_back(2 * m);
  std::vector<double> values(meshes.size());
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const auto p = analysis::subordination_problem_1d(*u, mesh_for(*u, meshes[i]));
    values[i] = analysis::subordination_estimate(p, theta, samples, seed).value;
  }
  Json body;
  body["theta"] = theta;
  body["samples"] = samples;
  body["mesh"] = m;
  body["estimate"] = values[0];
  if (refine) {
    body["refined_mesh"] = 2 * m;
    body["refined_estimate"] = values[1];
    body["relative_change"] =
        values[0] == 0.0 ? (values[1] == 0.0 ? 0.0 : 1.0) : std::abs(values[1] - values[0]) / std::abs(values[0]);
  }
  ctx.emit_json(body);
}

Json admissibility_json(const potentials::AdmissibilityReport& r) {
  Json o;
  o["dimension"] = r.dimension;
  o["theorem"] = r.tag == potentials::TheoremTag::Dirichlet ? "dirichlet" : "neumann";
  o["condition"] = r.condition;
  o["exponent"] = r.exponent;
  o["norm"] = r.norm.value;
  o["diverged"] = r.norm.diverged;
  o["norm_label"] = r.norm.label;
  o["admissible"] = r.admissible;
  return o;
}

potentials::AdmissibilityReport admissibility_of(const Json& j) {
  const Json& pot = j.at("potential");
  const std::string th = string_at(j, "theorem", "", "dirichlet");
  if (th != "dirichlet" && th != "neumann") fail("theorem", "expected dirichlet or neumann");
  const auto tag = th == "dirichlet" ? potentials::TheoremTag::Dirichlet : potentials::TheoremTag::Neumann;
  if (is_primitive(pot)) return potentials::admissibility(*parse_primitive(pot), tag);
  const auto V = parse_field(pot);
  return potentials::admissibility(V, V.dimension(), tag, number_at(j, "eps", "", 0.5));
}

void run_admissible(Context& ctx) {
  const auto r = admissibility_of(ctx.j());
  ctx.emit_json(Json{{"report", admissibility_json(r)}});
}

void run_sandwich(Context& ctx) {
  const Json& j = ctx.j();
  const auto u = parse_primitive(j.at("potential"));
  const std::string bcs = string_at(j, "bc", "", "dirichlet");
  const auto bc = BoundaryCondition1D::parse(bcs);
  if (bc.kind() != BoundaryCondition1D::Kind::Dirichlet && bc.kind() != BoundaryCondition1D::Kind::GeneralizedNeumann)
    fail("bc", "sandwich needs dirichlet or gneumann");
  if (!u->is_real()) fail("potential", "sandwich needs a real potential");
  const double theta = number_at(j, "theta", "");
  const auto radii = parse_grid(string_at(j, "radii", ""));
  const auto count = static_cast<std::size_t>(integer_at(j, "count", ""));
  if (!j.contains("meshes") || !j.at("meshes").is_array() || j.at("meshes").empty()) fail("meshes", "expected a list");
  std::vector<int> meshes;
  for (std::size_t i = 0; i < j.at("meshes").size(); ++i) {
    if (!j.at("meshes")[i].is_number_integer()) fail(idx("meshes", i), "expected an integer");
    meshes.push_back(j.at("meshes")[i].get<int>());
  }
  const double side[] = {u->b() - u->a()};
  const double rmax = *std::max_element(radii.begin(), radii.end());
  const analysis::CountingFunction free(
      analysis::free_box_spectrum(side, space_for_2d(bcs, "bc"), 4 * rmax + 1000.0));
  std::vector<analysis::SandwichResult> res(meshes.size());
  quasi1d::GalerkinOptions go;
  go.solver.seed = static_cast<unsigned>(ctx.cfg.seed);
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    const auto g = quasi1d::galerkin_spectrum(*u, bc, mesh_for(*u, meshes[i]), count, go);
    std::vector<double> ev;
    for (auto v : g.eigenvalues) ev.push_back(v.real());
    res[i] = analysis::sandwich_check(analysis::CountingFunction(ev), free, theta, radii);
  }
  Csv csv("mesh,theta,C,c,verdict");
  double spread = 0.0;
  for (std::size_t i = 0; i < meshes.size(); ++i) {
    csv.row(fmt_int(meshes[i]), format_number(theta), format_number(res[i].C), format_number(res[i].c),
            std::string(res[i].verdict ? "1" : "0"));
    spread = std::max(spread, std::abs(res[i].c / res[0].c - 1.0));
  }
  csv.line("c_relative_spread," + format_number(spread));
  ctx.emit(csv.str());
}

void run_regularity(Context& ctx) {
  const Json& j = ctx.j();
  const auto u = parse_primitive(j.at("potential"));
  const auto bc = BoundaryCondition1D::parse(string_at(j, "bc", "", "dirichlet"));
  const auto count = static_cast<std::size_t>(integer_at(j, "count", ""));
  if (u->jumps().empty()) fail("potential.deltas", "regularity needs at least one delta site");
  std::vector<Complex> lams;
  if (u->is_real() && bc.real_data()) {
    quasi1d::SelfAdjointOptions o;
    o.eigenfunctions = false;
    lams = quasi1d::eigenvalues_selfadjoint(u, bc, count, o).eigenvalues;
  } else {
    lams = quasi1d::eigenvalues_complex(u, bc, count).eigenvalues;
  }
  const quasi1d::ShootingEngine engine(u);
  Csv csv("index,lambda_re,lambda_im,site,y1_mismatch,jump_defect");
  double worst_y1 = 0.0, worst_jump = 0.0;
  for (std::size_t i = 0; i < lams.size(); ++i) {
    for (const auto& jump : u->jumps()) {
      const auto lim = engine.site_limits(lams[i], bc, jump.site);
      std::vector<double> pts;
      const int n = 4000;
      for (int k = 0; k <= n; ++k) pts.push_back(u->a() + (u->b() - u->a()) * k / n);
      pts.push_back(jump.site);
      std::sort(pts.begin(), pts.end());
      const auto tr = engine.evaluate(lams[i], engine.eigen_initial(lams[i], bc), pts);
      const auto at = static_cast<std::size_t>(std::lower_bound(pts.begin(), pts.end(), jump.site) - pts.begin());
      double ymax = 0.0;
      for (std::size_t k = 0; k < pts.size(); ++k)
        ymax = std::max(ymax, std::abs(tr.state[k].y) * std::exp(tr.log_scale[k] - tr.log_scale[at]));
      const double y1 = std::abs(lim.left.y1 - lim.right.y1) / ymax;
      const double jd =
          std::abs(lim.derivative_right() - lim.derivative_left() - (lim.u_right - lim.u_left) * lim.left.y) / ymax;
      worst_y1 = std::max(worst_y1, y1);
      worst_jump = std::max(worst_jump, jd);
      csv.row(fmt_int(static_cast<long long>(i)), format_number(lams[i].real()), format_number(lams[i].imag()),
              format_number(jump.site), format_number(y1), format_number(jd));
    }
  }
  csv.line("max_y1_mismatch," + format_number(worst_y1));
  csv.line("max_jump_defect," + format_number(worst_jump));
  ctx.emit(csv.str());
}

void run_refine2d(Context& ctx) {
  const Json& j = ctx.j();
  const auto V = parse_field(j.at("potential"));
  const auto* disk = std::get_if<potentials::Disk>(&V.domain());
  if (!disk || V.dimension() != 2) fail("potential.domain", "refine2d needs a disk");
  if (!j.contains("levels") || !j.at("levels").is_array() || j.at("levels").size() < 2)
    fail("levels", "expected at least two levels");
  std::vector<int> levels;
  for (std::size_t i = 0; i < j.at("levels").size(); ++i) {
    if (!j.at("levels")[i].is_number_integer()) fail(idx("levels", i), "expected an integer");
    levels.push_back(j.at("levels")[i].get<int>());
  }
  const auto count = integer_at(j, "count", "", 1);
  const Space space = space_for_2d(string_at(j, "bc", "", "dirichlet"), "bc");
  femnd::AssemblyOptions ao;
  ao.quadrature_order = static_cast<int>(integer_at(j, "quadrature_order", "", 5));
  numerics::SolverOptions so;
  so.seed = static_cast<unsigned>(ctx.cfg.seed);
  std::string header = "level,vertices";
  for (long long k = 1; k <= count; ++k) header += ",lambda_" + std::to_string(k);
  header += ",rel_change,hermitian_defect";
  Csv csv(header);
  Eigen::VectorXcd prev;
  double last = std::nan("");
  for (int level : levels) {
    const auto mesh = femnd::mesh_disk(disk->r, level, Eigen::Vector2d(disk->cx, disk->cy));
    const auto forms = femnd::assemble_forms(mesh, &V, space, ao);
    const Eigen::SparseMatrix<Complex> T = forms.total();
    const Eigen::SparseMatrix<Complex> Ta = T.adjoint();
    const double defect = (T - Ta).norm();
    const auto s = femnd::lowest_eigenpairs(forms, count, so);
    double change = std::nan("");
    if (prev.size() == s.values.size()) {
      change = 0.0;
      for (Eigen::Index k = 0; k < s.values.size(); ++k)
        change = std::max(change, std::abs(s.values[k] - prev[k]) / std::abs(s.values[k]));
    }
    std::string line = fmt_int(level) + "," + fmt_int(static_cast<long long>(mesh.vertices.size()));
    for (Eigen::Index k = 0; k < s.values.size(); ++k) line += "," + format_number(s.values[k].real());
    line += "," + format_number(change) + "," + format_number(defect);
    csv.line(line);
    prev = s.values;
    last = change;
  }
  csv.line("last_rel_change," + format_number(last));
  ctx.emit(csv.str());
}

// Per-kind required keys, checked before any parsing of values.
const std::vector<std::pair<std::string, std::vector<std::string>>> kRequired = {
    {"solve1d", {"potential", "bc", "count"}},
    {"solve2d", {"domain", "bc", "count"}},
    {"weyl", {"spectrum", "dim", "volume", "radii"}},
    {"converge", {"potential", "scales"}},
    {"abel", {"potential", "alpha", "tgrid"}},
    {"subord", {"potential", "theta", "samples", "seed"}},
    {"admissible", {"potential"}},
    {"sandwich", {"potential", "theta", "radii", "count", "meshes"}},
    {"regularity", {"potential", "count"}},
    {"refine2d", {"potential", "levels"}},
};

void check_values(const ExperimentConfig& cfg) {
  const Json& j = cfg.raw;
  const std::string& k = cfg.kind;
  if (j.contains("potential") && !j.at("potential").is_null()) {
    const Json& pot = j.at("potential");
    const bool want_field = k == "solve2d" || k == "refine2d";
    const bool field_ok = k == "converge" || k == "admissible";
    if (want_field || (field_ok && is_field(pot))) {
      (void)parse_field(pot);
    } else {
      (void)parse_primitive(pot);
    }
  }
  auto positive_int = [&](const char* key) {
    if (j.contains(key) && integer_at(j, key, "") < 1) fail(key, "must be positive");
  };
  positive_int("count");
  positive_int("mesh");
  positive_int("samples");
  positive_int("truncation");
  if (j.contains("bc")) {
    const std::string bc = string_at(j, "bc", "");
    if (k == "solve2d" || k == "refine2d" || (k == "converge" && j.contains("domain")))
      (void)space_for_2d(bc, "bc");
    else
      (void)BoundaryCondition1D::parse(bc);
  }
  if (j.contains("engine")) {
    const std::string e = string_at(j, "engine", "");
    if (e != "shooting" && e != "galerkin" && e != "both") fail("engine", "expected shooting, galerkin or both");
  }
  if (j.contains("domain")) (void)parse_domain(string_at(j, "domain", ""));
  if (k == "converge" && is_field(j.at("potential")) && !j.contains("domain")) fail("domain", "missing");
  if (j.contains("radii")) (void)parse_grid(string_at(j, "radii", ""));
  if (j.contains("tgrid")) (void)parse_grid(string_at(j, "tgrid", ""), true);
  if (j.contains("scales")) (void)parse_scales(string_at(j, "scales", ""));
  if (j.contains("theta")) {
    const double th = number_at(j, "theta", "");
    if (th < 0 || th > 1) fail("theta", "must lie in [0, 1]");
  }
  if (j.contains("alpha") && !(number_at(j, "alpha", "") > 0)) fail("alpha", "must be positive");
  if (j.contains("tolerances")) {
    const Json& t = j.at("tolerances");
    if (!t.is_object()) fail("tolerances", "expected an object");
    for (auto it = t.begin(); it != t.end(); ++it)
      if (!(number(it.value(), "tolerances." + it.key()) > 0)) fail("tolerances." + it.key(), "must be positive");
  }
  if (k == "weyl") {
    const Json& s = j.at("spectrum");
    if (s.is_string()) {
      fs::path p = s.get<std::string>();
      if (p.is_relative()) p = cfg.base_dir / p;
      if (!fs::exists(p)) fail("spectrum", "file not found: " + p.string());
    } else if (!s.is_object()) {
      fail("spectrum", "expected a CSV path or a free-box descriptor");
    }
    if (integer_at(j, "dim", "") < 1 || integer_at(j, "dim", "") > 3) fail("dim", "must be 1, 2 or 3");
    if (!(number_at(j, "volume", "") > 0)) fail("volume", "must be positive");
  }
}

std::once_flag log_init;
LogLevel current_level = LogLevel::Error;

}  // namespace

// ---------------------------------------------------------------------------
// Logging
// ---------------------------------------------------------------------------

LogLevel log_level() {
  std::call_once(log_init, [] {
    if (const char* e = std::getenv("SINGSPEC_LOG")) {
      const std::string s = e;
      if (s == "info") current_level = LogLevel::Info;
      if (s == "debug") current_level = LogLevel::Debug;
    }
  });
  return current_level;
}

void set_log_level(LogLevel level) {
  (void)log_level();
  current_level = level;
}

void log(LogLevel level, const std::string& message) {
  if (static_cast<int>(level) > static_cast<int>(log_level())) return;
  static const char* names[] = {"error", "info", "debug"};
  std::cerr << "[" << names[static_cast<int>(level)] << "] " << message << '\n';
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

Json load_json(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError(kModule, file.string() + ": cannot open");
  try {
    return Json::parse(is);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(kModule, file.string() + ": " + e.what());
  }
}

Json resolve_potential(const Json& j, const fs::path& base_dir, const std::string& field) {
  if (j.is_null()) return j;
  if (j.is_string()) {
    if (j.get<std::string>() == "none") return Json();
    fs::path p = j.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    if (!fs::exists(p)) fail(field, "file not found: " + p.string());
    return load_json(p);
  }
  if (j.is_object() && j.contains("file")) return resolve_potential(j.at("file"), base_dir, field + ".file");
  return j;
}

std::shared_ptr<const Primitive1D> parse_primitive(const Json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected a potential definition object");
  const std::string kind = string_at(j, "kind", field);
  if (kind != "primitive1d") fail(sub(field, "kind"), "expected primitive1d, got '" + kind + "'");
  const std::string f_int = sub(field, "interval");
  if (!j.contains("interval")) fail(f_int, "missing");
  const Json& iv = j.at("interval");
  if (!iv.is_array() || iv.size() != 2) fail(f_int, "expected [a, b]");
  const double a = number(iv[0], idx(f_int, 0)), b = number(iv[1], idx(f_int, 1));
  if (!(b > a)) fail(f_int, "needs a < b");
  std::vector<Complex> base;
  if (j.contains("base")) {
    const std::string fb = sub(field, "base");
    const Json& bj = j.at("base");
    if (bj.is_number()) {
      base.push_back(number(bj, fb));
    } else {
      if (!bj.is_array()) fail(fb, "expected a list of polynomial coefficients");
      for (std::size_t i = 0; i < bj.size(); ++i) base.push_back(complex_value(bj[i], idx(fb, i)));
    }
  }
  std::vector<potentials::Delta> deltas;
  if (j.contains("deltas")) {
    const std::string fd = sub(field, "deltas");
    const Json& dj = j.at("deltas");
    if (!dj.is_array()) fail(fd, "expected a list of [site, strength_re, strength_im]");
    for (std::size_t i = 0; i < dj.size(); ++i) {
      const std::string fi = idx(fd, i);
      const Json& d = dj[i];
      if (!d.is_array() || d.size() < 2 || d.size() > 3) fail(fi, "expected [site, strength_re, strength_im]");
      const double site = number(d[0], idx(fi, 0));
      if (!(site > a && site < b)) fail(idx(fi, 0), "site must lie inside the interval");
      const double re = number(d[1], idx(fi, 1));
      const double im = d.size() == 3 ? number(d[2], idx(fi, 2)) : 0.0;
      deltas.push_back({site, Complex(re, im)});
    }
  }
  const auto cells = integer_at(j, "cells", field, 16);
  if (cells < 1) fail(sub(field, "cells"), "must be positive");
  std::vector<double> sites;
  for (const auto& d : deltas) sites.push_back(d.site);
  const auto grid = potentials::Grid1D::uniform_with_sites(a, b, static_cast<int>(cells), sites);
  auto poly = [base](double x) {
    Complex s = 0.0;
    for (auto it = base.rbegin(); it != base.rend(); ++it) s = s * x + *it;
    return s;
  };
  return std::make_shared<Primitive1D>(potentials::primitive_from_deltas(poly, deltas, grid));
}

VectorField parse_field(const Json& j, const std::string& field) {
  if (!j.is_object()) fail(field, "expected a potential definition object");
  const std::string kind = string_at(j, "kind", field);
  if (kind != "vectorfield") fail(sub(field, "kind"), "expected vectorfield, got '" + kind + "'");
  if (!j.contains("domain")) fail(sub(field, "domain"), "missing");
  const auto domain = parse_domain_object(j.at("domain"), sub(field, "domain"));
  const int n = potentials::domain_dimension(domain);
  if (n < 2) fail(sub(field, "domain"), "vector fields need a 2D or 3D domain");
  if (j.contains("dimension") && integer_at(j, "dimension", field) != n)
    fail(sub(field, "dimension"), "does not match the domain");
  const double p = number_at(j, "exponent", field, 2.0);
  if (!(p >= 1)) fail(sub(field, "exponent"), "must be at least 1");
  std::optional<VectorField> V;
  const std::string ft = sub(field, "terms");
  if (j.contains("terms")) {
    const Json& tj = j.at("terms");
    if (!tj.is_array()) fail(ft, "expected a list");
    for (std::size_t i = 0; i < tj.size(); ++i) {
      const std::string fi = idx(ft, i);
      const Json& t = tj[i];
      if (!t.is_object()) fail(fi, "expected an object");
      const std::string type = string_at(t, "type", fi);
      auto point = [&](const char* key) {
        potentials::Point x = potentials::Point::Zero();
        const std::string fk = sub(fi, key);
        if (!t.contains(key)) fail(fk, "missing");
        const Json& a = t.at(key);
        if (!a.is_array() || static_cast<int>(a.size()) != n) fail(fk, "expected " + std::to_string(n) + " numbers");
        for (int d = 0; d < n; ++d) x[d] = number(a[d], idx(fk, d));
        return x;
      };
      auto vec = [&](const char* key) {
        potentials::FieldValue v = potentials::FieldValue::Zero();
        const std::string fk = sub(fi, key);
        if (!t.contains(key)) fail(fk, "missing");
        const Json& a = t.at(key);
        if (!a.is_array() || static_cast<int>(a.size()) != n) fail(fk, "expected " + std::to_string(n) + " components");
        for (int d = 0; d < n; ++d) v[d] = complex_value(a[d], idx(fk, d));
        return v;
      };
      VectorField term = VectorField::zero(n, domain);
      if (type == "radial") {
        const double beta = number_at(t, "beta", fi);
        const Complex amp = t.contains("amplitude") ? complex_value(t.at("amplitude"), sub(fi, "amplitude")) : 1.0;
        term = VectorField::radial_power(n, domain, point("center"), beta, amp, p);
      } else if (type == "constant") {
        term = VectorField::constant(n, domain, vec("value"), p);
      } else if (type == "step") {
        const auto axis = integer_at(t, "axis", fi);
        if (axis < 0 || axis >= n) fail(sub(fi, "axis"), "out of range");
        term = VectorField::step(n, domain, static_cast<int>(axis), number_at(t, "position", fi), vec("height"), p);
      } else {
        fail(sub(fi, "type"), "unknown term type '" + type + "'");
      }
      V = V ? *V + term : term;
    }
  }
  if (!V) return VectorField(n, domain, {}, p);
  return *V;
}

femnd::Mesh2D parse_domain(const std::string& text) {
  auto ints = [&](double v, const char* what) {
    if (v != std::floor(v)) fail("domain", std::string(what) + " must be an integer in '" + text + "'");
    return static_cast<int>(v);
  };
  if (text.rfind("rect:", 0) == 0) {
    const auto v = number_list(text.substr(5), "domain", ',');
    if (v.size() != 4) fail("domain", "expected rect:Lx,Ly,nx,ny");
    if (!(v[0] > 0 && v[1] > 0)) fail("domain", "side lengths must be positive");
    return femnd::mesh_rectangle(v[0], v[1], ints(v[2], "nx"), ints(v[3], "ny"));
  }
  if (text.rfind("disk:", 0) == 0) {
    const auto v = number_list(text.substr(5), "domain", ',');
    if (v.size() != 2) fail("domain", "expected disk:R,level");
    if (!(v[0] > 0)) fail("domain", "radius must be positive");
    const int level = ints(v[1], "level");
    if (level < 0 || level > 9) fail("domain", "level must lie in 0..9");
    return femnd::mesh_disk(v[0], level);
  }
  fail("domain", "expected rect:Lx,Ly,nx,ny or disk:R,level, got '" + text + "'");
}

std::vector<double> parse_grid(const std::string& text, bool log_spaced) {
  const auto v = number_list(text, log_spaced ? "tgrid" : "radii", ':');
  const std::string field = log_spaced ? "tgrid" : "radii";
  if (v.size() != 3) fail(field, "expected start:end:steps");
  if (v[2] < 1 || v[2] != std::floor(v[2])) fail(field, "steps must be a positive integer");
  const int n = static_cast<int>(v[2]);
  if (log_spaced && !(v[0] > 0 && v[1] > 0)) fail(field, "log-spaced endpoints must be positive");
  if (!log_spaced && !(v[0] > 0 && v[1] > 0)) fail(field, "radii must be positive");
  std::vector<double> out;
  for (int i = 0; i < n; ++i) {
    const double s = n == 1 ? 0.0 : static_cast<double>(i) / (n - 1);
    out.push_back(log_spaced ? std::exp(std::log(v[0]) + s * (std::log(v[1]) - std::log(v[0])))
                             : v[0] + s * (v[1] - v[0]));
  }
  if (n > 1) {
    out.front() = v[0];
    out.back() = v[1];
  }
  return out;
}

std::vector<double> parse_scales(const std::string& text) {
  const auto dots = text.find("..");
  if (dots == std::string::npos) fail("scales", "expected k0..k1");
  const auto a = number_list(text.substr(0, dots), "scales", ',');
  const auto b = number_list(text.substr(dots + 2), "scales", ',');
  if (a.size() != 1 || b.size() != 1 || a[0] != std::floor(a[0]) || b[0] != std::floor(b[0]))
    fail("scales", "expected integer bounds k0..k1");
  if (!(b[0] > a[0])) fail("scales", "needs k0 < k1");
  if (b[0] - a[0] > 60) fail("scales", "too many scales");
  std::vector<double> out;
  for (int k = static_cast<int>(a[0]); k <= static_cast<int>(b[0]); ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

ExperimentConfig parse_config(const Json& j, const fs::path& base_dir) {
  if (!j.is_object()) fail("config", "expected a JSON object");
  ExperimentConfig cfg;
  cfg.base_dir = base_dir;
  cfg.kind = string_at(j, "kind", "");
  if (std::find(kKinds.begin(), kKinds.end(), cfg.kind) == kKinds.end())
    fail("kind", "unknown experiment kind '" + cfg.kind + "'");
  for (const auto& [kind, keys] : kRequired)
    if (kind == cfg.kind)
      for (const auto& key : keys)
        if (!j.contains(key)) fail(key, std::string("missing (required for ") + cfg.kind + ")");
  cfg.raw = j;
  if (j.contains("potential")) cfg.raw["potential"] = resolve_potential(j.at("potential"), base_dir);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_integer() || j.at("seed").get<long long>() < 0)
      fail("seed", "expected a non-negative integer");
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.seed_given = true;
  }
  cfg.output = string_at(j, "output", "", default_output(cfg.kind));
  check_values(cfg);
  return cfg;
}

// ---------------------------------------------------------------------------
// Output helpers
// ---------------------------------------------------------------------------

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

std::string config_hash(const Json& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : config.dump()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string metadata_header(const ExperimentConfig& cfg) {
  std::string s;
  s += std::string("# singspec ") + kVersion + "\n";
  s += "# kind " + cfg.kind + "\n";
  s += "# seed " + std::to_string(cfg.seed) + "\n";
  s += "# config_hash fnv1a64:" + config_hash(cfg.raw) + "\n";
  return s;
}

// ---------------------------------------------------------------------------
// Run / validate
// ---------------------------------------------------------------------------

RunResult run(const Json& config, const RunOptions& opts, const fs::path& base_dir) {
  RunResult result;
  try {
    Json j = config;
    if (opts.seed && j.is_object()) j["seed"] = *opts.seed;
    const auto cfg = parse_config(j, base_dir);
    log(LogLevel::Info, "running " + cfg.kind + " (config " + config_hash(cfg.raw) + ")");
    Context ctx{cfg, opts, result};
    const std::string& k = cfg.kind;
    if (k == "solve1d") run_solve1d(ctx);
    else if (k == "solve2d") run_solve2d(ctx);
    else if (k == "weyl") run_weyl(ctx);
    else if (k == "converge") run_converge(ctx);
    else if (k == "abel") run_abel(ctx);
    else if (k == "subord") run_subord(ctx);
    else if (k == "admissible") run_admissible(ctx);
    else if (k == "sandwich") run_sandwich(ctx);
    else if (k == "regularity") run_regularity(ctx);
    else if (k == "refine2d") run_refine2d(ctx);
  } catch (const ConfigError& e) {
    result.exit_code = 1;
    result.message = e.what();
  } catch (const NumericalError& e) {
    result.exit_code = 2;
    result.message = e.what();
  } catch (const nlohmann::json::exception& e) {
    result.exit_code = 1;
    result.message = std::string("cli: ") + e.what();
  } catch (const fs::filesystem_error& e) {
    result.exit_code = 1;
    result.message = std::string("cli: ") + e.what();
  } catch (const std::exception& e) {
    result.exit_code = 2;
    result.message = std::string("cli: ") + e.what();
  }
  if (result.exit_code != 0) log(LogLevel::Debug, "run failed: " + result.message);
  return result;
}

std::vector<Issue> validate(const Json& config, const fs::path& base_dir) {
  std::vector<Issue> issues;
  auto field_of = [](const std::string& what) {
    // "module: field: message"
    const auto a = what.find(": ");
    if (a == std::string::npos) return std::string();
    const auto b = what.find(": ", a + 2);
    return b == std::string::npos ? std::string() : what.substr(a + 2, b - a - 2);
  };
  ExperimentConfig cfg;
  try {
    cfg = parse_config(config, base_dir);
  } catch (const Error& e) {
    issues.push_back({"error", field_of(e.what()), e.what()});
    return issues;
  } catch (const std::exception& e) {
    issues.push_back({"error", "", std::string("cli: ") + e.what()});
    return issues;
  }
  const Json& pot = cfg.raw.contains("potential") ? cfg.raw.at("potential") : Json();
  if (is_primitive(pot) || is_field(pot)) {
    try {
      const auto r = admissibility_of(cfg.raw);
      if (!r.admissible)
        issues.push_back({"warning", "potential",
                          "not admissible in dimension " + std::to_string(r.dimension) + ": needs " + r.condition +
                              " (L_" + short_number(r.exponent) + " norm of the representative " +
                              (r.norm.diverged ? "diverged" : short_number(r.norm.value)) + ")"});
    } catch (const Error& e) {
      issues.push_back({"error", "potential", e.what()});
    }
  }
  return issues;
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

namespace {

Json delta_potential(double re, double im) {
  return Json{{"kind", "primitive1d"}, {"interval", {0.0, 1.0}}, {"base", {0.0}},
              {"deltas", Json::array({Json::array({0.5, re, im})})}};
}

Json radial_disk_field() {
  return Json{{"kind", "vectorfield"},
              {"domain", {{"type", "disk"}, {"center", {0.0, 0.0}}, {"radius", 1.0}}},
              {"terms", Json::array({Json{{"type", "radial"}, {"center", {0.0, 0.0}}, {"beta", -0.5}, {"amplitude", 1.0}}})},
              {"exponent", 2.5}};
}

std::string pi_rect(int n) {
  const std::string pi = "3.141592653589793";
  return "rect:" + pi + "," + pi + "," + std::to_string(n) + "," + std::to_string(n);
}

const std::vector<std::pair<std::string, std::function<Json()>>>& preset_table() {
  static const std::vector<std::pair<std::string, std::function<Json()>>> table = {
      {"free-dirichlet-1d",
       [] {
         return Json{{"kind", "solve1d"},
                     {"potential", {{"kind", "primitive1d"}, {"interval", {0.0, kPi}}, {"base", {0.0}}}},
                     {"bc", "dirichlet"}, {"count", 5}, {"engine", "shooting"}};
       }},
      {"free-neumann-1d",
       [] {
         return Json{{"kind", "solve1d"},
                     {"potential", {{"kind", "primitive1d"}, {"interval", {0.0, kPi}}, {"base", {0.0}}}},
                     {"bc", "gneumann"}, {"count", 10}, {"engine", "shooting"}};
       }},
      {"delta10-dirichlet",
       [] {
         return Json{{"kind", "solve1d"}, {"potential", delta_potential(10, 0)}, {"bc", "dirichlet"},
                     {"count", 8}, {"engine", "both"}, {"mesh", 400}};
       }},
      {"delta10-regularity",
       [] {
         return Json{{"kind", "regularity"}, {"potential", delta_potential(10, 0)}, {"bc", "dirichlet"}, {"count", 8}};
       }},
      {"delta10-converge",
       [] {
         return Json{{"kind", "converge"}, {"potential", delta_potential(10, 0)}, {"bc", "dirichlet"},
                     {"scales", "2..8"}, {"count", 1}, {"resolvent", {{"mesh", 1024}, {"rho", 1.0}}}};
       }},
      {"free-square-dirichlet",
       [] { return Json{{"kind", "solve2d"}, {"domain", pi_rect(64)}, {"potential", "none"}, {"bc", "dirichlet"}, {"count", 5}}; }},
      {"free-square-neumann",
       [] { return Json{{"kind", "solve2d"}, {"domain", pi_rect(64)}, {"potential", "none"}, {"bc", "gneumann"}, {"count", 5}}; }},
      {"free-disk-dirichlet",
       [] { return Json{{"kind", "solve2d"}, {"domain", "disk:1,5"}, {"potential", "none"}, {"bc", "dirichlet"}, {"count", 1}}; }},
      {"weyl-square",
       [] {
         return Json{{"kind", "weyl"},
                     {"spectrum", {{"sides", {kPi, kPi}}, {"bc", "dirichlet"}, {"up_to", 810.0}}},
                     {"dim", 2}, {"volume", kPi * kPi}, {"radii", "0.5:399.5:400"}};
       }},
      {"weyl-interval",
       [] {
         return Json{{"kind", "weyl"},
                     {"spectrum", {{"sides", {kPi}}, {"bc", "dirichlet"}, {"up_to", 10000.5}}},
                     {"dim", 1}, {"volume", kPi}, {"radii", "0.5:4999.5:5000"}};
       }},
      {"sandwich-delta10",
       [] {
         return Json{{"kind", "sandwich"}, {"potential", delta_potential(10, 0)}, {"bc", "dirichlet"},
                     {"theta", 0.5}, {"radii", "10:2500:250"}, {"count", 25}, {"meshes", {400, 800, 1600}}};
       }},
      {"singular-disk",
       [] {
         return Json{{"kind", "refine2d"}, {"potential", radial_disk_field()}, {"bc", "dirichlet"},
                     {"levels", {1, 2, 3, 4, 5}}, {"quadrature_order", 5}, {"count", 3}};
       }},
      {"admissible-disk", [] { return Json{{"kind", "admissible"}, {"potential", radial_disk_field()}, {"eps", 0.5}}; }},
      {"abel-idelta10",
       [] {
         return Json{{"kind", "abel"}, {"potential", delta_potential(0, 10)}, {"bc", "dirichlet"}, {"alpha", 1.0},
                     {"tgrid", "1e-1:1e-5:5"}, {"mesh", 400}, {"truncation", 200}, {"vector", "sine:1"}};
       }},
      {"subord-delta10",
       [] {
         return Json{{"kind", "subord"}, {"potential", delta_potential(10, 0)}, {"theta", 0.6}, {"samples", 8},
                     {"seed", 7}, {"mesh", 400}, {"refine", true}};
       }},
      {"subord-zero",
       [] {
         return Json{{"kind", "subord"},
                     {"potential", {{"kind", "primitive1d"}, {"interval", {0.0, 1.0}}, {"base", {0.0}}}},
                     {"theta", 0.6}, {"samples", 8}, {"seed", 7}, {"mesh", 400}};
       }},
      {"subord-one",
       [] {
         return Json{{"kind", "subord"},
                     {"potential", {{"kind", "primitive1d"}, {"interval", {0.0, 1.0}}, {"base", {0.0, 1.0}}}},
                     {"theta", 0.0}, {"samples", 8}, {"seed", 7}, {"mesh", 400}};
       }},
  };
  return table;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& [name, make] : preset_table()) out.push_back(name);
  return out;
}

Json preset(const std::string& name) {
  for (const auto& [n, make] : preset_table()) {
    if (n != name) continue;
    Json j = make();
    j["output"] = name + default_output(j["kind"].get<std::string>()).substr(j["kind"].get<std::string>().size());
    return j;
  }
  throw ConfigError(kModule, "preset: unknown name '" + name + "'");
}

}  // namespace singspec::cli
