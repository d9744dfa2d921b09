#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "singspec/cli.hpp"

namespace fs = std::filesystem;
using singspec::cli::Json;

namespace {

struct Globals {
  std::string config;
  std::string out_dir = ".";
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  std::string preset;
};

// Starting document for a subcommand: the problem file, then the global
// config, then the preset.
Json base_document(const Globals& g, const std::string& problem, fs::path& base_dir) {
  const std::string file = !problem.empty() ? problem : g.config;
  if (!file.empty()) {
    base_dir = fs::absolute(file).parent_path();
    return singspec::cli::load_json(file);
  }
  base_dir = fs::current_path();
  if (!g.preset.empty()) return singspec::cli::preset(g.preset);
  return Json::object();
}

std::string absolute_or_none(const std::string& p) {
  if (p == "none") return p;
  return fs::absolute(p).string();
}

int report(const singspec::cli::RunResult& r) {
  for (const auto& a : r.artifacts) std::cout << a.string() << '\n';
  if (r.exit_code != 0) std::cerr << "error: " << r.message << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"singspec: spectra of operators with singular potentials"};
  app.require_subcommand(0, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Experiment config (JSON)");
  app.add_option("--out-dir", g.out_dir, "Directory for results");
  app.add_option("--threads", g.threads, "Worker threads (0 = all cores)");
  app.add_option("--seed", g.seed, "Override the config seed");
  app.add_option("--preset", g.preset, "Run a bundled preset");

  // Fields collected from subcommand flags; only the ones given are applied.
  Json overrides = Json::object();
  std::string problem, out;
  auto opt_str = [&](CLI::App* sc, const std::string& flag, const std::string& key, const std::string& help) {
    sc->add_option_function<std::string>(flag, [&overrides, key](const std::string& v) { overrides[key] = v; }, help);
  };
  auto opt_int = [&](CLI::App* sc, const std::string& flag, const std::string& key, const std::string& help) {
    sc->add_option_function<long long>(flag, [&overrides, key](long long v) { overrides[key] = v; }, help);
  };
  auto opt_num = [&](CLI::App* sc, const std::string& flag, const std::string& key, const std::string& help) {
    sc->add_option_function<double>(flag, [&overrides, key](double v) { overrides[key] = v; }, help);
  };

  auto* run = app.add_subcommand("run", "Run --config or --preset");

  auto* solve1d = app.add_subcommand("solve1d", "1D eigenvalues");
  solve1d->add_option_function<std::string>(
      "--potential", [&](const std::string& v) { overrides["potential"] = absolute_or_none(v); }, "Potential file");
  opt_str(solve1d, "--bc", "bc", "dirichlet|gneumann|third:a,b|quasi:theta");
  opt_int(solve1d, "--count", "count", "Number of eigenvalues");
  opt_str(solve1d, "--engine", "engine", "shooting|galerkin|both");
  opt_int(solve1d, "--mesh", "mesh", "Galerkin cells");

  auto* solve2d = app.add_subcommand("solve2d", "2D eigenvalues");
  opt_str(solve2d, "--domain", "domain", "rect:Lx,Ly,nx,ny|disk:R,level");
  solve2d->add_option_function<std::string>(
      "--potential", [&](const std::string& v) { overrides["potential"] = absolute_or_none(v); }, "Potential file or none");
  opt_str(solve2d, "--bc", "bc", "dirichlet|gneumann");
  opt_int(solve2d, "--count", "count", "Number of eigenvalues");
  opt_str(solve2d, "--mesh-out", "mesh_out", "Also write the mesh");
  opt_int(solve2d, "--quadrature-order", "quadrature_order", "Triangle rule order (1, 2 or 5)");

  auto* weyl = app.add_subcommand("weyl", "Counting function against the Weyl term");
  weyl->add_option_function<std::string>(
      "--spectrum", [&](const std::string& v) { overrides["spectrum"] = fs::absolute(v).string(); }, "Spectrum CSV");
  opt_int(weyl, "--dim", "dim", "Dimension");
  opt_num(weyl, "--volume", "volume", "Domain volume");
  opt_str(weyl, "--radii", "radii", "r0:r1:steps");

  auto* converge = app.add_subcommand("converge", "Mollifier convergence sweep");
  converge->add_option("--problem", problem, "Problem file");
  opt_str(converge, "--scales", "scales", "k0..k1 (h = 2^-k)");
  opt_int(converge, "--count", "count", "Eigenvalues tracked");

  auto* abel = app.add_subcommand("abel", "Abel summation of an eigenvector expansion");
  abel->add_option("--problem", problem, "Problem file");
  opt_num(abel, "--alpha", "alpha", "Order");
  opt_str(abel, "--tgrid", "tgrid", "t0:t1:steps (log spaced)");
  opt_int(abel, "--truncation", "truncation", "Modes kept");

  auto* subord = app.add_subcommand("subord", "Subordination estimate");
  subord->add_option("--problem", problem, "Problem file");
  opt_num(subord, "--theta", "theta", "Exponent");
  opt_int(subord, "--samples", "samples", "Random starts");
  subord->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { overrides["seed"] = v; }, "Seed");

  auto* validate = app.add_subcommand("validate", "Check a config without computing spectra");
  validate->add_option("--problem", problem, "Problem file");

  auto* presets = app.add_subcommand("presets", "List bundled presets");
  std::string show;
  presets->add_option("--show", show, "Print one preset as JSON");

  for (auto* sc : {run, solve1d, solve2d, weyl, converge, abel, subord})
    sc->add_option("--out", out, "Output file, relative to --out-dir");

  CLI11_PARSE(app, argc, argv);

  if (g.threads > 0) singspec::set_thread_count(g.threads);

  try {
    if (presets->parsed()) {
      if (!show.empty()) {
        std::cout << singspec::cli::preset(show).dump(2) << '\n';
        return 0;
      }
      for (const auto& n : singspec::cli::preset_names()) std::cout << n << '\n';
      return 0;
    }
    fs::path base_dir;
    Json doc = base_document(g, problem, base_dir);
    if (validate->parsed()) {
      const auto issues = singspec::cli::validate(doc, base_dir);
      int code = 0;
      for (const auto& i : issues) {
        std::cout << i.severity << (i.field.empty() ? "" : " " + i.field) << ": " << i.message << '\n';
        if (i.severity == "error") code = 1;
      }
      if (issues.empty()) std::cout << "ok\n";
      return code;
    }
    const std::pair<CLI::App*, const char*> kinds[] = {{solve1d, "solve1d"}, {solve2d, "solve2d"}, {weyl, "weyl"},
                                                       {converge, "converge"}, {abel, "abel"}, {subord, "subord"}};
    for (const auto& [sc, kind] : kinds)
      if (sc->parsed()) doc["kind"] = kind;
    for (auto& [k, v] : overrides.items()) doc[k] = v;
    if (!out.empty()) doc["output"] = out;
    if (doc.empty()) {
      std::cout << app.help();
      return 1;
    }
    singspec::cli::RunOptions opts;
    opts.out_dir = g.out_dir;
    opts.seed = g.seed;
    return report(singspec::cli::run(doc, opts, base_dir));
  } catch (const singspec::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return dynamic_cast<const singspec::NumericalError*>(&e) ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: cli: " << e.what() << '\n';
    return 1;
  }
}
