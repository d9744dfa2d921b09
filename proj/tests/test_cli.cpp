#include "doctest.h"

#include "singspec/cli.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace singspec;
using namespace singspec::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / "singspec-test-cli" / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Data rows of a CSV result: comment lines and the column header dropped.
std::vector<std::vector<std::string>> rows(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::vector<std::string>> out;
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    out.push_back(cells);
  }
  return out;
}

Json delta_problem(const std::string& kind) {
  return Json{{"kind", kind},
              {"potential",
               {{"kind", "primitive1d"}, {"interval", {0.0, 1.0}}, {"deltas", Json::array({Json::array({0.5, 10.0, 0.0})})}}},
              {"bc", "dirichlet"}};
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  CHECK(format_number(1.0) == "1.0000000000000000e+00");
  CHECK(format_number(-0.5) == "-5.0000000000000000e-01");
  CHECK(format_number(std::nan("")) == "nan");
  for (double v : {0.1, 1.0 / 3, 6.02214076e23, -2.5e-300}) CHECK(std::strtod(format_number(v).c_str(), nullptr) == v);
}

TEST_CASE("config hash depends on content only") {
  const Json a = preset("free-dirichlet-1d");
  CHECK(config_hash(a) == config_hash(preset("free-dirichlet-1d")));
  Json b = a;
  b["count"] = 6;
  CHECK(config_hash(a) != config_hash(b));
  CHECK(config_hash(a).size() == 16);
}

TEST_CASE("grids, scales and domains") {
  const auto r = parse_grid("1:3:3");
  REQUIRE(r.size() == 3);
  CHECK(r[1] == 2.0);
  const auto t = parse_grid("1e-1:1e-3:3", true);
  CHECK(t[1] == doctest::Approx(1e-2));
  CHECK(t.back() == 1e-3);
  const auto s = parse_scales("2..4");
  CHECK(s == std::vector<double>{0.25, 0.125, 0.0625});
  CHECK_THROWS_AS(parse_scales("4..2"), ConfigError);
  CHECK_THROWS_AS(parse_grid("1:2"), ConfigError);
  CHECK(parse_domain("rect:2,1,4,2").triangles.size() == 16);
  CHECK(parse_domain("disk:1,2").triangles.size() == 96);
  CHECK_THROWS_AS(parse_domain("square:1"), ConfigError);
  CHECK_THROWS_AS(parse_domain("rect:1,1,2.5,2"), ConfigError);
}

TEST_CASE("potential definitions") {
  const Json j = {{"kind", "primitive1d"},
                  {"interval", {0.0, 2.0}},
                  {"base", {1.0, Json::array({0.0, 2.0})}},
                  {"deltas", Json::array({Json::array({1.0, 3.0, -1.0})})}};
  const auto u = parse_primitive(j);
  CHECK(std::abs(u->value(0.5) - Complex(1.0, 1.0)) < 1e-14);
  CHECK(std::abs(u->value(1.5) - (Complex(1.0, 3.0) + Complex(3.0, -1.0))) < 1e-14);
  CHECK_FALSE(u->is_real());

  auto message = [](const Json& bad) -> std::string {
    try {
      (void)parse_primitive(bad);
    } catch (const ConfigError& e) {
      return e.what();
    }
    return "";
  };
  Json bad = j;
  bad["deltas"][0][1] = "ten";
  CHECK(message(bad).find("potential.deltas[0][1]") != std::string::npos);
  bad = j;
  bad["deltas"][0][0] = 2.5;
  CHECK(message(bad).find("potential.deltas[0][0]") != std::string::npos);
  bad = j;
  bad.erase("interval");
  CHECK(message(bad).find("potential.interval") != std::string::npos);

  const Json f = {{"kind", "vectorfield"},
                  {"domain", {{"type", "rect"}, {"lo", {0.0, 0.0}}, {"hi", {1.0, 1.0}}}},
                  {"terms", Json::array({Json{{"type", "constant"}, {"value", {1.0, Json::array({0.0, 1.0})}}}})},
                  {"exponent", 3.0}};
  const auto V = parse_field(f);
  CHECK(V.dimension() == 2);
  CHECK(V.exponent() == 3.0);
  CHECK_FALSE(V.is_real());
  CHECK(V(potentials::Point(0.5, 0.5, 0))[1] == Complex(0.0, 1.0));
}

TEST_CASE("free Dirichlet preset: squares and metadata header") {
  const auto dir = scratch("free");
  const auto r = run(preset("free-dirichlet-1d"), RunOptions{dir, {}});
  REQUIRE(r.exit_code == 0);
  REQUIRE(r.artifacts.size() == 1);
  const std::string text = slurp(r.artifacts[0]);
  CHECK(text.rfind(std::string("# singspec ") + kVersion, 0) == 0);
  CHECK(text.find("# config_hash fnv1a64:" + config_hash(preset("free-dirichlet-1d"))) != std::string::npos);
  const auto rs = rows(r.artifacts[0]);
  REQUIRE(rs.size() == 5);
  for (int k = 1; k <= 5; ++k) CHECK(std::stod(rs[k - 1][1]) == doctest::Approx(k * k).epsilon(1e-10));
  CHECK(rs[0][4] == "shooting");
}

TEST_CASE("malformed potential file: exit 1 naming the field") {
  const auto dir = scratch("malformed");
  {
    std::ofstream os(dir / "pot.json");
    os << R"({"kind": "primitive1d", "interval": [0, 1], "deltas": [[0.5, "x", 0]]})";
  }
  Json cfg = {{"kind", "solve1d"}, {"potential", "pot.json"}, {"bc", "dirichlet"}, {"count", 2}};
  auto r = run(cfg, RunOptions{dir, {}}, dir);
  CHECK(r.exit_code == 1);
  CHECK(r.message.find("potential.deltas[0][1]") != std::string::npos);
  CHECK(r.artifacts.empty());

  cfg["potential"] = "missing.json";
  r = run(cfg, RunOptions{dir, {}}, dir);
  CHECK(r.exit_code == 1);
  CHECK(r.message.find("potential") != std::string::npos);

  {
    std::ofstream os(dir / "broken.json");
    os << "{ not json";
  }
  cfg["potential"] = "broken.json";
  CHECK(run(cfg, RunOptions{dir, {}}, dir).exit_code == 1);
  CHECK(run(Json{{"kind", "solve3d"}}, RunOptions{dir, {}}).exit_code == 1);
}

TEST_CASE("numerical failure surfaces as exit 2 with the module name") {
  const auto dir = scratch("numerical");
  const Json cfg = {{"kind", "solve2d"},
                    {"domain", "disk:1,1"},
                    {"bc", "dirichlet"},
                    {"count", 1},
                    {"potential",
                     {{"kind", "vectorfield"},
                      {"domain", {{"type", "disk"}, {"center", {0.0, 0.0}}, {"radius", 1.0}}},
                      {"terms", Json::array({Json{{"type", "radial"}, {"center", {0.0, 0.0}}, {"beta", -2.5}}})},
                      {"exponent", 1.5}}}};
  const auto r = run(cfg, RunOptions{dir, {}});
  CHECK(r.exit_code == 2);
  CHECK(r.message.rfind("femnd: ", 0) == 0);
}

TEST_CASE("converge writes a slope footer") {
  const auto dir = scratch("converge");
  Json cfg = delta_problem("converge");
  cfg["scales"] = "2..4";
  cfg["count"] = 2;
  const auto r = run(cfg, RunOptions{dir, {}});
  REQUIRE(r.exit_code == 0);
  const auto rs = rows(r.artifacts[0]);
  REQUIRE(rs.size() == 4);
  CHECK(rs[0].size() == 4);
  CHECK(rs[3][0] == "slope");
  CHECK(std::stod(rs[3][1]) > 0.9);
}

TEST_CASE("weyl reads a spectrum written by solve1d") {
  const auto dir = scratch("weyl");
  const Json solve = {{"kind", "solve1d"},
                      {"potential", {{"kind", "primitive1d"}, {"interval", {0.0, kPi}}}},
                      {"bc", "dirichlet"},
                      {"count", 20},
                      {"output", "spec.csv"}};
  REQUIRE(run(solve, RunOptions{dir, {}}).exit_code == 0);
  const Json weyl = {{"kind", "weyl"}, {"spectrum", "spec.csv"}, {"dim", 1}, {"volume", kPi}, {"radii", "0.5:199.5:200"}};
  const auto r = run(weyl, RunOptions{dir, {}}, dir);
  REQUIRE(r.exit_code == 0);
  for (const auto& row : rows(r.artifacts[0])) {
    if (row[0] == "max_abs_remainder") continue;
    CHECK(std::stol(row[1]) == static_cast<long>(std::floor(std::sqrt(std::stod(row[0])))));
  }
  // Radii beyond half the top eigenvalue are refused.
  Json far = weyl;
  far["radii"] = "1:300:3";
  CHECK(run(far, RunOptions{dir, {}}, dir).exit_code == 1);
}

TEST_CASE("validate: clean, inadmissible and missing seed") {
  CHECK(validate(preset("free-dirichlet-1d")).empty());
  CHECK(validate(preset("admissible-disk")).empty());

  Json bad = preset("admissible-disk");
  bad["potential"]["terms"][0]["beta"] = -0.9;
  const auto w = validate(bad);
  REQUIRE(w.size() == 1);
  CHECK(w[0].severity == "warning");
  CHECK(w[0].message.find("H^{-1}_{2+eps}") != std::string::npos);

  Json s = preset("subord-zero");
  s.erase("seed");
  const auto e = validate(s);
  REQUIRE(e.size() == 1);
  CHECK(e[0].severity == "error");
  CHECK(e[0].field == "seed");

  Json t = preset("free-dirichlet-1d");
  t["tolerances"] = {{"eigen", -1.0}};
  CHECK(validate(t).at(0).field == "tolerances.eigen");
}

TEST_CASE("seed override reaches the header") {
  const auto dir = scratch("seed");
  const auto r = run(preset("subord-zero"), RunOptions{dir, 99});
  REQUIRE(r.exit_code == 0);
  const auto doc = Json::parse(slurp(r.artifacts[0]));
  CHECK(doc["meta"]["seed"] == 99);
  CHECK(doc["estimate"] == 0.0);
}

TEST_CASE("presets are known and reruns are byte-identical") {
  const auto names = preset_names();
  CHECK(names.size() >= 16);
  CHECK_THROWS_AS(preset("nope"), ConfigError);
  for (const auto& n : names) CHECK_MESSAGE(validate(preset(n)).empty(), n);
  const auto a = scratch("det-a"), b = scratch("det-b");
  for (const char* n : {"free-neumann-1d", "delta10-dirichlet", "subord-one", "weyl-square"}) {
    const auto ra = run(preset(n), RunOptions{a, {}}), rb = run(preset(n), RunOptions{b, {}});
    REQUIRE(ra.exit_code == 0);
    REQUIRE(rb.exit_code == 0);
    CHECK_MESSAGE(slurp(ra.artifacts[0]) == slurp(rb.artifacts[0]), n);
  }
}
