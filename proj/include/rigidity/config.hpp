#pragma once
// Scenario configuration, read from JSON. Unknown keys are rejected.

#include "rigidity/quadrature.hpp"
#include "rigidity/report.hpp"

#include <filesystem>
#include <set>

namespace rigidity {

inline constexpr int min_grid = 16;

struct DomainConfig {
  std::string kind;            // "cap", "hemisphere", "ball"; empty: scenario default
  double delta = 0.0;          // cap radius
  double offset = 0.0;         // cap center distance from q
  double radius = 1.0;         // ball radius
  std::vector<double> center;  // ball center
  std::vector<double> a;       // base point of the flat quadratic potential
};

struct Tolerances {
  double identity = 1e-6;      // absolute residual of integral identities at the default grid
  double order = 3.0;          // refinement order under grid refinement
  double scaling_order = 2.7;  // order of cubic remainders under h -> s h
  double constraint = 1e-10;
  double stencil = 1e-8;       // Q'(0)
  double relative = 1e-2;      // Q''(0) match
  double ratio = 0.2;          // Brown-York t^2 ratio
};

struct ScenarioConfig {
  std::string scenario;
  int n = 3;
  std::string background;  // "sphere" or "flat"; empty: scenario default
  DomainConfig domain;
  int grid = 48;
  std::vector<int> grids{24, 32, 48};
  QuadratureSize volume{24, 24, 48};
  QuadratureSize surface{1, 24, 48};
  std::uint64_t seed = 1;
  std::string seed_recipe = "bump";  // "bump" or "quadrupole"
  int degree = 4;
  int potential_degree = 6;
  std::vector<double> scales{1e-1, std::pow(10.0, -1.5), 1e-2};
  double t1 = 1e-2;
  std::vector<double> family_t{0.01, 0.02};
  int conformal_degree = 6;
  std::string potential;  // "cos", "constant", "quadratic", "one"; empty: scenario default
  double c = 0.0;         // extra convexity slack for the convex-cap scenario
  int pairs = 5;
  int samples = 10000;
  Tolerances tol;
  std::string out_dir;
  std::string format = "json";

  void validate() const {
    if (n < 3 || n > 4) throw ConfigError("scenarios support n = 3 or 4");
    if (grid < min_grid) throw SizeError("grid " + std::to_string(grid) + " below minimum " + std::to_string(min_grid));
    if (grids.size() < 3) throw ConfigError("grid ladder needs at least three sizes");
    for (std::size_t i = 0; i < grids.size(); ++i) {
      if (grids[i] < min_grid) throw SizeError("grid ladder entry below minimum " + std::to_string(min_grid));
      if (i > 0 && grids[i] <= grids[i - 1]) throw ConfigError("grid ladder must increase");
    }
    if (scales.size() < 3) throw ConfigError("scale list needs at least three entries");
    for (std::size_t i = 1; i < scales.size(); ++i)
      if (!(scales[i] < scales[i - 1])) throw ConfigError("scale list must be sorted descending");
    for (double s : scales)
      if (!(s > 0.0)) throw ConfigError("scales must be positive");
    if (!(t1 > 0.0)) throw ConfigError("t1 must be positive");
    for (double t : family_t)
      if (!(t > 0.0)) throw ConfigError("family samples are given as positive magnitudes");
    if (format != "json" && format != "csv") throw ConfigError("format must be json or csv");
    if (seed_recipe != "bump" && seed_recipe != "quadrupole") throw ConfigError("seed recipe must be bump or quadrupole");
    if (!background.empty() && background != "sphere" && background != "flat")
      throw ConfigError("background must be sphere or flat");
    if (pairs < 1 || samples < 2) throw ConfigError("pairs and samples must be positive");
    if (!out_dir.empty()) {
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      const auto probe = std::filesystem::path(out_dir) / ".write_probe";
      std::ofstream f(probe);
      if (!f) throw ConfigError("output directory not writable: " + out_dir);
      f.close();
      std::filesystem::remove(probe, ec);
    }
  }
};

namespace detail {

inline void check_keys(const Json& j, const std::set<std::string>& allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

inline QuadratureSize read_quadrature(const Json& j, QuadratureSize q, const std::string& where) {
  check_keys(j, {"radial", "polar", "azimuth"}, where);
  read(j, "radial", q.radial);
  read(j, "polar", q.polar);
  read(j, "azimuth", q.azimuth);
  if (q.radial < 1 || q.polar < 1 || q.azimuth < 1) throw SizeError(where + " sizes must be positive");
  return q;
}

}  // namespace detail

inline ScenarioConfig config_from_json(const Json& j, ScenarioConfig c = {}) {
  detail::check_keys(j,
                     {"scenario", "n", "background", "domain", "grid", "grids", "volume_quadrature",
                      "surface_quadrature", "seed", "seed_recipe", "degree", "potential_degree", "scales", "t1",
                      "family_t", "conformal_degree", "potential", "c", "pairs", "samples", "tolerances", "output",
                      "format"},
                     "config");
  detail::read(j, "scenario", c.scenario);
  detail::read(j, "n", c.n);
  detail::read(j, "background", c.background);
  if (j.contains("domain")) {
    const Json& d = j["domain"];
    detail::check_keys(d, {"kind", "delta", "offset", "radius", "center", "a"}, "domain");
    detail::read(d, "kind", c.domain.kind);
    detail::read(d, "delta", c.domain.delta);
    detail::read(d, "offset", c.domain.offset);
    detail::read(d, "radius", c.domain.radius);
    detail::read(d, "center", c.domain.center);
    detail::read(d, "a", c.domain.a);
  }
  detail::read(j, "grid", c.grid);
  detail::read(j, "grids", c.grids);
  if (j.contains("volume_quadrature")) c.volume = detail::read_quadrature(j["volume_quadrature"], c.volume, "volume_quadrature");
  if (j.contains("surface_quadrature"))
    c.surface = detail::read_quadrature(j["surface_quadrature"], c.surface, "surface_quadrature");
  detail::read(j, "seed", c.seed);
  detail::read(j, "seed_recipe", c.seed_recipe);
  detail::read(j, "degree", c.degree);
  detail::read(j, "potential_degree", c.potential_degree);
  detail::read(j, "scales", c.scales);
  detail::read(j, "t1", c.t1);
  detail::read(j, "family_t", c.family_t);
  detail::read(j, "conformal_degree", c.conformal_degree);
  detail::read(j, "potential", c.potential);
  detail::read(j, "c", c.c);
  detail::read(j, "pairs", c.pairs);
  detail::read(j, "samples", c.samples);
  if (j.contains("tolerances")) {
    const Json& t = j["tolerances"];
    detail::check_keys(t, {"identity", "order", "scaling_order", "constraint", "stencil", "relative", "ratio"},
                       "tolerances");
    detail::read(t, "identity", c.tol.identity);
    detail::read(t, "order", c.tol.order);
    detail::read(t, "scaling_order", c.tol.scaling_order);
    detail::read(t, "constraint", c.tol.constraint);
    detail::read(t, "stencil", c.tol.stencil);
    detail::read(t, "relative", c.tol.relative);
    detail::read(t, "ratio", c.tol.ratio);
  }
  if (j.contains("output")) {
    const Json& o = j["output"];
    detail::check_keys(o, {"dir", "format"}, "output");
    detail::read(o, "dir", c.out_dir);
    detail::read(o, "format", c.format);
  }
  detail::read(j, "format", c.format);
  return c;
}

inline ScenarioConfig load_config(const std::string& path, ScenarioConfig base = {}) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path);
  Json j;
  try {
    j = Json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, std::move(base));
}

}  // namespace rigidity
