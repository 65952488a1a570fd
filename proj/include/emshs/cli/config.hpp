// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_CLI_CONFIG_HPP
#define EMSHS_CLI_CONFIG_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <json.hpp>
#include "emshs/cli/raster.hpp"
#include "emshs/common.hpp"
#include "emshs/fem.hpp"
#include "emshs/precond.hpp"
#include "emshs/verify.hpp"

namespace emshs::cli
{

using json = nlohmann::json;

// Interior source or boundary datum as it appears in a config file.
struct SourceConfig
{
  std::string type = "zero";  // zero | constant | gaussian
  double value_re = 0.0, value_im = 0.0;
  std::array<double, 3> center = {0.5, 0.5, 0.5};
  double width_h = 2.0;  // Gaussian width in units of h
  double amplitude = 1.0;
};

struct RunConfig
{
  int dim = 2;
  std::optional<double> k;
  std::optional<double> omega;  // with a raster, k(x) = omega / c(x)
  std::string setting;          // "A", "B" or empty for explicit grids
  std::optional<int> fine_cells;    // 1/h
  std::optional<int> coarse_cells;  // 1/H
  int level = 0;
  int overlap_layers = 1;
  PrecondMode precond = PrecondMode::Hybrid;
  std::string solver = "bicgstab";  // bicgstab | fixed-point
  double tol = 1e-8;
  int maxit = 1000;
  SourceConfig f{"gaussian"};
  SourceConfig g{"zero"};
  std::string velocity;  // raster path
  std::uint64_t seed = 2024;
  std::string output = "emshs-out";
  double node_cap = 5e6;
  bool allow_large = false;
};

inline SourceTerm make_source_term(const SourceConfig &s, double h)
{
  if (s.type == "zero")
  {
    return ConstantSource{0.0};
  }
  if (s.type == "constant")
  {
    return ConstantSource{Complex(s.value_re, s.value_im)};
  }
  if (s.type == "gaussian")
  {
    Require(s.width_h > 0.0, "gaussian source width must be positive");
    return GaussianSource{{s.center[0], s.center[1], s.center[2]}, s.width_h * h, s.amplitude};
  }
  throw Error("unknown source type '" + s.type + "' (zero | constant | gaussian)");
}

inline SourceSpec make_source_spec(const RunConfig &c, double h)
{
  SourceSpec spec;
  spec.f = make_source_term(c.f, h);
  spec.g = make_source_term(c.g, h);
  return spec;
}

// Grid sizes and wavenumber field implied by a config.
struct ResolvedProblem
{
  int fine_cells = 0;
  int coarse_cells = 0;
  WavenumberField kfield;
  double k_reference = 0.0;  // constant k, or the raster's largest k
  std::string setting;
  std::optional<std::uint64_t> raster_hash;

  double h() const { return 1.0 / fine_cells; }
  double H() const { return 1.0 / coarse_cells; }
  double num_nodes(int dim) const { return std::pow(fine_cells + 1.0, dim); }
};

inline void validate(const RunConfig &c)
{
  Require(c.dim == 2 || c.dim == 3, "dim must be 2 or 3");
  Require(c.level >= 0, "level must be nonnegative");
  Require(c.overlap_layers >= 1, "overlap_layers must be at least 1");
  Require(c.tol > 0.0, "tol must be positive");
  Require(c.maxit >= 0, "maxit must be nonnegative");
  Require(c.solver == "bicgstab" || c.solver == "fixed-point",
          "solver must be 'bicgstab' or 'fixed-point'");
  const bool explicit_grid = c.fine_cells.has_value() || c.coarse_cells.has_value();
  Require(!(explicit_grid && !c.setting.empty()),
          "give either a setting (A | B) or explicit fine/coarse cells, not both");
  Require(!explicit_grid || (c.fine_cells && c.coarse_cells),
          "explicit grids need both fine_cells and coarse_cells");
  Require(explicit_grid || !c.setting.empty(), "no grid: give a setting or fine/coarse cells");
  Require(c.velocity.empty() || c.omega.has_value(), "a velocity raster needs omega");
  Require(!c.velocity.empty() || c.k.has_value(), "give k (or omega with a velocity raster)");
  Require(!(c.velocity.empty() && c.omega && !c.k), "omega is only used with a velocity raster");
}

inline ResolvedProblem resolve(const RunConfig &c)
{
  validate(c);
  ResolvedProblem p;
  if (!c.velocity.empty())
  {
    VelocityRaster r = read_velocity_raster(c.velocity);
    Require(r.dim == c.dim, "velocity raster is " + std::to_string(r.dim) + "-d, config is " +
                                std::to_string(c.dim) + "-d");
    r.omega = *c.omega;
    p.raster_hash = raster_hash(r);
    p.kfield = WavenumberField::from_raster(std::move(r));
  }
  else
  {
    p.kfield = WavenumberField::constant(*c.k);
  }
  p.k_reference = p.kfield.max_k();
  if (!c.setting.empty())
  {
    const auto s = make_setting(c.setting, c.k.value_or(p.k_reference));
    p.fine_cells = s.fine_cells;
    p.coarse_cells = s.coarse_cells;
    p.setting = c.setting;
  }
  else
  {
    p.fine_cells = *c.fine_cells;
    p.coarse_cells = *c.coarse_cells;
    Require(p.fine_cells >= 1 && p.coarse_cells >= 1 && p.fine_cells % p.coarse_cells == 0,
            "fine_cells must be a positive multiple of coarse_cells");
  }
  const double nodes = p.num_nodes(c.dim);
  Require(c.allow_large || nodes <= c.node_cap,
          "problem has " + std::to_string(static_cast<long long>(nodes)) +
              " fine nodes, above the cap of " + std::to_string(static_cast<long long>(c.node_cap)) +
              "; pass --allow-large to run it anyway");
  return p;
}

inline json to_json(const SourceConfig &s)
{
  return json{{"type", s.type},         {"value", {s.value_re, s.value_im}},
              {"center", s.center},     {"width_h", s.width_h},
              {"amplitude", s.amplitude}};
}

inline json to_json(const RunConfig &c)
{
  json j;
  j["dim"] = c.dim;
  j["k"] = c.k ? json(*c.k) : json(nullptr);
  j["omega"] = c.omega ? json(*c.omega) : json(nullptr);
  j["setting"] = c.setting;
  j["fine_cells"] = c.fine_cells ? json(*c.fine_cells) : json(nullptr);
  j["coarse_cells"] = c.coarse_cells ? json(*c.coarse_cells) : json(nullptr);
  j["level"] = c.level;
  j["overlap_layers"] = c.overlap_layers;
  j["precond"] = to_string(c.precond);
  j["solver"] = c.solver;
  j["tol"] = c.tol;
  j["maxit"] = c.maxit;
  j["f"] = to_json(c.f);
  j["g"] = to_json(c.g);
  j["velocity"] = c.velocity;
  j["seed"] = c.seed;
  j["output"] = c.output;
  j["node_cap"] = c.node_cap;
  j["allow_large"] = c.allow_large;
  return j;
}

namespace detail
{

inline void read_source(const json &j, SourceConfig &s)
{
  static const std::array<const char *, 5> keys = {"type", "value", "center", "width_h", "amplitude"};
  for (const auto &[key, _] : j.items())
  {
    Require(std::find(keys.begin(), keys.end(), key) != keys.end(),
            "unknown source key '" + key + "'");
  }
  s.type = j.value("type", s.type);
  if (j.contains("value"))
  {
    const auto &v = j.at("value");
    if (v.is_array())
    {
      Require(v.size() == 2, "source value must be a number or [re, im]");
      s.value_re = v[0].get<double>();
      s.value_im = v[1].get<double>();
    }
    else
    {
      s.value_re = v.get<double>();
      s.value_im = 0.0;
    }
  }
  if (j.contains("center"))
  {
    const auto &v = j.at("center");
    Require(v.is_array() && v.size() >= 2 && v.size() <= 3, "source center must have 2 or 3 entries");
    for (std::size_t d = 0; d < v.size(); d++)
    {
      s.center[d] = v[d].get<double>();
    }
  }
  s.width_h = j.value("width_h", s.width_h);
  s.amplitude = j.value("amplitude", s.amplitude);
}

template <typename T>
std::optional<T> optional_field(const json &j, const char *key, std::optional<T> fallback)
{
  if (!j.contains(key))
  {
    return fallback;
  }
  if (j.at(key).is_null())
  {
    return std::nullopt;
  }
  return j.at(key).get<T>();
}

}  // namespace detail

// Fields absent from the JSON keep the values already in `c`; unknown keys are errors.
inline void merge_json(const json &j, RunConfig &c)
{
  Require(j.is_object(), "config must be a JSON object");
  static const std::array<const char *, 19> keys = {
      "dim",     "k",     "omega", "setting",  "fine_cells", "coarse_cells", "level",
      "overlap_layers", "precond", "solver", "tol", "maxit", "f", "g", "velocity", "seed",
      "output",  "node_cap", "allow_large"};
  for (const auto &[key, _] : j.items())
  {
    Require(std::find(keys.begin(), keys.end(), key) != keys.end(),
            "unknown config key '" + key + "'");
  }
  try
  {
    c.dim = j.value("dim", c.dim);
    c.k = detail::optional_field<double>(j, "k", c.k);
    c.omega = detail::optional_field<double>(j, "omega", c.omega);
    c.setting = j.value("setting", c.setting);
    c.fine_cells = detail::optional_field<int>(j, "fine_cells", c.fine_cells);
    c.coarse_cells = detail::optional_field<int>(j, "coarse_cells", c.coarse_cells);
    c.level = j.value("level", c.level);
    c.overlap_layers = j.value("overlap_layers", c.overlap_layers);
    if (j.contains("precond"))
    {
      c.precond = precond_mode_from_string(j.at("precond").get<std::string>());
    }
    c.solver = j.value("solver", c.solver);
    c.tol = j.value("tol", c.tol);
    c.maxit = j.value("maxit", c.maxit);
    if (j.contains("f"))
    {
      detail::read_source(j.at("f"), c.f);
    }
    if (j.contains("g"))
    {
      detail::read_source(j.at("g"), c.g);
    }
    c.velocity = j.value("velocity", c.velocity);
    c.seed = j.value("seed", c.seed);
    c.output = j.value("output", c.output);
    c.node_cap = j.value("node_cap", c.node_cap);
    c.allow_large = j.value("allow_large", c.allow_large);
  }
  catch (const json::exception &err)
  {
    throw Error(std::string("config: ") + err.what());
  }
}

inline void merge_json_file(const std::string &path, RunConfig &c)
{
  std::ifstream in(path);
  Require(static_cast<bool>(in), "cannot open config file '" + path + "'");
  json j;
  try
  {
    j = json::parse(in, nullptr, true, true);
  }
  catch (const json::parse_error &err)
  {
    throw Error(path + ": " + err.what());
  }
  merge_json(j, c);
}

}  // namespace emshs::cli

#endif  // EMSHS_CLI_CONFIG_HPP
