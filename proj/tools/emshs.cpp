// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

// emshs: solve Helmholtz problems with the edge multiscale hybrid Schwarz preconditioner and
// run the verification sweeps.

#include <iostream>
#include <optional>
#include <string>
#include <vector>
#include <CLI11.hpp>
#include "emshs/cli/commands.hpp"

namespace
{

using namespace emshs;
using namespace emshs::cli;

// Flags shared by `solve` and `experiment`. Values land in `opts` and are applied on top of
// the config file, so explicit flags always win.
struct CommonFlags
{
  std::string config;
  std::optional<int> dim;
  std::optional<double> k, omega;
  std::optional<std::string> setting;
  std::optional<int> fine_cells, coarse_cells;
  std::optional<int> level, overlap, maxit;
  std::optional<std::string> precond, solver;
  std::optional<double> tol;
  std::optional<std::string> source;
  std::optional<double> source_value, source_width, source_amplitude, g_value;
  std::optional<std::string> velocity;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output;
  std::optional<double> node_cap;
  bool allow_large = false;

  void add(CLI::App &app, bool with_problem)
  {
    app.add_option("--config", config, "JSON config file (flags override its values)")
        ->check(CLI::ExistingFile);
    app.add_option("--dim", dim, "spatial dimension (2 or 3)");
    if (with_problem)
    {
      app.add_option("--k", k, "wavenumber");
      app.add_option("--setting", setting, "grid preset A (h ~ k^-3/2, H = 1/k) or B (h = 1/3k, H = 2/k)");
      app.add_option("--level", level, "edge space level");
    }
    app.add_option("--omega", omega, "angular frequency, with a velocity raster");
    app.add_option("--fine-cells", fine_cells, "explicit grid: 1/h");
    app.add_option("--coarse-cells", coarse_cells, "explicit grid: 1/H");
    app.add_option("--overlap", overlap, "overlap in fine-element layers");
    app.add_option("--precond", precond, "one-level | hybrid | coarse-only");
    app.add_option("--solver", solver, "bicgstab | fixed-point");
    app.add_option("--tol", tol, "relative residual reduction");
    app.add_option("--maxit", maxit, "iteration limit");
    app.add_option("--source", source, "interior source: gaussian | constant | zero");
    app.add_option("--source-value", source_value, "constant source value");
    app.add_option("--source-width", source_width, "Gaussian width in units of h");
    app.add_option("--source-amplitude", source_amplitude, "Gaussian amplitude");
    app.add_option("--g", g_value, "constant impedance boundary datum");
    app.add_option("--velocity", velocity, "velocity raster file");
    app.add_option("--seed", seed, "seed for randomized probes");
    app.add_option("--output", output, "output directory");
    app.add_option("--node-cap", node_cap, "refuse problems with more fine nodes than this");
    app.add_flag("--allow-large", allow_large, "run problems above the node cap");
  }

  RunConfig apply() const
  {
    RunConfig c;
    if (!config.empty())
    {
      merge_json_file(config, c);
    }
    auto set = [](auto &dst, const auto &src)
    {
      if (src)
      {
        dst = *src;
      }
    };
    set(c.dim, dim);
    if (k)
    {
      c.k = *k;
    }
    if (omega)
    {
      c.omega = *omega;
    }
    set(c.setting, setting);
    if (fine_cells || coarse_cells)
    {
      c.setting.clear();
      c.fine_cells = fine_cells ? fine_cells : c.fine_cells;
      c.coarse_cells = coarse_cells ? coarse_cells : c.coarse_cells;
    }
    if (setting)
    {
      c.fine_cells.reset();
      c.coarse_cells.reset();
    }
    set(c.level, level);
    set(c.overlap_layers, overlap);
    if (precond)
    {
      c.precond = precond_mode_from_string(*precond);
    }
    set(c.solver, solver);
    set(c.tol, tol);
    set(c.maxit, maxit);
    set(c.f.type, source);
    set(c.f.value_re, source_value);
    set(c.f.width_h, source_width);
    set(c.f.amplitude, source_amplitude);
    if (g_value)
    {
      c.g.type = "constant";
      c.g.value_re = *g_value;
      c.g.value_im = 0.0;
    }
    set(c.velocity, velocity);
    set(c.seed, seed);
    set(c.output, output);
    set(c.node_cap, node_cap);
    c.allow_large = c.allow_large || allow_large;
    return c;
  }
};

}  // namespace

int main(int argc, char **argv)
{
  CLI::App app{"Edge multiscale hybrid Schwarz solver for the Helmholtz equation"};
  app.require_subcommand(1);

  CommonFlags solve_flags;
  auto *solve = app.add_subcommand("solve", "solve one problem and write solution, report, metadata");
  solve_flags.add(*solve, true);

  CommonFlags exp_flags;
  auto *experiment = app.add_subcommand("experiment", "run a verification sweep (test1 | test2 | iters | hetero)");
  std::string exp_name;
  std::vector<std::string> settings;
  std::vector<double> ks, omegas;
  std::vector<int> levels;
  int jobs = 1, samples = 20;
  bool no_global_trace = false;
  bool generate_model = false;
  InclusionModel model;
  experiment->add_option("name", exp_name, "test1 | test2 | iters | hetero")->required();
  exp_flags.add(*experiment, false);
  experiment->add_option("--setting", settings, "settings to sweep (A,B)")->delimiter(',');
  experiment->add_option("--k", ks, "wavenumbers to sweep")->delimiter(',');
  experiment->add_option("--level", levels, "levels to sweep")->delimiter(',');
  experiment->add_option("--omegas", omegas, "hetero: angular frequencies to sweep")->delimiter(',');
  experiment->add_option("--jobs", jobs, "cells run concurrently")->check(CLI::PositiveNumber);
  experiment->add_option("--samples", samples, "test2: traces per subdomain")->check(CLI::PositiveNumber);
  experiment->add_flag("--no-global-trace", no_global_trace, "test2: leave out the u_h trace");
  experiment->add_flag("--inclusions", generate_model, "hetero: generate an inclusion model");
  experiment->add_option("--model-cells", model.cells, "inclusion model raster cells per axis");
  experiment->add_option("--model-count", model.count, "number of inclusions");
  experiment->add_option("--model-seed", model.seed, "inclusion model seed");

  auto *velocity = app.add_subcommand("velocity", "generate or check velocity rasters");
  velocity->require_subcommand(1);
  auto *generate = velocity->add_subcommand("generate", "write a seeded inclusion model");
  InclusionModel gen;
  std::string gen_out;
  generate->add_option("--dim", gen.dim, "dimension");
  generate->add_option("--cells", gen.cells, "raster cells per axis");
  generate->add_option("--omega", gen.omega, "angular frequency stored in the header");
  generate->add_option("--count", gen.count, "number of inclusions");
  generate->add_option("--background", gen.background, "background velocity");
  generate->add_option("--inclusion", gen.inclusion, "inclusion velocity");
  generate->add_option("--min-size", gen.min_size, "smallest inclusion side");
  generate->add_option("--max-size", gen.max_size, "largest inclusion side");
  generate->add_option("--seed", gen.seed, "seed");
  generate->add_option("--output", gen_out, "raster file")->required();
  auto *check = velocity->add_subcommand("check", "parse a raster and print its hash");
  std::string check_path;
  check->add_option("file", check_path, "raster file")->required();

  try
  {
    app.parse(argc, argv);
  }
  catch (const CLI::ParseError &e)
  {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_error;
  }

  try
  {
    if (*solve)
    {
      return cmd_solve(solve_flags.apply(), std::cout);
    }
    if (*experiment)
    {
      ExperimentSpec spec;
      spec.name = exp_name;
      spec.settings = settings;
      spec.ks = ks;
      spec.levels = levels.empty() ? std::vector<int>{0} : levels;
      spec.omegas = omegas;
      spec.base = exp_flags.apply();
      spec.jobs = jobs;
      spec.test2_samples = samples;
      spec.test2_global_trace = !no_global_trace;
      if (generate_model)
      {
        model.dim = spec.base.dim;
        model.seed = experiment->count("--model-seed") ? model.seed : spec.base.seed;
        spec.model = model;
      }
      return cmd_experiment(spec, std::cout);
    }
    if (*generate)
    {
      const VelocityRaster r = generate_inclusion_model(gen);
      write_velocity_raster(gen_out, r);
      std::cout << "wrote " << gen_out << " fnv1a " << hex64(raster_hash(r)) << '\n';
      return exit_ok;
    }
    if (*check)
    {
      const VelocityRaster r = read_velocity_raster(check_path);
      std::cout << check_path << ": " << r.dim << "-d, " << r.num_cells() << " cells, omega "
                << r.omega << ", fnv1a " << hex64(raster_hash(r)) << '\n';
      return exit_ok;
    }
  }
  catch (const std::exception &err)
  {
    std::cerr << "error: " << err.what() << '\n';
    return exit_error;
  }
  return exit_error;
}
