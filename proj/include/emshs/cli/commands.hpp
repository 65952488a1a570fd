// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_CLI_COMMANDS_HPP
#define EMSHS_CLI_COMMANDS_HPP

#include <algorithm>
#include <chrono>
#include <functional>
#include <future>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>
#include <json.hpp>
#include "emshs/cli/config.hpp"
#include "emshs/cli/output.hpp"
#include "emshs/cli/raster.hpp"
#include "emshs/coarse.hpp"
#include "emshs/krylov.hpp"
#include "emshs/precond.hpp"
#include "emshs/verify.hpp"

namespace emshs::cli
{

enum ExitCode : int
{
  exit_ok = 0,
  exit_error = 1,
  exit_not_converged = 2
};

// Choices that the numbers depend on but the method leaves open.
inline json design_choices()
{
  return json{
      {"subdomains", "coarse cell extended by overlap_layers fine cells, clipped at the boundary"},
      {"partition_of_unity",
       "nodal hop distance to the interior subdomain boundary, capped at overlap_layers + 1, "
       "normalized"},
      {"local_dirichlet_solver",
       "real sparse LU; pseudo-inverse fallback below reciprocal condition 1e-10"},
      {"coarse_factorization", "dense LU up to " + std::to_string(coarse_dense_limit) +
                                   " columns, UMFPACK above"},
      {"coarse_column_selection",
       "on a singular coarse operator, keep a maximal independent column subset (pivoted QR, "
       "relative tolerance " + format_double(coarse_dependency_tol) + ")"},
      {"bicgstab",
       "left preconditioned, zero initial guess, stops on the relative preconditioned residual; "
       "one iteration is one full step"},
      {"fixed_point", "stops on the V-norm of the preconditioned residual"},
      {"test1_probe", "u_h for a centred Gaussian source of width 2h, g = 0"},
      {"test2_samples", "random smooth traces in box-normalized coordinates plus the u_h trace"},
      {"h1_norm", "unweighted full H1 norm in test 2 denominators"}};
}

inline json decomposition_json(const Discretization &d, double k, int level)
{
  const auto diag = decomposition_diagnostics(d.mesh, d.coarse, d.subdomains, k);
  const auto cond = check_conditions(k, d.mesh.h, d.coarse.H, diag.delta, level, diag.C_est);
  json j;
  j["Lambda"] = diag.Lambda;
  j["max_multiplicity"] = diag.max_multiplicity;
  j["delta"] = diag.delta;
  j["resolution_margin"] = diag.resolution_margin;
  j["resolution_ok"] = diag.resolution_ok;
  j["C_est"] = diag.C_est ? json(*diag.C_est) : json(nullptr);
  j["partition_of_unity"] = {{"C_inf", d.pou.C_inf_measured}, {"C_G", d.pou.C_G_measured}};
  j["conditions"] = {{"H_threshold", cond.H_threshold},
                     {"H_ok", cond.H_ok},
                     {"level_threshold", cond.level_threshold},
                     {"level_ok", cond.level_ok},
                     {"C_est_used", cond.C_est},
                     {"C_est_available", cond.C_est_available},
                     {"H_guidance_minimal_overlap", cond.H_guidance_minimal_overlap},
                     {"level_guidance_minimal_overlap", cond.level_guidance_minimal_overlap},
                     {"H_guidance_generous_overlap", cond.H_guidance_generous_overlap},
                     {"level_guidance_generous_overlap", cond.level_guidance_generous_overlap}};
  j["warnings"] = d.warnings;
  return j;
}

inline json coarse_json(const CoarseSpace &cs)
{
  return json{{"level", cs.level},
              {"n0", cs.n0},
              {"n0_spanning", cs.n0_spanning},
              {"resonant_local_problems", cs.resonance_count}};
}

struct SolveOutcome
{
  SolveReport report;
  ComplexVector u;
  json metadata;
  int nodes_per_axis = 0;
};

inline std::shared_ptr<Discretization> make_discretization(const RunConfig &c,
                                                           const ResolvedProblem &p)
{
  return emshs::make_discretization(c.dim, p.fine_cells, p.coarse_cells, p.kfield,
                                    c.overlap_layers);
}

inline PrecondStack make_stack(const RunConfig &c, const std::shared_ptr<Discretization> &d,
                               json *meta = nullptr)
{
  std::optional<CoarseSpace> cs;
  if (c.precond != PrecondMode::OneLevel)
  {
    cs = build_coarse_space(*d, c.level);
    if (meta)
    {
      (*meta)["coarse"] = coarse_json(*cs);
    }
  }
  return PrecondStack(d, std::move(cs), c.precond);
}

inline SolveReport run_solver(const RunConfig &c, const PrecondStack &stack,
                              const ComplexVector &F, ComplexVector &u)
{
  SolveReport rep;
  if (c.solver == "bicgstab")
  {
    BicgstabOptions o;
    o.tol = c.tol;
    o.maxit = c.maxit;
    u = bicgstab(stack, F, o, rep);
  }
  else
  {
    FixedPointOptions o;
    o.tol = c.tol;
    o.maxit = c.maxit;
    u = fixed_point(stack, F, o, rep);
  }
  return rep;
}

inline SolveOutcome run_solve(const RunConfig &c)
{
  const ResolvedProblem p = resolve(c);
  SolveOutcome out;
  out.nodes_per_axis = p.fine_cells + 1;
  json &meta = out.metadata;
  meta["config"] = to_json(c);
  meta["design_choices"] = design_choices();
  meta["grid"] = {{"h", inverse_label(p.fine_cells)}, {"H", inverse_label(p.coarse_cells)},
                  {"fine_nodes", static_cast<long long>(p.num_nodes(c.dim))}};
  meta["k_reference"] = p.k_reference;
  if (p.raster_hash)
  {
    meta["velocity_fnv1a"] = hex64(*p.raster_hash);
  }
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = make_discretization(c, p);
  meta["decomposition"] = decomposition_json(*d, p.k_reference, c.level);
  const PrecondStack stack = make_stack(c, d, &meta);
  meta["setup_time"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const ComplexVector F = assemble_rhs(d->mesh, make_source_spec(c, d->mesh.h));
  out.report = run_solver(c, stack, F, out.u);
  meta["solves"] = {{"local", stack.counters().local_solves.load()},
                    {"coarse", stack.counters().coarse_solves.load()},
                    {"preconditioner_applications", stack.counters().applies.load()}};
  return out;
}

inline int cmd_solve(const RunConfig &c, std::ostream &log)
{
  const SolveOutcome out = run_solve(c);
  ensure_directory(c.output);
  const std::string dir = c.output + "/";
  write_solution(dir + "solution.bin", c.dim, out.nodes_per_axis, out.u);
  write_text(dir + "report.txt", format_report(out.report));
  write_json(dir + "metadata.json", out.metadata);
  log << (out.report.converged ? "converged" : "not converged") << " after "
      << out.report.iterations << " iterations, relative residual "
      << format_double(out.report.final_relative_residual, 3) << " (" << out.report.message
      << ")\n";
  log << "wrote " << dir << "{solution.bin,report.txt,metadata.json}\n";
  return out.report.converged ? exit_ok : exit_not_converged;
}

//
// Experiments: sweeps of independent cells, each producing one or more table rows plus a
// metadata record. Failed cells show "/" in every measured column.
//
struct ExperimentSpec
{
  std::string name;  // test1 | test2 | iters | hetero
  std::vector<std::string> settings;
  std::vector<double> ks;
  std::vector<int> levels;
  std::vector<double> omegas;  // hetero
  RunConfig base;
  std::optional<InclusionModel> model;  // hetero: generated instead of base.velocity
  int test2_samples = 20;
  bool test2_global_trace = true;
  int jobs = 1;
};

struct CellResult
{
  std::vector<std::vector<std::string>> rows;
  json metadata;
};

struct ExperimentResult
{
  Table table;
  json metadata;
  int failed_cells = 0;
};

namespace detail
{

using Cell = std::function<CellResult()>;

inline std::vector<CellResult> run_cells(const std::vector<Cell> &cells, int jobs)
{
  std::vector<CellResult> out(cells.size());
  const std::size_t width = static_cast<std::size_t>(std::max(1, jobs));
  for (std::size_t start = 0; start < cells.size(); start += width)
  {
    const std::size_t stop = std::min(cells.size(), start + width);
    if (width == 1)
    {
      out[start] = cells[start]();
      continue;
    }
    std::vector<std::future<CellResult>> running;
    for (std::size_t i = start; i < stop; i++)
    {
      running.push_back(std::async(std::launch::async, cells[i]));
    }
    for (std::size_t i = start; i < stop; i++)
    {
      out[i] = running[i - start].get();
    }
  }
  return out;
}

inline std::vector<std::string> grid_cells(const std::string &setting, double k,
                                           const SettingPreset &s)
{
  return {setting, format_double(k), inverse_label(s.fine_cells), inverse_label(s.coarse_cells)};
}

template <typename Body>
CellResult guarded(json meta, std::vector<std::string> prefix, std::size_t measured_columns,
                   std::size_t rows_on_failure, Body body)
{
  try
  {
    return body(meta, prefix);
  }
  catch (const std::exception &err)
  {
    CellResult r;
    meta["error"] = err.what();
    r.metadata = meta;
    for (std::size_t i = 0; i < rows_on_failure; i++)
    {
      auto row = prefix;
      row.insert(row.end(), measured_columns, "/");
      r.rows.push_back(row);
    }
    return r;
  }
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentSpec &spec)
{
  ExperimentResult res;
  std::vector<detail::Cell> cells;
  const RunConfig base = spec.base;

  auto setting_cells = [&](auto &&make)
  {
    for (const auto &setting : spec.settings)
    {
      for (double k : spec.ks)
      {
        make(setting, k);
      }
    }
  };

  if (spec.name == "test1")
  {
    res.table.columns = {"setting", "k", "h", "H", "measured", "predicted"};
    setting_cells(
        [&](const std::string &setting, double k)
        {
          cells.push_back(
              [=]()
              {
                const auto s = make_setting(setting, k);
                json meta{{"setting", setting}, {"k", k}, {"dim", base.dim},
                          {"overlap_layers", base.overlap_layers}};
                return detail::guarded(
                    meta, detail::grid_cells(setting, k, s), 1, 1,
                    [&](json m, std::vector<std::string> row)
                    {
                      const auto d = emshs::make_discretization(base.dim, s.fine_cells,
                                                                s.coarse_cells,
                                                                WavenumberField::constant(k),
                                                                base.overlap_layers);
                      const ComplexVector probe =
                          direct_solve(d->A, assemble_rhs(d->mesh, default_probe_source(d->mesh)));
                      const double sigma = test1_sigma(*d, probe);
                      VerificationRecord rec{k, s.h(), s.H(), 0, setting, sigma};
                      row.push_back(format_double(sigma, 4));
                      row.push_back(format_double(rec.predicted_sigma(), 4));
                      m["sigma_hat"] = sigma;
                      m["decomposition"] = decomposition_json(*d, k, 0);
                      return CellResult{{row}, m};
                    });
              });
        });
  }
  else if (spec.name == "test2")
  {
    res.table.columns = {"setting", "k", "h", "H", "ℓ", "quantity", "measured", "predicted"};
    setting_cells(
        [&](const std::string &setting, double k)
        {
          for (int level : spec.levels)
          {
            cells.push_back(
                [=]()
                {
                  const auto s = make_setting(setting, k);
                  auto prefix = detail::grid_cells(setting, k, s);
                  prefix.push_back(std::to_string(level));
                  json meta{{"setting", setting}, {"k", k}, {"level", level}, {"dim", base.dim},
                            {"samples", spec.test2_samples},
                            {"global_trace", spec.test2_global_trace}, {"seed", base.seed}};
                  CellResult r = detail::guarded(
                      meta, prefix, 3, 2,
                      [&](json m, std::vector<std::string> pre)
                      {
                        const auto d = emshs::make_discretization(base.dim, s.fine_cells,
                                                                  s.coarse_cells,
                                                                  WavenumberField::constant(k),
                                                                  base.overlap_layers);
                        Test2Options o;
                        o.samples = spec.test2_samples;
                        o.include_global_trace = spec.test2_global_trace;
                        o.seed = base.seed;
                        ComplexVector uh;
                        if (o.include_global_trace)
                        {
                          uh = direct_solve(d->A, assemble_rhs(d->mesh, default_probe_source(d->mesh)));
                        }
                        const auto t2 = test2_deltas(*d, level, o, o.include_global_trace ? &uh : nullptr);
                        VerificationRecord rec{k, s.h(), s.H(), level, setting, 0.0, t2.delta1,
                                               t2.delta2};
                        auto r1 = pre, r2 = pre;
                        r1.insert(r1.end(), {"Δ1", format_double(t2.delta1, 6),
                                             format_double(rec.predicted_delta1(), 6)});
                        r2.insert(r2.end(), {"Δ2", format_double(t2.delta2, 6),
                                             format_double(rec.predicted_delta2(), 6)});
                        m["delta1"] = t2.delta1;
                        m["delta2"] = t2.delta2;
                        m["resonant_subdomains"] = t2.resonant_subdomains;
                        return CellResult{{r1, r2}, m};
                      });
                  if (r.metadata.contains("error"))
                  {
                    r.rows[0][5] = "Δ1";
                    r.rows[1][5] = "Δ2";
                  }
                  return r;
                });
          }
        });
  }
  else if (spec.name == "iters")
  {
    res.table.columns = {"setting", "k", "h", "H", "ℓ", "n0", "Iter"};
    setting_cells(
        [&](const std::string &setting, double k)
        {
          for (int level : spec.levels)
          {
            cells.push_back(
                [=]()
                {
                  const auto s = make_setting(setting, k);
                  auto prefix = detail::grid_cells(setting, k, s);
                  prefix.push_back(std::to_string(level));
                  RunConfig c = base;
                  c.setting = setting;
                  c.k = k;
                  c.level = level;
                  c.fine_cells.reset();
                  c.coarse_cells.reset();
                  c.velocity.clear();
                  c.omega.reset();
                  json meta{{"config", to_json(c)}};
                  return detail::guarded(
                      meta, prefix, 2, 1,
                      [&](json m, std::vector<std::string> row)
                      {
                        const ResolvedProblem p = resolve(c);
                        const auto d = make_discretization(c, p);
                        const PrecondStack stack = make_stack(c, d, &m);
                        const ComplexVector F = assemble_rhs(d->mesh, make_source_spec(c, d->mesh.h));
                        ComplexVector u;
                        const SolveReport rep = run_solver(c, stack, F, u);
                        const auto *cs = stack.coarse_space();
                        row.push_back(cs ? std::to_string(cs->n0) : "0");
                        row.push_back(rep.converged ? std::to_string(rep.iterations) : "/");
                        m["iterations"] = rep.iterations;
                        m["converged"] = rep.converged;
                        m["final_relative_residual"] = rep.final_relative_residual;
                        return CellResult{{row}, m};
                      });
                });
          }
        });
  }
  else if (spec.name == "hetero")
  {
    res.table.columns = {"ω",        "k",    "h",          "H",          "ℓ",
                         "EMs-HS Iter", "EMs-HS Tsol", "RAS-imp Iter", "RAS-imp Tsol"};
    VelocityRaster raster;
    if (spec.model)
    {
      raster = generate_inclusion_model(*spec.model);
      res.metadata["model"] = {{"cells", spec.model->cells},       {"count", spec.model->count},
                               {"background", spec.model->background},
                               {"inclusion", spec.model->inclusion},
                               {"min_size", spec.model->min_size}, {"max_size", spec.model->max_size},
                               {"seed", spec.model->seed}};
    }
    else
    {
      Require(!base.velocity.empty(), "hetero: give a velocity raster or an inclusion model");
      raster = read_velocity_raster(base.velocity);
    }
    Require(raster.dim == base.dim, "hetero: raster dimension does not match dim");
    Require(base.fine_cells && base.coarse_cells, "hetero: needs explicit fine and coarse cells");
    for (double omega : spec.omegas)
    {
      for (int level : spec.levels)
      {
        cells.push_back(
            [=]()
            {
              VelocityRaster r = raster;
              r.omega = omega;
              const std::uint64_t hash = raster_hash(r);
              const WavenumberField kf = WavenumberField::from_raster(r);
              const int nf = *base.fine_cells, nc = *base.coarse_cells;
              std::vector<std::string> prefix = {
                  format_double(omega),
                  format_double(kf.min_k(), 4) + " ~ " + format_double(kf.max_k(), 4),
                  inverse_label(nf), inverse_label(nc), std::to_string(level)};
              json meta{{"omega", omega}, {"level", level}, {"velocity_fnv1a", hex64(hash)},
                        {"fine_cells", nf}, {"coarse_cells", nc}};
              return detail::guarded(
                  meta, prefix, 4, 1,
                  [&](json m, std::vector<std::string> row)
                  {
                    const auto d = emshs::make_discretization(base.dim, nf, nc, kf,
                                                              base.overlap_layers);
                    const ComplexVector F = assemble_rhs(d->mesh, make_source_spec(base, d->mesh.h));
                    m["decomposition"] = decomposition_json(*d, kf.max_k(), level);
                    for (PrecondMode mode : {PrecondMode::Hybrid, PrecondMode::OneLevel})
                    {
                      RunConfig c = base;
                      c.precond = mode;
                      c.level = level;
                      json sub;
                      const PrecondStack stack = make_stack(c, d, &sub);
                      ComplexVector u;
                      const SolveReport rep = run_solver(c, stack, F, u);
                      row.push_back(rep.converged ? std::to_string(rep.iterations) : "/");
                      row.push_back(rep.converged ? format_double(rep.wall_time, 3) : "/");
                      sub["iterations"] = rep.iterations;
                      sub["converged"] = rep.converged;
                      sub["Tsol"] = rep.wall_time;
                      sub["message"] = rep.message;
                      m[to_string(mode)] = sub;
                    }
                    return CellResult{{row}, m};
                  });
            });
      }
    }
  }
  else
  {
    throw Error("unknown experiment '" + spec.name + "' (test1 | test2 | iters | hetero)");
  }

  const auto results = detail::run_cells(cells, spec.jobs);
  res.metadata["experiment"] = spec.name;
  res.metadata["design_choices"] = design_choices();
  res.metadata["base_config"] = to_json(spec.base);
  res.metadata["cells"] = json::array();
  for (const auto &r : results)
  {
    for (const auto &row : r.rows)
    {
      res.table.add_row(row);
    }
    res.failed_cells += r.metadata.contains("error") ? 1 : 0;
    res.metadata["cells"].push_back(r.metadata);
  }
  return res;
}

inline int cmd_experiment(const ExperimentSpec &spec, std::ostream &log)
{
  const ExperimentResult res = run_experiment(spec);
  ensure_directory(spec.base.output);
  const std::string stem = spec.base.output + "/" + spec.name;
  write_text(stem + ".csv", res.table.csv());
  write_text(stem + ".md", res.table.markdown());
  write_json(stem + ".meta.json", res.metadata);
  log << res.table.markdown();
  log << "wrote " << stem << ".{csv,md,meta.json}";
  if (res.failed_cells > 0)
  {
    log << " (" << res.failed_cells << " failed cells, see metadata)";
  }
  log << '\n';
  return exit_ok;
}

}  // namespace emshs::cli

#endif  // EMSHS_CLI_COMMANDS_HPP
