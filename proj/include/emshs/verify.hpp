// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_VERIFY_HPP
#define EMSHS_VERIFY_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>
#include "emshs/coarse.hpp"
#include "emshs/common.hpp"
#include "emshs/fem.hpp"
#include "emshs/linalg.hpp"
#include "emshs/precond.hpp"

namespace emshs
{

struct SettingPreset
{
  std::string name;  // "A" or "B"
  double k = 0.0;
  int fine_cells = 0;    // 1/h
  int coarse_cells = 0;  // 1/H
  double h() const { return 1.0 / fine_cells; }
  double H() const { return 1.0 / coarse_cells; }
};

// Setting A: h ~ k^{-3/2}, H = 1/k, tabulated grids. Setting B: h = 1/(3k), H = 2/k.
inline const std::map<int, int> &setting_a_table()
{
  static const std::map<int, int> table = {{10, 40},   {20, 100},   {40, 280},
                                           {80, 720},  {160, 2080}, {320, 5760}};
  return table;
}

inline SettingPreset make_setting(const std::string &name, double k)
{
  SettingPreset s;
  s.name = name;
  s.k = k;
  if (name == "A")
  {
    const auto &table = setting_a_table();
    const int ki = static_cast<int>(std::lround(k));
    auto it = table.find(ki);
    if (it == table.end() || std::abs(k - ki) > 1e-12)
    {
      std::string list;
      for (const auto &[kk, n] : table)
      {
        list += (list.empty() ? "" : ", ") + std::to_string(kk);
      }
      throw Error("setting A is tabulated only for k in {" + list + "}, got k = " +
                  std::to_string(k));
    }
    s.fine_cells = it->second;
    s.coarse_cells = ki;
    return s;
  }
  if (name == "B")
  {
    const double fine = 3.0 * k, coarse = k / 2.0;
    Require(k > 0.0 && std::abs(fine - std::round(fine)) < 1e-9 &&
                std::abs(coarse - std::round(coarse)) < 1e-9,
            "setting B needs 3k and k/2 to be integers (h = 1/(3k), H = 2/k), got k = " +
                std::to_string(k));
    s.fine_cells = static_cast<int>(std::lround(fine));
    s.coarse_cells = static_cast<int>(std::lround(coarse));
    return s;
  }
  throw Error("unknown setting '" + name + "' (A | B)");
}

struct VerificationRecord
{
  double k = 0.0, h = 0.0, H = 0.0;
  int level = 0;
  std::string setting;
  double sigma_hat = 0.0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  double predicted_sigma() const { return 1.0 / std::sqrt(h * k); }
  double predicted_delta1() const { return std::pow(2.0, -level / 2.0) * H; }
  double predicted_delta2() const { return std::pow(2.0, -level / 2.0) * H / h; }
};

// Default Test 1 probe: u_h for a centred Gaussian source of width 2h and g = 0.
inline SourceSpec default_probe_source(const FineMesh &mesh)
{
  SourceSpec src;
  src.f = GaussianSource{{0.5, 0.5, mesh.dim == 3 ? 0.5 : 0.0}, 2.0 * mesh.h, 1.0};
  src.g = ConstantSource{0.0};
  return src;
}

inline ComplexVector direct_solve(const ComplexSparseMatrix &A, const ComplexVector &F)
{
  ComplexDirectSolver solver(A, ComplexDirectSolver::Backend::Sparse);
  return solver.solve(F);
}

namespace detail
{

// Elements of the enlarged domain: every element with a vertex in I_i.
inline std::vector<int> enlarged_elements(const FineMesh &mesh, const Subdomain &sub)
{
  CellBox big;
  for (int d = 0; d < mesh.dim; d++)
  {
    big.lo[d] = std::max(0, sub.box.lo[d] - 1);
    big.hi[d] = std::min(mesh.cells_per_axis - 1, sub.box.hi[d] + 1);
  }
  std::vector<int> out;
  for (int e : box_elements(mesh, big))
  {
    for (int a = 0; a <= mesh.dim; a++)
    {
      if (sub.local_index(mesh.elements[e][a]) >= 0)
      {
        out.push_back(e);
        break;
      }
    }
  }
  return out;
}

// V-norm of a global vector over an element subset.
inline double vnorm_on_elements(const FineMesh &mesh, const WavenumberField &kfield,
                                const std::vector<int> &elements, const ComplexVector &v)
{
  std::vector<int> nodes;
  for (int e : elements)
  {
    for (int a = 0; a <= mesh.dim; a++)
    {
      nodes.push_back(mesh.elements[e][a]);
    }
  }
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  auto local = [&](int g)
  { return static_cast<int>(std::lower_bound(nodes.begin(), nodes.end(), g) - nodes.begin()); };
  const auto parts = assemble_parts(mesh, kfield, elements, std::span<const BoundaryFacet>(),
                                    static_cast<int>(nodes.size()), local);
  ComplexVector vl(nodes.size());
  for (std::size_t l = 0; l < nodes.size(); l++)
  {
    vl[l] = v[nodes[l]];
  }
  return vnorm(vnorm_gram(parts), vl);
}

}  // namespace detail

//
// sigma_hat = max_i ||Q_i v - v|_{Omega_i}||_{V(Omega_i)} / ||v||_{V(enlarged Omega_i)} with
// Q_i v = A_i^{-1} R_i (A v). `local_solve(i, w)` applies A_i^{-1}.
//
inline double test1_sigma(const Discretization &d, const ComplexVector &probe,
                          const std::function<ComplexVector(int, const ComplexVector &)> &local_solve)
{
  Require(probe.size() == d.mesh.num_nodes() && probe.norm() > 0.0,
          "test1_sigma: probe must be a nonzero fine-node vector");
  const ComplexVector Av = d.A * probe;
  double sigma = 0.0;
  for (const auto &s : d.subdomains)
  {
    const ComplexVector vi = restrict_to(s, probe);
    const ComplexVector diff = local_solve(s.id, restrict_to(s, Av)) - vi;
    const auto parts = assemble_local_parts(s, d.mesh, d.kfield);
    const double num = vnorm(vnorm_gram(parts), diff);
    const double den =
        detail::vnorm_on_elements(d.mesh, d.kfield, detail::enlarged_elements(d.mesh, s), probe);
    Require(den > 0.0, "test1_sigma: probe vanishes on the enlarged subdomain " +
                           std::to_string(s.id));
    sigma = std::max(sigma, num / den);
  }
  return sigma;
}

inline double test1_sigma(const PrecondStack &stack, const ComplexVector &probe)
{
  return test1_sigma(stack.discretization(), probe,
                     [&](int i, const ComplexVector &w) { return stack.local_solve(i, w); });
}

// Memory-light variant: factorizes each A_i on the fly.
inline double test1_sigma(const Discretization &d, const ComplexVector &probe)
{
  return test1_sigma(d, probe,
                     [&](int i, const ComplexVector &w)
                     {
                       const ComplexDirectSolver s(
                           assemble_local_impedance(d.subdomains[i], d.mesh, d.kfield),
                           ComplexDirectSolver::Backend::Sparse);
                       return s.solve(w);
                     });
}

struct Test2Options
{
  int samples = 20;            // traces per subdomain, including the u_h trace if used
  bool include_global_trace = true;
  int max_mode = 4;            // Fourier modes per axis in the random traces
  std::uint64_t seed = 2024;
};

struct Test2Result
{
  double delta1 = 0.0;
  double delta2 = 0.0;
  int resonant_subdomains = 0;
  int argmax_delta1 = -1;  // sample index attaining delta1 (global trace = samples - 1)
  int argmax_delta2 = -1;
};

namespace detail
{

// Smooth random function of the box-normalized coordinates, identical for every subdomain
// so that results are invariant under a uniform rescaling of the decomposition.
struct RandomTrace
{
  std::vector<std::array<int, 3>> modes;
  std::vector<double> amplitude, phase;

  RandomTrace(int dim, int max_mode, std::uint64_t seed, int sample)
  {
    std::mt19937_64 rng(seed + 0x9e3779b97f4a7c15ULL * (sample + 1));
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    const int mz = dim == 3 ? max_mode : 0;
    for (int r = 0; r <= mz; r++)
    {
      for (int q = 0; q <= max_mode; q++)
      {
        for (int p = 0; p <= max_mode; p++)
        {
          modes.push_back({p, q, r});
          amplitude.push_back(uni(rng) / (1.0 + p * p + q * q + r * r));
          phase.push_back(M_PI * uni(rng));
        }
      }
    }
  }

  double operator()(const std::array<double, 3> &xi) const
  {
    double v = 0.0;
    for (std::size_t m = 0; m < modes.size(); m++)
    {
      v += amplitude[m] * std::cos(M_PI * (modes[m][0] * xi[0] + modes[m][1] * xi[1] +
                                           modes[m][2] * xi[2]) +
                                   phase[m]);
    }
    return v;
  }
};

// ||chi grad e||_{L2}^2 over the subdomain, chi and e P1 on the local nodes.
inline double weighted_gradient_norm2(const FineMesh &mesh, const Subdomain &sub,
                                      const RealVector &chi, const ComplexVector &e)
{
  double sum = 0.0;
  Eigen::Matrix<double, 4, 3> grad;
  const int nv = mesh.dim + 1;
  for (int el : sub.elements)
  {
    const double vol = simplex_gradients(mesh, el, grad);
    Eigen::RowVector3cd ge = Eigen::RowVector3cd::Zero();
    double chi2 = 0.0;  // int_T chi^2 with the P1 mass matrix
    std::array<double, 4> c = {0, 0, 0, 0};
    for (int a = 0; a < nv; a++)
    {
      const int l = sub.local_index(mesh.elements[el][a]);
      ge += e[l] * grad.row(a).cast<Complex>();
      c[a] = chi[l];
    }
    for (int a = 0; a < nv; a++)
    {
      for (int b = 0; b < nv; b++)
      {
        chi2 += c[a] * c[b] * (a == b ? 2.0 : 1.0);
      }
    }
    chi2 *= vol / (nv * (nv + 1));
    sum += ge.squaredNorm() * chi2;
  }
  return sum;
}

}  // namespace detail

//
// Delta1 = max ||e_i||_{L2} / ||v||_{H1} and Delta2 = max ||chi_i grad e_i|| / ||v||_{H1} over
// subdomains and samples, where v is the Helmholtz-harmonic extension of a sample trace and
// e_i the extension of (trace - L2 edge projection of the trace).
//
inline Test2Result test2_deltas(const Discretization &d, int level, const Test2Options &opt,
                                const ComplexVector *global_trace = nullptr)
{
  Test2Result res;
  const int n_random = opt.samples - (opt.include_global_trace && global_trace ? 1 : 0);
  std::vector<detail::RandomTrace> traces;
  for (int s = 0; s < n_random; s++)
  {
    traces.emplace_back(d.mesh.dim, opt.max_mode, opt.seed, s);
  }
  for (const auto &sub : d.subdomains)
  {
    const auto parts = assemble_local_parts(sub, d.mesh, d.kfield);
    const LocalDirichletSolver solver(sub, parts);
    res.resonant_subdomains += solver.resonance_flag() ? 1 : 0;
    const EdgeSpace es = build_edge_space(sub, d.mesh, level);
    RealSparseMatrix H1 = parts.stiffness + parts.mass;
    const int nb = static_cast<int>(sub.boundary_nodes.size());
    std::array<int, 3> extent = {1, 1, 1};
    for (int a = 0; a < d.mesh.dim; a++)
    {
      extent[a] = sub.box.hi[a] - sub.box.lo[a] + 1;
    }
    auto evaluate_sample = [&](int sample, const ComplexVector &trace)
    {
      const ComplexVector v = solver.extend(trace);
      const ComplexVector c = l2_edge_projection(es, trace);
      const ComplexVector e = solver.extend(trace - es.traces.cast<Complex>() * c);
      const double vn = vnorm(H1, v);
      if (vn <= 0.0)
      {
        return;
      }
      const double d1 = vnorm(parts.mass, e) / vn;
      const double d2 =
          std::sqrt(detail::weighted_gradient_norm2(d.mesh, sub, d.pou.chi[sub.id], e)) / vn;
      if (d1 > res.delta1)
      {
        res.delta1 = d1;
        res.argmax_delta1 = sample;
      }
      if (d2 > res.delta2)
      {
        res.delta2 = d2;
        res.argmax_delta2 = sample;
      }
    };
    for (int s = 0; s < n_random; s++)
    {
      ComplexVector trace(nb);
      for (int b = 0; b < nb; b++)
      {
        const auto g = d.mesh.node_coords(sub.nodes[sub.boundary_nodes[b]]);
        std::array<double, 3> xi = {0, 0, 0};
        for (int a = 0; a < d.mesh.dim; a++)
        {
          xi[a] = double(g[a] - sub.box.lo[a]) / extent[a];
        }
        trace[b] = traces[s](xi);
      }
      evaluate_sample(s, trace);
    }
    if (opt.include_global_trace && global_trace)
    {
      evaluate_sample(n_random, boundary_values_of(sub, restrict_to(sub, *global_trace)));
    }
  }
  return res;
}

}  // namespace emshs

#endif  // EMSHS_VERIFY_HPP
