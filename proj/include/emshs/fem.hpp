// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_FEM_HPP
#define EMSHS_FEM_HPP

#include <array>
#include <cmath>
#include <algorithm>
#include <functional>
#include <numeric>
#include <optional>
#include <span>
#include <variant>
#include <vector>
#include "emshs/common.hpp"
#include "emshs/mesh.hpp"

namespace emshs
{

//
// Cellwise-constant velocity model on a uniform raster of the unit square/cube. Combined
// with an angular frequency omega it defines k(x) = omega / c(x).
//
struct VelocityRaster
{
  int dim = 2;
  std::array<int, 3> cells = {1, 1, 1};
  double omega = 1.0;
  std::vector<double> velocity;  // lexicographic, x fastest

  int num_cells() const { return cells[0] * cells[1] * (dim == 3 ? cells[2] : 1); }

  // Nearest-cell lookup.
  double at(const Point &x) const
  {
    int idx = 0;
    int stride = 1;
    for (int d = 0; d < dim; d++)
    {
      int c = static_cast<int>(std::floor(x[d] * cells[d]));
      c = std::clamp(c, 0, cells[d] - 1);
      idx += c * stride;
      stride *= cells[d];
    }
    return velocity[idx];
  }

  void validate() const
  {
    Require(dim == 2 || dim == 3, "velocity raster: dimension must be 2 or 3");
    for (int d = 0; d < dim; d++)
    {
      Require(cells[d] >= 1, "velocity raster: cell counts must be positive");
    }
    Require(omega > 0.0, "velocity raster: omega must be positive");
    Require(static_cast<int>(velocity.size()) == num_cells(),
            "velocity raster: expected " + std::to_string(num_cells()) + " velocities, got " +
                std::to_string(velocity.size()));
    for (std::size_t i = 0; i < velocity.size(); i++)
    {
      Require(velocity[i] > 0.0 && std::isfinite(velocity[i]),
              "velocity raster: nonpositive velocity in cell " + std::to_string(i));
    }
  }
};

class WavenumberField
{
public:
  WavenumberField() = default;

  // k = 0 is accepted as a test mode (pure stiffness operator).
  static WavenumberField constant(double k)
  {
    Require(k >= 0.0 && std::isfinite(k), "wavenumber must be finite and nonnegative");
    WavenumberField f;
    f.k_const_ = k;
    return f;
  }

  static WavenumberField from_raster(VelocityRaster raster)
  {
    raster.validate();
    WavenumberField f;
    f.raster_ = std::move(raster);
    return f;
  }

  bool is_constant() const { return !raster_.has_value(); }
  double k_const() const { return k_const_; }
  const std::optional<VelocityRaster> &raster() const { return raster_; }

  double at(const Point &x) const { return raster_ ? raster_->omega / raster_->at(x) : k_const_; }

  double max_k() const
  {
    if (!raster_)
    {
      return k_const_;
    }
    const double cmin = *std::min_element(raster_->velocity.begin(), raster_->velocity.end());
    return raster_->omega / cmin;
  }

  double min_k() const
  {
    if (!raster_)
    {
      return k_const_;
    }
    const double cmax = *std::max_element(raster_->velocity.begin(), raster_->velocity.end());
    return raster_->omega / cmax;
  }

private:
  double k_const_ = 1.0;
  std::optional<VelocityRaster> raster_;
};

// Wavenumber of each element, sampled at its centroid.
inline std::vector<double> element_wavenumbers(const FineMesh &mesh, const WavenumberField &k)
{
  std::vector<double> out(mesh.num_elements());
  for (int e = 0; e < mesh.num_elements(); e++)
  {
    out[e] = k.at(mesh.centroid(e));
  }
  return out;
}

struct ConstantSource
{
  Complex value = 0.0;
};

// amplitude * exp(-|x - center|^2 / (2 width^2))
struct GaussianSource
{
  Point center = {0.5, 0.5, 0.5};
  double width = 0.05;
  Complex amplitude = 1.0;
};

using SourceCallback = std::function<Complex(const Point &)>;
using SourceTerm = std::variant<ConstantSource, GaussianSource, SourceCallback>;

// f is the interior source, g the impedance boundary data.
struct SourceSpec
{
  SourceTerm f = ConstantSource{0.0};
  SourceTerm g = ConstantSource{0.0};
};

inline Complex evaluate(const SourceTerm &term, const Point &x, int dim)
{
  return std::visit(
      [&](const auto &s) -> Complex
      {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ConstantSource>)
        {
          return s.value;
        }
        else if constexpr (std::is_same_v<T, GaussianSource>)
        {
          Require(s.width > 0.0, "Gaussian source width must be positive");
          double r2 = 0.0;
          for (int d = 0; d < dim; d++)
          {
            r2 += (x[d] - s.center[d]) * (x[d] - s.center[d]);
          }
          return s.amplitude * std::exp(-r2 / (2.0 * s.width * s.width));
        }
        else
        {
          return s(x);
        }
      },
      term);
}

// Real symmetric building blocks of the Helmholtz operator:
//   A = stiffness - mass_k2 + i * boundary_k.
struct OperatorParts
{
  RealSparseMatrix stiffness;   // int grad u . grad v
  RealSparseMatrix mass_k2;     // int k^2 u v
  RealSparseMatrix mass;        // int u v
  RealSparseMatrix boundary_k;  // int_{boundary} k u v
  RealSparseMatrix boundary;    // int_{boundary} u v
};

namespace detail
{

// Gradients of the barycentric coordinates of a simplex (rows) and its volume.
inline double simplex_gradients(const FineMesh &mesh, int e, Eigen::Matrix<double, 4, 3> &grad)
{
  const int d = mesh.dim;
  const auto &el = mesh.elements[e];
  Eigen::Matrix3d J = Eigen::Matrix3d::Identity();
  for (int a = 0; a < d; a++)
  {
    for (int c = 0; c < d; c++)
    {
      J(c, a) = mesh.nodes[el[a + 1]][c] - mesh.nodes[el[0]][c];
    }
  }
  const double det = J.topLeftCorner(d, d).determinant();
  const double vol = std::abs(det) / (d == 2 ? 2.0 : 6.0);
  Require(vol > 1e-14 * std::pow(mesh.h, d),
          "degenerate element " + std::to_string(e) + " (zero volume)");
  // Row a of J^{-1} is the gradient of barycentric coordinate a + 1.
  grad.setZero();
  const Eigen::MatrixXd Jinv = J.topLeftCorner(d, d).inverse();
  for (int a = 0; a < d; a++)
  {
    for (int c = 0; c < d; c++)
    {
      grad(a + 1, c) = Jinv(a, c);
      grad(0, c) -= Jinv(a, c);
    }
  }
  return vol;
}

inline double facet_measure(const FineMesh &mesh, const BoundaryFacet &f)
{
  const Point &p0 = mesh.nodes[f.nodes[0]];
  const Point &p1 = mesh.nodes[f.nodes[1]];
  if (mesh.dim == 2)
  {
    return std::hypot(p1[0] - p0[0], p1[1] - p0[1]);
  }
  const Point &p2 = mesh.nodes[f.nodes[2]];
  const Eigen::Vector3d a(p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]);
  const Eigen::Vector3d b(p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]);
  return 0.5 * a.cross(b).norm();
}

// Assembles the real parts over an element subset. `local(g)` maps a global node to a
// local index in [0, n); facets are integrated with the wavenumber of their element.
template <typename NodeMap>
OperatorParts assemble_parts(const FineMesh &mesh, const WavenumberField &kfield,
                             std::span<const int> elements,
                             std::span<const BoundaryFacet> facets, int n, NodeMap &&local)
{
  using Triplet = Eigen::Triplet<double, int>;
  const int nv = mesh.vertices_per_element();
  std::vector<Triplet> ts, tm, tm2;
  ts.reserve(elements.size() * nv * nv);
  tm.reserve(elements.size() * nv * nv);
  tm2.reserve(elements.size() * nv * nv);
  Eigen::Matrix<double, 4, 3> grad;
  const double mass_scale = 1.0 / ((nv) * (nv + 1));
  for (int e : elements)
  {
    const double vol = simplex_gradients(mesh, e, grad);
    const double k = kfield.at(mesh.centroid(e));
    std::array<int, 4> li = {0, 0, 0, 0};
    for (int a = 0; a < nv; a++)
    {
      li[a] = local(mesh.elements[e][a]);
    }
    for (int a = 0; a < nv; a++)
    {
      for (int b = 0; b < nv; b++)
      {
        const double s = vol * grad.row(a).dot(grad.row(b));
        const double m = vol * mass_scale * (a == b ? 2.0 : 1.0);
        ts.emplace_back(li[a], li[b], s);
        tm.emplace_back(li[a], li[b], m);
        tm2.emplace_back(li[a], li[b], k * k * m);
      }
    }
  }
  std::vector<Triplet> tb, tbk;
  const int fv = mesh.dim;
  const double fscale = 1.0 / (fv * (fv + 1));
  for (const auto &f : facets)
  {
    const double meas = facet_measure(mesh, f);
    const double k = kfield.at(mesh.centroid(f.element));
    for (int a = 0; a < fv; a++)
    {
      for (int b = 0; b < fv; b++)
      {
        const double m = meas * fscale * (a == b ? 2.0 : 1.0);
        tb.emplace_back(local(f.nodes[a]), local(f.nodes[b]), m);
        tbk.emplace_back(local(f.nodes[a]), local(f.nodes[b]), k * m);
      }
    }
  }
  OperatorParts parts;
  auto build = [n](RealSparseMatrix &M, const std::vector<Triplet> &t)
  {
    M.resize(n, n);
    M.setFromTriplets(t.begin(), t.end());
  };
  build(parts.stiffness, ts);
  build(parts.mass, tm);
  build(parts.mass_k2, tm2);
  build(parts.boundary, tb);
  build(parts.boundary_k, tbk);
  return parts;
}

inline std::vector<int> all_elements(const FineMesh &mesh)
{
  std::vector<int> e(mesh.num_elements());
  std::iota(e.begin(), e.end(), 0);
  return e;
}

}  // namespace detail

inline ComplexSparseMatrix combine_helmholtz(const OperatorParts &parts, double adjoint_sign = 1.0)
{
  const Complex i(0.0, adjoint_sign);
  ComplexSparseMatrix A = parts.stiffness.cast<Complex>() - parts.mass_k2.cast<Complex>() +
                          i * parts.boundary_k.cast<Complex>();
  A.makeCompressed();
  return A;
}

inline OperatorParts assemble_global_parts(const FineMesh &mesh, const WavenumberField &kfield)
{
  const auto elements = detail::all_elements(mesh);
  return detail::assemble_parts(mesh, kfield, elements, mesh.boundary_facets, mesh.num_nodes(),
                                [](int g) { return g; });
}

// Matrix of a(., .) with A(j, k) = a(phi_k, phi_j), so (A u)_j = a(u, phi_j).
inline ComplexSparseMatrix assemble_global(const FineMesh &mesh, const WavenumberField &kfield)
{
  return combine_helmholtz(assemble_global_parts(mesh, kfield));
}

//
// Matrix of the adjoint form a*(w, v) = conj(a(v, w)), assembled from its own element
// integrals: a*(u, v) = int grad u . grad conj(v) - k^2 int u conj(v) - i k int u conj(v).
//
inline ComplexSparseMatrix assemble_adjoint(const FineMesh &mesh, const WavenumberField &kfield)
{
  return combine_helmholtz(assemble_global_parts(mesh, kfield), -1.0);
}

// Nodal load vector F_j = int f phi_j + int_{dOmega} g phi_j using order-2 rules.
inline ComplexVector assemble_rhs(const FineMesh &mesh, const SourceSpec &source)
{
  const int d = mesh.dim;
  const int nv = d + 1;
  ComplexVector F = ComplexVector::Zero(mesh.num_nodes());

  // Interior rule: barycentric points and equal weights.
  std::vector<std::array<double, 4>> qp;
  if (d == 2)
  {
    qp = {{2.0 / 3, 1.0 / 6, 1.0 / 6, 0}, {1.0 / 6, 2.0 / 3, 1.0 / 6, 0},
          {1.0 / 6, 1.0 / 6, 2.0 / 3, 0}};
  }
  else
  {
    const double a = 0.5854101966249685, b = 0.1381966011250105;
    qp = {{a, b, b, b}, {b, a, b, b}, {b, b, a, b}, {b, b, b, a}};
  }
  const bool f_zero = std::holds_alternative<ConstantSource>(source.f) &&
                      std::get<ConstantSource>(source.f).value == Complex(0.0);
  if (!f_zero)
  {
    for (int e = 0; e < mesh.num_elements(); e++)
    {
      const double vol = mesh.element_volume(e);
      const auto &el = mesh.elements[e];
      for (const auto &q : qp)
      {
        Point x = {0, 0, 0};
        for (int a = 0; a < nv; a++)
        {
          for (int c = 0; c < d; c++)
          {
            x[c] += q[a] * mesh.nodes[el[a]][c];
          }
        }
        const Complex fx = evaluate(source.f, x, d) * (vol / qp.size());
        for (int a = 0; a < nv; a++)
        {
          F[el[a]] += fx * q[a];
        }
      }
    }
  }

  std::vector<std::array<double, 3>> fq;
  if (d == 2)
  {
    const double g = 0.5 / std::sqrt(3.0);
    fq = {{0.5 + g, 0.5 - g, 0}, {0.5 - g, 0.5 + g, 0}};
  }
  else
  {
    fq = {{2.0 / 3, 1.0 / 6, 1.0 / 6}, {1.0 / 6, 2.0 / 3, 1.0 / 6}, {1.0 / 6, 1.0 / 6, 2.0 / 3}};
  }
  const bool g_zero = std::holds_alternative<ConstantSource>(source.g) &&
                      std::get<ConstantSource>(source.g).value == Complex(0.0);
  if (!g_zero)
  {
    for (const auto &f : mesh.boundary_facets)
    {
      const double meas = detail::facet_measure(mesh, f);
      for (const auto &q : fq)
      {
        Point x = {0, 0, 0};
        for (int a = 0; a < d; a++)
        {
          for (int c = 0; c < d; c++)
          {
            x[c] += q[a] * mesh.nodes[f.nodes[a]][c];
          }
        }
        const Complex gx = evaluate(source.g, x, d) * (meas / fq.size());
        for (int a = 0; a < d; a++)
        {
          F[f.nodes[a]] += gx * q[a];
        }
      }
    }
  }
  return F;
}

inline OperatorParts assemble_local_parts(const Subdomain &sub, const FineMesh &mesh,
                                          const WavenumberField &kfield)
{
  return detail::assemble_parts(mesh, kfield, sub.elements, sub.boundary_facets, sub.num_nodes(),
                                [&sub](int g) { return sub.local_index(g); });
}

// A_i: local Helmholtz operator on V_{h,i} with the impedance term over all of the
// subdomain boundary (including parts on the domain boundary).
inline ComplexSparseMatrix assemble_local_impedance(const Subdomain &sub, const FineMesh &mesh,
                                                    const WavenumberField &kfield)
{
  return combine_helmholtz(assemble_local_parts(sub, mesh, kfield));
}

//
// Blocks of the local Dirichlet problem (Delta + k^2) v = f in Omega_i, v given on the
// boundary. With K = S_i - M_{k,i}:
//   interior_operator = -K[I, I],  coupling = -K[I, B],
// so the homogeneous problem reads interior_operator * v_I = -coupling * v_B.
//
struct LocalDirichletOperators
{
  RealSparseMatrix interior_operator;
  RealSparseMatrix coupling;
  std::vector<int> interior;  // local node indices, ascending
  std::vector<int> boundary;  // local node indices, ascending
  RealVector unit_load;       // P1 load of f = 1 on interior nodes
};

inline LocalDirichletOperators local_dirichlet_from_parts(const Subdomain &sub,
                                                          const OperatorParts &parts)
{
  Require(!sub.interior_nodes.empty(),
          "subdomain " + std::to_string(sub.id) + " has no interior nodes (too thin)");
  LocalDirichletOperators ops;
  ops.interior = sub.interior_nodes;
  ops.boundary = sub.boundary_nodes;
  const int n = sub.num_nodes();
  std::vector<int> pos(n, -1);
  std::vector<int> bpos(n, -1);
  for (std::size_t i = 0; i < ops.interior.size(); i++)
  {
    pos[ops.interior[i]] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < ops.boundary.size(); i++)
  {
    bpos[ops.boundary[i]] = static_cast<int>(i);
  }
  const RealSparseMatrix K = parts.stiffness - parts.mass_k2;
  using Triplet = Eigen::Triplet<double, int>;
  std::vector<Triplet> ti, tc;
  for (int r = 0; r < n; r++)
  {
    if (pos[r] < 0)
    {
      continue;
    }
    for (RealSparseMatrix::InnerIterator it(K, r); it; ++it)
    {
      if (pos[it.col()] >= 0)
      {
        ti.emplace_back(pos[r], pos[it.col()], -it.value());
      }
      else
      {
        tc.emplace_back(pos[r], bpos[it.col()], -it.value());
      }
    }
  }
  const int ni = static_cast<int>(ops.interior.size());
  const int nb = static_cast<int>(ops.boundary.size());
  ops.interior_operator.resize(ni, ni);
  ops.interior_operator.setFromTriplets(ti.begin(), ti.end());
  ops.coupling.resize(ni, nb);
  ops.coupling.setFromTriplets(tc.begin(), tc.end());
  const RealVector ones = RealVector::Ones(n);
  const RealVector load = parts.mass * ones;
  ops.unit_load.resize(ni);
  for (int i = 0; i < ni; i++)
  {
    ops.unit_load[i] = load[ops.interior[i]];
  }
  return ops;
}

inline LocalDirichletOperators assemble_local_dirichlet(const Subdomain &sub,
                                                        const FineMesh &mesh,
                                                        const WavenumberField &kfield)
{
  return local_dirichlet_from_parts(sub, assemble_local_parts(sub, mesh, kfield));
}

// Gram matrix of the k-weighted norm ||v||_V^2 = ||grad v||^2 + ||k v||^2.
inline RealSparseMatrix vnorm_gram(const OperatorParts &parts)
{
  RealSparseMatrix G = parts.stiffness + parts.mass_k2;
  G.makeCompressed();
  return G;
}

inline RealSparseMatrix vnorm_gram(const FineMesh &mesh, const WavenumberField &kfield)
{
  return vnorm_gram(assemble_global_parts(mesh, kfield));
}

// y = M x for a real matrix and a complex vector.
template <typename RealMatrix>
ComplexVector apply_real(const RealMatrix &M, const ComplexVector &x)
{
  const RealVector re = M * x.real();
  const RealVector im = M * x.imag();
  ComplexVector y(re.size());
  y.real() = re;
  y.imag() = im;
  return y;
}

inline double vnorm(const RealSparseMatrix &gram, const ComplexVector &v)
{
  const ComplexVector Gv = apply_real(gram, v);
  return std::sqrt(std::max(0.0, v.dot(Gv).real()));
}

}  // namespace emshs

#endif  // EMSHS_FEM_HPP
