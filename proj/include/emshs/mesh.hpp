// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_MESH_HPP
#define EMSHS_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>
#include "emshs/common.hpp"

namespace emshs
{

using Point = std::array<double, 3>;

// Inclusive range of structured cells per axis. Unused axes stay at [0, 0].
struct CellBox
{
  std::array<int, 3> lo = {0, 0, 0};
  std::array<int, 3> hi = {0, 0, 0};

  bool operator==(const CellBox &) const = default;
};

// A (d-1)-simplex on the boundary of a box-shaped element set. Node entries are global
// node indices; only the first `dim` entries are used.
struct BoundaryFacet
{
  std::array<int, 3> nodes = {0, 0, 0};
  int element = 0;  // the element this facet belongs to
  int axis = 0;     // outward normal is (side ? +1 : -1) * e_axis
  int side = 0;
  Point normal = {0.0, 0.0, 0.0};
};

//
// Structured simplicial mesh of the unit square/cube. Each lattice cell is split along its
// main diagonal (Kuhn split): 2 triangles in 2-d, 6 tetrahedra in 3-d. Nodes and cells are
// ordered lexicographically with x fastest; the simplices of one cell are contiguous.
//
struct FineMesh
{
  int dim = 2;
  int cells_per_axis = 0;
  double h = 0.0;
  std::vector<Point> nodes;
  std::vector<std::array<int, 4>> elements;
  std::vector<BoundaryFacet> boundary_facets;

  int num_nodes() const { return static_cast<int>(nodes.size()); }
  int num_elements() const { return static_cast<int>(elements.size()); }
  int vertices_per_element() const { return dim + 1; }
  int elements_per_cell() const { return dim == 2 ? 2 : 6; }
  int nodes_per_axis() const { return cells_per_axis + 1; }

  int cell_of_element(int e) const { return e / elements_per_cell(); }

  std::array<int, 3> cell_coords(int cell) const
  {
    const int n = cells_per_axis;
    std::array<int, 3> c = {cell % n, (cell / n) % n, 0};
    if (dim == 3)
    {
      c[2] = cell / (n * n);
    }
    return c;
  }

  int node_index(const std::array<int, 3> &ijk) const
  {
    const int m = nodes_per_axis();
    return ijk[0] + m * (ijk[1] + (dim == 3 ? m * ijk[2] : 0));
  }

  std::array<int, 3> node_coords(int node) const
  {
    const int m = nodes_per_axis();
    std::array<int, 3> c = {node % m, (node / m) % m, 0};
    if (dim == 3)
    {
      c[2] = node / (m * m);
    }
    return c;
  }

  // Signed volume of element e (positive or negative depending on vertex orientation).
  double signed_volume(int e) const
  {
    const auto &el = elements[e];
    const Point &p0 = nodes[el[0]];
    if (dim == 2)
    {
      const Point &p1 = nodes[el[1]], &p2 = nodes[el[2]];
      return 0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]));
    }
    const Point &p1 = nodes[el[1]], &p2 = nodes[el[2]], &p3 = nodes[el[3]];
    const double a[3] = {p1[0] - p0[0], p1[1] - p0[1], p1[2] - p0[2]};
    const double b[3] = {p2[0] - p0[0], p2[1] - p0[1], p2[2] - p0[2]};
    const double c[3] = {p3[0] - p0[0], p3[1] - p0[1], p3[2] - p0[2]};
    return (a[0] * (b[1] * c[2] - b[2] * c[1]) - a[1] * (b[0] * c[2] - b[2] * c[0]) +
            a[2] * (b[0] * c[1] - b[1] * c[0])) /
           6.0;
  }

  double element_volume(int e) const { return std::abs(signed_volume(e)); }

  double element_diameter(int e) const
  {
    double diam = 0.0;
    const auto &el = elements[e];
    for (int a = 0; a <= dim; a++)
    {
      for (int b = a + 1; b <= dim; b++)
      {
        double d2 = 0.0;
        for (int c = 0; c < dim; c++)
        {
          const double d = nodes[el[a]][c] - nodes[el[b]][c];
          d2 += d * d;
        }
        diam = std::max(diam, std::sqrt(d2));
      }
    }
    return diam;
  }

  Point centroid(int e) const
  {
    Point c = {0.0, 0.0, 0.0};
    for (int a = 0; a <= dim; a++)
    {
      for (int d = 0; d < dim; d++)
      {
        c[d] += nodes[elements[e][a]][d];
      }
    }
    for (int d = 0; d < dim; d++)
    {
      c[d] /= (dim + 1);
    }
    return c;
  }

  CellBox full_box() const
  {
    CellBox box;
    for (int d = 0; d < dim; d++)
    {
      box.hi[d] = cells_per_axis - 1;
    }
    return box;
  }
};

namespace detail
{

// Elements of all cells inside a box, ascending.
inline std::vector<int> box_elements(const FineMesh &mesh, const CellBox &box)
{
  std::vector<int> out;
  const int n = mesh.cells_per_axis;
  const int per_cell = mesh.elements_per_cell();
  const int kmax = mesh.dim == 3 ? box.hi[2] : 0;
  const int kmin = mesh.dim == 3 ? box.lo[2] : 0;
  for (int k = kmin; k <= kmax; k++)
  {
    for (int j = box.lo[1]; j <= box.hi[1]; j++)
    {
      for (int i = box.lo[0]; i <= box.hi[0]; i++)
      {
        const int cell = i + n * (j + n * k);
        for (int t = 0; t < per_cell; t++)
        {
          out.push_back(cell * per_cell + t);
        }
      }
    }
  }
  return out;
}

// Nodes of a box, ascending (equivalently: box-lexicographic with x fastest).
inline std::vector<int> box_nodes(const FineMesh &mesh, const CellBox &box)
{
  std::vector<int> out;
  const int kmin = mesh.dim == 3 ? box.lo[2] : 0;
  const int kmax = mesh.dim == 3 ? box.hi[2] + 1 : 0;
  for (int k = kmin; k <= kmax; k++)
  {
    for (int j = box.lo[1]; j <= box.hi[1] + 1; j++)
    {
      for (int i = box.lo[0]; i <= box.hi[0] + 1; i++)
      {
        out.push_back(mesh.node_index({i, j, k}));
      }
    }
  }
  return out;
}

// Facets of the given elements that lie in one of the faces of the box. For a box of
// structured cells these are exactly the facets on the boundary of the element union.
inline std::vector<BoundaryFacet> box_boundary_facets(const FineMesh &mesh,
                                                      std::span<const int> elements,
                                                      const CellBox &box)
{
  std::vector<BoundaryFacet> facets;
  const int nv = mesh.vertices_per_element();
  for (int e : elements)
  {
    const auto &el = mesh.elements[e];
    for (int skip = 0; skip < nv; skip++)
    {
      std::array<int, 3> fn = {0, 0, 0};
      int m = 0;
      for (int a = 0; a < nv; a++)
      {
        if (a != skip)
        {
          fn[m++] = el[a];
        }
      }
      for (int axis = 0; axis < mesh.dim; axis++)
      {
        for (int side = 0; side < 2; side++)
        {
          const int plane = side ? box.hi[axis] + 1 : box.lo[axis];
          bool in_plane = true;
          for (int a = 0; a < mesh.dim; a++)
          {
            in_plane = in_plane && mesh.node_coords(fn[a])[axis] == plane;
          }
          if (in_plane)
          {
            BoundaryFacet f;
            f.nodes = fn;
            f.element = e;
            f.axis = axis;
            f.side = side;
            f.normal[axis] = side ? 1.0 : -1.0;
            facets.push_back(f);
          }
        }
      }
    }
  }
  return facets;
}

}  // namespace detail

inline FineMesh build_fine_mesh(int dim, int cells_per_axis)
{
  Require(dim == 2 || dim == 3, "build_fine_mesh: dimension must be 2 or 3, got " +
                                    std::to_string(dim));
  Require(cells_per_axis >= 1, "build_fine_mesh: cells_per_axis must be positive");
  FineMesh mesh;
  mesh.dim = dim;
  mesh.cells_per_axis = cells_per_axis;
  mesh.h = 1.0 / cells_per_axis;
  const int n = cells_per_axis;
  const int m = n + 1;
  const int nz = dim == 3 ? m : 1;
  mesh.nodes.reserve(static_cast<std::size_t>(m) * m * nz);
  for (int k = 0; k < nz; k++)
  {
    for (int j = 0; j < m; j++)
    {
      for (int i = 0; i < m; i++)
      {
        mesh.nodes.push_back({i * mesh.h, j * mesh.h, dim == 3 ? k * mesh.h : 0.0});
      }
    }
  }

  // Kuhn split: one simplex per axis permutation, walking from the cell origin to the
  // opposite corner one unit step at a time.
  std::vector<std::array<int, 3>> perms;
  if (dim == 2)
  {
    perms = {{0, 1, 2}, {1, 0, 2}};
  }
  else
  {
    std::array<int, 3> p = {0, 1, 2};
    do
    {
      perms.push_back(p);
    } while (std::next_permutation(p.begin(), p.end()));
  }
  const int ncz = dim == 3 ? n : 1;
  mesh.elements.reserve(static_cast<std::size_t>(n) * n * ncz * perms.size());
  for (int k = 0; k < ncz; k++)
  {
    for (int j = 0; j < n; j++)
    {
      for (int i = 0; i < n; i++)
      {
        for (const auto &p : perms)
        {
          std::array<int, 4> el = {0, 0, 0, 0};
          std::array<int, 3> c = {i, j, k};
          el[0] = mesh.node_index(c);
          for (int s = 0; s < dim; s++)
          {
            c[p[s]] += 1;
            el[s + 1] = mesh.node_index(c);
          }
          mesh.elements.push_back(el);
        }
      }
    }
  }

  // Only cells adjacent to the boundary can own boundary facets.
  std::vector<int> candidates;
  const int per_cell = mesh.elements_per_cell();
  for (int cell = 0; cell < n * n * ncz; cell++)
  {
    const auto c = mesh.cell_coords(cell);
    bool touches = false;
    for (int d = 0; d < dim; d++)
    {
      touches = touches || c[d] == 0 || c[d] == n - 1;
    }
    if (touches)
    {
      for (int t = 0; t < per_cell; t++)
      {
        candidates.push_back(cell * per_cell + t);
      }
    }
  }
  mesh.boundary_facets = detail::box_boundary_facets(mesh, candidates, mesh.full_box());
  return mesh;
}

//
// Coarse partition T_H of the unit square/cube into N = N_ax^dim cells K_i. The fine mesh
// is a subdivision of it.
//
struct CoarseGrid
{
  int dim = 2;
  int cells_per_axis = 0;
  double H = 0.0;
  int ratio = 0;  // H / h
  int N = 0;
  std::vector<int> element_to_cell;

  // Fine-cell box covered by coarse cell c.
  CellBox cell_box(int c) const
  {
    CellBox box;
    const int n = cells_per_axis;
    const std::array<int, 3> cc = {c % n, (c / n) % n, dim == 3 ? c / (n * n) : 0};
    for (int d = 0; d < dim; d++)
    {
      box.lo[d] = cc[d] * ratio;
      box.hi[d] = (cc[d] + 1) * ratio - 1;
    }
    return box;
  }
};

inline CoarseGrid build_coarse_grid(const FineMesh &fine, int cells_per_axis)
{
  Require(cells_per_axis >= 1, "build_coarse_grid: cells_per_axis must be positive");
  Require(fine.cells_per_axis % cells_per_axis == 0,
          "build_coarse_grid: fine cells per axis (" + std::to_string(fine.cells_per_axis) +
              ") not divisible by coarse cells per axis (" + std::to_string(cells_per_axis) +
              "); the fine mesh would not subdivide the coarse grid");
  CoarseGrid grid;
  grid.dim = fine.dim;
  grid.cells_per_axis = cells_per_axis;
  grid.H = 1.0 / cells_per_axis;
  grid.ratio = fine.cells_per_axis / cells_per_axis;
  grid.N = cells_per_axis * cells_per_axis * (fine.dim == 3 ? cells_per_axis : 1);
  grid.element_to_cell.resize(fine.num_elements());
  for (int e = 0; e < fine.num_elements(); e++)
  {
    const auto c = fine.cell_of_element(e);
    const auto cc = fine.cell_coords(c);
    int id = 0;
    for (int d = fine.dim - 1; d >= 0; d--)
    {
      id = id * cells_per_axis + cc[d] / grid.ratio;
    }
    grid.element_to_cell[e] = id;
  }
  return grid;
}

//
// Overlapping subdomain Omega_i: coarse cell K_i extended by `overlap_layers` fine-cell
// layers in every direction and clipped at the domain boundary.
//
struct Subdomain
{
  int id = 0;
  int dim = 2;
  int overlap_layers = 1;
  CellBox core;  // K_i
  CellBox box;   // Omega_i
  std::vector<int> elements;               // ascending
  std::vector<int> nodes;                  // index set I_i, ascending global indices
  std::vector<BoundaryFacet> boundary_facets;  // facets of the boundary of Omega_i
  std::vector<char> on_boundary;           // per local node: lies on the boundary of Omega_i
  std::vector<char> on_interface;          // per local node: on the boundary but not on dOmega only
  std::vector<int> interior_nodes;         // local indices not on the boundary of Omega_i
  std::vector<int> boundary_nodes;         // local indices on the boundary of Omega_i
  double delta = 0.0;                      // overlap width
  double diameter = 0.0;
  int mesh_nodes_per_axis = 0;

  int num_nodes() const { return static_cast<int>(nodes.size()); }

  // Local index of a global node, or -1 if the node is not in I_i.
  int local_index(int global) const
  {
    const int m = mesh_nodes_per_axis;
    const std::array<int, 3> c = {global % m, (global / m) % m, dim == 3 ? global / (m * m) : 0};
    int local = 0;
    int stride = 1;
    for (int d = 0; d < dim; d++)
    {
      if (c[d] < box.lo[d] || c[d] > box.hi[d] + 1)
      {
        return -1;
      }
      local += (c[d] - box.lo[d]) * stride;
      stride *= box.hi[d] - box.lo[d] + 2;
    }
    if (dim == 2 && c[2] != 0)
    {
      return -1;
    }
    return local;
  }

  // Extent of Omega_i along an axis, in lengths.
  double extent(const FineMesh &mesh, int axis) const
  {
    return (box.hi[axis] - box.lo[axis] + 1) * mesh.h;
  }
};

inline Subdomain make_subdomain(const FineMesh &fine, int id, const CellBox &core, int layers)
{
  Subdomain s;
  s.id = id;
  s.dim = fine.dim;
  s.overlap_layers = layers;
  s.core = core;
  s.mesh_nodes_per_axis = fine.nodes_per_axis();
  const int n = fine.cells_per_axis;
  for (int d = 0; d < fine.dim; d++)
  {
    s.box.lo[d] = std::max(0, core.lo[d] - layers);
    s.box.hi[d] = std::min(n - 1, core.hi[d] + layers);
  }
  s.elements = detail::box_elements(fine, s.box);
  s.nodes = detail::box_nodes(fine, s.box);
  s.boundary_facets = detail::box_boundary_facets(fine, s.elements, s.box);
  s.on_boundary.assign(s.nodes.size(), 0);
  s.on_interface.assign(s.nodes.size(), 0);
  for (std::size_t l = 0; l < s.nodes.size(); l++)
  {
    const auto c = fine.node_coords(s.nodes[l]);
    for (int d = 0; d < fine.dim; d++)
    {
      const bool at_lo = c[d] == s.box.lo[d];
      const bool at_hi = c[d] == s.box.hi[d] + 1;
      if (at_lo || at_hi)
      {
        s.on_boundary[l] = 1;
      }
      if ((at_lo && c[d] > 0) || (at_hi && c[d] < n))
      {
        s.on_interface[l] = 1;
      }
    }
    (s.on_boundary[l] ? s.boundary_nodes : s.interior_nodes).push_back(static_cast<int>(l));
  }
  s.delta = layers * fine.h;
  double d2 = 0.0;
  for (int d = 0; d < fine.dim; d++)
  {
    d2 += std::pow(s.extent(fine, d), 2);
  }
  s.diameter = std::sqrt(d2);
  return s;
}

// Overlapping decomposition with delta_i = overlap_layers * h. When `warnings` is given,
// subdomains that swallow the whole domain in a multi-subdomain setting are reported.
inline std::vector<Subdomain> build_subdomains(const FineMesh &fine, const CoarseGrid &coarse,
                                               int overlap_layers,
                                               std::vector<std::string> *warnings = nullptr)
{
  Require(overlap_layers >= 1, "build_subdomains: overlap_layers must be >= 1");
  Require(coarse.dim == fine.dim && coarse.ratio * coarse.cells_per_axis == fine.cells_per_axis,
          "build_subdomains: coarse grid does not belong to this fine mesh");
  std::vector<Subdomain> subs;
  subs.reserve(coarse.N);
  for (int c = 0; c < coarse.N; c++)
  {
    subs.push_back(make_subdomain(fine, c, coarse.cell_box(c), overlap_layers));
    if (warnings && coarse.N > 1 && subs.back().box == fine.full_box())
    {
      warnings->push_back("subdomain " + std::to_string(c) +
                          " covers the whole domain; overlap is larger than needed");
    }
  }
  return subs;
}

struct DecompositionDiagnostics
{
  int Lambda = 0;             // max_i #{j : closure(Omega_i) meets closure(Omega_j)}
  int max_multiplicity = 0;   // max number of subdomains containing one fine node
  double delta = 0.0;         // min_i delta_i
  std::vector<double> C_poin_bound;  // d_i^2 / (H pi)^2
  double resolution_margin = 0.0;    // max_i C_poin^{1/2} H k; must be < 1
  bool resolution_ok = false;
  std::optional<double> C_est;       // (1 - max_i C_poin (Hk)^2)^{-1} when resolution_ok
};

inline DecompositionDiagnostics decomposition_diagnostics(const FineMesh &fine,
                                                          const CoarseGrid &coarse,
                                                          std::span<const Subdomain> subs,
                                                          double k)
{
  DecompositionDiagnostics diag;
  const int N = static_cast<int>(subs.size());
  diag.delta = std::numeric_limits<double>::infinity();
  for (int i = 0; i < N; i++)
  {
    int count = 0;
    for (int j = 0; j < N; j++)
    {
      bool meet = true;
      for (int d = 0; d < fine.dim; d++)
      {
        // Closed node intervals [lo, hi + 1] intersect.
        meet = meet && subs[i].box.lo[d] <= subs[j].box.hi[d] + 1 &&
               subs[j].box.lo[d] <= subs[i].box.hi[d] + 1;
      }
      count += meet ? 1 : 0;
    }
    diag.Lambda = std::max(diag.Lambda, count);
    diag.delta = std::min(diag.delta, subs[i].delta);
  }

  std::vector<int> membership(fine.num_nodes(), 0);
  for (const auto &s : subs)
  {
    for (int g : s.nodes)
    {
      membership[g]++;
    }
  }
  diag.max_multiplicity = membership.empty() ? 0
                                             : *std::max_element(membership.begin(),
                                                                 membership.end());

  const double H = coarse.H;
  double cmax = 0.0;
  for (const auto &s : subs)
  {
    const double c = s.diameter * s.diameter / (H * M_PI * H * M_PI);
    diag.C_poin_bound.push_back(c);
    cmax = std::max(cmax, c);
  }
  diag.resolution_margin = std::sqrt(cmax) * H * k;
  diag.resolution_ok = diag.resolution_margin < 1.0;
  if (diag.resolution_ok)
  {
    diag.C_est = 1.0 / (1.0 - cmax * (H * k) * (H * k));
  }
  return diag;
}

}  // namespace emshs

#endif  // EMSHS_MESH_HPP
