// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_DD_HPP
#define EMSHS_DD_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <span>
#include <string>
#include <vector>
#include "emshs/common.hpp"
#include "emshs/fem.hpp"
#include "emshs/mesh.hpp"

namespace emshs
{

//
// Nodal partition of unity {chi_i}. chi_i is stored over the local node set I_i and is
// the P1 interpolant of the nodal values.
//
struct PartitionOfUnity
{
  std::vector<RealVector> chi;
  double C_inf_measured = 0.0;  // max nodal value
  double C_G_measured = 0.0;    // max_i max_T |grad chi_i|_T * delta_i
};

namespace detail
{

// Lattice offsets joining a node to its mesh-edge neighbours. In the Kuhn split two nodes
// share an edge iff their offset is a nonzero 0/1 vector or the negative of one.
inline std::vector<std::array<int, 3>> kuhn_edge_offsets(int dim)
{
  std::vector<std::array<int, 3>> out;
  const int count = 1 << dim;
  for (int mask = 1; mask < count; mask++)
  {
    std::array<int, 3> o = {0, 0, 0};
    for (int d = 0; d < dim; d++)
    {
      o[d] = (mask >> d) & 1;
    }
    out.push_back(o);
    out.push_back({-o[0], -o[1], -o[2]});
  }
  return out;
}

// Hop distance inside Omega_i from the interior boundary (dOmega_i minus dOmega), capped.
// Every box node pair with a Kuhn offset is an edge of some element of the box.
inline std::vector<int> interface_hop_distance(const FineMesh &mesh, const Subdomain &sub, int cap)
{
  const int n = sub.num_nodes();
  std::vector<int> dist(n, cap);
  std::deque<int> queue;
  for (int l = 0; l < n; l++)
  {
    if (sub.on_interface[l])
    {
      dist[l] = 0;
      queue.push_back(l);
    }
  }
  const auto offsets = kuhn_edge_offsets(mesh.dim);
  while (!queue.empty())
  {
    const int l = queue.front();
    queue.pop_front();
    if (dist[l] + 1 >= cap)
    {
      continue;
    }
    const auto c = mesh.node_coords(sub.nodes[l]);
    for (const auto &o : offsets)
    {
      std::array<int, 3> nc = {c[0] + o[0], c[1] + o[1], c[2] + o[2]};
      bool inside = true;
      for (int d = 0; d < mesh.dim; d++)
      {
        inside = inside && nc[d] >= sub.box.lo[d] && nc[d] <= sub.box.hi[d] + 1;
      }
      if (!inside)
      {
        continue;
      }
      const int m = sub.local_index(mesh.node_index(nc));
      if (dist[m] > dist[l] + 1)
      {
        dist[m] = dist[l] + 1;
        queue.push_back(m);
      }
    }
  }
  return dist;
}

}  // namespace detail

//
// chi_i = w_i / sum_j w_j with w_i the capped hop distance to the interior boundary of
// Omega_i (cap = overlap_layers + 1). w_i vanishes on dOmega_i minus dOmega and outside
// Omega_i, so supp chi_i lies in the closure of Omega_i.
//
inline PartitionOfUnity build_pou(std::span<const Subdomain> subs, const FineMesh &mesh)
{
  Require(!subs.empty(), "build_pou: no subdomains");
  const int N = static_cast<int>(subs.size());
  std::vector<std::vector<int>> w(N);
  std::vector<double> total(mesh.num_nodes(), 0.0);
  for (int i = 0; i < N; i++)
  {
    w[i] = detail::interface_hop_distance(mesh, subs[i], subs[i].overlap_layers + 1);
    for (int l = 0; l < subs[i].num_nodes(); l++)
    {
      total[subs[i].nodes[l]] += w[i][l];
    }
  }
  for (int g = 0; g < mesh.num_nodes(); g++)
  {
    Require(total[g] > 0.0, "build_pou: node " + std::to_string(g) +
                                " is covered by no subdomain interior (cover violation)");
  }

  PartitionOfUnity pou;
  pou.chi.resize(N);
  Eigen::Matrix<double, 4, 3> grad;
  for (int i = 0; i < N; i++)
  {
    const Subdomain &s = subs[i];
    pou.chi[i].resize(s.num_nodes());
    for (int l = 0; l < s.num_nodes(); l++)
    {
      pou.chi[i][l] = w[i][l] / total[s.nodes[l]];
      pou.C_inf_measured = std::max(pou.C_inf_measured, pou.chi[i][l]);
    }
    for (int e : s.elements)
    {
      detail::simplex_gradients(mesh, e, grad);
      Eigen::RowVector3d gchi = Eigen::RowVector3d::Zero();
      for (int a = 0; a <= mesh.dim; a++)
      {
        gchi += pou.chi[i][s.local_index(mesh.elements[e][a])] * grad.row(a);
      }
      pou.C_G_measured = std::max(pou.C_G_measured, gchi.norm() * s.delta);
    }
  }
  return pou;
}

// R_i r: gather of the I_i entries.
inline ComplexVector restrict_to(const Subdomain &sub, const ComplexVector &r)
{
  ComplexVector out(sub.num_nodes());
  for (int l = 0; l < sub.num_nodes(); l++)
  {
    const int g = sub.nodes[l];
    Require(g >= 0 && g < r.size(),
            "restrict: node index " + std::to_string(g) + " out of range for vector of length " +
                std::to_string(r.size()));
    out[l] = r[g];
  }
  return out;
}

// out += R_i^T v_i
inline void prolong_add(const Subdomain &sub, const ComplexVector &v, ComplexVector &out)
{
  Require(v.size() == sub.num_nodes(), "prolong: local vector of length " +
                                           std::to_string(v.size()) + ", subdomain has " +
                                           std::to_string(sub.num_nodes()) + " nodes");
  for (int l = 0; l < sub.num_nodes(); l++)
  {
    const int g = sub.nodes[l];
    Require(g >= 0 && g < out.size(), "prolong: node index " + std::to_string(g) +
                                          " out of range");
    out[g] += v[l];
  }
}

// R_i^T v_i: zero-padded extension.
inline ComplexVector prolong(const Subdomain &sub, const ComplexVector &v, int num_global)
{
  ComplexVector out = ComplexVector::Zero(num_global);
  prolong_add(sub, v, out);
  return out;
}

// out += R~_i^T v_i = R_i^T (chi_i v_i), nodal product.
inline void weighted_prolong_add(const Subdomain &sub, const RealVector &chi,
                                 const ComplexVector &v, ComplexVector &out)
{
  Require(chi.size() == sub.num_nodes(), "weighted_prolong: partition of unity does not match "
                                         "subdomain " + std::to_string(sub.id));
  prolong_add(sub, ComplexVector(v.cwiseProduct(chi.cast<Complex>())), out);
}

inline ComplexVector weighted_prolong(const Subdomain &sub, const RealVector &chi,
                                      const ComplexVector &v, int num_global)
{
  ComplexVector out = ComplexVector::Zero(num_global);
  weighted_prolong_add(sub, chi, v, out);
  return out;
}

}  // namespace emshs

#endif  // EMSHS_DD_HPP
