// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include "emshs/dd.hpp"
#include "oracles.hpp"

using namespace emshs;

class PouInvariants : public ::testing::TestWithParam<std::tuple<int, int>>
{
};

TEST_P(PouInvariants, SumSupportBounds)
{
  const auto [dim, layers] = GetParam();
  const int n = dim == 2 ? 24 : 12;
  const FineMesh mesh = build_fine_mesh(dim, n);
  const CoarseGrid grid = build_coarse_grid(mesh, dim == 2 ? 4 : 3);
  const auto subs = build_subdomains(mesh, grid, layers);
  const auto pou = build_pou(subs, mesh);

  RealVector sum = RealVector::Zero(mesh.num_nodes());
  for (std::size_t i = 0; i < subs.size(); i++)
  {
    const auto &s = subs[i];
    ASSERT_EQ(pou.chi[i].size(), s.num_nodes());
    for (int l = 0; l < s.num_nodes(); l++)
    {
      EXPECT_GE(pou.chi[i][l], 0.0);
      EXPECT_LE(pou.chi[i][l], pou.C_inf_measured);
      if (s.on_interface[l])
      {
        EXPECT_EQ(pou.chi[i][l], 0.0);
      }
      sum[s.nodes[l]] += pou.chi[i][l];
    }
  }
  EXPECT_LT((sum.array() - 1.0).abs().maxCoeff(), 1e-14);
  EXPECT_LE(pou.C_inf_measured, 1.0);
  EXPECT_GT(pou.C_G_measured, 0.0);
  EXPECT_LE(pou.C_G_measured, 2.0);
}

INSTANTIATE_TEST_SUITE_P(Grids, PouInvariants,
                         ::testing::Combine(::testing::Values(2, 3), ::testing::Values(1, 2)));

TEST(Pou, SingleSubdomainIsOne)
{
  const FineMesh mesh = build_fine_mesh(2, 6);
  const auto subs = build_subdomains(mesh, build_coarse_grid(mesh, 1), 1);
  const auto pou = build_pou(subs, mesh);
  EXPECT_EQ((pou.chi[0].array() - 1.0).abs().maxCoeff(), 0.0);
  EXPECT_EQ(pou.C_G_measured, 0.0);
}

TEST(Pou, TwoHalvesOnEighthMesh)
{
  // Left core x cells 0..3, right core 4..7, one overlap layer: the left box reaches node
  // column 5, the right starts at column 3. Hop distances from the interior boundary are
  // min(5 - x, 2) and min(x - 3, 2).
  const FineMesh mesh = build_fine_mesh(2, 8);
  std::vector<Subdomain> subs = {make_subdomain(mesh, 0, CellBox{{0, 0, 0}, {3, 7, 0}}, 1),
                                 make_subdomain(mesh, 1, CellBox{{4, 0, 0}, {7, 7, 0}}, 1)};
  const auto pou = build_pou(subs, mesh);
  for (int g = 0; g < mesh.num_nodes(); g++)
  {
    const auto c = mesh.node_coords(g);
    const int x = c[0];
    const double wl = x <= 5 ? std::min(5 - x, 2) : 0;
    const double wr = x >= 3 ? std::min(x - 3, 2) : 0;
    const double expect_left = wl / (wl + wr);
    const int ll = subs[0].local_index(g);
    const int lr = subs[1].local_index(g);
    const double left = ll >= 0 ? pou.chi[0][ll] : 0.0;
    const double right = lr >= 0 ? pou.chi[1][lr] : 0.0;
    EXPECT_DOUBLE_EQ(left, expect_left) << "node (" << c[0] << "," << c[1] << ")";
    // Mirror symmetry about x = 1/2.
    const int mirror = mesh.node_index({8 - c[0], c[1], 0});
    const int lm = subs[1].local_index(mirror);
    EXPECT_DOUBLE_EQ(left, lm >= 0 ? pou.chi[1][lm] : 0.0);
    if (x == 4)
    {
      EXPECT_DOUBLE_EQ(left, 0.5);
      EXPECT_DOUBLE_EQ(right, 0.5);
    }
  }
  // chi drops from 1 to 1/2 to 0 over two layers of width h = delta.
  EXPECT_NEAR(pou.C_G_measured, 0.5, 1e-12);
}

TEST(Pou, CoverViolation)
{
  const FineMesh mesh = build_fine_mesh(2, 8);
  std::vector<Subdomain> subs = {make_subdomain(mesh, 0, CellBox{{0, 0, 0}, {3, 7, 0}}, 1)};
  EXPECT_THROW(build_pou(subs, mesh), Error);
  EXPECT_THROW(build_pou(std::vector<Subdomain>{}, mesh), Error);
}

TEST(Maps, RestrictProlongAdjointAndReconstruction)
{
  const FineMesh mesh = build_fine_mesh(2, 12);
  const auto subs = build_subdomains(mesh, build_coarse_grid(mesh, 3), 2);
  const auto pou = build_pou(subs, mesh);
  const int n = mesh.num_nodes();
  const ComplexVector u = oracle::random_complex(n, 1);
  ComplexVector rebuilt = ComplexVector::Zero(n);
  for (std::size_t i = 0; i < subs.size(); i++)
  {
    const auto &s = subs[i];
    const ComplexVector v = oracle::random_complex(s.num_nodes(), 100 + i);
    // <R r, v> = <r, R^T v>
    EXPECT_NEAR(std::abs(restrict_to(s, u).dot(v) - u.dot(prolong(s, v, n))), 0.0, 1e-12);
    // R~^T is R^T composed with the nodal product by chi.
    const ComplexVector w = weighted_prolong(s, pou.chi[i], v, n);
    for (int l = 0; l < s.num_nodes(); l++)
    {
      EXPECT_EQ(w[s.nodes[l]], pou.chi[i][l] * v[l]);
    }
    weighted_prolong_add(s, pou.chi[i], restrict_to(s, u), rebuilt);
  }
  EXPECT_LT((rebuilt - u).cwiseAbs().maxCoeff(), 1e-14);

  // Index lists are injective and cover every node.
  std::vector<int> hits(n, 0);
  for (const auto &s : subs)
  {
    std::vector<int> seen(n, 0);
    for (int g : s.nodes)
    {
      EXPECT_EQ(seen[g]++, 0);
      hits[g]++;
    }
  }
  EXPECT_TRUE(std::all_of(hits.begin(), hits.end(), [](int h) { return h > 0; }));

  EXPECT_THROW(restrict_to(subs[0], ComplexVector::Zero(3)), Error);
  ComplexVector small = ComplexVector::Zero(n);
  EXPECT_THROW(prolong_add(subs[0], ComplexVector::Zero(2), small), Error);
  EXPECT_THROW(weighted_prolong(subs[0], pou.chi[1], restrict_to(subs[0], u), n), Error);
}

TEST(Pou, HopDistanceCap)
{
  const FineMesh mesh = build_fine_mesh(3, 6);
  const Subdomain s = make_subdomain(mesh, 0, CellBox{{2, 2, 2}, {3, 3, 3}}, 1);
  const auto dist = detail::interface_hop_distance(mesh, s, 2);
  for (int l = 0; l < s.num_nodes(); l++)
  {
    const auto c = mesh.node_coords(s.nodes[l]);
    // Chebyshev distance to the box faces bounds the hop distance in the Kuhn split.
    int face = 100;
    for (int d = 0; d < 3; d++)
    {
      face = std::min({face, c[d] - s.box.lo[d], s.box.hi[d] + 1 - c[d]});
    }
    EXPECT_EQ(dist[l], std::min(face, 2));
  }
}
