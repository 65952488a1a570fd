// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <set>
#include "emshs/verify.hpp"
#include "oracles.hpp"

using namespace emshs;

TEST(Settings, TabulatedAndScaled)
{
  const std::map<int, int> expect = {{10, 40}, {20, 100}, {40, 280}, {80, 720}, {160, 2080}, {320, 5760}};
  EXPECT_EQ(setting_a_table(), expect);
  for (const auto &[k, n] : expect)
  {
    const auto s = make_setting("A", k);
    EXPECT_EQ(s.fine_cells, n);
    EXPECT_EQ(s.coarse_cells, k);
    EXPECT_EQ(s.fine_cells % s.coarse_cells, 0);
  }
  const auto a40 = make_setting("A", 40);
  EXPECT_DOUBLE_EQ(a40.h(), 1.0 / 280);
  EXPECT_DOUBLE_EQ(a40.H(), 1.0 / 40);

  const auto b20 = make_setting("B", 20);
  EXPECT_EQ(b20.fine_cells, 60);
  EXPECT_EQ(b20.coarse_cells, 10);
  EXPECT_DOUBLE_EQ(b20.H() / b20.h(), 6.0);

  try
  {
    make_setting("A", 15);
    FAIL() << "expected an error";
  }
  catch (const Error &e)
  {
    EXPECT_NE(std::string(e.what()).find("10, 20, 40, 80, 160, 320"), std::string::npos);
  }
  EXPECT_THROW(make_setting("A", 10.5), Error);
  EXPECT_THROW(make_setting("B", 7), Error);   // k/2 not an integer
  EXPECT_THROW(make_setting("B", 0), Error);
  EXPECT_THROW(make_setting("C", 10), Error);
}

TEST(Record, PredictedColumns)
{
  VerificationRecord r;
  r.k = 10;
  r.h = 1.0 / 40;
  r.H = 0.1;
  r.level = 2;
  EXPECT_NEAR(r.predicted_sigma(), 2.0, 1e-15);
  EXPECT_NEAR(r.predicted_delta1(), 0.05, 1e-15);
  EXPECT_NEAR(r.predicted_delta2(), 2.0, 1e-14);
}

TEST(Test1, EnlargedDomainIsElementClosure)
{
  for (int dim : {2, 3})
  {
    const int n = dim == 2 ? 12 : 6;
    auto d = make_discretization(dim, n, dim == 2 ? 3 : 2, WavenumberField::constant(3.0), 1);
    for (const auto &s : d->subdomains)
    {
      std::set<int> brute;
      for (int e = 0; e < d->mesh.num_elements(); e++)
      {
        for (int a = 0; a <= dim; a++)
        {
          if (s.local_index(d->mesh.elements[e][a]) >= 0)
          {
            brute.insert(e);
          }
        }
      }
      const auto got = detail::enlarged_elements(d->mesh, s);
      EXPECT_EQ(std::set<int>(got.begin(), got.end()), brute);
      EXPECT_EQ(got.size(), brute.size());
    }
  }
}

TEST(Test1, SigmaBasics)
{
  // One subdomain: Q_1 v = v.
  auto single = make_discretization(2, 10, 1, WavenumberField::constant(5.0), 1);
  const ComplexVector v = oracle::random_complex(single->mesh.num_nodes(), 3);
  EXPECT_LT(test1_sigma(*single, v), 1e-12);
  EXPECT_THROW(test1_sigma(*single, ComplexVector::Zero(single->mesh.num_nodes())), Error);
  EXPECT_THROW(test1_sigma(*single, ComplexVector::Ones(4)), Error);

  // Both evaluation paths agree and the ratio is scale invariant.
  auto d = make_discretization(2, 16, 4, WavenumberField::constant(6.0), 1);
  const PrecondStack stack(d, std::nullopt, PrecondMode::OneLevel);
  const ComplexVector u = direct_solve(d->A, assemble_rhs(d->mesh, default_probe_source(d->mesh)));
  const double s1 = test1_sigma(stack, u);
  const double s2 = test1_sigma(*d, u);
  EXPECT_GT(s1, 0.0);
  EXPECT_NEAR(s1, s2, 1e-10 * s1);
  EXPECT_NEAR(test1_sigma(*d, Complex(0.0, 3.0) * u), s1, 1e-10 * s1);
}

TEST(Test1, EnlargedVNormMatchesDenseOracle)
{
  // Over the whole mesh the restricted V-norm is the global one.
  const int n = 6;
  const double k = 3.0;
  const FineMesh mesh = build_fine_mesh(2, n);
  std::vector<int> all(mesh.num_elements());
  std::iota(all.begin(), all.end(), 0);
  const ComplexVector v = oracle::random_complex(mesh.num_nodes(), 11);
  const auto ops = oracle::dense_operators(2, n);
  const Eigen::MatrixXd G = ops.S + k * k * ops.M;
  const double expect = std::sqrt(std::real(v.dot(G.cast<Complex>() * v)));
  EXPECT_NEAR(detail::vnorm_on_elements(mesh, WavenumberField::constant(k), all, v), expect, 1e-12 * expect);
}

TEST(Test2, WeightedGradientNorm)
{
  // chi = x and e = 2x - 3y + i y on a subdomain box: integral of x^2 |grad e|^2 in closed form.
  const FineMesh mesh = build_fine_mesh(2, 8);
  const Subdomain s = make_subdomain(mesh, 0, CellBox{{2, 1, 0}, {5, 6, 0}}, 1);
  RealVector chi(s.num_nodes());
  ComplexVector e(s.num_nodes());
  for (int l = 0; l < s.num_nodes(); l++)
  {
    const auto c = mesh.node_coords(s.nodes[l]);
    const double x = c[0] * mesh.h, y = c[1] * mesh.h;
    chi[l] = x;
    e[l] = Complex(2.0 * x - 3.0 * y, y);
  }
  const double a = s.box.lo[0] * mesh.h, b = (s.box.hi[0] + 1) * mesh.h;
  const double c = s.box.lo[1] * mesh.h, dd = (s.box.hi[1] + 1) * mesh.h;
  const double grad2 = 4.0 + 9.0 + 1.0;
  const double expect = grad2 * (b * b * b - a * a * a) / 3.0 * (dd - c);
  EXPECT_NEAR(detail::weighted_gradient_norm2(mesh, s, chi, e), expect, 1e-12 * expect);

  // chi = 1 reduces to e^H S e with the box stiffness of the dense oracle.
  const auto ops = oracle::dense_box_operators(
      2, {s.box.hi[0] - s.box.lo[0] + 1, s.box.hi[1] - s.box.lo[1] + 1, 1}, mesh.h);
  const ComplexVector r = oracle::random_complex(s.num_nodes(), 4);
  const double ref = std::real(r.dot(ops.S.cast<Complex>() * r));
  EXPECT_NEAR(detail::weighted_gradient_norm2(mesh, s, RealVector::Ones(s.num_nodes()), r), ref, 1e-12 * ref);
}

TEST(Test2, DeltasDecreaseWithLevelAndAreDeterministic)
{
  auto d = make_discretization(2, 24, 3, WavenumberField::constant(4.0), 1);
  Test2Options opt;
  opt.samples = 6;
  std::vector<double> d1;
  for (int level : {0, 1, 2})
  {
    const auto r = test2_deltas(*d, level, opt);
    EXPECT_GT(r.delta1, 0.0);
    EXPECT_GT(r.delta2, 0.0);
    EXPECT_GE(r.argmax_delta1, 0);
    EXPECT_LT(r.argmax_delta1, opt.samples);
    EXPECT_EQ(r.resonant_subdomains, 0);
    d1.push_back(r.delta1);
  }
  EXPECT_GT(d1[0], d1[1]);
  EXPECT_GT(d1[1], d1[2]);
  const auto again = test2_deltas(*d, 1, opt);
  EXPECT_EQ(again.delta1, d1[1]);

  // The global trace is counted as the last sample.
  const ComplexVector u = direct_solve(d->A, assemble_rhs(d->mesh, default_probe_source(d->mesh)));
  const auto with_u = test2_deltas(*d, 1, opt, &u);
  EXPECT_GE(with_u.delta1, 0.0);
  EXPECT_LT(with_u.argmax_delta1, opt.samples);
}

TEST(Test2, TraceInEdgeSpaceHasNoError)
{
  // Traces that are exactly hierarchical hats on the level-2 edge space are reproduced by
  // the projection, so the extension of the remainder vanishes.
  auto d = make_discretization(2, 16, 2, WavenumberField::constant(3.0), 1);
  const auto &sub = d->subdomains[0];
  const EdgeSpace es = build_edge_space(sub, d->mesh, 2);
  const ComplexVector coef = oracle::random_complex(es.traces.cols(), 8);
  const ComplexVector trace = es.traces.cast<Complex>() * coef;
  const ComplexVector c = l2_edge_projection(es, trace);
  const ComplexVector rem = trace - es.traces.cast<Complex>() * c;
  EXPECT_LT(rem.norm(), 1e-12 * trace.norm());
  const LocalDirichletSolver solver(sub, assemble_local_parts(sub, d->mesh, d->kfield));
  EXPECT_LT(solver.extend(rem).norm(), 1e-10 * trace.norm());
}
