// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_COARSE_HPP
#define EMSHS_COARSE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <vector>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include "emshs/common.hpp"
#include "emshs/dd.hpp"
#include "emshs/fem.hpp"
#include "emshs/linalg.hpp"
#include "emshs/mesh.hpp"

namespace emshs
{

//
// Hierarchical hat functions on [0, 1]. Level 0 holds the two endpoint hats; level m >= 1
// adds the hats centred at the odd multiples of 2^-m.
//
struct HierarchicalBasis1D
{
  int level = 0;

  static double mesh_size(int m) { return std::ldexp(1.0, -m); }

  static double eval(int m, int j, double x)
  {
    return std::max(0.0, 1.0 - std::abs(x / mesh_size(m) - j));
  }

  static double point(int m, int j) { return j * mesh_size(m); }

  static std::vector<int> indices(int m)
  {
    if (m == 0)
    {
      return {0, 1};
    }
    std::vector<int> out;
    for (int j = 1; j < (1 << m); j += 2)
    {
      out.push_back(j);
    }
    return out;
  }

  int dimension() const
  {
    int n = 0;
    for (int m = 0; m <= level; m++)
    {
      n += static_cast<int>(indices(m).size());
    }
    return n;
  }
};

//
// Piecewise-linear boundary space on dOmega_i, evaluated at the fine boundary nodes. In 2-d
// the boundary loop runs bottom, right, top, left; corner hats straddle two edges and the
// finer hierarchical levels live on one edge each. In 3-d only the 8 trilinear corner
// traces (level 0) are available.
//
struct EdgeSpace
{
  int subdomain = 0;
  int level = 0;
  int dim = 2;
  int n_edge = 0;
  std::vector<Point> points;          // peak location of each basis function
  std::vector<int> boundary_nodes;    // local node indices (Subdomain::boundary_nodes)
  std::vector<double> loop_parameter; // 2-d: position s in [0, 1) along the loop per node
  RealDenseMatrix traces;             // boundary node x basis function
  RealSparseMatrix boundary_mass;     // L2(dOmega_i) mass over boundary nodes
  Eigen::LLT<RealDenseMatrix> gram;   // traces^T * boundary_mass * traces
};

namespace detail
{

// Edge number and edge parameter of a boundary node in box-relative lattice coordinates.
inline std::pair<int, double> loop_position(int x, int y, int nx, int ny)
{
  if (y == 0)
  {
    return {0, double(x) / nx};
  }
  if (x == nx)
  {
    return {1, double(y) / ny};
  }
  if (y == ny)
  {
    return {2, double(nx - x) / nx};
  }
  return {3, double(ny - y) / ny};
}

inline RealSparseMatrix boundary_mass_on_nodes(const FineMesh &mesh, const Subdomain &sub)
{
  const int nb = static_cast<int>(sub.boundary_nodes.size());
  std::vector<int> bpos(sub.num_nodes(), -1);
  for (int b = 0; b < nb; b++)
  {
    bpos[sub.boundary_nodes[b]] = b;
  }
  std::vector<Eigen::Triplet<double, int>> t;
  const int fv = mesh.dim;
  const double scale = 1.0 / (fv * (fv + 1));
  for (const auto &f : sub.boundary_facets)
  {
    const double meas = facet_measure(mesh, f);
    for (int a = 0; a < fv; a++)
    {
      for (int b = 0; b < fv; b++)
      {
        t.emplace_back(bpos[sub.local_index(f.nodes[a])], bpos[sub.local_index(f.nodes[b])],
                       meas * scale * (a == b ? 2.0 : 1.0));
      }
    }
  }
  RealSparseMatrix M(nb, nb);
  M.setFromTriplets(t.begin(), t.end());
  return M;
}

// Rows `rows`, columns `cols` of a row-major sparse matrix.
inline RealSparseMatrix extract_block(const RealSparseMatrix &M, const std::vector<int> &rows,
                                      const std::vector<int> &cols)
{
  std::vector<int> cpos(M.cols(), -1);
  for (std::size_t c = 0; c < cols.size(); c++)
  {
    cpos[cols[c]] = static_cast<int>(c);
  }
  std::vector<Eigen::Triplet<double, int>> t;
  for (std::size_t r = 0; r < rows.size(); r++)
  {
    for (RealSparseMatrix::InnerIterator it(M, rows[r]); it; ++it)
    {
      if (cpos[it.col()] >= 0)
      {
        t.emplace_back(static_cast<int>(r), cpos[it.col()], it.value());
      }
    }
  }
  RealSparseMatrix B(static_cast<int>(rows.size()), static_cast<int>(cols.size()));
  B.setFromTriplets(t.begin(), t.end());
  return B;
}

}  // namespace detail

inline EdgeSpace build_edge_space(const Subdomain &sub, const FineMesh &mesh, int level)
{
  Require(level >= 0, "build_edge_space: level must be nonnegative");
  if (mesh.dim == 3 && level > 0)
  {
    throw UnsupportedError("build_edge_space: three-dimensional edge spaces are only "
                           "available for level 0 (got level " + std::to_string(level) + ")");
  }
  EdgeSpace es;
  es.subdomain = sub.id;
  es.level = level;
  es.dim = mesh.dim;
  es.boundary_nodes = sub.boundary_nodes;
  const int nb = static_cast<int>(es.boundary_nodes.size());
  std::array<int, 3> extent = {1, 1, 1};
  for (int d = 0; d < mesh.dim; d++)
  {
    extent[d] = sub.box.hi[d] - sub.box.lo[d] + 1;
  }
  auto corner_point = [&](std::array<int, 3> bits)
  {
    Point p = {0, 0, 0};
    for (int d = 0; d < mesh.dim; d++)
    {
      p[d] = (sub.box.lo[d] + bits[d] * extent[d]) * mesh.h;
    }
    return p;
  };

  if (mesh.dim == 2)
  {
    es.n_edge = 1 << (level + 2);
    es.traces = RealDenseMatrix::Zero(nb, es.n_edge);
    es.loop_parameter.resize(nb);
    const std::array<std::array<int, 3>, 4> corners = {
        {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}}};
    for (int c = 0; c < 4; c++)
    {
      es.points.push_back(corner_point(corners[c]));
    }
    for (int m = 1; m <= level; m++)
    {
      for (int e = 0; e < 4; e++)
      {
        for (int j : HierarchicalBasis1D::indices(m))
        {
          const double t = HierarchicalBasis1D::point(m, j);
          const Point a = es.points[e], b = es.points[(e + 1) % 4];
          es.points.push_back({a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), 0.0});
        }
      }
    }
    for (int b = 0; b < nb; b++)
    {
      const auto g = mesh.node_coords(sub.nodes[es.boundary_nodes[b]]);
      const auto [e, t] = detail::loop_position(g[0] - sub.box.lo[0], g[1] - sub.box.lo[1],
                                                extent[0], extent[1]);
      es.loop_parameter[b] = (e + t) / 4.0;
      es.traces(b, e) = 1.0 - t;
      es.traces(b, (e + 1) % 4) = t;
      int col = 4;
      for (int m = 1; m <= level; m++)
      {
        const auto js = HierarchicalBasis1D::indices(m);
        for (int edge = 0; edge < 4; edge++)
        {
          for (int j : js)
          {
            es.traces(b, col++) = edge == e ? HierarchicalBasis1D::eval(m, j, t) : 0.0;
          }
        }
      }
    }
  }
  else
  {
    es.n_edge = 8;
    es.traces = RealDenseMatrix::Zero(nb, 8);
    for (int c = 0; c < 8; c++)
    {
      es.points.push_back(corner_point({c & 1, (c >> 1) & 1, (c >> 2) & 1}));
    }
    for (int b = 0; b < nb; b++)
    {
      const auto g = mesh.node_coords(sub.nodes[es.boundary_nodes[b]]);
      std::array<double, 3> xi;
      for (int d = 0; d < 3; d++)
      {
        xi[d] = double(g[d] - sub.box.lo[d]) / extent[d];
      }
      for (int c = 0; c < 8; c++)
      {
        double v = 1.0;
        for (int d = 0; d < 3; d++)
        {
          v *= ((c >> d) & 1) ? xi[d] : 1.0 - xi[d];
        }
        es.traces(b, c) = v;
      }
    }
  }

  es.boundary_mass = detail::boundary_mass_on_nodes(mesh, sub);
  const RealDenseMatrix G = es.traces.transpose() * (es.boundary_mass * es.traces);
  es.gram.compute(G);
  const RealVector diag = RealVector(es.gram.matrixLLT().diagonal());
  Require(es.gram.info() == Eigen::Success && diag.minCoeff() > 1e-12 * diag.maxCoeff(),
          "build_edge_space: edge basis Gram matrix of subdomain " + std::to_string(sub.id) +
              " is singular");
  return es;
}

// Coefficients of the L2(dOmega_i) projection of boundary values (ordered as
// EdgeSpace::boundary_nodes) onto the edge space.
inline ComplexVector l2_edge_projection(const EdgeSpace &es, const ComplexVector &boundary_values)
{
  Require(boundary_values.size() == es.traces.rows(),
          "l2_edge_projection: expected " + std::to_string(es.traces.rows()) +
              " boundary values, got " + std::to_string(boundary_values.size()));
  const ComplexVector b = es.traces.transpose().cast<Complex>() *
                          apply_real(es.boundary_mass, boundary_values);
  return solve_split(es.gram, b);
}

//
// Solver for the local Dirichlet problems (Delta + k^2) v = f in Omega_i with prescribed
// boundary values. Near resonance the interior operator is replaced by its spectral
// pseudo-inverse and the null-space component is chosen to minimise the V(Omega_i) norm.
//
class LocalDirichletSolver
{
public:
  static constexpr double default_rcond_threshold = 1e-10;

  LocalDirichletSolver(const Subdomain &sub, const OperatorParts &parts,
                       double rcond_threshold = default_rcond_threshold)
    : id_(sub.id), ops_(local_dirichlet_from_parts(sub, parts))
  {
    const RealSparseMatrix G = vnorm_gram(parts);
    G_II_ = detail::extract_block(G, ops_.interior, ops_.interior);
    G_IB_ = detail::extract_block(G, ops_.interior, ops_.boundary);
    lu_.factorize(ops_.interior_operator);
    rcond_ = lu_.rcond();
    if (!lu_.ok() || !(rcond_ >= rcond_threshold))
    {
      setup_fallback();
    }
  }

  int subdomain() const { return id_; }
  bool resonance_flag() const { return resonance_; }
  double rcond() const { return rcond_; }
  const LocalDirichletOperators &operators() const { return ops_; }
  int num_local() const { return static_cast<int>(ops_.interior.size() + ops_.boundary.size()); }

  // Full local vector with v_B = boundary_values and interior_operator v_I = load - coupling v_B.
  ComplexVector solve(const ComplexVector &load, const ComplexVector &boundary_values) const
  {
    Require(load.size() == static_cast<int>(ops_.interior.size()) &&
                boundary_values.size() == static_cast<int>(ops_.boundary.size()),
            "local Dirichlet solve: size mismatch on subdomain " + std::to_string(id_));
    const ComplexVector rhs = load - apply_real(ops_.coupling, boundary_values);
    ComplexVector vI;
    if (!resonance_)
    {
      vI = lu_.solve(rhs);
    }
    else
    {
      const ComplexDenseMatrix V = eig_vectors_.cast<Complex>();
      const ComplexVector proj = V.adjoint() * rhs;
      ComplexVector y = ComplexVector::Zero(proj.size());
      for (int j = 0; j < proj.size(); j++)
      {
        if (!null_mask_[j])
        {
          y[j] = proj[j] / eig_values_[j];
        }
      }
      vI = V * y;
      if (Z_.cols() > 0)
      {
        const ComplexVector g = apply_real(G_II_, vI) + apply_real(G_IB_, boundary_values);
        const ComplexVector zg = Z_.transpose().cast<Complex>() * g;
        vI -= Z_.cast<Complex>() * solve_split(ZGZ_, zg);
      }
    }
    ComplexVector v(num_local());
    for (std::size_t i = 0; i < ops_.interior.size(); i++)
    {
      v[ops_.interior[i]] = vI[i];
    }
    for (std::size_t b = 0; b < ops_.boundary.size(); b++)
    {
      v[ops_.boundary[b]] = boundary_values[b];
    }
    return v;
  }

  ComplexVector extend(const ComplexVector &boundary_values) const
  {
    return solve(ComplexVector::Zero(ops_.interior.size()), boundary_values);
  }

  ComplexVector bubble() const
  {
    return solve(ops_.unit_load.cast<Complex>(), ComplexVector::Zero(ops_.boundary.size()));
  }

private:
  void setup_fallback()
  {
    resonance_ = true;
    const RealDenseMatrix K(ops_.interior_operator);
    Eigen::SelfAdjointEigenSolver<RealDenseMatrix> eig(K);
    Require(eig.info() == Eigen::Success,
            "local Dirichlet problem on subdomain " + std::to_string(id_) +
                ": eigen-decomposition failed after factorization fallback (rcond estimate " +
                std::to_string(rcond_) + ")");
    eig_values_ = eig.eigenvalues();
    eig_vectors_ = eig.eigenvectors();
    const double scale = eig_values_.cwiseAbs().maxCoeff();
    const double cutoff = 100.0 * default_rcond_threshold * scale;
    null_mask_.assign(eig_values_.size(), 0);
    std::vector<int> null_cols;
    for (int j = 0; j < eig_values_.size(); j++)
    {
      if (std::abs(eig_values_[j]) <= cutoff)
      {
        null_mask_[j] = 1;
        null_cols.push_back(j);
      }
    }
    Z_.resize(K.rows(), static_cast<int>(null_cols.size()));
    for (std::size_t c = 0; c < null_cols.size(); c++)
    {
      Z_.col(c) = eig_vectors_.col(null_cols[c]);
    }
    if (Z_.cols() > 0)
    {
      const RealDenseMatrix ZGZ = Z_.transpose() * (G_II_ * Z_);
      ZGZ_.compute(ZGZ);
      Require(ZGZ_.info() == Eigen::Success,
              "local Dirichlet problem on subdomain " + std::to_string(id_) +
                  ": minimum-norm correction failed (rcond estimate " + std::to_string(rcond_) +
                  ")");
    }
  }

  int id_ = 0;
  LocalDirichletOperators ops_;
  RealSparseMatrix G_II_, G_IB_;
  RealSymmetricSolver lu_;
  double rcond_ = 0.0;
  bool resonance_ = false;
  RealVector eig_values_;
  RealDenseMatrix eig_vectors_;
  std::vector<char> null_mask_;
  RealDenseMatrix Z_;
  Eigen::LLT<RealDenseMatrix> ZGZ_;
};

inline ComplexVector boundary_values_of(const Subdomain &sub, const ComplexVector &local)
{
  ComplexVector out(sub.boundary_nodes.size());
  for (std::size_t b = 0; b < sub.boundary_nodes.size(); b++)
  {
    out[b] = local[sub.boundary_nodes[b]];
  }
  return out;
}

// Helmholtz-harmonic extension of boundary values (ordered as Subdomain::boundary_nodes).
inline ComplexVector harmonic_extension(const LocalDirichletSolver &solver,
                                        const ComplexVector &boundary_values)
{
  return solver.extend(boundary_values);
}

inline ComplexVector bubble(const LocalDirichletSolver &solver) { return solver.bubble(); }

// L^{-1}_i(V_{i,l}) plus the bubble v^i, over the local nodes of Omega_i.
struct LocalMultiscaleSpace
{
  int subdomain = 0;
  RealDenseMatrix harmonic_extensions;  // local node x edge basis function
  RealVector bubble;
  bool resonance_flag = false;
  double rcond = 0.0;

  int dimension() const { return static_cast<int>(harmonic_extensions.cols()) + 1; }
};

inline LocalMultiscaleSpace build_local_space(const LocalDirichletSolver &solver,
                                              const EdgeSpace &es)
{
  LocalMultiscaleSpace ls;
  ls.subdomain = solver.subdomain();
  ls.resonance_flag = solver.resonance_flag();
  ls.rcond = solver.rcond();
  ls.harmonic_extensions.resize(solver.num_local(), es.n_edge);
  for (int j = 0; j < es.n_edge; j++)
  {
    ls.harmonic_extensions.col(j) =
        solver.extend(es.traces.col(j).cast<Complex>()).real();
  }
  ls.bubble = solver.bubble().real();
  return ls;
}

//
// Edge multiscale coarse space: columns R~_i^T L_i^{-1}(psi_j) and R~_i^T v^i, ordered by
// subdomain and then local basis index (edge functions first, bubble last).
//
struct CoarseSpace
{
  int level = 0;
  int n0 = 0;           // retained columns
  int n0_spanning = 0;  // sum of the local dimensions
  int n_fine = 0;
  RealSparseMatrix R0T;  // n_fine x n0
  RealSparseMatrix R0;   // n0 x n_fine
  ComplexSparseMatrix A0_matrix;
  std::shared_ptr<ComplexDirectSolver> A0;
  std::vector<int> column_offset;  // first spanning column of each subdomain, plus n0_spanning
  std::vector<int> kept_columns;   // spanning index of each retained column
  std::vector<EdgeSpace> edges;
  std::vector<LocalMultiscaleSpace> locals;
  int resonance_count = 0;

  int max_local_dimension() const
  {
    int m = 0;
    for (const auto &l : locals)
    {
      m = std::max(m, l.dimension());
    }
    return m;
  }
};

// Dense factorization up to this coarse dimension, sparse LU above it.
inline constexpr int coarse_dense_limit = 5000;

// Columns whose pivoted-QR diagonal falls below this, relative to the largest, are treated
// as linearly dependent.
inline constexpr double coarse_dependency_tol = 1e-6;

// The column selection runs on the dense spanning matrix; above this many entries a
// singular A0 is reported instead.
inline constexpr double coarse_dependency_max_entries = 5e7;

namespace detail
{

// Indices of a maximal linearly independent column subset of B, in ascending order.
inline std::vector<int> independent_columns(const RealSparseMatrix &B)
{
  Eigen::ColPivHouseholderQR<RealDenseMatrix> qr{RealDenseMatrix(B)};
  qr.setThreshold(coarse_dependency_tol);
  const int r = static_cast<int>(qr.rank());
  std::vector<int> keep(r);
  const auto &perm = qr.colsPermutation().indices();
  for (int j = 0; j < r; j++)
  {
    keep[j] = perm[j];
  }
  std::sort(keep.begin(), keep.end());
  return keep;
}

inline ComplexSparseMatrix galerkin(const ComplexSparseMatrix &A, const RealSparseMatrix &R0T)
{
  const ComplexSparseMatrix AR = A * R0T.cast<Complex>();
  ComplexSparseMatrix A0 = RealSparseMatrix(R0T.transpose()).cast<Complex>() * AR;
  A0.makeCompressed();
  return A0;
}

}  // namespace detail

inline CoarseSpace build_coarse_space(std::span<const Subdomain> subs, const PartitionOfUnity &pou,
                                      const FineMesh &mesh, const WavenumberField &kfield,
                                      int level, const ComplexSparseMatrix &A)
{
  Require(pou.chi.size() == subs.size(), "build_coarse_space: partition of unity mismatch");
  CoarseSpace cs;
  cs.level = level;
  cs.n_fine = mesh.num_nodes();
  const int N = static_cast<int>(subs.size());
  cs.edges.reserve(N);
  cs.locals.reserve(N);
  cs.column_offset.push_back(0);
  for (int i = 0; i < N; i++)
  {
    const auto parts = assemble_local_parts(subs[i], mesh, kfield);
    const LocalDirichletSolver solver(subs[i], parts);
    cs.edges.push_back(build_edge_space(subs[i], mesh, level));
    cs.locals.push_back(build_local_space(solver, cs.edges.back()));
    cs.resonance_count += solver.resonance_flag() ? 1 : 0;
    cs.column_offset.push_back(cs.column_offset.back() + cs.locals.back().dimension());
  }
  cs.n0_spanning = cs.column_offset.back();

  std::vector<Eigen::Triplet<double, int>> t;
  for (int i = 0; i < N; i++)
  {
    const auto &ls = cs.locals[i];
    const auto &chi = pou.chi[i];
    for (int j = 0; j < ls.dimension(); j++)
    {
      const int col = cs.column_offset[i] + j;
      for (int l = 0; l < subs[i].num_nodes(); l++)
      {
        const double v = chi[l] * (j + 1 < ls.dimension() ? ls.harmonic_extensions(l, j)
                                                           : ls.bubble[l]);
        if (v != 0.0)
        {
          t.emplace_back(subs[i].nodes[l], col, v);
        }
      }
    }
  }
  cs.R0T.resize(cs.n_fine, cs.n0_spanning);
  cs.R0T.setFromTriplets(t.begin(), t.end());
  cs.n0 = cs.n0_spanning;
  cs.kept_columns.resize(cs.n0);
  std::iota(cs.kept_columns.begin(), cs.kept_columns.end(), 0);

  // The basis is real, so R0 = (R0^T)^H is a plain transpose.
  auto factorize = [&]()
  {
    cs.R0 = cs.R0T.transpose();
    cs.A0_matrix = detail::galerkin(A, cs.R0T);
    const auto backend = cs.n0 <= coarse_dense_limit ? ComplexDirectSolver::Backend::Dense
                                                     : ComplexDirectSolver::Backend::Sparse;
    cs.A0 = std::make_shared<ComplexDirectSolver>(cs.A0_matrix, backend);
  };
  std::string failure;
  try
  {
    factorize();
    return cs;
  }
  catch (const Error &err)
  {
    failure = err.what();
  }

  // A singular A0 from a redundant spanning set: span R0^T does not depend on which maximal
  // independent subset is kept, and neither does the coarse correction.
  if (static_cast<double>(cs.n_fine) * cs.n0_spanning <= coarse_dependency_max_entries)
  {
    const RealSparseMatrix spanning = cs.R0T;
    cs.kept_columns = detail::independent_columns(spanning);
    cs.n0 = static_cast<int>(cs.kept_columns.size());
    if (cs.n0 < cs.n0_spanning)
    {
      RealSparseMatrix select(cs.n0_spanning, cs.n0);
      std::vector<Eigen::Triplet<double, int>> st;
      for (int j = 0; j < cs.n0; j++)
      {
        st.emplace_back(cs.kept_columns[j], j, 1.0);
      }
      select.setFromTriplets(st.begin(), st.end());
      cs.R0T = spanning * select;
      try
      {
        factorize();
        return cs;
      }
      catch (const Error &err)
      {
        failure = err.what();
      }
    }
  }
  std::string nullity = "unknown";
  if (cs.n0 <= coarse_dense_limit)
  {
    Eigen::FullPivLU<ComplexDenseMatrix> lu{ComplexDenseMatrix(cs.A0_matrix)};
    lu.setThreshold(1e-12);
    nullity = std::to_string(lu.dimensionOfKernel());
  }
  throw Error("build_coarse_space: coarse operator A0 is rank deficient (null space "
              "dimension " + nullity + " with " + std::to_string(cs.n0) +
              " independent columns, resonant local problems: " +
              std::to_string(cs.resonance_count) + "): " + failure);
}

// P_{i,l} v: harmonic extension of the L2 edge projection of the trace of v (a local vector).
inline ComplexVector local_projection(const CoarseSpace &cs, const Subdomain &sub,
                                      const ComplexVector &v_local)
{
  const auto &es = cs.edges[sub.id];
  const ComplexVector c = l2_edge_projection(es, boundary_values_of(sub, v_local));
  return cs.locals[sub.id].harmonic_extensions.cast<Complex>() * c;
}

// P_0 v = sum_i R~_i^T P_{i,l}(v|Omega_i)
inline ComplexVector global_projection(const CoarseSpace &cs, std::span<const Subdomain> subs,
                                       const PartitionOfUnity &pou, const ComplexVector &v)
{
  ComplexVector out = ComplexVector::Zero(v.size());
  for (const auto &s : subs)
  {
    weighted_prolong_add(s, pou.chi[s.id], local_projection(cs, s, restrict_to(s, v)), out);
  }
  return out;
}

// Binary dump: int64 n_fine, int64 n0, then the basis as column-major complex doubles.
inline void write_coarse_basis(const std::string &path, const CoarseSpace &cs)
{
  std::ofstream out(path, std::ios::binary);
  Require(static_cast<bool>(out), "cannot open " + path + " for writing");
  const std::int64_t header[2] = {cs.n_fine, cs.n0};
  out.write(reinterpret_cast<const char *>(header), sizeof(header));
  const RealSparseColMatrix B = cs.R0T;
  std::vector<Complex> col(cs.n_fine);
  for (int c = 0; c < cs.n0; c++)
  {
    std::fill(col.begin(), col.end(), Complex(0.0));
    for (RealSparseColMatrix::InnerIterator it(B, c); it; ++it)
    {
      col[it.row()] = it.value();
    }
    out.write(reinterpret_cast<const char *>(col.data()),
              static_cast<std::streamsize>(col.size() * sizeof(Complex)));
  }
  Require(static_cast<bool>(out), "write error on " + path);
}

}  // namespace emshs

#endif  // EMSHS_COARSE_HPP
