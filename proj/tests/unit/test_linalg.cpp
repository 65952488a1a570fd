// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include "emshs/linalg.hpp"
#include "oracles.hpp"

using namespace emshs;
using Backend = ComplexDirectSolver::Backend;

namespace
{

// Banded random matrix with a dominant diagonal; `symmetric` gives A = A^T.
ComplexSparseMatrix banded(int n, bool symmetric, unsigned seed)
{
  const Eigen::MatrixXcd R = oracle::random_complex_matrix(n, seed);
  std::vector<Eigen::Triplet<Complex, int>> t;
  for (int i = 0; i < n; i++)
  {
    for (int j = std::max(0, i - 2); j <= std::min(n - 1, i + 2); j++)
    {
      Complex v = R(i, j);
      if (symmetric && j < i)
      {
        v = R(j, i);
      }
      t.emplace_back(i, j, i == j ? v + 6.0 : v);
    }
  }
  ComplexSparseMatrix A(n, n);
  A.setFromTriplets(t.begin(), t.end());
  return A;
}

}  // namespace

class DirectSolver : public ::testing::TestWithParam<std::tuple<Backend, bool>>
{
};

TEST_P(DirectSolver, SolveAndAdjointMatchDense)
{
  const auto [backend, symmetric] = GetParam();
  const int n = 40;
  const ComplexSparseMatrix A = banded(n, symmetric, 7);
  const ComplexDirectSolver solver(A, backend);
  EXPECT_EQ(solver.complex_symmetric(), symmetric);
  const Eigen::MatrixXcd D(A);
  const Eigen::VectorXcd b = oracle::random_complex(n, 11);
  const Eigen::VectorXcd x = solver.solve(b);
  const Eigen::VectorXcd xa = solver.solve_adjoint(b);
  EXPECT_LT((D * x - b).norm() / b.norm(), 1e-13);
  EXPECT_LT((D.adjoint() * xa - b).norm() / b.norm(), 1e-13);
  EXPECT_LT((x - D.fullPivLu().solve(b)).norm() / x.norm(), 1e-12);
}

INSTANTIATE_TEST_SUITE_P(Backends, DirectSolver,
                         ::testing::Combine(::testing::Values(Backend::Dense, Backend::Sparse),
                                            ::testing::Bool()));

TEST(DirectSolverErrors, SingularAndShape)
{
  ComplexSparseMatrix A(3, 3);
  A.insert(0, 0) = 1.0;
  A.insert(1, 1) = 1.0;
  A.makeCompressed();
  EXPECT_THROW(ComplexDirectSolver(A, Backend::Dense), Error);
  EXPECT_THROW(ComplexDirectSolver(A, Backend::Sparse), Error);
  ComplexSparseMatrix R(2, 3);
  EXPECT_THROW(ComplexDirectSolver(R, Backend::Sparse), Error);
  A.insert(2, 2) = 1.0;
  const ComplexDirectSolver ok(A, Backend::Sparse);
  EXPECT_THROW(ok.solve(ComplexVector::Ones(2)), Error);
}

TEST(DirectSolverRcond, DenseEstimateTracksExact)
{
  const int n = 30;
  const ComplexSparseMatrix A = banded(n, true, 3);
  const ComplexDirectSolver solver(A, Backend::Dense);
  const Eigen::MatrixXcd D(A);
  const double exact =
      1.0 / (D.cwiseAbs().colwise().sum().maxCoeff() * D.inverse().cwiseAbs().colwise().sum().maxCoeff());
  EXPECT_GE(solver.rcond(), 0.3 * exact);
  EXPECT_LE(solver.rcond(), 3.0 * exact);
}

TEST(RealSolver, SolveAndConditionEstimate)
{
  // 1-d Dirichlet Laplacian: known inverse, cond_1 grows like n^2.
  const int n = 50;
  std::vector<Eigen::Triplet<double, int>> t;
  for (int i = 0; i < n; i++)
  {
    t.emplace_back(i, i, 2.0);
    if (i > 0)
    {
      t.emplace_back(i, i - 1, -1.0);
      t.emplace_back(i - 1, i, -1.0);
    }
  }
  RealSparseMatrix K(n, n);
  K.setFromTriplets(t.begin(), t.end());
  RealSymmetricSolver solver;
  solver.factorize(K);
  ASSERT_TRUE(solver.ok());
  const Eigen::MatrixXd D(K);
  const double exact = 1.0 / (D.cwiseAbs().colwise().sum().maxCoeff() *
                              D.inverse().cwiseAbs().colwise().sum().maxCoeff());
  // The estimator underestimates the inverse norm, so it never reports a worse condition.
  EXPECT_GE(solver.rcond(), exact * (1 - 1e-12));
  EXPECT_LE(solver.rcond(), 3.0 * exact);

  const Eigen::VectorXcd b = oracle::random_complex(n, 5);
  const ComplexVector x = solver.solve(ComplexVector(b));
  EXPECT_LT((D.cast<Complex>() * x - b).norm() / b.norm(), 1e-12);
}

TEST(RealSolver, SingularMatrixIsFlagged)
{
  RealSparseMatrix K(3, 3);
  K.insert(0, 0) = 1.0;
  K.insert(2, 2) = 1.0;
  K.makeCompressed();
  RealSymmetricSolver solver;
  solver.factorize(K);
  EXPECT_FALSE(solver.ok());
  EXPECT_EQ(solver.rcond(), 0.0);
}

TEST(SolveSplit, ComplexRightHandSide)
{
  const Eigen::MatrixXd D = Eigen::MatrixXd::Identity(4, 4) * 2.0;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(D);
  const Eigen::VectorXcd b = oracle::random_complex(4, 9);
  EXPECT_LT((solve_split(lu, b) - b / 2.0).norm(), 1e-15);
}
