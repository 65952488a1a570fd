// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_LINALG_HPP
#define EMSHS_LINALG_HPP

#include <cmath>
#include <memory>
#include <string>
#include <vector>
#include <Eigen/SparseLU>
#include <Eigen/UmfPackSupport>
#include "emshs/common.hpp"

namespace emshs
{

//
// Direct solver for a complex square system, either dense LU with partial pivoting or
// sparse LU through UMFPACK. Adjoint solves reuse the factorization when the matrix is
// complex symmetric (A^H x = b  <=>  A conj(x) = conj(b)); otherwise A^H is factorized on
// first use.
//
class ComplexDirectSolver
{
public:
  enum class Backend
  {
    Dense,
    Sparse
  };

  ComplexDirectSolver() = default;
  ComplexDirectSolver(const ComplexSparseMatrix &A, Backend backend) { factorize(A, backend); }
  ComplexDirectSolver(const ComplexDirectSolver &) = delete;
  ComplexDirectSolver &operator=(const ComplexDirectSolver &) = delete;

  void factorize(const ComplexSparseMatrix &A, Backend backend)
  {
    Require(A.rows() == A.cols(), "direct solver: matrix must be square");
    backend_ = backend;
    n_ = static_cast<int>(A.rows());
    const ComplexSparseMatrix At = A.transpose();
    symmetric_ = (ComplexSparseMatrix(A - At)).norm() <= 1e-14 * std::max(1.0, A.norm());
    if (!symmetric_)
    {
      adjoint_matrix_ = A.adjoint();
      adjoint_matrix_.makeCompressed();
    }
    adjoint_sparse_.reset();
    if (backend == Backend::Dense)
    {
      dense_.compute(ComplexDenseMatrix(A));
      rcond_ = n_ > 0 ? dense_.rcond() : 1.0;
      // Eigen's estimate divides by the pivots and reports 1 when one of them is exactly 0.
      if (n_ > 0)
      {
        const auto pivots = dense_.matrixLU().diagonal().cwiseAbs();
        if (!(pivots.minCoeff() > 0.0))
        {
          rcond_ = 0.0;
        }
      }
      Require(std::isfinite(rcond_) && rcond_ > 1e-15,
              "direct solver: dense matrix is numerically singular (rcond " +
                  std::to_string(rcond_) + ")");
    }
    else
    {
      // UmfPackLU keeps pointers into the factorized matrix, so it must outlive the solver.
      matrix_ = A;
      matrix_.makeCompressed();
      sparse_ = std::make_unique<Eigen::UmfPackLU<ComplexSparseColMatrix>>();
      sparse_->compute(matrix_);
      Require(sparse_->info() == Eigen::Success,
              "direct solver: sparse LU factorization failed (singular matrix?)");
    }
  }

  int size() const { return n_; }
  Backend backend() const { return backend_; }
  bool complex_symmetric() const { return symmetric_; }

  // Reciprocal condition estimate; only available for the dense backend.
  double rcond() const { return rcond_; }

  ComplexVector solve(const ComplexVector &b) const
  {
    Require(b.size() == n_, "direct solver: right-hand side has wrong length");
    if (n_ == 0)
    {
      return ComplexVector();
    }
    if (backend_ == Backend::Dense)
    {
      return dense_.solve(b);
    }
    ComplexVector x = sparse_->solve(b);
    return x;
  }

  ComplexVector solve_adjoint(const ComplexVector &b) const
  {
    Require(b.size() == n_, "direct solver: right-hand side has wrong length");
    if (n_ == 0)
    {
      return ComplexVector();
    }
    if (backend_ == Backend::Dense)
    {
      return dense_.adjoint().solve(b);
    }
    if (symmetric_)
    {
      const ComplexVector cb = b.conjugate();
      return solve(cb).conjugate();
    }
    if (!adjoint_sparse_)
    {
      adjoint_sparse_ = std::make_unique<Eigen::UmfPackLU<ComplexSparseColMatrix>>();
      adjoint_sparse_->compute(adjoint_matrix_);
      Require(adjoint_sparse_->info() == Eigen::Success,
              "direct solver: adjoint factorization failed");
    }
    ComplexVector x = adjoint_sparse_->solve(b);
    return x;
  }

private:
  Backend backend_ = Backend::Sparse;
  int n_ = 0;
  bool symmetric_ = true;
  double rcond_ = 1.0;
  Eigen::PartialPivLU<ComplexDenseMatrix> dense_;
  ComplexSparseColMatrix matrix_;
  std::unique_ptr<Eigen::UmfPackLU<ComplexSparseColMatrix>> sparse_;
  ComplexSparseColMatrix adjoint_matrix_;
  mutable std::unique_ptr<Eigen::UmfPackLU<ComplexSparseColMatrix>> adjoint_sparse_;
};

//
// Sparse LU of a real matrix with a Hager-Higham estimate of its 1-norm reciprocal
// condition number. The estimator needs solves with K^T; the matrices passed here are
// symmetric, so K^{-T} = K^{-1}.
//
class RealSymmetricSolver
{
public:
  void factorize(const RealSparseMatrix &K)
  {
    n_ = static_cast<int>(K.rows());
    RealSparseColMatrix Kc = K;
    Kc.makeCompressed();
    lu_ = std::make_unique<Eigen::SparseLU<RealSparseColMatrix, Eigen::COLAMDOrdering<int>>>();
    lu_->compute(Kc);
    ok_ = lu_->info() == Eigen::Success;
    rcond_ = 0.0;
    if (!ok_ || n_ == 0)
    {
      rcond_ = n_ == 0 ? 1.0 : 0.0;
      return;
    }
    double norm1 = 0.0;
    for (int c = 0; c < Kc.outerSize(); c++)
    {
      double s = 0.0;
      for (RealSparseColMatrix::InnerIterator it(Kc, c); it; ++it)
      {
        s += std::abs(it.value());
      }
      norm1 = std::max(norm1, s);
    }
    const double inv_norm1 = estimate_inverse_norm1();
    rcond_ = (std::isfinite(inv_norm1) && inv_norm1 > 0.0) ? 1.0 / (norm1 * inv_norm1) : 0.0;
  }

  bool ok() const { return ok_; }
  double rcond() const { return rcond_; }
  int size() const { return n_; }

  RealVector solve(const RealVector &b) const { return lu_->solve(b); }

  ComplexVector solve(const ComplexVector &b) const { return solve_split(*lu_, b); }

private:
  double estimate_inverse_norm1() const
  {
    const int n = n_;
    RealVector x = RealVector::Constant(n, 1.0 / n);
    double est = 0.0;
    int last_j = -1;
    for (int iter = 0; iter < 5; iter++)
    {
      const RealVector y = lu_->solve(x);
      est = std::max(est, y.lpNorm<1>());
      RealVector xi(n);
      for (int i = 0; i < n; i++)
      {
        xi[i] = y[i] >= 0.0 ? 1.0 : -1.0;
      }
      const RealVector z = lu_->solve(xi);
      int j = 0;
      z.cwiseAbs().maxCoeff(&j);
      if (iter > 0 && (z.cwiseAbs().maxCoeff() <= z.dot(x) || j == last_j))
      {
        break;
      }
      last_j = j;
      x.setZero();
      x[j] = 1.0;
    }
    // Higham's alternating test vector guards against unlucky starting vectors.
    RealVector alt(n);
    for (int i = 0; i < n; i++)
    {
      alt[i] = (i % 2 ? -1.0 : 1.0) * (1.0 + (n > 1 ? double(i) / (n - 1) : 0.0));
    }
    const RealVector y = lu_->solve(alt);
    est = std::max(est, 2.0 * y.lpNorm<1>() / (3.0 * n));
    return est;
  }

  int n_ = 0;
  bool ok_ = false;
  double rcond_ = 0.0;
  std::unique_ptr<Eigen::SparseLU<RealSparseColMatrix, Eigen::COLAMDOrdering<int>>> lu_;
};

}  // namespace emshs

#endif  // EMSHS_LINALG_HPP
