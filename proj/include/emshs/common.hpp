// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_COMMON_HPP
#define EMSHS_COMMON_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace emshs
{

using Complex = std::complex<double>;

// Node-indexed coefficient vectors.
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using ComplexDenseMatrix = Eigen::MatrixXcd;
using RealDenseMatrix = Eigen::MatrixXd;

// Compressed-sparse-row storage with sorted column indices per row.
using ComplexSparseMatrix = Eigen::SparseMatrix<Complex, Eigen::RowMajor, int>;
using RealSparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor, int>;

// Column-major variants, used where a factorization or column access needs them.
using ComplexSparseColMatrix = Eigen::SparseMatrix<Complex, Eigen::ColMajor, int>;
using RealSparseColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

// Raised when a configuration is valid in principle but not supported by this build
// (for example edge spaces of level > 0 in three dimensions).
class UnsupportedError : public Error
{
public:
  using Error::Error;
};

// Applies a real solver to the real and imaginary parts of a complex right-hand side.
// The results go through real temporaries; some Eigen solvers misbehave when asked to
// write straight into the strided real/imaginary views of a complex vector.
template <typename RealSolver>
Eigen::VectorXcd solve_split(const RealSolver &solver, const Eigen::VectorXcd &b)
{
  const Eigen::VectorXd re = solver.solve(Eigen::VectorXd(b.real()));
  const Eigen::VectorXd im = solver.solve(Eigen::VectorXd(b.imag()));
  Eigen::VectorXcd x(b.size());
  for (Eigen::Index i = 0; i < b.size(); i++)
  {
    x[i] = Complex(re[i], im[i]);
  }
  return x;
}

inline void Require(bool condition, const std::string &message)
{
  if (!condition)
  {
    throw Error(message);
  }
}

}  // namespace emshs

#endif  // EMSHS_COMMON_HPP
