// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_KRYLOV_HPP
#define EMSHS_KRYLOV_HPP

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>
#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include "emshs/common.hpp"
#include "emshs/fem.hpp"
#include "emshs/precond.hpp"

namespace emshs
{

using LinearOperator = std::function<ComplexVector(const ComplexVector &)>;

struct SolveReport
{
  int iterations = 0;
  std::vector<double> residual_history;  // relative residual, entry 0 is the initial guess
  bool converged = false;
  double final_relative_residual = 1.0;
  double wall_time = 0.0;  // seconds
  int restarts = 0;
  bool breakdown = false;
  double growth_factor = 0.0;  // fixed point only: residual growth over the last 5 steps
  std::string message;
};

enum class ResidualNorm
{
  Preconditioned,
  Unpreconditioned
};

struct BicgstabOptions
{
  double tol = 1e-8;
  int maxit = 1000;
  ResidualNorm stopping = ResidualNorm::Preconditioned;
  double breakdown_tol = 1e-30;
};

//
// Left-preconditioned BiCGSTAB for B A u = B F from the zero initial guess. One iteration
// is one full step (two applications of B A); convergence after the first half of a step
// counts that step.
//
inline ComplexVector bicgstab(const LinearOperator &apply_A, const LinearOperator &apply_B,
                              const ComplexVector &F, const BicgstabOptions &opt,
                              SolveReport &report)
{
  Require(opt.tol > 0.0, "bicgstab: tolerance must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  report = SolveReport();
  const int n = static_cast<int>(F.size());
  ComplexVector x = ComplexVector::Zero(n);
  auto finish = [&]()
  {
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.final_relative_residual = report.residual_history.back();
    if (report.converged)
    {
      report.message = "converged";
    }
    return x;
  };
  if (F.norm() == 0.0)
  {
    // u = 0 is exact; the history still starts at the nominal 1.
    report.residual_history = {1.0, 0.0};
    report.converged = true;
    return finish();
  }

  auto op = [&](const ComplexVector &v) { return apply_B(apply_A(v)); };
  const double normF = F.norm();
  ComplexVector r = apply_B(F);
  const double normBF = r.norm();
  Require(normBF > 0.0, "bicgstab: preconditioned right-hand side vanishes");
  auto relative = [&](const ComplexVector &precond_residual, const ComplexVector &iterate)
  {
    if (opt.stopping == ResidualNorm::Preconditioned)
    {
      return precond_residual.norm() / normBF;
    }
    return (F - apply_A(iterate)).norm() / normF;
  };
  report.residual_history.push_back(1.0);

  ComplexVector rhat = r, p = ComplexVector::Zero(n), v = ComplexVector::Zero(n);
  Complex rho = 1.0, alpha = 1.0, omega = 1.0;
  for (int it = 1; it <= opt.maxit; it++)
  {
    const Complex rho_new = rhat.dot(r);
    bool broke = std::abs(rho_new) < opt.breakdown_tol * rhat.norm() * r.norm();
    Complex rv = 0.0;
    if (!broke)
    {
      p = r + (rho_new / rho) * (alpha / omega) * (p - omega * v);
      v = op(p);
      rv = rhat.dot(v);
      broke = std::abs(rv) < opt.breakdown_tol * rhat.norm() * v.norm();
    }
    if (!broke)
    {
      rho = rho_new;
      alpha = rho / rv;
      const ComplexVector s = r - alpha * v;
      const ComplexVector x_half = x + alpha * p;
      const double rel_half = relative(s, x_half);
      if (rel_half <= opt.tol)
      {
        x = x_half;
        report.iterations = it;
        report.residual_history.push_back(rel_half);
        report.converged = true;
        return finish();
      }
      const ComplexVector t = op(s);
      const double tt = t.squaredNorm();
      omega = tt > 0.0 ? t.dot(s) / tt : Complex(0.0);
      broke = std::abs(omega) < opt.breakdown_tol;
      if (!broke)
      {
        x = x_half + omega * s;
        r = s - omega * t;
        report.iterations = it;
        const double rel = relative(r, x);
        report.residual_history.push_back(rel);
        if (rel <= opt.tol)
        {
          report.converged = true;
          return finish();
        }
        continue;
      }
      x = x_half;
      r = s;
    }
    // Breakdown: restart once from the current iterate with a fresh shadow residual.
    report.iterations = it;
    report.residual_history.push_back(relative(r, x));
    if (report.restarts >= 1)
    {
      report.breakdown = true;
      report.message = "BiCGSTAB breakdown after restart at iteration " + std::to_string(it);
      return finish();
    }
    report.restarts++;
    r = apply_B(F - apply_A(x));
    rhat = r;
    p.setZero();
    v.setZero();
    rho = alpha = omega = 1.0;
  }
  report.message = "maximum number of iterations reached";
  return finish();
}

struct FixedPointOptions
{
  double tol = 1e-8;
  int maxit = 1000;
  int divergence_window = 5;
};

//
// u <- u + B (F - A u) from u = 0. The relative residual is the V-norm of the
// preconditioned residual B (F - A u) against that of B F.
//
inline ComplexVector fixed_point(const LinearOperator &apply_A, const LinearOperator &apply_B,
                                 const RealSparseMatrix &gram, const ComplexVector &F,
                                 const FixedPointOptions &opt, SolveReport &report)
{
  Require(opt.tol > 0.0, "fixed_point: tolerance must be positive");
  const auto t0 = std::chrono::steady_clock::now();
  report = SolveReport();
  ComplexVector u = ComplexVector::Zero(F.size());
  auto finish = [&]()
  {
    report.wall_time =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.final_relative_residual = report.residual_history.back();
    if (report.converged)
    {
      report.message = "converged";
    }
    return u;
  };
  if (F.norm() == 0.0)
  {
    report.residual_history = {1.0, 0.0};
    report.converged = true;
    return finish();
  }
  ComplexVector z = apply_B(F);
  const double z0 = vnorm(gram, z);
  Require(z0 > 0.0, "fixed_point: preconditioned right-hand side vanishes");
  report.residual_history.push_back(1.0);
  int growth_run = 0;
  for (int it = 1; it <= opt.maxit; it++)
  {
    u += z;
    z = apply_B(F - apply_A(u));
    const double rel = vnorm(gram, z) / z0;
    report.residual_history.push_back(rel);
    report.iterations = it;
    if (rel <= opt.tol)
    {
      report.converged = true;
      return finish();
    }
    const auto &h = report.residual_history;
    growth_run = h[h.size() - 1] > h[h.size() - 2] ? growth_run + 1 : 0;
    if (growth_run >= opt.divergence_window)
    {
      report.growth_factor = h.back() / h[h.size() - 1 - opt.divergence_window];
      report.message = "fixed-point iteration diverging (residual grew over " +
                       std::to_string(opt.divergence_window) + " consecutive steps)";
      return finish();
    }
  }
  report.message = "maximum number of iterations reached";
  return finish();
}

// Convenience wrappers bound to a preconditioner stack.
inline ComplexVector bicgstab(const PrecondStack &stack, const ComplexVector &F,
                              const BicgstabOptions &opt, SolveReport &report)
{
  return bicgstab([&](const ComplexVector &x) { return stack.apply_A(x); },
                  [&](const ComplexVector &x) { return stack.apply(x); }, F, opt, report);
}

inline ComplexVector fixed_point(const PrecondStack &stack, const ComplexVector &F,
                                 const FixedPointOptions &opt, SolveReport &report)
{
  return fixed_point([&](const ComplexVector &x) { return stack.apply_A(x); },
                     [&](const ComplexVector &x) { return stack.apply(x); },
                     stack.discretization().gram, F, opt, report);
}

struct ContractionEstimate
{
  double estimate = 0.0;         // sqrt of the largest Ritz value
  std::vector<double> history;   // estimate after each Lanczos step
};

//
// V-norm of E = I - B A, i.e. the square root of the largest eigenvalue of G^{-1} E^H G E,
// which is self-adjoint in the G inner product. Lanczos with full reorthogonalization; the
// Ritz value is a lower bound that is exact once the Krylov space is invariant.
//
inline ContractionEstimate contraction_estimate(const LinearOperator &apply_E,
                                                const LinearOperator &apply_E_adjoint,
                                                const RealSparseMatrix &gram, int n_iters,
                                                std::uint64_t seed = 1)
{
  const int n = static_cast<int>(gram.rows());
  Eigen::SimplicialLLT<RealSparseColMatrix> chol{RealSparseColMatrix(gram)};
  Require(chol.info() == Eigen::Success, "contraction_estimate: Gram matrix is not SPD");
  auto G = [&](const ComplexVector &x) { return apply_real(gram, x); };
  auto Ginv = [&](const ComplexVector &x) { return solve_split(chol, x); };
  auto T = [&](const ComplexVector &x) { return Ginv(apply_E_adjoint(G(apply_E(x)))); };
  auto gdot = [&](const ComplexVector &a, const ComplexVector &b) { return a.dot(G(b)); };

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ComplexVector q(n);
  for (int j = 0; j < n; j++)
  {
    q[j] = Complex(normal(rng), normal(rng));
  }
  q /= std::sqrt(gdot(q, q).real());

  ContractionEstimate out;
  const int m = std::min(n_iters, n);
  std::vector<ComplexVector> Q;
  std::vector<double> alpha, beta;
  for (int j = 0; j < m; j++)
  {
    Q.push_back(q);
    ComplexVector w = T(q);
    alpha.push_back(gdot(q, w).real());
    for (int pass = 0; pass < 2; pass++)
    {
      for (const auto &qi : Q)
      {
        w -= gdot(qi, w) * qi;
      }
    }
    const int k = static_cast<int>(alpha.size());
    RealDenseMatrix Tk = RealDenseMatrix::Zero(k, k);
    for (int i = 0; i < k; i++)
    {
      Tk(i, i) = alpha[i];
      if (i + 1 < k)
      {
        Tk(i, i + 1) = Tk(i + 1, i) = beta[i];
      }
    }
    Eigen::SelfAdjointEigenSolver<RealDenseMatrix> eig(Tk, Eigen::EigenvaluesOnly);
    out.estimate = std::sqrt(std::max(0.0, eig.eigenvalues().maxCoeff()));
    out.history.push_back(out.estimate);
    const double b = std::sqrt(std::max(0.0, gdot(w, w).real()));
    if (b <= 1e-12 * std::max(1.0, std::abs(alpha.back())))
    {
      break;
    }
    beta.push_back(b);
    q = w / b;
  }
  return out;
}

inline ContractionEstimate contraction_estimate(const PrecondStack &stack, int n_iters,
                                                std::uint64_t seed = 1)
{
  auto E = [&](const ComplexVector &x) { return ComplexVector(x - stack.apply(stack.apply_A(x))); };
  auto EH = [&](const ComplexVector &x)
  { return ComplexVector(x - stack.apply_A_adjoint(stack.apply_adjoint(x))); };
  return contraction_estimate(E, EH, stack.discretization().gram, n_iters, seed);
}

//
// Advisory evaluation of the coarse-size and level conditions of the convergence theory with
// every analysis constant set to 1.
//
struct ConditionReport
{
  double H_threshold = 0.0;  // delta^{1/2} (2 k C_est^2)^{-1/2}
  bool H_ok = false;
  double level_threshold = 0.0;  // 2 log2(C_est delta^{-1} H (kH)^{-3/2} (kh)^{-1/2} (k delta)^{-1}) + 4
  bool level_ok = false;
  double C_est = 1.0;
  bool C_est_available = false;
  // Asymptotic guidance for delta = h = k^{-3/2} and for delta ~ H.
  double H_guidance_minimal_overlap = 0.0;      // k^{-5/4}
  double level_guidance_minimal_overlap = 0.0;  // log2(k^{11/8})
  double H_guidance_generous_overlap = 0.0;     // k^{-1}
  double level_guidance_generous_overlap = 0.0; // log2(k^{1/4})
};

inline ConditionReport check_conditions(double k, double h, double H, double delta, int level,
                                        std::optional<double> C_est)
{
  ConditionReport rep;
  rep.C_est_available = C_est.has_value();
  rep.C_est = C_est.value_or(1.0);
  const double c = rep.C_est;
  rep.H_threshold = std::sqrt(delta) / std::sqrt(2.0 * k * c * c);
  rep.H_ok = H <= rep.H_threshold;
  rep.level_threshold = 2.0 * std::log2(c / delta * H * std::pow(k * H, -1.5) *
                                        std::pow(k * h, -0.5) / (k * delta)) +
                        4.0;
  rep.level_ok = level >= rep.level_threshold;
  rep.H_guidance_minimal_overlap = std::pow(k, -1.25);
  rep.level_guidance_minimal_overlap = std::log2(std::pow(k, 11.0 / 8.0));
  rep.H_guidance_generous_overlap = 1.0 / k;
  rep.level_guidance_generous_overlap = std::log2(std::pow(k, 0.25));
  return rep;
}

}  // namespace emshs

#endif  // EMSHS_KRYLOV_HPP
