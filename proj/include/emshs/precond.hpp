// Copyright the emshs authors. All Rights Reserved.
// SPDX-License-Identifier: Apache-2.0

#ifndef EMSHS_PRECOND_HPP
#define EMSHS_PRECOND_HPP

#include <atomic>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>
#include "emshs/coarse.hpp"
#include "emshs/common.hpp"
#include "emshs/dd.hpp"
#include "emshs/fem.hpp"
#include "emshs/linalg.hpp"
#include "emshs/mesh.hpp"

namespace emshs
{

enum class PrecondMode
{
  OneLevel,
  Hybrid,
  CoarseOnly
};

inline std::string to_string(PrecondMode m)
{
  switch (m)
  {
    case PrecondMode::OneLevel:
      return "one-level";
    case PrecondMode::Hybrid:
      return "hybrid";
    case PrecondMode::CoarseOnly:
      return "coarse-only";
  }
  return "?";
}

inline PrecondMode precond_mode_from_string(const std::string &s)
{
  if (s == "one-level")
  {
    return PrecondMode::OneLevel;
  }
  if (s == "hybrid")
  {
    return PrecondMode::Hybrid;
  }
  if (s == "coarse-only")
  {
    return PrecondMode::CoarseOnly;
  }
  throw Error("unknown preconditioner mode '" + s + "' (one-level | hybrid | coarse-only)");
}

// Everything that defines the discrete problem and its overlapping decomposition.
struct Discretization
{
  FineMesh mesh;
  CoarseGrid coarse;
  WavenumberField kfield;
  std::vector<Subdomain> subdomains;
  PartitionOfUnity pou;
  ComplexSparseMatrix A;
  RealSparseMatrix gram;  // V-norm Gram matrix
  std::vector<std::string> warnings;
};

inline std::shared_ptr<Discretization> make_discretization(int dim, int fine_cells, int coarse_cells,
                                                           const WavenumberField &kfield,
                                                           int overlap_layers)
{
  auto d = std::make_shared<Discretization>();
  d->mesh = build_fine_mesh(dim, fine_cells);
  d->coarse = build_coarse_grid(d->mesh, coarse_cells);
  d->kfield = kfield;
  d->subdomains = build_subdomains(d->mesh, d->coarse, overlap_layers, &d->warnings);
  d->pou = build_pou(d->subdomains, d->mesh);
  const auto parts = assemble_global_parts(d->mesh, kfield);
  d->A = combine_helmholtz(parts);
  d->gram = vnorm_gram(parts);
  return d;
}

//
// One-level RAS-imp, the coarse correction and the hybrid combination
//   B_hybrid = R0^T A0^{-1} R0 (I - A B_RAS) + B_RAS.
// Setup factorizes every A_i once; applies are read-only apart from solve counters.
//
class PrecondStack
{
public:
  struct Counters
  {
    std::atomic<long> local_solves{0};
    std::atomic<long> coarse_solves{0};
    std::atomic<long> applies{0};
  };

  PrecondStack(std::shared_ptr<const Discretization> disc, std::optional<CoarseSpace> coarse,
               PrecondMode mode)
    : disc_(std::move(disc)), mode_(mode), counters_(std::make_shared<Counters>())
  {
    Require(mode == PrecondMode::OneLevel || coarse.has_value(),
            "preconditioner mode " + to_string(mode) + " needs a coarse space");
    if (coarse)
    {
      coarse_ = std::make_shared<CoarseSpace>(std::move(*coarse));
    }
    const auto &subs = disc_->subdomains;
    locals_.reserve(subs.size());
    for (const auto &s : subs)
    {
      try
      {
        locals_.emplace_back(std::make_shared<ComplexDirectSolver>(
            assemble_local_impedance(s, disc_->mesh, disc_->kfield),
            ComplexDirectSolver::Backend::Sparse));
      }
      catch (const Error &err)
      {
        throw Error("local impedance factorization failed on subdomain " + std::to_string(s.id) +
                    ": " + err.what());
      }
    }
  }

  PrecondMode mode() const { return mode_; }
  int num_subdomains() const { return static_cast<int>(locals_.size()); }
  int size() const { return disc_->mesh.num_nodes(); }
  const Discretization &discretization() const { return *disc_; }
  const CoarseSpace *coarse_space() const { return coarse_.get(); }
  const Counters &counters() const { return *counters_; }
  void reset_counters() const
  {
    counters_->local_solves = 0;
    counters_->coarse_solves = 0;
    counters_->applies = 0;
  }

  ComplexVector apply_A(const ComplexVector &x) const { return disc_->A * x; }
  ComplexVector apply_A_adjoint(const ComplexVector &x) const { return disc_->A.adjoint() * x; }

  // A_i^{-1} w_i for a local vector.
  ComplexVector local_solve(int i, const ComplexVector &w) const
  {
    counters_->local_solves++;
    return locals_.at(i)->solve(w);
  }

  // sum_i R~_i^T A_i^{-1} R_i r, accumulated in ascending subdomain order.
  ComplexVector apply_ras(const ComplexVector &r) const
  {
    check_size(r);
    const auto &subs = disc_->subdomains;
    ComplexVector out = ComplexVector::Zero(r.size());
    for (std::size_t i = 0; i < subs.size(); i++)
    {
      weighted_prolong_add(subs[i], disc_->pou.chi[i], local_solve(i, restrict_to(subs[i], r)), out);
    }
    return out;
  }

  // R0^T A0^{-1} R0 r
  ComplexVector apply_coarse(const ComplexVector &r) const
  {
    check_size(r);
    Require(coarse_ != nullptr, "apply_coarse: no coarse space");
    counters_->coarse_solves++;
    const ComplexVector r0 = apply_real(coarse_->R0, r);
    return apply_real(coarse_->R0T, coarse_->A0->solve(r0));
  }

  // e1 = B_RAS r, r1 = r - A e1, e2 = R0^T A0^{-1} R0 r1; returns e1 + e2.
  ComplexVector apply_hybrid(const ComplexVector &r) const
  {
    const ComplexVector e1 = apply_ras(r);
    const ComplexVector r1 = r - disc_->A * e1;
    return e1 + apply_coarse(r1);
  }

  ComplexVector apply(const ComplexVector &r) const
  {
    counters_->applies++;
    switch (mode_)
    {
      case PrecondMode::OneLevel:
        return apply_ras(r);
      case PrecondMode::Hybrid:
        return apply_hybrid(r);
      case PrecondMode::CoarseOnly:
        return apply_coarse(r);
    }
    return r;
  }

  // B_RAS^H x = sum_i R_i^T A_i^{-H} R_i (chi_i x)
  ComplexVector apply_ras_adjoint(const ComplexVector &x) const
  {
    check_size(x);
    const auto &subs = disc_->subdomains;
    ComplexVector out = ComplexVector::Zero(x.size());
    for (std::size_t i = 0; i < subs.size(); i++)
    {
      const ComplexVector w = restrict_to(subs[i], x).cwiseProduct(disc_->pou.chi[i].cast<Complex>());
      counters_->local_solves++;
      prolong_add(subs[i], locals_[i]->solve_adjoint(w), out);
    }
    return out;
  }

  ComplexVector apply_coarse_adjoint(const ComplexVector &x) const
  {
    check_size(x);
    Require(coarse_ != nullptr, "apply_coarse_adjoint: no coarse space");
    counters_->coarse_solves++;
    const ComplexVector x0 = apply_real(coarse_->R0, x);
    return apply_real(coarse_->R0T, coarse_->A0->solve_adjoint(x0));
  }

  // B_hybrid^H = (I - B_RAS^H A^H) C^H + B_RAS^H with C = R0^T A0^{-1} R0.
  ComplexVector apply_hybrid_adjoint(const ComplexVector &x) const
  {
    const ComplexVector y = apply_coarse_adjoint(x);
    return y + apply_ras_adjoint(x - apply_A_adjoint(y));
  }

  ComplexVector apply_adjoint(const ComplexVector &x) const
  {
    switch (mode_)
    {
      case PrecondMode::OneLevel:
        return apply_ras_adjoint(x);
      case PrecondMode::Hybrid:
        return apply_hybrid_adjoint(x);
      case PrecondMode::CoarseOnly:
        return apply_coarse_adjoint(x);
    }
    return x;
  }

  // Q_i v = A_i^{-1} R_i (A v), a local vector over I_i.
  ComplexVector local_schwarz(int i, const ComplexVector &v) const
  {
    check_size(v);
    return local_solve(i, restrict_to(disc_->subdomains.at(i), disc_->A * v));
  }

private:
  void check_size(const ComplexVector &r) const
  {
    Require(r.size() == size(), "preconditioner: vector of length " + std::to_string(r.size()) +
                                    ", expected " + std::to_string(size()));
  }

  std::shared_ptr<const Discretization> disc_;
  PrecondMode mode_;
  std::shared_ptr<const CoarseSpace> coarse_;
  std::vector<std::shared_ptr<ComplexDirectSolver>> locals_;
  std::shared_ptr<Counters> counters_;
};

inline CoarseSpace build_coarse_space(const Discretization &d, int level)
{
  return build_coarse_space(d.subdomains, d.pou, d.mesh, d.kfield, level, d.A);
}

}  // namespace emshs

#endif  // EMSHS_PRECOND_HPP
