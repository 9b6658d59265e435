#pragma once

#include <vector>

#include "fbdeopt/penalty.hpp"
#include "fbdeopt/types.hpp"

namespace fbdeopt {

/// Per-step Hamiltonian H(k) = L~(x,u) + lambda_{k+1}' f(x,u), where L~ is
/// the augmented running cost. Its control-partials are the gradient blocks,
/// its state-partials drive the costate recursion.
double hamiltonian(const AugmentedProblem& ap, int k, const VectorXd& x, const VectorXd& u,
                   const VectorXd& lambda_next);

/// Backward sweep lambda_k = dH(k)/dx_k with lambda_{N+1} = 0.
CostateSequence costate_sweep(const AugmentedProblem& ap, const StateTrajectory& x,
                              const ControlSequence& u);

struct GradientResult {
  VectorXd gradient;  // stacked, length (N+1)*m
  StateTrajectory trajectory;
  CostateSequence costates;
};

/// Exact gradient of the augmented total cost with respect to the stacked
/// controls: rollout, costate sweep, then block k = dH(k)/du_k. The
/// trajectory and costates are returned for reuse by the Hessian.
GradientResult gradient(const AugmentedProblem& ap, const ControlSequence& u);

/// Per-step second-order data shared by every Hessian row: dynamics
/// Jacobians and the blocks of d2H(k) over (x, u), with the dynamics
/// curvature contracted against lambda_{k+1}.
struct HamiltonianExpansion {
  std::vector<MatrixXd> fx;   // n x n,   k = 0..N
  std::vector<MatrixXd> fu;   // n x m
  std::vector<MatrixXd> hxx;  // n x n
  std::vector<MatrixXd> hxu;  // n x m
  std::vector<MatrixXd> huu;  // m x m
  int n = 0;
  int m = 0;

  int horizon() const { return static_cast<int>(fx.size()) - 1; }
};

HamiltonianExpansion expand_hamiltonian(const AugmentedProblem& ap, const StateTrajectory& x,
                                        const CostateSequence& lam, const ControlSequence& u);

/// Auxiliary costates of one Hessian row: mu propagates the influence of the
/// perturbed control component forward, eta carries the resulting cost
/// sensitivity backward. mu_k = 0 for all k <= j.
struct RowCostates {
  MatrixXd mu;   // n x (N+1), column k  holds mu_k,  k = 0..N
  MatrixXd eta;  // n x (N+1), column k-1 holds eta_k, k = 1..N+1
};

RowCostates row_costates(const HamiltonianExpansion& ex, int j, int p);

/// Row (j*m + p) of the Hessian: the gradient of dH(j)/du_{j,p} with respect
/// to all controls, under both the forward dynamics and the backward costate
/// recursion. Block k of the row is
///   1{k=j} huu(j).row(p) + eta_{k+1}' fu(k) + mu_k' hxu(k).
Eigen::RowVectorXd hessian_row(const HamiltonianExpansion& ex, int j, int p);
Eigen::RowVectorXd hessian_row(const AugmentedProblem& ap, const StateTrajectory& x,
                               const CostateSequence& lam, const ControlSequence& u, int j, int p);

/// All rows, no symmetrization. Rows are independent given the expansion and
/// are split across `threads`; the result is identical for any thread count.
MatrixXd assemble_hessian_rows(const AugmentedProblem& ap, const ControlSequence& u,
                               const StateTrajectory& x, const CostateSequence& lam,
                               int threads = 1);

/// Hessian of the augmented total cost over the stacked controls,
/// symmetrized as (H + H')/2 to remove rounding skew.
MatrixXd hessian(const AugmentedProblem& ap, const ControlSequence& u, int threads = 1);
MatrixXd hessian(const AugmentedProblem& ap, const ControlSequence& u, const StateTrajectory& x,
                 const CostateSequence& lam, int threads = 1);

/// Central-difference oracles. fd_gradient differences the scalar augmented
/// cost; fd_hessian differences the analytic gradient columnwise.
VectorXd fd_gradient(const AugmentedProblem& ap, const ControlSequence& u, double h);
MatrixXd fd_hessian(const AugmentedProblem& ap, const ControlSequence& u, double h);

double default_fd_gradient_step(const ControlSequence& u);
double default_fd_hessian_step(const ControlSequence& u);

}  // namespace fbdeopt
