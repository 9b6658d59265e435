#pragma once

#include <limits>
#include <memory>
#include <utility>

#include "fbdeopt/model.hpp"
#include "fbdeopt/types.hpp"

namespace fbdeopt {

/// Lagrange multipliers gamma_{i,k}, one per constraint and step.
class MultiplierTable {
 public:
  MultiplierTable(int num_constraints, int steps)
      : gamma_(MatrixXd::Zero(num_constraints, steps)) {
    if (num_constraints < 0 || steps < 1) {
      throw std::invalid_argument("MultiplierTable: bad shape");
    }
  }

  int num_constraints() const { return static_cast<int>(gamma_.rows()); }
  int steps() const { return static_cast<int>(gamma_.cols()); }

  double operator()(int i, int k) const { return gamma_(i, k); }
  double& operator()(int i, int k) { return gamma_(i, k); }

  const MatrixXd& values() const { return gamma_; }
  MatrixXd& values() { return gamma_; }

 private:
  MatrixXd gamma_;  // l x (N+1)
};

/// Penalty parameter, multipliers, and the outer-iteration index of the
/// augmented-Lagrangian loop. Updates produce a new state.
struct PenaltyState {
  double sigma;
  MultiplierTable multipliers;
  int outer_index;  // j, starting at 1

  PenaltyState(double sigma1, int num_constraints, int steps)
      : sigma(sigma1), multipliers(num_constraints, steps), outer_index(1) {
    if (!(sigma1 > 0.0)) throw std::invalid_argument("PenaltyState: sigma must be positive");
  }
};

/// A system model together with the multiplier table and penalty parameter.
/// Evaluates the per-step augmented running cost
///   L(x,u) + 1/(2 sigma) * sum_i { max(0, gamma_{i,k} + sigma c_i(x,u))^2 - gamma_{i,k}^2 }
/// and its derivatives over the joint (x, u) vector. With no constraints this
/// reduces exactly to the raw model cost.
class AugmentedProblem {
 public:
  AugmentedProblem(ModelPtr model, PenaltyState penalty, VectorXd initial_state);

  const SystemModel& model() const { return *model_; }
  const ModelPtr& model_ptr() const { return model_; }
  const PenaltyState& penalty() const { return penalty_; }
  const VectorXd& initial_state() const { return x0_; }
  int horizon() const { return model_->horizon(); }

  double running_cost(int k, const VectorXd& x, const VectorXd& u) const;
  /// Gradient (length n+m) of the augmented running cost. Cheaper than
  /// running_cost_derivatives when the Hessian is not needed.
  VectorXd running_cost_gradient(int k, const VectorXd& x, const VectorXd& u) const;
  void running_cost_derivatives(int k, const VectorXd& x, const VectorXd& u, VectorXd& grad,
                                MatrixXd& hess) const;

  double total_cost(const StateTrajectory& x, const ControlSequence& u) const;
  /// Rolls the trajectory from the stored initial state first.
  double total_cost(const ControlSequence& u) const;

  AugmentedProblem with_penalty(PenaltyState penalty) const {
    return AugmentedProblem(model_, std::move(penalty), x0_);
  }

 private:
  ModelPtr model_;
  PenaltyState penalty_;
  VectorXd x0_;
};

/// Multiplier and penalty update:
///   gamma <- max(0, gamma + sigma c),  sigma <- min(beta sigma, sigma_cap).
PenaltyState update_multipliers(const PenaltyState& ps, const StateTrajectory& x,
                                const ControlSequence& u, const SystemModel& model, double beta,
                                double sigma_cap = std::numeric_limits<double>::infinity());

/// Stopping statistic sum_i sum_k max(c_i(x_k,u_k), -gamma_{i,k}/sigma)^2.
double violation_measure(const PenaltyState& ps, const StateTrajectory& x,
                         const ControlSequence& u, const SystemModel& model);

}  // namespace fbdeopt
