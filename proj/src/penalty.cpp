#include "fbdeopt/penalty.hpp"

#include <cmath>
#include <limits>

namespace fbdeopt {

AugmentedProblem::AugmentedProblem(ModelPtr model, PenaltyState penalty, VectorXd initial_state)
    : model_(std::move(model)), penalty_(std::move(penalty)), x0_(std::move(initial_state)) {
  if (!model_) throw std::invalid_argument("AugmentedProblem: null model");
  model_->check_state(x0_);
  if (penalty_.multipliers.num_constraints() != model_->dims().l ||
      penalty_.multipliers.steps() != model_->horizon() + 1) {
    throw std::invalid_argument("AugmentedProblem: multiplier table shape does not match model");
  }
  if (!(penalty_.sigma > 0.0)) {
    throw std::invalid_argument("AugmentedProblem: penalty parameter must be positive");
  }
}

double AugmentedProblem::running_cost(int k, const VectorXd& x, const VectorXd& u) const {
  model_->check_step(k);
  double value = model_->running_cost(k, x, u);
  const double sigma = penalty_.sigma;
  for (int i = 0; i < model_->dims().l; ++i) {
    const double gamma = penalty_.multipliers(i, k);
    const double active = std::max(0.0, gamma + sigma * model_->constraint(i, x, u));
    value += (active * active - gamma * gamma) / (2.0 * sigma);
  }
  return value;
}

VectorXd AugmentedProblem::running_cost_gradient(int k, const VectorXd& x,
                                                 const VectorXd& u) const {
  model_->check_step(k);
  VectorXd grad = model_->running_cost_gradient(k, x, u);
  const double sigma = penalty_.sigma;
  for (int i = 0; i < model_->dims().l; ++i) {
    const double gamma = penalty_.multipliers(i, k);
    const double active = gamma + sigma * model_->constraint(i, x, u);
    if (active > 0.0) {
      grad += active * model_->constraint_gradient(i, x, u);
    }
  }
  return grad;
}

void AugmentedProblem::running_cost_derivatives(int k, const VectorXd& x, const VectorXd& u,
                                                VectorXd& grad, MatrixXd& hess) const {
  model_->check_step(k);
  grad = model_->running_cost_gradient(k, x, u);
  hess = model_->running_cost_hessian(k, x, u);
  const double sigma = penalty_.sigma;
  for (int i = 0; i < model_->dims().l; ++i) {
    const double gamma = penalty_.multipliers(i, k);
    const double active = gamma + sigma * model_->constraint(i, x, u);
    // Exactly at the kink the inactive branch applies.
    if (active > 0.0) {
      const VectorXd cg = model_->constraint_gradient(i, x, u);
      grad += active * cg;
      hess += sigma * (cg * cg.transpose()) + active * model_->constraint_hessian(i, x, u);
    }
  }
}

double AugmentedProblem::total_cost(const StateTrajectory& x, const ControlSequence& u) const {
  if (static_cast<int>(x.size()) != u.steps() || u.steps() != horizon() + 1) {
    throw std::invalid_argument("AugmentedProblem::total_cost: inconsistent lengths");
  }
  double J = 0.0;
  for (int k = 0; k < u.steps(); ++k) {
    J += running_cost(k, x[static_cast<size_t>(k)], u.block(k));
  }
  if (!std::isfinite(J)) throw DivergenceError("augmented cost is not finite");
  return J;
}

double AugmentedProblem::total_cost(const ControlSequence& u) const {
  return total_cost(rollout(*model_, x0_, u), u);
}

PenaltyState update_multipliers(const PenaltyState& ps, const StateTrajectory& x,
                                const ControlSequence& u, const SystemModel& model, double beta,
                                double sigma_cap) {
  if (!(beta > 1.0)) throw std::invalid_argument("update_multipliers: beta must exceed 1");
  if (static_cast<int>(x.size()) != u.steps()) {
    throw std::invalid_argument("update_multipliers: inconsistent lengths");
  }
  PenaltyState next = ps;
  for (int k = 0; k < u.steps(); ++k) {
    for (int i = 0; i < model.dims().l; ++i) {
      const double c = model.constraint(i, x[static_cast<size_t>(k)], u.block(k));
      next.multipliers(i, k) = std::max(0.0, ps.multipliers(i, k) + ps.sigma * c);
    }
  }
  next.sigma = std::min(beta * ps.sigma, sigma_cap);
  next.outer_index = ps.outer_index + 1;
  return next;
}

double violation_measure(const PenaltyState& ps, const StateTrajectory& x,
                         const ControlSequence& u, const SystemModel& model) {
  if (static_cast<int>(x.size()) != u.steps()) {
    throw std::invalid_argument("violation_measure: inconsistent lengths");
  }
  double total = 0.0;
  for (int k = 0; k < u.steps(); ++k) {
    for (int i = 0; i < model.dims().l; ++i) {
      const double c = model.constraint(i, x[static_cast<size_t>(k)], u.block(k));
      const double term = std::max(c, -ps.multipliers(i, k) / ps.sigma);
      total += term * term;
    }
  }
  return total;
}

}  // namespace fbdeopt
