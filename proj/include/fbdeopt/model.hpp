#pragma once

#include <memory>
#include <string>
#include <vector>

#include "fbdeopt/types.hpp"

namespace fbdeopt {

/// Inequality constraint c(x, u) <= 0, applied at every step of the horizon.
/// Gradients and Hessians are taken over the joint (x, u) vector.
class Constraint {
 public:
  virtual ~Constraint() = default;
  virtual double value(const VectorXd& x, const VectorXd& u) const = 0;
  virtual VectorXd gradient(const VectorXd& x, const VectorXd& u) const = 0;
  virtual MatrixXd hessian(const VectorXd& x, const VectorXd& u) const = 0;
};

using ConstraintPtr = std::shared_ptr<const Constraint>;

/// One-sided bound on a control component, in c <= 0 form:
/// upper bound gives u[c] - b <= 0, lower bound gives b - u[c] <= 0.
class ControlBound : public Constraint {
 public:
  enum class Side { Lower, Upper };

  ControlBound(int state_dim, int control_dim, int component, Side side, double bound);

  double value(const VectorXd& x, const VectorXd& u) const override;
  VectorXd gradient(const VectorXd& x, const VectorXd& u) const override;
  MatrixXd hessian(const VectorXd& x, const VectorXd& u) const override;

 private:
  int n_, m_, component_;
  Side side_;
  double bound_;
};

/// Circular keep-out zone on the first two state components:
/// r^2 - (x - cx)^2 - (y - cy)^2 <= 0.
class KeepOutZone : public Constraint {
 public:
  KeepOutZone(int state_dim, int control_dim, double cx, double cy, double radius);

  double value(const VectorXd& x, const VectorXd& u) const override;
  VectorXd gradient(const VectorXd& x, const VectorXd& u) const override;
  MatrixXd hessian(const VectorXd& x, const VectorXd& u) const override;

  double center_x() const { return cx_; }
  double center_y() const { return cy_; }
  double radius() const { return r_; }

 private:
  int n_, m_;
  double cx_, cy_, r_;
};

/// Discrete-time system with running cost and per-step inequality
/// constraints. All evaluations are pure and safe to call concurrently;
/// derived classes must not mutate state inside the virtual evaluators.
///
/// Second derivatives of the dynamics are exposed only in weight-contracted
/// form w . d2f, the shape consumed by the Hessian sweeps.
class SystemModel {
 public:
  SystemModel(Dims dims, int horizon, std::vector<ConstraintPtr> constraints);
  virtual ~SystemModel() = default;

  const Dims& dims() const { return dims_; }
  /// Largest valid step index N; controls and costs run over k = 0..N.
  int horizon() const { return horizon_; }

  virtual VectorXd dynamics(int k, const VectorXd& x, const VectorXd& u) const = 0;
  virtual MatrixXd dynamics_jac_x(int k, const VectorXd& x, const VectorXd& u) const = 0;
  virtual MatrixXd dynamics_jac_u(int k, const VectorXd& x, const VectorXd& u) const = 0;
  /// Contraction sum_a w[a] * d2 f_a / d(x,u)^2, shape (n+m) x (n+m).
  virtual MatrixXd dynamics_hess_contract(int k, const VectorXd& x, const VectorXd& u,
                                          const VectorXd& w) const = 0;

  virtual double running_cost(int k, const VectorXd& x, const VectorXd& u) const = 0;
  /// d L / d(x,u), length n+m.
  virtual VectorXd running_cost_gradient(int k, const VectorXd& x, const VectorXd& u) const = 0;
  virtual MatrixXd running_cost_hessian(int k, const VectorXd& x, const VectorXd& u) const = 0;

  int num_constraints() const { return dims_.l; }
  const std::vector<ConstraintPtr>& constraints() const { return constraints_; }
  double constraint(int i, const VectorXd& x, const VectorXd& u) const;
  VectorXd constraint_gradient(int i, const VectorXd& x, const VectorXd& u) const;
  MatrixXd constraint_hessian(int i, const VectorXd& x, const VectorXd& u) const;

  void check_state(const VectorXd& x) const;
  void check_control(const VectorXd& u) const;
  void check_step(int k) const;

 private:
  Dims dims_;
  int horizon_;
  std::vector<ConstraintPtr> constraints_;
};

using ModelPtr = std::shared_ptr<const SystemModel>;

/// Parameters of the discrete unicycle tracking model. The reference
/// velocity tables are per-step so time-varying references are allowed;
/// the reference pose table is generated by rolling the dynamics from
/// ref_start under (v_ref, omega_ref).
struct AgvParams {
  double delta = 0.05;
  MatrixXd Q;          // 3x3, positive semi-definite
  MatrixXd R;          // 2x2, positive definite
  VectorXd v_ref;      // length >= N+1
  VectorXd omega_ref;  // length >= N+1
  VectorXd ref_start;  // reference pose at step 0, length 3
};

/// Rolls the discrete unicycle forward under the given velocity tables.
std::vector<VectorXd> roll_agv_reference(double delta, const VectorXd& start_pose,
                                         const VectorXd& v_ref, const VectorXd& omega_ref);

ModelPtr make_agv_model(const AgvParams& params, int horizon,
                        std::vector<ConstraintPtr> constraints = {});

/// AGV model with explicit reference tables (x_ref and u_ref of length
/// horizon+1). Used for receding-horizon windows, where the pose table is
/// a slice of a precomputed global reference rather than a fresh rollout.
ModelPtr make_agv_model_with_reference(double delta, const MatrixXd& Q, const MatrixXd& R,
                                       std::vector<VectorXd> x_ref, std::vector<VectorXd> u_ref,
                                       std::vector<ConstraintPtr> constraints = {});

/// Linear dynamics x+ = Ax + Bu with cost (x - x_ref)'Q(x - x_ref) + u'R u.
ModelPtr make_lti_model(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                        const MatrixXd& R, const VectorXd& x_ref, int horizon,
                        std::vector<ConstraintPtr> constraints = {});

StateTrajectory rollout(const SystemModel& model, const VectorXd& x0, const ControlSequence& u);

double total_cost(const SystemModel& model, const StateTrajectory& x, const ControlSequence& u);

/// Finite-difference self check of every derivative a model exposes.
struct DerivativeCheck {
  std::string block;
  double max_rel_error = 0.0;
};

struct DerivativeReport {
  std::vector<DerivativeCheck> blocks;
  double tolerance = 1e-5;

  bool passed() const;
  double worst_error() const;
  std::string summary() const;
};

DerivativeReport self_check_derivatives(const SystemModel& model, int samples, unsigned seed);

}  // namespace fbdeopt
