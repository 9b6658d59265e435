#include "fbdeopt/model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include <Eigen/Dense>

namespace fbdeopt {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

void require_symmetric(const MatrixXd& M, const std::string& name) {
  require(M.rows() == M.cols(), name + " must be square");
  require((M - M.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + M.cwiseAbs().maxCoeff()),
          name + " must be symmetric");
}

void require_psd(const MatrixXd& M, const std::string& name) {
  require_symmetric(M, name);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
  require(es.eigenvalues().minCoeff() >= -1e-10 * (1.0 + es.eigenvalues().cwiseAbs().maxCoeff()),
          name + " must be positive semi-definite");
}

void require_pd(const MatrixXd& M, const std::string& name) {
  require_symmetric(M, name);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(M);
  require(es.eigenvalues().minCoeff() > 0.0, name + " must be positive definite");
}

}  // namespace

// ---------------------------------------------------------------------------
// Constraints

ControlBound::ControlBound(int state_dim, int control_dim, int component, Side side, double bound)
    : n_(state_dim), m_(control_dim), component_(component), side_(side), bound_(bound) {
  require(state_dim >= 1 && control_dim >= 1, "ControlBound: bad dimensions");
  require(component >= 0 && component < control_dim, "ControlBound: component out of range");
  require(std::isfinite(bound), "ControlBound: bound must be finite");
}

double ControlBound::value(const VectorXd&, const VectorXd& u) const {
  return side_ == Side::Upper ? u(component_) - bound_ : bound_ - u(component_);
}

VectorXd ControlBound::gradient(const VectorXd&, const VectorXd&) const {
  VectorXd g = VectorXd::Zero(n_ + m_);
  g(n_ + component_) = side_ == Side::Upper ? 1.0 : -1.0;
  return g;
}

MatrixXd ControlBound::hessian(const VectorXd&, const VectorXd&) const {
  return MatrixXd::Zero(n_ + m_, n_ + m_);
}

KeepOutZone::KeepOutZone(int state_dim, int control_dim, double cx, double cy, double radius)
    : n_(state_dim), m_(control_dim), cx_(cx), cy_(cy), r_(radius) {
  require(state_dim >= 2, "KeepOutZone: needs at least two state components");
  require(control_dim >= 1, "KeepOutZone: bad control dimension");
  require(radius > 0.0, "KeepOutZone: radius must be positive");
}

double KeepOutZone::value(const VectorXd& x, const VectorXd&) const {
  const double dx = x(0) - cx_;
  const double dy = x(1) - cy_;
  return r_ * r_ - dx * dx - dy * dy;
}

VectorXd KeepOutZone::gradient(const VectorXd& x, const VectorXd&) const {
  VectorXd g = VectorXd::Zero(n_ + m_);
  g(0) = -2.0 * (x(0) - cx_);
  g(1) = -2.0 * (x(1) - cy_);
  return g;
}

MatrixXd KeepOutZone::hessian(const VectorXd&, const VectorXd&) const {
  MatrixXd h = MatrixXd::Zero(n_ + m_, n_ + m_);
  h(0, 0) = -2.0;
  h(1, 1) = -2.0;
  return h;
}

// ---------------------------------------------------------------------------
// SystemModel

SystemModel::SystemModel(Dims dims, int horizon, std::vector<ConstraintPtr> constraints)
    : dims_(dims), horizon_(horizon), constraints_(std::move(constraints)) {
  require(dims.n >= 1, "SystemModel: state dimension must be >= 1");
  require(dims.m >= 1, "SystemModel: control dimension must be >= 1");
  require(horizon >= 0, "SystemModel: horizon must be >= 0");
  dims_.l = static_cast<int>(constraints_.size());
  for (const auto& c : constraints_) require(c != nullptr, "SystemModel: null constraint");
}

double SystemModel::constraint(int i, const VectorXd& x, const VectorXd& u) const {
  return constraints_.at(i)->value(x, u);
}

VectorXd SystemModel::constraint_gradient(int i, const VectorXd& x, const VectorXd& u) const {
  return constraints_.at(i)->gradient(x, u);
}

MatrixXd SystemModel::constraint_hessian(int i, const VectorXd& x, const VectorXd& u) const {
  return constraints_.at(i)->hessian(x, u);
}

void SystemModel::check_state(const VectorXd& x) const {
  if (x.size() != dims_.n) {
    throw std::invalid_argument("state has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(dims_.n));
  }
}

void SystemModel::check_control(const VectorXd& u) const {
  if (u.size() != dims_.m) {
    throw std::invalid_argument("control has dimension " + std::to_string(u.size()) +
                                ", expected " + std::to_string(dims_.m));
  }
}

void SystemModel::check_step(int k) const {
  if (k < 0 || k > horizon_) {
    throw std::invalid_argument("step " + std::to_string(k) + " outside horizon 0.." +
                                std::to_string(horizon_));
  }
}

// ---------------------------------------------------------------------------
// AGV unicycle

namespace {

class AgvModel final : public SystemModel {
 public:
  AgvModel(double delta, MatrixXd Q, MatrixXd R, std::vector<VectorXd> x_ref,
           std::vector<VectorXd> u_ref, std::vector<ConstraintPtr> constraints)
      : SystemModel({3, 2, 0}, static_cast<int>(x_ref.size()) - 1, std::move(constraints)),
        delta_(delta),
        Q_(std::move(Q)),
        R_(std::move(R)),
        x_ref_(std::move(x_ref)),
        u_ref_(std::move(u_ref)) {}

  VectorXd dynamics(int, const VectorXd& x, const VectorXd& u) const override {
    const double theta = x(2), v = u(0);
    VectorXd next(3);
    next(0) = x(0) + delta_ * v * std::cos(theta);
    next(1) = x(1) + delta_ * v * std::sin(theta);
    next(2) = x(2) + delta_ * u(1);
    return next;
  }

  MatrixXd dynamics_jac_x(int, const VectorXd& x, const VectorXd& u) const override {
    const double theta = x(2), v = u(0);
    MatrixXd J = MatrixXd::Identity(3, 3);
    J(0, 2) = -delta_ * v * std::sin(theta);
    J(1, 2) = delta_ * v * std::cos(theta);
    return J;
  }

  MatrixXd dynamics_jac_u(int, const VectorXd& x, const VectorXd&) const override {
    const double theta = x(2);
    MatrixXd J = MatrixXd::Zero(3, 2);
    J(0, 0) = delta_ * std::cos(theta);
    J(1, 0) = delta_ * std::sin(theta);
    J(2, 1) = delta_;
    return J;
  }

  MatrixXd dynamics_hess_contract(int, const VectorXd& x, const VectorXd& u,
                                  const VectorXd& w) const override {
    // Only the (theta, v) block of the position rows is curved.
    const double theta = x(2), v = u(0);
    const double c = std::cos(theta), s = std::sin(theta);
    MatrixXd H = MatrixXd::Zero(5, 5);
    H(2, 2) = delta_ * v * (-w(0) * c - w(1) * s);
    H(2, 3) = delta_ * (-w(0) * s + w(1) * c);
    H(3, 2) = H(2, 3);
    return H;
  }

  double running_cost(int k, const VectorXd& x, const VectorXd& u) const override {
    const VectorXd ex = x - x_ref_[static_cast<size_t>(k)];
    const VectorXd eu = u - u_ref_[static_cast<size_t>(k)];
    return ex.dot(Q_ * ex) + eu.dot(R_ * eu);
  }

  VectorXd running_cost_gradient(int k, const VectorXd& x, const VectorXd& u) const override {
    VectorXd g(5);
    g.head(3) = 2.0 * Q_ * (x - x_ref_[static_cast<size_t>(k)]);
    g.tail(2) = 2.0 * R_ * (u - u_ref_[static_cast<size_t>(k)]);
    return g;
  }

  MatrixXd running_cost_hessian(int, const VectorXd&, const VectorXd&) const override {
    MatrixXd H = MatrixXd::Zero(5, 5);
    H.topLeftCorner(3, 3) = 2.0 * Q_;
    H.bottomRightCorner(2, 2) = 2.0 * R_;
    return H;
  }

  const VectorXd& state_reference(int k) const { return x_ref_[static_cast<size_t>(k)]; }
  const VectorXd& control_reference(int k) const { return u_ref_[static_cast<size_t>(k)]; }

 private:
  double delta_;
  MatrixXd Q_, R_;
  std::vector<VectorXd> x_ref_, u_ref_;
};

}  // namespace

std::vector<VectorXd> roll_agv_reference(double delta, const VectorXd& start_pose,
                                         const VectorXd& v_ref, const VectorXd& omega_ref) {
  require(delta > 0.0, "roll_agv_reference: delta must be positive");
  require(start_pose.size() == 3, "roll_agv_reference: pose must have dimension 3");
  require(v_ref.size() == omega_ref.size() && v_ref.size() >= 1,
          "roll_agv_reference: velocity tables must have equal positive length");
  std::vector<VectorXd> poses;
  poses.reserve(static_cast<size_t>(v_ref.size()));
  VectorXd p = start_pose;
  poses.push_back(p);
  for (Eigen::Index k = 0; k + 1 < v_ref.size(); ++k) {
    VectorXd next(3);
    next(0) = p(0) + delta * v_ref(k) * std::cos(p(2));
    next(1) = p(1) + delta * v_ref(k) * std::sin(p(2));
    next(2) = p(2) + delta * omega_ref(k);
    p = next;
    poses.push_back(p);
  }
  return poses;
}

ModelPtr make_agv_model(const AgvParams& params, int horizon,
                        std::vector<ConstraintPtr> constraints) {
  require(horizon >= 0, "make_agv_model: horizon must be >= 0");
  require(params.delta > 0.0, "make_agv_model: delta must be positive");
  require(params.Q.rows() == 3 && params.Q.cols() == 3, "make_agv_model: Q must be 3x3");
  require(params.R.rows() == 2 && params.R.cols() == 2, "make_agv_model: R must be 2x2");
  require_psd(params.Q, "make_agv_model: Q");
  require_pd(params.R, "make_agv_model: R");
  require(params.ref_start.size() == 3, "make_agv_model: ref_start must have dimension 3");
  require(params.v_ref.size() >= horizon + 1 && params.omega_ref.size() >= horizon + 1,
          "make_agv_model: reference tables shorter than horizon+1");

  const VectorXd v = params.v_ref.head(horizon + 1);
  const VectorXd w = params.omega_ref.head(horizon + 1);
  std::vector<VectorXd> x_ref = roll_agv_reference(params.delta, params.ref_start, v, w);
  std::vector<VectorXd> u_ref;
  u_ref.reserve(static_cast<size_t>(horizon) + 1);
  for (int k = 0; k <= horizon; ++k) {
    u_ref.push_back((VectorXd(2) << v(k), w(k)).finished());
  }
  return std::make_shared<AgvModel>(params.delta, params.Q, params.R, std::move(x_ref),
                                    std::move(u_ref), std::move(constraints));
}

ModelPtr make_agv_model_with_reference(double delta, const MatrixXd& Q, const MatrixXd& R,
                                       std::vector<VectorXd> x_ref, std::vector<VectorXd> u_ref,
                                       std::vector<ConstraintPtr> constraints) {
  require(delta > 0.0, "make_agv_model_with_reference: delta must be positive");
  require(Q.rows() == 3 && Q.cols() == 3, "make_agv_model_with_reference: Q must be 3x3");
  require(R.rows() == 2 && R.cols() == 2, "make_agv_model_with_reference: R must be 2x2");
  require_psd(Q, "make_agv_model_with_reference: Q");
  require_pd(R, "make_agv_model_with_reference: R");
  require(!x_ref.empty() && x_ref.size() == u_ref.size(),
          "make_agv_model_with_reference: reference tables must be non-empty and equal length");
  for (const auto& p : x_ref) require(p.size() == 3, "make_agv_model_with_reference: bad pose");
  for (const auto& c : u_ref) require(c.size() == 2, "make_agv_model_with_reference: bad control");
  return std::make_shared<AgvModel>(delta, Q, R, std::move(x_ref), std::move(u_ref),
                                    std::move(constraints));
}

// ---------------------------------------------------------------------------
// Linear-quadratic model

namespace {

class LtiModel final : public SystemModel {
 public:
  LtiModel(MatrixXd A, MatrixXd B, MatrixXd Q, MatrixXd R, VectorXd x_ref, int horizon,
           std::vector<ConstraintPtr> constraints)
      : SystemModel({static_cast<int>(A.rows()), static_cast<int>(B.cols()), 0}, horizon,
                    std::move(constraints)),
        A_(std::move(A)),
        B_(std::move(B)),
        Q_(std::move(Q)),
        R_(std::move(R)),
        x_ref_(std::move(x_ref)) {}

  VectorXd dynamics(int, const VectorXd& x, const VectorXd& u) const override {
    return A_ * x + B_ * u;
  }
  MatrixXd dynamics_jac_x(int, const VectorXd&, const VectorXd&) const override { return A_; }
  MatrixXd dynamics_jac_u(int, const VectorXd&, const VectorXd&) const override { return B_; }
  MatrixXd dynamics_hess_contract(int, const VectorXd&, const VectorXd&,
                                  const VectorXd&) const override {
    const int nm = dims().n + dims().m;
    return MatrixXd::Zero(nm, nm);
  }

  double running_cost(int, const VectorXd& x, const VectorXd& u) const override {
    const VectorXd e = x - x_ref_;
    return e.dot(Q_ * e) + u.dot(R_ * u);
  }

  VectorXd running_cost_gradient(int, const VectorXd& x, const VectorXd& u) const override {
    VectorXd g(dims().n + dims().m);
    g.head(dims().n) = 2.0 * Q_ * (x - x_ref_);
    g.tail(dims().m) = 2.0 * R_ * u;
    return g;
  }

  MatrixXd running_cost_hessian(int, const VectorXd&, const VectorXd&) const override {
    const int n = dims().n, m = dims().m;
    MatrixXd H = MatrixXd::Zero(n + m, n + m);
    H.topLeftCorner(n, n) = 2.0 * Q_;
    H.bottomRightCorner(m, m) = 2.0 * R_;
    return H;
  }

 private:
  MatrixXd A_, B_, Q_, R_;
  VectorXd x_ref_;
};

}  // namespace

ModelPtr make_lti_model(const MatrixXd& A, const MatrixXd& B, const MatrixXd& Q,
                        const MatrixXd& R, const VectorXd& x_ref, int horizon,
                        std::vector<ConstraintPtr> constraints) {
  const auto n = A.rows();
  const auto m = B.cols();
  require(n >= 1 && A.cols() == n, "make_lti_model: A must be square");
  require(B.rows() == n && m >= 1, "make_lti_model: B must be n x m");
  require(Q.rows() == n && Q.cols() == n, "make_lti_model: Q must be n x n");
  require(R.rows() == m && R.cols() == m, "make_lti_model: R must be m x m");
  require(x_ref.size() == n, "make_lti_model: x_ref must have dimension n");
  require(horizon >= 0, "make_lti_model: horizon must be >= 0");
  require_psd(Q, "make_lti_model: Q");
  require_pd(R, "make_lti_model: R");
  return std::make_shared<LtiModel>(A, B, Q, R, x_ref, horizon, std::move(constraints));
}

// ---------------------------------------------------------------------------
// Rollout and cost

StateTrajectory rollout(const SystemModel& model, const VectorXd& x0, const ControlSequence& u) {
  model.check_state(x0);
  if (u.control_dim() != model.dims().m) {
    throw std::invalid_argument("rollout: control dimension mismatch");
  }
  if (u.steps() != model.horizon() + 1) {
    throw std::invalid_argument("rollout: expected " + std::to_string(model.horizon() + 1) +
                                " control steps, got " + std::to_string(u.steps()));
  }
  StateTrajectory x;
  x.reserve(static_cast<size_t>(u.steps()));
  x.push_back(x0);
  for (int k = 0; k + 1 < u.steps(); ++k) {
    VectorXd next = model.dynamics(k, x.back(), u.block(k));
    if (!next.allFinite()) {
      throw DivergenceError("rollout: state became non-finite at step " + std::to_string(k + 1));
    }
    x.push_back(std::move(next));
  }
  return x;
}

double total_cost(const SystemModel& model, const StateTrajectory& x, const ControlSequence& u) {
  if (static_cast<int>(x.size()) != u.steps()) {
    throw std::invalid_argument("total_cost: trajectory and control lengths differ");
  }
  double J = 0.0;
  for (int k = 0; k < u.steps(); ++k) {
    J += model.running_cost(k, x[static_cast<size_t>(k)], u.block(k));
  }
  if (!std::isfinite(J)) throw DivergenceError("total_cost: cost is not finite");
  return J;
}

// ---------------------------------------------------------------------------
// Derivative self check

namespace {

double rel_error(const MatrixXd& analytic, const MatrixXd& fd) {
  const double scale = std::max(1.0, analytic.cwiseAbs().maxCoeff());
  return (analytic - fd).cwiseAbs().maxCoeff() / scale;
}

double fd_step(double coord) { return 1e-6 * (1.0 + std::abs(coord)); }

}  // namespace

bool DerivativeReport::passed() const {
  for (const auto& b : blocks) {
    if (!(b.max_rel_error <= tolerance)) return false;
  }
  return true;
}

double DerivativeReport::worst_error() const {
  double worst = 0.0;
  for (const auto& b : blocks) worst = std::max(worst, b.max_rel_error);
  return worst;
}

std::string DerivativeReport::summary() const {
  std::ostringstream os;
  for (const auto& b : blocks) {
    os << b.block << ": " << b.max_rel_error << (b.max_rel_error <= tolerance ? "" : "  <-- FAIL")
       << "\n";
  }
  return os.str();
}

DerivativeReport self_check_derivatives(const SystemModel& model, int samples, unsigned seed) {
  if (samples < 1) throw std::invalid_argument("self_check_derivatives: samples must be >= 1");
  const int n = model.dims().n, m = model.dims().m, l = model.dims().l;

  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, 1.5);
  std::uniform_int_distribution<int> step_dist(0, model.horizon());

  DerivativeReport report;
  auto slot = [&report](const std::string& name) -> double& {
    for (auto& b : report.blocks) {
      if (b.block == name) return b.max_rel_error;
    }
    report.blocks.push_back({name, 0.0});
    return report.blocks.back().max_rel_error;
  };

  for (int s = 0; s < samples; ++s) {
    VectorXd x(n), u(m), w(n);
    for (int i = 0; i < n; ++i) x(i) = dist(rng);
    for (int i = 0; i < m; ++i) u(i) = dist(rng);
    for (int i = 0; i < n; ++i) w(i) = dist(rng);
    const int k = step_dist(rng);

    auto perturb = [&](auto&& eval, const VectorXd& z) {
      // Central difference of a vector- or scalar-valued function over z.
      const auto f0 = eval(z);
      MatrixXd J(f0.size(), z.size());
      for (Eigen::Index i = 0; i < z.size(); ++i) {
        const double h = fd_step(z(i));
        VectorXd zp = z, zm = z;
        zp(i) += h;
        zm(i) -= h;
        J.col(i) = (eval(zp) - eval(zm)) / (2.0 * h);
      }
      return J;
    };

    VectorXd z(n + m);
    z << x, u;
    auto split = [n, m](const VectorXd& joint) {
      return std::pair<VectorXd, VectorXd>(joint.head(n), joint.tail(m));
    };

    // First derivatives of the dynamics.
    auto dyn = [&](const VectorXd& joint) {
      auto [xs, us] = split(joint);
      return model.dynamics(k, xs, us);
    };
    const MatrixXd dyn_fd = perturb(dyn, z);
    slot("f_x") = std::max(slot("f_x"), rel_error(model.dynamics_jac_x(k, x, u),
                                                  dyn_fd.leftCols(n)));
    slot("f_u") = std::max(slot("f_u"), rel_error(model.dynamics_jac_u(k, x, u),
                                                  dyn_fd.rightCols(m)));

    // Cost gradient against the scalar cost, cost Hessian against the gradient.
    auto cost = [&](const VectorXd& joint) {
      auto [xs, us] = split(joint);
      return (VectorXd(1) << model.running_cost(k, xs, us)).finished();
    };
    slot("L_grad") = std::max(slot("L_grad"),
                              rel_error(model.running_cost_gradient(k, x, u).transpose(),
                                        perturb(cost, z)));
    auto cost_grad = [&](const VectorXd& joint) {
      auto [xs, us] = split(joint);
      return model.running_cost_gradient(k, xs, us);
    };
    slot("L_hess") = std::max(slot("L_hess"),
                              rel_error(model.running_cost_hessian(k, x, u), perturb(cost_grad, z)));

    // Weight-contracted dynamics curvature against the gradient of w'f.
    auto wf_grad = [&](const VectorXd& joint) {
      auto [xs, us] = split(joint);
      VectorXd g(n + m);
      g.head(n) = model.dynamics_jac_x(k, xs, us).transpose() * w;
      g.tail(m) = model.dynamics_jac_u(k, xs, us).transpose() * w;
      return g;
    };
    slot("f_curvature") = std::max(slot("f_curvature"),
                                   rel_error(model.dynamics_hess_contract(k, x, u, w),
                                             perturb(wf_grad, z)));

    for (int i = 0; i < l; ++i) {
      auto con = [&](const VectorXd& joint) {
        auto [xs, us] = split(joint);
        return (VectorXd(1) << model.constraint(i, xs, us)).finished();
      };
      const std::string tag = "c" + std::to_string(i);
      slot(tag + "_grad") = std::max(slot(tag + "_grad"),
                                     rel_error(model.constraint_gradient(i, x, u).transpose(),
                                               perturb(con, z)));
      auto con_grad = [&](const VectorXd& joint) {
        auto [xs, us] = split(joint);
        return model.constraint_gradient(i, xs, us);
      };
      slot(tag + "_hess") = std::max(slot(tag + "_hess"),
                                     rel_error(model.constraint_hessian(i, x, u),
                                               perturb(con_grad, z)));
    }
  }
  return report;
}

}  // namespace fbdeopt
