#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace fbdeopt {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// State dimension, control dimension, number of inequality constraints.
struct Dims {
  int n = 0;
  int m = 0;
  int l = 0;
};

/// Thrown when a trajectory, cost, or iterate stops being finite.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Thrown when the regularized Newton system cannot be factorized.
class SolverError : public std::runtime_error {
 public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

/// Controls u_0..u_N stored as one stacked vector of length (N+1)*m.
/// The per-step and stacked views share storage, so round-trips are exact.
class ControlSequence {
 public:
  ControlSequence(int steps, int control_dim)
      : stacked_(VectorXd::Zero(static_cast<Eigen::Index>(steps) * control_dim)),
        m_(control_dim) {
    if (steps < 1 || control_dim < 1) {
      throw std::invalid_argument("ControlSequence: steps and control_dim must be positive");
    }
  }

  static ControlSequence from_stacked(VectorXd stacked, int control_dim) {
    if (control_dim < 1 || stacked.size() == 0 || stacked.size() % control_dim != 0) {
      throw std::invalid_argument("ControlSequence: stacked size not a multiple of control_dim");
    }
    ControlSequence u(static_cast<int>(stacked.size()) / control_dim, control_dim);
    u.stacked_ = std::move(stacked);
    return u;
  }

  int steps() const { return static_cast<int>(stacked_.size()) / m_; }
  int horizon() const { return steps() - 1; }
  int control_dim() const { return m_; }

  auto block(int k) { return stacked_.segment(static_cast<Eigen::Index>(k) * m_, m_); }
  auto block(int k) const { return stacked_.segment(static_cast<Eigen::Index>(k) * m_, m_); }

  VectorXd& stacked() { return stacked_; }
  const VectorXd& stacked() const { return stacked_; }

  bool operator==(const ControlSequence& other) const {
    return m_ == other.m_ && stacked_ == other.stacked_;
  }

 private:
  VectorXd stacked_;
  int m_;
};

/// States x_0..x_N produced by rolling the dynamics; x_0 is the given
/// initial state. The state after the last control is never materialized.
using StateTrajectory = std::vector<VectorXd>;

/// Costates lambda_1..lambda_{N+1}, indexed by absolute step to keep the
/// off-by-one of the backward recursion out of caller code.
class CostateSequence {
 public:
  CostateSequence(int horizon, int state_dim)
      : lam_(static_cast<size_t>(horizon) + 1, VectorXd::Zero(state_dim)) {
    if (horizon < 0 || state_dim < 1) {
      throw std::invalid_argument("CostateSequence: bad horizon or state_dim");
    }
  }

  int horizon() const { return static_cast<int>(lam_.size()) - 1; }

  VectorXd& at(int k) { return lam_[index(k)]; }
  const VectorXd& at(int k) const { return lam_[index(k)]; }

 private:
  size_t index(int k) const {
    if (k < 1 || k > horizon() + 1) {
      throw std::invalid_argument("CostateSequence: step " + std::to_string(k) + " out of range");
    }
    return static_cast<size_t>(k - 1);
  }

  std::vector<VectorXd> lam_;
};

}  // namespace fbdeopt
