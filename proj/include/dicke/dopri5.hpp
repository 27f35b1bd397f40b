#pragma once

#include <array>
#include <cstddef>
#include <functional>

#include <Eigen/Core>

namespace dicke {

struct StepperOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  /// Initial step; 0 selects one automatically.
  double h_init = 0.0;
  double h_min = 1e-12;
  double h_max = 1e300;
};

/// Throws ToleranceError unless both tolerances lie in (0, 1e-2].
void validate_tolerances(double rtol, double atol);

/// Embedded Dormand-Prince 5(4) pair with PI step-size control and the
/// fourth-order continuous extension of Hairer & Wanner. A step is accepted
/// when every component's error estimate is below atol + rtol |y_i|.
///
/// A failed right-hand side evaluation (non-finite values or a thrown
/// SingularityError) rejects the step and halves it; StepFailure is thrown
/// once the step falls below h_min.
class Dopri5 {
 public:
  using Vector = Eigen::VectorXd;
  using Rhs = std::function<void(double, const Vector&, Vector&)>;

  Dopri5(std::size_t dim, Rhs rhs, StepperOptions opt);

  /// Sets the current point and invalidates the cached derivative.
  void reset(double t, const Vector& y);

  /// Advances by one accepted step without passing t_limit.
  void step(double t_limit);

  double t() const { return t_; }
  const Vector& y() const { return y_; }
  double t_prev() const { return t_prev_; }
  double h_last() const { return t_ - t_prev_; }
  double h_next() const { return h_next_; }

  /// Dense output on [t_prev(), t()] of the last accepted step.
  void dense(double t, Vector& out) const;
  double dense_component(double t, Eigen::Index i) const;
  const std::array<Vector, 5>& dense_coefficients() const { return cont_; }

  long accepted() const { return accepted_; }
  long rejected() const { return rejected_; }
  long rhs_evals() const { return rhs_evals_; }

 private:
  bool eval(double t, const Vector& y, Vector& out);
  double initial_step(double t_limit);
  double error_norm() const;

  std::size_t dim_;
  Rhs rhs_;
  StepperOptions opt_;

  double t_ = 0.0;
  double t_prev_ = 0.0;
  double h_next_ = 0.0;
  double err_old_ = 1e-4;
  bool fsal_valid_ = false;
  bool last_rejected_ = false;

  Vector y_, y_new_, tmp_, err_;
  Vector k1_, k2_, k3_, k4_, k5_, k6_, k7_;
  std::array<Vector, 5> cont_;

  long accepted_ = 0;
  long rejected_ = 0;
  long rhs_evals_ = 0;
};

/// Evaluates a stored continuous extension (r1..r5 as produced by Dopri5) at
/// fraction theta of the step.
inline double dense_eval(double r1, double r2, double r3, double r4, double r5, double theta) {
  const double th1 = 1.0 - theta;
  return r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
}

}  // namespace dicke
