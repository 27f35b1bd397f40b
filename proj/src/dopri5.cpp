#include "dicke/dopri5.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dicke/errors.hpp"

namespace dicke {

namespace {

constexpr double c2 = 1.0 / 5.0, c3 = 3.0 / 10.0, c4 = 4.0 / 5.0, c5 = 8.0 / 9.0;
constexpr double a21 = 1.0 / 5.0;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

// PI controller constants
constexpr double kBeta = 0.04;
constexpr double kExpo = 0.2 - kBeta * 0.75;
constexpr double kSafe = 0.9;
constexpr double kFacMin = 0.2;  // largest shrink per step is 1/0.2
constexpr double kFacMax = 10.0;

}  // namespace

void validate_tolerances(double rtol, double atol) {
  const auto ok = [](double v) { return v > 0.0 && v <= 1e-2; };
  if (!ok(rtol) || !ok(atol)) throw ToleranceError("tolerances must lie in (0, 1e-2]");
}

Dopri5::Dopri5(std::size_t dim, Rhs rhs, StepperOptions opt) : dim_(dim), rhs_(std::move(rhs)), opt_(opt) {
  validate_tolerances(opt_.rtol, opt_.atol);
  const auto n = static_cast<Eigen::Index>(dim_);
  for (Vector* v : {&y_, &y_new_, &tmp_, &err_, &k1_, &k2_, &k3_, &k4_, &k5_, &k6_, &k7_}) v->setZero(n);
  for (auto& c : cont_) c.setZero(n);
  h_next_ = opt_.h_init;
}

void Dopri5::reset(double t, const Vector& y) {
  t_ = t;
  t_prev_ = t;
  y_ = y;
  fsal_valid_ = false;
}

bool Dopri5::eval(double t, const Vector& y, Vector& out) {
  ++rhs_evals_;
  try {
    rhs_(t, y, out);
  } catch (const SingularityError&) {
    return false;
  }
  return out.allFinite();
}

double Dopri5::error_norm() const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err_.size(); ++i) {
    const double sk = opt_.atol + opt_.rtol * std::max(std::abs(y_(i)), std::abs(y_new_(i)));
    sum = std::max(sum, std::abs(err_(i)) / sk);
  }
  return sum;
}

double Dopri5::initial_step(double t_limit) {
  const double span = std::abs(t_limit - t_);
  double d0 = 0.0, d1n = 0.0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    const double sk = opt_.atol + opt_.rtol * std::abs(y_(i));
    d0 += (y_(i) / sk) * (y_(i) / sk);
    d1n += (k1_(i) / sk) * (k1_(i) / sk);
  }
  d0 = std::sqrt(d0 / y_.size());
  d1n = std::sqrt(d1n / y_.size());
  double h0 = (d0 < 1e-10 || d1n < 1e-10) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  tmp_ = y_ + h0 * k1_;
  if (!eval(t_ + h0, tmp_, k2_)) return std::min(h0 * 1e-3, span);
  double d2 = 0.0;
  for (Eigen::Index i = 0; i < y_.size(); ++i) {
    const double sk = opt_.atol + opt_.rtol * std::abs(y_(i));
    const double r = (k2_(i) - k1_(i)) / sk;
    d2 += r * r;
  }
  d2 = std::sqrt(d2 / y_.size()) / h0;
  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 0.2);
  return std::min({100.0 * h0, h1, span, opt_.h_max});
}

void Dopri5::step(double t_limit) {
  if (!(t_limit > t_)) throw StepFailure("Dopri5::step: t_limit must exceed current time");
  if (!fsal_valid_) {
    if (!eval(t_, y_, k1_)) throw StepFailure("Dopri5: right-hand side invalid at the starting point");
    fsal_valid_ = true;
  }
  if (h_next_ <= 0.0) h_next_ = initial_step(t_limit);

  const double h_floor = std::max(opt_.h_min, 4.0 * std::numeric_limits<double>::epsilon() * std::abs(t_));
  for (;;) {
    double h = std::min(h_next_, opt_.h_max);
    const double h_proposed = h;
    bool clipped = false;
    if (t_ + h >= t_limit - 1e-13 * std::max(1.0, std::abs(t_limit))) {
      h = t_limit - t_;
      clipped = true;
    }
    if (h < h_floor && !clipped) {
      throw StepFailure("Dopri5: step size " + std::to_string(h) + " underflow at t = " + std::to_string(t_));
    }

    bool ok = true;
    tmp_ = y_ + h * a21 * k1_;
    ok = ok && eval(t_ + c2 * h, tmp_, k2_);
    if (ok) {
      tmp_ = y_ + h * (a31 * k1_ + a32 * k2_);
      ok = eval(t_ + c3 * h, tmp_, k3_);
    }
    if (ok) {
      tmp_ = y_ + h * (a41 * k1_ + a42 * k2_ + a43 * k3_);
      ok = eval(t_ + c4 * h, tmp_, k4_);
    }
    if (ok) {
      tmp_ = y_ + h * (a51 * k1_ + a52 * k2_ + a53 * k3_ + a54 * k4_);
      ok = eval(t_ + c5 * h, tmp_, k5_);
    }
    if (ok) {
      tmp_ = y_ + h * (a61 * k1_ + a62 * k2_ + a63 * k3_ + a64 * k4_ + a65 * k5_);
      ok = eval(t_ + h, tmp_, k6_);
    }
    if (ok) {
      y_new_ = y_ + h * (a71 * k1_ + a73 * k3_ + a74 * k4_ + a75 * k5_ + a76 * k6_);
      ok = eval(t_ + h, y_new_, k7_);
    }
    double err = std::numeric_limits<double>::infinity();
    if (ok) {
      err_ = h * (e1 * k1_ + e3 * k3_ + e4 * k4_ + e5 * k5_ + e6 * k6_ + e7 * k7_);
      err = error_norm();
    }
    if (!std::isfinite(err)) {
      ++rejected_;
      last_rejected_ = true;
      h_next_ = 0.5 * h;
      if (h_next_ < h_floor) {
        throw StepFailure("Dopri5: right-hand side failure, step underflow at t = " + std::to_string(t_));
      }
      continue;
    }

    const double fac11 = std::pow(err, kExpo);
    if (err <= 1.0) {
      // continuous extension
      cont_[0] = y_;
      cont_[1] = y_new_ - y_;
      cont_[2] = h * k1_ - cont_[1];
      cont_[3] = cont_[1] - h * k7_ - cont_[2];
      cont_[4] = h * (d1 * k1_ + d3 * k3_ + d4 * k4_ + d5 * k5_ + d6 * k6_ + d7 * k7_);

      double fac = fac11 / std::pow(err_old_, kBeta);
      fac = std::clamp(fac / kSafe, 1.0 / kFacMax, 1.0 / kFacMin);
      double h_new = h / fac;
      if (last_rejected_) h_new = std::min(h_new, h);
      if (clipped) h_new = std::max(h_new, h_proposed);
      err_old_ = std::max(err, 1e-4);

      t_prev_ = t_;
      t_ = clipped ? t_limit : t_ + h;
      y_.swap(y_new_);
      k1_.swap(k7_);
      h_next_ = h_new;
      last_rejected_ = false;
      ++accepted_;
      return;
    }
    ++rejected_;
    last_rejected_ = true;
    h_next_ = h / std::min(1.0 / kFacMin, fac11 / kSafe);
    if (h_next_ < h_floor) {
      throw StepFailure("Dopri5: step size underflow at t = " + std::to_string(t_));
    }
  }
}

void Dopri5::dense(double t, Vector& out) const {
  const double h = t_ - t_prev_;
  const double theta = h > 0.0 ? (t - t_prev_) / h : 1.0;
  const double th1 = 1.0 - theta;
  out = cont_[0] + theta * (cont_[1] + th1 * (cont_[2] + theta * (cont_[3] + th1 * cont_[4])));
}

double Dopri5::dense_component(double t, Eigen::Index i) const {
  const double h = t_ - t_prev_;
  const double theta = h > 0.0 ? (t - t_prev_) / h : 1.0;
  return dense_eval(cont_[0](i), cont_[1](i), cont_[2](i), cont_[3](i), cont_[4](i), theta);
}

}  // namespace dicke
