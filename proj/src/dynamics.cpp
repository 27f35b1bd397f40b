#include "dicke/dynamics.hpp"

#include <cmath>
#include <string>

#include "dicke/errors.hpp"

namespace dicke {

namespace {

struct Trig {
  double r, s, cpsi, spsi, cphi, sphi, c;
};

Trig trig_of(const CanonicalState& st) {
  return {std::sqrt(st.I()), st.sin_theta(), std::cos(st.psi()), std::sin(st.psi()),
          std::cos(st.phi()), std::sin(st.phi()), st.c()};
}

// Coupling constant of eps = c + nu I + G sqrt(I) cos(psi) sin(theta) cos(phi).
double coupling_G(const ModelParams& p) { return p.gamma() * std::sqrt(2.0 * p.nu()); }

DriftVector drift_with_factor(const CanonicalState& st, const ModelParams& p, double factor) {
  check_chart(st);
  const Trig t = trig_of(st);
  const double G = coupling_G(p);
  DriftVector d;
  d.dI = -factor * G * t.r * t.spsi * t.s * t.cphi;
  d.dpsi = -p.nu() - factor * G / (2.0 * t.r) * t.cpsi * t.s * t.cphi;
  d.dc = G * t.r * t.cpsi * t.s * t.sphi;
  d.dphi = 1.0 - G * t.r * t.cpsi * (t.c / t.s) * t.cphi;
  return d;
}

}  // namespace

void check_chart(const CanonicalState& s) {
  if (s.I() < kIFloor) {
    throw SingularityError("canonical chart: I = " + std::to_string(s.I()) + " below floor");
  }
  if (1.0 - std::abs(s.c()) < kCGuard) {
    throw SingularityError("canonical chart: |cos theta| within guard of a pole");
  }
}

DriftVector classical_drift(const CanonicalState& s, const ModelParams& p) {
  return drift_with_factor(s, p, 1.0);
}

DriftVector fp_drift(const CanonicalState& s, const ModelParams& p, bool correction_on) {
  return drift_with_factor(s, p, correction_on ? 1.0 + 1.0 / p.j() : 1.0);
}

Vec4 energy_gradient(const CanonicalState& s, const ModelParams& p) {
  const DriftVector f = classical_drift(s, p);
  // f = J grad(eps) with J = diag([[0, 1], [-1, 0]], [[0, -1], [1, 0]])
  return {-f.dpsi, f.dI, f.dphi, -f.dc};
}

Mat4 drift_jacobian(const CanonicalState& st, const ModelParams& p) {
  check_chart(st);
  const Trig t = trig_of(st);
  const double G = coupling_G(p);
  const double r = t.r, s = t.s, c = t.c;
  const double cot = c / s;
  Mat4 J;
  // row dI/dt
  J(0, 0) = -G / (2.0 * r) * t.spsi * s * t.cphi;
  J(0, 1) = -G * r * t.cpsi * s * t.cphi;
  J(0, 2) = G * r * t.spsi * cot * t.cphi;
  J(0, 3) = G * r * t.spsi * s * t.sphi;
  // row dpsi/dt
  J(1, 0) = G / (4.0 * r * r * r) * t.cpsi * s * t.cphi;
  J(1, 1) = G / (2.0 * r) * t.spsi * s * t.cphi;
  J(1, 2) = G / (2.0 * r) * t.cpsi * cot * t.cphi;
  J(1, 3) = G / (2.0 * r) * t.cpsi * s * t.sphi;
  // row dc/dt
  J(2, 0) = G / (2.0 * r) * t.cpsi * s * t.sphi;
  J(2, 1) = -G * r * t.spsi * s * t.sphi;
  J(2, 2) = -G * r * t.cpsi * cot * t.sphi;
  J(2, 3) = G * r * t.cpsi * s * t.cphi;
  // row dphi/dt
  J(3, 0) = -G / (2.0 * r) * t.cpsi * cot * t.cphi;
  J(3, 1) = G * r * t.spsi * cot * t.cphi;
  J(3, 2) = -G * r * t.cpsi * t.cphi / (s * s * s);
  J(3, 3) = G * r * t.cpsi * cot * t.sphi;
  return J;
}

DiffusionMatrix4 diffusion_matrix(const CanonicalState& st, const ModelParams& p, QuasiprobKind kind) {
  check_chart(st);
  const Trig t = trig_of(st);
  const double A = -t.cpsi * t.sphi - t.c * t.spsi * t.cphi;
  const double B = t.c * t.cpsi * t.cphi - t.spsi * t.sphi;
  // g / (j sqrt 2) in omega0 units
  const double pref = (p.g() / p.omega0()) / (p.j() * std::sqrt(2.0));
  const double sign = kind == QuasiprobKind::Q ? 1.0 : -1.0;

  Eigen::Matrix2d d;
  d(0, 0) = t.r * A * t.s;
  d(0, 1) = t.r * B / t.s;
  d(1, 0) = -B * t.s / (2.0 * t.r);
  d(1, 1) = A / (2.0 * t.r * t.s);
  d *= sign * pref;

  DiffusionMatrix4 D;
  D.m.block<2, 2>(0, 2) = d;
  D.m.block<2, 2>(2, 0) = d.transpose();
  return D;
}

}  // namespace dicke
