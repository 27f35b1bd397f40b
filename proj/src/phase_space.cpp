#include "dicke/phase_space.hpp"

#include <algorithm>
#include <cmath>

#include "dicke/errors.hpp"

namespace dicke {

Embedded embed(const CanonicalState& s) {
  const double rho = std::sqrt(2.0 * s.I());
  const BlochVector l = s.bloch();
  Embedded e;
  e << rho * std::cos(s.psi()), rho * std::sin(s.psi()), l.lx, l.ly, l.lz;
  return e;
}

BlochVector bloch_of(const Embedded& e) {
  const double n = std::sqrt(e(2) * e(2) + e(3) * e(3) + e(4) * e(4));
  return {e(2) / n, e(3) / n, e(4) / n};
}

CanonicalState to_canonical(const Embedded& e) {
  const BlochVector l = bloch_of(e);
  const double I = 0.5 * (e(0) * e(0) + e(1) * e(1));
  return {I, std::atan2(e(1), e(0)), std::clamp(l.lz, -1.0, 1.0), std::atan2(l.ly, l.lx)};
}

double energy_embedded(const Embedded& e, const ModelParams& p) {
  const BlochVector l = bloch_of(e);
  const double nu = p.nu();
  const double K = p.gamma() * std::sqrt(nu);
  return l.lz + 0.5 * nu * (e(0) * e(0) + e(1) * e(1)) + K * e(0) * l.lx;
}

Embedded embedded_field(const Embedded& e, const ModelParams& p) {
  const double nu = p.nu();
  const double K = p.gamma() * std::sqrt(nu);
  const double x = e(0), y = e(1), lx = e(2), ly = e(3), lz = e(4);
  const double wx = K * x;
  // the oscillator sees the unit vector, so a drift of |l| leaves eps unchanged
  const double n = std::sqrt(lx * lx + ly * ly + lz * lz);
  Embedded f;
  f << nu * y, -nu * x - K * lx / n, -ly, lx - wx * lz, wx * ly;
  return f;
}

Mat5 embedded_jacobian(const Embedded& e, const ModelParams& p) {
  const double nu = p.nu();
  const double K = p.gamma() * std::sqrt(nu);
  const double x = e(0), ly = e(3), lz = e(4);
  const Eigen::Vector3d l = e.tail<3>();
  const double n = l.norm();
  const Eigen::Vector3d lhat = l / n;
  Mat5 J = Mat5::Zero();
  J(0, 1) = nu;
  J(1, 0) = -nu;
  for (int k = 0; k < 3; ++k) J(1, 2 + k) = -K * ((k == 0 ? 1.0 : 0.0) - lhat(0) * lhat(k)) / n;
  J(2, 3) = -1.0;
  J(3, 0) = -K * lz;
  J(3, 2) = 1.0;
  J(3, 4) = -K * x;
  J(4, 0) = K * ly;
  J(4, 3) = K * x;
  return J;
}

Embedded project_tangent(const Embedded& e, const Embedded& v) {
  const Eigen::Vector3d l = e.tail<3>().normalized();
  Embedded out = v;
  const double radial = l.dot(v.tail<3>());
  out.tail<3>() -= radial * l;
  return out;
}

Embedded tangent_to_embedded(const CanonicalState& s, const Vec4& v) {
  check_chart(s);
  const double rho = std::sqrt(2.0 * s.I());
  const double cp = std::cos(s.psi()), sp = std::sin(s.psi());
  const double c = s.c(), st = s.sin_theta();
  const double cf = std::cos(s.phi()), sf = std::sin(s.phi());
  Embedded out;
  out(0) = cp * v(0) / rho - rho * sp * v(1);
  out(1) = sp * v(0) / rho + rho * cp * v(1);
  out(2) = -c / st * cf * v(2) - st * sf * v(3);
  out(3) = -c / st * sf * v(2) + st * cf * v(3);
  out(4) = v(2);
  return out;
}

Vec4 tangent_to_canonical(const Embedded& e, const Embedded& v) {
  check_chart(to_canonical(e));
  const double x = e(0), y = e(1);
  const Eigen::Vector3d l = e.tail<3>().normalized();
  Eigen::Vector3d dl = v.tail<3>();
  dl -= l.dot(dl) * l;
  const double rho2 = x * x + y * y;
  const double sin2 = l(0) * l(0) + l(1) * l(1);
  Vec4 out;
  out(0) = x * v(0) + y * v(1);
  out(1) = (x * v(1) - y * v(0)) / rho2;
  out(2) = dl(2);
  out(3) = (l(0) * dl(1) - l(1) * dl(0)) / sin2;
  return out;
}

}  // namespace dicke
