#include "dicke/model.hpp"

#include <algorithm>
#include <cmath>

#include "dicke/errors.hpp"

namespace dicke {

double wrap_angle(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  // fmod of a tiny negative number can round up to exactly 2pi
  if (r >= kTwoPi) r = 0.0;
  return r;
}

double wrap_difference(double a) {
  double r = wrap_angle(a + std::numbers::pi) - std::numbers::pi;
  return r;
}

ModelParams::ModelParams(double omega0, double omega, double g, double j)
    : omega0_(omega0), omega_(omega), g_(g), j_(j) {
  if (!(omega0 > 0.0) || !(omega > 0.0) || !(g >= 0.0) || !(j > 0.0)) {
    throw DomainError("ModelParams: require omega0 > 0, omega > 0, g >= 0, j > 0");
  }
}

ModelParams ModelParams::dimensionless(double nu, double gamma, double j) {
  if (!(nu > 0.0) || !(gamma >= 0.0)) {
    throw DomainError("ModelParams: require nu > 0 and gamma >= 0");
  }
  const double g_c = std::sqrt(nu) / 2.0;
  return {1.0, nu, gamma * g_c, j};
}

double ModelParams::g_c() const { return std::sqrt(omega_ * omega0_) / 2.0; }

double ModelParams::ground_energy() const {
  const double gam = gamma();
  if (gam <= 1.0) return -1.0;
  return -(gam * gam + 1.0 / (gam * gam)) / 2.0;
}

double BlochVector::norm() const { return std::sqrt(lx * lx + ly * ly + lz * lz); }

CanonicalState::CanonicalState(double I, double psi, double c, double phi) {
  if (!(I >= 0.0) || !std::isfinite(I)) throw DomainError("CanonicalState: I must be finite and >= 0");
  if (!(std::abs(c) <= 1.0 + 1e-12)) throw DomainError("CanonicalState: |c| must be <= 1");
  if (!std::isfinite(psi) || !std::isfinite(phi)) throw DomainError("CanonicalState: non-finite angle");
  I_ = I;
  psi_ = wrap_angle(psi);
  c_ = std::clamp(c, -1.0, 1.0);
  phi_ = wrap_angle(phi);
}

double CanonicalState::sin_theta() const { return std::sqrt(std::max(0.0, 1.0 - c_ * c_)); }

BlochVector CanonicalState::bloch() const { return bloch_from_canonical(c_, phi_); }

BlochVector bloch_from_canonical(double c, double phi) {
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  return {s * std::cos(phi), s * std::sin(phi), c};
}

double energy(const CanonicalState& s, const ModelParams& p) {
  const double nu = p.nu();
  const double gam = p.gamma();
  const double coupling = gam * std::sqrt(2.0 * nu * s.I()) * std::cos(s.psi()) * s.sin_theta() * std::cos(s.phi());
  return s.c() + nu * s.I() + coupling;
}

CanonicalState canonical_from_stereo(const StereoState& s, const ModelParams& p) {
  const double r = std::abs(s.z);
  if (!std::isfinite(r) || r > kStereoOverflow) {
    throw PoleError("canonical_from_stereo: |z| overflow (south pole of the stereographic chart)");
  }
  const double r2 = r * r;
  // (1 - r^2)/(1 + r^2) loses relative accuracy for r >> 1; use 2/(1+r^2) - 1 there
  const double c = r2 <= 1.0 ? (1.0 - r2) / (1.0 + r2) : 2.0 / (1.0 + r2) - 1.0;
  const double a = std::abs(s.alpha);
  return {a * a / p.j(), std::arg(s.alpha), c, std::arg(s.z)};
}

StereoState stereo_from_canonical(const CanonicalState& s, const ModelParams& p) {
  if (s.c() <= -1.0) throw PoleError("stereo_from_canonical: south pole has no finite z");
  // tan(theta/2) = sin(theta) / (1 + cos(theta)) is accurate near both poles
  const double t = s.sin_theta() / (1.0 + s.c());
  const double amp = std::sqrt(p.j() * s.I());
  return {std::polar(t, s.phi()), std::polar(amp, s.psi())};
}

}  // namespace dicke
