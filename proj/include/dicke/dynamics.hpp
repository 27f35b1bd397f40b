#pragma once

#include <Eigen/Core>

#include "dicke/model.hpp"

namespace dicke {

/// Chart guards for the canonical coordinates.
inline constexpr double kIFloor = 1e-10;
inline constexpr double kCGuard = 1e-9;

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

/// Time derivatives of (I, psi, c, phi) in omega0 units.
struct DriftVector {
  double dI = 0.0;
  double dpsi = 0.0;
  double dc = 0.0;
  double dphi = 0.0;

  Vec4 as_vector() const { return {dI, dpsi, dc, dphi}; }
};

enum class QuasiprobKind { Q, P };

/// Symmetric 4x4 diffusion matrix over (I, psi, c, phi). Only the
/// oscillator-spin off-diagonal blocks are non-zero.
struct DiffusionMatrix4 {
  Mat4 m = Mat4::Zero();

  double operator()(int r, int c) const { return m(r, c); }
  /// The 2x2 block d with rows (I, psi) and columns (c, phi).
  Eigen::Matrix2d block() const { return m.block<2, 2>(0, 2); }
};

/// Throws SingularityError when the canonical chart is too close to I = 0 or
/// to a pole of the Bloch sphere.
void check_chart(const CanonicalState& s);

/// Hamiltonian vector field:
///   dI/dt   = -gamma sqrt(2 nu I) sin(psi) sin(theta) cos(phi)
///   dpsi/dt = -nu - gamma sqrt(nu / (2 I)) cos(psi) sin(theta) cos(phi)
///   dc/dt   =  gamma sqrt(2 nu I) cos(psi) sin(theta) sin(phi)
///   dphi/dt =  1 - gamma sqrt(2 nu I) cos(psi) cot(theta) cos(phi)
DriftVector classical_drift(const CanonicalState& s, const ModelParams& p);

/// Drift of the quasiprobability flow. With `correction_on` the coupling
/// terms of dI and dpsi carry the factor (1 + 1/j); without it the result is
/// the classical field.
DriftVector fp_drift(const CanonicalState& s, const ModelParams& p, bool correction_on);

/// Gradient of eps with respect to (I, psi, c, phi).
Vec4 energy_gradient(const CanonicalState& s, const ModelParams& p);

/// Analytic Jacobian d(classical_drift)/d(I, psi, c, phi).
Mat4 drift_jacobian(const CanonicalState& s, const ModelParams& p);

/// Quantum diffusion matrix. The off-diagonal block is
///   d = g/(j sqrt 2) diag(sqrt I, 1/(2 sqrt I)) [[A, B], [-B, A]] diag(sin theta, 1/sin theta)
/// with A = -cos psi sin phi - c sin psi cos phi, B = c cos psi cos phi - sin psi sin phi.
/// See docs/diffusion_matrix.md for the chain-rule derivation. P negates Q.
DiffusionMatrix4 diffusion_matrix(const CanonicalState& s, const ModelParams& p, QuasiprobKind kind);

}  // namespace dicke
