#pragma once

#include <complex>
#include <numbers>

namespace dicke {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Reduces an angle to [0, 2pi).
double wrap_angle(double a);

/// Reduces an angle difference to [-pi, pi).
double wrap_difference(double a);

/// Physical parameters of the Dicke Hamiltonian
///   H = omega0 Jz + omega a^dag a + g sqrt(2/j) (a + a^dag) Jx.
///
/// Everything downstream works in units with omega0 = 1; the dimensionless
/// couplings are recomputed from the stored physical values on every call.
class ModelParams {
 public:
  ModelParams(double omega0, double omega, double g, double j = 1000.0);

  /// Builds parameters with omega0 = 1 from (nu, gamma).
  static ModelParams dimensionless(double nu, double gamma, double j = 1000.0);

  double omega0() const { return omega0_; }
  double omega() const { return omega_; }
  double g() const { return g_; }
  double j() const { return j_; }

  /// Critical coupling sqrt(omega omega0) / 2.
  double g_c() const;
  double nu() const { return omega_ / omega0_; }
  double gamma() const { return g_ / g_c(); }

  /// Ground-state energy per omega0: -1 below the superradiant transition,
  /// -(gamma^2 + gamma^-2)/2 above it.
  double ground_energy() const;

  ModelParams with_j(double j) const { return {omega0_, omega_, g_, j}; }

 private:
  double omega0_;
  double omega_;
  double g_;
  double j_;
};

struct BlochVector {
  double lx = 0.0;
  double ly = 0.0;
  double lz = 1.0;

  double norm() const;
};

/// Phase-space point in canonical coordinates (I, psi, c = cos theta, phi).
/// Angles are reduced to [0, 2pi) on construction.
class CanonicalState {
 public:
  CanonicalState() = default;
  CanonicalState(double I, double psi, double c, double phi);

  double I() const { return I_; }
  double psi() const { return psi_; }
  double c() const { return c_; }
  double phi() const { return phi_; }

  /// sin theta = sqrt(1 - c^2).
  double sin_theta() const;
  BlochVector bloch() const;

 private:
  double I_ = 0.0;
  double psi_ = 0.0;
  double c_ = 1.0;
  double phi_ = 0.0;
};

/// Complex coherent-state labels: stereographic spin coordinate z and
/// oscillator amplitude alpha.
struct StereoState {
  std::complex<double> z;
  std::complex<double> alpha;
};

/// Dimensionless energy eps = h / omega0
///   eps = c + nu I + gamma sqrt(2 nu I) cos(psi) sin(theta) cos(phi).
double energy(const CanonicalState& s, const ModelParams& p);

BlochVector bloch_from_canonical(double c, double phi);

/// Throws PoleError once |z| exceeds kStereoOverflow.
CanonicalState canonical_from_stereo(const StereoState& s, const ModelParams& p);
StereoState stereo_from_canonical(const CanonicalState& s, const ModelParams& p);

inline constexpr double kStereoOverflow = 1e150;

}  // namespace dicke
