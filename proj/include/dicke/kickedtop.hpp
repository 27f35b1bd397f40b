#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "dicke/model.hpp"

namespace dicke {

struct TopParams {
  /// Precession angle about x.
  double p = 1.5707963267948966;
  /// Torsion strength.
  double tau = 10.0;
  /// Spin size; sets the 1/(2j+1) diffusion scale.
  double j = 1000.0;

  void validate() const;
};

/// One kick: m = R_x(p) l, then l' = R_z(tau m_z) m.
BlochVector top_map(const BlochVector& l, const TopParams& params);
BlochVector top_map_inverse(const BlochVector& l, const TopParams& params);

/// Differential of top_map in R^3 at l; maps the tangent plane at l onto the
/// tangent plane at top_map(l).
Eigen::Matrix3d top_map_jacobian(const BlochVector& l, const TopParams& params);
Eigen::Matrix3d top_map_inverse_jacobian(const BlochVector& l, const TopParams& params);

/// Determinant of the differential restricted to the tangent planes
/// (orthonormal bases on both sides). Equals 1 for an area-preserving map.
double tangent_determinant(const BlochVector& l, const TopParams& params);

struct TopLyapunov {
  /// Leading and second per-kick exponents.
  double lambda = 0.0;
  double lambda2 = 0.0;
  /// Running estimate of lambda at the end of each of 10 windows.
  std::vector<double> history;
};

/// Benettin on the tangent map with two tangent vectors. Needs
/// n_steps >= 10^4; throws NonConvergenceError when the last two window
/// estimates differ by more than 10% (of max(|lambda|, 1e-2)).
TopLyapunov top_lyapunov(const BlochVector& l0, const TopParams& params, long n_steps);

struct SphereCloud {
  std::vector<BlochVector> points;
  std::uint64_t seed = 0;
};

SphereCloud uniform_cloud(std::size_t n, std::uint64_t seed);
/// Points uniform (in area) within angular radius r of `center`.
SphereCloud cap_cloud(const BlochVector& center, double radius, std::size_t n, std::uint64_t seed);

/// Real orthonormal spherical harmonics for 1 <= l <= 4, ordered by l and
/// then m = -l..l.
inline constexpr int kHarmonicCount = 24;
std::array<double, kHarmonicCount> real_harmonics(const BlochVector& l);

struct CloudMetrics {
  long step = 0;
  std::array<double, kHarmonicCount> ylm{};
  double max_abs_ylm = 0.0;
  /// Fraction of the 400 cells (20 z-bands x 20 sectors, equal area) hit.
  double occupancy = 0.0;
  /// Fraction of the 20 z-bands hit.
  double lz_occupancy = 0.0;
};

CloudMetrics cloud_metrics(const std::vector<BlochVector>& pts, long step);

/// Metrics of the cloud at steps 0..n_steps. Needs at least 10^3 points.
std::vector<CloudMetrics> top_equilibration(const SphereCloud& cloud0, const TopParams& params, long n_steps);

/// First (fractional) step at which max |<Y_lm>| drops below `threshold`,
/// interpolating log max|<Y_lm>| between neighbouring steps; negative if
/// never reached.
double equilibration_time(const std::vector<CloudMetrics>& metrics, double threshold);

/// Symmetric 2x2 diffusion matrix of the torsion step in (cos theta, phi):
/// zero diagonal, D_cphi = -tau (1 - c^2) / (2 (2j + 1)). See
/// docs/kicked_top_diffusion.md.
Eigen::Matrix2d top_diffusion_matrix(const BlochVector& l, const TopParams& params);

struct TopDiffusionStep {
  double dss = 0.0;
  double var_next = 0.0;
};

/// D_ss of the torsion step for the stable direction e_s (tangent at l),
/// evaluated at the pre-torsion point m = R_x(p) l with e_s carried along,
/// and var_{n+1} = e^{-2 lambda} var_n + 2 D_ss. Throws SingularityError at
/// the poles.
TopDiffusionStep top_diffusion_step(const BlochVector& l, const TopParams& params, const Eigen::Vector3d& e_s,
                                    double var, double lambda);

/// Orbit l_0..l_{n-1} with the stable direction at each point, obtained by
/// iterating the inverse tangent map back from l_{n-1+n_conv}.
struct TopStableFrame {
  std::vector<BlochVector> orbit;
  std::vector<Eigen::Vector3d> e_s;
};

TopStableFrame top_stable_frame(const BlochVector& l0, const TopParams& params, long n, long n_conv);

struct TopVarianceRun {
  std::vector<double> dss;
  /// var[0] = var0, var[k+1] from step k.
  std::vector<double> var;
  double lambda = 0.0;
};

TopVarianceRun top_variance_run(const BlochVector& l0, const TopParams& params, long n_steps, double lambda,
                                double var0, long n_conv = 60);

}  // namespace dicke
