#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dicke/dynamics.hpp"
#include "dicke/integrate.hpp"
#include "dicke/model.hpp"
#include "dicke/rng.hpp"

namespace dicke {

struct LyapunovSpectrum {
  /// Descending.
  std::array<double, 4> exponents{};
  /// Running estimate of the leading exponent at the end of each window,
  /// measured from the end of the discarded transient.
  std::vector<double> history_times;
  std::vector<double> history;
  double t_total = 0.0;
  double energy_drift = 0.0;

  double max() const { return exponents[0]; }
  double sum() const { return exponents[0] + exponents[1] + exponents[2] + exponents[3]; }
};

struct LyapunovOptions {
  double renorm_dt = 1.0;
  double discard_fraction = 0.1;
  int windows = 10;
  /// Seed for the random initial tangent frame.
  std::uint64_t tangent_seed = 7;
  IntegrationOptions integration{};
};

/// Benettin estimate from four tangent vectors. Throws NonConvergenceError
/// when the last two window estimates of the leading exponent differ by more
/// than 10% (of max(|lambda|, 1e-2)), or when a positive exponent has been
/// followed for fewer than 100 Lyapunov times.
LyapunovSpectrum lyapunov_spectrum(const CanonicalState& state0, const ModelParams& p, double t_total,
                                   const LyapunovOptions& opt = {});

/// Per-point frame in canonical components (I, psi, c, phi).
struct FrameSample {
  double t = 0.0;
  CanonicalState state;
  Vec4 e_s, e_u, e_eps, e_tau;

  /// C = (e_s, e_u, e_eps, e_tau), not orthogonalised.
  Mat4 C() const;
};

struct CovariantFrame {
  std::vector<FrameSample> samples;
  /// Largest angle between the unstable directions grown from two seeds.
  double seed_angle = 0.0;
};

struct FrameOptions {
  /// Reporting window; defaults to [t_conv, t_end - t_conv].
  std::optional<double> window_begin;
  std::optional<double> window_end;
  double rtol = 1e-10;
  double atol = 1e-12;
  std::uint64_t seed = 11;
  double max_seed_angle = 1e-3;
};

/// Carries the tangent vector v0 along the stored dense trajectory from
/// t_start (forward for sigma = +1, backward for sigma = -1) and returns it
/// normalised at each of the sample times, which must be monotone in the
/// direction of travel.
std::vector<Embedded> carry_tangent(const Trajectory& traj, const ModelParams& p, double t_start,
                                    const std::vector<double>& sample_times, double sigma, Embedded v0,
                                    double rtol = 1e-10, double atol = 1e-12);

/// Unstable directions are grown forward from window_begin - t_conv and
/// stable ones backward from window_end + t_conv along the stored dense
/// trajectory (traj must be integrated with keep_dense). Frames are reported
/// at the trajectory samples inside the window. Throws NonConvergenceError
/// when two forward seeds disagree by more than max_seed_angle.
CovariantFrame covariant_frame(const Trajectory& traj, const ModelParams& p, double t_conv,
                               const FrameOptions& opt = {});

/// Draws (psi, phi) uniform and c uniform on [c_range], solves for I and
/// retries when the shell misses; picks one of two roots at random. Throws
/// EmptyShellError after 10^6 consecutive misses.
CanonicalState sample_on_shell(double eps, const ModelParams& p, std::uint64_t seed,
                               std::optional<std::pair<double, double>> c_range = std::nullopt);
CanonicalState sample_on_shell(double eps, const ModelParams& p, Rng& rng,
                               std::optional<std::pair<double, double>> c_range = std::nullopt);

struct PoincarePoint {
  double lx = 0.0;
  double ly = 0.0;
  bool north = false;
};

struct PoincareTrack {
  std::uint64_t stream = 0;
  CanonicalState initial;
  std::vector<PoincarePoint> points;
  double t_reached = 0.0;
  double energy_drift = 0.0;
  RunStatus status = RunStatus::Ok;
  std::string diagnostic;
};

struct PoincareScan {
  double eps = 0.0;
  double gamma = 0.0;
  double nu = 0.0;
  double psi0 = 0.0;
  std::uint64_t seed = 0;
  std::vector<PoincareTrack> tracks;
};

struct PoincareOptions {
  SectionDirection direction = SectionDirection::Decreasing;
  /// Integration cap per trajectory; tracks that never reach the section stop here.
  double t_max = 5000.0;
  IntegrationOptions integration{};
};

/// One on-shell initial condition per trajectory, trajectory k drawn from
/// stream (seed, k).
PoincareScan poincare_scan(double eps, const ModelParams& p, int n_traj, int n_events, double psi0,
                           std::uint64_t seed, const PoincareOptions& opt = {});

/// Median over points of sqrt(l_min/l_max) of the covariance of the point
/// and its k nearest neighbours in the (lx, ly) plane. Close to 0 for points
/// on a smooth curve and O(1) for an area-filling cloud.
double thin_curve_metric(const std::vector<PoincarePoint>& pts, int k = 8);

/// Set of occupied cells of a bins x bins grid over [-1, 1]^2.
std::vector<int> occupied_cells(const std::vector<PoincarePoint>& pts, int bins = 50);

/// Occupied cells of each track as a fraction of the cells occupied by all
/// tracks together.
std::vector<double> coverage_fractions(const PoincareScan& scan, int bins = 50);

}  // namespace dicke
