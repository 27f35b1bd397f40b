#pragma once

#include <array>
#include <cstdint>

#include "dicke/model.hpp"

namespace dicke {

/// Solutions I >= 0 of energy(I, psi, c, phi) = eps at fixed angles.
struct ShellRoots {
  int multiplicity = 0;
  /// Ascending; only the first `multiplicity` entries are meaningful.
  std::array<double, 2> I{};
  /// |d eps / d I| at each root.
  std::array<double, 2> dh_dI{};
};

/// With x = cos psi cos phi and b = x sin theta,
///   sqrt(2 nu I)/gamma = +-sqrt(b^2 + (2/gamma^2)(eps - c)) - b,
/// keeping the non-negative branches.
ShellRoots solve_I_on_shell(double psi, double c, double phi, double eps, const ModelParams& p);

enum class BoundsMethod { Trivial, BoundarySearch, Asymptotic };

const char* to_string(BoundsMethod m);

struct ActionBounds {
  double I_min = 0.0;
  double I_max = 0.0;
  BoundsMethod method = BoundsMethod::Trivial;
};

/// Lowest energy reachable on the shell: -1 for gamma <= 1 and
/// -(gamma^2 + gamma^-2)/2 above the transition.
double shell_minimum(const ModelParams& p);

/// Trivial: ((eps - 1)/nu, (eps + 1)/nu), lower end clamped at 0.
/// BoundarySearch: extremal roots along the edges x = +-1 of the shell (poles
/// included as their end points), searched on a grid in c and refined by
/// golden section; I_min = 0 whenever |eps| <= 1.
/// Asymptotic: (eps/nu)(1 -+ sqrt(2 gamma^2 / eps)); needs eps > 1.
/// Throws DomainError below the shell minimum.
ActionBounds action_bounds(double eps, const ModelParams& p, BoundsMethod method);

struct MomentEstimate {
  int order = 0;
  /// <I^m> on the shell, i.e. <(a^dag a)^m> / j^m.
  double estimate = 0.0;
  double std_error = 0.0;
  long n_samples = 0;
  double effective_samples = 0.0;
  std::uint64_t seed = 0;
};

/// Self-normalised Monte Carlo over uniform (psi, phi, c) with weights
/// 1/|d eps/d I| per root. Standard error from 100 batch means; batch b uses
/// the stream (seed, b). Requires eps > 1 and n_samples >= 10^4.
MomentEstimate microcanonical_moment(int m, double eps, const ModelParams& p, long n_samples, std::uint64_t seed);

struct VarianceEstimate {
  /// <I^2> - <I>^2 on the shell.
  double estimate = 0.0;
  double std_error = 0.0;
  double mean = 0.0;
  long n_samples = 0;
};

/// Same sampler and batching as microcanonical_moment.
VarianceEstimate microcanonical_variance(double eps, const ModelParams& p, long n_samples, std::uint64_t seed);

/// Closed-form shell moments <I>, <I^2>:
///   M1 = (eps + gamma^2/3)/nu,
///   M2 = (eps^2 + eps gamma^2 + 3 gamma^4/10 + 1/3)/nu^2.
double moment_closed(int m, double eps, const ModelParams& p);

struct PhotonStats {
  double mean = 0.0;      ///< <n>/j
  double variance = 0.0;  ///< var(n)/j^2
};

/// mean = (eps + gamma^2/3)/nu,
/// variance = (eps gamma^2/3 + 17 gamma^4/90 + 1/3)/nu^2.
/// Cross-checked against photon_variance_physical and M2 - M1^2; throws
/// DomainError for eps <= 1.
PhotonStats photon_mean_variance_closed(double eps, const ModelParams& p);

/// var(n)/j^2 written in the physical couplings:
///   (1/3)(1/omega^2)(4 eps omega0 g^2/omega + 136 g^4/(15 omega^2) + omega0^2).
double photon_variance_physical(double eps, const ModelParams& p);

}  // namespace dicke
