#pragma once

#include <optional>
#include <vector>

#include "dicke/chaos.hpp"
#include "dicke/dynamics.hpp"
#include "dicke/integrate.hpp"

namespace dicke {

struct ProjectedDiffusion {
  double ss = 0.0;
  double su = 0.0;
  double uu = 0.0;
  /// D_ss from the eigen-decomposition sum_mu <e_s, v_mu>^2 D_mu.
  double ss_spectral = 0.0;
};

/// Quadratic forms of D in the frame's stable and unstable directions.
/// Throws Error if the spectral evaluation of D_ss disagrees beyond 1e-12
/// (relative to the spectral radius of D).
ProjectedDiffusion project_diffusion(const DiffusionMatrix4& D, const FrameSample& frame);

struct ReducedDiffusion {
  QuasiprobKind kind = QuasiprobKind::Q;
  std::vector<double> times;
  std::vector<double> dss;
  std::vector<double> dsu;
  std::vector<double> duu;
  /// Clock variable cos(psi) at each sample.
  std::vector<double> cos_psi;
};

/// D evaluated and projected at every frame sample.
ReducedDiffusion dss_series(const CovariantFrame& frame, const ModelParams& p, QuasiprobKind kind);

struct VarianceSeries {
  std::vector<double> times;
  std::vector<double> var;
  double lambda = 0.0;
  double var0 = 0.0;
};

/// var_{k+1} = e^{-2 lambda dt} var_k + (dt/2)(e^{-2 lambda dt} 2 D_k + 2 D_{k+1}),
/// the trapezoidal form of var(t) = e^{-2 lambda t} var0 + int e^{-2 lambda (t-t')} 2 D(t') dt'.
/// `d` must be uniformly sampled (GridError otherwise).
VarianceSeries stable_variance(const std::vector<double>& times, const std::vector<double>& d, double lambda,
                               double var0);
VarianceSeries stable_variance(const ReducedDiffusion& dss, double lambda, double var0);

/// Same recursion with the growing kernel e^{+2 lambda (t-t')} driven by D_uu.
VarianceSeries unstable_variance(const ReducedDiffusion& dss, double lambda, double var0);

struct NegativityResult {
  std::optional<double> first_negative_time;
  VarianceSeries series;
};

/// Stable variance under the P-function diffusion (sign-flipped D). Reports
/// the first sample time at which the variance is negative, if any.
NegativityResult p_function_negativity(const CovariantFrame& frame, const ModelParams& p, double lambda, double var0);

/// First time a variance series drops below zero.
std::optional<double> first_negative(const VarianceSeries& v);

}  // namespace dicke
