#include "dicke/qdiff.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "dicke/errors.hpp"

namespace dicke {

ProjectedDiffusion project_diffusion(const DiffusionMatrix4& D, const FrameSample& frame) {
  ProjectedDiffusion out;
  out.ss = frame.e_s.dot(D.m * frame.e_s);
  out.su = frame.e_s.dot(D.m * frame.e_u);
  out.uu = frame.e_u.dot(D.m * frame.e_u);

  const Eigen::SelfAdjointEigenSolver<Mat4> eig(D.m);
  const Vec4 proj = eig.eigenvectors().transpose() * frame.e_s;
  out.ss_spectral = proj.cwiseAbs2().dot(eig.eigenvalues());
  const double scale = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1e-300);
  if (std::abs(out.ss - out.ss_spectral) > 1e-12 * scale) {
    throw Error("project_diffusion: quadratic and spectral forms disagree");
  }
  return out;
}

ReducedDiffusion dss_series(const CovariantFrame& frame, const ModelParams& p, QuasiprobKind kind) {
  ReducedDiffusion r;
  r.kind = kind;
  for (const auto& s : frame.samples) {
    const ProjectedDiffusion pd = project_diffusion(diffusion_matrix(s.state, p, kind), s);
    r.times.push_back(s.t);
    r.dss.push_back(pd.ss);
    r.dsu.push_back(pd.su);
    r.duu.push_back(pd.uu);
    r.cos_psi.push_back(std::cos(s.state.psi()));
  }
  return r;
}

namespace {

double uniform_step(const std::vector<double>& times) {
  if (times.size() < 2) throw GridError("variance recursion needs at least two samples");
  const double dt = (times.back() - times.front()) / static_cast<double>(times.size() - 1);
  for (std::size_t k = 1; k < times.size(); ++k) {
    if (std::abs(times[k] - times[k - 1] - dt) > 1e-9 * dt) throw GridError("samples are not uniformly spaced");
  }
  return dt;
}

VarianceSeries convolve(const std::vector<double>& times, const std::vector<double>& d, double rate, double lambda,
                        double var0) {
  if (d.size() != times.size()) throw DomainError("variance recursion: size mismatch");
  const double dt = uniform_step(times);
  const double decay = std::exp(rate * dt);
  VarianceSeries v;
  v.times = times;
  v.lambda = lambda;
  v.var0 = var0;
  v.var.resize(times.size());
  v.var[0] = var0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    v.var[k + 1] = decay * v.var[k] + 0.5 * dt * (decay * 2.0 * d[k] + 2.0 * d[k + 1]);
  }
  return v;
}

}  // namespace

VarianceSeries stable_variance(const std::vector<double>& times, const std::vector<double>& d, double lambda,
                               double var0) {
  if (!(lambda > 0.0)) throw DomainError("stable_variance: lambda must be positive");
  if (!(var0 >= 0.0)) throw DomainError("stable_variance: var0 must be non-negative");
  return convolve(times, d, -2.0 * lambda, lambda, var0);
}

VarianceSeries stable_variance(const ReducedDiffusion& dss, double lambda, double var0) {
  return stable_variance(dss.times, dss.dss, lambda, var0);
}

VarianceSeries unstable_variance(const ReducedDiffusion& dss, double lambda, double var0) {
  if (!(lambda > 0.0)) throw DomainError("unstable_variance: lambda must be positive");
  return convolve(dss.times, dss.duu, 2.0 * lambda, lambda, var0);
}

std::optional<double> first_negative(const VarianceSeries& v) {
  for (std::size_t k = 0; k < v.var.size(); ++k) {
    if (v.var[k] < 0.0) return v.times[k];
  }
  return std::nullopt;
}

NegativityResult p_function_negativity(const CovariantFrame& frame, const ModelParams& p, double lambda, double var0) {
  NegativityResult r;
  r.series = stable_variance(dss_series(frame, p, QuasiprobKind::P), lambda, var0);
  r.first_negative_time = first_negative(r.series);
  return r;
}

}  // namespace dicke
