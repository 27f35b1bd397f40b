#include "dicke/chaos.hpp"

#include <algorithm>
#include <cmath>

#include "dicke/errors.hpp"
#include "dicke/shell.hpp"

namespace dicke {

// ---------------------------------------------------------------- Lyapunov

LyapunovSpectrum lyapunov_spectrum(const CanonicalState& state0, const ModelParams& p, double t_total,
                                   const LyapunovOptions& opt) {
  if (!(t_total > 0.0)) throw DomainError("lyapunov_spectrum: t_total must be positive");
  if (opt.windows < 2) throw DomainError("lyapunov_spectrum: need at least two windows");

  Rng rng(opt.tangent_seed, 0);
  std::vector<Embedded> tangents(4);
  for (auto& v : tangents) {
    for (int i = 0; i < 5; ++i) v(i) = rng.normal();
  }
  TangentRun run = integrate_with_tangent_embedded(embed(state0), tangents, p, t_total, opt.renorm_dt,
                                                   opt.integration);
  run.trajectory.require_ok();

  const auto& times = run.renorm_times;
  const auto& logs = run.log_norms;
  const double T = times.back();
  auto k0 = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), opt.discard_fraction * T) -
                                     times.begin());
  k0 = std::min(k0, times.size() - 2);
  const double t0 = times[k0];

  LyapunovSpectrum out;
  out.t_total = T;
  out.energy_drift = run.trajectory.energy_drift;
  for (std::size_t i = 0; i < 4; ++i) out.exponents[i] = (logs.back()[i] - logs[k0][i]) / (T - t0);
  std::sort(out.exponents.begin(), out.exponents.end(), std::greater<>());

  for (int w = 1; w <= opt.windows; ++w) {
    const double tw = t0 + (T - t0) * w / opt.windows;
    auto k = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), tw - 1e-9) - times.begin());
    k = std::min(k, times.size() - 1);
    if (k <= k0) continue;
    double best = logs[k][0] - logs[k0][0];
    for (std::size_t i = 1; i < 4; ++i) best = std::max(best, logs[k][i] - logs[k0][i]);
    out.history_times.push_back(times[k]);
    out.history.push_back(best / (times[k] - t0));
  }

  const double lam = out.max();
  const std::size_t n = out.history.size();
  if (n >= 2 && std::abs(out.history[n - 1] - out.history[n - 2]) > 0.1 * std::max(std::abs(lam), 1e-2)) {
    throw NonConvergenceError("lyapunov_spectrum: leading exponent not settled between the last two windows");
  }
  if (lam > 1e-2 && lam * (T - t0) < 100.0) {
    throw NonConvergenceError("lyapunov_spectrum: run covers fewer than 100 Lyapunov times");
  }
  return out;
}

// ---------------------------------------------------------------- covariant frame

std::vector<Embedded> carry_tangent(const Trajectory& traj, const ModelParams& p, double t_start,
                                    const std::vector<double>& sample_times, double sigma, Embedded v0,
                                    double rtol, double atol) {
  const DenseTrack& track = traj.dense;
  Dopri5 stepper(
      5,
      [&](double tau, const Eigen::VectorXd& v, Eigen::VectorXd& f) {
        const Embedded x = track.eval(t_start + sigma * tau);
        f = sigma * (embedded_jacobian(x, p) * Embedded(v));
      },
      {rtol, atol});
  v0 = project_tangent(track.eval(t_start), v0);
  stepper.reset(0.0, Eigen::VectorXd(v0 / v0.norm()));

  std::vector<Embedded> out;
  out.reserve(sample_times.size());
  std::size_t next = 0;
  const double tau_end = std::abs(sample_times.back() - t_start);
  Eigen::VectorXd buf(5);
  while (next < sample_times.size()) {
    const double tau_s = std::abs(sample_times[next] - t_start);
    if (tau_s <= stepper.t()) {
      if (stepper.t() == 0.0) {
        buf = stepper.y();
      } else {
        stepper.dense(tau_s, buf);
      }
      Embedded v = project_tangent(track.eval(sample_times[next]), Embedded(buf));
      out.push_back(v / v.norm());
      ++next;
      continue;
    }
    stepper.step(tau_end);
    const double n = stepper.y().norm();
    if (n > 1e8 || n < 1e-8) {
      // flush the samples covered by this step before rescaling
      while (next < sample_times.size() && std::abs(sample_times[next] - t_start) <= stepper.t()) {
        stepper.dense(std::abs(sample_times[next] - t_start), buf);
        Embedded v = project_tangent(track.eval(sample_times[next]), Embedded(buf));
        out.push_back(v / v.norm());
        ++next;
      }
      stepper.reset(stepper.t(), stepper.y() / n);
    }
  }
  return out;
}

Mat4 FrameSample::C() const {
  Mat4 c;
  c.col(0) = e_s;
  c.col(1) = e_u;
  c.col(2) = e_eps;
  c.col(3) = e_tau;
  return c;
}

namespace {

Embedded random_embedded(Rng& rng) {
  Embedded v;
  for (int i = 0; i < 5; ++i) v(i) = rng.normal();
  return v;
}

Vec4 unit(const Vec4& v) { return v / v.norm(); }

}  // namespace

CovariantFrame covariant_frame(const Trajectory& traj, const ModelParams& p, double t_conv, const FrameOptions& opt) {
  if (traj.dense.empty()) throw DomainError("covariant_frame: trajectory has no dense output");
  if (!(t_conv > 0.0)) throw DomainError("covariant_frame: t_conv must be positive");
  const double T0 = traj.dense.t_begin();
  const double T1 = traj.dense.t_end();
  if (!(T1 - T0 > 2.0 * t_conv)) throw DomainError("covariant_frame: trajectory shorter than 2 t_conv");
  const double wb = opt.window_begin.value_or(T0 + t_conv);
  const double we = opt.window_end.value_or(T1 - t_conv);
  if (wb - t_conv < T0 - 1e-9 || we + t_conv > T1 + 1e-9 || !(wb < we)) {
    throw DomainError("covariant_frame: window does not leave t_conv at both ends");
  }

  std::vector<std::size_t> idx;
  std::vector<double> ts;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (traj.times[i] >= wb - 1e-9 && traj.times[i] <= we + 1e-9) {
      idx.push_back(i);
      ts.push_back(traj.times[i]);
    }
  }
  if (ts.empty()) throw DomainError("covariant_frame: no samples inside the window");

  Rng rng(opt.seed, 0);
  const Embedded seed_a = random_embedded(rng);
  const Embedded seed_b = random_embedded(rng);
  const Embedded seed_s = random_embedded(rng);
  const double t_fwd = std::max(T0, wb - t_conv);
  const double t_bwd = std::min(T1, we + t_conv);

  const auto fwd_a = carry_tangent(traj, p, t_fwd, ts, +1.0, seed_a, opt.rtol, opt.atol);
  const auto fwd_b = carry_tangent(traj, p, t_fwd, ts, +1.0, seed_b, opt.rtol, opt.atol);
  std::vector<double> ts_rev(ts.rbegin(), ts.rend());
  auto bwd = carry_tangent(traj, p, t_bwd, ts_rev, -1.0, seed_s, opt.rtol, opt.atol);
  std::reverse(bwd.begin(), bwd.end());

  CovariantFrame frame;
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const double cosang = std::min(1.0, std::abs(fwd_a[k].dot(fwd_b[k])));
    frame.seed_angle = std::max(frame.seed_angle, std::acos(cosang));
  }
  if (frame.seed_angle > opt.max_seed_angle) {
    throw NonConvergenceError("covariant_frame: unstable directions from two seeds disagree");
  }

  frame.samples.reserve(ts.size());
  for (std::size_t k = 0; k < ts.size(); ++k) {
    const Embedded& x = traj.points[idx[k]];
    FrameSample s;
    s.t = ts[k];
    s.state = traj.states[idx[k]];
    s.e_u = unit(tangent_to_canonical(x, fwd_a[k]));
    s.e_s = unit(tangent_to_canonical(x, bwd[k]));
    s.e_eps = unit(energy_gradient(s.state, p));
    s.e_tau = unit(classical_drift(s.state, p).as_vector());
    frame.samples.push_back(s);
  }
  return frame;
}

// ---------------------------------------------------------------- sampling

CanonicalState sample_on_shell(double eps, const ModelParams& p, Rng& rng,
                               std::optional<std::pair<double, double>> c_range) {
  double c_lo = -1.0, c_hi = 1.0;
  if (c_range) {
    c_lo = std::max(-1.0, c_range->first);
    c_hi = std::min(1.0, c_range->second);
    if (!(c_lo <= c_hi)) throw DomainError("sample_on_shell: empty c range");
  }
  for (long attempt = 0; attempt < 1000000; ++attempt) {
    const double psi = kTwoPi * rng.uniform();
    const double phi = kTwoPi * rng.uniform();
    const double c = rng.uniform(c_lo, c_hi);
    const ShellRoots r = solve_I_on_shell(psi, c, phi, eps, p);
    if (r.multiplicity == 0) continue;
    const int pick = r.multiplicity == 2 && rng.uniform() < 0.5 ? 1 : 0;
    return CanonicalState(r.I[pick], psi, c, phi);
  }
  throw EmptyShellError("sample_on_shell: no shell point after 1e6 draws");
}

CanonicalState sample_on_shell(double eps, const ModelParams& p, std::uint64_t seed,
                               std::optional<std::pair<double, double>> c_range) {
  Rng rng(seed, 0);
  return sample_on_shell(eps, p, rng, c_range);
}

}  // namespace dicke
