#include "dicke/integrate.hpp"

#include <algorithm>
#include <cmath>

#include "dicke/errors.hpp"

namespace dicke {

// ---------------------------------------------------------------- DenseTrack

void DenseTrack::append(double t0, double h, const std::array<Eigen::VectorXd, 5>& coef) {
  t0_.push_back(t0);
  h_.push_back(h);
  for (const auto& r : coef) {
    for (Eigen::Index i = 0; i < 5; ++i) coef_.push_back(r(i));
  }
}

std::size_t DenseTrack::find(double t) const {
  if (t0_.empty()) throw DomainError("DenseTrack: no dense output stored");
  if (t < t_begin() - 1e-12 * std::max(1.0, std::abs(t)) || t > t_end() + 1e-12 * std::max(1.0, std::abs(t))) {
    throw DomainError("DenseTrack: time outside the stored range");
  }
  auto it = std::upper_bound(t0_.begin(), t0_.end(), t);
  if (it == t0_.begin()) return 0;
  return static_cast<std::size_t>(std::distance(t0_.begin(), it)) - 1;
}

Embedded DenseTrack::eval_segment(std::size_t k, double t) const {
  const double theta = (t - t0_[k]) / h_[k];
  const double* c = &coef_[25 * k];
  Embedded out;
  for (int i = 0; i < 5; ++i) out(i) = dense_eval(c[i], c[5 + i], c[10 + i], c[15 + i], c[20 + i], theta);
  return out;
}

Embedded DenseTrack::eval(double t) const { return eval_segment(find(t), t); }

// ---------------------------------------------------------------- Trajectory

void Trajectory::require_ok() const {
  if (status != RunStatus::Ok) throw StepFailure(diagnostic);
}

namespace {

void check_run_inputs(double t_end, const IntegrationOptions& opt) {
  validate_tolerances(opt.rtol, opt.atol);
  if (!(t_end > 0.0)) throw DomainError("integrate: t_end must be positive");
  if (!(opt.sample_dt > 0.0)) throw DomainError("integrate: sample_dt must be positive");
}

// Uniform sample grid k * dt, closed by t_end.
class SampleGrid {
 public:
  SampleGrid(double dt, double t_end) : dt_(dt), t_end_(t_end) {}
  double next() const {
    const double t = static_cast<double>(k_) * dt_;
    return t < t_end_ - 1e-9 * dt_ ? t : t_end_;
  }
  bool done() const { return done_; }
  void advance() {
    if (next() >= t_end_) done_ = true;
    ++k_;
  }

 private:
  double dt_;
  double t_end_;
  long k_ = 0;
  bool done_ = false;
};

void record(Trajectory& traj, double t, const Embedded& e, const ModelParams& p) {
  traj.times.push_back(t);
  traj.points.push_back(e);
  traj.states.push_back(to_canonical(e));
  const double eps = energy_embedded(e, p);
  traj.energies.push_back(eps);
  const double eps0 = traj.energies.front();
  traj.energy_drift = std::max(traj.energy_drift, std::abs(eps - eps0) / std::max(1.0, std::abs(eps0)));
}

void record_stats(Trajectory& traj, const Dopri5& stepper) {
  traj.stats.accepted = stepper.accepted();
  traj.stats.rejected = stepper.rejected();
  traj.stats.rhs_evals = stepper.rhs_evals();
}

// Records every grid sample that falls inside the stepper's last step.
void emit_samples(Trajectory& traj, SampleGrid& grid, const Dopri5& stepper, const ModelParams& p) {
  while (!grid.done() && grid.next() <= stepper.t()) {
    const double ts = grid.next();
    Embedded e;
    for (Eigen::Index i = 0; i < 5; ++i) e(i) = stepper.dense_component(ts, i);
    record(traj, ts, e, p);
    grid.advance();
  }
}

}  // namespace

Trajectory integrate_embedded(const Embedded& e0, const ModelParams& params, double t_end,
                              const IntegrationOptions& opt) {
  check_run_inputs(t_end, opt);
  Dopri5 stepper(
      5,
      [&params](double, const Eigen::VectorXd& y, Eigen::VectorXd& f) {
        f = embedded_field(Embedded(y), params);
      },
      {opt.rtol, opt.atol});
  stepper.reset(0.0, Eigen::VectorXd(e0));

  Trajectory traj;
  SampleGrid grid(opt.sample_dt, t_end);
  record(traj, 0.0, e0, params);
  grid.advance();
  while (stepper.t() < t_end) {
    try {
      stepper.step(t_end);
    } catch (const StepFailure& ex) {
      traj.status = RunStatus::StepFailure;
      traj.diagnostic = ex.what();
      break;
    }
    if (opt.keep_dense) traj.dense.append(stepper.t_prev(), stepper.h_last(), stepper.dense_coefficients());
    emit_samples(traj, grid, stepper, params);
  }
  record_stats(traj, stepper);
  return traj;
}

Trajectory integrate(const CanonicalState& state0, const ModelParams& params, double t_end,
                     const IntegrationOptions& opt) {
  return integrate_embedded(embed(state0), params, t_end, opt);
}

// ---------------------------------------------------------------- tangents

std::vector<double> gram_schmidt(const Embedded& e, std::vector<Embedded>& vs) {
  std::vector<double> logs(vs.size());
  for (std::size_t k = 0; k < vs.size(); ++k) {
    Embedded v = project_tangent(e, vs[k]);
    const double n0 = v.norm();
    for (std::size_t i = 0; i < k; ++i) v -= vs[i].dot(v) * vs[i];
    const double n = v.norm();
    if (!(n > 1e-10 * n0) || !std::isfinite(n)) {
      throw DegenerateTangentError("Gram-Schmidt: tangent vectors lost rank");
    }
    vs[k] = v / n;
    logs[k] = std::log(n);
  }
  return logs;
}

std::vector<double> TangentRun::rates() const {
  std::vector<double> r;
  if (renorm_times.empty()) return r;
  const double T = renorm_times.back();
  for (double l : log_norms.back()) r.push_back(l / T);
  return r;
}

std::vector<Vec4> TangentRun::canonical_tangents(std::size_t k) const {
  // tangents[k] belongs to renorm_times[k]; locate the matching trajectory point
  const double t = renorm_times.at(k);
  auto it = std::lower_bound(trajectory.times.begin(), trajectory.times.end(), t - 1e-9);
  Embedded e = it != trajectory.times.end() && std::abs(*it - t) < 1e-9 ? trajectory.points[it - trajectory.times.begin()]
                                                                       : trajectory.dense.eval(t);
  std::vector<Vec4> out;
  for (const auto& v : tangents.at(k)) out.push_back(tangent_to_canonical(e, v));
  return out;
}

TangentRun integrate_with_tangent_embedded(const Embedded& e0, std::span<const Embedded> tangent0,
                                           const ModelParams& params, double t_end, double renorm_dt,
                                           const IntegrationOptions& opt) {
  check_run_inputs(t_end, opt);
  if (!(renorm_dt > 0.0)) throw DomainError("integrate_with_tangent: renorm_dt must be positive");
  const std::size_t K = tangent0.size();
  if (K == 0 || K > 4) throw DomainError("integrate_with_tangent: need 1..4 tangent vectors");

  std::vector<Embedded> vs(tangent0.begin(), tangent0.end());
  gram_schmidt(e0, vs);

  const auto dim = static_cast<Eigen::Index>(5 * (K + 1));
  Dopri5 stepper(
      static_cast<std::size_t>(dim),
      [&params, K](double, const Eigen::VectorXd& y, Eigen::VectorXd& f) {
        const Embedded e = y.head<5>();
        f.head<5>() = embedded_field(e, params);
        const Mat5 J = embedded_jacobian(e, params);
        for (std::size_t k = 0; k < K; ++k) {
          const auto off = static_cast<Eigen::Index>(5 * (k + 1));
          f.segment<5>(off) = J * y.segment<5>(off);
        }
      },
      {opt.rtol, opt.atol});

  Eigen::VectorXd y(dim);
  y.head<5>() = e0;
  for (std::size_t k = 0; k < K; ++k) y.segment<5>(static_cast<Eigen::Index>(5 * (k + 1))) = vs[k];
  stepper.reset(0.0, y);

  TangentRun run;
  Trajectory& traj = run.trajectory;
  SampleGrid grid(opt.sample_dt, t_end);
  record(traj, 0.0, e0, params);
  grid.advance();

  std::vector<double> cumulative(K, 0.0);
  run.renorm_times.push_back(0.0);
  run.log_norms.push_back(cumulative);
  run.tangents.push_back(vs);

  double t_seg = 0.0;
  while (t_seg < t_end && traj.ok()) {
    const double t_next = std::min(t_end, t_seg + renorm_dt);
    const double t_target = t_end - t_next < 1e-9 * renorm_dt ? t_end : t_next;
    while (stepper.t() < t_target) {
      try {
        stepper.step(t_target);
      } catch (const StepFailure& ex) {
        traj.status = RunStatus::StepFailure;
        traj.diagnostic = ex.what();
        break;
      }
      if (opt.keep_dense) traj.dense.append(stepper.t_prev(), stepper.h_last(), stepper.dense_coefficients());
      emit_samples(traj, grid, stepper, params);
    }
    if (!traj.ok()) break;

    y = stepper.y();
    const Embedded e = y.head<5>();
    for (std::size_t k = 0; k < K; ++k) vs[k] = y.segment<5>(static_cast<Eigen::Index>(5 * (k + 1)));
    const std::vector<double> logs = gram_schmidt(e, vs);
    for (std::size_t k = 0; k < K; ++k) {
      cumulative[k] += logs[k];
      y.segment<5>(static_cast<Eigen::Index>(5 * (k + 1))) = vs[k];
    }
    stepper.reset(t_target, y);
    t_seg = t_target;
    run.renorm_times.push_back(t_seg);
    run.log_norms.push_back(cumulative);
    run.tangents.push_back(vs);
  }
  record_stats(traj, stepper);
  return run;
}

TangentRun integrate_with_tangent(const CanonicalState& state0, std::span<const Vec4> tangent0,
                                  const ModelParams& params, double t_end, double renorm_dt,
                                  const IntegrationOptions& opt) {
  std::vector<Embedded> emb;
  for (const auto& v : tangent0) emb.push_back(tangent_to_embedded(state0, v));
  return integrate_with_tangent_embedded(embed(state0), emb, params, t_end, renorm_dt, opt);
}

// ---------------------------------------------------------------- sections

namespace {

// g = r sin(psi - psi0); roots on the ray r cos(psi - psi0) > 0 are section crossings
double section_fn(const Embedded& e, double cs, double sn) { return e(1) * cs - e(0) * sn; }
double ray_fn(const Embedded& e, double cs, double sn) { return e(0) * cs + e(1) * sn; }

template <class Eval>
void scan_interval(const Eval& eval, double ta, double tb, double psi0, SectionDirection dir, double t_tol,
                   std::vector<SectionEvent>& out) {
  const double cs = std::cos(psi0), sn = std::sin(psi0);
  constexpr int kSub = 4;
  double t_lo = ta;
  Embedded e_lo = eval(ta);
  double g_lo = section_fn(e_lo, cs, sn);
  for (int s = 1; s <= kSub; ++s) {
    const double t_hi = s == kSub ? tb : ta + (tb - ta) * s / kSub;
    const Embedded e_hi = eval(t_hi);
    const double g_hi = section_fn(e_hi, cs, sn);
    const bool neg_lo = g_lo < 0.0, neg_hi = g_hi < 0.0;
    if (neg_lo != neg_hi) {
      const int direction = neg_lo ? +1 : -1;
      const bool wanted = dir == SectionDirection::Both || (dir == SectionDirection::Increasing && direction > 0) ||
                          (dir == SectionDirection::Decreasing && direction < 0);
      if (wanted) {
        double a = t_lo, b = t_hi;
        Embedded e_mid = e_hi;
        for (int it = 0; it < 300; ++it) {
          const double m = 0.5 * (a + b);
          if (m <= a || m >= b) break;
          e_mid = eval(m);
          const double gm = section_fn(e_mid, cs, sn);
          if ((gm < 0.0) == neg_lo) a = m; else b = m;
          if (b - a <= t_tol) {
            const CanonicalState st = to_canonical(e_mid);
            if (std::abs(wrap_difference(st.psi() - psi0)) < 1e-10) break;
          }
        }
        const double t_root = 0.5 * (a + b);
        const Embedded e_root = eval(t_root);
        if (ray_fn(e_root, cs, sn) > 0.0) {
          SectionEvent ev;
          ev.t = t_root;
          ev.state = to_canonical(e_root);
          ev.l = bloch_of(e_root);
          ev.direction = direction;
          out.push_back(ev);
        }
      }
    }
    t_lo = t_hi;
    e_lo = e_hi;
    g_lo = g_hi;
  }
}

}  // namespace

std::vector<SectionEvent> find_section_crossings(const Trajectory& traj, double psi0, SectionDirection dir) {
  if (traj.dense.empty()) throw DomainError("find_section_crossings: trajectory has no dense output");
  const double t_tol = 1e-12 * std::max(1.0, traj.dense.t_end());
  std::vector<SectionEvent> events;
  for (std::size_t k = 0; k < traj.dense.size(); ++k) {
    const double t0 = traj.dense.segment_t0(k);
    const double t1 = t0 + traj.dense.segment_h(k);
    scan_interval([&](double t) { return traj.dense.eval_segment(k, t); }, t0, t1, psi0, dir, t_tol, events);
  }
  return events;
}

SectionRun collect_section_events(const CanonicalState& state0, const ModelParams& params, double psi0,
                                  SectionDirection dir, std::size_t n_events, double t_max,
                                  const IntegrationOptions& opt) {
  check_run_inputs(t_max, opt);
  Dopri5 stepper(
      5,
      [&params](double, const Eigen::VectorXd& y, Eigen::VectorXd& f) {
        f = embedded_field(Embedded(y), params);
      },
      {opt.rtol, opt.atol});
  const Embedded e0 = embed(state0);
  stepper.reset(0.0, Eigen::VectorXd(e0));
  const double eps0 = energy_embedded(e0, params);
  const double t_tol = 1e-12 * std::max(1.0, t_max);

  SectionRun run;
  const auto eval = [&stepper](double t) {
    Embedded e;
    for (Eigen::Index i = 0; i < 5; ++i) e(i) = stepper.dense_component(t, i);
    return e;
  };
  while (stepper.t() < t_max && run.events.size() < n_events) {
    try {
      stepper.step(t_max);
    } catch (const StepFailure& ex) {
      run.status = RunStatus::StepFailure;
      run.diagnostic = ex.what();
      break;
    }
    scan_interval(eval, stepper.t_prev(), stepper.t(), psi0, dir, t_tol, run.events);
    const double eps = energy_embedded(Embedded(stepper.y()), params);
    run.energy_drift = std::max(run.energy_drift, std::abs(eps - eps0) / std::max(1.0, std::abs(eps0)));
  }
  if (run.events.size() > n_events) run.events.resize(n_events);
  run.t_reached = stepper.t();
  return run;
}

}  // namespace dicke
