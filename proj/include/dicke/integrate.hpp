#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "dicke/dopri5.hpp"
#include "dicke/dynamics.hpp"
#include "dicke/model.hpp"
#include "dicke/phase_space.hpp"

namespace dicke {

struct IntegrationOptions {
  double rtol = 1e-9;
  double atol = 1e-11;
  /// Spacing of the uniform output grid.
  double sample_dt = 0.1;
  /// Keep the continuous extension of every accepted step.
  bool keep_dense = false;
};

enum class RunStatus { Ok, StepFailure };

struct StepStats {
  long accepted = 0;
  long rejected = 0;
  long rhs_evals = 0;
};

/// Piecewise quartic continuous extension of the embedded trajectory.
class DenseTrack {
 public:
  void append(double t0, double h, const std::array<Eigen::VectorXd, 5>& coef);
  bool empty() const { return t0_.empty(); }
  std::size_t size() const { return t0_.size(); }
  double t_begin() const { return t0_.front(); }
  double t_end() const { return t0_.back() + h_.back(); }
  double segment_t0(std::size_t k) const { return t0_[k]; }
  double segment_h(std::size_t k) const { return h_[k]; }

  /// Segment index containing t (last segment for t == t_end).
  std::size_t find(double t) const;
  Embedded eval(double t) const;
  Embedded eval_segment(std::size_t k, double t) const;

 private:
  std::vector<double> t0_;
  std::vector<double> h_;
  std::vector<double> coef_;  // 25 doubles per segment: r1..r5, each 5 long
};

/// Output of an integration run. Samples lie on a uniform grid plus the final
/// time. On StepFailure the samples reached so far are kept and `status`
/// carries the failure.
struct Trajectory {
  std::vector<double> times;
  std::vector<CanonicalState> states;
  std::vector<Embedded> points;
  std::vector<double> energies;
  DenseTrack dense;
  StepStats stats;
  /// max |eps(t) - eps(0)| / max(1, |eps(0)|) over the samples.
  double energy_drift = 0.0;
  RunStatus status = RunStatus::Ok;
  std::string diagnostic;

  bool ok() const { return status == RunStatus::Ok; }
  /// Throws StepFailure with the diagnostic unless the run completed.
  void require_ok() const;
  double duration() const { return times.empty() ? 0.0 : times.back() - times.front(); }
};

Trajectory integrate(const CanonicalState& state0, const ModelParams& params, double t_end,
                     const IntegrationOptions& opt = {});
Trajectory integrate_embedded(const Embedded& e0, const ModelParams& params, double t_end,
                              const IntegrationOptions& opt = {});

/// Joint integration of a trajectory and a set of tangent vectors.
struct TangentRun {
  Trajectory trajectory;
  std::vector<double> renorm_times;
  /// Cumulative log stretching factor of each Gram-Schmidt vector at each
  /// renormalisation time.
  std::vector<std::vector<double>> log_norms;
  /// Orthonormal embedded tangent vectors right after each renormalisation.
  std::vector<std::vector<Embedded>> tangents;

  std::size_t vector_count() const { return log_norms.empty() ? 0 : log_norms.front().size(); }
  /// log_norms / elapsed time at the end of the run.
  std::vector<double> rates() const;
  /// Tangent vectors at renormalisation k in canonical components.
  std::vector<Vec4> canonical_tangents(std::size_t k) const;
};

/// Tangent vectors are given in canonical components (dI, dpsi, dc, dphi).
/// Gram-Schmidt uses the Euclidean metric of the embedding. Throws
/// DegenerateTangentError on rank loss; StepFailure is reported through
/// trajectory.status.
TangentRun integrate_with_tangent(const CanonicalState& state0, std::span<const Vec4> tangent0,
                                  const ModelParams& params, double t_end, double renorm_dt,
                                  const IntegrationOptions& opt = {});
TangentRun integrate_with_tangent_embedded(const Embedded& e0, std::span<const Embedded> tangent0,
                                           const ModelParams& params, double t_end, double renorm_dt,
                                           const IntegrationOptions& opt = {});

/// Orthonormalises `vs` in place (modified Gram-Schmidt after projection onto
/// the tangent space at e) and returns log of each pre-normalisation length.
std::vector<double> gram_schmidt(const Embedded& e, std::vector<Embedded>& vs);

enum class SectionDirection { Increasing, Decreasing, Both };

struct SectionEvent {
  double t = 0.0;
  CanonicalState state;
  BlochVector l;
  /// +1 when psi increases through psi0, -1 when it decreases.
  int direction = 0;
};

/// Crossings of psi = psi0 on the stored continuous extension, located by
/// bracketing and bisection. Requires keep_dense.
std::vector<SectionEvent> find_section_crossings(const Trajectory& traj, double psi0, SectionDirection dir);

/// Integrates until `n_events` crossings have been collected or t_max is
/// reached, without storing the trajectory.
struct SectionRun {
  std::vector<SectionEvent> events;
  double t_reached = 0.0;
  double energy_drift = 0.0;
  RunStatus status = RunStatus::Ok;
  std::string diagnostic;
};

SectionRun collect_section_events(const CanonicalState& state0, const ModelParams& params, double psi0,
                                  SectionDirection dir, std::size_t n_events, double t_max,
                                  const IntegrationOptions& opt = {});

}  // namespace dicke
