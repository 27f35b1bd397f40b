#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dicke/chaos.hpp"
#include "dicke/dopri5.hpp"
#include "dicke/errors.hpp"
#include "dicke/integrate.hpp"
#include "helpers.hpp"

using namespace dicke;

namespace {

// y'' = -y from (1, 0); exact y = cos t.
double oscillator_error(double h) {
  StepperOptions o;
  o.rtol = 1e-2;
  o.atol = 1e-2;
  o.h_init = h;
  o.h_max = h;
  Dopri5 s(2, [](double, const Eigen::VectorXd& y, Eigen::VectorXd& f) { f = Eigen::Vector2d(y(1), -y(0)); }, o);
  s.reset(0.0, Eigen::Vector2d(1.0, 0.0));
  while (s.t() < 2.0 - 1e-12) s.step(2.0);
  return std::abs(s.y()(0) - std::cos(2.0));
}

double dense_error(double h) {
  StepperOptions o;
  o.rtol = 1e-2;
  o.atol = 1e-2;
  o.h_init = h;
  o.h_max = h;
  Dopri5 s(1, [](double, const Eigen::VectorXd& y, Eigen::VectorXd& f) { f = -y; }, o);
  s.reset(0.0, Eigen::VectorXd::Constant(1, 1.0));
  s.step(1.0);
  double worst = 0;
  for (int k = 1; k < 10; ++k) {
    const double t = s.t_prev() + 0.1 * k * s.h_last();
    worst = std::max(worst, std::abs(s.dense_component(t, 0) - std::exp(-t)));
  }
  return worst;
}

const ModelParams kFig1 = ModelParams::dimensionless(1.0, 3.0);

}  // namespace

TEST_CASE("Dormand-Prince global error is fifth order") {
  const double r = oscillator_error(0.1) / oscillator_error(0.05);
  CHECK(r > 22.0);
  CHECK(r < 45.0);
}

TEST_CASE("continuous extension is fourth order") {
  // local error of a degree-4 interpolant scales as h^5
  const double r = dense_error(0.2) / dense_error(0.1);
  CHECK(r > 20.0);
}

TEST_CASE("stepper turns repeated right-hand side failure into StepFailure") {
  StepperOptions o;
  o.h_init = 0.1;
  Dopri5 s(1,
           [](double t, const Eigen::VectorXd&, Eigen::VectorXd& f) {
             if (t > 0.5) throw SingularityError("wall");
             f = Eigen::VectorXd::Constant(1, 1.0);
           },
           o);
  s.reset(0.0, Eigen::VectorXd::Zero(1));
  CHECK_THROWS_AS(
      {
        while (true) s.step(1.0);
      },
      StepFailure);
  CHECK(s.t() <= 0.5);
}

TEST_CASE("tolerances are validated") {
  IntegrationOptions o;
  o.rtol = 0.5;
  CHECK_THROWS_AS(integrate(CanonicalState(1, 0, 0, 0), kFig1, 1.0, o), ToleranceError);
  o.rtol = 0.0;
  CHECK_THROWS_AS(integrate(CanonicalState(1, 0, 0, 0), kFig1, 1.0, o), ToleranceError);
}

TEST_CASE("decoupled flow is linear") {
  const ModelParams p(1.0, 1.4, 0.0);
  const CanonicalState s0(2.5, 0.3, 0.2, 1.0);
  IntegrationOptions o;
  o.rtol = 1e-12;
  o.atol = 1e-14;
  const Trajectory tr = integrate(s0, p, 50.0, o);
  REQUIRE(tr.ok());
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k];
    CHECK(std::abs(tr.states[k].I() - 2.5) < 1e-9);
    CHECK(std::abs(wrap_difference(tr.states[k].psi() - (0.3 - 1.4 * t))) < 1e-9);
    CHECK(std::abs(wrap_difference(tr.states[k].phi() - (1.0 + t))) < 1e-9);
    CHECK(std::abs(tr.states[k].c() - 0.2) < 1e-9);
  }
}

TEST_CASE("sample grid and bookkeeping") {
  IntegrationOptions o;
  o.sample_dt = 0.3;
  const Trajectory tr = integrate(sample_on_shell(20.0, kFig1, 5), kFig1, 10.0, o);
  REQUIRE(tr.times.size() == 35);
  CHECK(tr.times.back() == 10.0);
  for (std::size_t k = 1; k < tr.times.size(); ++k) CHECK(tr.times[k] > tr.times[k - 1]);
  CHECK(tr.stats.accepted > 0);
  CHECK(tr.states.size() == tr.times.size());
  CHECK(tr.energies.size() == tr.times.size());
}

TEST_CASE("strong-coupling regime conserves energy") {
  IntegrationOptions o;
  o.rtol = 1e-10;
  o.atol = 1e-12;
  o.sample_dt = 1.0;
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Trajectory tr = integrate(sample_on_shell(150.0, kFig1, seed), kFig1, 1000.0, o);
    REQUIRE(tr.ok());
    CHECK(tr.energy_drift < 1e-8);
  }
}

TEST_CASE("tighter tolerance does not worsen the drift") {
  const CanonicalState s0 = sample_on_shell(150.0, kFig1, 9);
  IntegrationOptions a;
  a.rtol = 1e-8;
  a.atol = 1e-10;
  IntegrationOptions b = a;
  b.rtol = 5e-9;
  const double da = integrate(s0, kFig1, 200.0, a).energy_drift;
  const double db = integrate(s0, kFig1, 200.0, b).energy_drift;
  CHECK(db <= 2.0 * da);
}

TEST_CASE("integration is deterministic") {
  const CanonicalState s0 = sample_on_shell(150.0, kFig1, 4);
  const Trajectory a = integrate(s0, kFig1, 100.0);
  const Trajectory b = integrate(s0, kFig1, 100.0);
  REQUIRE(a.times.size() == b.times.size());
  for (std::size_t k = 0; k < a.times.size(); ++k) {
    CHECK(a.points[k] == b.points[k]);
    CHECK(a.times[k] == b.times[k]);
  }
}

TEST_CASE("nearby initial conditions separate in the chaotic regime") {
  const CanonicalState s0 = sample_on_shell(150.0, kFig1, 6);
  const CanonicalState s1(s0.I() + 1e-6, s0.psi(), s0.c(), s0.phi());
  IntegrationOptions o;
  o.sample_dt = 1.0;
  const Trajectory a = integrate(s0, kFig1, 400.0, o);
  const Trajectory b = integrate(s1, kFig1, 400.0, o);
  double sep = 0;
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    const BlochVector la = bloch_of(a.points[k]), lb = bloch_of(b.points[k]);
    sep = std::max(sep, std::hypot(la.lx - lb.lx, la.ly - lb.ly, la.lz - lb.lz));
  }
  CHECK(sep > 0.5);
}

TEST_CASE("dense output stays on the sphere") {
  IntegrationOptions o;
  o.keep_dense = true;
  const Trajectory tr = integrate(sample_on_shell(150.0, kFig1, 8), kFig1, 50.0, o);
  for (double t = 0; t <= 50.0; t += 0.0137) {
    const CanonicalState s = to_canonical(tr.dense.eval(t));
    CHECK(std::abs(s.c()) <= 1.0 + 1e-12);
    CHECK(std::abs(bloch_of(tr.dense.eval(t)).norm() - 1.0) < 1e-8);
  }
}

TEST_CASE("tangent propagation: zero rates without coupling") {
  const ModelParams p(1.0, 1.0, 0.0);
  std::vector<Vec4> v = {Vec4(1, 0, 0, 0), Vec4(0, 1, 0, 0), Vec4(0, 0, 1, 0), Vec4(0, 0, 0, 1)};
  const TangentRun run = integrate_with_tangent(CanonicalState(2.0, 0.1, 0.3, 0.2), v, p, 500.0, 1.0);
  for (double r : run.rates()) CHECK(std::abs(r) < 1e-2);
}

TEST_CASE("tangent propagation conserves phase-space volume") {
  std::vector<Vec4> v = {Vec4(1, 0.1, 0, 0), Vec4(0, 1, 0.2, 0), Vec4(0, 0, 1, 0.1), Vec4(0.3, 0, 0, 1)};
  const TangentRun run = integrate_with_tangent(sample_on_shell(150.0, kFig1, 3), v, kFig1, 2000.0, 1.0);
  REQUIRE(run.trajectory.ok());
  const auto r = run.rates();
  CHECK(std::abs(r[0] + r[1] + r[2] + r[3]) < 1e-3);
  CHECK(r[0] > 0.1);
}

TEST_CASE("rank loss is reported") {
  const Embedded e = embed(CanonicalState(1.0, 0.0, 0.0, 0.0));
  Embedded a = Embedded::Zero();
  a(0) = 1.0;
  std::vector<Embedded> vs = {a, 2.0 * a};
  CHECK_THROWS_AS(gram_schmidt(e, vs), DegenerateTangentError);
}

TEST_CASE("section crossings of the decoupled flow are equally spaced") {
  const ModelParams p(1.0, 1.3, 0.0);
  IntegrationOptions o;
  o.keep_dense = true;
  const Trajectory tr = integrate(CanonicalState(1.0, 0.2, 0.1, 0.0), p, 100.0, o);
  const auto ev = find_section_crossings(tr, 1.0, SectionDirection::Decreasing);
  REQUIRE(ev.size() >= 15);
  for (std::size_t k = 1; k < ev.size(); ++k) CHECK(std::abs(ev[k].t - ev[k - 1].t - kTwoPi / 1.3) < 1e-9);
  for (const auto& e : ev) {
    CHECK(std::abs(wrap_difference(e.state.psi() - 1.0)) < 1e-9);
    CHECK(e.direction == -1);
  }
  CHECK(find_section_crossings(tr, 1.0, SectionDirection::Increasing).empty());
}

TEST_CASE("strong-coupling regime section count follows the oscillator frequency") {
  IntegrationOptions o;
  o.keep_dense = true;
  const Trajectory tr = integrate(sample_on_shell(150.0, kFig1, 2), kFig1, 500.0, o);
  const auto ev = find_section_crossings(tr, 0.0, SectionDirection::Decreasing);
  const double expected = 500.0 / kTwoPi;
  CHECK(std::abs(static_cast<double>(ev.size()) - expected) < 0.2 * expected);
  for (const auto& e : ev) CHECK(std::abs(wrap_difference(e.state.psi())) < 1e-9);
  for (std::size_t k = 1; k < ev.size(); ++k) CHECK(ev[k].t - ev[k - 1].t > 0.5 * kTwoPi);

  const SectionRun run =
      collect_section_events(sample_on_shell(150.0, kFig1, 2), kFig1, 0.0, SectionDirection::Decreasing, 20, 1e4);
  REQUIRE(run.events.size() == 20);
  for (std::size_t k = 0; k < 20; ++k) CHECK(std::abs(run.events[k].t - ev[k].t) < 1e-6);
}
