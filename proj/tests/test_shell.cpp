#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dicke/errors.hpp"
#include "dicke/shell.hpp"
#include "helpers.hpp"

using namespace dicke;

TEST_CASE("shell roots") {
  const ModelParams p = ModelParams::dimensionless(1.2, 1.5);
  Rng r(1, 0);
  int one = 0;
  for (int k = 0; k < 2000; ++k) {
    const double psi = r.uniform(0, kTwoPi), c = r.uniform(-1, 1), phi = r.uniform(0, kTwoPi);
    const double eps = r.uniform(-1.3, 3.0);
    const ShellRoots s = solve_I_on_shell(psi, c, phi, eps, p);
    if (eps > c) {
      CHECK(s.multiplicity == 1);
      ++one;
    }
    const double x = std::cos(psi) * std::cos(phi);
    if (x >= 0 && eps < c) CHECK(s.multiplicity == 0);
    for (int i = 0; i < s.multiplicity; ++i) {
      CHECK(s.I[i] >= 0.0);
      CHECK(std::abs(energy(CanonicalState(s.I[i], psi, c, phi), p) - eps) < 1e-10);
      // |d eps/dI| against a central difference
      const double h = 1e-5 * s.I[i];
      if (s.I[i] > 1e-3) {
        const double d = (energy(CanonicalState(s.I[i] + h, psi, c, phi), p) -
                          energy(CanonicalState(s.I[i] - h, psi, c, phi), p)) /
                         (2 * h);
        CHECK(std::abs(std::abs(d) - s.dh_dI[i]) < 1e-5 * std::max(1.0, s.dh_dI[i]));
      }
    }
    if (s.multiplicity == 2) CHECK(s.I[0] <= s.I[1]);
  }
  CHECK(one > 0);

  const ModelParams free(1.0, 2.0, 0.0);
  const ShellRoots f = solve_I_on_shell(0.3, 0.25, 1.0, 4.0, free);
  REQUIRE(f.multiplicity == 1);
  CHECK(f.I[0] == (4.0 - 0.25) / 2.0);
}

TEST_CASE("trivial and asymptotic bounds") {
  const ModelParams p = ModelParams::dimensionless(1.0, 1.5);
  const ActionBounds t = action_bounds(7.0, p, BoundsMethod::Trivial);
  CHECK(t.I_min == 6.0);
  CHECK(t.I_max == 8.0);
  const ActionBounds a = action_bounds(100.0, p, BoundsMethod::Asymptotic);
  CHECK(std::abs(a.I_min - 78.787) < 1e-3);
  CHECK(std::abs(a.I_max - 121.213) < 1e-3);
  CHECK_THROWS_AS(action_bounds(0.5, p, BoundsMethod::Asymptotic), DomainError);
  CHECK_THROWS_AS(action_bounds(-1.4, p, BoundsMethod::BoundarySearch), DomainError);
  CHECK(shell_minimum(p) == doctest::Approx(-(2.25 + 1 / 2.25) / 2));
  CHECK(shell_minimum(ModelParams::dimensionless(1.0, 0.5)) == -1.0);
}

TEST_CASE("boundary search brackets a brute-force scan of the shell") {
  for (double eps : {-0.5, 0.7, 3.0, 40.0}) {
    for (double gam : {0.6, 1.5, 2.5}) {
      const ModelParams p = ModelParams::dimensionless(1.3, gam);
      if (eps <= shell_minimum(p)) continue;
      const ActionBounds b = action_bounds(eps, p, BoundsMethod::BoundarySearch);
      double lo = 1e300, hi = -1e300;
      const int n = 120;
      for (int i = 0; i <= n; ++i) {
        for (int k = 0; k <= n; ++k) {
          for (int m = 0; m < 4; ++m) {
            // x = cos psi cos phi covers [-1, 1]; phi only enters through x here
            const double psi = std::numbers::pi * i / n;
            const double c = -1.0 + 2.0 * k / n;
            const double phi = m * std::numbers::pi / 3;
            const ShellRoots s = solve_I_on_shell(psi, c, phi, eps, p);
            for (int r = 0; r < s.multiplicity; ++r) {
              lo = std::min(lo, s.I[r]);
              hi = std::max(hi, s.I[r]);
            }
          }
        }
      }
      INFO("eps " << eps << " gamma " << gam);
      CHECK(b.I_min <= lo + 1e-9);
      CHECK(b.I_max >= hi - 1e-9);
      // the grid gets close to the extremes
      CHECK(lo - b.I_min < 0.02 * std::max(1.0, b.I_max));
      CHECK(b.I_max - hi < 0.02 * std::max(1.0, b.I_max));
    }
  }
}

TEST_CASE("closed-form moments") {
  const ModelParams p = ModelParams::dimensionless(1.0, 1.5);
  CHECK(moment_closed(0, 10.0, p) == 1.0);
  CHECK(moment_closed(1, 10.0, p) == doctest::Approx(10.75).epsilon(1e-15));
  CHECK(moment_closed(2, 10.0, p) == doctest::Approx(100 + 22.5 + 1.51875 + 1.0 / 3).epsilon(1e-15));
  const PhotonStats s = photon_mean_variance_closed(10.0, p);
  CHECK(s.mean == doctest::Approx(10.75));
  CHECK(photon_mean_variance_closed(10.0, ModelParams::dimensionless(1.0, 0.0)).variance == doctest::Approx(1.0 / 3));
  CHECK_THROWS_AS(photon_mean_variance_closed(1.0, p), DomainError);
}

TEST_CASE("variance forms agree across a parameter grid") {
  for (int a = 0; a < 10; ++a) {
    for (int b = 0; b < 10; ++b) {
      const double eps = 2.0 + 98.0 * a / 9.0;
      const ModelParams p = ModelParams::dimensionless(1.0, 0.5 + 2.5 * b / 9.0);
      const double m1 = moment_closed(1, eps, p), m2 = moment_closed(2, eps, p);
      const double v = photon_variance_physical(eps, p);
      CHECK(std::abs(v - (m2 - m1 * m1)) <= 1e-12 * std::abs(v));
      CHECK(std::abs(photon_mean_variance_closed(eps, p).variance - v) <= 1e-12 * std::abs(v));
    }
  }
}

TEST_CASE("Monte Carlo moments") {
  const ModelParams p = ModelParams::dimensionless(1.0, 1.5);
  const MomentEstimate m0 = microcanonical_moment(0, 10.0, p, 10000, 3);
  CHECK(m0.estimate == 1.0);
  CHECK(m0.std_error == 0.0);
  const MomentEstimate m1 = microcanonical_moment(1, 10.0, p, 200000, 3);
  const MomentEstimate m2 = microcanonical_moment(2, 10.0, p, 200000, 3);
  CHECK(std::abs(m1.estimate - 10.75) < 3 * m1.std_error);
  CHECK(std::abs(m2.estimate - moment_closed(2, 10.0, p)) < 3 * m2.std_error);
  CHECK(m1.n_samples == 200000);
  CHECK(m1.effective_samples > 0.5 * 200000);
  CHECK_THROWS_AS(microcanonical_moment(1, 0.5, p, 10000, 1), DomainError);
  CHECK_THROWS(microcanonical_moment(1, 10.0, p, 100, 1));

  const MomentEstimate again = microcanonical_moment(1, 10.0, p, 200000, 3);
  CHECK(again.estimate == m1.estimate);
}

TEST_CASE("standard error falls like n^-1/2") {
  const ModelParams p = ModelParams::dimensionless(1.0, 1.5);
  const double a = microcanonical_moment(2, 10.0, p, 100000, 5).std_error;
  const double b = microcanonical_moment(2, 10.0, p, 400000, 5).std_error;
  CHECK(a / b == doctest::Approx(2.0).epsilon(0.2));
}

TEST_CASE("Monte Carlo variance") {
  const ModelParams p = ModelParams::dimensionless(1.0, 1.5);
  const VarianceEstimate v = microcanonical_variance(20.0, p, 200000, 7);
  CHECK(std::abs(v.estimate - photon_mean_variance_closed(20.0, p).variance) < 3 * v.std_error);
}

TEST_CASE("fluctuations are macroscopic") {
  const ModelParams p = ModelParams::dimensionless(1.0, 1.5);
  double prev = 1e300;
  for (double eps : {5.0, 15.0, 50.0, 150.0, 500.0}) {
    const PhotonStats s = photon_mean_variance_closed(eps, p);
    const double r = s.variance / (s.mean * s.mean);
    CHECK(r > 0.001);
    CHECK(r < 1.0);
    CHECK(r < prev);
    prev = r;
  }
}
