#include <doctest.h>

#include <cmath>
#include <numbers>

#include "dicke/errors.hpp"
#include "dicke/model.hpp"
#include "helpers.hpp"

using namespace dicke;

TEST_CASE("derived couplings follow the stored physical values") {
  const ModelParams p(2.0, 0.5, 0.75, 10.0);
  CHECK(p.g_c() == doctest::Approx(0.5));
  CHECK(p.gamma() == doctest::Approx(1.5));
  CHECK(p.nu() == doctest::Approx(0.25));
  CHECK(p.with_j(20).gamma() == doctest::Approx(1.5));
  CHECK_THROWS_AS(ModelParams(0.0, 1.0, 1.0), DomainError);
  CHECK_THROWS_AS(ModelParams(1.0, 1.0, -0.1), DomainError);
  CHECK_THROWS_AS(ModelParams(1.0, 1.0, 1.0, 0.0), DomainError);
}

TEST_CASE("energy at the stationary points") {
  const ModelParams p = ModelParams::dimensionless(1.0, 0.7);
  CHECK(energy(CanonicalState(0.0, 1.3, -1.0, 2.0), p) == doctest::Approx(-1.0).epsilon(1e-15));

  const double gam = 2.0;
  const ModelParams q = ModelParams::dimensionless(1.0, gam);
  const CanonicalState ground((gam * gam - 1.0 / (gam * gam)) / 2.0, 0.0, -1.0 / (gam * gam), std::numbers::pi);
  CHECK(energy(ground, q) == doctest::Approx(-2.125).epsilon(1e-14));
  CHECK(q.ground_energy() == doctest::Approx(-2.125));
}

TEST_CASE("decoupled energy is c + nu I exactly") {
  const ModelParams p = ModelParams::dimensionless(1.7, 0.0);
  Rng r(1, 0);
  for (int k = 0; k < 100; ++k) {
    const CanonicalState s = test::random_state(r);
    CHECK(energy(s, p) == s.c() + 1.7 * s.I());
  }
}

TEST_CASE("energy symmetries") {
  const ModelParams p = ModelParams::dimensionless(1.2, 1.4);
  Rng r(2, 0);
  for (int k = 0; k < 200; ++k) {
    const CanonicalState s = test::random_state(r);
    const CanonicalState shifted(s.I(), s.psi() + kTwoPi, s.c(), s.phi() - kTwoPi);
    CHECK(std::abs(energy(shifted, p) - energy(s, p)) < 1e-12);
    const CanonicalState parity(s.I(), s.psi() + std::numbers::pi, s.c(), s.phi() + std::numbers::pi);
    CHECK(std::abs(energy(parity, p) - energy(s, p)) < 1e-12);
  }
  // reduction on construction is exact for multiples of 2pi applied to the same stored angle
  const CanonicalState a(1.0, 0.5, 0.1, 0.25);
  const CanonicalState b(a.I(), a.psi(), a.c(), a.phi());
  CHECK(energy(a, p) == energy(b, p));
}

TEST_CASE("angle reduction") {
  CHECK(wrap_angle(-1e-18) < kTwoPi);
  CHECK(wrap_angle(-0.5) == doctest::Approx(kTwoPi - 0.5));
  CHECK(wrap_angle(7.0) == doctest::Approx(7.0 - kTwoPi));
  CHECK(wrap_difference(kTwoPi - 0.1) == doctest::Approx(-0.1));
  CHECK(CanonicalState(1, -0.5, 0, 9).psi() == doctest::Approx(kTwoPi - 0.5));
}

TEST_CASE("bloch vectors") {
  const BlochVector n = bloch_from_canonical(1.0, 2.7);
  CHECK(n.lx == 0.0);
  CHECK(n.ly == 0.0);
  CHECK(n.lz == 1.0);
  const BlochVector e = bloch_from_canonical(0.0, 0.0);
  CHECK(e.lx == 1.0);
  CHECK(e.lz == 0.0);
  Rng r(3, 0);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    worst = std::max(worst, std::abs(bloch_from_canonical(r.uniform(-1, 1), r.uniform(0, kTwoPi)).norm() - 1.0));
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("stereographic chart") {
  const ModelParams p = ModelParams::dimensionless(1.0, 1.0, 400.0);
  const CanonicalState vac = canonical_from_stereo({0.0, 0.0}, p);
  CHECK(vac.I() == 0.0);
  CHECK(vac.c() == 1.0);
  CHECK(vac.phi() == 0.0);
  CHECK(vac.psi() == 0.0);

  const CanonicalState eq = canonical_from_stereo({1.0, std::sqrt(400.0)}, p);
  CHECK(eq.I() == doctest::Approx(1.0));
  CHECK(std::abs(eq.c()) < 1e-15);
  CHECK(eq.phi() == 0.0);
  CHECK(eq.psi() == 0.0);

  CHECK_THROWS_AS(canonical_from_stereo({1e200, 0.0}, p), PoleError);

  Rng r(4, 0);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const CanonicalState s(r.uniform(0, 10), r.uniform(0, kTwoPi), r.uniform(-0.999, 1), r.uniform(0, kTwoPi));
    const CanonicalState back = canonical_from_stereo(stereo_from_canonical(s, p), p);
    worst = std::max({worst, std::abs(back.I() - s.I()), std::abs(back.c() - s.c()),
                      std::abs(wrap_difference(back.psi() - s.psi())), std::abs(wrap_difference(back.phi() - s.phi()))});
  }
  CHECK(worst < 1e-12);
}
