#pragma once

#include <cmath>

#include "dicke/model.hpp"
#include "dicke/rng.hpp"

namespace dicke::test {

/// Generic state away from both chart singularities.
inline CanonicalState random_state(Rng& r) {
  return {r.uniform(0.2, 5.0), r.uniform(0.0, kTwoPi), r.uniform(-0.9, 0.9), r.uniform(0.0, kTwoPi)};
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace dicke::test
