#pragma once

#include <Eigen/Core>

#include "dicke/dynamics.hpp"
#include "dicke/model.hpp"

namespace dicke {

/// Regular embedding of the phase space R^2 x S^2 used for integration:
/// (x, y) = sqrt(2I) (cos psi, sin psi) and the unit Bloch vector l.
/// The canonical chart degenerates at I = 0 and at the poles; this one does
/// not, and the Hamiltonian is a polynomial in it:
///   eps = lz + nu (x^2 + y^2)/2 + gamma sqrt(nu) x lx.
using Embedded = Eigen::Matrix<double, 5, 1>;
using Mat5 = Eigen::Matrix<double, 5, 5>;

Embedded embed(const CanonicalState& s);

/// Inverse of embed; renormalises l first.
CanonicalState to_canonical(const Embedded& e);

BlochVector bloch_of(const Embedded& e);

double energy_embedded(const Embedded& e, const ModelParams& p);

/// dx/dt = nu y, dy/dt = -nu x - gamma sqrt(nu) lx/|l|, dl/dt = Omega x l with
/// Omega = (gamma sqrt(nu) x, 0, 1). Using lx/|l| keeps eps (evaluated on
/// the unit vector) conserved even when round-off changes |l|.
Embedded embedded_field(const Embedded& e, const ModelParams& p);
Mat5 embedded_jacobian(const Embedded& e, const ModelParams& p);

/// Removes the radial component of the spin part so that v lies in the
/// tangent space of R^2 x S^2 at e.
Embedded project_tangent(const Embedded& e, const Embedded& v);

/// Pushes a canonical tangent vector (dI, dpsi, dc, dphi) into the embedding.
Embedded tangent_to_embedded(const CanonicalState& s, const Vec4& v);

/// Pulls an embedded tangent vector back to canonical components. Throws
/// SingularityError where the canonical chart is singular.
Vec4 tangent_to_canonical(const Embedded& e, const Embedded& v);

}  // namespace dicke
