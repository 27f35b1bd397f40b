#include "dicke/kickedtop.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <set>

#include <Eigen/Dense>

#include "dicke/errors.hpp"
#include "dicke/rng.hpp"

namespace dicke {

namespace {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

Vec3 as_vec(const BlochVector& l) { return {l.lx, l.ly, l.lz}; }
BlochVector as_bloch(const Vec3& v) { return {v(0), v(1), v(2)}; }

Mat3 rot_x(double a) {
  Mat3 r;
  r << 1, 0, 0, 0, std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a);
  return r;
}

Mat3 rot_z(double a) {
  Mat3 r;
  r << std::cos(a), -std::sin(a), 0, std::sin(a), std::cos(a), 0, 0, 0, 1;
  return r;
}

// unit vector orthogonal to n
Vec3 any_orthogonal(const Vec3& n) {
  const Vec3 a = std::abs(n(0)) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
  return (a - a.dot(n) * n).normalized();
}

Vec3 to_tangent(const Vec3& l, const Vec3& v) { return v - l.dot(v) * l; }

}  // namespace

void TopParams::validate() const {
  if (!(j > 0.0) || !std::isfinite(j)) throw DomainError("TopParams: j must be positive");
  if (!std::isfinite(p) || !std::isfinite(tau)) throw DomainError("TopParams: p and tau must be finite");
}

BlochVector top_map(const BlochVector& l, const TopParams& params) {
  const Vec3 m = rot_x(params.p) * as_vec(l);
  const double a = params.tau * m(2);
  const double x = m(0) * std::cos(a) - m(1) * std::sin(a);
  const double y = m(0) * std::sin(a) + m(1) * std::cos(a);
  // lz is kept exactly; the horizontal part is rescaled so that round-off
  // does not accumulate in |l| over long orbits
  const double rho = std::hypot(x, y);
  const double target = std::sqrt(std::max(0.0, 1.0 - m(2) * m(2)));
  const double f = rho > 0.0 ? target / rho : 0.0;
  return {x * f, y * f, m(2)};
}

BlochVector top_map_inverse(const BlochVector& l, const TopParams& params) {
  const Vec3 m = rot_z(-params.tau * l.lz) * as_vec(l);
  return as_bloch(rot_x(-params.p) * m);
}

Eigen::Matrix3d top_map_jacobian(const BlochVector& l, const TopParams& params) {
  const Mat3 rx = rot_x(params.p);
  const Vec3 m = rx * as_vec(l);
  const Mat3 rz = rot_z(params.tau * m(2));
  const Vec3 out = rz * m;
  // d/dm_z of R_z(tau m_z) m
  const Vec3 dz(-params.tau * out(1), params.tau * out(0), 0.0);
  return (rz + dz * Vec3::UnitZ().transpose()) * rx;
}

Eigen::Matrix3d top_map_inverse_jacobian(const BlochVector& l, const TopParams& params) {
  const Mat3 rz = rot_z(-params.tau * l.lz);
  const Vec3 m = rz * as_vec(l);
  const Vec3 dz(params.tau * m(1), -params.tau * m(0), 0.0);
  return rot_x(-params.p) * (rz + dz * Vec3::UnitZ().transpose());
}

double tangent_determinant(const BlochVector& l, const TopParams& params) {
  const Vec3 a = as_vec(l).normalized();
  const Vec3 b = as_vec(top_map(l, params)).normalized();
  const Vec3 e1 = any_orthogonal(a), e2 = a.cross(e1);
  const Vec3 f1 = any_orthogonal(b), f2 = b.cross(f1);
  const Mat3 J = top_map_jacobian(l, params);
  Eigen::Matrix2d d;
  d << f1.dot(J * e1), f1.dot(J * e2), f2.dot(J * e1), f2.dot(J * e2);
  return d.determinant();
}

TopLyapunov top_lyapunov(const BlochVector& l0, const TopParams& params, long n_steps) {
  params.validate();
  if (n_steps < 10000) throw DomainError("top_lyapunov: needs at least 1e4 steps");
  constexpr int kWindows = 10;
  Rng rng(0x70b, 0);
  Vec3 l = as_vec(l0).normalized();
  Vec3 v1 = to_tangent(l, Vec3(rng.normal(), rng.normal(), rng.normal())).normalized();
  Vec3 v2 = l.cross(v1);

  const long discard = n_steps / 10;
  double s1 = 0.0, s2 = 0.0;
  TopLyapunov out;
  const long window = (n_steps - discard) / kWindows;
  for (long n = 0; n < n_steps; ++n) {
    const Mat3 J = top_map_jacobian(as_bloch(l), params);
    l = as_vec(top_map(as_bloch(l), params));
    Vec3 w1 = to_tangent(l, J * v1);
    Vec3 w2 = to_tangent(l, J * v2);
    const double n1 = w1.norm();
    w1 /= n1;
    w2 -= w1.dot(w2) * w1;
    const double n2 = w2.norm();
    v1 = w1;
    v2 = w2 / n2;
    if (n >= discard) {
      s1 += std::log(n1);
      s2 += std::log(n2);
      const long done = n - discard + 1;
      if (done % window == 0 && static_cast<int>(out.history.size()) < kWindows) {
        out.history.push_back(s1 / static_cast<double>(done));
      }
    }
  }
  const auto counted = static_cast<double>(n_steps - discard);
  out.lambda = s1 / counted;
  out.lambda2 = s2 / counted;
  const std::size_t h = out.history.size();
  if (h >= 2 && std::abs(out.history[h - 1] - out.history[h - 2]) > 0.1 * std::max(std::abs(out.lambda), 1e-2)) {
    throw NonConvergenceError("top_lyapunov: exponent not settled between the last two windows");
  }
  return out;
}

SphereCloud uniform_cloud(std::size_t n, std::uint64_t seed) {
  Rng rng(seed, 0);
  SphereCloud c;
  c.seed = seed;
  c.points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = kTwoPi * rng.uniform();
    const double s = std::sqrt(1.0 - z * z);
    c.points.push_back({s * std::cos(phi), s * std::sin(phi), z});
  }
  return c;
}

SphereCloud cap_cloud(const BlochVector& center, double radius, std::size_t n, std::uint64_t seed) {
  if (!(radius > 0.0 && radius <= std::numbers::pi)) throw DomainError("cap_cloud: radius out of range");
  Rng rng(seed, 0);
  const Vec3 c = as_vec(center).normalized();
  const Vec3 u = any_orthogonal(c), w = c.cross(u);
  SphereCloud cl;
  cl.seed = seed;
  cl.points.reserve(n);
  const double cmin = std::cos(radius);
  for (std::size_t i = 0; i < n; ++i) {
    const double ca = rng.uniform(cmin, 1.0);
    const double sa = std::sqrt(std::max(0.0, 1.0 - ca * ca));
    const double b = kTwoPi * rng.uniform();
    cl.points.push_back(as_bloch(ca * c + sa * (std::cos(b) * u + std::sin(b) * w)));
  }
  return cl;
}

std::array<double, kHarmonicCount> real_harmonics(const BlochVector& l) {
  const double x = l.lx, y = l.ly, z = l.lz;
  // Re/Im (x + i y)^m = sin^m(theta) (cos m phi, sin m phi)
  std::array<double, 5> cm{}, sm{};
  std::complex<double> w(x, y), wm(1.0, 0.0);
  for (int m = 0; m <= 4; ++m) {
    cm[static_cast<std::size_t>(m)] = wm.real();
    sm[static_cast<std::size_t>(m)] = wm.imag();
    wm *= w;
  }
  // q[l][m] = P_l^m(z) / sin^m(theta), Condon-Shortley phase included
  double q[5][5] = {};
  double dfact = 1.0;
  for (int m = 0; m <= 4; ++m) {
    if (m > 0) dfact *= 2.0 * m - 1.0;
    q[m][m] = (m % 2 ? -1.0 : 1.0) * dfact;
    if (m + 1 <= 4) q[m + 1][m] = z * (2.0 * m + 1.0) * q[m][m];
    for (int L = m + 2; L <= 4; ++L) q[L][m] = ((2.0 * L - 1.0) * z * q[L - 1][m] - (L + m - 1.0) * q[L - 2][m]) / (L - m);
  }
  std::array<double, kHarmonicCount> out{};
  std::size_t k = 0;
  for (int L = 1; L <= 4; ++L) {
    for (int m = -L; m <= L; ++m) {
      const int am = std::abs(m);
      double ratio = 1.0;  // (l - m)! / (l + m)!
      for (int i = L - am + 1; i <= L + am; ++i) ratio /= i;
      const double norm = std::sqrt((2.0 * L + 1.0) / (2.0 * kTwoPi) * ratio);
      const double base = norm * q[L][am];
      if (m == 0) {
        out[k] = base;
      } else {
        out[k] = std::sqrt(2.0) * base * (m > 0 ? cm[static_cast<std::size_t>(am)] : sm[static_cast<std::size_t>(am)]);
      }
      ++k;
    }
  }
  return out;
}

CloudMetrics cloud_metrics(const std::vector<BlochVector>& pts, long step) {
  constexpr int kBands = 20, kSectors = 20;
  CloudMetrics m;
  m.step = step;
  std::set<int> cells, bands;
  for (const auto& q : pts) {
    const auto y = real_harmonics(q);
    for (int k = 0; k < kHarmonicCount; ++k) m.ylm[static_cast<std::size_t>(k)] += y[static_cast<std::size_t>(k)];
    const int band = std::clamp(static_cast<int>(std::floor((q.lz + 1.0) * 0.5 * kBands)), 0, kBands - 1);
    const double phi = wrap_angle(std::atan2(q.ly, q.lx));
    const int sector = std::clamp(static_cast<int>(std::floor(phi / kTwoPi * kSectors)), 0, kSectors - 1);
    cells.insert(band * kSectors + sector);
    bands.insert(band);
  }
  const auto n = static_cast<double>(pts.size());
  for (auto& v : m.ylm) {
    v /= n;
    m.max_abs_ylm = std::max(m.max_abs_ylm, std::abs(v));
  }
  m.occupancy = static_cast<double>(cells.size()) / (kBands * kSectors);
  m.lz_occupancy = static_cast<double>(bands.size()) / kBands;
  return m;
}

std::vector<CloudMetrics> top_equilibration(const SphereCloud& cloud0, const TopParams& params, long n_steps) {
  params.validate();
  if (cloud0.points.size() < 1000) throw DomainError("top_equilibration: cloud needs at least 1e3 points");
  std::vector<BlochVector> pts = cloud0.points;
  std::vector<CloudMetrics> out;
  out.push_back(cloud_metrics(pts, 0));
  for (long n = 1; n <= n_steps; ++n) {
    for (auto& q : pts) q = top_map(q, params);
    out.push_back(cloud_metrics(pts, n));
  }
  return out;
}

double equilibration_time(const std::vector<CloudMetrics>& metrics, double threshold) {
  for (std::size_t k = 0; k < metrics.size(); ++k) {
    if (metrics[k].max_abs_ylm < threshold) {
      if (k == 0) return 0.0;
      const double a = std::log(metrics[k - 1].max_abs_ylm);
      const double b = std::log(metrics[k].max_abs_ylm);
      const double frac = (a - std::log(threshold)) / (a - b);
      return static_cast<double>(metrics[k - 1].step) + frac * static_cast<double>(metrics[k].step - metrics[k - 1].step);
    }
  }
  return -1.0;
}

Eigen::Matrix2d top_diffusion_matrix(const BlochVector& l, const TopParams& params) {
  params.validate();
  if (std::abs(l.lz) > 1.0 - 1e-9) throw SingularityError("top_diffusion_matrix: point at a pole");
  const double dcphi = -params.tau * (1.0 - l.lz * l.lz) / (2.0 * (2.0 * params.j + 1.0));
  Eigen::Matrix2d d;
  d << 0.0, dcphi, dcphi, 0.0;
  return d;
}

TopDiffusionStep top_diffusion_step(const BlochVector& l, const TopParams& params, const Eigen::Vector3d& e_s,
                                    double var, double lambda) {
  if (std::abs(l.lz) > 1.0 - 1e-9) throw SingularityError("top_diffusion_step: point at a pole");
  const Mat3 rx = rot_x(params.p);
  const Vec3 m = rx * as_vec(l);
  const Vec3 e = to_tangent(m, rx * e_s);
  const double rho2 = m(0) * m(0) + m(1) * m(1);
  if (rho2 < 1e-18) throw SingularityError("top_diffusion_step: torsion point at a pole");
  // (d cos theta, d phi) components at m
  Eigen::Vector2d ec(e(2), (m(0) * e(1) - m(1) * e(0)) / rho2);
  ec.normalize();
  const Eigen::Matrix2d D = top_diffusion_matrix(as_bloch(m), params);
  TopDiffusionStep s;
  s.dss = ec.dot(D * ec);
  s.var_next = std::exp(-2.0 * lambda) * var + 2.0 * s.dss;
  return s;
}

TopStableFrame top_stable_frame(const BlochVector& l0, const TopParams& params, long n, long n_conv) {
  params.validate();
  if (n < 1 || n_conv < 0) throw DomainError("top_stable_frame: bad lengths");
  const long total = n + n_conv;
  std::vector<BlochVector> orbit;
  orbit.reserve(static_cast<std::size_t>(total));
  orbit.push_back(l0);
  for (long k = 1; k < total; ++k) orbit.push_back(top_map(orbit.back(), params));

  TopStableFrame f;
  f.e_s.resize(static_cast<std::size_t>(n));
  Rng rng(0x57ab, 0);
  Vec3 v = to_tangent(as_vec(orbit.back()), Vec3(rng.normal(), rng.normal(), rng.normal())).normalized();
  if (total - 1 < n) f.e_s[static_cast<std::size_t>(total - 1)] = v;
  for (long k = total - 1; k >= 1; --k) {
    const auto ku = static_cast<std::size_t>(k);
    v = to_tangent(as_vec(orbit[ku - 1]), top_map_inverse_jacobian(orbit[ku], params) * v).normalized();
    if (k - 1 < n) f.e_s[ku - 1] = v;
  }
  orbit.resize(static_cast<std::size_t>(n));
  f.orbit = std::move(orbit);
  return f;
}

TopVarianceRun top_variance_run(const BlochVector& l0, const TopParams& params, long n_steps, double lambda,
                                double var0, long n_conv) {
  const TopStableFrame f = top_stable_frame(l0, params, n_steps, n_conv);
  TopVarianceRun r;
  r.lambda = lambda;
  r.var.push_back(var0);
  for (long k = 0; k < n_steps; ++k) {
    const auto ku = static_cast<std::size_t>(k);
    const TopDiffusionStep s = top_diffusion_step(f.orbit[ku], params, f.e_s[ku], r.var.back(), lambda);
    r.dss.push_back(s.dss);
    r.var.push_back(s.var_next);
  }
  return r;
}

}  // namespace dicke
