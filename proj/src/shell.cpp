#include "dicke/shell.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "dicke/errors.hpp"
#include "dicke/rng.hpp"

namespace dicke {

ShellRoots solve_I_on_shell(double psi, double c, double phi, double eps, const ModelParams& p) {
  if (!(std::abs(c) <= 1.0)) throw DomainError("solve_I_on_shell: |c| > 1");
  const double nu = p.nu();
  const double gamma = p.gamma();
  ShellRoots r;
  if (gamma == 0.0) {
    if (eps > c) {
      r.multiplicity = 1;
      r.I[0] = (eps - c) / nu;
      r.dh_dI[0] = nu;
    }
    return r;
  }
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double b = std::cos(psi) * std::cos(phi) * s;
  const double disc = b * b + 2.0 * (eps - c) / (gamma * gamma);
  if (disc <= 0.0) return r;
  const double sq = std::sqrt(disc);
  const double scale = gamma * gamma / (2.0 * nu);
  // sqrt(2 nu I)/gamma for the two branches, smaller first
  const double u_lo = -sq - b;
  const double u_hi = sq - b;
  for (double u : {u_lo, u_hi}) {
    if (u > 0.0) {
      r.I[r.multiplicity] = scale * u * u;
      r.dh_dI[r.multiplicity] = nu * sq / u;
      ++r.multiplicity;
    }
  }
  return r;
}

const char* to_string(BoundsMethod m) {
  switch (m) {
    case BoundsMethod::Trivial: return "trivial";
    case BoundsMethod::BoundarySearch: return "boundary-search";
    case BoundsMethod::Asymptotic: return "asymptotic";
  }
  return "unknown";
}

double shell_minimum(const ModelParams& p) { return p.ground_energy(); }

namespace {

// c of the extremal point on the edge x = +1 (sign = +1) or x = -1 (sign = -1)
double edge_extremum_c(double eps, double gamma, double sign) {
  const double g2 = gamma * gamma;
  const double den = 1.0 + 2.0 * g2 * eps;
  const double rad = g2 * g2 + den;
  if (den <= 0.0 || rad < 0.0) return std::nan("");
  return (g2 + sign * std::sqrt(rad)) / den;
}

// Extreme root of the shell equation along the edges x = cos(psi) cos(phi) = +-1,
// as a function of c. For fixed c the largest root grows as x sin(theta) falls
// and the smallest one shrinks as |x sin(theta)| grows, so the extremes over the
// whole shell sit on these two edges (the poles are the end points c = +-1).
double edge_value(double c, double eps, const ModelParams& p, double psi, bool largest) {
  const ShellRoots r = solve_I_on_shell(psi, c, 0.0, eps, p);
  if (r.multiplicity == 0) return largest ? -INFINITY : INFINITY;
  return largest ? r.I[r.multiplicity - 1] : r.I[0];
}

double edge_search(double eps, const ModelParams& p, bool largest) {
  const double sgn = largest ? 1.0 : -1.0;
  double best = -INFINITY;  // of sgn * I
  for (double psi : {0.0, std::numbers::pi}) {
    const auto f = [&](double c) { return sgn * edge_value(c, eps, p, psi, largest); };
    constexpr int n = 2000;
    int k_best = 0;
    double f_best = -INFINITY;
    for (int k = 0; k <= n; ++k) {
      const double v = f(-1.0 + 2.0 * k / n);
      if (v > f_best) f_best = v, k_best = k;
    }
    best = std::max(best, f_best);
    if (!std::isfinite(f_best)) continue;
    // golden-section refinement on the bracketing grid cells
    double a = -1.0 + 2.0 * std::max(0, k_best - 1) / n;
    double b = -1.0 + 2.0 * std::min(n, k_best + 1) / n;
    const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
    double f1 = f(x1), f2 = f(x2);
    while (b - a > 1e-13) {
      if (f1 < f2) {
        a = x1, x1 = x2, f1 = f2;
        x2 = a + ratio * (b - a), f2 = f(x2);
      } else {
        b = x2, x2 = x1, f2 = f1;
        x1 = b - ratio * (b - a), f1 = f(x1);
      }
    }
    best = std::max({best, f1, f2});
    if (p.gamma() > 0.0) {
      for (double c : {edge_extremum_c(eps, p.gamma(), +1.0), edge_extremum_c(eps, p.gamma(), -1.0)}) {
        if (std::abs(c) <= 1.0) best = std::max(best, f(c));
      }
    }
  }
  return sgn * best;
}

}  // namespace

ActionBounds action_bounds(double eps, const ModelParams& p, BoundsMethod method) {
  if (!std::isfinite(eps) || eps < shell_minimum(p)) {
    throw DomainError("action_bounds: energy below the shell minimum");
  }
  const double nu = p.nu();
  const double gamma = p.gamma();
  ActionBounds out;
  out.method = method;
  switch (method) {
    case BoundsMethod::Trivial:
      out.I_min = std::max(0.0, (eps - 1.0) / nu);
      out.I_max = (eps + 1.0) / nu;
      break;
    case BoundsMethod::Asymptotic: {
      if (!(eps > 1.0)) throw DomainError("action_bounds: asymptotic bounds need eps > 1");
      const double w = std::sqrt(2.0 * gamma * gamma / eps);
      out.I_min = eps / nu * (1.0 - w);
      out.I_max = eps / nu * (1.0 + w);
      break;
    }
    case BoundsMethod::BoundarySearch: {
      const double lo = edge_search(eps, p, false);
      const double hi = edge_search(eps, p, true);
      if (!std::isfinite(lo) || !std::isfinite(hi)) {
        throw DomainError("action_bounds: no boundary candidates at this energy");
      }
      // I = 0 lies on the shell whenever eps = c is possible
      out.I_min = std::abs(eps) <= 1.0 ? 0.0 : lo;
      out.I_max = hi;
      break;
    }
  }
  return out;
}

namespace {

constexpr int kBatches = 100;

struct BatchSums {
  double w0 = 0.0, w1 = 0.0, w2 = 0.0, wm = 0.0, w0_sq = 0.0;
};

// Uniform (psi, phi, c) draws weighted by 1/|d eps/dI| summed over roots.
BatchSums sample_batch(int m, double eps, const ModelParams& p, long n, std::uint64_t seed, int batch) {
  Rng rng(seed, static_cast<std::uint64_t>(batch));
  const double floor = std::sqrt(2.0 * (eps - 1.0)) / std::max(p.gamma(), 1e-300);
  BatchSums s;
  for (long i = 0; i < n; ++i) {
    const double psi = kTwoPi * rng.uniform();
    const double phi = kTwoPi * rng.uniform();
    const double c = rng.uniform(-1.0, 1.0);
    const ShellRoots r = solve_I_on_shell(psi, c, phi, eps, p);
    double w_tot = 0.0;
    for (int k = 0; k < r.multiplicity; ++k) {
      const double w = 1.0 / r.dh_dI[k];
      if (p.gamma() > 0.0) {
        // dh_dI * u / nu is the square root in the shell equation
        const double u = std::sqrt(2.0 * p.nu() * r.I[k]) / p.gamma();
        if (r.dh_dI[k] * u / p.nu() < floor * (1.0 - 1e-12)) throw Error("microcanonical sampler: weight bound violated");
      }
      const double I = r.I[k];
      w_tot += w;
      s.w1 += w * I;
      s.w2 += w * I * I;
      s.wm += w * std::pow(I, m);
    }
    s.w0 += w_tot;
    s.w0_sq += w_tot * w_tot;
  }
  return s;
}

std::vector<BatchSums> run_batches(int m, double eps, const ModelParams& p, long n_samples, std::uint64_t seed) {
  if (!(eps > 1.0)) throw DomainError("microcanonical sampling needs eps > 1");
  if (n_samples < 10000) throw DomainError("microcanonical sampling needs at least 1e4 samples");
  std::vector<BatchSums> out(kBatches);
  for (int b = 0; b < kBatches; ++b) {
    const long n = n_samples / kBatches + (b < n_samples % kBatches ? 1 : 0);
    out[static_cast<std::size_t>(b)] = sample_batch(m, eps, p, n, seed, b);
  }
  return out;
}

double batch_se(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double n = static_cast<double>(v.size());
  return std::sqrt(ss / (n - 1.0) / n);
}

}  // namespace

MomentEstimate microcanonical_moment(int m, double eps, const ModelParams& p, long n_samples, std::uint64_t seed) {
  if (m < 0) throw DomainError("microcanonical_moment: negative order");
  const auto batches = run_batches(m, eps, p, n_samples, seed);
  BatchSums tot;
  std::vector<double> ratios;
  for (const auto& b : batches) {
    tot.w0 += b.w0;
    tot.wm += b.wm;
    tot.w0_sq += b.w0_sq;
    ratios.push_back(m == 0 ? 1.0 : b.wm / b.w0);
  }
  MomentEstimate e;
  e.order = m;
  e.estimate = m == 0 ? 1.0 : tot.wm / tot.w0;
  e.std_error = m == 0 ? 0.0 : batch_se(ratios);
  e.n_samples = n_samples;
  e.effective_samples = tot.w0 * tot.w0 / tot.w0_sq;
  e.seed = seed;
  return e;
}

VarianceEstimate microcanonical_variance(double eps, const ModelParams& p, long n_samples, std::uint64_t seed) {
  const auto batches = run_batches(2, eps, p, n_samples, seed);
  BatchSums tot;
  std::vector<double> vars;
  for (const auto& b : batches) {
    tot.w0 += b.w0;
    tot.w1 += b.w1;
    tot.w2 += b.w2;
    const double m1 = b.w1 / b.w0;
    vars.push_back(b.w2 / b.w0 - m1 * m1);
  }
  VarianceEstimate v;
  v.mean = tot.w1 / tot.w0;
  v.estimate = tot.w2 / tot.w0 - v.mean * v.mean;
  v.std_error = batch_se(vars);
  v.n_samples = n_samples;
  return v;
}

double moment_closed(int m, double eps, const ModelParams& p) {
  const double nu = p.nu();
  const double g2 = p.gamma() * p.gamma();
  switch (m) {
    case 0: return 1.0;
    case 1: return (eps + g2 / 3.0) / nu;
    case 2: return (eps * eps + eps * g2 + 0.3 * g2 * g2 + 1.0 / 3.0) / (nu * nu);
    default: throw DomainError("moment_closed: only orders 0, 1, 2 are available");
  }
}

double photon_variance_physical(double eps, const ModelParams& p) {
  const double w0 = p.omega0(), w = p.omega(), g = p.g();
  const double g2 = g * g;
  return (4.0 * eps * w0 * g2 / w + 136.0 * g2 * g2 / (15.0 * w * w) + w0 * w0) / (3.0 * w * w);
}

PhotonStats photon_mean_variance_closed(double eps, const ModelParams& p) {
  if (!(eps > 1.0)) throw DomainError("photon_mean_variance_closed: needs eps > 1");
  const double nu = p.nu();
  const double g2 = p.gamma() * p.gamma();
  PhotonStats s;
  s.mean = (eps + g2 / 3.0) / nu;
  s.variance = (eps * g2 / 3.0 + 17.0 * g2 * g2 / 90.0 + 1.0 / 3.0) / (nu * nu);

  const double m1 = moment_closed(1, eps, p);
  const double from_moments = moment_closed(2, eps, p) - m1 * m1;
  const double physical = photon_variance_physical(eps, p);
  const double tol = 1e-12 * std::max(1.0, std::abs(s.variance));
  if (std::abs(from_moments - s.variance) > tol || std::abs(physical - s.variance) > tol) {
    throw Error("photon_mean_variance_closed: closed forms disagree");
  }
  return s;
}

}  // namespace dicke
