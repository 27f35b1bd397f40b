#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include <Eigen/Eigenvalues>

#include "dicke/chaos.hpp"
#include "dicke/errors.hpp"

namespace dicke {

PoincareScan poincare_scan(double eps, const ModelParams& p, int n_traj, int n_events, double psi0,
                           std::uint64_t seed, const PoincareOptions& opt) {
  if (n_traj < 1) throw DomainError("poincare_scan: need at least one trajectory");
  if (n_events < 1) throw DomainError("poincare_scan: need at least one event");
  PoincareScan scan;
  scan.eps = eps;
  scan.gamma = p.gamma();
  scan.nu = p.nu();
  scan.psi0 = psi0;
  scan.seed = seed;
  for (int k = 0; k < n_traj; ++k) {
    PoincareTrack track;
    track.stream = static_cast<std::uint64_t>(k);
    Rng rng(seed, track.stream);
    track.initial = sample_on_shell(eps, p, rng);
    const SectionRun run = collect_section_events(track.initial, p, psi0, opt.direction,
                                                  static_cast<std::size_t>(n_events), opt.t_max, opt.integration);
    for (const auto& ev : run.events) track.points.push_back({ev.l.lx, ev.l.ly, ev.l.lz > 0.0});
    track.t_reached = run.t_reached;
    track.energy_drift = run.energy_drift;
    track.status = run.status;
    track.diagnostic = run.diagnostic;
    scan.tracks.push_back(std::move(track));
  }
  return scan;
}

double thin_curve_metric(const std::vector<PoincarePoint>& pts, int k) {
  const std::size_t n = pts.size();
  const auto kk = static_cast<std::size_t>(k);
  if (k < 2 || n < kk + 1) return std::numeric_limits<double>::quiet_NaN();
  std::vector<double> ratios(n);
  std::vector<std::pair<double, std::size_t>> d(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dx = pts[j].lx - pts[i].lx, dy = pts[j].ly - pts[i].ly;
      d[j] = {dx * dx + dy * dy, j};
    }
    std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(kk), d.end());
    // the point itself plus its k nearest neighbours
    double mx = 0.0, my = 0.0;
    for (std::size_t m = 0; m <= kk; ++m) {
      mx += pts[d[m].second].lx;
      my += pts[d[m].second].ly;
    }
    mx /= static_cast<double>(kk + 1);
    my /= static_cast<double>(kk + 1);
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t m = 0; m <= kk; ++m) {
      const Eigen::Vector2d r(pts[d[m].second].lx - mx, pts[d[m].second].ly - my);
      cov += r * r.transpose();
    }
    const Eigen::Vector2d ev = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(cov).eigenvalues();
    ratios[i] = ev(1) > 0.0 ? std::sqrt(std::max(0.0, ev(0)) / ev(1)) : 0.0;
  }
  const auto mid = ratios.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(ratios.begin(), mid, ratios.end());
  if (n % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(ratios.begin(), mid);
  return 0.5 * (lower + upper);
}

std::vector<int> occupied_cells(const std::vector<PoincarePoint>& pts, int bins) {
  std::set<int> cells;
  const auto cell = [bins](double v) {
    const int i = static_cast<int>(std::floor((v + 1.0) * 0.5 * bins));
    return std::clamp(i, 0, bins - 1);
  };
  for (const auto& q : pts) cells.insert(cell(q.lx) * bins + cell(q.ly));
  return {cells.begin(), cells.end()};
}

std::vector<double> coverage_fractions(const PoincareScan& scan, int bins) {
  std::set<int> all;
  std::vector<std::vector<int>> per;
  for (const auto& t : scan.tracks) {
    per.push_back(occupied_cells(t.points, bins));
    all.insert(per.back().begin(), per.back().end());
  }
  std::vector<double> out;
  for (const auto& c : per) {
    out.push_back(all.empty() ? 0.0 : static_cast<double>(c.size()) / static_cast<double>(all.size()));
  }
  return out;
}

}  // namespace dicke
