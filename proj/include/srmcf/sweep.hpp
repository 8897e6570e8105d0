#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "srmcf/barriers.hpp"
#include "srmcf/flow.hpp"

namespace srmcf {

struct SweepLevel {
  double epsilon = 0;
  double delta = 0;
  double sup_diff = std::numeric_limits<double>::quiet_NaN();  // to the next finer level
  std::optional<double> confinement_radius;
  std::optional<DecayFit> decay;
};

struct SweepReport {
  std::vector<SweepLevel> levels;
  std::optional<double> alpha_hat;
  double fit_residual = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;
  std::vector<Trajectory> trajectories;
};

struct SweepOptions {
  double confinement_tol = 1e-3;
  std::optional<double> boundary_constant;  // enables the per-level decay fit
  bool keep_trajectories = true;
};

/// delta(eps) = eps^sigma clipped to (0, eps].
[[nodiscard]] inline double coupled_delta(double eps, double sigma) { return std::min(std::pow(eps, sigma), eps); }

[[nodiscard]] inline SweepReport vanishing_viscosity_sweep(const FlowProblem& base, const std::vector<double>& eps,
                                                           double sigma, const SweepOptions& opt = {}) {
  if (eps.size() < 2) throw Error(ErrorCode::ScheduleTooShort, "need at least 2 epsilon levels");
  if (!(sigma >= 0)) throw Error(ErrorCode::BadProblem, "sigma must be >= 0");
  for (std::size_t k = 0; k < eps.size(); ++k) {
    if (!(eps[k] > 0 && eps[k] < 1)) throw Error(ErrorCode::BadProblem, "epsilon levels must lie in (0,1)");
    if (k && !(eps[k] < eps[k - 1])) throw Error(ErrorCode::BadProblem, "epsilon schedule must strictly decrease");
  }
  const Group g = Group::validate(base.group);
  SweepReport rep;
  std::vector<Trajectory> trajs;
  for (double e : eps) {
    FlowProblem p = base;
    p.epsilon = e;
    p.delta = coupled_delta(e, sigma);
    trajs.push_back(run(p));
    SweepLevel L;
    L.epsilon = e;
    L.delta = p.delta;
    L.confinement_radius = confinement_radius(trajs.back(), g, opt.confinement_tol);
    if (opt.boundary_constant) {
      try {
        L.decay = decay_fit(trajs.back(), g, *opt.boundary_constant);
      } catch (const Error&) {
      }
    }
    rep.levels.push_back(L);
  }
  bool all_tiny = true;
  for (std::size_t k = 0; k + 1 < trajs.size(); ++k) {
    rep.levels[k].sup_diff = sup_difference(trajs[k], trajs[k + 1]);
    all_tiny = all_tiny && rep.levels[k].sup_diff < 1e-14;
  }
  rep.degenerate = all_tiny;
  if (!rep.degenerate && eps.size() >= 3) {
    std::vector<double> x, y;
    for (std::size_t k = 0; k + 1 < eps.size(); ++k)
      if (rep.levels[k].sup_diff > 0) {
        x.push_back(std::log(eps[k]));
        y.push_back(std::log(rep.levels[k].sup_diff));
      }
    if (x.size() >= 2) {
      double mx = 0, my = 0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
      }
      mx /= x.size();
      my /= y.size();
      double sxx = 0, sxy = 0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        sxx += (x[k] - mx) * (x[k] - mx);
        sxy += (x[k] - mx) * (y[k] - my);
      }
      const double slope = sxy / sxx;
      double ss = 0;
      for (std::size_t k = 0; k < x.size(); ++k) {
        const double res = y[k] - (my + slope * (x[k] - mx));
        ss += res * res;
      }
      rep.alpha_hat = slope;
      rep.fit_residual = std::sqrt(ss / x.size());
    }
  }
  if (opt.keep_trajectories) rep.trajectories = std::move(trajs);
  return rep;
}

struct RLimitReport {
  std::vector<double> radii;
  std::vector<double> diffs;  // consecutive, restricted to the smallest ball
  bool decreasing = true;
};

[[nodiscard]] inline RLimitReport r_limit_check(const FlowProblem& base, const std::vector<double>& radii) {
  if (radii.size() < 2) throw Error(ErrorCode::ScheduleTooShort, "need at least 2 radii");
  for (std::size_t k = 1; k < radii.size(); ++k)
    if (radii[k] < radii[k - 1]) throw Error(ErrorCode::BadProblem, "radii must not decrease");
  const Group g = Group::validate(base.group);
  const auto& grid = base.u0.grid;
  std::vector<unsigned char> inner(grid.size());
  Point q(g.n());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.point(k, q);
    inner[k] = g.pseudo_norm(q) < radii.front();
  }
  RLimitReport rep;
  rep.radii = radii;
  std::optional<Trajectory> prev;
  for (double R : radii) {
    FlowProblem p = base;
    p.R = R;
    Trajectory t = run(p);
    if (prev) rep.diffs.push_back(sup_difference(*prev, t, &inner));
    prev = std::move(t);
  }
  for (std::size_t k = 1; k < rep.diffs.size(); ++k) rep.decreasing = rep.decreasing && rep.diffs[k] <= rep.diffs[k - 1];
  return rep;
}

}  // namespace srmcf
