#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srmcf/common.hpp"
#include "srmcf/field.hpp"
#include "srmcf/group.hpp"

namespace srmcf {

inline constexpr double kBlowUp = 1e12;

/// Central: u + dt * rhs(u) with the nested central stencil. Not monotone.
/// Monotone: each A-eigendirection Y gets (u(exp(sY)) - 2u + u(exp(-sY))) / s^2 with
/// multilinear interpolation; under the CFL bound a step is a convex combination.
enum class Scheme { Central, Monotone };

struct FlowProblem {
  GroupSpec group = GroupSpec::se2();
  ScalarField u0;                  // carries the grid
  double epsilon = 0.1;
  double delta = 0.1;
  std::optional<double> R;         // Dirichlet shell radius (pseudo-norm); none = box faces only
  double T = 0.1;
  double cfl_safety = 0.25;
  std::vector<double> snapshot_times;
  std::optional<double> dt;        // override; must respect the CFL bound
  Scheme scheme = Scheme::Monotone;
  double sl_cells = 3;             // monotone step length, in grid cells along the widest axis move
};

struct StepRecord {
  double dt = 0;
  double max_abs_rhs = 0;
};

struct Trajectory {
  std::vector<ScalarField> snapshots;
  std::vector<StepRecord> log;
  std::optional<double> shell_radius;
  double dt = 0;
};

/// Time integration of the regularized flow on one grid. Coefficient tables are built once.
class FlowSolver {
 public:
  explicit FlowSolver(const FlowProblem& p)
      : problem_(p), group_(Group::validate(p.group)), table_(group_, p.u0.grid, p.delta) {
    const auto& u0 = p.u0;
    check_field(u0, group_);
    if (!(p.epsilon > 0 && p.epsilon < 1)) throw Error(ErrorCode::BadProblem, "epsilon must lie in (0,1)");
    if (!(p.delta > 0 && p.delta <= 1)) throw Error(ErrorCode::BadProblem, "delta must lie in (0,1]");
    if (!(p.T >= 0) || !std::isfinite(p.T)) throw Error(ErrorCode::BadProblem, "T must be >= 0");
    if (!(p.cfl_safety > 0 && p.cfl_safety < 1)) throw Error(ErrorCode::BadProblem, "cfl_safety must lie in (0,1)");
    for (double v : u0.values)
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteField, "u0 has non-finite values");
    for (std::size_t k = 1; k < p.snapshot_times.size(); ++k)
      if (p.snapshot_times[k] < p.snapshot_times[k - 1])
        throw Error(ErrorCode::BadProblem, "snapshot times must be sorted");
    for (double t : p.snapshot_times)
      if (t < 0 || t > p.T) throw Error(ErrorCode::BadProblem, "snapshot time outside [0,T]");

    const std::size_t N = u0.size();
    frozen_.assign(N, 0);
    for (std::size_t k = 0; k < N; ++k) frozen_[k] = u0.grid.on_face(k) ? 1 : 0;
    if (p.R) {
      if (!(*p.R > 0)) throw Error(ErrorCode::BadProblem, "R must be positive");
      Point q(group_.n());
      for (std::size_t k = 0; k < N; ++k) {
        u0.grid.point(k, q);
        const double r = group_.pseudo_norm(q);
        if (r >= *p.R) frozen_[k] = 1;
        else if (u0.grid.on_face(k)) throw Error(ErrorCode::BadProblem, "R is not strictly inside the grid box");
      }
    }
    const int n = group_.n();
    cfl_bound_ = p.cfl_safety * u0.grid.h_min() * u0.grid.h_min() / (2.0 * n * table_.c_max());
    if (!(p.sl_cells > 0)) throw Error(ErrorCode::BadProblem, "sl_cells must be positive");
    if (p.scheme == Scheme::Monotone && u0.grid.dim() > 8)
      throw Error(ErrorCode::BadProblem, "monotone scheme supports at most 8 grid axes");
    // sl_cells^2 >= n keeps the monotone update a convex combination under cfl_bound_
    sl_cells_ = std::max(p.sl_cells, std::sqrt(static_cast<double>(n)));
    for (int a = 0; a < std::min(u0.grid.dim(), 8); ++a) strides_[a] = u0.grid.stride(a);
  }

  [[nodiscard]] const Group& group() const { return group_; }
  [[nodiscard]] double cfl_bound() const { return cfl_bound_; }
  [[nodiscard]] const std::vector<unsigned char>& frozen() const { return frozen_; }
  [[nodiscard]] Scheme scheme() const { return problem_.scheme; }

  /// The discrete operator the time stepper uses (rhs() for Central).
  [[nodiscard]] ScalarField scheme_rhs(const ScalarField& u) const {
    if (!(u.grid == problem_.u0.grid)) throw Error(ErrorCode::GridMismatch, "field grid differs from problem grid");
    ScalarField out(u.grid, 0.0, u.time);
    step_rhs_into(u.values, out.values);
    return out;
  }

  /// Sum_{i,j} (delta_ij - X_i u X_j u / (|grad u|^2 + eps^2)) X_i X_j u.
  [[nodiscard]] ScalarField rhs(const ScalarField& u) const {
    if (!(u.grid == problem_.u0.grid)) throw Error(ErrorCode::GridMismatch, "field grid differs from problem grid");
    ScalarField out(u.grid, 0.0, u.time);
    rhs_into(u.values, out.values);
    return out;
  }

  /// One explicit Euler step, boundary re-imposed afterwards.
  [[nodiscard]] ScalarField step(const ScalarField& u, double dt) const {
    if (!(dt > 0) || dt > cfl_bound_ * (1.0 + 1e-12))
      throw Error(ErrorCode::CFLViolation, "dt=" + fmt(dt) + " exceeds bound " + fmt(cfl_bound_));
    ScalarField r = scheme_rhs(u);
    ScalarField next = u;
    advance(next.values, r.values, dt);
    next.time = u.time + dt;
    return next;
  }

  [[nodiscard]] Trajectory run() const {
    const auto& p = problem_;
    double dt_max = cfl_bound_;
    if (p.dt) {
      if (!(*p.dt > 0) || *p.dt > cfl_bound_ * (1.0 + 1e-12))
        throw Error(ErrorCode::CFLViolation, "dt override " + fmt(*p.dt) + " exceeds bound " + fmt(cfl_bound_));
      dt_max = *p.dt;
    }
    const long steps = p.T > 0 ? std::max(1L, static_cast<long>(std::ceil(p.T / dt_max - 1e-9))) : 0L;
    const double dt = steps > 0 ? p.T / static_cast<double>(steps) : 0.0;

    std::vector<long> at;
    for (double t : p.snapshot_times) at.push_back(steps > 0 ? std::lround(t / dt) : 0L);
    if (at.empty() || at.back() != steps) at.push_back(steps);

    Trajectory traj;
    traj.shell_radius = p.R;
    traj.dt = dt;
    std::vector<double> u = p.u0.values, r(u.size());
    std::size_t next = 0;
    auto record = [&](long k) {
      while (next < at.size() && at[next] == k) {
        ScalarField s(p.u0.grid, 0.0, static_cast<double>(k) * dt);
        s.values = u;
        traj.snapshots.push_back(std::move(s));
        ++next;
      }
    };
    record(0);
    for (long k = 1; k <= steps; ++k) {
      step_rhs_into(u, r);
      double mx = 0;
      for (double v : r) mx = std::max(mx, std::abs(v));
      advance(u, r, dt);
      traj.log.push_back({dt, mx});
      record(k);
    }
    return traj;
  }

 private:
  static std::string fmt(double v) {
    char b[64];
    std::snprintf(b, sizeof b, "%.6g", v);
    return b;
  }

  void advance(std::vector<double>& u, const std::vector<double>& r, double dt) const {
    const auto& u0 = problem_.u0.values;
    for (std::size_t k = 0; k < u.size(); ++k) {
      u[k] = frozen_[k] ? u0[k] : u[k] + dt * r[k];
      if (!std::isfinite(u[k]) || std::abs(u[k]) > kBlowUp)
        throw Error(ErrorCode::NonFiniteField, "blow-up at node " + std::to_string(k));
    }
  }

  void rhs_into(const std::vector<double>& u, std::vector<double>& out) const {
    const auto& grid = problem_.u0.grid;
    const int n = group_.n();
    const std::size_t N = u.size();
    const double eps2 = problem_.epsilon * problem_.epsilon;
    auto d = all_partials(table_, grid, u);
    std::vector<std::vector<double>> xu(n, std::vector<double>(N));
    for (int i = 0; i < n; ++i) combine_frame(table_, i, d, xu[i]);
    std::vector<double> denom(N);
    for (std::size_t k = 0; k < N; ++k) {
      double g2 = 0;
      for (int i = 0; i < n; ++i) g2 += xu[i][k] * xu[i][k];
      denom[k] = g2 + eps2;
    }
    std::fill(out.begin(), out.end(), 0.0);
    for (int j = 0; j < n; ++j) {
      auto dj = all_partials(table_, grid, xu[j]);
      parallel_for(static_cast<std::ptrdiff_t>(N), [&](std::ptrdiff_t k) {
        double acc = out[k];
        for (int i = 0; i < n; ++i) {
          double xx = 0;  // X_i X_j u at node k
          for (int a = 0; a < n; ++a)
            if (table_.used(i, a)) xx += table_.coeff(i, a)[k] * dj[a][k];
          const double A = (i == j ? 1.0 : 0.0) - xu[i][k] * xu[j][k] / denom[k];
          acc += A * xx;
        }
        out[k] = acc;
      });
    }
    for (std::size_t k = 0; k < N; ++k)
      if (!std::isfinite(out[k])) throw Error(ErrorCode::NonFiniteField, "rhs non-finite at node " + std::to_string(k));
  }

  void step_rhs_into(const std::vector<double>& u, std::vector<double>& out) const {
    if (problem_.scheme == Scheme::Central) rhs_into(u, out);
    else monotone_into(u, out);
  }

  // multilinear, periodic axes wrap, others clamp to the box
  double sample_at(const std::vector<double>& u, std::span<const double> q) const {
    const auto& grid = problem_.u0.grid;
    const int d = grid.dim();
    std::array<std::size_t, 8> lo{};
    std::array<std::size_t, 8> hi{};
    std::array<double, 8> w{};
    for (int a = 0; a < d; ++a) {
      const auto& ax = grid.axes[a];
      double t = (q[a] - ax.origin) / ax.spacing;
      if (ax.periodic) {
        t = std::fmod(t, static_cast<double>(ax.count));
        if (t < 0) t += ax.count;
        int i0 = static_cast<int>(std::floor(t));
        if (i0 >= ax.count) {  // t rounded up to count
          i0 = 0;
          t = 0;
        }
        lo[a] = static_cast<std::size_t>(i0) * strides_[a];
        hi[a] = static_cast<std::size_t>((i0 + 1) % ax.count) * strides_[a];
        w[a] = std::clamp(t - i0, 0.0, 1.0);
      } else {
        t = std::clamp(t, 0.0, static_cast<double>(ax.count - 1));
        int i0 = std::min(static_cast<int>(std::floor(t)), ax.count - 2);
        lo[a] = static_cast<std::size_t>(i0) * strides_[a];
        hi[a] = static_cast<std::size_t>(i0 + 1) * strides_[a];
        w[a] = t - i0;
      }
    }
    double acc = 0;
    for (int corner = 0; corner < (1 << d); ++corner) {
      double wt = 1;
      std::size_t node = 0;
      for (int a = 0; a < d; ++a) {
        const bool up = (corner >> a) & 1;
        wt *= up ? w[a] : 1 - w[a];
        node += up ? hi[a] : lo[a];
      }
      if (wt != 0) acc += wt * u[node];
    }
    return acc;
  }

  void monotone_into(const std::vector<double>& u, std::vector<double>& out) const {
    const auto& grid = problem_.u0.grid;
    const int n = group_.n();
    const std::size_t N = u.size();
    const double eps2 = problem_.epsilon * problem_.epsilon, delta = problem_.delta;
    auto d = all_partials(table_, grid, u);
    std::vector<std::vector<double>> xu(n, std::vector<double>(N));
    for (int i = 0; i < n; ++i) combine_frame(table_, i, d, xu[i]);
    parallel_for(static_cast<std::ptrdiff_t>(N), [&](std::ptrdiff_t k) {
      if (frozen_[k]) {
        out[k] = 0;
        return;
      }
      // stack storage: the monotone scheme is limited to 8 axes
      using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 8, 1>;
      using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 8, 8>;
      Vec pv(n);
      for (int i = 0; i < n; ++i) pv[i] = xu[i][k];
      const double g2 = pv.squaredNorm();
      // orthonormal basis with first column along the gradient (Householder)
      Mat B = Mat::Identity(n, n);
      double lam0 = 1;
      if (g2 > 0) {
        Vec v = pv / std::sqrt(g2);
        v[0] -= 1;
        const double vv = v.squaredNorm();
        if (vv > 1e-24) B -= 2.0 * v * v.transpose() / vv;
        lam0 = eps2 / (g2 + eps2);
      }
      std::array<double, 8> qs{}, qps{}, qms{}, as{};
      const std::span<double> q(qs.data(), n), qp(qps.data(), n), qm(qms.data(), n), a(as.data(), n);
      grid.point(static_cast<std::size_t>(k), q);
      double acc = 0;
      for (int c = 0; c < n; ++c) {
        for (int i = 0; i < n; ++i) a[i] = B(i, c);
        double r = 0;
        for (int b = 0; b < n; ++b) {
          double db = 0;
          for (int i = 0; i < n; ++i)
            if (table_.used(i, b)) db += a[i] * table_.coeff(i, b)[k];
          r = std::max(r, std::abs(db) / grid.axes[b].spacing);
        }
        if (!(r > 0)) continue;
        const double s = sl_cells_ / r;
        group_.exp_flow(q, a, delta, s, qp);
        group_.exp_flow(q, a, delta, -s, qm);
        const double lam = c == 0 ? lam0 : 1.0;
        acc += lam * (sample_at(u, qp) - 2 * u[k] + sample_at(u, qm)) / (s * s);
      }
      out[k] = acc;
    });
    for (std::size_t k = 0; k < N; ++k)
      if (!std::isfinite(out[k])) throw Error(ErrorCode::NonFiniteField, "rhs non-finite at node " + std::to_string(k));
  }

  FlowProblem problem_;
  Group group_;
  FrameTable table_;
  std::vector<unsigned char> frozen_;
  double cfl_bound_ = 0;
  double sl_cells_ = 2;
  std::array<std::size_t, 8> strides_{};
};

[[nodiscard]] inline ScalarField rhs(const ScalarField& u, const GroupSpec& g, double epsilon, double delta) {
  FlowProblem p;
  p.group = g;
  p.u0 = u;
  p.epsilon = epsilon;
  p.delta = delta;
  return FlowSolver(p).rhs(u);
}

[[nodiscard]] inline Trajectory run(const FlowProblem& p) { return FlowSolver(p).run(); }

struct ComparisonReport {
  double max_violation = -std::numeric_limits<double>::infinity();
  std::size_t snapshot = 0;
  std::size_t node = 0;
  Point location;
  double time = 0;
  bool pass = false;
};

/// max over snapshots and nodes of (A - B); pass iff <= tol.
[[nodiscard]] inline ComparisonReport comparison_check(const Trajectory& A, const Trajectory& B, double tol) {
  if (A.snapshots.size() != B.snapshots.size() || A.snapshots.empty())
    throw Error(ErrorCode::GridMismatch, "trajectories have different snapshot counts");
  ComparisonReport r;
  for (std::size_t s = 0; s < A.snapshots.size(); ++s) {
    const auto& a = A.snapshots[s];
    const auto& b = B.snapshots[s];
    if (!(a.grid == b.grid)) throw Error(ErrorCode::GridMismatch, "snapshot grids differ");
    for (std::size_t k = 0; k < a.size(); ++k) {
      const double v = a[k] - b[k];
      if (v > r.max_violation) {
        r.max_violation = v;
        r.snapshot = s;
        r.node = k;
      }
    }
  }
  r.location = A.snapshots[r.snapshot].grid.point(r.node);
  r.time = A.snapshots[r.snapshot].time;
  r.pass = r.max_violation <= tol;
  return r;
}

/// Max |a - b| over matched snapshots, optionally restricted to a node mask.
[[nodiscard]] inline double sup_difference(const Trajectory& A, const Trajectory& B,
                                           const std::vector<unsigned char>* mask = nullptr) {
  if (A.snapshots.size() != B.snapshots.size())
    throw Error(ErrorCode::GridMismatch, "trajectories have different snapshot counts");
  double d = 0;
  for (std::size_t s = 0; s < A.snapshots.size(); ++s) {
    const auto& a = A.snapshots[s];
    const auto& b = B.snapshots[s];
    if (!(a.grid == b.grid)) throw Error(ErrorCode::GridMismatch, "snapshot grids differ");
    for (std::size_t k = 0; k < a.size(); ++k)
      if (!mask || (*mask)[k]) d = std::max(d, std::abs(a[k] - b[k]));
  }
  return d;
}

}  // namespace srmcf
