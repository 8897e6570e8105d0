#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "srmcf/common.hpp"
#include "srmcf/field.hpp"
#include "srmcf/flow.hpp"
#include "srmcf/group.hpp"

namespace srmcf {

struct PsiValues {
  double v = 0, d1 = 0, d2 = 0;
};

/// (s-2)^3 on [0,2], 0 beyond.
[[nodiscard]] inline PsiValues psi_cubic(double s) {
  if (s < 0) throw Error(ErrorCode::NegativeArgument, "psi_cubic needs s >= 0");
  if (s >= 2) return {};
  const double a = s - 2;
  return {a * a * a, 3 * a * a, 6 * a};
}

/// Closing constant of the cubic-barrier chain: sup psi' (= 12) plus 32 sqrt(3).
[[nodiscard]] inline double cubic_barrier_constant() { return 12.0 + 32.0 * std::sqrt(3.0); }

struct CubicBarrier {
  double epsilon = 0.1;
  double delta = 0.1;
  double C = cubic_barrier_constant();
};

[[nodiscard]] inline double half_square(std::span<const double> p) { return 0.5 * (p[0] * p[0] + p[1] * p[1]); }

[[nodiscard]] inline double eval_cubic_barrier(const CubicBarrier& b, std::span<const double> xi, double t) {
  return psi_cubic(half_square(xi) + t * b.epsilon).v - b.C * t * std::sqrt(b.epsilon);
}

enum class HKind { SE2HalfSquare, CarnotMixed };

struct ExpBarrier {
  double sigma = 1e-2;
  double alpha = 0.5;
  double T = 1.0;
  HKind h_kind = HKind::SE2HalfSquare;
  [[nodiscard]] double c_hat() const { return 2.0 * std::exp(4.0 * sigma * T); }
};

/// h = |x|^2 + sum sqrt(1 + theta_s^2) on Carnot groups.
[[nodiscard]] inline double carnot_mixed(const Group& g, std::span<const double> p) {
  double h = 0;
  for (int i = 0; i < g.m(); ++i) h += p[i] * p[i];
  for (int i = g.m(); i < g.n(); ++i) h += std::sqrt(1.0 + p[i] * p[i]);
  return h;
}

[[nodiscard]] inline double exp_h(const ExpBarrier& b, const Group& g, std::span<const double> p) {
  return b.h_kind == HKind::SE2HalfSquare ? half_square(p) : carnot_mixed(g, p);
}

[[nodiscard]] inline PsiValues psi_exp(const ExpBarrier& b, double s, double t) {
  const double k = b.sigma * (2 * b.T - b.alpha * t);
  const double v = b.c_hat() * std::exp(-k * s);
  return {v, -k * v, k * k * v};
}

[[nodiscard]] inline double eval_exp_barrier(const ExpBarrier& b, const Group& g, std::span<const double> xi,
                                             double t) {
  if (t < 0 || t > b.T) throw Error(ErrorCode::TimeOutOfRange, "t outside [0,T]");
  return psi_exp(b, exp_h(b, g, xi), t).v;
}

struct BarrierSample {
  Point p;
  double t = 0;
};

enum class ResidualSign { Sub, Super };

struct ResidualReport {
  std::size_t count = 0;
  double extreme = 0;          // max residual (Sub) or min residual (Super)
  std::size_t argmax = 0;
  ResidualSign sign = ResidualSign::Sub;
  double tol = 0;
  bool pass = false;
  double richardson_gap = 0;   // max |residual(fd_h) - residual(2 fd_h)|
  std::size_t trivial = 0;     // samples outside the barrier support
  std::vector<double> residuals;
  std::vector<BarrierSample> samples;
};

/// Frame derivatives of a scalar function by central differences along the frame vectors.
struct FdJet {
  std::vector<double> X;                  // X_i h
  std::vector<std::vector<double>> XX;    // X_i (X_j h)
};

[[nodiscard]] inline FdJet fd_frame_jet(const Group& g, double delta, const std::function<double(std::span<const double>)>& h,
                                        std::span<const double> p, double s) {
  const int n = g.n();
  auto first = [&](int j, std::span<const double> q) {
    Coeffs c = g.frame(j, delta, q);
    Point a(q.begin(), q.end()), b(q.begin(), q.end());
    for (int k = 0; k < n; ++k) {
      a[k] += s * c[k];
      b[k] -= s * c[k];
    }
    return (h(a) - h(b)) / (2 * s);
  };
  FdJet J;
  J.X.resize(n);
  J.XX.assign(n, std::vector<double>(n));
  for (int j = 0; j < n; ++j) J.X[j] = first(j, p);
  for (int i = 0; i < n; ++i) {
    Coeffs c = g.frame(i, delta, p);
    Point a(p.begin(), p.end()), b(p.begin(), p.end());
    for (int k = 0; k < n; ++k) {
      a[k] += s * c[k];
      b[k] -= s * c[k];
    }
    for (int j = 0; j < n; ++j) J.XX[i][j] = (first(j, a) - first(j, b)) / (2 * s);
  }
  return J;
}

/// Left side of the regularized operator for v = Psi(h) given Psi', Psi'' and the h-jet:
/// v_t - sum (delta_ij - X_i v X_j v / (eps^2 + |grad v|^2)) X_i X_j v.
[[nodiscard]] inline double operator_residual(double v_t, const PsiValues& psi, const FdJet& J, double epsilon) {
  const std::size_t n = J.X.size();
  std::vector<double> xv(n);
  double g2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    xv[i] = psi.d1 * J.X[i];
    g2 += xv[i] * xv[i];
  }
  const double den = epsilon * epsilon + g2;
  double acc = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double A = (i == j ? 1.0 : 0.0) - xv[i] * xv[j] / den;
      acc += A * (psi.d1 * J.XX[i][j] + psi.d2 * J.X[i] * J.X[j]);
    }
  return v_t - acc;
}

/// Uniform samples in the disk x^2 + y^2 < r_max^2 (SE2) or the box [-r_max, r_max]^n (Carnot),
/// times uniform in [0, t_max]. Deterministic given the seed.
[[nodiscard]] inline std::vector<BarrierSample> sample_points(const Group& g, std::size_t count, double r_max,
                                                              double t_max, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<BarrierSample> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    BarrierSample s;
    s.p.assign(g.n(), 0.0);
    if (g.is_se2()) {
      const double r = r_max * std::sqrt(U(rng)), a = kTwoPi * U(rng);
      s.p[0] = r * std::cos(a);
      s.p[1] = r * std::sin(a);
      s.p[2] = kTwoPi * U(rng);
    } else {
      for (double& x : s.p) x = r_max * (2 * U(rng) - 1);
    }
    s.t = t_max * U(rng);
    out.push_back(std::move(s));
  }
  return out;
}

namespace detail {
template <class ResidualAt>
ResidualReport collect(const std::vector<BarrierSample>& samples, ResidualSign sign, double fd_h, ResidualAt&& at) {
  if (samples.empty()) throw Error(ErrorCode::EmptySampleSet, "no samples");
  ResidualReport r;
  r.sign = sign;
  r.count = samples.size();
  r.tol = 10 * fd_h * fd_h;
  r.samples = samples;
  r.residuals.resize(samples.size());
  std::vector<double> gap(samples.size());
  std::vector<unsigned char> trivial(samples.size());
  parallel_for(static_cast<std::ptrdiff_t>(samples.size()), [&](std::ptrdiff_t k) {
    auto [v1, v2, triv] = at(samples[k], fd_h);
    r.residuals[k] = v1;
    gap[k] = std::abs(v1 - v2);
    trivial[k] = triv;
  });
  r.extreme = r.residuals[0];
  for (std::size_t k = 0; k < samples.size(); ++k) {
    const double v = r.residuals[k];
    if (sign == ResidualSign::Sub ? v > r.extreme : v < r.extreme) {
      r.extreme = v;
      r.argmax = k;
    }
    r.richardson_gap = std::max(r.richardson_gap, gap[k]);
    r.trivial += trivial[k];
  }
  r.pass = sign == ResidualSign::Sub ? r.extreme <= r.tol : r.extreme >= -r.tol;
  return r;
}
}  // namespace detail

/// Cubic barrier subsolution check on SE2. Samples with h + t eps >= 2 are trivially satisfied
/// and report residual 0.
[[nodiscard]] inline ResidualReport check_cubic_subsolution(const CubicBarrier& b,
                                                            const std::vector<BarrierSample>& samples,
                                                            double fd_h = 1e-4) {
  const Group g = Group::validate(GroupSpec::se2());
  const std::function<double(std::span<const double>)> h = [](std::span<const double> q) { return half_square(q); };
  return detail::collect(samples, ResidualSign::Sub, fd_h, [&](const BarrierSample& s, double fh) {
    const double arg = half_square(s.p) + s.t * b.epsilon;
    struct R { double a, b; unsigned char t; };
    if (arg >= 2) return R{0.0, 0.0, 1};
    const PsiValues psi = psi_cubic(arg);
    const double v_t = b.epsilon * psi.d1 - b.C * std::sqrt(b.epsilon);
    const double r1 = operator_residual(v_t, psi, fd_frame_jet(g, b.delta, h, s.p, fh), b.epsilon);
    const double r2 = operator_residual(v_t, psi, fd_frame_jet(g, b.delta, h, s.p, 2 * fh), b.epsilon);
    return R{r1, r2, 0};
  });
}

[[nodiscard]] inline ResidualReport check_exp_supersolution(const ExpBarrier& b, const Group& g,
                                                            const std::vector<BarrierSample>& samples,
                                                            double epsilon, double delta, double fd_h = 1e-4) {
  const std::function<double(std::span<const double>)> h = [&](std::span<const double> q) { return exp_h(b, g, q); };
  return detail::collect(samples, ResidualSign::Super, fd_h, [&](const BarrierSample& s, double fh) {
    struct R { double a, b; unsigned char t; };
    if (s.t < 0 || s.t > b.T) throw Error(ErrorCode::TimeOutOfRange, "sample time outside [0,T]");
    const double hv = exp_h(b, g, s.p);
    const PsiValues psi = psi_exp(b, hv, s.t);
    const double v_t = b.sigma * b.alpha * hv * psi.v;
    const double r1 = operator_residual(v_t, psi, fd_frame_jet(g, delta, h, s.p, fh), epsilon);
    const double r2 = operator_residual(v_t, psi, fd_frame_jet(g, delta, h, s.p, 2 * fh), epsilon);
    return R{r1, r2, 0};
  });
}

/// Radius of the largest pseudo-norm ball contained in the grid box.
[[nodiscard]] inline double inscribed_radius(const Group& g, const GridSpec& grid) {
  double r = std::numeric_limits<double>::infinity();
  Point q(g.n());
  for (std::size_t k = 0; k < grid.size(); ++k)
    if (grid.on_face(k)) {
      grid.point(k, q);
      r = std::min(r, g.pseudo_norm(q));
    }
  return r;
}

/// Smallest lattice radius R such that every node with pseudo-norm > R stays within tol of
/// one constant over all snapshots. None when R would exceed the inscribed radius of the box.
[[nodiscard]] inline std::optional<double> confinement_radius(const Trajectory& traj, const Group& g, double tol) {
  if (traj.snapshots.empty()) throw Error(ErrorCode::BadProblem, "trajectory has no snapshots");
  const auto& grid = traj.snapshots[0].grid;
  const std::size_t N = grid.size();
  std::vector<double> r(N), lo(N), hi(N);
  Point q(g.n());
  for (std::size_t k = 0; k < N; ++k) {
    grid.point(k, q);
    r[k] = g.pseudo_norm(q);
    lo[k] = hi[k] = traj.snapshots[0][k];
    for (const auto& s : traj.snapshots) {
      lo[k] = std::min(lo[k], s[k]);
      hi[k] = std::max(hi[k], s[k]);
    }
  }
  std::vector<std::size_t> order(N);
  for (std::size_t k = 0; k < N; ++k) order[k] = k;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return r[a] > r[b]; });
  double mn = std::numeric_limits<double>::infinity(), mx = -mn;
  double R = 0;
  bool broke = false;
  for (std::size_t pos = 0; pos < N;) {
    std::size_t end = pos;
    double gmn = mn, gmx = mx;
    while (end < N && r[order[end]] == r[order[pos]]) {
      gmn = std::min(gmn, lo[order[end]]);
      gmx = std::max(gmx, hi[order[end]]);
      ++end;
    }
    if (gmx - gmn >= tol) {
      R = r[order[pos]];
      broke = true;
      break;
    }
    mn = gmn;
    mx = gmx;
    pos = end;
  }
  if (!broke) return 0.0;
  if (R >= inscribed_radius(g, grid)) return std::nullopt;
  return R;
}

struct DecayFit {
  double B = 0;
  double b = 0;
  double r2 = 0;
  std::size_t used = 0;
};

/// Least-squares fit of log|c - u| against the pseudo-norm over all snapshots, skipping nodes
/// within two cells of a Dirichlet shell or a box face. B is the envelope constant.
[[nodiscard]] inline DecayFit decay_fit(const Trajectory& traj, const Group& g, double boundary_constant) {
  if (traj.snapshots.empty()) throw Error(ErrorCode::DegenerateFit, "no snapshots");
  const auto& grid = traj.snapshots[0].grid;
  double hmax = 0;
  for (const auto& a : grid.axes)
    if (!a.periodic) hmax = std::max(hmax, a.spacing);
  std::vector<double> xs, ys;
  Point q(g.n());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid.point(k, q);
    const double r = g.pseudo_norm(q);
    if (grid.on_face(k, 2)) continue;
    if (traj.shell_radius && r >= *traj.shell_radius - 2 * hmax) continue;
    for (const auto& s : traj.snapshots) {
      const double res = std::abs(boundary_constant - s[k]);
      if (res > 1e-14) {
        xs.push_back(r);
        ys.push_back(std::log(res));
      }
    }
  }
  if (xs.size() < 10) throw Error(ErrorCode::DegenerateFit, "fewer than 10 usable nodes");
  const double n = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    mx += xs[k];
    my += ys[k];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    sxx += (xs[k] - mx) * (xs[k] - mx);
    sxy += (xs[k] - mx) * (ys[k] - my);
    syy += (ys[k] - my) * (ys[k] - my);
  }
  if (!(sxx > 0)) throw Error(ErrorCode::DegenerateFit, "all usable nodes share one radius");
  DecayFit f;
  const double slope = sxy / sxx;
  f.b = -slope;
  f.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  double env = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < xs.size(); ++k) env = std::max(env, ys[k] + f.b * xs[k]);
  f.B = std::exp(env);
  f.used = xs.size();
  return f;
}

}  // namespace srmcf
