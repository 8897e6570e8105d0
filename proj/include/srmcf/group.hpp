#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "srmcf/common.hpp"

namespace srmcf {

enum class GroupKind { Carnot, SE2 };
enum class ThetaPolicy { Left, Midpoint };

using Point = std::vector<double>;
using Coeffs = std::vector<double>;

/// Raw description of a group, before validation.
struct GroupSpec {
  GroupKind kind = GroupKind::Carnot;
  int m = 0;
  int n = 0;
  std::vector<Eigen::MatrixXd> W;  // n - m skew matrices, m x m each
  ThetaPolicy theta_policy = ThetaPolicy::Midpoint;

  [[nodiscard]] static GroupSpec heisenberg() {
    GroupSpec g;
    g.m = 2;
    g.n = 3;
    Eigen::MatrixXd w(2, 2);
    w << 0.0, -0.5, 0.5, 0.0;
    g.W = {w};
    return g;
  }
  [[nodiscard]] static GroupSpec se2(ThetaPolicy policy = ThetaPolicy::Midpoint) {
    GroupSpec g;
    g.kind = GroupKind::SE2;
    g.m = 2;
    g.n = 3;
    g.theta_policy = policy;
    return g;
  }
  /// Flat R^m: the degenerate Carnot case with no second layer.
  [[nodiscard]] static GroupSpec euclidean(int m) {
    GroupSpec g;
    g.m = m;
    g.n = m;
    return g;
  }
};

struct DistanceTriple {
  double d_beta = 0;
  double d_0 = 0;
  double d_3 = 0;
};

/// Increments with first and second derivatives in z = (xi, eta) in R^{2n}.
struct IncrementJet {
  Eigen::VectorXd e;                 // n
  Eigen::MatrixXd grad;              // n x 2n
  std::vector<Eigen::MatrixXd> hess; // n of 2n x 2n
};

/// A group that passed validate_group. All geometry goes through here.
class Group {
 public:
  [[nodiscard]] static Group validate(const GroupSpec& spec);

  [[nodiscard]] GroupKind kind() const { return spec_.kind; }
  [[nodiscard]] int m() const { return spec_.m; }
  [[nodiscard]] int n() const { return spec_.n; }
  [[nodiscard]] const GroupSpec& spec() const { return spec_; }
  [[nodiscard]] ThetaPolicy theta_policy() const { return spec_.theta_policy; }
  [[nodiscard]] bool is_se2() const { return spec_.kind == GroupKind::SE2; }

  /// 1 for horizontal frame indices, 2 for the delta-scaled ones.
  [[nodiscard]] int degree(int i) const {
    check_index(i);
    if (is_se2()) return i == 2 ? 2 : 1;
    return i < spec_.m ? 1 : 2;
  }

  /// Coefficients of X_{i delta} at p in the coordinate basis.
  void frame(int i, double delta, std::span<const double> p, std::span<double> out) const {
    check_index(i);
    std::fill(out.begin(), out.end(), 0.0);
    if (is_se2()) {
      const double c = std::cos(p[2]), s = std::sin(p[2]);
      if (i == 0) {
        out[0] = c;
        out[1] = s;
      } else if (i == 1) {
        out[2] = 1.0;
      } else {
        out[0] = -delta * s;
        out[1] = delta * c;
      }
      return;
    }
    const int m = spec_.m;
    if (i < m) {
      out[i] = 1.0;
      for (int k = 0; k < spec_.n - m; ++k) {
        double acc = 0;
        for (int l = 0; l < m; ++l) acc += spec_.W[k](i, l) * p[l];
        out[m + k] = acc;
      }
    } else {
      out[i] = delta;
    }
  }
  [[nodiscard]] Coeffs frame(int i, double delta, std::span<const double> p) const {
    Coeffs c(spec_.n);
    frame(i, delta, p, c);
    return c;
  }

  /// Directional derivative of the coefficients of X_{i delta} at p along v.
  void frame_jvp(int i, double delta, std::span<const double> p, std::span<const double> v,
                 std::span<double> out) const {
    check_index(i);
    std::fill(out.begin(), out.end(), 0.0);
    if (is_se2()) {
      const double c = std::cos(p[2]), s = std::sin(p[2]), vt = v[2];
      if (i == 0) {
        out[0] = -s * vt;
        out[1] = c * vt;
      } else if (i == 2) {
        out[0] = -delta * c * vt;
        out[1] = -delta * s * vt;
      }
      return;
    }
    const int m = spec_.m;
    if (i < m) {
      for (int k = 0; k < spec_.n - m; ++k) {
        double acc = 0;
        for (int l = 0; l < m; ++l) acc += spec_.W[k](i, l) * v[l];
        out[m + k] = acc;
      }
    }
  }

  /// [X_i, X_j] at p, from the symbolic Jacobians of the frame coefficients.
  [[nodiscard]] Coeffs lie_bracket(int i, int j, std::span<const double> p) const {
    const int hmax = is_se2() ? 2 : spec_.m;
    if (i < 0 || j < 0 || i >= hmax || j >= hmax)
      throw Error(ErrorCode::IndexOutOfRange, "bracket indices must be horizontal");
    return bracket_any(i, j, 1.0, p);
  }

  [[nodiscard]] Coeffs bracket_any(int i, int j, double delta, std::span<const double> p) const {
    const int n = spec_.n;
    Coeffs ci(n), cj(n), a(n), b(n), out(n);
    frame(i, delta, p, ci);
    frame(j, delta, p, cj);
    frame_jvp(j, delta, p, ci, a);  // X_i applied to the coefficients of X_j
    frame_jvp(i, delta, p, cj, b);
    for (int k = 0; k < n; ++k) out[k] = a[k] - b[k];
    return out;
  }

  /// exp(s Y)(p) for the left-invariant field Y = sum_i a_i X_{i delta}; exact on both families.
  void exp_flow(std::span<const double> p, std::span<const double> a, double delta, double s,
                std::span<double> out) const {
    const int n = spec_.n;
    if (is_se2()) {
      const double w = a[1] * s, half = 0.5 * w;
      const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
      const double mid = p[2] + half;
      const double C = s * std::cos(mid) * sinc, S = s * std::sin(mid) * sinc;
      const double v1 = a[0], v2 = delta * a[2];
      out[0] = p[0] + C * v1 - S * v2;
      out[1] = p[1] + S * v1 + C * v2;
      out[2] = p[2] + w;
      return;
    }
    const int m = spec_.m;
    for (int i = 0; i < m; ++i) out[i] = p[i] + s * a[i];
    for (int k = 0; k < n - m; ++k) {
      double v = delta * a[m + k];
      for (int i = 0; i < m; ++i)
        for (int l = 0; l < m; ++l) v += a[i] * spec_.W[k](i, l) * p[l];
      out[m + k] = p[m + k] + s * v;  // the s^2 term is a^T W a = 0
    }
  }

  /// Reference angle theta_0 for SE2 increments.
  [[nodiscard]] double reference_angle(double th_xi, double th_eta) const {
    if (spec_.theta_policy == ThetaPolicy::Left) return th_xi;
    return th_eta + 0.5 * wrap_angle(th_xi - th_eta);
  }

  /// Exponential increments of eta relative to xi. SE2 may take a fixed reference angle.
  [[nodiscard]] Eigen::VectorXd increments(std::span<const double> xi, std::span<const double> eta,
                                           const double* theta0 = nullptr) const {
    const int n = spec_.n;
    Eigen::VectorXd e(n);
    if (is_se2()) {
      const double t0 = theta0 ? *theta0 : reference_angle(xi[2], eta[2]);
      const double dx = xi[0] - eta[0], dy = xi[1] - eta[1];
      const double c = std::cos(t0), s = std::sin(t0);
      e[0] = c * dx + s * dy;
      e[1] = std::sin(xi[2] - eta[2]);
      e[2] = -s * dx + c * dy;
      return e;
    }
    const int m = spec_.m;
    for (int i = 0; i < m; ++i) e[i] = xi[i] - eta[i];
    for (int k = 0; k < n - m; ++k) {
      const auto& w = spec_.W[k];
      double acc = 0;
      for (int l = 0; l < m; ++l)
        for (int j = 0; j < m; ++j) acc += w(l, j) * (xi[j] * eta[l] - xi[l] * eta[j]);
      e[m + k] = xi[m + k] - eta[m + k] + 0.5 * acc;
    }
    return e;
  }

  /// Increments plus derivatives in z = (xi, eta). With freeze_reference the SE2 angle
  /// theta_0 is held at its value for this pair, or at *theta0 when given.
  [[nodiscard]] IncrementJet increment_jet(std::span<const double> xi, std::span<const double> eta,
                                           bool freeze_reference, const double* theta0 = nullptr) const;

  [[nodiscard]] DistanceTriple distance(std::span<const double> xi, std::span<const double> eta,
                                        double beta, const double* theta0 = nullptr) const {
    return distance_from(increments(xi, eta, theta0), beta);
  }
  [[nodiscard]] DistanceTriple distance_from(const Eigen::VectorXd& e, double beta) const {
    double h = 0, v = 0;
    for (int i = 0; i < spec_.n; ++i) (degree(i) == 1 ? h : v) += e[i] * e[i];
    DistanceTriple d;
    d.d_0 = std::sqrt(h);
    d.d_3 = beta * std::sqrt(v);
    d.d_beta = std::sqrt(h + beta * beta * v);
    return d;
  }

  [[nodiscard]] double pseudo_norm(std::span<const double> p) const {
    if (is_se2()) return std::hypot(p[0], p[1]);
    double x2 = 0, t2 = 0;
    for (int i = 0; i < spec_.m; ++i) x2 += p[i] * p[i];
    for (int i = spec_.m; i < spec_.n; ++i) t2 += p[i] * p[i];
    return std::pow(x2 * x2 + t2, 0.25);
  }

 private:
  explicit Group(GroupSpec s) : spec_(std::move(s)) {}
  void check_index(int i) const {
    if (i < 0 || i >= spec_.n) throw Error(ErrorCode::IndexOutOfRange, "frame index " + std::to_string(i));
  }
  GroupSpec spec_;
};

[[nodiscard]] inline Group validate_group(const GroupSpec& spec) { return Group::validate(spec); }

inline Group Group::validate(const GroupSpec& spec_in) {
  GroupSpec spec = spec_in;
  if (spec.kind == GroupKind::SE2) {
    spec.m = 2;
    spec.n = 3;
    spec.W.clear();
    return Group(std::move(spec));
  }
  if (spec.m < 1 || spec.n < spec.m)
    throw Error(ErrorCode::BadDimensions, "need 1 <= m <= n, got m=" + std::to_string(spec.m) +
                                              " n=" + std::to_string(spec.n));
  if (static_cast<int>(spec.W.size()) != spec.n - spec.m)
    throw Error(ErrorCode::BadDimensions, "expected " + std::to_string(spec.n - spec.m) + " W matrices");
  for (std::size_t k = 0; k < spec.W.size(); ++k) {
    const auto& w = spec.W[k];
    if (w.rows() != spec.m || w.cols() != spec.m)
      throw Error(ErrorCode::BadDimensions, "W" + std::to_string(k + 1) + " must be m x m");
    for (int i = 0; i < spec.m; ++i)
      for (int j = 0; j < spec.m; ++j)
        if (!std::isfinite(w(i, j)) || std::abs(w(i, j) + w(j, i)) > 1e-12)
          throw Error(ErrorCode::NotSkewSymmetric, "W" + std::to_string(k + 1) + " entry (" +
                                                       std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
  }
  Group g(std::move(spec));
  if (g.n() == g.m()) return g;

  // Rank test at the origin and at one fixed pseudo-random point.
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::vector<Point> probes{Point(g.n(), 0.0), Point(g.n())};
  for (double& x : probes[1]) x = U(rng);
  for (const auto& p : probes) {
    const int m = g.m();
    Eigen::MatrixXd A(g.n(), m + m * (m - 1) / 2);
    int col = 0;
    for (int i = 0; i < m; ++i) {
      auto c = g.frame(i, 1.0, p);
      for (int r = 0; r < g.n(); ++r) A(r, col) = c[r];
      ++col;
    }
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) {
        auto c = g.bracket_any(i, j, 1.0, p);
        for (int r = 0; r < g.n(); ++r) A(r, col) = c[r];
        ++col;
      }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(A);
    const auto& sv = svd.singularValues();
    const double top = sv.size() ? sv[0] : 0.0;
    int rank = 0;
    for (int k = 0; k < sv.size(); ++k)
      if (top > 0 && sv[k] >= 1e-10 * top) ++rank;
    if (rank < g.n())
      throw Error(ErrorCode::BracketGenerationFails,
                  "span rank " + std::to_string(rank) + " < n=" + std::to_string(g.n()));
  }
  return g;
}

inline IncrementJet Group::increment_jet(std::span<const double> xi, std::span<const double> eta,
                                         bool freeze_reference, const double* theta0) const {
  const int n = spec_.n, N = 2 * n;
  IncrementJet J;
  J.grad = Eigen::MatrixXd::Zero(n, N);
  J.hess.assign(n, Eigen::MatrixXd::Zero(N, N));
  if (is_se2()) {
    const double t0 = freeze_reference && theta0 ? *theta0 : reference_angle(xi[2], eta[2]);
    J.e = increments(xi, eta, &t0);
    double a = 0, b = 0;  // d theta_0 / d theta_xi, d theta_0 / d theta_eta
    if (!freeze_reference) {
      if (spec_.theta_policy == ThetaPolicy::Left) a = 1.0;
      else a = b = 0.5;
    }
    const double c = std::cos(t0), s = std::sin(t0);
    Eigen::VectorXd gx = Eigen::VectorXd::Zero(N), gy = gx, T = gx, U = gx;
    gx[0] = 1; gx[3] = -1;
    gy[1] = 1; gy[4] = -1;
    T[2] = a; T[5] = b;
    U[2] = 1; U[5] = -1;
    const Eigen::VectorXd P = -s * gx + c * gy;
    const Eigen::VectorXd Q = c * gx + s * gy;
    const double e1 = J.e[0], e3 = J.e[2], dth = xi[2] - eta[2];
    J.grad.row(0) = (Q + e3 * T).transpose();
    J.grad.row(1) = (std::cos(dth) * U).transpose();
    J.grad.row(2) = (P - e1 * T).transpose();
    J.hess[0] = P * T.transpose() + T * P.transpose() - e1 * T * T.transpose();
    J.hess[1] = -std::sin(dth) * U * U.transpose();
    J.hess[2] = -(Q * T.transpose() + T * Q.transpose()) - e3 * T * T.transpose();
    return J;
  }
  J.e = increments(xi, eta);
  const int m = spec_.m;
  for (int i = 0; i < m; ++i) {
    J.grad(i, i) = 1.0;
    J.grad(i, n + i) = -1.0;
  }
  for (int k = 0; k < n - m; ++k) {
    const auto& w = spec_.W[k];
    const int r = m + k;
    J.grad(r, r) = 1.0;
    J.grad(r, n + r) = -1.0;
    for (int a = 0; a < m; ++a) {
      double gxi = 0, geta = 0;
      for (int l = 0; l < m; ++l) {
        gxi += w(l, a) * eta[l];
        geta += w(a, l) * xi[l];
      }
      J.grad(r, a) = gxi;
      J.grad(r, n + a) = geta;
      for (int bb = 0; bb < m; ++bb) {
        J.hess[r](a, n + bb) = w(bb, a);
        J.hess[r](n + bb, a) = w(bb, a);
      }
    }
  }
  return J;
}

/// Empirical Lipschitz constant of sampled data w.r.t. d_beta (a lower bound of the true one).
[[nodiscard]] inline double lipschitz_estimate(const Group& g, const std::vector<std::pair<Point, double>>& samples,
                                               double beta) {
  if (samples.size() < 2) throw Error(ErrorCode::TooFewSamples, "need at least 2 samples");
  double best = 0;
  for (std::size_t a = 0; a < samples.size(); ++a)
    for (std::size_t b = a + 1; b < samples.size(); ++b) {
      const double d = g.distance(samples[a].first, samples[b].first, beta).d_beta;
      if (!(d > 0)) continue;
      best = std::max(best, std::abs(samples[a].second - samples[b].second) / d);
    }
  return best;
}

/// [X_i, X_j] at p with the coefficient Jacobians replaced by central differences of step h.
[[nodiscard]] inline Coeffs fd_bracket(const Group& g, int i, int j, double delta, std::span<const double> p,
                                       double h) {
  const int n = g.n();
  const Coeffs ci = g.frame(i, delta, p), cj = g.frame(j, delta, p);
  // D c_k . v by central differences
  auto dir = [&](int k, const Coeffs& v) {
    Point a(p.begin(), p.end()), b(p.begin(), p.end());
    for (int q = 0; q < n; ++q) {
      a[q] += h * v[q];
      b[q] -= h * v[q];
    }
    const Coeffs fa = g.frame(k, delta, a), fb = g.frame(k, delta, b);
    Coeffs d(n);
    for (int q = 0; q < n; ++q) d[q] = (fa[q] - fb[q]) / (2 * h);
    return d;
  };
  const Coeffs a = dir(j, ci), b = dir(i, cj);
  Coeffs out(n);
  for (int q = 0; q < n; ++q) out[q] = a[q] - b[q];
  return out;
}

}  // namespace srmcf
