#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "srmcf/common.hpp"
#include "srmcf/field.hpp"
#include "srmcf/flow.hpp"
#include "srmcf/group.hpp"

namespace srmcf {

/// Parameters of the doubling-variable test function.
struct PhiParams {
  double gamma = 4;
  double beta = 0.1;
  double delta = 0.1;  // frame scaling; coupled to beta by default
  double epsilon = 0.1;
  double M = 4;
  double alpha = 1.0 / 6.0;
  double T = 1;
  double lip_u0 = 1;
  double sigma = 1;

  void validate() const {
    if (!(gamma > 2)) throw Error(ErrorCode::BadParams, "gamma must exceed 2");
    if (!(beta > 0 && beta <= 1)) throw Error(ErrorCode::BadParams, "beta must lie in (0,1]");
    if (!(delta > 0 && delta <= 1)) throw Error(ErrorCode::BadParams, "delta must lie in (0,1]");
    if (!(epsilon > 0 && epsilon < 1)) throw Error(ErrorCode::BadParams, "epsilon must lie in (0,1)");
    if (!(M > 0)) throw Error(ErrorCode::BadParams, "M must be positive");
    if (!(alpha > 0)) throw Error(ErrorCode::BadParams, "alpha must be positive");
    if (!(T > 0)) throw Error(ErrorCode::BadParams, "T must be positive");
    if (!(lip_u0 >= 0)) throw Error(ErrorCode::BadParams, "Lip(u0) must be >= 0");
  }
  [[nodiscard]] double mu() const {
    validate();
    return gamma * std::pow(4.0, gamma) * std::pow(lip_u0, gamma) / std::pow(M, gamma - 1);
  }
  /// mu * eps^(1 - gamma/2), the prefactor shared by every derivative bound.
  [[nodiscard]] double kappa() const { return mu() * std::pow(epsilon, 1 - gamma / 2); }
};

[[nodiscard]] inline double mu_of(const PhiParams& p) { return p.mu(); }

[[nodiscard]] inline double phi_from_distance(const PhiParams& p, double d_beta, double t) {
  if (t < 0 || t > p.T) throw Error(ErrorCode::BadParams, "t outside [0,T]");
  return p.kappa() / p.gamma * std::pow(d_beta, p.gamma) + p.M * t / (2 * p.T) * std::pow(p.epsilon, p.alpha);
}

[[nodiscard]] inline double phi(const PhiParams& p, const Group& g, std::span<const double> xi,
                                std::span<const double> eta, double t, const double* theta0 = nullptr) {
  return phi_from_distance(p, g.distance(xi, eta, p.beta, theta0).d_beta, t);
}

[[nodiscard]] inline double omega(const PhiParams& p, const Group& g, const ScalarField& u, const ScalarField& ueps,
                                  std::span<const double> xi, std::span<const double> eta, double t) {
  return interpolate(u, xi) - interpolate(ueps, eta) - phi(p, g, xi, eta, t);
}

/// Spatial derivatives of phi along the frames acting on xi (side 0) or eta (side 1).
/// Index A = side * n + i. second(A, B) = X_A (X_B phi). The SE2 reference angle is frozen
/// at the pair's value, or at *theta0 when given.
struct PhiDerivatives {
  DistanceTriple dist;
  Eigen::VectorXd first;   // 2n
  Eigen::MatrixXd second;  // 2n x 2n
};

[[nodiscard]] inline PhiDerivatives phi_derivatives(const PhiParams& p, const Group& g, std::span<const double> xi,
                                                    std::span<const double> eta,
                                                    const double* theta0 = nullptr) {
  const int n = g.n(), N = 2 * n;
  const IncrementJet J = g.increment_jet(xi, eta, true, theta0);
  PhiDerivatives out;
  out.dist = g.distance_from(J.e, p.beta);
  const double d = out.dist.d_beta;
  if (!(d > 0)) throw Error(ErrorCode::DegeneratePair, "d_beta = 0");
  const double k = p.kappa(), gm = p.gamma, b2 = p.beta * p.beta;

  Eigen::VectorXd S = Eigen::VectorXd::Zero(N);
  Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(N, N);
  for (int r = 0; r < n; ++r) {
    const double w = g.degree(r) == 1 ? 1.0 : b2;
    const Eigen::VectorXd ge = J.grad.row(r).transpose();
    S += w * J.e[r] * ge;
    Q += w * (ge * ge.transpose() + J.e[r] * J.hess[r]);
  }
  const Eigen::VectorXd grad = k * std::pow(d, gm - 2) * S;
  const Eigen::MatrixXd hess = k * (gm - 2) * std::pow(d, gm - 4) * S * S.transpose() + k * std::pow(d, gm - 2) * Q;

  std::vector<Eigen::VectorXd> V(N, Eigen::VectorXd::Zero(N));
  std::vector<Coeffs> raw(N);
  for (int side = 0; side < 2; ++side) {
    std::span<const double> q = side == 0 ? xi : eta;
    for (int i = 0; i < n; ++i) {
      raw[side * n + i] = g.frame(i, p.delta, q);
      for (int a = 0; a < n; ++a) V[side * n + i][side * n + a] = raw[side * n + i][a];
    }
  }
  out.first.resize(N);
  out.second.resize(N, N);
  for (int A = 0; A < N; ++A) out.first[A] = V[A].dot(grad);
  Coeffs jv(n);
  for (int A = 0; A < N; ++A)
    for (int B = 0; B < N; ++B) {
      double v = V[A].dot(hess * V[B]);
      const int sa = A / n, sb = B / n;
      if (sa == sb) {
        std::span<const double> q = sa == 0 ? xi : eta;
        g.frame_jvp(B % n, p.delta, q, raw[A], jv);
        for (int a = 0; a < n; ++a) v += jv[a] * grad[sb * n + a];
      }
      out.second(A, B) = v;
    }
  return out;
}

struct FirstDerivatives {
  std::vector<double> xi;
  std::vector<double> eta;
};

[[nodiscard]] inline FirstDerivatives phi_first_derivatives(const PhiParams& p, const Group& g,
                                                            std::span<const double> xi, std::span<const double> eta) {
  const auto D = phi_derivatives(p, g, xi, eta);
  FirstDerivatives f;
  for (int i = 0; i < g.n(); ++i) {
    f.xi.push_back(D.first[i]);
    f.eta.push_back(D.first[g.n() + i]);
  }
  return f;
}

// ---- pair construction --------------------------------------------------------------

/// eta with the given increments relative to xi (inverse of Group::increments).
[[nodiscard]] inline Point pair_from_increment(const Group& g, std::span<const double> xi, const Eigen::VectorXd& e) {
  const int n = g.n();
  Point eta(n);
  if (g.is_se2()) {
    const double dth = std::asin(std::clamp(e[1], -1.0, 1.0));
    eta[2] = reduce_angle(xi[2] - dth);
    const double t0 = g.theta_policy() == ThetaPolicy::Left ? xi[2] : xi[2] - 0.5 * dth;
    const double c = std::cos(t0), s = std::sin(t0);
    eta[0] = xi[0] - (c * e[0] - s * e[2]);
    eta[1] = xi[1] - (s * e[0] + c * e[2]);
    return eta;
  }
  const int m = g.m();
  for (int i = 0; i < m; ++i) eta[i] = xi[i] - e[i];
  for (int k = 0; k < n - m; ++k) {
    const auto& w = g.spec().W[k];
    double acc = 0;
    for (int l = 0; l < m; ++l)
      for (int j = 0; j < m; ++j) acc += w(l, j) * (xi[j] * eta[l] - xi[l] * eta[j]);
    eta[m + k] = xi[m + k] - e[m + k] + 0.5 * acc;
  }
  return eta;
}

/// Random pair with 0 < d_beta <= 1 (and |theta_xi - theta_eta| <= pi/4 on SE2).
template <class Rng>
void random_pair(const Group& g, double beta, Rng& rng, Point& xi, Point& eta) {
  const int n = g.n();
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::normal_distribution<double> Nrm(0.0, 1.0);
  xi.assign(n, 0.0);
  for (int a = 0; a < n; ++a) xi[a] = 2 * U(rng) - 1;
  if (g.is_se2()) xi[2] = kTwoPi * U(rng);
  Eigen::VectorXd e(n);
  for (;;) {
    double nrm = 0;
    for (int a = 0; a < n; ++a) {
      e[a] = Nrm(rng);
      nrm += e[a] * e[a];
    }
    nrm = std::sqrt(nrm);
    if (!(nrm > 0)) continue;
    const double rad = std::pow(U(rng), 1.0 / n);
    if (!(rad > 0)) continue;
    e *= rad / nrm;
    for (int a = 0; a < n; ++a)
      if (g.degree(a) == 2) e[a] /= beta;
    if (g.is_se2() && std::abs(e[1]) > std::sin(kPi / 4)) continue;
    break;
  }
  eta = pair_from_increment(g, xi, e);
}

struct FdCheck {
  std::size_t pairs = 0;
  double first_error = 0;   // max |analytic - FD| over first derivatives
  double second_error = 0;  // same for X_A X_B phi, FD taken over the analytic first derivative
  [[nodiscard]] bool pass(double tol = 1e-6) const { return first_error <= tol && second_error <= tol; }
};

/// Central differences along the frame vectors at random pairs with d_beta in [0.1, 1].
/// The SE2 reference angle stays at the unperturbed pair's value.
[[nodiscard]] inline FdCheck fd_derivative_check(const PhiParams& p, const Group& g, std::size_t pairs,
                                                 std::uint64_t seed, double h = 1e-5) {
  p.validate();
  const int n = g.n(), N = 2 * n;
  std::mt19937_64 rng(seed);
  FdCheck out;
  Point xi, eta;
  while (out.pairs < pairs) {
    random_pair(g, p.beta, rng, xi, eta);
    if (g.distance(xi, eta, p.beta).d_beta < 0.1) continue;
    const double t0 = g.is_se2() ? g.reference_angle(xi[2], eta[2]) : 0.0;
    const double* tp = g.is_se2() ? &t0 : nullptr;
    const auto D = phi_derivatives(p, g, xi, eta, tp);
    for (int A = 0; A < N; ++A) {
      const int side = A / n;
      const Coeffs v = g.frame(A % n, p.delta, side == 0 ? xi : eta);
      Point xa = xi, xb = xi, ea = eta, eb = eta;
      for (int q = 0; q < n; ++q) {
        (side == 0 ? xa : ea)[q] += h * v[q];
        (side == 0 ? xb : eb)[q] -= h * v[q];
      }
      const double fd = (phi(p, g, xa, ea, 0.0, tp) - phi(p, g, xb, eb, 0.0, tp)) / (2 * h);
      out.first_error = std::max(out.first_error, std::abs(fd - D.first[A]));
      const auto Da = phi_derivatives(p, g, xa, ea, tp), Db = phi_derivatives(p, g, xb, eb, tp);
      for (int B = 0; B < N; ++B)
        out.second_error =
            std::max(out.second_error, std::abs((Da.first[B] - Db.first[B]) / (2 * h) - D.second(A, B)));
    }
    ++out.pairs;
  }
  return out;
}

// ---- bound audits --------------------------------------------------------------------

enum BoundId : int {
  kFirstDeg1Each,
  kFirstDeg1Sum,
  kFirstDeg2Each,
  kFirstDeg2Sum,
  kGrad0Lower,
  kSecondDeg11,
  kSecondMixed,
  kSecondDeg22,
  kHessianSum,
  kBoundCount
};

[[nodiscard]] inline std::string bound_name(int id) {
  static const char* names[] = {"first_deg1_each", "first_deg1_sum", "first_deg2_each",
                                "first_deg2_sum",  "grad0_lower",    "second_deg11",
                                "second_mixed",    "second_deg22",   "hessian_sum"};
  return names[id];
}
[[nodiscard]] inline bool bound_is_lower(int id) { return id == kGrad0Lower; }

namespace detail {
inline double safe_ratio(double lhs, double rhs) {
  if (rhs > 0) return lhs / rhs;
  return lhs <= 0 ? 0.0 : std::numeric_limits<double>::infinity();
}
}  // namespace detail

/// lhs / rhs for every bound at one pair, with the unknown constant stripped.
/// NaN marks a bound that does not apply (no index of the needed degree, or d_0 = 0 for the lower bound).
[[nodiscard]] inline std::array<double, kBoundCount> bound_ratios(const PhiParams& p, const Group& g,
                                                                 std::span<const double> xi,
                                                                 std::span<const double> eta) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::array<double, kBoundCount> r;
  r.fill(nan);
  const auto D = phi_derivatives(p, g, xi, eta);
  const int n = g.n();
  const double k = p.kappa(), gm = p.gamma, d = D.dist.d_beta, d0 = D.dist.d_0;
  const double be = p.beta, de = p.delta;
  const double dg2 = std::pow(d, gm - 2);
  auto upd = [&](int id, double v) { r[id] = std::isnan(r[id]) ? v : std::max(r[id], v); };

  for (int i = 0; i < n; ++i) {
    const double fx = D.first[i], fe = D.first[n + i];
    if (g.degree(i) == 1) {
      upd(kFirstDeg1Each, detail::safe_ratio(std::max(std::abs(fx), std::abs(fe)), k * dg2 * d0));
      upd(kFirstDeg1Sum, detail::safe_ratio(std::abs(fx + fe), k * std::pow(d, gm - 1) * d0 * be));
    } else {
      upd(kFirstDeg2Each, detail::safe_ratio(std::max(std::abs(fx), std::abs(fe)), k * dg2 * d0 * de * (d + be)));
      upd(kFirstDeg2Sum, detail::safe_ratio(std::abs(fx + fe), k * std::pow(d, gm) * de));
    }
  }
  if (d0 > 0) {
    double lo = std::numeric_limits<double>::infinity();
    for (int side = 0; side < 2; ++side) {
      double s = 0;
      for (int i = 0; i < n; ++i)
        if (g.degree(i) == 1) s += D.first[side * n + i] * D.first[side * n + i];
      lo = std::min(lo, std::sqrt(s) / (k * dg2 * d0));
    }
    r[kGrad0Lower] = lo;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double v = std::abs(D.second(n + i, n + j));
      const int deg = g.degree(i) + g.degree(j);
      if (deg == 2) upd(kSecondDeg11, detail::safe_ratio(v, k * dg2));
      else if (deg == 3) upd(kSecondMixed, detail::safe_ratio(v, k * de * dg2));
      else upd(kSecondDeg22, detail::safe_ratio(v, k * de * de * dg2));
      for (int side = 0; side < 2; ++side) {
        const double s = D.second(side * n + i, j) + D.second(side * n + i, n + j);
        upd(kHessianSum, detail::safe_ratio(std::abs(s), k * be * dg2));
      }
    }
  return r;
}

struct BoundAudit {
  std::string id;
  bool lower = false;
  std::size_t count = 0;        // samples where the bound applied
  double ratio = std::numeric_limits<double>::quiet_NaN();  // max (upper) or min (lower)
  Point argmax_xi, argmax_eta;
  double ratio_doubled = std::numeric_limits<double>::quiet_NaN();
  double drift = 0;
  bool stable = false;          // drift < 5% when the sample count doubles
  bool bounded = true;          // no growth along degenerating probe paths
  double probe_max = std::numeric_limits<double>::quiet_NaN();
  [[nodiscard]] bool finite() const { return std::isfinite(ratio) && std::isfinite(ratio_doubled); }
  [[nodiscard]] bool pass() const {
    if (count == 0) return true;
    if (lower) return finite() && std::min(ratio, ratio_doubled) >= 1 - 1e-9 &&
                      !(probe_max < 1 - 1e-9);
    return finite() && stable && bounded;
  }
};

namespace detail {
struct Extremes {
  std::array<double, kBoundCount> val;
  std::array<std::size_t, kBoundCount> count{};
  std::array<Point, kBoundCount> xi, eta;
};

inline constexpr std::size_t kChunk = 256;

/// Extremes over samples [0, n). Sample k depends only on (seed, k / kChunk), so the
/// first n samples are shared between runs of different sizes and thread counts.
inline Extremes sweep_samples(const PhiParams& p, const Group& g, std::size_t n, std::uint64_t seed) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<Extremes> part(chunks);
  parallel_for(static_cast<std::ptrdiff_t>(chunks), [&](std::ptrdiff_t c) {
    std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(c)};
    std::mt19937_64 rng(ss);
    Extremes& E = part[c];
    for (int b = 0; b < kBoundCount; ++b) E.val[b] = std::numeric_limits<double>::quiet_NaN();
    const std::size_t lo = static_cast<std::size_t>(c) * kChunk, hi = std::min(n, lo + kChunk);
    Point xi, eta;
    for (std::size_t s = lo; s < hi; ++s) {
      random_pair(g, p.beta, rng, xi, eta);
      const auto r = bound_ratios(p, g, xi, eta);
      for (int b = 0; b < kBoundCount; ++b) {
        if (std::isnan(r[b])) continue;
        ++E.count[b];
        const bool better = std::isnan(E.val[b]) || (bound_is_lower(b) ? r[b] < E.val[b] : r[b] > E.val[b]);
        if (better) {
          E.val[b] = r[b];
          E.xi[b] = xi;
          E.eta[b] = eta;
        }
      }
    }
  });
  Extremes out;
  for (int b = 0; b < kBoundCount; ++b) out.val[b] = std::numeric_limits<double>::quiet_NaN();
  for (const auto& E : part)
    for (int b = 0; b < kBoundCount; ++b) {
      out.count[b] += E.count[b];
      if (std::isnan(E.val[b])) continue;
      const bool better =
          std::isnan(out.val[b]) || (bound_is_lower(b) ? E.val[b] < out.val[b] : E.val[b] > out.val[b]);
      if (better) {
        out.val[b] = E.val[b];
        out.xi[b] = E.xi[b];
        out.eta[b] = E.eta[b];
      }
    }
  return out;
}

/// Ratios along three degenerating paths: d_0 -> 0, d_beta -> 0, d_3 -> 0; s = 1e-1 .. 1e-6.
inline std::vector<std::vector<std::array<double, kBoundCount>>> probe_paths(const PhiParams& p, const Group& g) {
  const int n = g.n();
  Point xi(n);
  for (int a = 0; a < n; ++a) xi[a] = 0.3 - 0.17 * a;
  if (g.is_se2()) xi[2] = 0.9;
  Eigen::VectorXd uh = Eigen::VectorXd::Zero(n), uv = Eigen::VectorXd::Zero(n);
  int nh = 0, nv = 0;
  for (int a = 0; a < n; ++a) {
    if (g.degree(a) == 1) uh[a] = std::cos(0.7 + 1.3 * nh++);
    else uv[a] = 1.0 + 0.5 * nv++;
  }
  if (uh.norm() > 0) uh /= uh.norm();
  if (uv.norm() > 0) uv /= uv.norm();
  std::vector<std::vector<std::array<double, kBoundCount>>> out;
  for (int path = 0; path < 3; ++path) {
    std::vector<std::array<double, kBoundCount>> vals;
    for (int k = 1; k <= 6; ++k) {
      const double s = std::pow(10.0, -k);
      Eigen::VectorXd e;
      if (path == 0) e = s * uh + (0.5 / p.beta) * uv;
      else if (path == 1) e = s * (0.6 * uh + (0.8 / p.beta) * uv);
      else e = 0.5 * uh + (s / p.beta) * uv;
      const Point eta = pair_from_increment(g, xi, e);
      if (!(g.distance(xi, eta, p.beta).d_beta > 0)) continue;
      vals.push_back(bound_ratios(p, g, xi, eta));
    }
    out.push_back(std::move(vals));
  }
  return out;
}

inline std::vector<BoundAudit> audit(const PhiParams& p, const Group& g, std::size_t n, std::uint64_t seed,
                                     const std::vector<int>& ids) {
  p.validate();
  if (n < 100) throw Error(ErrorCode::TooFewSamples, "need at least 100 samples");
  const Extremes A = sweep_samples(p, g, n, seed);
  const Extremes B = sweep_samples(p, g, 2 * n, seed);
  const auto probes = probe_paths(p, g);
  std::vector<BoundAudit> out;
  for (int b : ids) {
    BoundAudit a;
    a.id = bound_name(b);
    a.lower = bound_is_lower(b);
    a.count = A.count[b];
    a.ratio = A.val[b];
    a.ratio_doubled = B.val[b];
    a.argmax_xi = A.xi[b];
    a.argmax_eta = A.eta[b];
    if (a.count > 0) {
      a.drift = std::abs(a.ratio_doubled - a.ratio) / std::max(std::abs(a.ratio), 1e-300);
      a.stable = a.drift < 0.05;
    }
    for (const auto& path : probes) {
      for (const auto& r : path)
        if (!std::isnan(r[b]))
          a.probe_max = std::isnan(a.probe_max) ? r[b]
                        : (a.lower ? std::min(a.probe_max, r[b]) : std::max(a.probe_max, r[b]));
      if (a.lower || path.size() < 2) continue;
      const double last = path.back()[b], prev = path[path.size() - 2][b];
      if (std::isnan(last)) continue;
      const double ref = std::max(std::isnan(prev) ? 0.0 : prev, std::isnan(a.ratio_doubled) ? 0.0 : a.ratio_doubled);
      if (!(last <= 1.05 * ref)) a.bounded = false;
    }
    out.push_back(std::move(a));
  }
  return out;
}
}  // namespace detail

[[nodiscard]] inline std::vector<BoundAudit> audit_lemma42(const PhiParams& p, const Group& g, std::size_t n,
                                                           std::uint64_t seed) {
  return detail::audit(p, g, n, seed, {kFirstDeg1Each, kFirstDeg1Sum, kFirstDeg2Each, kFirstDeg2Sum, kGrad0Lower});
}

[[nodiscard]] inline std::vector<BoundAudit> audit_lemma44(const PhiParams& p, const Group& g, std::size_t n,
                                                           std::uint64_t seed) {
  return detail::audit(p, g, n, seed, {kSecondDeg11, kSecondMixed, kSecondDeg22, kHessianSum});
}

struct ZeroGradientReport {
  std::size_t count = 0;
  double max_xi = 0;   // |grad_0^xi phi|
  double max_eta = 0;  // |grad_0^eta phi|
  bool pass = false;
};

/// Pairs built with grad_0^xi phi = 0 (Carnot: horizontal increments zero; SE2: equal angles
/// and e_1 = 0); checks |grad_0^eta phi| <= 1e-12.
[[nodiscard]] inline ZeroGradientReport check_zero_gradient_implication(const PhiParams& p, const Group& g,
                                                                        std::size_t n, std::uint64_t seed) {
  p.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  ZeroGradientReport r;
  const int dim = g.n();
  for (std::size_t s = 0; s < n; ++s) {
    Point xi(dim);
    for (double& x : xi) x = U(rng);
    if (g.is_se2()) xi[2] = reduce_angle(kPi * (U(rng) + 1));
    Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
    bool any = false;
    for (int a = 0; a < dim; ++a)
      if (g.degree(a) == 2) {
        e[a] = U(rng) / p.beta;
        any = any || e[a] != 0;
      }
    if (!any) continue;
    Point eta = pair_from_increment(g, xi, e);
    if (g.is_se2()) eta[2] = xi[2];
    const auto D = phi_derivatives(p, g, xi, eta);
    double gx = 0, ge = 0;
    for (int i = 0; i < dim; ++i)
      if (g.degree(i) == 1) {
        gx += D.first[i] * D.first[i];
        ge += D.first[dim + i] * D.first[dim + i];
      }
    r.max_xi = std::max(r.max_xi, std::sqrt(gx));
    r.max_eta = std::max(r.max_eta, std::sqrt(ge));
    ++r.count;
  }
  r.pass = r.count > 0 && r.max_eta <= 1e-12;
  return r;
}

struct MaxOmegaResult {
  bool hypothesis_met = false;
  double sup_diff = 0;
  double threshold = 0;  // M eps^alpha
  Point xi_hat, eta_hat;
  double t_hat = 0;
  double omega = 0;
  double d_beta = 0;
  double radius = std::numeric_limits<double>::quiet_NaN();
  double c_tilde = 0;
  bool t_positive = false;
  bool within_radius = false;
};

/// Grid argmax of omega over (node, node, snapshot).
[[nodiscard]] inline MaxOmegaResult locate_max_omega(const PhiParams& p, const Group& g, const Trajectory& u,
                                                     const Trajectory& ueps) {
  p.validate();
  if (u.snapshots.size() != ueps.snapshots.size() || u.snapshots.empty())
    throw Error(ErrorCode::GridMismatch, "trajectories have different snapshot counts");
  MaxOmegaResult r;
  r.threshold = p.M * std::pow(p.epsilon, p.alpha);
  r.sup_diff = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < u.snapshots.size(); ++s) {
    if (!(u.snapshots[s].grid == ueps.snapshots[s].grid)) throw Error(ErrorCode::GridMismatch, "grids differ");
    for (std::size_t k = 0; k < u.snapshots[s].size(); ++k) {
      r.sup_diff = std::max(r.sup_diff, u.snapshots[s][k] - ueps.snapshots[s][k]);
      r.c_tilde = std::max({r.c_tilde, std::abs(u.snapshots[s][k]), std::abs(ueps.snapshots[s][k])});
    }
  }
  r.hypothesis_met = r.sup_diff > r.threshold;
  if (!r.hypothesis_met) return r;

  const auto& grid = u.snapshots[0].grid;
  const std::size_t N = grid.size();
  std::vector<Point> pts(N);
  for (std::size_t k = 0; k < N; ++k) pts[k] = grid.point(k);
  double best = -std::numeric_limits<double>::infinity();
  std::size_t bs = 0, ba = 0, bb = 0;
  for (std::size_t s = 0; s < u.snapshots.size(); ++s) {
    const auto& A = u.snapshots[s];
    const auto& B = ueps.snapshots[s];
    const double t = A.time;
    const double tterm = phi_from_distance(p, 0.0, t);
    const double bmin = B.min();
    std::vector<double> row_best(N, -std::numeric_limits<double>::infinity());
    std::vector<std::size_t> row_arg(N, 0);
    parallel_for(static_cast<std::ptrdiff_t>(N), [&](std::ptrdiff_t a) {
      if (A[a] - bmin - tterm <= best) return;  // cannot beat the incumbent from earlier snapshots
      for (std::size_t b = 0; b < N; ++b) {
        const double w = A[a] - B[b] - phi(p, g, pts[a], pts[b], t);
        if (w > row_best[a]) {
          row_best[a] = w;
          row_arg[a] = b;
        }
      }
    });
    for (std::size_t a = 0; a < N; ++a)
      if (row_best[a] > best) {
        best = row_best[a];
        bs = s;
        ba = a;
        bb = row_arg[a];
      }
  }
  r.omega = best;
  r.xi_hat = pts[ba];
  r.eta_hat = pts[bb];
  r.t_hat = u.snapshots[bs].time;
  r.d_beta = g.distance(r.xi_hat, r.eta_hat, p.beta).d_beta;
  const double mu = p.mu(), gm = p.gamma;
  const double inner = (2 * gm * r.c_tilde / mu) * std::pow(p.epsilon, gm / 2 - 1) -
                       (p.M * gm / (4 * mu)) * std::pow(p.epsilon, p.alpha + gm / 2 - 1);
  if (inner > 0) r.radius = std::pow(inner, 1 / gm);
  r.t_positive = r.t_hat > 0;
  r.within_radius = std::isfinite(r.radius) && r.d_beta <= r.radius;
  return r;
}

struct Schedule {
  double alpha = 0;
  double slack = 0;
};

[[nodiscard]] inline Schedule schedule_exponents(double gamma, double sigma) {
  if (!(gamma > 2)) throw Error(ErrorCode::BadParams, "gamma must exceed 2");
  if (!(sigma > 0)) throw Error(ErrorCode::BadParams, "sigma must be positive");
  Schedule s;
  s.alpha = (gamma - 2) * (1 - 4 * sigma) / (2 * (gamma - 1));
  s.slack = (1 - gamma / 2) * (2 / gamma) + sigma - s.alpha;
  return s;
}

}  // namespace srmcf
