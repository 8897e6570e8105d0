#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "srmcf/phi.hpp"

using namespace srmcf;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no srmcf::Error thrown";
  return ErrorCode::IoError;
}

const Group& heis() {
  static const Group g = Group::validate(GroupSpec::heisenberg());
  return g;
}
const Group& se2() {
  static const Group g = Group::validate(GroupSpec::se2());
  return g;
}

PhiParams small() {
  PhiParams p;
  p.beta = p.delta = p.epsilon = 0.1;
  return p;
}

const BoundAudit& find(const std::vector<BoundAudit>& v, const std::string& id) {
  for (const auto& a : v)
    if (a.id == id) return a;
  throw std::runtime_error("missing audit " + id);
}

}  // namespace

TEST(Mu, HandValues) {
  PhiParams p;
  p.gamma = 4;
  p.lip_u0 = 1;
  p.M = 4;
  EXPECT_DOUBLE_EQ(mu_of(p), 16);
  p.lip_u0 = 0;
  EXPECT_EQ(mu_of(p), 0);
  p.gamma = 3;
  p.lip_u0 = 1;
  p.M = 1;
  EXPECT_DOUBLE_EQ(mu_of(p), 192);
  p.gamma = 2;
  EXPECT_EQ(code_of([&] { (void)mu_of(p); }), ErrorCode::BadParams);
  p.gamma = 3;
  p.M = 0;
  EXPECT_EQ(code_of([&] { (void)mu_of(p); }), ErrorCode::BadParams);
}

TEST(Mu, HomogeneousInLipschitz) {
  PhiParams p;
  p.gamma = 3.5;
  p.lip_u0 = 0.7;
  const double base = mu_of(p);
  for (double lam : {0.5, 2.0, 3.0}) {
    PhiParams q = p;
    q.lip_u0 = p.lip_u0 * lam;
    EXPECT_NEAR(mu_of(q), base * std::pow(lam, p.gamma), 1e-12 * mu_of(q));
  }
}

TEST(Phi, HandValues) {
  PhiParams p;
  p.gamma = 4;
  p.M = 4;
  p.lip_u0 = 1;
  p.epsilon = 0.5;
  p.beta = 1;
  p.T = 2;
  const Point xi{1, 0, 0}, eta{0, 1, 0};
  EXPECT_EQ(phi(p, heis(), xi, xi, 0), 0);
  EXPECT_DOUBLE_EQ(phi(p, heis(), xi, xi, p.T), p.M / 2 * std::pow(p.epsilon, p.alpha));
  EXPECT_NEAR(phi(p, heis(), xi, eta, 0), 40.5, 1e-12);
  EXPECT_EQ(code_of([&] { (void)phi(p, heis(), xi, eta, 2.5); }), ErrorCode::BadParams);
}

TEST(Phi, MonotoneInTimeAndDistance) {
  const PhiParams p = small();
  for (double d = 0; d < 1; d += 0.05)
    for (double t = 0; t + 0.1 <= p.T; t += 0.1) {
      EXPECT_LT(phi_from_distance(p, d, t), phi_from_distance(p, d, t + 0.1));
      EXPECT_LT(phi_from_distance(p, d, t), phi_from_distance(p, d + 0.05, t));
    }
}

TEST(Omega, Linearity) {
  const PhiParams p = small();
  const GridSpec g = GridSpec::box({9, 9, 9}, {-1, -1, -1}, {1, 1, 1}, {false, false, false});
  const ScalarField u = sample(g, [](std::span<const double> q) { return std::sin(q[0]) + q[1] * q[2]; });
  const Point xi{0.1, -0.2, 0.3}, eta{0.25, 0.05, -0.4};
  EXPECT_EQ(omega(p, heis(), u, u, xi, xi, 0), 0);
  ScalarField v = u;
  for (double& x : v.values) x += 0.3;
  EXPECT_NEAR(omega(p, heis(), v, u, xi, eta, 0.4), 0.3 + interpolate(u, xi) - interpolate(u, eta) - phi(p, heis(), xi, eta, 0.4), 1e-15);
  // recomputation of the three terms from the definitions
  const double d = heis().distance(xi, eta, p.beta).d_beta;
  const double direct = interpolate(v, xi) - interpolate(u, eta) -
                        (p.mu() / p.gamma * std::pow(p.epsilon, 1 - p.gamma / 2) * std::pow(d, p.gamma) +
                         p.M * 0.4 / (2 * p.T) * std::pow(p.epsilon, p.alpha));
  EXPECT_NEAR(omega(p, heis(), v, u, xi, eta, 0.4), direct, 1e-12);
  EXPECT_EQ(code_of([&] { (void)omega(p, heis(), u, u, Point{2, 0, 0}, xi, 0); }), ErrorCode::OutOfGrid);
}

TEST(Derivatives, AgreeWithDifferences) {
  for (const Group* g : {&heis(), &se2()}) {
    const FdCheck c = fd_derivative_check(small(), *g, 100, 3);
    EXPECT_EQ(c.pairs, 100u);
    EXPECT_LE(c.first_error, 1e-6);
    EXPECT_LE(c.second_error, 1e-6);
    EXPECT_TRUE(c.pass());
  }
}

TEST(Derivatives, HorizontalSumKeepsOnlyTheSecondLayer) {
  const PhiParams p = small();
  const Group& g = heis();
  std::mt19937_64 rng(17);
  Point xi, eta;
  for (int s = 0; s < 50; ++s) {
    random_pair(g, p.beta, rng, xi, eta);
    const auto D = phi_derivatives(p, g, xi, eta);
    const auto e = g.increments(xi, eta);
    const double d = D.dist.d_beta;
    for (int i = 0; i < 2; ++i) {
      // X_i moved on both points at once: only e_3 changes
      const double h = 1e-6;
      const Coeffs a = g.frame(i, p.delta, xi), b = g.frame(i, p.delta, eta);
      Point xp = xi, xm = xi, ep = eta, em = eta;
      for (int k = 0; k < 3; ++k) {
        xp[k] += h * a[k];
        xm[k] -= h * a[k];
        ep[k] += h * b[k];
        em[k] -= h * b[k];
      }
      const double de3 = (g.increments(xp, ep)[2] - g.increments(xm, em)[2]) / (2 * h);
      const double expect = p.kappa() * std::pow(d, p.gamma - 2) * p.beta * p.beta * e[2] * de3;
      EXPECT_NEAR(D.first[i] + D.first[3 + i], expect, 1e-6 * (1 + std::abs(expect)));
    }
  }
}

TEST(Derivatives, EqualAnglesOnSE2) {
  const PhiParams p = small();
  const Point xi{0.3, -0.2, 1.1}, eta{-0.1, 0.25, 1.1};
  EXPECT_EQ(se2().increments(xi, eta)[1], 0);
  const auto f = phi_first_derivatives(p, se2(), xi, eta);
  EXPECT_EQ(f.xi.size(), 3u);
  EXPECT_EQ(f.eta.size(), 3u);
  for (double v : f.xi) EXPECT_TRUE(std::isfinite(v));
  EXPECT_EQ(code_of([&] { (void)phi_first_derivatives(p, se2(), xi, xi); }), ErrorCode::DegeneratePair);
}

TEST(Audit, HeisenbergFirstOrder) {
  const auto a = audit_lemma42(small(), heis(), 10000, 1);
  ASSERT_EQ(a.size(), 5u);
  for (const char* id : {"first_deg1_each", "first_deg1_sum", "first_deg2_sum"}) {
    const BoundAudit& b = find(a, id);
    EXPECT_TRUE(b.pass()) << id;
    EXPECT_TRUE(b.finite()) << id;
    EXPECT_TRUE(b.stable) << id;
  }
  const BoundAudit& low = find(a, "grad0_lower");
  EXPECT_TRUE(low.lower);
  EXPECT_GE(low.ratio, 1 - 1e-9);
  EXPECT_TRUE(low.pass());
  // the degree-2 first-derivative bound with the d_0 factor does not hold as stated
  const BoundAudit& bad = find(a, "first_deg2_each");
  EXPECT_FALSE(bad.bounded);
  EXPECT_FALSE(bad.pass());
  EXPECT_GT(bad.probe_max, 1e4);
}

TEST(Audit, HeisenbergSecondOrder) {
  const auto a = audit_lemma44(small(), heis(), 10000, 1);
  ASSERT_EQ(a.size(), 4u);
  for (const auto& b : a) {
    EXPECT_TRUE(b.finite()) << b.id;
    EXPECT_TRUE(b.stable) << b.id;
    EXPECT_TRUE(b.pass()) << b.id;
  }
}

TEST(Audit, SE2LowerBoundMissesTheHalf) {
  const auto a = audit_lemma42(small(), se2(), 4000, 2);
  const BoundAudit& low = find(a, "grad0_lower");
  EXPECT_LT(low.ratio, 1);
  EXPECT_GE(low.ratio, std::cos(kPi / 4) - 1e-3);
  for (const char* id : {"first_deg1_each", "first_deg1_sum", "first_deg2_sum"}) EXPECT_TRUE(find(a, id).pass()) << id;
  for (const auto& b : audit_lemma44(small(), se2(), 4000, 2)) EXPECT_TRUE(b.pass()) << b.id;
}

TEST(Audit, PairsWithoutHorizontalPartGiveZeroRatios) {
  const PhiParams p = small();
  const Point xi{0.2, -0.4, 0.1};
  Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
  e[2] = 3.0;
  const Point eta = pair_from_increment(heis(), xi, e);
  const auto r = bound_ratios(p, heis(), xi, eta);
  EXPECT_EQ(heis().distance(xi, eta, p.beta).d_0, 0);
  EXPECT_EQ(r[kFirstDeg1Each], 0);
  EXPECT_TRUE(std::isnan(r[kGrad0Lower]));
}

TEST(Audit, HorizontalPairMeetsTheLowerBound) {
  const PhiParams p = small();
  const Point xi{0.2, -0.4, 0.1};
  Eigen::VectorXd e = Eigen::VectorXd::Zero(3);
  e[0] = 0.3;
  e[1] = -0.5;
  const auto r = bound_ratios(p, heis(), xi, pair_from_increment(heis(), xi, e));
  EXPECT_GE(r[kGrad0Lower], 1 - 1e-9);
}

TEST(Audit, SecondOrderDeltaScaling) {
  // max |X X phi| over one fixed sample set: degree 2-2 goes like delta^2, mixed like delta
  auto max_lhs = [](double delta, int want) {
    PhiParams p = small();
    p.delta = delta;
    std::mt19937_64 rng(5);
    Point xi, eta;
    double m = 0;
    for (int s = 0; s < 2000; ++s) {
      random_pair(heis(), p.beta, rng, xi, eta);
      const auto D = phi_derivatives(p, heis(), xi, eta);
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
          if (heis().degree(i) + heis().degree(j) == want) m = std::max(m, std::abs(D.second(3 + i, 3 + j)));
    }
    return m;
  };
  EXPECT_NEAR(max_lhs(0.05, 4) / max_lhs(0.1, 4), 0.25, 0.025);
  EXPECT_NEAR(max_lhs(0.05, 3) / max_lhs(0.1, 3), 0.5, 0.05);
}

TEST(Audit, Preconditions) {
  EXPECT_EQ(code_of([] { (void)audit_lemma42(small(), heis(), 99, 1); }), ErrorCode::TooFewSamples);
  EXPECT_EQ(code_of([] { (void)audit_lemma44(small(), heis(), 10, 1); }), ErrorCode::TooFewSamples);
}

TEST(Audit, IndependentOfThreadCount) {
  set_threads(1);
  const auto a = audit_lemma44(small(), se2(), 1000, 9);
  set_threads(4);
  const auto b = audit_lemma44(small(), se2(), 1000, 9);
  set_threads(0);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a[k].ratio, b[k].ratio);
    EXPECT_EQ(a[k].ratio_doubled, b[k].ratio_doubled);
  }
}

TEST(ZeroGradient, ConstructedPairs) {
  for (const Group* g : {&heis(), &se2()}) {
    const ZeroGradientReport r = check_zero_gradient_implication(small(), *g, 500, 4);
    EXPECT_EQ(r.count, 500u);
    EXPECT_LE(r.max_xi, 1e-12);
    EXPECT_LE(r.max_eta, 1e-12);
    EXPECT_TRUE(r.pass);
  }
}

TEST(ZeroGradient, HandPairs) {
  const PhiParams p = small();
  // Heisenberg pair differing in theta only
  const auto D = phi_derivatives(p, heis(), Point{0.3, 0.1, 0.5}, Point{0.3, 0.1, -0.2});
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(D.first[i], 0, 1e-14);
    EXPECT_NEAR(D.first[3 + i], 0, 1e-14);
  }
  // SE2 pair with equal angle, offset orthogonal to the heading
  const double th = 0.7;
  const Point xi{0.1, 0.2, th}, eta{0.1 + 0.4 * std::sin(th), 0.2 - 0.4 * std::cos(th), th};
  const auto e = se2().increments(xi, eta);
  EXPECT_NEAR(e[0], 0, 1e-15);
  EXPECT_EQ(e[1], 0);
  const auto S = phi_derivatives(p, se2(), xi, eta);
  for (int i : {0, 1}) {
    EXPECT_NEAR(S.first[i], 0, 1e-12);
    EXPECT_NEAR(S.first[3 + i], 0, 1e-12);
  }
}

TEST(MaxOmega, EqualTrajectoriesMissTheHypothesis) {
  const GridSpec g = GridSpec::se2(7, 7, 4, 1.0);
  Trajectory u;
  u.snapshots.push_back(sample(g, [](std::span<const double> q) { return q[0]; }));
  const auto r = locate_max_omega(small(), se2(), u, u);
  EXPECT_FALSE(r.hypothesis_met);
  EXPECT_EQ(r.sup_diff, 0);
}

TEST(MaxOmega, BumpIsLocated) {
  PhiParams p = small();
  const GridSpec g = GridSpec::se2(9, 9, 4, 1.0);
  const double height = 2 * p.M * std::pow(p.epsilon, p.alpha);
  auto bump = [&](double t) {
    return sample(g, [=](std::span<const double> q) { return height * t * std::exp(-8 * (q[0] * q[0] + q[1] * q[1])); });
  };
  Trajectory u, v;
  for (double t : {0.0, 0.5, 1.0}) {
    ScalarField a = bump(t), b(g, 0.0, t);
    a.time = t;
    u.snapshots.push_back(a);
    v.snapshots.push_back(b);
  }
  const auto r = locate_max_omega(p, se2(), u, v);
  EXPECT_TRUE(r.hypothesis_met);
  EXPECT_NEAR(r.sup_diff, height, 1e-12);
  EXPECT_EQ(r.t_hat, 1.0);
  EXPECT_TRUE(r.t_positive);
  EXPECT_NEAR(r.xi_hat[0], 0, 1e-12);
  EXPECT_NEAR(r.xi_hat[1], 0, 1e-12);
  EXPECT_NEAR(r.omega, height - phi(p, se2(), r.xi_hat, r.eta_hat, 1.0), 1e-12);
  EXPECT_TRUE(std::isfinite(r.radius));

  // a bump that only exists at t = 0 puts the maximum at t = 0
  Trajectory w;
  for (double t : {1.0, 0.0, 0.0}) w.snapshots.push_back(bump(t));
  for (std::size_t s = 0; s < 3; ++s) w.snapshots[s].time = u.snapshots[s].time;
  const auto z = locate_max_omega(p, se2(), w, v);
  EXPECT_TRUE(z.hypothesis_met);
  EXPECT_EQ(z.t_hat, 0);
  EXPECT_FALSE(z.t_positive);

  Trajectory shorter = v;
  shorter.snapshots.pop_back();
  EXPECT_EQ(code_of([&] { (void)locate_max_omega(p, se2(), u, shorter); }), ErrorCode::GridMismatch);
}

TEST(Schedule, HandValues) {
  const Schedule a = schedule_exponents(4, 0.125);
  EXPECT_NEAR(a.alpha, 1.0 / 6.0, 1e-15);
  EXPECT_NEAR(a.slack, -13.0 / 24.0, 1e-15);
  EXPECT_EQ(schedule_exponents(4, 0.25).alpha, 0);
  EXPECT_EQ(schedule_exponents(3, 0.25).alpha, 0);
  EXPECT_EQ(code_of([] { (void)schedule_exponents(2, 0.1); }), ErrorCode::BadParams);
  EXPECT_EQ(code_of([] { (void)schedule_exponents(4, 0); }), ErrorCode::BadParams);
}
