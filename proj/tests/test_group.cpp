#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "srmcf/group.hpp"

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

// Y = sum a_i X_{i delta}; RK4 on dq/ds = Y(q), independent of the closed form.
Point rk4_flow(const Group& g, std::span<const double> p, std::span<const double> a, double delta, double s) {
  const int n = g.n();
  auto field = [&](const Point& q) {
    Point v(n, 0.0);
    for (int i = 0; i < n; ++i) {
      const Coeffs c = g.frame(i, delta, q);
      for (int k = 0; k < n; ++k) v[k] += a[i] * c[k];
    }
    return v;
  };
  Point q(p.begin(), p.end());
  const int steps = 2000;
  const double h = s / steps;
  for (int k = 0; k < steps; ++k) {
    auto add = [&](const Point& x, const Point& d, double w) {
      Point r = x;
      for (int i = 0; i < n; ++i) r[i] += w * d[i];
      return r;
    };
    const Point k1 = field(q), k2 = field(add(q, k1, h / 2)), k3 = field(add(q, k2, h / 2)), k4 = field(add(q, k3, h));
    for (int i = 0; i < n; ++i) q[i] += h / 6 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  }
  return q;
}

GroupSpec engel_like() {
  // m = 3, n = 5: two second-layer directions from two skew matrices
  GroupSpec s;
  s.m = 3;
  s.n = 5;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3, 3), b = a;
  a(0, 1) = 1;
  a(1, 0) = -1;
  b(1, 2) = 0.7;
  b(2, 1) = -0.7;
  b(0, 2) = 0.2;
  b(2, 0) = -0.2;
  s.W = {a, b};
  return s;
}

}  // namespace

TEST(GroupValidate, HeisenbergIsValid) {
  const Group g = Group::validate(GroupSpec::heisenberg());
  EXPECT_EQ(g.m(), 2);
  EXPECT_EQ(g.n(), 3);
  EXPECT_EQ(g.degree(0), 1);
  EXPECT_EQ(g.degree(2), 2);
}

TEST(GroupValidate, NonzeroDiagonalIsNotSkew) {
  GroupSpec s = GroupSpec::heisenberg();
  s.W[0](0, 0) = 1;
  EXPECT_EQ(code_of([&] { (void)Group::validate(s); }), ErrorCode::NotSkewSymmetric);
}

TEST(GroupValidate, ZeroMatricesFailBracketGeneration) {
  GroupSpec s;
  s.m = 2;
  s.n = 4;
  s.W = {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(2, 2)};
  EXPECT_EQ(code_of([&] { (void)Group::validate(s); }), ErrorCode::BracketGenerationFails);
}

TEST(GroupValidate, BadShapes) {
  GroupSpec s = GroupSpec::heisenberg();
  s.W.clear();
  EXPECT_EQ(code_of([&] { (void)Group::validate(s); }), ErrorCode::BadDimensions);
  GroupSpec t;
  t.m = 3;
  t.n = 2;
  EXPECT_EQ(code_of([&] { (void)Group::validate(t); }), ErrorCode::BadDimensions);
  GroupSpec u = GroupSpec::heisenberg();
  u.W[0] = Eigen::MatrixXd::Zero(3, 3);
  EXPECT_EQ(code_of([&] { (void)Group::validate(u); }), ErrorCode::BadDimensions);
}

TEST(GroupValidate, EuclideanAndLargerCarnot) {
  EXPECT_NO_THROW((void)Group::validate(GroupSpec::euclidean(2)));
  EXPECT_NO_THROW((void)Group::validate(engel_like()));
}

TEST(Frame, HandValues) {
  const Group se2 = Group::validate(GroupSpec::se2());
  const Point o = {0.3, -0.2, 0.0};
  const Coeffs a = se2.frame(0, 0.37, o);
  EXPECT_DOUBLE_EQ(a[0], 1);
  EXPECT_DOUBLE_EQ(a[1], 0);
  EXPECT_DOUBLE_EQ(a[2], 0);
  const Point q = {0, 0, kPi / 2};
  const Coeffs b = se2.frame(2, 0.5, q);
  EXPECT_NEAR(b[0], -0.5, 1e-15);
  EXPECT_NEAR(b[1], 0, 1e-15);
  EXPECT_EQ(b[2], 0);

  const Group h = Group::validate(GroupSpec::heisenberg());
  const Coeffs c = h.frame(0, 0.1, Point{0, 2, 0});
  EXPECT_DOUBLE_EQ(c[0], 1);
  EXPECT_DOUBLE_EQ(c[1], 0);
  EXPECT_DOUBLE_EQ(c[2], -1);
}

TEST(Frame, IndexOutOfRange) {
  const Group h = Group::validate(GroupSpec::heisenberg());
  EXPECT_EQ(code_of([&] { (void)h.frame(3, 1.0, Point{0, 0, 0}); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([&] { (void)h.lie_bracket(0, 2, Point{0, 0, 0}); }), ErrorCode::IndexOutOfRange);
}

TEST(Increments, CoincidentPairsVanish) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-2, 2);
  for (const auto& spec : {GroupSpec::heisenberg(), GroupSpec::se2(), engel_like()}) {
    const Group g = Group::validate(spec);
    for (int k = 0; k < 20; ++k) {
      Point x(g.n());
      for (double& v : x) v = U(rng);
      const auto e = g.increments(x, x);
      EXPECT_EQ(e.norm(), 0.0);
      const auto d = g.distance(x, x, 0.3);
      EXPECT_EQ(d.d_beta, 0);
      EXPECT_EQ(d.d_0, 0);
      EXPECT_EQ(d.d_3, 0);
    }
  }
}

TEST(Increments, HandValues) {
  const Group h = Group::validate(GroupSpec::heisenberg());
  const auto e = h.increments(Point{1, 0, 0}, Point{0, 1, 0});
  EXPECT_DOUBLE_EQ(e[0], 1);
  EXPECT_DOUBLE_EQ(e[1], -1);
  EXPECT_DOUBLE_EQ(e[2], 0.5);
  const auto d = h.distance(Point{1, 0, 0}, Point{0, 1, 0}, 1.0);
  EXPECT_NEAR(d.d_0, std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(d.d_3, 0.5, 1e-15);
  EXPECT_NEAR(d.d_beta, 1.5, 1e-15);

  const Group s = Group::validate(GroupSpec::se2());
  const auto f = s.increments(Point{1, 0, kPi / 2}, Point{0, 0, 0});
  EXPECT_NEAR(f[0], std::sqrt(0.5), 1e-15);
  EXPECT_NEAR(f[1], 1, 1e-15);
  EXPECT_NEAR(f[2], -std::sqrt(0.5), 1e-15);
}

TEST(Increments, MidpointTakesTheShortArc) {
  const Group s = Group::validate(GroupSpec::se2());
  EXPECT_NEAR(wrap_angle(s.reference_angle(0.1, kTwoPi - 0.1)), 0.0, 1e-14);
  EXPECT_NEAR(s.reference_angle(1.0, 0.4), 0.7, 1e-14);
  const Group l = Group::validate(GroupSpec::se2(ThetaPolicy::Left));
  EXPECT_DOUBLE_EQ(l.reference_angle(1.0, 0.4), 1.0);
}

TEST(Distance, PythagoreanIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> U(-3, 3);
  for (const auto& spec : {GroupSpec::heisenberg(), GroupSpec::se2(), engel_like()}) {
    const Group g = Group::validate(spec);
    for (int k = 0; k < 200; ++k) {
      Point x(g.n()), y(g.n());
      for (double& v : x) v = U(rng);
      for (double& v : y) v = U(rng);
      const double beta = 0.05 + 0.9 * (U(rng) + 3) / 6;
      const auto d = g.distance(x, y, beta);
      EXPECT_NEAR(d.d_beta * d.d_beta, d.d_0 * d.d_0 + d.d_3 * d.d_3, 1e-12 * (1 + d.d_beta * d.d_beta));
      EXPECT_GE(d.d_beta, d.d_0);
    }
  }
}

TEST(PseudoNorm, HandValues) {
  const Group s = Group::validate(GroupSpec::se2());
  const Group h = Group::validate(GroupSpec::heisenberg());
  EXPECT_EQ(s.pseudo_norm(Point{0, 0, 0}), 0);
  EXPECT_EQ(h.pseudo_norm(Point{0, 0, 0}), 0);
  for (double th : {0.0, 1.0, 4.0}) EXPECT_NEAR(s.pseudo_norm(Point{3, 4, th}), 5, 1e-14);
  EXPECT_NEAR(h.pseudo_norm(Point{1, 0, 0}), 1, 1e-15);
  EXPECT_NEAR(h.pseudo_norm(Point{0, 0, 16}), 4, 1e-14);  // (0 + 16^2)^(1/4)
  EXPECT_NEAR(h.pseudo_norm(Point{1, 1, 2}), std::pow(8.0, 0.25), 1e-14);
}

TEST(Bracket, SymbolicValues) {
  const Group h = Group::validate(GroupSpec::heisenberg());
  const Group s = Group::validate(GroupSpec::se2());
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(-3, 3);
  for (int k = 0; k < 50; ++k) {
    const Point p = {U(rng), U(rng), U(rng)};
    const Coeffs b = h.lie_bracket(0, 1, p);
    EXPECT_NEAR(b[0], 0, 1e-15);
    EXPECT_NEAR(b[1], 0, 1e-15);
    EXPECT_NEAR(b[2], 1, 1e-15);
    const Coeffs c = s.lie_bracket(0, 1, p);
    EXPECT_NEAR(c[0], std::sin(p[2]), 1e-15);
    EXPECT_NEAR(c[1], -std::cos(p[2]), 1e-15);
    EXPECT_NEAR(c[2], 0, 1e-15);
    for (int i = 0; i < 2; ++i)
      for (double v : s.lie_bracket(i, i, p)) EXPECT_EQ(v, 0);
  }
}

TEST(Bracket, Antisymmetry) {
  const Group g = Group::validate(engel_like());
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-2, 2);
  for (int k = 0; k < 20; ++k) {
    Point p(5);
    for (double& v : p) v = U(rng);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        const Coeffs a = g.lie_bracket(i, j, p), b = g.lie_bracket(j, i, p);
        for (int q = 0; q < 5; ++q) EXPECT_NEAR(a[q], -b[q], 1e-14);
      }
  }
}

TEST(Bracket, FiniteDifferenceOrder) {
  const Group s = Group::validate(GroupSpec::se2());
  const Point p = {0.4, -1.1, 0.83};
  const Coeffs exact = s.lie_bracket(0, 1, p);
  auto err = [&](double h) {
    const Coeffs f = fd_bracket(s, 0, 1, 1.0, p, h);
    double e = 0;
    for (int q = 0; q < 3; ++q) e = std::max(e, std::abs(f[q] - exact[q]));
    return e;
  };
  const double order = std::log2(err(0.02) / err(0.01));
  EXPECT_GT(order, 1.9);
  // affine coefficients: differences are exact
  const Group h = Group::validate(GroupSpec::heisenberg());
  const Coeffs f = fd_bracket(h, 0, 1, 1.0, p, 0.1);
  EXPECT_NEAR(f[2], 1, 1e-12);
}

TEST(ExpFlow, MatchesIntegratedCurve) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> U(-1, 1);
  for (const auto& spec : {GroupSpec::heisenberg(), GroupSpec::se2(), engel_like()}) {
    const Group g = Group::validate(spec);
    for (int k = 0; k < 10; ++k) {
      Point p(g.n()), a(g.n()), out(g.n());
      for (double& v : p) v = U(rng);
      for (double& v : a) v = U(rng);
      const double s = 0.7 * U(rng), delta = 0.3;
      g.exp_flow(p, a, delta, s, out);
      const Point ref = rk4_flow(g, p, a, delta, s);
      for (int q = 0; q < g.n(); ++q) EXPECT_NEAR(out[q], ref[q], 1e-10);
    }
  }
}

TEST(IncrementJet, GradientAndHessianMatchDifferences) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> U(-1, 1);
  const double h = 1e-5;
  for (const auto& spec : {GroupSpec::heisenberg(), GroupSpec::se2(), GroupSpec::se2(ThetaPolicy::Left), engel_like()}) {
    const Group g = Group::validate(spec);
    const int n = g.n();
    for (int k = 0; k < 10; ++k) {
      Point z(2 * n);
      for (double& v : z) v = U(rng);
      auto incr = [&](const Point& w) {
        return g.increments(std::span<const double>(w).first(n), std::span<const double>(w).subspan(n));
      };
      auto jet = [&](const Point& w) {
        return g.increment_jet(std::span<const double>(w).first(n), std::span<const double>(w).subspan(n), false);
      };
      const IncrementJet J = jet(z);
      for (int c = 0; c < 2 * n; ++c) {
        Point a = z, b = z;
        a[c] += h;
        b[c] -= h;
        const Eigen::VectorXd d = (incr(a) - incr(b)) / (2 * h);
        const IncrementJet Ja = jet(a), Jb = jet(b);
        for (int r = 0; r < n; ++r) {
          EXPECT_NEAR(J.grad(r, c), d[r], 1e-8);
          const Eigen::VectorXd hd = (Ja.grad.row(r) - Jb.grad.row(r)).transpose() / (2 * h);
          for (int c2 = 0; c2 < 2 * n; ++c2) EXPECT_NEAR(J.hess[r](c2, c), hd[c2], 1e-7);
        }
      }
    }
  }
}

TEST(IncrementJet, FrozenReferenceDropsAngleCoupling) {
  const Group s = Group::validate(GroupSpec::se2());
  const Point xi = {0.3, 0.1, 0.9}, eta = {-0.2, 0.4, 0.5};
  const double t0 = 0.2;
  const IncrementJet J = s.increment_jet(xi, eta, true, &t0);
  const Eigen::VectorXd e = s.increments(xi, eta, &t0);
  EXPECT_NEAR((J.e - e).norm(), 0, 1e-15);
  // with theta_0 frozen, e_1 and e_3 do not depend on the angles
  EXPECT_EQ(J.grad(0, 2), 0);
  EXPECT_EQ(J.grad(0, 5), 0);
  EXPECT_EQ(J.grad(2, 2), 0);
  EXPECT_EQ(J.grad(2, 5), 0);
}

TEST(Lipschitz, Estimates) {
  const Group h = Group::validate(GroupSpec::heisenberg());
  std::vector<std::pair<Point, double>> c = {{{0, 0, 0}, 2.0}, {{1, 0, 0}, 2.0}, {{0, 1, 1}, 2.0}};
  EXPECT_EQ(lipschitz_estimate(h, c, 0.5), 0);

  // u = x1 on the horizontal slice: d_beta >= |dx1|, equality along the x1 axis
  std::vector<std::pair<Point, double>> s;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int k = 0; k < 60; ++k) {
    const Point p = {U(rng), U(rng), 0.0};
    s.push_back({p, p[0]});
  }
  const double L = lipschitz_estimate(h, s, 0.5);
  EXPECT_LE(L, 1 + 1e-12);
  s.push_back({{-1, 0, 0}, -1.0});
  s.push_back({{1, 0, 0}, 1.0});
  EXPECT_NEAR(lipschitz_estimate(h, s, 0.5), 1, 1e-12);

  // duplicates are skipped
  std::vector<std::pair<Point, double>> d = {{{0, 0, 0}, 0.0}, {{0, 0, 0}, 0.5}, {{2, 0, 0}, 1.0}};
  EXPECT_NEAR(lipschitz_estimate(h, d, 0.5), 0.5, 1e-12);
  EXPECT_EQ(code_of([&] { (void)lipschitz_estimate(h, {{{0, 0, 0}, 0.0}}, 0.5); }), ErrorCode::TooFewSamples);
}

TEST(Angles, WrapAndReduce) {
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(reduce_angle(-kPi / 2), 3 * kPi / 2, 1e-15);
  EXPECT_NEAR(reduce_angle(5 * kPi), kPi, 1e-13);
}
