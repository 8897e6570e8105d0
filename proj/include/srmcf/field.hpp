#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "srmcf/common.hpp"
#include "srmcf/group.hpp"

namespace srmcf {

struct Axis {
  int count = 3;
  double origin = 0;
  double spacing = 1;
  bool periodic = false;
  bool operator==(const Axis&) const = default;
};

/// Structured grid over the group coordinates. Row-major, last axis fastest.
struct GridSpec {
  std::vector<Axis> axes;

  bool operator==(const GridSpec&) const = default;

  [[nodiscard]] int dim() const { return static_cast<int>(axes.size()); }
  [[nodiscard]] std::size_t size() const {
    std::size_t s = 1;
    for (const auto& a : axes) s *= static_cast<std::size_t>(a.count);
    return s;
  }
  [[nodiscard]] std::size_t stride(int a) const {
    std::size_t s = 1;
    for (int b = dim() - 1; b > a; --b) s *= static_cast<std::size_t>(axes[b].count);
    return s;
  }
  [[nodiscard]] int index(std::size_t node, int a) const {
    return static_cast<int>((node / stride(a)) % static_cast<std::size_t>(axes[a].count));
  }
  [[nodiscard]] double coord(std::size_t node, int a) const {
    return axes[a].origin + axes[a].spacing * index(node, a);
  }
  void point(std::size_t node, std::span<double> p) const {
    std::size_t rest = node;
    for (int a = dim() - 1; a >= 0; --a) {
      const auto c = static_cast<std::size_t>(axes[a].count);
      p[a] = axes[a].origin + axes[a].spacing * static_cast<double>(rest % c);
      rest /= c;
    }
  }
  [[nodiscard]] Point point(std::size_t node) const {
    Point p(axes.size());
    point(node, p);
    return p;
  }
  [[nodiscard]] double h_min() const {
    double h = axes.empty() ? 0 : axes[0].spacing;
    for (const auto& a : axes) h = std::min(h, a.spacing);
    return h;
  }
  /// True when the node lies on a face of a non-periodic axis.
  [[nodiscard]] bool on_face(std::size_t node, int layers = 1) const {
    for (int a = 0; a < dim(); ++a) {
      if (axes[a].periodic) continue;
      const int i = index(node, a);
      if (i < layers || i >= axes[a].count - layers) return true;
    }
    return false;
  }

  void validate() const {
    if (axes.empty()) throw Error(ErrorCode::GridMismatch, "grid has no axes");
    for (const auto& a : axes) {
      if (a.count < 3) throw Error(ErrorCode::GridMismatch, "axis count must be >= 3");
      if (!(a.spacing > 0) || !std::isfinite(a.spacing) || !std::isfinite(a.origin))
        throw Error(ErrorCode::GridMismatch, "axis spacing must be positive and finite");
    }
  }
  void validate_for(const Group& g) const {
    validate();
    if (dim() != g.n()) throw Error(ErrorCode::GridMismatch, "grid dimension differs from group dimension");
    if (g.is_se2()) {
      const auto& t = axes[2];
      if (!t.periodic || std::abs(t.count * t.spacing - kTwoPi) > 1e-12)
        throw Error(ErrorCode::GridMismatch, "SE2 theta axis must be periodic with count*h = 2pi");
    }
  }

  /// Box [lo, hi] per axis; periodic axes sample [lo, hi) with count points.
  [[nodiscard]] static GridSpec box(const std::vector<int>& counts, const std::vector<double>& lo,
                                    const std::vector<double>& hi, const std::vector<bool>& periodic) {
    GridSpec g;
    for (std::size_t a = 0; a < counts.size(); ++a) {
      Axis ax;
      ax.count = counts[a];
      ax.origin = lo[a];
      ax.periodic = periodic[a];
      ax.spacing = (hi[a] - lo[a]) / (periodic[a] ? counts[a] : counts[a] - 1);
      g.axes.push_back(ax);
    }
    return g;
  }
  /// SE2 grid on [-L, L]^2 x [0, 2pi).
  [[nodiscard]] static GridSpec se2(int nx, int ny, int nt, double L) {
    return box({nx, ny, nt}, {-L, -L, 0.0}, {L, L, kTwoPi}, {false, false, true});
  }
};

struct ScalarField {
  GridSpec grid;
  std::vector<double> values;
  double time = 0;

  ScalarField() = default;
  explicit ScalarField(GridSpec g, double fill = 0.0, double t = 0.0)
      : grid(std::move(g)), values(grid.size(), fill), time(t) {}

  [[nodiscard]] std::size_t size() const { return values.size(); }
  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }

  [[nodiscard]] double min() const { return *std::min_element(values.begin(), values.end()); }
  [[nodiscard]] double max() const { return *std::max_element(values.begin(), values.end()); }
};

struct MaskedField {
  ScalarField field;
  std::vector<unsigned char> valid;
};

/// Sample f at every node.
template <class F>
[[nodiscard]] ScalarField sample(const GridSpec& grid, F&& f, double time = 0.0) {
  ScalarField u(grid, 0.0, time);
  parallel_for(static_cast<std::ptrdiff_t>(u.size()), [&](std::ptrdiff_t k) {
    Point p = grid.point(static_cast<std::size_t>(k));
    u.values[k] = f(std::span<const double>(p));
  });
  return u;
}

/// Coordinate partial along axis a. Central differences in the interior and on periodic
/// axes, second-order one-sided stencils at non-periodic faces.
inline void partial(const GridSpec& grid, std::span<const double> u, int a, std::span<double> out) {
  const auto& ax = grid.axes[a];
  const std::size_t s = grid.stride(a);
  const int n = ax.count;
  const std::size_t block = s * static_cast<std::size_t>(n);
  const std::size_t lines = grid.size() / static_cast<std::size_t>(n);
  const double inv2h = 1.0 / (2.0 * ax.spacing);
  parallel_for(static_cast<std::ptrdiff_t>(lines), [&](std::ptrdiff_t L) {
    const std::size_t base = (static_cast<std::size_t>(L) / s) * block + static_cast<std::size_t>(L) % s;
    auto at = [&](int k) { return u[base + static_cast<std::size_t>(k) * s]; };
    auto put = [&](int k, double v) { out[base + static_cast<std::size_t>(k) * s] = v; };
    for (int k = 1; k < n - 1; ++k) put(k, (at(k + 1) - at(k - 1)) * inv2h);
    if (ax.periodic) {
      put(0, (at(1) - at(n - 1)) * inv2h);
      put(n - 1, (at(0) - at(n - 2)) * inv2h);
    } else {
      // difference form keeps constants exact
      put(0, (3.0 * (at(1) - at(0)) - (at(2) - at(1))) * inv2h);
      put(n - 1, (3.0 * (at(n - 1) - at(n - 2)) - (at(n - 2) - at(n - 3))) * inv2h);
    }
  });
}

/// Frame coefficients tabulated on a grid: coeff(i, a) is a per-node array or empty if zero.
class FrameTable {
 public:
  FrameTable(const Group& g, const GridSpec& grid, double delta) : n_(g.n()), table_(n_ * n_) {
    grid.validate_for(g);
    const std::size_t N = grid.size();
    for (auto& t : table_) t.assign(N, 0.0);
    parallel_for(static_cast<std::ptrdiff_t>(N), [&](std::ptrdiff_t k) {
      Point p = grid.point(static_cast<std::size_t>(k));
      Coeffs c(n_);
      for (int i = 0; i < n_; ++i) {
        g.frame(i, delta, p, c);
        for (int a = 0; a < n_; ++a) table_[i * n_ + a][k] = c[a];
      }
    });
    used_.assign(n_ * n_, false);
    c_max_ = 0;
    for (int i = 0; i < n_; ++i)
      for (int a = 0; a < n_; ++a) {
        const auto& t = table_[i * n_ + a];
        used_[i * n_ + a] = std::any_of(t.begin(), t.end(), [](double v) { return v != 0.0; });
      }
    for (std::size_t k = 0; k < N; ++k)
      for (int i = 0; i < n_; ++i) {
        double r = 0;
        for (int a = 0; a < n_; ++a) r += table_[i * n_ + a][k] * table_[i * n_ + a][k];
        c_max_ = std::max(c_max_, r);
      }
  }
  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] bool used(int i, int a) const { return used_[i * n_ + a]; }
  [[nodiscard]] const std::vector<double>& coeff(int i, int a) const { return table_[i * n_ + a]; }
  /// Max over nodes and frames of the squared coefficient row sum.
  [[nodiscard]] double c_max() const { return c_max_; }

 private:
  int n_;
  std::vector<std::vector<double>> table_;
  std::vector<bool> used_;
  double c_max_ = 0;
};

/// Apply X_i given precomputed coordinate partials.
inline void combine_frame(const FrameTable& T, int i, const std::vector<std::vector<double>>& partials,
                          std::span<double> out) {
  const int n = T.n();
  parallel_for(static_cast<std::ptrdiff_t>(out.size()), [&](std::ptrdiff_t k) {
    double acc = 0;
    for (int a = 0; a < n; ++a)
      if (T.used(i, a)) acc += T.coeff(i, a)[k] * partials[a][k];
    out[k] = acc;
  });
}

/// All coordinate partials of u that some frame needs.
inline std::vector<std::vector<double>> all_partials(const FrameTable& T, const GridSpec& grid,
                                                     std::span<const double> u) {
  const int n = T.n();
  std::vector<std::vector<double>> d(n);
  for (int a = 0; a < n; ++a) {
    bool need = false;
    for (int i = 0; i < n; ++i) need = need || T.used(i, a);
    d[a].assign(u.size(), 0.0);
    if (need) partial(grid, u, a, d[a]);
  }
  return d;
}

inline void check_field(const ScalarField& u, const Group& g) {
  u.grid.validate_for(g);
  if (u.values.size() != u.grid.size()) throw Error(ErrorCode::GridMismatch, "value count differs from grid size");
}

[[nodiscard]] inline ScalarField derive_X(const ScalarField& u, const Group& g, int i, double delta) {
  check_field(u, g);
  if (i < 0 || i >= g.n()) throw Error(ErrorCode::IndexOutOfRange, "frame index");
  FrameTable T(g, u.grid, delta);
  auto d = all_partials(T, u.grid, u.values);
  ScalarField out(u.grid, 0.0, u.time);
  combine_frame(T, i, d, out.values);
  return out;
}

/// X_i (X_j u): derive_X applied to derive_X output, j first.
[[nodiscard]] inline ScalarField derive_XX(const ScalarField& u, const Group& g, int i, int j, double delta) {
  return derive_X(derive_X(u, g, j, delta), g, i, delta);
}

struct GradientNorms {
  ScalarField horizontal;  // |grad_0 u|^2
  ScalarField full;        // |grad_delta u|^2
};

[[nodiscard]] inline GradientNorms gradient_norms(const ScalarField& u, const Group& g, double delta) {
  check_field(u, g);
  FrameTable T(g, u.grid, delta);
  auto d = all_partials(T, u.grid, u.values);
  GradientNorms r{ScalarField(u.grid, 0.0, u.time), ScalarField(u.grid, 0.0, u.time)};
  std::vector<double> xi(u.size());
  for (int i = 0; i < g.n(); ++i) {
    combine_frame(T, i, d, xi);
    const bool horiz = g.degree(i) == 1;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const double v = xi[k] * xi[k];
      r.full.values[k] += v;
      if (horiz) r.horizontal.values[k] += v;
    }
  }
  return r;
}

/// K_0 = sum_i X_i (X_i u / |grad_0 u|) over the horizontal frame, masked where |grad_0 u| < tol_char.
/// tol_char <= 0 selects the default 1e-8 * (field range).
[[nodiscard]] inline MaskedField horizontal_mean_curvature(const ScalarField& u, const Group& g,
                                                           double tol_char = 0.0) {
  check_field(u, g);
  if (tol_char <= 0) tol_char = 1e-8 * std::max(u.max() - u.min(), 1e-300);
  FrameTable T(g, u.grid, 1.0);
  auto d = all_partials(T, u.grid, u.values);
  const std::size_t N = u.size();
  const int m = g.is_se2() ? 2 : g.m();
  std::vector<std::vector<double>> xu(m, std::vector<double>(N));
  for (int i = 0; i < m; ++i) combine_frame(T, i, d, xu[i]);
  std::vector<double> norm(N, 0.0);
  for (std::size_t k = 0; k < N; ++k) {
    double s = 0;
    for (int i = 0; i < m; ++i) s += xu[i][k] * xu[i][k];
    norm[k] = std::sqrt(s);
  }
  MaskedField out{ScalarField(u.grid, 0.0, u.time), std::vector<unsigned char>(N, 0)};
  std::vector<double> nu(N), tmp(N);
  for (int i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < N; ++k) nu[k] = norm[k] >= tol_char ? xu[i][k] / norm[k] : 0.0;
    auto dn = all_partials(T, u.grid, nu);
    combine_frame(T, i, dn, tmp);
    for (std::size_t k = 0; k < N; ++k) out.field.values[k] += tmp[k];
  }
  for (std::size_t k = 0; k < N; ++k) {
    out.valid[k] = norm[k] >= tol_char;
    if (!out.valid[k]) out.field.values[k] = 0.0;
  }
  return out;
}

/// Multilinear interpolation; periodic axes wrap. Throws OutOfGrid outside the box.
[[nodiscard]] inline double interpolate(const ScalarField& u, std::span<const double> p) {
  const auto& G = u.grid;
  const int D = G.dim();
  std::vector<int> i0(D), i1(D);
  std::vector<double> w(D);
  for (int a = 0; a < D; ++a) {
    const auto& ax = G.axes[a];
    double s = (p[a] - ax.origin) / ax.spacing;
    if (ax.periodic) {
      s = std::fmod(s, static_cast<double>(ax.count));
      if (s < 0) s += ax.count;
      int k = static_cast<int>(std::floor(s));
      if (k >= ax.count) k = ax.count - 1;
      i0[a] = k;
      i1[a] = (k + 1) % ax.count;
      w[a] = s - k;
    } else {
      const double tol = 1e-9;
      if (s < -tol || s > ax.count - 1 + tol) throw Error(ErrorCode::OutOfGrid, "point outside grid");
      s = std::clamp(s, 0.0, static_cast<double>(ax.count - 1));
      int k = std::min(static_cast<int>(std::floor(s)), ax.count - 2);
      i0[a] = k;
      i1[a] = k + 1;
      w[a] = s - k;
    }
  }
  double acc = 0;
  for (int corner = 0; corner < (1 << D); ++corner) {
    double wt = 1;
    std::size_t node = 0;
    for (int a = 0; a < D; ++a) {
      const bool hi = (corner >> a) & 1;
      wt *= hi ? w[a] : 1.0 - w[a];
      node += static_cast<std::size_t>(hi ? i1[a] : i0[a]) * G.stride(a);
    }
    if (wt != 0.0) acc += wt * u.values[node];
  }
  return acc;
}

}  // namespace srmcf
