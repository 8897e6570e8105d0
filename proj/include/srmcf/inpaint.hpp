#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "srmcf/common.hpp"
#include "srmcf/field.hpp"
#include "srmcf/flow.hpp"
#include "srmcf/group.hpp"
#include "srmcf/io.hpp"

namespace srmcf {

struct InpaintTask {
  Image image;                       // values in [0,1]
  std::vector<unsigned char> mask;   // 1 = missing
  int orientations = 16;
  double scale = 1.5;                // Gaussian sigma in pixels
  double extent = 1;                 // x runs over [-extent, extent]
  double epsilon = 0.1;
  double delta = 0.1;
  double T = 0.02;
  double cfl_safety = 0.25;
  int snapshot_every = 0;

  void validate() const {
    if (image.rows < 3 || image.cols < 3) throw Error(ErrorCode::GridMismatch, "image must be at least 3 x 3");
    if (image.pixels.size() != static_cast<std::size_t>(image.rows) * image.cols)
      throw Error(ErrorCode::GridMismatch, "image pixel count differs from its shape");
    if (mask.size() != image.pixels.size()) throw Error(ErrorCode::GridMismatch, "mask shape differs from image shape");
    if (orientations < 8) throw Error(ErrorCode::BadParams, "need at least 8 orientations");
    if (!(scale > 0) || !(extent > 0)) throw Error(ErrorCode::BadParams, "scale and extent must be positive");
  }
};

struct InpaintResult {
  Image output;
  ScalarField lifted;                  // initial lift
  std::vector<ScalarField> snapshots;  // lifted field during the evolution, final last
  long steps = 0;
};

/// Bright horizontal bar across the full width.
[[nodiscard]] inline Image synthetic_bar(int rows, int cols, double width) {
  Image img{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0)};
  const double mid = 0.5 * (rows - 1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) img.at(r, c) = std::abs(r - mid) < 0.5 * width ? 1.0 : 0.0;
  return img;
}

/// Vertical strip of missing columns centred in the image.
[[nodiscard]] inline std::vector<unsigned char> synthetic_gap(int rows, int cols, double gap) {
  std::vector<unsigned char> m(static_cast<std::size_t>(rows) * cols, 0);
  const double mid = 0.5 * (cols - 1);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m[static_cast<std::size_t>(r) * cols + c] = std::abs(c - mid) < 0.5 * gap ? 1 : 0;
  return m;
}

namespace detail {
inline std::vector<double> gauss_kernel(double s, int order) {
  const int R = static_cast<int>(std::ceil(3 * s));
  std::vector<double> k(2 * R + 1);
  double norm = 0;
  for (int i = -R; i <= R; ++i) norm += std::exp(-0.5 * i * i / (s * s));
  for (int i = -R; i <= R; ++i) {
    const double g = std::exp(-0.5 * i * i / (s * s)) / norm;
    k[i + R] = order == 0 ? g : order == 1 ? -i / (s * s) * g : (i * i / (s * s) - 1) / (s * s) * g;
  }
  return k;
}

// Separable filter, clamped borders. kr along rows (y), kc along columns (x).
inline Image separable(const Image& in, const std::vector<double>& kr, const std::vector<double>& kc) {
  Image tmp = in, out = in;
  const int Rc = static_cast<int>(kc.size() / 2), Rr = static_cast<int>(kr.size() / 2);
  for (int r = 0; r < in.rows; ++r)
    for (int c = 0; c < in.cols; ++c) {
      double a = 0;
      for (int i = -Rc; i <= Rc; ++i) a += kc[i + Rc] * in.at(r, std::clamp(c - i, 0, in.cols - 1));
      tmp.at(r, c) = a;
    }
  for (int r = 0; r < in.rows; ++r)
    for (int c = 0; c < in.cols; ++c) {
      double a = 0;
      for (int i = -Rr; i <= Rr; ++i) a += kr[i + Rr] * tmp.at(std::clamp(r - i, 0, in.rows - 1), c);
      out.at(r, c) = a;
    }
  return out;
}
}  // namespace detail

/// SE2 grid for an image: x along columns, y along rows, K periodic angles.
[[nodiscard]] inline GridSpec lift_grid(int rows, int cols, int K, double extent) {
  const double h = 2 * extent / (cols - 1);
  const double y0 = -0.5 * h * (rows - 1);
  return GridSpec::box({cols, rows, K}, {-extent, y0, 0.0}, {extent, -y0, kTwoPi}, {false, false, true});
}

/// Orientation score: value at (x, y, theta_k) is I times |n^T H n| normalized by its max over k,
/// with n the normal to theta_k and H the Gaussian Hessian of I. Flat pixels get weight 1.
[[nodiscard]] inline ScalarField lift_image(const Image& img, int K, double scale, double extent) {
  const auto g0 = detail::gauss_kernel(scale, 0), g2 = detail::gauss_kernel(scale, 2), g1 = detail::gauss_kernel(scale, 1);
  const Image Hxx = detail::separable(img, g0, g2);
  const Image Hyy = detail::separable(img, g2, g0);
  const Image Hxy = detail::separable(img, g1, g1);
  const GridSpec grid = lift_grid(img.rows, img.cols, K, extent);
  ScalarField u(grid, 0.0, 0.0);
  std::vector<double> R(K);
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      double mx = 0;
      for (int k = 0; k < K; ++k) {
        const double th = kTwoPi * k / K, nx = -std::sin(th), ny = std::cos(th);
        R[k] = std::abs(nx * nx * Hxx.at(r, c) + 2 * nx * ny * Hxy.at(r, c) + ny * ny * Hyy.at(r, c));
        mx = std::max(mx, R[k]);
      }
      for (int k = 0; k < K; ++k) {
        const std::size_t node = (static_cast<std::size_t>(c) * img.rows + r) * K + k;
        u.values[node] = img.at(r, c) * (mx > 1e-12 ? R[k] / mx : 1.0);
      }
    }
  return u;
}

/// Max over theta, clipped to [0,1].
[[nodiscard]] inline Image project_max(const ScalarField& u, int rows, int cols) {
  const int K = u.grid.axes[2].count;
  Image img{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0)};
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double m = -std::numeric_limits<double>::infinity();
      for (int k = 0; k < K; ++k) m = std::max(m, u.values[(static_cast<std::size_t>(c) * rows + r) * K + k]);
      img.at(r, c) = std::clamp(m, 0.0, 1.0);
    }
  return img;
}

/// Lift, evolve with known pixels re-imposed after every step, project back.
[[nodiscard]] inline InpaintResult inpaint(const InpaintTask& task) {
  task.validate();
  const int rows = task.image.rows, cols = task.image.cols, K = task.orientations;
  Image masked = task.image;
  for (std::size_t q = 0; q < masked.pixels.size(); ++q)
    if (task.mask[q]) masked.pixels[q] = 0;
  InpaintResult res;
  res.lifted = lift_image(masked, K, task.scale, task.extent);

  std::vector<unsigned char> known(res.lifted.size());
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      for (int k = 0; k < K; ++k)
        known[(static_cast<std::size_t>(c) * rows + r) * K + k] = task.mask[static_cast<std::size_t>(r) * cols + c] ? 0 : 1;

  FlowProblem p;
  p.group = GroupSpec::se2();
  p.u0 = res.lifted;
  p.epsilon = task.epsilon;
  p.delta = task.delta;
  p.T = task.T;
  p.cfl_safety = task.cfl_safety;
  const FlowSolver solver(p);
  const long steps = task.T > 0 ? std::max(1L, static_cast<long>(std::ceil(task.T / solver.cfl_bound() - 1e-9))) : 0L;
  const double dt = steps > 0 ? task.T / static_cast<double>(steps) : 0.0;
  ScalarField u = res.lifted;
  for (long s = 1; s <= steps; ++s) {
    u = solver.step(u, dt);
    for (std::size_t k = 0; k < u.size(); ++k)
      if (known[k]) u.values[k] = res.lifted.values[k];
    if (task.snapshot_every > 0 && s % task.snapshot_every == 0 && s != steps) res.snapshots.push_back(u);
  }
  res.snapshots.push_back(u);
  res.steps = steps;

  res.output = project_max(u, rows, cols);
  for (std::size_t q = 0; q < res.output.pixels.size(); ++q)
    if (!task.mask[q]) res.output.pixels[q] = task.image.pixels[q];
  return res;
}

/// 4-connected components of {v >= level}.
[[nodiscard]] inline int count_components(const Image& img, double level) {
  std::vector<int> lab(img.pixels.size(), 0);
  int n = 0;
  std::vector<std::pair<int, int>> stack;
  for (int r = 0; r < img.rows; ++r)
    for (int c = 0; c < img.cols; ++c) {
      const std::size_t q = static_cast<std::size_t>(r) * img.cols + c;
      if (lab[q] || img.at(r, c) < level) continue;
      lab[q] = ++n;
      stack.push_back({r, c});
      while (!stack.empty()) {
        auto [a, b] = stack.back();
        stack.pop_back();
        const int dr[] = {1, -1, 0, 0}, dc[] = {0, 0, 1, -1};
        for (int d = 0; d < 4; ++d) {
          const int y = a + dr[d], x = b + dc[d];
          if (y < 0 || x < 0 || y >= img.rows || x >= img.cols) continue;
          const std::size_t w = static_cast<std::size_t>(y) * img.cols + x;
          if (lab[w] || img.at(y, x) < level) continue;
          lab[w] = n;
          stack.push_back({y, x});
        }
      }
    }
  return n;
}

}  // namespace srmcf
