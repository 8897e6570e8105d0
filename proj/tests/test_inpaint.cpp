#include <gtest/gtest.h>

#include <cmath>

#include "srmcf/inpaint.hpp"

using namespace srmcf;

namespace {

InpaintTask small_task(int n, double gap) {
  InpaintTask t;
  t.image = synthetic_bar(n, n, 4);
  t.mask = synthetic_gap(n, n, gap);
  t.orientations = 8;
  t.T = 0.005;
  return t;
}

Image blank(int rows, int cols) { return Image{rows, cols, std::vector<double>(static_cast<std::size_t>(rows) * cols, 0.0)}; }

}  // namespace

TEST(Synthetic, BarAndGapShapes) {
  const Image bar = synthetic_bar(16, 12, 4);
  int lit = 0;
  for (double v : bar.pixels) lit += v == 1.0;
  EXPECT_EQ(lit, 4 * 12);
  EXPECT_EQ(bar.at(7, 0), 1.0);
  EXPECT_EQ(bar.at(0, 0), 0.0);
  const auto gap = synthetic_gap(16, 12, 6);
  int holes = 0;
  for (auto m : gap) holes += m;
  EXPECT_EQ(holes, 6 * 16);
  EXPECT_EQ(gap[5], 1);
  EXPECT_EQ(gap[0], 0);
}

TEST(Components, HandCases) {
  Image img = blank(5, 5);
  EXPECT_EQ(count_components(img, 0.5), 0);
  img.at(0, 0) = 1;
  img.at(1, 1) = 1;  // diagonal only
  EXPECT_EQ(count_components(img, 0.5), 2);
  img.at(0, 1) = 0.5;  // level is inclusive
  EXPECT_EQ(count_components(img, 0.5), 1);
  img.at(4, 4) = 0.49;
  EXPECT_EQ(count_components(img, 0.5), 1);
}

TEST(Components, BarWithGap) {
  Image bar = synthetic_bar(20, 20, 4);
  EXPECT_EQ(count_components(bar, 0.5), 1);
  const auto gap = synthetic_gap(20, 20, 4);
  for (std::size_t q = 0; q < gap.size(); ++q)
    if (gap[q]) bar.pixels[q] = 0;
  EXPECT_EQ(count_components(bar, 0.5), 2);
}

TEST(Lift, ConstantImageLiftsToConstant) {
  Image img = blank(9, 9);
  for (auto& v : img.pixels) v = 0.3;
  const ScalarField u = lift_image(img, 8, 1.5, 1);
  ASSERT_EQ(u.size(), 9u * 9u * 8u);
  for (double v : u.values) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Lift, BarPrefersAlongOrientation) {
  const Image bar = synthetic_bar(21, 21, 4);
  const ScalarField u = lift_image(bar, 16, 1.5, 1);
  auto at = [&](int r, int c, int k) { return u.values[(static_cast<std::size_t>(c) * 21 + r) * 16 + k]; };
  EXPECT_NEAR(at(10, 10, 0), 1.0, 1e-12);
  EXPECT_NEAR(at(10, 10, 8), 1.0, 1e-12);  // theta + pi
  EXPECT_LT(at(10, 10, 4), 0.5);
  for (int k = 0; k < 8; ++k) EXPECT_NEAR(at(10, 10, k), at(10, 10, k + 8), 1e-12);
}

TEST(Lift, ProjectionRecoversImage) {
  Image img = synthetic_bar(15, 17, 3);
  img.at(2, 3) = 0.7;
  const Image back = project_max(lift_image(img, 8, 1.5, 1), img.rows, img.cols);
  for (std::size_t q = 0; q < img.pixels.size(); ++q) EXPECT_NEAR(back.pixels[q], img.pixels[q], 1e-12);
}

TEST(Lift, GridMatchesImage) {
  const GridSpec g = lift_grid(10, 20, 8, 1);
  EXPECT_EQ(g.axes[0].count, 20);
  EXPECT_EQ(g.axes[1].count, 10);
  EXPECT_EQ(g.axes[2].count, 8);
  EXPECT_TRUE(g.axes[2].periodic);
  EXPECT_NEAR(g.axes[0].spacing, g.axes[1].spacing, 1e-15);
}

TEST(Inpaint, EmptyMaskReturnsInput) {
  InpaintTask t = small_task(16, 0);
  const auto r = inpaint(t);
  EXPECT_GT(r.steps, 0);
  for (std::size_t q = 0; q < t.image.pixels.size(); ++q) EXPECT_NEAR(r.output.pixels[q], t.image.pixels[q], 1e-12);
}

TEST(Inpaint, AllMaskedStaysFinite) {
  InpaintTask t = small_task(16, 0);
  std::fill(t.mask.begin(), t.mask.end(), 1);
  const auto r = inpaint(t);
  for (double v : r.output.pixels) {
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  for (double v : r.snapshots.back().values) EXPECT_TRUE(std::isfinite(v));
}

TEST(Inpaint, KnownPixelsKeptGapBounded) {
  InpaintTask t = small_task(20, 4);
  t.T = 0.02;
  t.snapshot_every = 10;
  const auto r = inpaint(t);
  ASSERT_GE(r.snapshots.size(), 2u);
  for (std::size_t q = 0; q < t.mask.size(); ++q) {
    if (!t.mask[q]) {
      EXPECT_EQ(r.output.pixels[q], t.image.pixels[q]);
    }
    EXPECT_GE(r.output.pixels[q], 0.0);
    EXPECT_LE(r.output.pixels[q], 1.0);
  }
  // the gap starts at zero and picks up mass from the bar ends
  double centre = 0;
  for (int r0 = 8; r0 <= 11; ++r0) centre = std::max(centre, r.output.at(r0, 10));
  EXPECT_GT(centre, 0.0);
}

TEST(Inpaint, Validation) {
  InpaintTask t = small_task(16, 4);
  t.mask.pop_back();
  try {
    (void)inpaint(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
  t = small_task(16, 4);
  t.orientations = 7;
  try {
    (void)inpaint(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadParams);
  }
  t = small_task(16, 4);
  t.image = blank(2, 2);
  t.mask.assign(4, 0);
  try {
    (void)inpaint(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::GridMismatch);
  }
}
