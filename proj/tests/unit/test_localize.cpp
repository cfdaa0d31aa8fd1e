#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "endokey/imgproc.hpp"
#include "endokey/localize.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace endokey;
using Eigen::Index;

namespace {

BinaryMask ring(Index h, Index w, double cx, double cy, double r) {
  BinaryMask m(h, w);
  for (Index y = 0; y < h; ++y)
    for (Index x = 0; x < w; ++x) {
      const double d = std::hypot(x - cx, y - cy);
      m(y, x) = d >= r - 0.5 && d < r + 0.5;
    }
  return m;
}

BinaryMask square(Index h, Index w, Index y0, Index x0, Index side) {
  BinaryMask m = BinaryMask::Constant(h, w, false);
  m.block(y0, x0, side, side).setConstant(true);
  return m;
}

}  // namespace

TEST(DepthBoundary, ConstantMapIsEmpty) {
  EXPECT_FALSE(depth_boundary(InverseDepthMap(Plane::Constant(32, 32, 0.4))).any());
}

TEST(DepthBoundary, HemisphereRingNearRim) {
  const synthetic::Hemisphere hs{40.0, 38.0, 18.0};
  const BinaryMask e = depth_boundary(synthetic::hemisphere_depth(80, 80, hs));
  ASSERT_TRUE(e.any());
  for (Index y = 0; y < 80; ++y)
    for (Index x = 0; x < 80; ++x)
      if (e(y, x)) {
        EXPECT_LE(std::abs(std::hypot(x - hs.cx, y - hs.cy) - hs.radius), 2.0) << x << "," << y;
      }
  EXPECT_EQ(oracle::count_components(e, 8), 1);
  EXPECT_EQ(oracle::count_components(!e, 4), 2);
}

TEST(DepthBoundary, PlateauEdgeFollowsBorder) {
  Plane v = Plane::Constant(40, 40, 0.2);
  v.block(10, 12, 18, 16).setConstant(0.7);
  const BinaryMask e = depth_boundary(InverseDepthMap(v));
  ASSERT_TRUE(e.any());
  for (Index y = 0; y < 40; ++y)
    for (Index x = 0; x < 40; ++x) {
      if (!e(y, x)) continue;
      const bool near_vertical = (std::abs(x - 11.5) <= 1.0 || std::abs(x - 27.5) <= 1.0) && y >= 8 && y <= 29;
      const bool near_horizontal = (std::abs(y - 9.5) <= 1.0 || std::abs(y - 27.5) <= 1.0) && x >= 10 && x <= 29;
      EXPECT_TRUE(near_vertical || near_horizontal) << x << "," << y;
    }
  // Every row crossing the plateau sides carries an edge on each side.
  for (Index y = 12; y < 26; ++y) {
    EXPECT_TRUE(e(y, 11) || e(y, 12)) << y;
    EXPECT_TRUE(e(y, 27) || e(y, 28)) << y;
  }
}

TEST(DepthBoundary, InvalidPixelsDoNotCreateEdgesOnFlatMap) {
  BinaryMask valid = BinaryMask::Constant(20, 20, true);
  valid(5, 5) = false;
  Plane v = Plane::Constant(20, 20, 0.5);
  v(5, 5) = 100.0;
  EXPECT_FALSE(depth_boundary(InverseDepthMap(v, valid)).any());
}

TEST(Refine, RingBeatsNoise) {
  BinaryMask m = ring(40, 40, 20, 20, 10);
  m(1, 1) = m(38, 2) = m(3, 37) = true;
  const RefinedBoundary r = refine_boundary(m, 1);
  EXPECT_FALSE(r.empty);
  EXPECT_FALSE(r.mask(1, 1) || r.mask(38, 2) || r.mask(3, 37));
  EXPECT_EQ(oracle::count_components(r.mask, 8), 1);
  EXPECT_TRUE((r.mask || !ring(40, 40, 20, 20, 10)).all());
}

TEST(Refine, EqualRingsKeepFirstInRasterOrder) {
  const BinaryMask a = ring(30, 60, 12, 15, 6), b = ring(30, 60, 45, 15, 6);
  const RefinedBoundary r = refine_boundary(a || b, 1);
  EXPECT_TRUE(r.mask(15 - 6, 12));
  EXPECT_FALSE(r.mask(15 - 6, 45));
}

TEST(Refine, GapsCloseIntoOneComponent) {
  BinaryMask m = ring(40, 40, 20, 20, 12);
  m(8, 20) = false;
  m(20, 32) = false;
  m(32, 20) = false;
  ASSERT_GE(oracle::count_components(m, 8), 1);
  const RefinedBoundary r = refine_boundary(m, 2);
  EXPECT_EQ(oracle::count_components(r.mask, 8), 1);
  EXPECT_TRUE(r.mask(8, 20) && r.mask(20, 32) && r.mask(32, 20));
  EXPECT_FALSE(boundary_to_mask(r.mask).open_contour);
}

TEST(Refine, EmptyIsSignaled) {
  const RefinedBoundary r = refine_boundary(BinaryMask::Constant(10, 10, false));
  EXPECT_TRUE(r.empty);
  EXPECT_FALSE(r.mask.any());
}

TEST(Refine, AlwaysSingleComponent) {
  std::mt19937_64 rng(80);
  for (int trial = 0; trial < 20; ++trial) {
    const BinaryMask m = oracle::random_mask(30, 30, rng, 0.03);
    const RefinedBoundary r = refine_boundary(m, 1 + trial % 3);
    EXPECT_LE(oracle::count_components(r.mask, 8), 1);
  }
}

TEST(BoundaryToMask, ClosedRingAndOpenArc) {
  const BinaryMask r = ring(30, 30, 15, 15, 8);
  const FilledRegion filled = boundary_to_mask(r);
  EXPECT_FALSE(filled.open_contour);
  EXPECT_TRUE(filled.mask(15, 15));
  EXPECT_TRUE((filled.mask || !r).all());

  BinaryMask arc = r;
  arc.bottomRows(15).setConstant(false);
  const FilledRegion open = boundary_to_mask(arc);
  EXPECT_TRUE(open.open_contour);
  EXPECT_TRUE((open.mask == arc).all());
}

TEST(Localize, HemisphereFootprint) {
  const synthetic::Hemisphere hs{48.0, 46.0, 20.0};
  const LocalizationResult res = localize(synthetic::hemisphere_depth(96, 96, hs));
  EXPECT_FALSE(res.empty_edges);
  EXPECT_FALSE(res.open_contour);
  const double area = std::numbers::pi * hs.radius * hs.radius;
  EXPECT_NEAR(static_cast<double>(res.region.count()), area, 0.15 * area);
  EXPECT_GE(iou(res.region, synthetic::disk_mask(96, 96, hs)), 0.9);
  EXPECT_TRUE((res.region || !res.refined).all());
}

TEST(Localize, FlatMapIsEmpty) {
  const LocalizationResult res = localize(InverseDepthMap(Plane::Constant(30, 30, 0.5)));
  EXPECT_TRUE(res.empty_edges);
  EXPECT_FALSE(res.region.any());
}

TEST(Iou, Examples) {
  const BinaryMask a = square(20, 20, 2, 2, 10);
  EXPECT_EQ(iou(a, a), 1.0);
  EXPECT_EQ(iou(a, square(20, 20, 13, 13, 5)), 0.0);
  EXPECT_EQ(iou(a, square(20, 20, 2, 7, 10)), 1.0 / 3.0);
  const BinaryMask none = BinaryMask::Constant(20, 20, false);
  EXPECT_EQ(iou(none, none), 1.0);
  EXPECT_EQ(iou(a, none), 0.0);
  EXPECT_THROW(iou(a, BinaryMask::Constant(20, 21, false)), Error);
}

TEST(Iou, MatchesCountOracleAndIsSymmetric) {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    const BinaryMask a = oracle::random_mask(8, 9, rng, 0.4), b = oracle::random_mask(8, 9, rng, 0.4);
    Index inter = 0, uni = 0;
    for (Index i = 0; i < a.size(); ++i) {
      inter += a.data()[i] && b.data()[i];
      uni += a.data()[i] || b.data()[i];
    }
    const double want = uni == 0 ? 1.0 : double(inter) / double(uni);
    EXPECT_EQ(iou(a, b), want);
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_GE(iou(a, b), 0.0);
    EXPECT_LE(iou(a, b), 1.0);
    if (!(a == b).all()) {
      EXPECT_LT(iou(a, b), 1.0);
    }
  }
}

TEST(Miou, ExamplesAndErrors) {
  const BinaryMask a = square(10, 10, 0, 0, 4), b = square(10, 10, 6, 6, 4);
  std::vector<std::pair<BinaryMask, BinaryMask>> same{{a, a}, {b, b}};
  const IouReport all = miou(same);
  EXPECT_EQ(all.miou, 1.0);
  EXPECT_TRUE(all.pass_half);

  std::vector<std::pair<BinaryMask, BinaryMask>> half{{a, a}, {a, b}};
  const IouReport h = miou(half);
  EXPECT_EQ(h.per_frame_iou, (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(h.miou, 0.5);
  EXPECT_FALSE(h.pass_half);

  EXPECT_THROW(miou(std::span<const std::pair<BinaryMask, BinaryMask>>{}), Error);
  EXPECT_TRUE(miou_from_scores({0.6, 0.5}).pass_half);
}
