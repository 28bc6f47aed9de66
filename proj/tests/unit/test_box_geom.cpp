#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "patchnet/box_geom.hpp"
#include "patchnet/error.hpp"

namespace patchnet {
namespace {

ConvexPolygon square(double x0, double y0, double side) {
  return {{{x0, y0}, {x0 + side, y0}, {x0 + side, y0 + side}, {x0, y0 + side}}};
}

bool near(const Point3& a, const Point3& b, double tol = 1e-12) {
  return std::abs(a.x - b.x) < tol && std::abs(a.y - b.y) < tol &&
         std::abs(a.z - b.z) < tol;
}

TEST(Corners, UnitCubeAtOrigin) {
  const auto c = corners({0, 0, 0, 1, 1, 1, 0});
  const std::array<Point3, 8> want = {{{0.5, 0, 0.5},
                                       {-0.5, 0, 0.5},
                                       {-0.5, 0, -0.5},
                                       {0.5, 0, -0.5},
                                       {0.5, -1, 0.5},
                                       {-0.5, -1, 0.5},
                                       {-0.5, -1, -0.5},
                                       {0.5, -1, -0.5}}};
  for (std::size_t i = 0; i < 8; ++i) EXPECT_TRUE(near(c[i], want[i])) << i;
}

TEST(Corners, HalfTurnRotatesOrderByTwo) {
  const Box3D b{1, 2, 3, 1.5, 1.6, 4.0, 0.0};
  Box3D f = b;
  f.theta = kPi;
  const auto c0 = corners(b);
  const auto c1 = corners(f);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_TRUE(near(c1[i], c0[(i + 2) % 4], 1e-12));
    EXPECT_TRUE(near(c1[i + 4], c0[(i + 2) % 4 + 4], 1e-12));
  }
}

TEST(Corners, QuarterTurnSwapsExtents) {
  const auto c = corners({0, 0, 0, 1, 1, 2, kPi / 2});
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::abs(c[i].x), 0.5, 1e-12);
    EXPECT_NEAR(std::abs(c[i].z), 1.0, 1e-12);
  }
}

TEST(Bev, AxisAlignedRectangle) {
  const ConvexPolygon p = bev_polygon({0, 0, 0, 1, 1, 2, 0});
  ASSERT_EQ(p.vertices.size(), 4u);
  for (const auto& v : p.vertices) {
    EXPECT_EQ(std::abs(v.x), 1.0);
    EXPECT_EQ(std::abs(v.y), 0.5);
  }
  EXPECT_EQ(p.area(), 2.0);
}

TEST(Bev, AreaIsRotationInvariant) {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    const Box3D b{0, 0, 0, 1, rng.uniform(0.5, 3), rng.uniform(0.5, 5),
                  rng.uniform(-kPi, kPi)};
    EXPECT_NEAR(bev_polygon(b).area(), b.l * b.w, 1e-12);
  }
}

TEST(Bev, DiagonalUnitSquare) {
  const ConvexPolygon p = bev_polygon({0, 0, 0, 1, 1, 1, kPi / 4});
  for (const auto& v : p.vertices) {
    EXPECT_NEAR(std::hypot(v.x, v.y), std::sqrt(2.0) / 2, 1e-12);
    EXPECT_NEAR(std::min(std::abs(v.x), std::abs(v.y)), 0.0, 1e-12);
  }
}

TEST(Clip, SelfIntersection) {
  const ConvexPolygon p = bev_polygon({0.3, 0, 1.7, 1, 1.2, 3.4, 0.77});
  EXPECT_NEAR(polygon_intersection(p, p).area(), p.area(), 1e-12);
}

TEST(Clip, Disjoint) {
  const ConvexPolygon r = polygon_intersection(square(0, 0, 1), square(3, 0, 1));
  EXPECT_TRUE(r.empty());
  EXPECT_EQ(r.area(), 0.0);
}

TEST(Clip, HalfOverlap) {
  EXPECT_NEAR(polygon_intersection(square(0, 0, 1), square(0.5, 0, 1)).area(), 0.5,
              1e-12);
}

TEST(Clip, TouchingEdgeAndDegenerateInputs) {
  EXPECT_EQ(polygon_intersection(square(0, 0, 1), square(1, 0, 1)).area(), 0.0);
  const ConvexPolygon line{{{0, 0}, {1, 0}, {2, 0}}};
  EXPECT_EQ(polygon_intersection(line, square(0, -1, 3)).area(), 0.0);
  EXPECT_EQ(polygon_intersection(ConvexPolygon{}, square(0, 0, 1)).area(), 0.0);
}

TEST(Clip, ContainedPolygon) {
  EXPECT_NEAR(polygon_intersection(square(0.25, 0.25, 0.5), square(0, 0, 1)).area(),
              0.25, 1e-12);
  EXPECT_NEAR(polygon_intersection(square(0, 0, 1), square(0.25, 0.25, 0.5)).area(),
              0.25, 1e-12);
}

TEST(Iou, AnalyticFixtures) {
  const Box3D a{0, 0, 0, 1, 1, 1, 0};
  EXPECT_NEAR(iou_bev(a, a), 1.0, 1e-12);
  EXPECT_NEAR(iou_3d(a, a), 1.0, 1e-12);
  Box3D b = a;
  b.x = 0.5;
  EXPECT_NEAR(iou_bev(a, b), 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(iou_3d(a, b), 1.0 / 3.0, 1e-12);
  Box3D far = a;
  far.x = 5.0;
  EXPECT_EQ(iou_bev(a, far), 0.0);
  EXPECT_EQ(iou_3d(a, far), 0.0);
}

TEST(Iou, VerticalDisjointIsZero) {
  const Box3D a{0, 0, 0, 1, 1, 1, 0};
  Box3D up = a;
  up.y = -1.5;  // spans [-2.5, -1.5]
  EXPECT_EQ(iou_3d(a, up), 0.0);
  EXPECT_NEAR(iou_bev(a, up), 1.0, 1e-12);
  Box3D half = a;
  half.y = -0.5;  // spans [-1.5, -0.5]: overlap 0.5
  EXPECT_NEAR(iou_3d(a, half), 0.5 / 1.5, 1e-12);
}

TEST(Iou, RotatedSquareAgainstMonteCarlo) {
  const Box3D a{0, 0, 0, 1, 1, 1, 0};
  const Box3D b{0, 0, 0, 1, 1, 1, kPi / 4};
  const double analytic = iou_bev(a, b);
  // Regular octagon of inradius 1/2: area 2 tan(pi/8); IoU = 1/sqrt(2).
  EXPECT_NEAR(analytic, 1.0 / std::sqrt(2.0), 1e-12);
  EXPECT_NEAR(oracle::monte_carlo_iou_bev(a, b, 1'000'000, 7), analytic, 0.01);
}

TEST(Iou, SymmetryBoundsInvariance) {
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    const auto [a, b] = oracle::random_box_pair(rng);
    const double bev = iou_bev(a, b);
    const double v3 = iou_3d(a, b);
    EXPECT_EQ(bev, iou_bev(b, a));
    EXPECT_EQ(v3, iou_3d(b, a));
    EXPECT_GE(bev, 0.0);
    EXPECT_LE(bev, 1.0);
    EXPECT_GE(v3, 0.0);
    EXPECT_LE(v3, bev + 1e-12);

    // Common rotation about the camera's vertical axis and common translation.
    const double phi = rng.uniform(-kPi, kPi);
    const double dx = rng.uniform(-10, 10), dy = rng.uniform(-1, 1),
                 dz = rng.uniform(-10, 10);
    auto move = [&](Box3D box) {
      const double c = std::cos(phi), s = std::sin(phi);
      const double x = c * box.x + s * box.z;
      const double z = -s * box.x + c * box.z;
      box.x = x + dx;
      box.y += dy;
      box.z = z + dz;
      box.theta = wrap_angle(box.theta + phi);
      return box;
    };
    EXPECT_NEAR(iou_bev(move(a), move(b)), bev, 1e-9);
    EXPECT_NEAR(iou_3d(move(a), move(b)), v3, 1e-9);
  }
}

TEST(Iou, HalfTurnOfSymmetricBoxIsIdentical) {
  const Box3D a{2, 1, 20, 1.5, 1.6, 3.9, 0.3};
  Box3D b = a;
  b.theta = wrap_angle(a.theta + kPi);
  EXPECT_NEAR(iou_3d(a, b), 1.0, 1e-12);
}

TEST(Loss, SmoothL1) {
  EXPECT_EQ(smooth_l1(0.0), 0.0);
  EXPECT_EQ(smooth_l1(0.5), 0.125);
  EXPECT_EQ(smooth_l1(-2.0), 1.5);
  EXPECT_EQ(smooth_l1(1.0), 0.5);
}

TEST(Loss, CornerLossFixtures) {
  const Box3D gt{1.2, 1.6, 25.0, 1.5, 1.7, 4.1, 0.4};
  EXPECT_EQ(corner_loss(gt, gt), 0.0);
  Box3D flipped = gt;
  flipped.theta = gt.theta + kPi;
  EXPECT_EQ(corner_loss(flipped, gt), 0.0);
  Box3D shifted = gt;
  shifted.x += 0.01;
  EXPECT_NEAR(corner_loss(shifted, gt), 8 * 0.5 * 0.01 * 0.01, 1e-12);
}

TEST(Loss, CornerLossTranslationInvariant) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    auto [p, g] = oracle::random_box_pair(rng);
    const double ref = corner_loss(p, g);
    const double dx = rng.uniform(-5, 5), dz = rng.uniform(-5, 5);
    p.x += dx;
    g.x += dx;
    p.z += dz;
    g.z += dz;
    EXPECT_NEAR(corner_loss(p, g), ref, 1e-9);
    Box3D gflip = g;
    gflip.theta += kPi;
    EXPECT_NEAR(corner_loss(p, gflip), corner_loss(p, g), 1e-9);
  }
}

TEST(Loss, DetectionLossTerms) {
  const Box3D gt{1, 1.5, 20, 1.5, 1.6, 3.9, -0.2};
  const LossBreakdown zero = detection_loss(gt, gt);
  EXPECT_EQ(zero.total, 0.0);
  EXPECT_EQ(zero.center, 0.0);
  EXPECT_EQ(zero.size, 0.0);
  EXPECT_EQ(zero.heading, 0.0);
  EXPECT_EQ(zero.corner, 0.0);

  Box3D turned = gt;
  turned.theta = gt.theta + 2 * kPi;
  EXPECT_NEAR(detection_loss(turned, gt).heading, 0.0, 1e-20);

  Box3D off{1.3, 1.4, 21.5, 1.2, 1.9, 4.5, 0.6};
  const LossBreakdown l0 = detection_loss(off, gt, 0.0);
  EXPECT_EQ(l0.total, l0.center + l0.size + l0.heading);
  EXPECT_NEAR(l0.center, 0.5 * 0.09 + 0.5 * 0.01 + (1.5 - 0.5), 1e-12);
  EXPECT_NEAR(l0.size, 0.5 * 0.09 + 0.5 * 0.09 + 0.5 * 0.36, 1e-12);
  EXPECT_NEAR(l0.heading, 0.5 * 0.64, 1e-12);
  const LossBreakdown l10 = detection_loss(off, gt);
  EXPECT_NEAR(l10.total, l0.total + kDefaultCornerWeight * l10.corner, 1e-12);
}

TEST(Angle, WrapRange) {
  EXPECT_EQ(wrap_angle(kPi), kPi);
  EXPECT_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
  EXPECT_NEAR(wrap_angle(2 * kPi + 0.1), 0.1, 1e-15);
}

TEST(Box, Validation) {
  EXPECT_NO_THROW(validate(Box3D{}));
  EXPECT_THROW(validate(Box3D{0, 0, 0, -1, 1, 1, 0}), Error);
  EXPECT_THROW(validate(Box3D{0, 0, std::nan(""), 1, 1, 1, 0}), Error);
}

}  // namespace
}  // namespace patchnet
