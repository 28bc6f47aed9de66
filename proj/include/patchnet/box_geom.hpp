#pragma once

#include <array>
#include <vector>

#include "patchnet/camera.hpp"

namespace patchnet {

/// Oriented box in the camera frame (y points down). (x, y, z) is the centre
/// of the bottom face; theta is the yaw about the vertical axis. At theta = 0
/// the length runs along x and the width along z.
struct Box3D {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double h = 1.0;
  double w = 1.0;
  double l = 1.0;
  double theta = 0.0;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Counter-clockwise convex polygon in the (x, z) ground plane.
struct ConvexPolygon {
  std::vector<Point2> vertices;

  double area() const;  // shoelace
  bool empty() const noexcept { return vertices.size() < 3; }
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kClipTolerance = 1e-12;
inline constexpr double kDefaultCornerWeight = 10.0;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Throws Error(Shape) when h, w or l is not positive or a field is not finite.
void validate(const Box3D& b);

/// Eight corners: bottom face counter-clockwise in BEV starting from the
/// local corner (+l/2, +w/2), then the top face (y - h) in the same order.
std::array<Point3, 8> corners(const Box3D& b);

ConvexPolygon bev_polygon(const Box3D& b);

/// Sutherland-Hodgman clipping of `subject` against convex `clip`.
ConvexPolygon polygon_intersection(const ConvexPolygon& subject,
                                   const ConvexPolygon& clip);

double iou_bev(const Box3D& a, const Box3D& b);
double iou_3d(const Box3D& a, const Box3D& b);

/// Huber loss with transition at 1.
double smooth_l1(double residual);

/// Minimum over {gt, gt rotated by pi} of the summed per-coordinate smooth-L1
/// distance between corresponding corners.
double corner_loss(const Box3D& pred, const Box3D& gt);

struct LossBreakdown {
  double center = 0.0;
  double size = 0.0;
  double heading = 0.0;
  double corner = 0.0;  // unweighted
  double total = 0.0;   // center + size + heading + lambda * corner
};

LossBreakdown detection_loss(const Box3D& pred, const Box3D& gt,
                             double lambda = kDefaultCornerWeight);

}  // namespace patchnet
