#include "patchnet/box_geom.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include <fmt/core.h>

#include "patchnet/error.hpp"

namespace patchnet {

namespace {

double cross(const Point2& o, const Point2& a, const Point2& b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Signed side of p relative to the directed edge a->b; positive is left
// (inside for a counter-clockwise polygon).
double side(const Point2& a, const Point2& b, const Point2& p) {
  return cross(a, b, p);
}

Point2 edge_crossing(const Point2& s, const Point2& e, double side_s,
                     double side_e) {
  const double t = side_s / (side_s - side_e);
  return {s.x + t * (e.x - s.x), s.y + t * (e.y - s.y)};
}

void drop_duplicates(std::vector<Point2>& pts) {
  std::vector<Point2> out;
  out.reserve(pts.size());
  for (const Point2& p : pts) {
    if (!out.empty() && std::abs(out.back().x - p.x) <= kClipTolerance &&
        std::abs(out.back().y - p.y) <= kClipTolerance) {
      continue;
    }
    out.push_back(p);
  }
  while (out.size() > 1 &&
         std::abs(out.front().x - out.back().x) <= kClipTolerance &&
         std::abs(out.front().y - out.back().y) <= kClipTolerance) {
    out.pop_back();
  }
  pts = std::move(out);
}

double vertical_overlap(const Box3D& a, const Box3D& b) {
  // y points down: a box spans [y - h, y].
  const double bottom = std::min(a.y, b.y);
  const double top = std::max(a.y - a.h, b.y - b.h);
  return std::max(0.0, bottom - top);
}

}  // namespace

double ConvexPolygon::area() const {
  if (vertices.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0, j = vertices.size() - 1; i < vertices.size(); j = i++) {
    twice += vertices[j].x * vertices[i].y - vertices[i].x * vertices[j].y;
  }
  return 0.5 * twice;
}

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);  // [-pi, pi]
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

void validate(const Box3D& b) {
  const bool finite = std::isfinite(b.x) && std::isfinite(b.y) &&
                      std::isfinite(b.z) && std::isfinite(b.theta);
  if (!finite || !(b.h > 0.0) || !(b.w > 0.0) || !(b.l > 0.0) ||
      !std::isfinite(b.h) || !std::isfinite(b.w) || !std::isfinite(b.l)) {
    throw Error(ErrorKind::Shape,
                fmt::format("invalid box (x={}, y={}, z={}, h={}, w={}, l={}, "
                            "theta={})",
                            b.x, b.y, b.z, b.h, b.w, b.l, b.theta));
  }
}

std::array<Point3, 8> corners(const Box3D& b) {
  const double c = std::cos(b.theta);
  const double s = std::sin(b.theta);
  const double hl = 0.5 * b.l;
  const double hw = 0.5 * b.w;
  // Local (along-length, along-width) offsets, counter-clockwise in (x, z).
  const std::array<Point2, 4> local = {
      Point2{hl, hw}, Point2{-hl, hw}, Point2{-hl, -hw}, Point2{hl, -hw}};
  std::array<Point3, 8> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    // Rotation about the camera y axis.
    const double x = b.x + c * local[i].x + s * local[i].y;
    const double z = b.z - s * local[i].x + c * local[i].y;
    out[i] = {x, b.y, z};
    out[i + 4] = {x, b.y - b.h, z};
  }
  return out;
}

ConvexPolygon bev_polygon(const Box3D& b) {
  const auto cs = corners(b);
  ConvexPolygon poly;
  poly.vertices.reserve(4);
  for (std::size_t i = 0; i < 4; ++i) {
    poly.vertices.push_back({cs[i].x, cs[i].z});
  }
  return poly;
}

ConvexPolygon polygon_intersection(const ConvexPolygon& subject,
                                   const ConvexPolygon& clip) {
  if (subject.empty() || clip.empty()) return {};
  std::vector<Point2> output = subject.vertices;
  const std::size_t m = clip.vertices.size();
  for (std::size_t i = 0; i < m && !output.empty(); ++i) {
    const Point2& a = clip.vertices[i];
    const Point2& b = clip.vertices[(i + 1) % m];
    std::vector<Point2> input = std::move(output);
    output.clear();
    Point2 s = input.back();
    double side_s = side(a, b, s);
    for (const Point2& e : input) {
      const double side_e = side(a, b, e);
      const bool e_in = side_e >= -kClipTolerance;
      const bool s_in = side_s >= -kClipTolerance;
      if (e_in) {
        if (!s_in) output.push_back(edge_crossing(s, e, side_s, side_e));
        output.push_back(e);
      } else if (s_in && side_s > kClipTolerance) {
        output.push_back(edge_crossing(s, e, side_s, side_e));
      }
      s = e;
      side_s = side_e;
    }
  }
  drop_duplicates(output);
  if (output.size() < 3) return {};
  ConvexPolygon result{std::move(output)};
  if (result.area() <= 0.0) return {};
  return result;
}

namespace {

// Clipping is not bit-symmetric in its arguments; a fixed order makes IoU so.
bool clip_first(const Box3D& a, const Box3D& b) {
  return std::tie(a.x, a.y, a.z, a.h, a.w, a.l, a.theta) <=
         std::tie(b.x, b.y, b.z, b.h, b.w, b.l, b.theta);
}

}  // namespace

double iou_bev(const Box3D& a_in, const Box3D& b_in) {
  const bool keep = clip_first(a_in, b_in);
  const Box3D& a = keep ? a_in : b_in;
  const Box3D& b = keep ? b_in : a_in;
  const ConvexPolygon pa = bev_polygon(a);
  const ConvexPolygon pb = bev_polygon(b);
  const double area_a = pa.area();
  const double area_b = pb.area();
  const double inter = polygon_intersection(pa, pb).area();
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double iou_3d(const Box3D& a_in, const Box3D& b_in) {
  const bool keep = clip_first(a_in, b_in);
  const Box3D& a = keep ? a_in : b_in;
  const Box3D& b = keep ? b_in : a_in;
  const double overlap_h = vertical_overlap(a, b);
  if (overlap_h <= 0.0) return 0.0;
  const ConvexPolygon pa = bev_polygon(a);
  const ConvexPolygon pb = bev_polygon(b);
  const double vol_a = pa.area() * a.h;
  const double vol_b = pb.area() * b.h;
  const double inter = polygon_intersection(pa, pb).area() * overlap_h;
  const double uni = vol_a + vol_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

double smooth_l1(double residual) {
  const double r = std::abs(residual);
  return r < 1.0 ? 0.5 * r * r : r - 0.5;
}

namespace {

double corner_distance(const std::array<Point3, 8>& p,
                       const std::array<Point3, 8>& q) {
  double sum = 0.0;
  for (std::size_t i = 0; i < 8; ++i) {
    sum += smooth_l1(p[i].x - q[i].x) + smooth_l1(p[i].y - q[i].y) +
           smooth_l1(p[i].z - q[i].z);
  }
  return sum;
}

}  // namespace

double corner_loss(const Box3D& pred, const Box3D& gt) {
  Box3D flipped = gt;
  flipped.theta = gt.theta + kPi;
  const auto pc = corners(pred);
  return std::min(corner_distance(pc, corners(gt)),
                  corner_distance(pc, corners(flipped)));
}

LossBreakdown detection_loss(const Box3D& pred, const Box3D& gt, double lambda) {
  LossBreakdown out;
  out.center = smooth_l1(pred.x - gt.x) + smooth_l1(pred.y - gt.y) +
               smooth_l1(pred.z - gt.z);
  out.size = smooth_l1(pred.h - gt.h) + smooth_l1(pred.w - gt.w) +
             smooth_l1(pred.l - gt.l);
  out.heading = smooth_l1(wrap_angle(pred.theta - gt.theta));
  out.corner = corner_loss(pred, gt);
  out.total = out.center + out.size + out.heading + lambda * out.corner;
  return out;
}

}  // namespace patchnet
