#include "patchnet/camera.hpp"

#include <cmath>

#include <fmt/core.h>

#include "patchnet/error.hpp"

namespace patchnet {

void validate(const CameraIntrinsics& k) {
  if (!(k.fu > 0.0) || !(k.fv > 0.0) || !std::isfinite(k.fu) ||
      !std::isfinite(k.fv)) {
    throw Error(ErrorKind::MalformedCalibration,
                fmt::format("focal lengths must be positive (fu={}, fv={})",
                            k.fu, k.fv));
  }
  if (!std::isfinite(k.cx) || !std::isfinite(k.cy) || !std::isfinite(k.tx) ||
      !std::isfinite(k.ty)) {
    throw Error(ErrorKind::MalformedCalibration,
                "principal point and translation terms must be finite");
  }
}

Point3 backproject(const PixelDepth& p, const CameraIntrinsics& k,
                   ProjectionModel model) {
  if (!(p.d > 0.0) || !std::isfinite(p.d)) {
    throw Error(ErrorKind::InvalidDepth,
                fmt::format("depth must be positive, got {}", p.d));
  }
  const double z = p.d;
  if (model == ProjectionModel::Rectified) {
    return {((p.u - k.cx) * z - k.tx) / k.fu, ((p.v - k.cy) * z - k.ty) / k.fv,
            z};
  }
  return {(p.u - k.cx) * z / k.fu, (p.v - k.cy) * z / k.fv, z};
}

PixelDepth project(const Point3& pt, const CameraIntrinsics& k,
                   ProjectionModel model) {
  if (!(pt.z > 0.0) || !std::isfinite(pt.z)) {
    throw Error(ErrorKind::BehindCamera,
                fmt::format("point is not in front of the camera (z={})", pt.z));
  }
  double u = k.fu * pt.x / pt.z + k.cx;
  double v = k.fv * pt.y / pt.z + k.cy;
  if (model == ProjectionModel::Rectified) {
    u += k.tx / pt.z;
    v += k.ty / pt.z;
  }
  return {u, v, pt.z};
}

CameraIntrinsics intrinsics_from_projection_matrix(const ProjectionMatrix& m) {
  if (!(m[0][0] > 0.0) || !(m[1][1] > 0.0)) {
    throw Error(ErrorKind::MalformedCalibration,
                fmt::format("projection matrix diagonal must be positive "
                            "(m00={}, m11={})",
                            m[0][0], m[1][1]));
  }
  CameraIntrinsics k{m[0][0], m[1][1], m[0][2], m[1][2], m[0][3], m[1][3]};
  validate(k);
  return k;
}

}  // namespace patchnet
