#pragma once

#include <array>

namespace patchnet {

/// Pinhole intrinsics read from a rectified 3x4 projection matrix.
///
/// tx/ty come from the fourth column (metre-pixel units). They are only used
/// when a caller opts into the full rectified convention; the bare pinhole
/// model ignores them.
struct CameraIntrinsics {
  double fu = 1.0;
  double fv = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double tx = 0.0;
  double ty = 0.0;
};

struct PixelDepth {
  double u = 0.0;
  double v = 0.0;
  double d = 0.0;  // metres, 0 marks an invalid sample
};

struct Point3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

using ProjectionMatrix = std::array<std::array<double, 4>, 3>;

enum class ProjectionModel {
  Pinhole,    // x = (u - cx) z / fu
  Rectified,  // x = ((u - cx) z - tx) / fu, exact inverse of P [x y z 1]^T
};

/// Throws Error(MalformedCalibration) on non-positive or non-finite values.
void validate(const CameraIntrinsics& k);

Point3 backproject(const PixelDepth& p, const CameraIntrinsics& k,
                   ProjectionModel model = ProjectionModel::Pinhole);

PixelDepth project(const Point3& pt, const CameraIntrinsics& k,
                   ProjectionModel model = ProjectionModel::Pinhole);

CameraIntrinsics intrinsics_from_projection_matrix(const ProjectionMatrix& m);

}  // namespace patchnet
