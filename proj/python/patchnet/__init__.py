"""Depth-patch geometry, set/grid network equivalence and KITTI-style evaluation."""

from ._core import (
    Box3D,
    CameraIntrinsics,
    ChannelConfig,
    IouKind,
    PatchnetError,
    ProjectionModel,
    average_precision,
    backproject,
    build_patch_tensor,
    corner_loss,
    decode_depth_png,
    detection_loss,
    equivalence_check,
    foreground_mask,
    intrinsics_from_calib,
    iou_3d,
    iou_bev,
    patch_to_pointset,
    project,
    resample_patch,
    route_by_distance,
    set_and_grid_outputs,
)

__all__ = [
    "Box3D",
    "CameraIntrinsics",
    "ChannelConfig",
    "IouKind",
    "PatchnetError",
    "ProjectionModel",
    "average_precision",
    "backproject",
    "build_patch_tensor",
    "corner_loss",
    "decode_depth_png",
    "detection_loss",
    "equivalence_check",
    "foreground_mask",
    "intrinsics_from_calib",
    "iou_3d",
    "iou_bev",
    "patch_to_pointset",
    "project",
    "resample_patch",
    "route_by_distance",
    "set_and_grid_outputs",
]
