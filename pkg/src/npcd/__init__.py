"""3D object proposals from point clouds via normalized point-cloud density."""

from ._kernels import BACKEND
from .cloud import PointCloud
from .config import Config, dump_config, load_config
from .frontview import Patch, XYZMap, build_xyz_map, crop_resize, inpaint
from .geometry import (
    Box3D,
    BoxArray,
    Rect2D,
    contains,
    iou_2d,
    iou_3d,
    iou_bev,
    project_box_to_image,
    to_local,
)
from .ground import GroundPlane, fit_ground, mask_ground
from .proposals import (
    AnchorGrid,
    Proposal,
    align,
    enlargement_filter,
    generate_anchors,
    normalized_density,
    propose_frame,
    rank_proposals,
    raw_point_count,
    select,
)

__version__ = "0.1.0"

__all__ = [
    "AnchorGrid",
    "BACKEND",
    "Box3D",
    "BoxArray",
    "Config",
    "GroundPlane",
    "Patch",
    "PointCloud",
    "Proposal",
    "Rect2D",
    "XYZMap",
    "align",
    "build_xyz_map",
    "contains",
    "crop_resize",
    "dump_config",
    "enlargement_filter",
    "fit_ground",
    "generate_anchors",
    "inpaint",
    "iou_2d",
    "iou_3d",
    "iou_bev",
    "load_config",
    "mask_ground",
    "normalized_density",
    "project_box_to_image",
    "propose_frame",
    "rank_proposals",
    "raw_point_count",
    "select",
    "to_local",
]
