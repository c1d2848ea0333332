from .calib import Calibration, read_calibration, write_calibration
from .labels import GroundTruthBox, difficulty, read_labels, write_labels
from .raster import depth_raster_to_cloud, read_depth_raster, write_depth_raster
from .synth import BoxPlacement, SceneSpec, SyntheticScene, generate_synthetic_scene, read_scene_spec
from .velodyne import read_lidar_scan, write_lidar_scan

__all__ = [
    "BoxPlacement",
    "Calibration",
    "GroundTruthBox",
    "SceneSpec",
    "SyntheticScene",
    "depth_raster_to_cloud",
    "difficulty",
    "generate_synthetic_scene",
    "read_calibration",
    "read_depth_raster",
    "read_labels",
    "read_lidar_scan",
    "read_scene_spec",
    "write_calibration",
    "write_depth_raster",
    "write_labels",
    "write_lidar_scan",
]
