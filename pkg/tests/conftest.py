import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from npcd.config import Config
from npcd.frontview import build_xyz_map, inpaint
from npcd.ground import fit_ground, mask_ground
from npcd.ingest.synth import SceneSpec, generate_synthetic_scene


@pytest.fixture(scope="session")
def camera_scene():
    """Mid-size camera-mode scene shared across tests."""
    return generate_synthetic_scene(SceneSpec(mode="camera", n_boxes=4), seed=11)


@pytest.fixture(scope="session")
def lidar_scene():
    return generate_synthetic_scene(SceneSpec(mode="lidar", n_boxes=4), seed=5)


@pytest.fixture(scope="session")
def small_cfg():
    """Config with a reduced grid span sized to the synthetic camera."""
    return Config(
        map_width=640,
        map_height=192,
        grid_z_min_m=5.0,
        grid_z_max_m=65.0,
        grid_x_min_m=-25.0,
        grid_x_max_m=25.0,
    )


@pytest.fixture(scope="session")
def prepared_scene(camera_scene, small_cfg):
    """(scene, plane, flagged cloud, dense map) ready for anchor scoring."""
    plane = fit_ground(camera_scene.cloud, small_cfg.ransac_iterations,
                       small_cfg.ransac_threshold_m, seed=0)
    cloud = mask_ground(camera_scene.cloud, plane)
    cam = camera_scene.calibration.cam_projection
    xmap = build_xyz_map(cloud, cam, (small_cfg.map_width, small_cfg.map_height))
    xmap = inpaint(xmap)
    return camera_scene, plane, cloud, xmap
