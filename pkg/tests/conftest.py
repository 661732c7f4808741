import numpy as np
import pytest

import specarray as sa
from specarray.scenes import Background, SceneSpec, Sprite


@pytest.fixture(scope="session")
def plan37():
    return sa.BandPlan()


@pytest.fixture(scope="session")
def hex_layout():
    return sa.build_hexagonal_layout(60.0)


def make_flat_scene(disparity_px: float = 4.0, seed: int = 11) -> SceneSpec:
    """Single background plane whose reference-baseline disparity is exact."""
    focal = 1200.0
    return SceneSpec(320, 240, focal, 6400.0,
                     Background(focal * 60.0 / disparity_px, 0), (), seed=seed)


def make_two_layer_scene(d_bg: float = 3.0, d_sprite: float = 16.0,
                         seed: int = 5) -> SceneSpec:
    """Background plus one large sprite; disparities in px at 60 mm baseline."""
    focal = 1200.0
    return SceneSpec(320, 240, focal, 6400.0,
                     Background(focal * 60.0 / d_bg, 0),
                     (Sprite((80.0, 40.0, 160.0, 160.0), focal * 60.0 / d_sprite, 1),),
                     seed=seed)


@pytest.fixture(scope="session")
def flat_capture(plan37, hex_layout):
    scene = make_flat_scene()
    images, gt = sa.render_array_capture(scene, hex_layout, 0, plan37)
    return scene, images, gt


@pytest.fixture(scope="session")
def two_layer_capture(plan37, hex_layout):
    scene = make_two_layer_scene()
    images, gt = sa.render_array_capture(scene, hex_layout, 0, plan37)
    return scene, images, gt
