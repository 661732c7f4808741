import numpy as np
import pytest

import specarray as sa
from specarray.errors import DomainError
from specarray.sampling import bilinear_wrapped
from specarray.scenes import Background, SceneSpec, Sprite, scene_textures
from specarray.spectral import planck_illuminant

from conftest import make_flat_scene, make_two_layer_scene


def brute_force_render(scene, pose, band, frame, plan):
    """Independent per-pixel z-buffer renderer used as the geometry oracle.

    Walks layers near-to-far per pixel, projects the pixel into the layer's
    center-view coordinates, and samples the texture with periodic bilinear
    interpolation, exactly as the scene model defines it.
    """
    textures = scene_textures(scene, plan)
    illum = planck_illuminant(scene.illuminant_temperature_k, plan)
    sprites = sorted(scene.sprites, key=lambda s: s.depth_mm)
    ux, uy = pose.direction
    out = np.zeros((scene.height, scene.width))
    for y in range(scene.height):
        for x in range(scene.width):
            value = None
            for s in sprites:
                d = scene.focal_px * pose.baseline_mm / s.depth_mm
                cx, cy = x + d * ux, y + d * uy
                rx, ry = s.origin(frame)
                if rx <= cx < rx + s.rect[2] and ry <= cy < ry + s.rect[3]:
                    tex = textures[s.texture_id].spectra[band]
                    value = bilinear_wrapped(tex, np.array([cx - rx]),
                                             np.array([cy - ry]))[0]
                    break
            if value is None:
                d = scene.focal_px * pose.baseline_mm / scene.background.depth_mm
                tex = textures[scene.background.texture_id].spectra[band]
                value = bilinear_wrapped(tex, np.array([x + d * ux]),
                                         np.array([y + d * uy]))[0]
            out[y, x] = illum.values[band] * value
    return out


class TestGenerateTexture:
    def test_deterministic(self, plan37):
        a = sa.generate_texture(12345, 48, plan37)
        b = sa.generate_texture(12345, 48, plan37)
        assert np.array_equal(a.spectra, b.spectra)

    def test_range_and_contrast(self, plan37):
        mid = int(np.argmin(np.abs(plan37.centers_nm - 550.0)))
        for seed in range(8):
            tex = sa.generate_texture(seed, 48, plan37)
            assert tex.spectra.min() >= 0.0
            assert tex.spectra.max() <= 1.0
            assert tex.spectra[mid].std() >= 0.05

    def test_spectral_smoothness(self, plan37):
        # Mixtures of sigma>=30nm Gaussians capped at total weight 1.1 keep
        # adjacent 10nm samples within 0.25.
        for seed in range(8):
            tex = sa.generate_texture(seed, 48, plan37)
            step = np.abs(np.diff(tex.spectra.astype(np.float64), axis=0))
            assert step.max() <= 0.25


class TestRenderView:
    def test_center_equals_ground_truth_band(self, plan37, hex_layout, two_layer_capture):
        scene, _images, gt = two_layer_capture
        for band in (0, 18, 36):
            view = sa.render_view(scene, hex_layout.center, band, 0, plan37)
            assert np.array_equal(view, gt.cube.values[band])

    def test_single_plane_matches_brute_force(self, plan37, hex_layout):
        scene = SceneSpec(64, 48, 1200.0, 6400.0,
                          Background(1200.0 * 60.0 / 3.0, 0), (), seed=2)
        pose = hex_layout.nearest_peripherals(6)[0]
        view = sa.render_view(scene, pose, pose.band, 0, plan37)
        oracle = brute_force_render(scene, pose, pose.band, 0, plan37)
        assert np.allclose(view, oracle, atol=1e-6)

    def test_two_layer_matches_brute_force(self, plan37, hex_layout):
        scene = SceneSpec(64, 48, 1200.0, 6400.0,
                          Background(1200.0 * 60.0 / 2.0, 0),
                          (Sprite((20.0, 12.0, 26.0, 22.0), 1200.0 * 60.0 / 4.5, 1),),
                          seed=3)
        pose = hex_layout.nearest_peripherals(6)[2]
        view = sa.render_view(scene, pose, 5, 0, plan37)
        oracle = brute_force_render(scene, pose, 5, 0, plan37)
        assert np.allclose(view, oracle, atol=1e-6)

    def test_single_plane_is_pure_translation(self, plan37):
        # Horizontal neighbor at integral disparity: the view is the center
        # view shifted by exactly that many pixels.
        scene = make_flat_scene(disparity_px=6.0)
        layout = sa.build_hexagonal_layout(60.0)
        center = layout.center
        pose = next(p for p in layout.peripherals
                    if abs(p.direction[0] - 1.0) < 1e-9 and p.baseline_mm == 60.0)
        band = pose.band
        center_view = sa.render_view(scene, center, band, 0, plan37)
        periph_view = sa.render_view(scene, pose, band, 0, plan37)
        assert np.allclose(periph_view[:, :-6], center_view[:, 6:], atol=1e-6)

    def test_band_out_of_plan(self, plan37, hex_layout):
        scene = make_flat_scene()
        with pytest.raises(DomainError):
            sa.render_view(scene, hex_layout.center, 37, 0, plan37)

    def test_overlap_precondition(self, plan37, hex_layout):
        # Close background: disparity at the outer ring exceeds width/4.
        scene = SceneSpec(320, 240, 1200.0, 6400.0, Background(1200.0 * 60.0 / 30.0, 0))
        pose = max(hex_layout.poses, key=lambda p: p.baseline_mm)
        with pytest.raises(DomainError):
            sa.render_view(scene, pose, 0, 0, plan37)


class TestArrayCapture:
    def test_deterministic(self, plan37, hex_layout):
        scene = make_two_layer_scene()
        img1, gt1 = sa.render_array_capture(scene, hex_layout, 0, plan37)
        img2, gt2 = sa.render_array_capture(scene, hex_layout, 0, plan37)
        assert np.array_equal(img1, img2)
        assert np.array_equal(gt1.cube.values, gt2.cube.values)
        assert np.array_equal(gt1.disparity, gt2.disparity)
        assert np.array_equal(gt1.occlusion, gt2.occlusion)

    def test_energy_bound(self, two_layer_capture):
        _scene, images, gt = two_layer_capture
        assert images.min() >= 0.0 and images.max() <= 1.0
        assert gt.cube.values.min() >= 0.0 and gt.cube.values.max() <= 1.0

    def test_center_capture_is_gt_band(self, hex_layout, two_layer_capture):
        _scene, images, gt = two_layer_capture
        center = hex_layout.center
        assert np.array_equal(images[center.id], gt.cube.values[center.band])

    def test_single_plane_ground_truth(self, plan37, hex_layout, flat_capture):
        _scene, _images, gt = flat_capture
        assert np.all(gt.disparity == 4.0)
        assert np.all(gt.occlusion == 1)

    def test_gt_disparity_piecewise(self, two_layer_capture):
        _scene, _images, gt = two_layer_capture
        values = np.unique(gt.disparity)
        assert set(np.round(values, 5)) == {3.0, 16.0}

    def test_occlusion_stripe_geometry(self, plan37, hex_layout):
        # Stripe of hidden background adjacent to the sprite along +x for a
        # horizontal neighbor: width f*b*(1/Zf - 1/Zb) = 11 px.
        scene = make_two_layer_scene(d_bg=4.0, d_sprite=15.0)
        _images, gt = sa.render_array_capture(scene, hex_layout, 0, plan37)
        pose = next(p for p in hex_layout.peripherals
                    if abs(p.direction[0] - 1.0) < 1e-9 and p.baseline_mm == 60.0)
        stripe_w = 15.0 - 4.0
        sprite = scene.sprites[0]
        x0, y0, w, h = sprite.rect
        mask = gt.occlusion[pose.id]
        interior = mask[int(y0) + 3:int(y0 + h) - 3, :]
        zeros_per_row = (interior == 0).sum(axis=1)
        # Every interior sprite row hides a stripe_w-wide band of background
        # next to the sprite (+-1 for subpixel edges).
        assert np.all(np.abs(zeros_per_row - stripe_w) <= 1)

    def test_occlusion_area_two_layer(self, plan37, hex_layout):
        scene = make_two_layer_scene()
        _images, gt = sa.render_array_capture(scene, hex_layout, 0, plan37)
        pose = next(p for p in hex_layout.peripherals
                    if abs(p.direction[0] - 1.0) < 1e-9 and p.baseline_mm == 60.0)
        sprite = scene.sprites[0]
        stripe_w = 16.0 - 3.0
        expected = stripe_w * sprite.rect[3]
        zeros = (gt.occlusion[pose.id] == 0).sum()
        tolerance = 2.0 * (sprite.rect[3] + stripe_w)
        assert abs(zeros - expected) <= tolerance

    def test_photometric_consistency_same_band(self, plan37, hex_layout):
        # Diagnostic same-band render at integral disparity (axis-aligned
        # neighbors): visible pixels agree after shifting by the ground-truth
        # disparity to within bilinear tolerance.
        scene = make_two_layer_scene(d_bg=4.0, d_sprite=12.0)
        _images, gt = sa.render_array_capture(scene, hex_layout, 0, plan37)
        band = 18
        center_view = gt.cube.values[band].astype(np.float64)
        poses = [p for p in hex_layout.nearest_peripherals(6)
                 if abs(abs(p.direction[0]) - 1.0) < 1e-9]
        assert len(poses) == 2
        for pose in poses:
            periph = sa.render_view(scene, pose, band, 0, plan37)
            warped = sa.warp_to_center(periph, gt.disparity, pose, 60.0)
            ok = (gt.occlusion[pose.id] == 1) & warped.valid
            err = np.abs(warped.values.astype(np.float64) - center_view)[ok]
            assert err.max() <= 1e-3

    def test_moving_sprite_shifts_between_frames(self, plan37, hex_layout):
        scene = make_two_layer_scene()
        moving = SceneSpec(scene.width, scene.height, scene.focal_px,
                           scene.illuminant_temperature_k, scene.background,
                           (Sprite(scene.sprites[0].rect, scene.sprites[0].depth_mm,
                                   scene.sprites[0].texture_id, velocity=(3.0, 0.0)),),
                           frames=2, seed=scene.seed)
        img0, _ = sa.render_array_capture(moving, hex_layout, 0, plan37)
        img1, _ = sa.render_array_capture(moving, hex_layout, 1, plan37)
        assert not np.array_equal(img0[18], img1[18])

    def test_noise_is_seeded_and_clipped(self, plan37, hex_layout):
        base = make_flat_scene()
        noisy = SceneSpec(base.width, base.height, base.focal_px,
                          base.illuminant_temperature_k, base.background, (),
                          seed=base.seed, noise_sigma=0.05)
        img1, _ = sa.render_array_capture(noisy, hex_layout, 0, plan37)
        img2, _ = sa.render_array_capture(noisy, hex_layout, 0, plan37)
        clean, _ = sa.render_array_capture(base, hex_layout, 0, plan37)
        assert np.array_equal(img1, img2)
        assert not np.array_equal(img1, clean)
        assert img1.min() >= 0.0 and img1.max() <= 1.0


class TestSceneSpecValidation:
    def test_sprite_behind_background_rejected(self):
        with pytest.raises(DomainError):
            SceneSpec(64, 48, 100.0, 6400.0, Background(1000.0, 0),
                      (Sprite((0, 0, 10, 10), 2000.0, 1),))

    def test_nonpositive_depth_rejected(self):
        with pytest.raises(DomainError):
            SceneSpec(64, 48, 100.0, 6400.0, Background(-5.0, 0))

    def test_json_roundtrip(self, tmp_path):
        scene = make_two_layer_scene()
        path = tmp_path / "scene.json"
        sa.save_scene(scene, path)
        assert sa.load_scene(path) == scene

    def test_random_scene_deterministic(self):
        assert sa.random_scene(9) == sa.random_scene(9)
