import itertools
import math

import numpy as np
import pytest

from trajgen.condenc import (
    assign_palette,
    default_point_radius,
    draw_object_id,
    draw_sparse_pose,
    gaussian_blur,
    gaussian_kernel,
    velocity_to_color,
)
from trajgen.physsim import SceneConfig, render_scene, simulate_pool
from trajgen.trajgeom import Trajectory, TrajectorySet


def hsv_reference(h_deg, s, v):
    """Chroma/sector formula, written independently of colorsys."""
    c = v * s
    hp = (h_deg % 360) / 60.0
    x = c * (1 - abs(hp % 2 - 1))
    sector = int(hp) % 6
    r1, g1, b1 = [(c, x, 0), (x, c, 0), (0, c, x), (0, x, c), (x, 0, c), (c, 0, x)][sector]
    m = v - c
    return (r1 + m, g1 + m, b1 + m)


def one_object(points, w=16, h=16, oid=0, visible=None):
    pts = np.asarray(points, float)
    vis = np.ones(len(pts), bool) if visible is None else np.asarray(visible)
    return TrajectorySet((Trajectory(oid, pts, vis),), len(pts), w, h)


class TestVelocityColor:
    def test_axis_cases(self):
        assert velocity_to_color((2.0, 0.0), 2.0) == pytest.approx((1, 0, 0))
        assert velocity_to_color((0.0, 0.0), 2.0) == (1.0, 1.0, 1.0)
        quarter = velocity_to_color((0.0, 1.0), 2.0)
        np.testing.assert_allclose(quarter, hsv_reference(90, 0.5, 1.0), atol=1e-12)
        np.testing.assert_allclose(quarter, (0.75, 1.0, 0.5), atol=1e-12)
        assert quarter[1] == max(quarter)  # green-dominant region

    def test_against_reference(self):
        rng = np.random.default_rng(3)
        for v in rng.normal(0, 3, (200, 2)):
            hue = math.degrees(math.atan2(v[1], v[0])) % 360
            sat = min(1.0, math.hypot(*v) / 4.0)
            np.testing.assert_allclose(velocity_to_color(v, 4.0), hsv_reference(hue, sat, 1.0), atol=1e-12)

    def test_bad_vmax(self):
        with pytest.raises(ValueError):
            velocity_to_color((1, 0), 0.0)

    @pytest.mark.parametrize("quarter", [1, 2, 3])
    def test_hue_rotation_permutes_channels(self, quarter):
        # rotating velocity by 90/180/270 degrees shifts the hue by the same angle
        rng = np.random.default_rng(quarter)
        theta = quarter * math.pi / 2
        rot = np.array([[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]])
        for v in rng.normal(0, 2, (50, 2)):
            base = velocity_to_color(v, 3.0)
            turned = velocity_to_color(rot @ v, 3.0)
            hue = math.degrees(math.atan2(v[1], v[0])) + 90 * quarter
            sat = min(1.0, math.hypot(*v) / 3.0)
            np.testing.assert_allclose(turned, hsv_reference(hue, sat, 1.0), atol=1e-9)
            if quarter == 2:
                # half-turn swaps each channel with its complement around the value axis
                np.testing.assert_allclose(np.add(base, turned), 2 - sat, atol=1e-9)


class TestGaussianBlur:
    def test_zero_sigma_identity(self):
        img = np.random.default_rng(0).random((9, 7, 3))
        out = gaussian_blur(img, 0)
        assert np.array_equal(out, img)

    def test_constant_unchanged(self):
        img = np.full((10, 12, 3), 0.37)
        np.testing.assert_allclose(gaussian_blur(img, 1.7), img, atol=1e-15)

    def brute_force(self, img, sigma):
        """Non-separable 2-D convolution with half-sample symmetric padding."""
        k1 = gaussian_kernel(sigma)
        k2 = np.outer(k1, k1)
        r = len(k1) // 2
        pad = np.pad(img, ((r, r), (r, r)), mode="symmetric")
        out = np.zeros_like(img, dtype=float)
        for i in range(img.shape[0]):
            for j in range(img.shape[1]):
                out[i, j] = (pad[i:i + 2 * r + 1, j:j + 2 * r + 1] * k2).sum()
        return out

    def test_row_matches_dense_oracle(self):
        row = np.array([[0, 0, 1, 0, 0]], float)
        np.testing.assert_allclose(gaussian_blur(row, 1.0), self.brute_force(row, 1.0), atol=1e-12)

    def test_random_matches_dense_oracle(self):
        img = np.random.default_rng(1).random((11, 13))
        np.testing.assert_allclose(gaussian_blur(img, 1.3), self.brute_force(img, 1.3), atol=1e-12)

    def test_kernel_radius(self):
        assert len(gaussian_kernel(2.0)) == 13
        assert len(gaussian_kernel(0.4)) == 5
        assert gaussian_kernel(1.1).sum() == pytest.approx(1.0, abs=1e-15)

    def test_delta_response(self):
        img = np.zeros((25, 25, 3))
        color = np.array([0.2, 0.5, 1.0])
        img[12, 12] = color
        out = gaussian_blur(img, 2.0)
        k = gaussian_kernel(2.0)
        expected = np.zeros((25, 25))
        expected[6:19, 6:19] = np.outer(k, k)
        np.testing.assert_allclose(out, expected[..., None] * color, atol=1e-15)
        np.testing.assert_allclose(out.sum(axis=(0, 1)), color, rtol=1e-6)

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 2.0, 3.5, 6.0])
    def test_mass_preserved_near_borders(self, sigma):
        img = np.random.default_rng(int(sigma * 10)).random((12, 9, 3))
        out = gaussian_blur(img, sigma)
        np.testing.assert_allclose(out.sum(axis=(0, 1)), img.sum(axis=(0, 1)), rtol=1e-6)


class TestPalette:
    def test_small(self):
        assert assign_palette(1).colors == ((1.0, 0.0, 0.0),)
        np.testing.assert_allclose(assign_palette(2).colors, [(1, 0, 0), (0, 1, 1)])

    def test_twenty_well_separated(self):
        cols = np.asarray(assign_palette(20).colors)
        dmin = min(np.linalg.norm(a - b) for a, b in itertools.combinations(cols, 2))
        assert dmin >= 0.2

    def test_range(self):
        with pytest.raises(ValueError):
            assign_palette(0)
        with pytest.raises(ValueError):
            assign_palette(65)
        assert assign_palette(20) == assign_palette(20)


class TestSparsePose:
    def test_static_scene_is_black(self):
        ts = one_object([(5, 5)] * 6)
        stack = draw_sparse_pose(ts, v_max=1.0)
        assert stack.modality == "sparse_pose"
        assert not stack.frames.any()

    def test_moving_right_red_disc(self):
        pts = [(3 + i, 8) for i in range(5)]
        stack = draw_sparse_pose(one_object(pts), v_max=1.0, point_radius=2, sigma=0)
        assert not stack.frames[0].any()
        ys, xs = np.mgrid[:16, :16]
        for i in range(1, 5):
            mask = (xs - pts[i][0]) ** 2 + (ys - 8) ** 2 <= 4
            np.testing.assert_array_equal(stack.frames[i][mask], np.tile([1.0, 0, 0], (mask.sum(), 1)))
            assert not stack.frames[i][~mask].any()

    def test_dims_mismatch(self):
        with pytest.raises(ValueError):
            draw_sparse_pose(one_object([(1, 1), (2, 2)]), dims=(8, 8))

    def test_default_radius(self):
        assert default_point_radius(32, 32) == 1
        assert default_point_radius(256, 256) == 4

    def test_energy_only_near_moving_objects(self):
        rng = np.random.default_rng(5)
        moving = np.column_stack([np.linspace(5, 25, 8), np.full(8, 6.0)])
        static = np.tile([[20.0, 24.0]], (8, 1))
        ts = TrajectorySet((Trajectory(0, moving, np.ones(8, bool)), Trajectory(1, static, np.ones(8, bool))), 8, 32, 32)
        sigma, r = 1.5, 1
        frames = draw_sparse_pose(ts, v_max=3.0, point_radius=r, sigma=sigma).frames
        ys, xs = np.mgrid[:32, :32]
        reach = r + math.ceil(3 * sigma)
        for i in range(1, 8):
            energy = frames[i].sum(axis=-1) > 0
            near = (np.abs(xs - moving[i, 0]) <= reach) & (np.abs(ys - moving[i, 1]) <= reach)
            assert energy[~near].sum() == 0
            assert energy[int(moving[i, 1]), int(round(moving[i, 0]))]
        del rng

    def test_deterministic(self):
        ts = one_object([(2, 2), (4, 3), (7, 5)])
        a = draw_sparse_pose(ts, v_max=2.0)
        b = draw_sparse_pose(ts, v_max=2.0)
        assert np.array_equal(a.frames, b.frames)


class TestObjectId:
    def test_static_object_every_frame(self):
        ts = one_object([(6, 6)] * 4)
        stack = draw_object_id(ts, assign_palette(1), point_radius=1)
        assert stack.modality == "object_id"
        for f in stack.frames:
            assert np.array_equal(f, stack.frames[0])
            assert f.any()

    def test_crossing_objects_keep_colors(self):
        a = np.column_stack([np.arange(2, 14), np.full(12, 5.0)])
        b = np.column_stack([np.arange(13, 1, -1), np.full(12, 10.0)])
        ts = TrajectorySet((Trajectory(0, a, np.ones(12, bool)), Trajectory(1, b, np.ones(12, bool))), 12, 16, 16)
        pal = assign_palette(2)
        frames = draw_object_id(ts, pal, point_radius=1).frames
        for f in frames:
            colors = {tuple(c) for c in f.reshape(-1, 3) if c.any()}
            assert colors == {pal.colors[0], pal.colors[1]}

    def test_missing_palette_entry(self):
        ts = one_object([(1, 1), (2, 2)], oid=3)
        with pytest.raises(ValueError, match="no palette entry"):
            draw_object_id(ts, assign_palette(2))

    def test_captured_ball_disappears(self):
        # scan frames for the captured ball's color and compare with visibility flags
        cfg = SceneConfig("pool", 2, 24, 32, 32, friction=0.0, restitution=1.0, radius=2.0)
        from trajgen.physsim import Body, palette_colors
        cols = palette_colors(2)
        bodies = [Body(0, (8, 8), (-1.5, -1.5), 2.0, color=cols[0]), Body(1, (20, 20), (0, 0), 2.0, color=cols[1])]
        scene = simulate_pool(cfg, bodies)
        t0 = scene.trajectories.by_id(0)
        f_cap = int(np.argmin(t0.visible))
        assert not t0.visible[f_cap:].any() and t0.visible[:f_cap].all()
        pal = assign_palette(2)
        frames = draw_object_id(scene.trajectories, pal).frames
        red = np.all(frames == np.array(pal.colors[0]), axis=-1).any(axis=(1, 2))
        np.testing.assert_array_equal(red, t0.visible)
        rendered = render_scene(scene)
        red_px = np.all(rendered == [255, 0, 0], axis=-1).any(axis=(1, 2))
        np.testing.assert_array_equal(red_px, t0.visible)
