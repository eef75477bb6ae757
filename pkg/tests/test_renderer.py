"""Tests for the defocus renderer: oracle semantics, fast routes, stacks."""

import math

import numpy as np
import pytest
from scipy import ndimage

import defocus_sim as ds
from defocus_sim import renderer
from defocus_sim.errors import DomainError

from conftest import FOCAL, PLANTED_E, two_plane_scene, random_scene

PARAMS = ds.CameraParams(A=800.0, e_mm=PLANTED_E, focal_length_mm=FOCAL)


def _ref_kernel(r):
    """Normalized Gaussian window from the contract formulas, plus half width."""
    if r < 1e-3:
        return np.ones((1, 1)), 0
    k = max(1, math.ceil(4.0 * r))
    if k % 2 == 0:
        k += 1
    h = k // 2
    yy, xx = np.mgrid[-h:h + 1, -h:h + 1]
    w = np.exp(-(yy ** 2 + xx ** 2) / (2.0 * r * r))
    return w / w.sum(), h


def reference_render(image, depth_mm, params, focus_depth_mm):
    """Independent renderer: clamped-index scatter with per-target renorm.

    Deliberately shares no padding or grouping machinery with the
    library; edge extension is emulated by clamping source indices.
    """
    img = np.asarray(image, dtype=float)
    squeeze = img.ndim == 2
    img3 = img[:, :, None] if squeeze else img
    H, W, C = img3.shape
    depth = np.asarray(depth_mm, dtype=float)
    F = params.focal_length_mm
    rmap = (params.A * np.abs(depth - focus_depth_mm) / depth
            * F / (focus_depth_mm - F))
    kernels = {float(r): _ref_kernel(float(r)) for r in np.unique(rmap)}
    pad = max(h for _, h in kernels.values())
    num = np.zeros((H, W, C))
    den = np.zeros((H, W))
    for si in range(-pad, H + pad):
        ci = min(max(si, 0), H - 1)
        for sj in range(-pad, W + pad):
            cj = min(max(sj, 0), W - 1)
            w, h = kernels[float(rmap[ci, cj])]
            val = img3[ci, cj]
            for oy in range(-h, h + 1):
                ti = si + oy
                if ti < 0 or ti >= H:
                    continue
                for ox in range(-h, h + 1):
                    tj = sj + ox
                    if tj < 0 or tj >= W:
                        continue
                    wt = w[oy + h, ox + h]
                    den[ti, tj] += wt
                    num[ti, tj] += wt * val
    out = np.clip(num / den[:, :, None], 0.0, 1.0)
    return out[:, :, 0] if squeeze else out


def small_two_depth_scene():
    image = np.array([
        [[0.9, 0.2, 0.1], [0.4, 0.8, 0.3], [0.0, 0.5, 1.0]],
        [[0.3, 0.3, 0.7], [1.0, 0.0, 0.2], [0.6, 0.9, 0.4]],
        [[0.2, 0.6, 0.5], [0.8, 0.1, 0.9], [0.5, 0.7, 0.0]],
    ])
    depth = np.array([
        [1000.0, 1000.0, 1100.0],
        [1000.0, 1100.0, 1100.0],
        [1100.0, 1100.0, 1100.0],
    ])
    return ds.Scene(image, depth)


class TestSceneValidation:
    def test_channels(self):
        gray = ds.Scene(np.zeros((4, 5)), np.full((4, 5), 900.0))
        assert (gray.height, gray.width, gray.channels) == (4, 5, 1)
        rgb = ds.Scene(np.zeros((4, 5, 3)), np.full((4, 5), 900.0))
        assert rgb.channels == 3

    def test_bad_rank(self):
        with pytest.raises(ValueError):
            ds.Scene(np.zeros((4, 5, 2)), np.full((4, 5), 900.0))

    def test_intensity_range(self):
        img = np.zeros((3, 3))
        img[1, 1] = 1.5
        with pytest.raises(ValueError):
            ds.Scene(img, np.full((3, 3), 900.0))
        with pytest.raises(ValueError):
            ds.Scene(img - 2.0, np.full((3, 3), 900.0))

    def test_depth_shape_mismatch(self):
        with pytest.raises(ValueError):
            ds.Scene(np.zeros((3, 3)), np.full((3, 4), 900.0))

    def test_nonpositive_depth(self):
        dep = np.full((3, 3), 900.0)
        dep[0, 0] = 0.0
        with pytest.raises(DomainError):
            ds.Scene(np.zeros((3, 3)), dep)

    def test_single_pixel_ok(self):
        scene = ds.Scene(np.array([[0.5]]), np.array([[1000.0]]))
        assert scene.height == scene.width == 1


class TestStackTypes:
    def test_entry_rejects_bad_distance(self):
        with pytest.raises(ValueError):
            ds.StackEntry(image=np.zeros((2, 2)), d_mm=0.0)
        with pytest.raises(ValueError):
            ds.StackEntry(image=np.zeros((2, 2)), d_mm=float("nan"))

    def test_stack_rejects_shape_mismatch(self):
        scene = ds.Scene(np.zeros((3, 3)), np.full((3, 3), 900.0))
        entry = ds.StackEntry(image=np.zeros((4, 4)), d_mm=30.0)
        with pytest.raises(ValueError, match="entry 0"):
            ds.FocalStack(entries=(entry,), scene=scene, focal_length_mm=50.0)

    def test_empty_stack_is_a_valid_container(self):
        scene = ds.Scene(np.zeros((3, 3)), np.full((3, 3), 900.0))
        stack = ds.FocalStack(entries=(), scene=scene, focal_length_mm=50.0)
        assert len(stack) == 0


class TestOracleSemantics:
    def test_matches_independent_reference(self):
        scene = small_two_depth_scene()
        got = ds.render_focused_oracle(scene, PARAMS, 1000.0)
        want = reference_render(scene.image, scene.depth_mm, PARAMS, 1000.0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_fast_matches_independent_reference(self):
        scene = small_two_depth_scene()
        want = reference_render(scene.image, scene.depth_mm, PARAMS, 1000.0)
        for backend in ds.renderer.BACKENDS:
            got = ds.render_focused_fast(scene, PARAMS, 1000.0,
                                         backend=backend)
            np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)

    def test_identity_when_everything_in_focus(self):
        rng = np.random.default_rng(3)
        img = rng.random((16, 16, 3))
        img[0, 0] = 0.0
        img[-1, -1] = 1.0
        scene = ds.Scene(img, np.full((16, 16), 1000.0))
        assert np.array_equal(
            ds.render_focused_oracle(scene, PARAMS, 1000.0), scene.image)
        for backend in ds.renderer.BACKENDS:
            out = ds.render_focused_fast(scene, PARAMS, 1000.0,
                                         backend=backend)
            assert np.array_equal(out, scene.image)

    def test_constant_depth_reduces_to_convolution(self):
        rng = np.random.default_rng(4)
        img = rng.random((20, 20, 3))
        scene = ds.Scene(img, np.full((20, 20), 1200.0))
        r = float(ds.blur_sigma_pixels(PARAMS, 1200.0, 1000.0))
        kern = ds.build_kernel(r, ds.kernel_size(r))
        want = np.stack(
            [ndimage.convolve(img[:, :, c], kern, mode="nearest")
             for c in range(3)],
            axis=-1,
        )
        got = ds.render_focused_oracle(scene, PARAMS, 1000.0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-9)
        fast = ds.render_focused_fast(scene, PARAMS, 1000.0)
        np.testing.assert_allclose(fast, want, rtol=0, atol=1e-9)

    def test_flat_field_is_a_fixed_point(self):
        rng = np.random.default_rng(5)
        depths = rng.uniform(700.0, 2000.0, (16, 16))
        scene = ds.Scene(np.full((16, 16), 0.37), depths)
        out = ds.render_focused_fast(scene, PARAMS, 1000.0)
        np.testing.assert_allclose(out, 0.37, rtol=0, atol=1e-9)

    def test_sharpness_decreases_as_focus_leaves_the_plane(self):
        scene = ds.Scene(ds.synth_mask(ds.MaskSpec(32, 32, 4, seed=2)) ,
                         np.full((32, 32), 1000.0))
        sharpness = []
        for df in np.linspace(1000.0, 1180.0, 10):
            frame = ds.render_focused_fast(scene, PARAMS, float(df))
            lap = ds.laplacian_map(ds.to_grayscale(frame))
            sharpness.append(float(np.abs(lap).mean()))
        assert all(b < a for a, b in zip(sharpness, sharpness[1:]))

    def test_huge_blur_clamps_kernel_and_stays_bounded(self):
        scene = ds.Scene(np.full((8, 8), 0.6), np.full((8, 8), 500.0))
        with pytest.warns(ds.KernelClampWarning):
            out = ds.render_focused_fast(scene, PARAMS, 2000.0)
        assert np.isfinite(out).all()
        assert out.min() >= 0.0 and out.max() <= 1.0

    def test_grayscale_shapes_roundtrip(self):
        rng = np.random.default_rng(6)
        img2 = rng.random((10, 12))
        depths = rng.uniform(900.0, 1300.0, (10, 12))
        out2 = ds.render_focused_fast(ds.Scene(img2, depths), PARAMS, 1000.0)
        assert out2.shape == (10, 12)
        out3 = ds.render_focused_fast(ds.Scene(img2[:, :, None], depths),
                                      PARAMS, 1000.0)
        assert out3.shape == (10, 12, 1)
        np.testing.assert_allclose(out3[:, :, 0], out2, rtol=0, atol=1e-12)


@pytest.fixture(scope="module")
def scenes():
    rng = np.random.default_rng(11)
    out = [random_scene(rng, size=24, depth_range=(1000.0, 1300.0))
           for _ in range(3)]
    out.append(two_plane_scene(size=24, patch=4))
    return out


class TestFastRoutes:
    def test_every_route_matches_oracle(self, scenes):
        for scene in scenes:
            want = ds.render_focused_oracle(scene, PARAMS, 1000.0)
            plan = renderer._plan(scene, PARAMS, 1000.0, 4.0, 129, None)
            stats = renderer._group_stats(plan)
            routes = {
                "separable": renderer._run_separable(plan, stats),
                "sweep": renderer._run_sweep(plan),
            }
            if renderer.native_available():
                routes["native"] = renderer._run_native(plan)
            for name, (num, den) in routes.items():
                got = renderer._finish(plan, num, den)
                err = float(np.abs(got - want).max())
                assert err <= 1e-6, f"route {name} differs by {err}"

    def test_public_backends_match_oracle(self, scenes):
        scene = scenes[0]
        want = ds.render_focused_oracle(scene, PARAMS, 1050.0)
        for backend in ds.renderer.BACKENDS:
            got = ds.render_focused_fast(scene, PARAMS, 1050.0,
                                         backend=backend)
            assert float(np.abs(got - want).max()) <= 1e-6

    def test_native_route_is_bit_exact(self, scenes):
        if not renderer.native_available():
            pytest.skip("compiled extension not built")
        for scene in scenes:
            want = ds.render_focused_oracle(scene, PARAMS, 1000.0)
            got = ds.render_focused_fast(scene, PARAMS, 1000.0,
                                         backend="native")
            assert np.array_equal(got, want)

    def test_fixed_kernel_size(self, scenes):
        scene = scenes[0]
        want = ds.render_focused_oracle(scene, PARAMS, 1000.0,
                                        fixed_kernel_size=9)
        for backend in ds.renderer.BACKENDS:
            got = ds.render_focused_fast(scene, PARAMS, 1000.0,
                                         backend=backend,
                                         fixed_kernel_size=9)
            assert float(np.abs(got - want).max()) <= 1e-6
        dynamic = ds.render_focused_fast(scene, PARAMS, 1000.0)
        assert float(np.abs(dynamic - want).max()) > 1e-6

    def test_fixed_kernel_size_must_be_odd(self):
        scene = small_two_depth_scene()
        with pytest.raises(ValueError):
            ds.render_focused_fast(scene, PARAMS, 1000.0, fixed_kernel_size=4)

    def test_unknown_backend_rejected(self):
        scene = small_two_depth_scene()
        with pytest.raises(ValueError):
            ds.render_focused_fast(scene, PARAMS, 1000.0, backend="bogus")

    def test_pure_python_fallback_when_extension_missing(self, monkeypatch):
        scene = small_two_depth_scene()
        want = ds.render_focused_oracle(scene, PARAMS, 1000.0)
        monkeypatch.setattr(renderer, "_native", None)
        assert not ds.native_available()
        with pytest.raises(RuntimeError):
            ds.render_focused_fast(scene, PARAMS, 1000.0, backend="native")
        got = ds.render_focused_fast(scene, PARAMS, 1000.0, backend="auto")
        assert float(np.abs(got - want).max()) <= 1e-6


class TestRenderStack:
    def test_empty_distance_list(self):
        scene = small_two_depth_scene()
        stack = ds.render_stack(scene, PARAMS, [])
        assert len(stack) == 0
        assert stack.scene is scene
        assert stack.focal_length_mm == FOCAL

    def test_order_and_tagging(self):
        scene = small_two_depth_scene()
        d_list = [30.0, 28.5, 29.2]
        stack = ds.render_stack(scene, PARAMS, d_list)
        assert [e.d_mm for e in stack.entries] == d_list

    def test_bad_distance_names_index(self):
        scene = small_two_depth_scene()
        with pytest.raises(DomainError, match=r"d_list\[1\]"):
            ds.render_stack(scene, PARAMS, [30.0, -1.0])

    def test_infeasible_distance_rejected(self):
        # d + e = 26 + 23.6 = 49.6 <= F = 50
        scene = small_two_depth_scene()
        with pytest.raises(DomainError, match=r"d \+ e > F"):
            ds.render_stack(scene, PARAMS, [26.0])

    def test_entry_focused_on_plane_is_identity(self):
        rng = np.random.default_rng(8)
        img = rng.random((12, 12, 3))
        scene = ds.Scene(img, np.full((12, 12), 1000.0))
        d = ds.image_distance(1000.0, FOCAL) - PLANTED_E
        stack = ds.render_stack(scene, PARAMS, [d])
        assert np.array_equal(stack.entries[0].image, img)

    def test_sharpest_frame_sits_at_the_plane(self):
        scene = ds.Scene(ds.synth_mask(ds.MaskSpec(32, 32, 4, seed=9)),
                         np.full((32, 32), 1000.0))
        focus_depths = (950.0, 975.0, 1000.0, 1025.0, 1050.0)
        d_list = [ds.image_distance(df, FOCAL) - PLANTED_E
                  for df in focus_depths]
        stack = ds.render_stack(scene, PARAMS, d_list)
        sharpness = [
            float(np.abs(ds.laplacian_map(ds.to_grayscale(e.image))).mean())
            for e in stack.entries
        ]
        assert int(np.argmax(sharpness)) == 2
