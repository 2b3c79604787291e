"""Pixel-space conditioning maps built from trajectories.

Two modalities are produced per frame:

* sparse pose: each moving object drawn as a disc whose color encodes its
  instantaneous velocity on the HSV wheel (hue = direction, saturation =
  speed / v_max), then Gaussian blurred. Static objects are not drawn.
* object ID: each visible object drawn as a disc of a fixed palette color,
  moving or not, unblurred.
"""

from __future__ import annotations

import colorsys
import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .raster import draw_disc
from .trajgeom import TrajectorySet

EPS_STATIC = 1e-3


@dataclass(frozen=True)
class ConditionStack:
    frames: np.ndarray  # (F, H, W, 3) float64 in [0, 1]
    modality: str  # "sparse_pose" | "object_id"


@dataclass(frozen=True)
class IdPalette:
    colors: tuple[tuple[float, float, float], ...]

    def __len__(self) -> int:
        return len(self.colors)

    def color(self, object_id: int) -> tuple[float, float, float]:
        if not 0 <= object_id < len(self.colors):
            raise ValueError(f"no palette entry for object id {object_id}")
        return self.colors[object_id]

    def as_uint8(self) -> np.ndarray:
        return np.rint(np.asarray(self.colors) * 255).astype(np.uint8)


def velocity_to_color(v, v_max: float) -> tuple[float, float, float]:
    if not v_max > 0:
        raise ValueError(f"v_max must be positive, got {v_max}")
    dx, dy = float(v[0]), float(v[1])
    hue = math.degrees(math.atan2(dy, dx)) % 360.0
    sat = min(1.0, math.hypot(dx, dy) / v_max)
    return colorsys.hsv_to_rgb(hue / 360.0, sat, 1.0)


def default_point_radius(width: int, height: int) -> int:
    return max(1, round(0.015 * min(width, height)))


def default_v_max(trajset: TrajectorySet) -> float:
    speeds = []
    for t in trajset:
        if t.frame_count < 2:
            continue
        both = t.visible[1:] & t.visible[:-1]
        speeds.append(np.hypot(*np.diff(t.points, axis=0).T)[both])
    if not speeds:
        return 1.0
    s = np.concatenate(speeds)
    s = s[s > EPS_STATIC]
    return float(np.percentile(s, 99)) if len(s) else 1.0


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (x / sigma) ** 2)
    return k / k.sum()


def gaussian_blur(frame: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur over the first two axes of an (H, W[, C]) array.

    Borders use half-sample symmetric reflection, which together with the
    unit-sum kernel keeps per-channel totals unchanged.
    """
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    frame = np.asarray(frame)
    if sigma == 0:
        return frame.copy()
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(np.asarray(frame, np.float64), k, axis=0, mode="reflect")
    return ndimage.correlate1d(out, k, axis=1, mode="reflect")


def assign_palette(n: int) -> IdPalette:
    if not 1 <= n <= 64:
        raise ValueError(f"palette size must be in [1, 64], got {n}")
    return IdPalette(tuple(colorsys.hsv_to_rgb(k / n, 1.0, 1.0) for k in range(n)))


def _blank(trajset: TrajectorySet) -> np.ndarray:
    return np.zeros((trajset.frame_count, trajset.height, trajset.width, 3))


def draw_sparse_pose(
    trajset: TrajectorySet,
    v_max: float | None = None,
    point_radius: float | None = None,
    sigma: float = 2.0,
    dims: tuple[int, int] | None = None,
) -> ConditionStack:
    if dims is not None and tuple(dims) != trajset.dims:
        raise ValueError(f"dims {dims} do not match trajectory set {trajset.dims}")
    if trajset.frame_count < 2:
        raise ValueError("sparse pose needs at least two frames")
    if sigma < 0:
        raise ValueError(f"sigma must be >= 0, got {sigma}")
    if v_max is None:
        v_max = default_v_max(trajset)
    if point_radius is None:
        point_radius = default_point_radius(trajset.width, trajset.height)
    out = _blank(trajset)
    for t in sorted(trajset, key=lambda t: t.object_id):
        vel = np.diff(t.points, axis=0)
        for i in range(1, t.frame_count):
            if not (t.visible[i] and t.visible[i - 1]):
                continue
            v = vel[i - 1]
            if math.hypot(v[0], v[1]) <= EPS_STATIC:
                continue
            x, y = t.points[i]
            draw_disc(out[i], x, y, point_radius, velocity_to_color(v, v_max))
    if sigma > 0:
        for i in range(1, len(out)):
            out[i] = gaussian_blur(out[i], sigma)
    np.clip(out, 0.0, 1.0, out=out)
    return ConditionStack(out, "sparse_pose")


def draw_object_id(
    trajset: TrajectorySet, palette: IdPalette, point_radius: float | None = None
) -> ConditionStack:
    if point_radius is None:
        point_radius = default_point_radius(trajset.width, trajset.height)
    colors = {t.object_id: palette.color(t.object_id) for t in trajset}
    out = _blank(trajset)
    for t in sorted(trajset, key=lambda t: t.object_id):
        for i in np.flatnonzero(t.visible):
            x, y = t.points[i]
            draw_disc(out[i], x, y, point_radius, colors[t.object_id])
    return ConditionStack(out, "object_id")
