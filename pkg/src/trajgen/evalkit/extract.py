"""Color-keyed centroid tracker for toy renders."""

from __future__ import annotations

import numpy as np

from ..condenc import IdPalette
from ..trajgeom import Trajectory, TrajectorySet

COLOR_TOLERANCE = 0.25
MIN_PIXELS = 3


def _as_unit(frames: np.ndarray) -> np.ndarray:
    frames = np.asarray(frames)
    if frames.dtype == np.uint8:
        return frames.astype(np.float64) / 255.0
    return frames.astype(np.float64)


def extract_trajectories_toy(frames: np.ndarray, palette: IdPalette) -> TrajectorySet:
    """Per frame and palette color, the centroid of pixels within RGB distance 0.25.

    Object ids follow palette order. Frames where a color covers fewer than
    three pixels are marked invisible (coordinates zero).
    """
    if len(palette) == 0:
        raise ValueError("empty palette")
    video = _as_unit(frames)
    if video.ndim != 4 or video.shape[-1] != 3:
        raise ValueError(f"expected (F, H, W, 3) frames, got {video.shape}")
    f, h, w, _ = video.shape
    ys, xs = np.mgrid[:h, :w]
    trajs = []
    for oid, color in enumerate(palette.colors):
        dist2 = ((video - np.asarray(color)) ** 2).sum(axis=-1)
        mask = dist2 <= COLOR_TOLERANCE**2
        counts = mask.sum(axis=(1, 2))
        vis = counts >= MIN_PIXELS
        pts = np.zeros((f, 2))
        safe = np.maximum(counts, 1)
        pts[:, 0] = (mask * xs).sum(axis=(1, 2)) / safe
        pts[:, 1] = (mask * ys).sum(axis=(1, 2)) / safe
        pts[~vis] = 0.0
        trajs.append(Trajectory(oid, pts, vis))
    return TrajectorySet(tuple(trajs), f, w, h)
