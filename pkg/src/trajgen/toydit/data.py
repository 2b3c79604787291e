"""Turn simulated scenes into model-ready latents and condition latents."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..condenc import assign_palette, draw_object_id, draw_sparse_pose
from ..physsim import Scene, palette_colors, render_scene, render_trajectories
from ..trajgeom import TrajectorySet
from .vae import POOL, to_model_space, vae_stub_encode


@dataclass(frozen=True)
class EncodeParams:
    sigma: float = 2.0
    v_max: float | None = 3.0
    point_radius: float | None = None
    pool: int = POOL


@dataclass
class VideoSet:
    latents: np.ndarray  # (M, N, H', W', C) model space, float32
    pose: np.ndarray  # (M, N, H', W', C) in [0, 1]
    ids: np.ndarray

    def __len__(self) -> int:
        return len(self.latents)

    def subset(self, idx) -> "VideoSet":
        return VideoSet(self.latents[idx], self.pose[idx], self.ids[idx])


def condition_latents(trajset: TrajectorySet, params: EncodeParams = EncodeParams(),
                      n_palette: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    """(pose_latent, id_latent), each (N, H', W', 3) float32 in [0, 1]."""
    pose = draw_sparse_pose(trajset, params.v_max, params.point_radius, params.sigma)
    n = n_palette or max(t.object_id for t in trajset) + 1
    ids = draw_object_id(trajset, assign_palette(n), params.point_radius)
    return (vae_stub_encode(pose.frames, params.pool).astype(np.float32),
            vae_stub_encode(ids.frames, params.pool).astype(np.float32))


def video_latent(frames: np.ndarray, pool: int = POOL) -> np.ndarray:
    return to_model_space(vae_stub_encode(frames, pool)).astype(np.float32)


def build_video_set(scenes: list[Scene], params: EncodeParams = EncodeParams()) -> VideoSet:
    lat, pose, ids = [], [], []
    for sc in scenes:
        lat.append(video_latent(render_scene(sc), params.pool))
        p, i = condition_latents(sc.trajectories, params, len(sc.colors))
        pose.append(p)
        ids.append(i)
    return VideoSet(np.stack(lat), np.stack(pose), np.stack(ids))


def render_trajset(trajset: TrajectorySet, radius: float) -> np.ndarray:
    """Render a stored trajectory set the way the simulator would: palette color by object id."""
    n = max(t.object_id for t in trajset) + 1
    cols = palette_colors(n)
    return render_trajectories(trajset, [radius] * len(trajset),
                               [cols[t.object_id] for t in trajset])


def build_video_set_from_trajsets(trajsets: list[TrajectorySet], radius: float,
                                  params: EncodeParams = EncodeParams()) -> VideoSet:
    lat, pose, ids = [], [], []
    for ts in trajsets:
        lat.append(video_latent(render_trajset(ts, radius), params.pool))
        p, i = condition_latents(ts, params, max(t.object_id for t in ts) + 1)
        pose.append(p)
        ids.append(i)
    return VideoSet(np.stack(lat), np.stack(pose), np.stack(ids))
