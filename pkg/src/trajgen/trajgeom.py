"""Trajectory representations, polyline resampling and velocity/flow helpers.

Coordinates are continuous pixels with the origin at the top-left corner,
x to the right and y downward. Frame indices run 0..F-1.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class Trajectory:
    object_id: int
    points: np.ndarray  # (F, 2) float64, columns x, y
    visible: np.ndarray  # (F,) bool
    cls: str = "object"

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 2)
        vis = np.asarray(self.visible, dtype=bool).reshape(-1)
        if self.object_id < 0:
            raise ValueError(f"object_id must be non-negative, got {self.object_id}")
        if len(pts) == 0:
            raise ValueError("trajectory needs at least one frame")
        if len(pts) != len(vis):
            raise ValueError(
                f"points/visible length mismatch: {len(pts)} != {len(vis)}"
            )
        if not np.all(np.isfinite(pts)):
            raise ValueError("trajectory points must be finite")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "visible", vis)

    @property
    def frame_count(self) -> int:
        return len(self.points)

    def translated(self, dx: float, dy: float) -> "Trajectory":
        return replace(self, points=self.points + np.array([dx, dy]))


@dataclass(frozen=True)
class TrajectorySet:
    trajectories: tuple[Trajectory, ...]
    frame_count: int
    width: int
    height: int
    events: tuple = field(default=())

    def __post_init__(self) -> None:
        trajs = tuple(self.trajectories)
        object.__setattr__(self, "trajectories", trajs)
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"invalid dims {self.width}x{self.height}")
        ids = [t.object_id for t in trajs]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate object ids in {ids}")
        for t in trajs:
            if t.frame_count != self.frame_count:
                raise ValueError(
                    f"object {t.object_id} has {t.frame_count} frames, "
                    f"set has {self.frame_count}"
                )

    @property
    def dims(self) -> tuple[int, int]:
        return self.width, self.height

    def __len__(self) -> int:
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    def by_id(self, object_id: int) -> Trajectory:
        for t in self.trajectories:
            if t.object_id == object_id:
                return t
        raise KeyError(object_id)


def resample_polyline(polyline: Sequence[Sequence[float]], frames: int) -> Trajectory:
    """Sample ``frames`` points at equal arc-length spacing along a polyline.

    Both endpoints are included. All frames are marked visible.
    """
    pts = np.asarray(polyline, dtype=np.float64).reshape(-1, 2)
    if len(pts) == 0:
        raise ValueError("empty polyline")
    if frames <= 0:
        raise ValueError("zero frames")
    seg = np.hypot(*np.diff(pts, axis=0).T) if len(pts) > 1 else np.zeros(0)
    # zero-length segments would make the arc-length abscissa non-increasing
    keep = np.concatenate([[True], seg > 0])
    pts = pts[keep]
    seg = seg[seg > 0]
    if len(pts) == 1:
        out = np.repeat(pts, frames, axis=0)
    else:
        arc = np.concatenate([[0.0], np.cumsum(seg)])
        s = np.linspace(0.0, arc[-1], frames)
        out = np.column_stack([np.interp(s, arc, pts[:, 0]), np.interp(s, arc, pts[:, 1])])
        out[-1] = pts[-1]
    return Trajectory(0, out, np.ones(frames, dtype=bool))


def diff(traj: Trajectory) -> np.ndarray:
    """Per-frame displacement, shape (F-1, 2)."""
    if traj.frame_count < 2:
        raise ValueError("trajectory too short")
    return np.diff(traj.points, axis=0)


def cumulative_flow(vels: np.ndarray) -> np.ndarray:
    """Prefix-sum of velocities starting at (0, 0); shape (len(vels)+1, 2)."""
    v = np.asarray(vels, dtype=np.float64).reshape(-1, 2)
    out = np.zeros((len(v) + 1, 2))
    np.cumsum(v, axis=0, out=out[1:])
    return out


def clamp_to_frame(traj: Trajectory, dims: tuple[int, int]) -> Trajectory:
    w, h = dims
    if w <= 0 or h <= 0:
        raise ValueError(f"invalid dims {w}x{h}")
    pts = traj.points.copy()
    np.clip(pts[:, 0], 0, w - 1, out=pts[:, 0])
    np.clip(pts[:, 1], 0, h - 1, out=pts[:, 1])
    return replace(traj, points=pts)


# -- JSON ---------------------------------------------------------------------


def trajset_to_dict(ts: TrajectorySet) -> dict:
    doc = {
        "width": ts.width,
        "height": ts.height,
        "frame_count": ts.frame_count,
        "objects": [
            {
                "id": t.object_id,
                "class": t.cls,
                "points": t.points.tolist(),
                "visible": t.visible.tolist(),
            }
            for t in ts.trajectories
        ],
    }
    if ts.events:
        doc["events"] = [
            {"frame": f, "kind": kind, "ids": list(ids)} for f, kind, ids in ts.events
        ]
    return doc


def trajset_from_dict(doc: dict) -> TrajectorySet:
    try:
        w, h, f = int(doc["width"]), int(doc["height"]), int(doc["frame_count"])
        objects = doc["objects"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed trajectory document: {exc}") from None
    trajs = []
    for obj in objects:
        pts, vis = obj["points"], obj["visible"]
        if len(pts) != f or len(vis) != f:
            raise ValueError(
                f"object {obj['id']}: expected {f} frames, got "
                f"{len(pts)} points and {len(vis)} visibility flags"
            )
        trajs.append(
            Trajectory(int(obj["id"]), np.asarray(pts, float), np.asarray(vis, bool),
                       str(obj.get("class", "object")))
        )
    events = tuple(
        (int(e["frame"]), str(e["kind"]), tuple(int(i) for i in e["ids"]))
        for e in doc.get("events", [])
    )
    return TrajectorySet(tuple(trajs), f, w, h, events)


def save_trajset(ts: TrajectorySet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(trajset_to_dict(ts), indent=1), encoding="utf-8")


def load_trajset(path: str | Path) -> TrajectorySet:
    return trajset_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def stack_points(trajs: Iterable[Trajectory]) -> np.ndarray:
    """(n, F, 2) array of all trajectory points."""
    return np.stack([t.points for t in trajs])
