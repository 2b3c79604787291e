"""Matching trajectory evaluation metric.

Detections are assembled into per-object trajectories, gaps are filled from
the most recent detection, pairwise trajectory distances (sum of per-frame
squared Euclidean distances) form a bipartite cost matrix, and the minimum
cost matching between ground-truth and generated sets gives the score.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from ..trajgeom import Trajectory, TrajectorySet
from .hungarian import Matching, hungarian


@dataclass(frozen=True)
class DetectionRecord:
    frame: int
    object_id: int
    x: float
    y: float


@dataclass(frozen=True)
class MtemScore:
    raw_total: float
    normalized_percent: float
    pairs: Matching
    pair_distances: tuple[float, ...]
    cardinality_penalty_count: int

    def to_dict(self) -> dict:
        return {
            "raw_total": self.raw_total,
            "normalized_percent": self.normalized_percent,
            "pairs": [list(p) for p in self.pairs.pairs],
            "pair_distances": list(self.pair_distances),
            "unmatched": self.cardinality_penalty_count,
        }


def ingest_detections(records: Iterable[DetectionRecord], frames: int,
                      dims: tuple[int, int]) -> TrajectorySet:
    """Group detections into one trajectory per object id.

    Frames without a record are left invisible (coordinates zero) for
    :func:`fill_gaps` to complete. Duplicate (object, frame) records keep
    the first occurrence.
    """
    by_id: dict[int, dict[int, tuple[float, float]]] = {}
    for rec in records:
        if not 0 <= rec.frame < frames:
            raise ValueError(f"detection frame out of range [0, {frames}): {rec}")
        if not (math.isfinite(rec.x) and math.isfinite(rec.y)):
            raise ValueError(f"non-finite detection coordinates: {rec}")
        by_id.setdefault(rec.object_id, {}).setdefault(rec.frame, (rec.x, rec.y))
    trajs = []
    for oid in sorted(by_id):
        pts = np.zeros((frames, 2))
        vis = np.zeros(frames, dtype=bool)
        for f, xy in by_id[oid].items():
            pts[f] = xy
            vis[f] = True
        trajs.append(Trajectory(oid, pts, vis))
    return TrajectorySet(tuple(trajs), frames, dims[0], dims[1])


def fill_gaps(trajset: TrajectorySet, frames: int | None = None) -> TrajectorySet:
    """Carry the last detection forward; before the first detection, carry it backward."""
    frames = trajset.frame_count if frames is None else frames
    if frames != trajset.frame_count:
        raise ValueError(f"frame count {frames} != trajectory set {trajset.frame_count}")
    out = []
    for t in trajset:
        idx = np.flatnonzero(t.visible)
        if len(idx) == 0:
            raise ValueError(f"undetectable object {t.object_id}")
        # index of the most recent visible frame at or before each frame
        last = np.maximum.accumulate(np.where(t.visible, np.arange(frames), -1))
        last[last < 0] = idx[0]
        out.append(Trajectory(t.object_id, t.points[last], np.ones(frames, bool), t.cls))
    return TrajectorySet(tuple(out), frames, trajset.width, trajset.height, trajset.events)


def traj_distance(t1: Trajectory, t2: Trajectory) -> float:
    """Sum over frames of squared point distance (compensated summation)."""
    if t1.frame_count != t2.frame_count:
        raise ValueError(
            f"frame count mismatch: {t1.frame_count} vs {t2.frame_count}"
        )
    d = t1.points - t2.points
    return math.fsum((d * d).ravel())


def cost_matrix(gt: TrajectorySet, gen: TrajectorySet) -> np.ndarray:
    return np.array(
        [[traj_distance(a, b) for b in gen] for a in gt], dtype=np.float64
    ).reshape(len(gt), len(gen))


def mtem_score(gt: TrajectorySet, gen: TrajectorySet) -> MtemScore:
    """Score a generated trajectory set against ground truth.

    ``normalized_percent`` is the mean over matched pairs of the per-frame RMS
    displacement, as a percentage of the frame diagonal. Unmatched trajectories
    are only counted in ``cardinality_penalty_count``.
    """
    if len(gt) == 0 or len(gen) == 0:
        raise ValueError("mtem_score needs non-empty trajectory sets")
    if gt.dims != gen.dims or gt.frame_count != gen.frame_count:
        raise ValueError(
            f"incompatible sets: {gt.dims}x{gt.frame_count} vs {gen.dims}x{gen.frame_count}"
        )
    cost = cost_matrix(gt, gen)
    match = hungarian(cost)
    dists = tuple(float(cost[i, j]) for i, j in match.pairs)
    f = gt.frame_count
    diag = math.hypot(gt.width, gt.height)
    percent = 100.0 * math.fsum(math.sqrt(d / f) / diag for d in dists) / len(dists)
    return MtemScore(match.total_cost, percent, match, dists, abs(len(gt) - len(gen)))


# -- detection CSV --------------------------------------------------------------


def read_detections_csv(path: str | Path) -> list[DetectionRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["frame", "object_id", "x", "y"]:
            raise ValueError(f"{path}: expected header frame,object_id,x,y")
        return [
            DetectionRecord(int(r["frame"]), int(r["object_id"]), float(r["x"]), float(r["y"]))
            for r in reader
        ]


def write_detections_csv(path: str | Path, records: Iterable[DetectionRecord]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["frame", "object_id", "x", "y"])
        for r in records:
            w.writerow([r.frame, r.object_id, repr(float(r.x)), repr(float(r.y))])


def trajset_to_detections(ts: TrajectorySet) -> list[DetectionRecord]:
    return [
        DetectionRecord(int(f), t.object_id, float(t.points[f, 0]), float(t.points[f, 1]))
        for t in ts
        for f in np.flatnonzero(t.visible)
    ]
