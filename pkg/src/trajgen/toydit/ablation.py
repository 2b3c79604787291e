"""Conditioning ablation at toy scale.

Three models share data, architecture and seed and differ only in their
conditioning: none, sparse pose only, sparse pose + object ID. Each is
trained on two-object near-crossing pool scenes and scored on held-out
scenes with the trajectory-matching metric, per evaluation seed group.
"""

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from ..condenc import assign_palette
from ..evalkit import extract_trajectories_toy, fill_gaps, mtem_score
from ..physsim import Body, Scene, SceneConfig, palette_colors, simulate_pool
from ..trajgeom import TrajectorySet
from .data import EncodeParams, VideoSet, build_video_set
from .diffusion import Adam, Batch, NoiseSchedule, sample, training_step
from .model import DitConfig, ToyDiT

log = logging.getLogger(__name__)

MISSING_OBJECT_PERCENT = 100.0


def near_crossing_scene(seed: int, size: int = 32, frames: int = 16, radius: float = 2.0,
                        speed: tuple[float, float] = (1.2, 2.0)) -> Scene:
    """Two balls whose straight-line paths cross near the table center.

    Arrival times at the crossing point differ by up to a few frames, so the
    balls either collide or pass close to each other.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0xC055,)))
    cfg = SceneConfig("pool", 2, frames, size, size, seed=seed, radius=radius,
                      friction=0.002, restitution=0.95)
    colors = palette_colors(2)
    lo, hi = radius + 1, size - 2 - radius
    for _ in range(1000):
        cross = np.array([size / 2, size / 2]) + rng.uniform(-3, 3, 2)
        a1 = rng.uniform(0, 2 * math.pi)
        a2 = a1 + rng.choice([-1, 1]) * rng.uniform(math.radians(50), math.radians(130))
        s1, s2 = rng.uniform(*speed, 2)
        t1 = frames / 2 + rng.uniform(-2, 2)
        t2 = t1 + rng.uniform(-2.5, 2.5)
        v1 = s1 * np.array([math.cos(a1), math.sin(a1)])
        v2 = s2 * np.array([math.cos(a2), math.sin(a2)])
        p1, p2 = cross - v1 * t1, cross - v2 * t2
        if (np.all((p1 > lo) & (p1 < hi)) and np.all((p2 > lo) & (p2 < hi))
                and np.hypot(*(p1 - p2)) > 2 * radius + 1):
            bodies = [Body(0, p1, v1, radius, 1.0, color=colors[0]),
                      Body(1, p2, v2, radius, 1.0, color=colors[1])]
            return simulate_pool(cfg, bodies)
    raise ValueError("cannot place bodies")


def score_video(video: np.ndarray, gt: TrajectorySet, n_colors: int) -> float:
    """MTEM percent of one generated video against ground truth.

    Objects whose color is never found are left unmatched; each ground-truth
    object without a match counts as a full frame diagonal of error.
    """
    ex = extract_trajectories_toy(video, assign_palette(n_colors))
    found = tuple(t for t in ex if t.visible.any())
    if not found:
        return MISSING_OBJECT_PERCENT
    gen = fill_gaps(TrajectorySet(found, ex.frame_count, ex.width, ex.height))
    score = mtem_score(fill_gaps(gt), gen)
    missing = max(0, len(gt) - len(found))
    k = len(score.pair_distances)
    return (score.normalized_percent * k + MISSING_OBJECT_PERCENT * missing) / (k + missing)


@dataclass
class TrendConfig:
    train_scenes: int = 200
    heldout_per_group: int = 8
    groups: int = 5
    steps: int = 1000
    batch: int = 4
    seed: int = 0
    model: DitConfig = field(default_factory=DitConfig)
    encode: EncodeParams = field(default_factory=EncodeParams)


@dataclass
class TrendResult:
    scores: dict[str, np.ndarray]  # mode -> (groups, heldout) MTEM percent vs true trajectory
    shuffled: np.ndarray  # (groups, heldout) pose_id samples scored against a shuffled trajectory
    losses: dict[str, list[float]]
    train_seconds: dict[str, float]
    sample_seconds: float

    def medians(self) -> dict[str, np.ndarray]:
        return {k: np.median(v, axis=1) for k, v in self.scores.items()}

    def ordering_holds(self) -> np.ndarray:
        m = self.medians()
        return (m["none"] > m["pose"]) & (m["pose"] >= m["pose_id"])

    def true_beats_shuffled(self) -> np.ndarray:
        return np.median(self.scores["pose_id"], axis=1) < np.median(self.shuffled, axis=1)


def train(cfg: DitConfig, videos: VideoSet, steps: int, batch: int,
          seed: int) -> tuple[ToyDiT, list[float]]:
    model = ToyDiT(cfg)
    opt = Adam(cfg.lr)
    sched = NoiseSchedule.linear(cfg.steps)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x7A1,)))
    losses = []
    for step in range(steps):
        idx = rng.choice(len(videos), size=batch, replace=False)
        sub = videos.subset(idx)
        b = Batch(sub.latents,
                  sub.pose if cfg.cond != "none" else None,
                  sub.ids if cfg.cond == "pose_id" else None)
        losses.append(training_step(model, opt, b, sched, rng, step))
        if step % 100 == 0:
            log.info("%s step %d loss %.4f", cfg.cond, step, losses[-1])
    return model, losses


def run_trend(tc: TrendConfig = TrendConfig()) -> TrendResult:
    train_scenes = [near_crossing_scene(tc.seed * 100003 + i) for i in range(tc.train_scenes)]
    n_held = tc.groups * tc.heldout_per_group
    held_scenes = [near_crossing_scene(tc.seed * 100003 + 50000 + i) for i in range(n_held)]
    train_set = build_video_set(train_scenes, tc.encode)
    held_set = build_video_set(held_scenes, tc.encode)

    scores, losses, secs = {}, {}, {}
    shuffled = np.zeros((tc.groups, tc.heldout_per_group))
    sample_secs = 0.0
    for mode in ("none", "pose", "pose_id"):
        cfg = DitConfig(**{**tc.model.to_dict(), "cond": mode, "seed": tc.seed})
        t0 = time.perf_counter()
        model, losses[mode] = train(cfg, train_set, tc.steps, tc.batch, tc.seed)
        secs[mode] = time.perf_counter() - t0
        sched = NoiseSchedule.linear(cfg.steps)
        s = np.zeros((tc.groups, tc.heldout_per_group))
        t0 = time.perf_counter()
        for g in range(tc.groups):
            idx = np.arange(g * tc.heldout_per_group, (g + 1) * tc.heldout_per_group)
            sub = held_set.subset(idx)
            videos = sample(model, sched, seed=tc.seed * 1000 + g,
                            pose=sub.pose if mode != "none" else None,
                            ids=sub.ids if mode == "pose_id" else None,
                            batch=len(idx))
            for j, k in enumerate(idx):
                s[g, j] = score_video(videos[j], held_scenes[k].trajectories, 2)
                if mode == "pose_id":
                    # derangement within the group: compare against the next scene's trajectory
                    other = idx[(j + 1) % len(idx)]
                    shuffled[g, j] = score_video(videos[j], held_scenes[other].trajectories, 2)
        sample_secs += time.perf_counter() - t0
        scores[mode] = s
        log.info("%s medians per group: %s", mode, np.median(s, axis=1))
    return TrendResult(scores, shuffled, losses, secs, sample_secs)
