"""Seeded top-down 2D physics for pool, domino and MOVi-style scenes.

Integration uses a fixed timestep (``substeps`` per frame), impulse-based
circle-circle collision response and exponential friction decay. Velocities
are in pixels per frame. All randomness comes from per-object streams
derived from one root seed, so adding an object does not change the draws
of the others.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .condenc import assign_palette
from .raster import draw_disc
from .trajgeom import Trajectory, TrajectorySet

REST_SPEED = 1e-2
MAX_PLACEMENT_TRIES = 100
OBJECT_LIMITS = {"pool": (1, 16), "domino": (1, 20), "movi2d": (1, 10)}
_SCENARIO_CODE = {"pool": 1, "domino": 2, "movi2d": 3}

MOVING, RESTING, CAPTURED, EXITED = "moving", "resting", "captured", "exited"


@dataclass
class Body:
    object_id: int
    position: np.ndarray
    velocity: np.ndarray
    radius: float
    mass: float = 1.0
    state: str = MOVING
    color: tuple[int, int, int] = (255, 255, 255)

    def __post_init__(self) -> None:
        self.position = np.asarray(self.position, dtype=np.float64).copy()
        self.velocity = np.asarray(self.velocity, dtype=np.float64).copy()
        if self.radius <= 0:
            raise ValueError(f"body {self.object_id}: radius must be positive")
        if self.mass <= 0:
            raise ValueError(f"body {self.object_id}: mass must be positive")

    @property
    def active(self) -> bool:
        return self.state in (MOVING, RESTING)


@dataclass(frozen=True)
class SceneConfig:
    scenario: str = "pool"
    n_objects: int = 4
    frame_count: int = 32
    width: int = 64
    height: int = 64
    substeps: int = 8
    restitution: float = 0.95
    friction: float = 0.005  # fractional velocity decay per substep
    seed: int = 0
    radius: float = 3.0
    max_speed: float = 4.0
    pockets: bool = True
    pocket_radius: float | None = None
    # domino parameters
    domino_spacing: float = 2.5
    domino_height: float = 5.0
    domino_thickness: float = 1.0
    topple_frames: int = 8
    chain_start: int | None = 0

    def __post_init__(self) -> None:
        if self.scenario not in OBJECT_LIMITS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        lo, hi = OBJECT_LIMITS[self.scenario]
        if not lo <= self.n_objects <= hi:
            raise ValueError(
                f"{self.scenario} supports {lo}..{hi} objects, got {self.n_objects}"
            )
        if self.substeps < 1:
            raise ValueError("substeps must be >= 1")
        if self.frame_count < 1:
            raise ValueError("frame_count must be >= 1")
        if not 0.0 <= self.restitution <= 1.0:
            raise ValueError("restitution must lie in [0, 1]")
        if self.friction < 0 or self.friction >= 1:
            raise ValueError("friction must lie in [0, 1)")


@dataclass(frozen=True)
class CollisionAudit:
    """Momentum and kinetic energy of one colliding pair, before and after."""

    frame: int
    ids: tuple[int, int]
    momentum_before: tuple[float, float]
    momentum_after: tuple[float, float]
    energy_before: float
    energy_after: float


@dataclass(frozen=True)
class Scene:
    config: SceneConfig
    trajectories: TrajectorySet
    events: tuple[tuple[int, str, tuple[int, ...]], ...]
    radii: tuple[float, ...]
    colors: tuple[tuple[int, int, int], ...]
    audit: tuple[CollisionAudit, ...] = field(default=(), repr=False)


def object_rng(seed: int, scenario: str, index: int, purpose: int = 0) -> np.random.Generator:
    """Independent stream for one object, derived from the root seed."""
    ss = np.random.SeedSequence(seed, spawn_key=(_SCENARIO_CODE[scenario], index, purpose))
    return np.random.Generator(np.random.PCG64(ss))


def palette_colors(n: int) -> list[tuple[int, int, int]]:
    return [tuple(int(c) for c in row) for row in assign_palette(max(n, 1)).as_uint8()[:n]]


# -- collision primitives -----------------------------------------------------


def resolve_pair(a: Body, b: Body, restitution: float) -> bool:
    """Apply a normal impulse if ``a`` and ``b`` overlap and approach.

    Returns True when an impulse was applied.
    """
    d = b.position - a.position
    dist = math.hypot(d[0], d[1])
    if dist >= a.radius + b.radius:
        return False
    n = d / dist if dist > 0 else np.array([1.0, 0.0])
    vn = float(np.dot(b.velocity - a.velocity, n))
    if vn >= 0:
        return False
    inv_a, inv_b = 1.0 / a.mass, 1.0 / b.mass
    j = -(1.0 + restitution) * vn / (inv_a + inv_b)
    a.velocity = a.velocity - (j * inv_a) * n
    b.velocity = b.velocity + (j * inv_b) * n
    return True


def separate_pair(a: Body, b: Body) -> None:
    d = b.position - a.position
    dist = math.hypot(d[0], d[1])
    overlap = a.radius + b.radius - dist
    if overlap <= 0:
        return
    n = d / dist if dist > 0 else np.array([1.0, 0.0])
    inv_a, inv_b = 1.0 / a.mass, 1.0 / b.mass
    push = overlap / (inv_a + inv_b)
    a.position = a.position - (push * inv_a) * n
    b.position = b.position + (push * inv_b) * n


def _momentum(a: Body, b: Body) -> tuple[float, float]:
    p = a.mass * a.velocity + b.mass * b.velocity
    return float(p[0]), float(p[1])


def _energy(a: Body, b: Body) -> float:
    return 0.5 * (a.mass * float(a.velocity @ a.velocity) + b.mass * float(b.velocity @ b.velocity))


# -- generic stepping ---------------------------------------------------------


class _World:
    def __init__(self, cfg: SceneConfig, bodies: list[Body], walls: bool,
                 pockets: Sequence[tuple[float, float]], pocket_radius: float,
                 exit_on_leave: bool):
        self.cfg = cfg
        self.bodies = bodies
        self.walls = walls
        self.pockets = [np.asarray(p, float) for p in pockets]
        self.pocket_radius = pocket_radius
        self.exit_on_leave = exit_on_leave
        self.events: list[tuple[int, str, tuple[int, ...]]] = []
        self.audit: list[CollisionAudit] = []

    def _event(self, frame: int, kind: str, ids: tuple[int, ...]) -> None:
        ev = (frame, kind, ids)
        if ev not in self.events:
            self.events.append(ev)

    def _reflect_walls(self, b: Body) -> None:
        e = self.cfg.restitution
        hi = (self.cfg.width - 1 - b.radius, self.cfg.height - 1 - b.radius)
        for axis in (0, 1):
            lo_b, hi_b = b.radius, hi[axis]
            p = b.position[axis]
            if p < lo_b:
                b.position[axis] = lo_b + e * (lo_b - p)
                if b.velocity[axis] < 0:
                    b.velocity[axis] = -e * b.velocity[axis]
            elif p > hi_b:
                b.position[axis] = hi_b - e * (p - hi_b)
                if b.velocity[axis] > 0:
                    b.velocity[axis] = -e * b.velocity[axis]
            b.position[axis] = min(max(b.position[axis], lo_b), hi_b)

    def substep(self, frame: int) -> None:
        cfg = self.cfg
        dt = 1.0 / cfg.substeps
        active = [b for b in self.bodies if b.active]
        for b in active:
            if b.state == MOVING:
                b.position = b.position + b.velocity * dt
        for i, a in enumerate(active):
            for b in active[i + 1:]:
                p0, e0 = _momentum(a, b), _energy(a, b)
                if resolve_pair(a, b, cfg.restitution):
                    for body in (a, b):
                        if body.state == RESTING:
                            body.state = MOVING
                    self.audit.append(
                        CollisionAudit(frame, (a.object_id, b.object_id), p0,
                                       _momentum(a, b), e0, _energy(a, b))
                    )
                    self._event(frame, "collision", (a.object_id, b.object_id))
        # a few relaxation passes remove residual overlap without touching velocities
        for _ in range(4):
            for i, a in enumerate(active):
                for b in active[i + 1:]:
                    separate_pair(a, b)
            if self.walls:
                for b in active:
                    self._reflect_walls(b)
        for b in active:
            if b.state == MOVING and cfg.friction > 0:
                b.velocity = b.velocity * (1.0 - cfg.friction)
            if b.state == MOVING and math.hypot(*b.velocity) < REST_SPEED:
                b.velocity = np.zeros(2)
                b.state = RESTING
                self._event(frame, "rest", (b.object_id,))
            for pk in self.pockets:
                if math.hypot(*(b.position - pk)) <= self.pocket_radius:
                    b.state = CAPTURED
                    b.velocity = np.zeros(2)
                    self._event(frame, "pocket", (b.object_id,))
                    break
            if self.exit_on_leave and b.state in (MOVING, RESTING):
                x, y = b.position
                if not (0 <= x < cfg.width and 0 <= y < cfg.height):
                    b.state = EXITED
                    self._event(frame, "exit", (b.object_id,))

    def run(self) -> tuple[np.ndarray, np.ndarray]:
        cfg = self.cfg
        n, f = len(self.bodies), cfg.frame_count
        pts = np.zeros((n, f, 2))
        vis = np.zeros((n, f), dtype=bool)
        for frame in range(f):
            if frame > 0:
                for _ in range(cfg.substeps):
                    self.substep(frame)
            for k, b in enumerate(self.bodies):
                pts[k, frame] = b.position
                vis[k, frame] = b.active
        np.clip(pts[..., 0], 0, cfg.width - 1, out=pts[..., 0])
        np.clip(pts[..., 1], 0, cfg.height - 1, out=pts[..., 1])
        return pts, vis


def _make_scene(cfg: SceneConfig, bodies: list[Body], pts, vis, events, audit, cls: str) -> Scene:
    trajs = tuple(
        Trajectory(b.object_id, pts[k], vis[k], cls) for k, b in enumerate(bodies)
    )
    events = tuple(sorted(events, key=lambda e: (e[0], e[1], e[2])))
    ts = TrajectorySet(trajs, cfg.frame_count, cfg.width, cfg.height, events)
    return Scene(cfg, ts, events, tuple(b.radius for b in bodies),
                 tuple(b.color for b in bodies), tuple(audit))


def _place(cfg: SceneConfig, k: int, rng: np.random.Generator, placed: list[Body],
           margin: float, forbidden: Sequence[np.ndarray] = (), forbidden_r: float = 0.0) -> np.ndarray:
    r = cfg.radius
    for _ in range(MAX_PLACEMENT_TRIES):
        p = np.array([rng.uniform(margin, cfg.width - 1 - margin),
                      rng.uniform(margin, cfg.height - 1 - margin)])
        if any(math.hypot(*(p - b.position)) < r + b.radius + 0.5 for b in placed):
            continue
        if any(math.hypot(*(p - q)) <= forbidden_r for q in forbidden):
            continue
        return p
    raise ValueError("cannot place bodies")


def pocket_positions(cfg: SceneConfig) -> list[tuple[float, float]]:
    w, h = cfg.width - 1, cfg.height - 1
    return [(0, 0), (w / 2, 0), (w, 0), (0, h), (w / 2, h), (w, h)]


def simulate_pool(cfg: SceneConfig, bodies: list[Body] | None = None) -> Scene:
    """Pool table: cushions, friction, pockets.

    Without explicit ``bodies`` a break is generated: ball 0 is the cue ball
    aimed at a randomly chosen other ball, the rest start at rest.
    """
    if cfg.scenario != "pool":
        raise ValueError(f"simulate_pool needs scenario 'pool', got {cfg.scenario!r}")
    pockets = pocket_positions(cfg) if cfg.pockets else []
    pocket_r = cfg.pocket_radius if cfg.pocket_radius is not None else 2.0 * cfg.radius
    if bodies is None:
        colors = palette_colors(cfg.n_objects)
        bodies = []
        for k in range(cfg.n_objects):
            rng = object_rng(cfg.seed, "pool", k)
            pos = _place(cfg, k, rng, bodies, cfg.radius + 1, pockets, pocket_r + cfg.radius)
            bodies.append(Body(k, pos, np.zeros(2), cfg.radius, 1.0, RESTING, colors[k]))
        cue = bodies[0]
        rng = object_rng(cfg.seed, "pool", 0, purpose=1)
        if len(bodies) > 1:
            target = bodies[1 + int(rng.integers(len(bodies) - 1))].position
            aim = target - cue.position
            aim = aim / math.hypot(*aim)
        else:
            ang = rng.uniform(0, 2 * math.pi)
            aim = np.array([math.cos(ang), math.sin(ang)])
        cue.velocity = aim * cfg.max_speed
        cue.state = MOVING
    else:
        bodies = [Body(b.object_id, b.position, b.velocity, b.radius, b.mass,
                       MOVING if np.any(b.velocity) else RESTING, b.color) for b in bodies]
    world = _World(cfg, bodies, walls=True, pockets=pockets, pocket_radius=pocket_r,
                   exit_on_leave=False)
    pts, vis = world.run()
    return _make_scene(cfg, bodies, pts, vis, world.events, world.audit, "ball")


def simulate_movi2d(cfg: SceneConfig, bodies: list[Body] | None = None) -> Scene:
    """Open field: no walls; bodies leaving the frame exit, friction brings others to rest."""
    if cfg.scenario != "movi2d":
        raise ValueError(f"simulate_movi2d needs scenario 'movi2d', got {cfg.scenario!r}")
    if bodies is None:
        colors = palette_colors(cfg.n_objects)
        bodies = []
        for k in range(cfg.n_objects):
            rng = object_rng(cfg.seed, "movi2d", k)
            radius = cfg.radius * rng.uniform(0.7, 1.3)
            pos = _place(cfg, k, rng, bodies, cfg.radius * 1.5)
            ang = rng.uniform(0, 2 * math.pi)
            speed = cfg.max_speed * rng.uniform(0.2, 1.0)
            vel = speed * np.array([math.cos(ang), math.sin(ang)])
            bodies.append(Body(k, pos, vel, radius, radius**2, MOVING, colors[k]))
    else:
        bodies = [Body(b.object_id, b.position, b.velocity, b.radius, b.mass,
                       MOVING if np.any(b.velocity) else RESTING, b.color) for b in bodies]
    world = _World(cfg, bodies, walls=False, pockets=(), pocket_radius=0.0,
                   exit_on_leave=True)
    pts, vis = world.run()
    return _make_scene(cfg, bodies, pts, vis, world.events, world.audit, "disc")


# -- dominoes -----------------------------------------------------------------


def contact_delay(cfg: SceneConfig) -> int | None:
    """Frames between a domino's trigger and its successor's; None if it never reaches."""
    gap = cfg.domino_spacing - cfg.domino_thickness
    if gap > cfg.domino_height:
        return None
    threshold = math.asin(gap / cfg.domino_height) / (math.pi / 2)
    return max(1, math.ceil(threshold * cfg.topple_frames - 1e-12))


def _domino_path(cfg: SceneConfig) -> tuple[np.ndarray, np.ndarray]:
    """Base positions and unit headings along a seeded circular arc."""
    n, s = cfg.n_objects, cfg.domino_spacing
    margin = cfg.domino_height + 1
    rng = object_rng(cfg.seed, "domino", 0)
    for _ in range(MAX_PLACEMENT_TRIES):
        start = np.array([rng.uniform(margin, cfg.width - 1 - margin),
                          rng.uniform(margin, cfg.height - 1 - margin)])
        heading = rng.uniform(0, 2 * math.pi)
        curvature = rng.uniform(-1.0, 1.0) / max(cfg.width, cfg.height) * 2
        arc = np.arange(n) * s
        ang = heading + curvature * arc
        if abs(curvature) < 1e-9:
            pos = start + arc[:, None] * np.array([math.cos(heading), math.sin(heading)])
        else:
            pos = start + np.column_stack([
                (np.sin(ang) - math.sin(heading)) / curvature,
                (math.cos(heading) - np.cos(ang)) / curvature,
            ])
        tip = pos + cfg.domino_height * np.column_stack([np.cos(ang), np.sin(ang)])
        allp = np.vstack([pos, tip])
        if (allp.min() >= 0 and np.all(allp[:, 0] <= cfg.width - 1)
                and np.all(allp[:, 1] <= cfg.height - 1)):
            return pos, np.column_stack([np.cos(ang), np.sin(ang)])
    raise ValueError("cannot place bodies")


def simulate_domino(cfg: SceneConfig) -> Scene:
    """Kinematic domino chain.

    Domino k starts to topple ``contact_delay`` frames after domino k-1 and
    falls over ``topple_frames`` frames. The recorded point is the top-down
    projection of the top-edge midpoint, which slides from the base by up to
    ``domino_height`` along the path heading.
    """
    if cfg.scenario != "domino":
        raise ValueError(f"simulate_domino needs scenario 'domino', got {cfg.scenario!r}")
    if cfg.domino_spacing < cfg.domino_thickness:
        raise ValueError("invalid spacing")
    base, heading = _domino_path(cfg)
    delay = contact_delay(cfg)
    n, f = cfg.n_objects, cfg.frame_count
    triggers: list[int | None] = [None] * n
    if cfg.chain_start is not None:
        triggers[0] = cfg.chain_start
        for k in range(1, n):
            if delay is None:
                break
            triggers[k] = triggers[k - 1] + delay
    frames = np.arange(f)
    pts = np.zeros((n, f, 2))
    events = []
    for k in range(n):
        phase = np.zeros(f)
        if triggers[k] is not None:
            phase = np.clip((frames - triggers[k]) / cfg.topple_frames, 0.0, 1.0)
            if triggers[k] < f:
                events.append((triggers[k], "topple", (k,)))
        shift = cfg.domino_height * np.sin(phase * math.pi / 2)
        pts[k] = base[k] + shift[:, None] * heading[k]
    radius = max(1.0, cfg.domino_thickness)
    colors = palette_colors(n)
    bodies = [Body(k, base[k], np.zeros(2), radius, 1.0, RESTING, colors[k]) for k in range(n)]
    vis = np.ones((n, f), dtype=bool)
    return _make_scene(cfg, bodies, pts, vis, events, [], "domino")


def simulate(cfg: SceneConfig) -> Scene:
    return {"pool": simulate_pool, "domino": simulate_domino,
            "movi2d": simulate_movi2d}[cfg.scenario](cfg)


# -- rendering ----------------------------------------------------------------


def render_trajectories(ts: TrajectorySet, radii: Sequence[float],
                        colors: Sequence[tuple[int, int, int]],
                        resolution: tuple[int, int] | None = None) -> np.ndarray:
    """(F, H, W, 3) uint8 frames: visible objects as hard discs on black.

    ``radii`` and ``colors`` are indexed like ``ts.trajectories``; higher
    object ids are drawn last.
    """
    w, h = resolution if resolution is not None else ts.dims
    sx, sy = w / ts.width, h / ts.height
    frames = np.zeros((ts.frame_count, h, w, 3), dtype=np.uint8)
    order = sorted(range(len(ts.trajectories)), key=lambda k: ts.trajectories[k].object_id)
    for k in order:
        t = ts.trajectories[k]
        r = radii[k] * min(sx, sy)
        for i in np.flatnonzero(t.visible):
            x, y = t.points[i]
            draw_disc(frames[i], x * sx, y * sy, r, colors[k])
    return frames


def render_scene(scene: Scene, resolution: tuple[int, int] | None = None) -> np.ndarray:
    return render_trajectories(scene.trajectories, scene.radii, scene.colors, resolution)
