"""Acceptance gate: one test per headline criterion, each reporting PASS or FAIL."""

import itertools
import json
import math
import time

import numpy as np

from trajgen.cli import run
from trajgen.condenc import assign_palette, draw_object_id, draw_sparse_pose, gaussian_blur
from trajgen.evalkit import extract_trajectories_toy, fill_gaps, hungarian, mtem_score
from trajgen.physsim import SceneConfig, simulate, render_scene
from trajgen.raster import draw_disc
from trajgen.toydit import autodiff as ad
from trajgen.toydit.ablation import TrendConfig, run_trend
from trajgen.toydit.diffusion import Adam, Batch, NoiseSchedule, add_noise, training_step
from trajgen.toydit.model import DitConfig, ToyDiT, patchify
from trajgen.trajgeom import Trajectory, TrajectorySet

from test_toydit import MINI, mini_inputs, numeric_grad, random_params, rel_err


def brute_force(cost):
    r, c = cost.shape
    if r <= c:
        return min(sum(cost[i, p[i]] for i in range(r)) for p in itertools.permutations(range(c), r))
    return min(sum(cost[p[j], j] for j in range(c)) for p in itertools.permutations(range(r), c))


def test_hungarian_optimality(criterion):
    rng = np.random.default_rng(2024)
    wrong = 0
    for k in range(500):
        shape = (5, 7) if k % 5 == 0 else tuple(rng.integers(1, 8, 2)) if k % 5 == 1 else (rng.integers(1, 8),) * 2
        cost = rng.integers(0, 100, shape).astype(float)
        wrong += hungarian(cost).total_cost != brute_force(cost)
    big = rng.random((500, 500))
    t0 = time.perf_counter()
    m = hungarian(big)
    elapsed = time.perf_counter() - t0
    ok = wrong == 0 and elapsed < 5.0 and len(m.pairs) == 500
    criterion("Hungarian optimality", ok, f"{wrong}/500 suboptimal, n=500 in {elapsed:.2f}s")


def line_set(offset=(0.0, 0.0), w=30, h=40, ids=(0, 1, 2), frames=12, seed=0):
    rng = np.random.default_rng(seed)
    trajs = []
    for oid in ids:
        pts = rng.uniform(0, min(w, h), (frames, 2)) + np.asarray(offset)
        vis = rng.random(frames) > 0.2
        vis[0] = True
        trajs.append(Trajectory(oid, pts, vis))
    return TrajectorySet(tuple(trajs), frames, w, h)


def test_mtem_suite(criterion):
    problems = []
    for seed in range(20):
        a = fill_gaps(line_set(seed=seed))
        if mtem_score(a, a).normalized_percent != 0.0:
            problems.append(f"self-score seed {seed}")
        shifted = TrajectorySet(tuple(t.translated(3.0, 4.0) for t in a), a.frame_count, a.width, a.height)
        if abs(mtem_score(a, shifted).normalized_percent - 10.0) > 1e-9:
            problems.append(f"offset seed {seed}")
        b = fill_gaps(line_set(seed=seed + 100))
        perm = TrajectorySet(tuple(Trajectory(9 - t.object_id, t.points, t.visible) for t in reversed(b.trajectories)),
                             b.frame_count, b.width, b.height)
        ab, ba = mtem_score(a, b).normalized_percent, mtem_score(b, a).normalized_percent
        if abs(mtem_score(a, perm).normalized_percent - ab) > 1e-9:
            problems.append(f"permutation seed {seed}")
        if abs(ab - ba) > 1e-9:
            problems.append(f"symmetry seed {seed}")
        raw = line_set(seed=seed + 200)
        once = fill_gaps(raw)
        twice = fill_gaps(once)
        if any(not np.array_equal(x.points, y.points) for x, y in zip(once, twice)):
            problems.append(f"gap-fill idempotence seed {seed}")
    criterion("MTEM correctness suite", not problems, ", ".join(problems) or "20 seeds")


def occluded(scene):
    ts = scene.trajectories
    for i in range(ts.frame_count):
        cover = np.zeros((ts.height, ts.width, 1), int)
        for k, t in enumerate(ts.trajectories):
            if t.visible[i]:
                disc = np.zeros_like(cover)
                draw_disc(disc, *t.points[i], scene.radii[k], 1)
                cover += disc
        if cover.max() > 1:
            return True
    return False


def round_trip(n, count=10):
    scores = []
    for seed in itertools.count():
        scene = simulate(SceneConfig("pool", n, 24, 64, 64, seed=seed))
        if occluded(scene):
            continue
        ex = extract_trajectories_toy(render_scene(scene), assign_palette(n))
        scores.append(mtem_score(fill_gaps(scene.trajectories), fill_gaps(ex)).normalized_percent)
        if len(scores) == count:
            return np.array(scores)


def test_round_trip_fidelity(criterion):
    single, pool8 = round_trip(1), round_trip(8)
    ok = single.max() < 1.0 and pool8.max() < 3.0
    criterion("Round-trip fidelity", ok, f"worst single {single.max():.3f}%, worst 8-ball {pool8.max():.3f}%")


def scene_fingerprint(scene):
    ts = scene.trajectories
    return b"".join(t.points.tobytes() + t.visible.tobytes() for t in ts), scene.events


def test_physics_conservation(criterion):
    worst_p = worst_e = 0.0
    collisions = 0
    for seed in range(10):
        cfg = SceneConfig("pool", 8, 40, 64, 64, seed=seed, friction=0.0, restitution=1.0,
                          pockets=False, max_speed=5.0)
        for c in simulate(cfg).audit:
            p0, p1 = np.array(c.momentum_before), np.array(c.momentum_after)
            worst_p = max(worst_p, np.linalg.norm(p1 - p0) / max(np.linalg.norm(p0), 1e-300))
            worst_e = max(worst_e, abs(c.energy_after - c.energy_before) / c.energy_before)
            collisions += 1
    deterministic = all(
        scene_fingerprint(simulate(cfg)) == scene_fingerprint(simulate(cfg))
        for cfg in (SceneConfig("pool", 8, seed=3), SceneConfig("movi2d", 10, seed=4),
                    SceneConfig("domino", 12, seed=5))
    )
    ok = collisions > 0 and worst_p <= 1e-9 and worst_e <= 1e-6 and deterministic
    criterion("Physics conservation", ok,
              f"{collisions} collisions, momentum {worst_p:.1e}, energy {worst_e:.1e}, deterministic={deterministic}")


def random_scenes(count=20):
    kinds = [("pool", 4), ("movi2d", 6), ("domino", 8), ("pool", 2)]
    return [simulate(SceneConfig(kinds[i % 4][0], kinds[i % 4][1], 12, 48, 48, seed=i)) for i in range(count)]


def id_colors_constant(ts, frames, palette, r):
    """Pixels owned by object k alone (not covered by a later disc) carry exactly palette[k]."""
    seen = {t.object_id: set() for t in ts}
    order = sorted(ts, key=lambda t: t.object_id)
    for i in range(ts.frame_count):
        for k, t in enumerate(order):
            if not t.visible[i]:
                continue
            own = np.zeros((ts.height, ts.width, 1), bool)
            draw_disc(own, *t.points[i], r, True)
            for later in order[k + 1:]:
                if later.visible[i]:
                    draw_disc(own, *later.points[i], r, False)
            seen[t.object_id] |= {tuple(c) for c in frames[i][own[..., 0]]}
    return all(s == {palette.colors[oid]} or not s for oid, s in seen.items())


def test_conditioning_contracts(criterion):
    problems = []
    for n, scene in enumerate(random_scenes()):
        ts = scene.trajectories
        palette = assign_palette(max(t.object_id for t in ts) + 1)
        ids = draw_object_id(ts, palette, point_radius=2).frames
        if not id_colors_constant(ts, ids, palette, 2):
            problems.append(f"id colors scene {n}")
        still = TrajectorySet(tuple(Trajectory(t.object_id, np.repeat(t.points[:1], ts.frame_count, 0),
                                               np.ones(ts.frame_count, bool)) for t in ts),
                              ts.frame_count, ts.width, ts.height)
        if draw_sparse_pose(still, v_max=3.0).frames.any():
            problems.append(f"static pose scene {n}")
        sharp = draw_sparse_pose(ts, v_max=3.0, point_radius=2, sigma=0).frames
        for f in sharp:
            blurred = gaussian_blur(f, 2.0)
            if abs(blurred.sum() - f.sum()) > 1e-6 * max(f.sum(), 1.0):
                problems.append(f"blur mass scene {n}")
                break
    criterion("Conditioning-map contracts", not problems, ", ".join(problems) or "20 scenes")


def test_autodiff_gradients(criterion):
    model = ToyDiT(MINI, random_params(MINI))
    z, pose, ids, eps = mini_inputs()
    t = np.array([3, 17])

    def loss_value():
        return float(ad.mean_square_error(model.forward(z, t, pose, ids), ad.Tensor(eps)).data)

    ad.backward(ad.mean_square_error(model.forward(z, t, pose, ids), ad.Tensor(eps)))
    rng = np.random.default_rng(5)
    worst, worst_name = 0.0, ""
    for name, p in model.params.items():
        size = p.data.size
        idx = np.arange(size) if size <= 24 else rng.choice(size, 24, replace=False)
        num = numeric_grad(loss_value, p.data, idx=idx)
        err = rel_err(p.grad.reshape(-1)[idx], num.reshape(-1)[idx], floor=1e-7)
        if err > worst:
            worst, worst_name = err, name

    rng = np.random.default_rng(3)
    tokens_ok = True
    for _ in range(20):
        k = int(rng.choice([1, 2, 4]))
        n, c, width = rng.integers(1, 6), rng.integers(1, 5), rng.integers(1, 9)
        h, w = k * rng.integers(1, 5), k * rng.integers(1, 5)
        tok = patchify(np.zeros((n, h, w, c)), k, np.zeros((k * k * c, width)))
        tokens_ok &= tok.shape[0] * tok.shape[1] == n * h * w // (k * k)

    x = np.random.default_rng(8).standard_normal((1, 2, 4, 8))
    y = x.copy()
    y[0, 1] += 1.0
    spatial = model.spatial_block(ad.Tensor(x), 0).data[0, 0] - model.spatial_block(ad.Tensor(y), 0).data[0, 0]
    y = x.copy()
    y[0, :, 2] += 1.0
    a, b = model.temporal_block(ad.Tensor(x), 0).data[0], model.temporal_block(ad.Tensor(y), 0).data[0]
    temporal = a[:, [0, 1, 3]] - b[:, [0, 1, 3]]
    local = np.abs(spatial).max() <= 1e-12 and np.abs(temporal).max() <= 1e-12

    ok = worst <= 1e-4 and tokens_ok and local
    criterion("Autodiff gradient checks", ok,
              f"{len(model.params)} tensors, worst {worst:.1e} ({worst_name}), tokens={tokens_ok}, locality={local}")


def test_noising_contracts(criterion):
    sched = NoiseSchedule.linear(200)
    rng = np.random.default_rng(0)
    z, eps = rng.standard_normal((2, 2, 4, 8, 8, 4))
    identity = np.array_equal(add_noise(z, 0, eps, sched), z)
    errors = []
    for t in (20, 100, 170):
        zz = 2.0 * rng.standard_normal(20_000)
        ab = sched.alpha_bar[t]
        expect = 4 * ab + (1 - ab)
        errors.append(float(abs(add_noise(zz, t, rng.standard_normal(20_000), sched).var() / expect - 1)))
    model = ToyDiT(DitConfig(seed=3))
    shape = (2, model.cfg.frames, model.cfg.latent_size, model.cfg.latent_size, model.cfg.channels)
    batch = Batch(rng.standard_normal(shape).astype(np.float32), rng.random(shape), rng.random(shape))
    loss = training_step(model, Adam(1e-3), batch, sched, np.random.default_rng(1))
    ok = identity and max(errors) <= 0.05 and abs(loss - 1.0) <= 0.2
    criterion("Noising contracts", ok,
              f"identity={identity}, variance errors {[round(e, 4) for e in errors]}, initial loss {loss:.3f}")


def test_trend_at_toy_scale(criterion):
    result = run_trend(TrendConfig())
    med = result.medians()
    order = result.ordering_holds()
    beats = result.true_beats_shuffled()
    train_total = sum(result.train_seconds.values())
    ok = order.sum() >= 4 and beats.sum() >= 4 and train_total <= 1800
    detail = (f"ordering {int(order.sum())}/5, true beats shuffled {int(beats.sum())}/5, "
              f"training {train_total / 60:.1f} min; group medians "
              + "; ".join(f"{k} {np.round(v, 1).tolist()}" for k, v in med.items())
              + f"; shuffled {np.round(np.median(result.shuffled, axis=1), 1).tolist()}")
    criterion("Conditioning trend at toy scale", ok, detail)


TINY = """\
train_scenes = 4
heldout = 2
size = 16
frames = 4
width = 16
blocks = 1
heads = 2
diffusion_steps = 10
train_steps = 3
batch = 2
"""


def test_pipeline_determinism(criterion, tmp_path):
    cfg = tmp_path / "tiny.cfg"
    cfg.write_text(TINY)
    docs = []
    for name in ("a", "b"):
        rc = run(["pipeline", "--config", str(cfg), "--seed", "11", "--out-dir", str(tmp_path / name)])
        assert rc == 0
        doc = json.loads((tmp_path / name / "summary.json").read_text())
        doc.pop("duration_s")
        docs.append(doc)
    ok = docs[0] == docs[1] and math.isfinite(docs[0]["mtem_percent"])
    criterion("End-to-end determinism", ok, f"mtem_percent {docs[0]['mtem_percent']:.3f}")
