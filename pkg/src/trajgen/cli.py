"""Command-line entry point: simulate, encode, train, sample, evaluate, pipeline, verify.

Every subcommand writes a ``manifest.json`` into its output directory with
the resolved parameters, FNV-1a 64 digests of inputs and outputs and the
wall-clock duration. Files are written with a ``.partial`` suffix and
renamed on success, so a failed run never leaves a half-written file under
its final name.

Exit codes: 0 success, 1 domain error, 2 usage error.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import logging
import math
import os
import shutil
import sys
import time
import zlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterator, Sequence

import numpy as np

from . import __version__
from .condenc import assign_palette, draw_object_id, draw_sparse_pose
from .evalkit import (
    extract_trajectories_toy,
    fill_gaps,
    ingest_detections,
    mtem_score,
    psnr,
    psnr_for_json,
    read_detections_csv,
    ssim,
)
from .physsim import SceneConfig, render_scene, simulate
from .raster import read_frames, write_frames
from .toydit.ablation import near_crossing_scene, train
from .toydit.checkpoint import CheckpointError, load_model, read_config, write_checkpoint
from .toydit.data import EncodeParams, build_video_set_from_trajsets, condition_latents
from .toydit.diffusion import NoiseSchedule, sample as sample_video
from .toydit.model import DitConfig
from .trajgeom import TrajectorySet, load_trajset, save_trajset

log = logging.getLogger("trajgen")

TOOL = "trajgen"
MANIFEST = "manifest.json"
PARTIAL = ".partial"
THREADS_ENV = "INTRAGEN_THREADS"


class UsageError(Exception):
    """Bad invocation: unknown keys, unparseable values, conflicting options."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse prints usage and exits 2
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


# -- digests and manifests ------------------------------------------------------------

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK
    return h


def file_digest(path: str | Path) -> str:
    return f"{fnv1a64(Path(path).read_bytes()):016x}"


@dataclass
class RunRecord:
    subcommand: str
    params: dict[str, Any]
    inputs: list[Path]
    outputs: list[Path]
    started: float

    def to_dict(self, base: Path) -> dict:
        files = sorted(_expand(self.outputs))
        return {
            "tool": TOOL,
            "version": __version__,
            "subcommand": self.subcommand,
            "params": self.params,
            "inputs": {str(p.resolve()): file_digest(p) for p in sorted(_expand(self.inputs))},
            "outputs": {os.path.relpath(p, base): file_digest(p) for p in files},
            "duration_s": round(time.perf_counter() - self.started, 3),
        }


def _expand(paths: Sequence[Path]) -> set[Path]:
    out = set()
    for p in paths:
        if p.is_dir():
            out.update(q for q in p.rglob("*") if q.is_file() and q.name != MANIFEST)
        elif p.is_file():
            out.add(p)
    return out


def write_manifest(out_dir: Path, record: RunRecord) -> Path:
    """Append this run to ``out_dir/manifest.json`` (one manifest per directory)."""
    path = out_dir / MANIFEST
    runs = []
    if path.exists():
        try:
            runs = json.loads(path.read_text(encoding="utf-8"))["runs"]
        except (ValueError, KeyError, TypeError):
            log.warning("replacing unreadable manifest %s", path)
    runs.append(record.to_dict(out_dir))
    with staged(path) as tmp:
        tmp.write_text(json.dumps({"runs": runs}, indent=2) + "\n", encoding="utf-8")
    return path


def verify_manifest(path: Path) -> list[str]:
    """Problems found when re-digesting inputs and outputs (empty means intact)."""
    doc = json.loads(path.read_text(encoding="utf-8"))
    base = path.parent
    expected: dict[Path, str] = {}
    for run in doc["runs"]:
        for name, digest in run["inputs"].items():
            expected[Path(name)] = digest
        for name, digest in run["outputs"].items():
            expected[base / name] = digest
    problems = []
    for p, digest in sorted(expected.items()):
        if not p.is_file():
            problems.append(f"missing: {p}")
        elif file_digest(p) != digest:
            problems.append(f"digest mismatch: {p}")
    return problems


@contextlib.contextmanager
def staged(path: Path) -> Iterator[Path]:
    """Yield ``path.partial``; rename it onto ``path`` only if the block succeeds."""
    tmp = path.with_name(path.name + PARTIAL)
    _remove(tmp)
    yield tmp
    _remove(path)
    os.replace(tmp, path)


def _remove(p: Path) -> None:
    if p.is_dir():
        shutil.rmtree(p)
    elif p.exists():
        p.unlink()


# -- parameters -------------------------------------------------------------------


def _opt_float(text: str) -> float | None:
    return None if str(text).lower() in ("none", "auto") else float(text)


@dataclass(frozen=True)
class Opt:
    kind: Callable[[str], Any]
    default: Any
    help: str


SIM_OPTS = {
    "scenario": Opt(str, "pool", "pool, domino or movi2d"),
    "objects": Opt(int, 4, "object count"),
    "frames": Opt(int, 32, "frame count"),
    "width": Opt(int, 64, "frame width in pixels"),
    "height": Opt(int, 64, "frame height in pixels"),
    "seed": Opt(int, 0, "root seed"),
    "substeps": Opt(int, 8, "integration substeps per frame"),
    "restitution": Opt(float, 0.95, "collision restitution"),
    "friction": Opt(float, 0.005, "velocity decay per substep"),
    "radius": Opt(float, 3.0, "body radius in pixels"),
    "max_speed": Opt(float, 4.0, "initial speed scale, pixels per frame"),
}

ENC_OPTS = {
    "sigma": Opt(float, 2.0, "sparse-pose blur sigma"),
    "v_max": Opt(_opt_float, 3.0, "speed mapped to full saturation ('auto' for data-driven)"),
    "point_radius": Opt(_opt_float, None, "drawn point radius ('auto' for size-based)"),
}

MODEL_OPTS = {
    "patch": Opt(int, 2, "patch size k"),
    "width": Opt(int, 64, "token width L"),
    "blocks": Opt(int, 4, "transformer blocks"),
    "heads": Opt(int, 4, "attention heads"),
    "diffusion_steps": Opt(int, 200, "diffusion steps T"),
    "lr": Opt(float, 1e-3, "Adam learning rate"),
    "cond": Opt(str, "pose_id", "none, pose or pose_id"),
    "mlp_ratio": Opt(int, 4, "MLP hidden width multiplier"),
}

TRAIN_OPTS = {
    **MODEL_OPTS,
    **ENC_OPTS,
    "train_steps": Opt(int, 1000, "optimizer steps"),
    "batch": Opt(int, 4, "videos per step"),
    "seed": Opt(int, 0, "root seed"),
    "radius": Opt(float, 2.0, "disc radius used to render stored scenes"),
    "pool": Opt(int, 2, "stub autoencoder pool factor"),
}

PIPE_OPTS = {
    **{k: v for k, v in TRAIN_OPTS.items() if k != "seed"},
    "train_scenes": Opt(int, 200, "training scenes"),
    "heldout": Opt(int, 4, "held-out scenes to sample and score"),
    "size": Opt(int, 32, "video width and height"),
    "frames": Opt(int, 16, "video frames"),
}


def resolve(args: argparse.Namespace, opts: dict[str, Opt]) -> dict[str, Any]:
    """Defaults, then config file, then explicit flags (flags win)."""
    values = {k: o.default for k, o in opts.items()}
    cfg_path = getattr(args, "config", None)
    if cfg_path is not None:
        try:
            cfg = read_config(cfg_path)
        except OSError as exc:
            raise UsageError(f"cannot read config {cfg_path}: {exc.strerror}") from None
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        for raw_key, text in cfg.items():
            key = raw_key.replace("-", "_")
            if key not in opts:
                raise UsageError(f"{cfg_path}: unknown key {raw_key!r}")
            values[key] = _convert(opts[key], text, f"{cfg_path}: {raw_key}")
    for key in opts:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = _convert(opts[key], flag, f"--{key.replace('_', '-')}")
    return values


def _convert(opt: Opt, text, where: str):
    try:
        return opt.kind(text)
    except (TypeError, ValueError):
        raise UsageError(f"{where}: invalid value {text!r}") from None


def _add_opts(p: argparse.ArgumentParser, opts: dict[str, Opt]) -> None:
    for key, o in opts.items():
        p.add_argument("--" + key.replace("_", "-"), dest=key, default=None,
                       help=f"{o.help} (default {o.default})")


def derive_seed(seed: int, name: str) -> int:
    """Independent 32-bit stream seed for one module, from the root seed."""
    ss = np.random.SeedSequence([seed, zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1)[0])


def worker_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


# -- shared steps -------------------------------------------------------------------


def _to_uint8(frames: np.ndarray) -> np.ndarray:
    return np.round(np.clip(frames, 0.0, 1.0) * 255.0).astype(np.uint8)


def _encode_params(p: dict) -> EncodeParams:
    return EncodeParams(sigma=p["sigma"], v_max=p["v_max"], point_radius=p["point_radius"],
                        pool=p.get("pool", 2))


def _palette_size(ts: TrajectorySet) -> int:
    return max(t.object_id for t in ts) + 1


def _write_conditions(ts: TrajectorySet, params: EncodeParams, out_dir: Path) -> None:
    pose = draw_sparse_pose(ts, params.v_max, params.point_radius, params.sigma)
    ids = draw_object_id(ts, assign_palette(_palette_size(ts)), params.point_radius)
    write_frames(out_dir / "pose", _to_uint8(pose.frames))
    write_frames(out_dir / "id", _to_uint8(ids.frames))


def _load_scene_dir(data_dir: Path) -> list[Path]:
    files = sorted(p for p in data_dir.glob("*.json") if p.name != MANIFEST)
    if not files:
        raise ValueError(f"no scene files (*.json) in {data_dir}")
    return files


def _model_config(p: dict, frames: int, latent_size: int, seed: int) -> DitConfig:
    return DitConfig(patch=p["patch"], width=p["width"], blocks=p["blocks"], heads=p["heads"],
                     steps=p["diffusion_steps"], lr=p["lr"], seed=seed, frames=frames,
                     latent_size=latent_size, cond=p["cond"], mlp_ratio=p["mlp_ratio"])


def _train_model(trajsets: list[TrajectorySet], p: dict, seed: int, ckpt: Path) -> None:
    first = trajsets[0]
    for ts in trajsets:
        if (ts.frame_count, ts.width, ts.height) != (first.frame_count, first.width, first.height):
            raise ValueError("training scenes must share frame count and dimensions")
    if first.width != first.height:
        raise ValueError(f"training videos must be square, got {first.width}x{first.height}")
    if first.width % p["pool"]:
        raise ValueError(f"video size {first.width} not divisible by pool {p['pool']}")
    if p["batch"] > len(trajsets):
        raise ValueError(f"batch {p['batch']} larger than the {len(trajsets)} training scenes")
    cfg = _model_config(p, first.frame_count, first.width // p["pool"], seed)
    videos = build_video_set_from_trajsets(trajsets, p["radius"], _encode_params(p))
    model, losses = train(cfg, videos, p["train_steps"], p["batch"], seed)
    log.info("final loss %.4f", losses[-1] if losses else float("nan"))
    extra = {"radius": p["radius"], "pool": p["pool"], "sigma": p["sigma"],
             "v_max": p["v_max"], "point_radius": p["point_radius"]}
    with staged(ckpt) as tmp:
        write_checkpoint(tmp, cfg, model.state(), extra)


def _sample_for(ckpt: Path, ts: TrajectorySet, seed: int) -> np.ndarray:
    model, extra = load_model(ckpt)
    cfg = model.cfg
    pool = int(extra.get("pool", 2))
    if ts.frame_count != cfg.frames or (ts.width, ts.height) != (cfg.latent_size * pool,) * 2:
        raise ValueError(
            f"trajectory {ts.width}x{ts.height}x{ts.frame_count} does not fit model "
            f"{cfg.latent_size * pool}x{cfg.latent_size * pool}x{cfg.frames}"
        )
    params = EncodeParams(sigma=float(extra.get("sigma", 2.0)), v_max=_opt_float(extra.get("v_max", "3.0")),
                          point_radius=_opt_float(extra.get("point_radius", "none")), pool=pool)
    pose, ids = condition_latents(ts, params, _palette_size(ts))
    video = sample_video(model, NoiseSchedule.linear(cfg.steps), seed,
                         pose=pose[None] if cfg.cond != "none" else None,
                         ids=ids[None] if cfg.cond == "pose_id" else None, batch=1, pool=pool)
    return _to_uint8(video[0])


def evaluate_sets(gt: TrajectorySet, gen: TrajectorySet, gen_frames=None, ref_frames=None) -> dict:
    """Summary dict; generated objects never detected are left unmatched."""
    gt = fill_gaps(gt)
    found = tuple(t for t in gen if t.visible.any())
    out: dict[str, Any] = {"mtem_percent": None, "mtem_raw": None, "psnr_db": None, "ssim": None,
                           "pairs": 0, "unmatched": len(gt), "pair_distances": [], "matched_pairs": []}
    if found:
        filled = fill_gaps(TrajectorySet(found, gen.frame_count, gen.width, gen.height))
        s = mtem_score(gt, filled)
        out.update(mtem_percent=s.normalized_percent, mtem_raw=s.raw_total, pairs=len(s.pairs.pairs),
                   unmatched=s.cardinality_penalty_count, pair_distances=list(s.pair_distances),
                   matched_pairs=[[gt.trajectories[i].object_id, filled.trajectories[j].object_id]
                                  for i, j in s.pairs.pairs])
    if gen_frames is not None and ref_frames is not None:
        a, b = np.asarray(gen_frames) / 255.0, np.asarray(ref_frames) / 255.0
        out["psnr_db"] = psnr_for_json(psnr(b, a))
        out["ssim"] = ssim(b, a)
    out["normalized_percent"] = out["mtem_percent"]
    out["raw_total"] = out["mtem_raw"]
    return out


def _write_json(path: Path, doc: dict) -> None:
    with staged(path) as tmp:
        tmp.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_dims(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise UsageError(f"--dims expects WxH, got {text!r}") from None
    return w, h


# -- subcommands --------------------------------------------------------------------


def cmd_simulate(args) -> None:
    p = resolve(args, SIM_OPTS)
    cfg = SceneConfig(p["scenario"], p["objects"], p["frames"], p["width"], p["height"],
                      substeps=p["substeps"], restitution=p["restitution"], friction=p["friction"],
                      seed=p["seed"], radius=p["radius"], max_speed=p["max_speed"])
    rec = RunRecord("simulate", p, [Path(args.config)] if args.config else [], [], time.perf_counter())
    scene = simulate(cfg)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with staged(out) as tmp:
        save_trajset(scene.trajectories, tmp)
    rec.outputs.append(out)
    if args.render_dir:
        rdir = Path(args.render_dir)
        with staged(rdir) as tmp:
            write_frames(tmp, render_scene(scene))
        rec.outputs.append(rdir)
    write_manifest(out.parent, rec)


def cmd_encode(args) -> None:
    p = resolve(args, ENC_OPTS)
    traj = Path(args.traj)
    ts = load_trajset(traj)
    out = Path(args.out_dir)
    rec = RunRecord("encode", p, [traj] + ([Path(args.config)] if args.config else []), [out],
                    time.perf_counter())
    with staged(out) as tmp:
        _write_conditions(ts, _encode_params(p), tmp)
    write_manifest(out, rec)


def cmd_train(args) -> None:
    p = resolve(args, TRAIN_OPTS)
    files = _load_scene_dir(Path(args.data_dir))
    ckpt = Path(args.ckpt)
    ckpt.parent.mkdir(parents=True, exist_ok=True)
    rec = RunRecord("train", p, files + ([Path(args.config)] if args.config else []), [ckpt],
                    time.perf_counter())
    _train_model([load_trajset(f) for f in files], p, p["seed"], ckpt)
    write_manifest(ckpt.parent, rec)


def cmd_sample(args) -> None:
    ckpt, traj, out = Path(args.ckpt), Path(args.traj), Path(args.out_dir)
    rec = RunRecord("sample", {"seed": args.seed}, [ckpt, traj], [out], time.perf_counter())
    frames = _sample_for(ckpt, load_trajset(traj), args.seed)
    with staged(out) as tmp:
        write_frames(tmp, frames)
    write_manifest(out, rec)


def cmd_evaluate(args) -> None:
    gt_path, gen_path, out = Path(args.gt), Path(args.gen), Path(args.json)
    gt = load_trajset(gt_path)
    dims = _parse_dims(args.dims) if args.dims else gt.dims
    frames = args.frames if args.frames is not None else gt.frame_count
    if dims != gt.dims or frames != gt.frame_count:
        raise ValueError(
            f"ground truth is {gt.width}x{gt.height}x{gt.frame_count}, "
            f"requested {dims[0]}x{dims[1]}x{frames}"
        )
    inputs = [gt_path, gen_path]
    gen_frames = ref_frames = None
    if gen_path.is_dir():
        gen_frames = read_frames(gen_path)
        gen = extract_trajectories_toy(gen_frames, assign_palette(_palette_size(gt)))
    else:
        gen = ingest_detections(read_detections_csv(gen_path), frames, dims)
    if args.ref_frames:
        if gen_frames is None:
            raise UsageError("--ref-frames needs --gen to be a frame directory")
        ref_frames = read_frames(args.ref_frames)
        inputs.append(Path(args.ref_frames))
    rec = RunRecord("evaluate", {"dims": list(dims), "frames": frames}, inputs, [out],
                    time.perf_counter())
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_json(out, evaluate_sets(gt, gen, gen_frames, ref_frames))
    write_manifest(out.parent, rec)


def _simulate_many(seeds: list[int], size: int, frames: int, radius: float, threads: int):
    def one(s):
        return near_crossing_scene(s, size=size, frames=frames, radius=radius)

    if threads <= 1:
        return [one(s) for s in seeds]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(one, seeds))  # map keeps input order


def cmd_pipeline(args) -> None:
    p = resolve(args, PIPE_OPTS)
    seed = args.seed
    if seed < 0:
        raise UsageError("--seed must be non-negative")
    threads = worker_threads()
    out = Path(args.out_dir)
    t0 = time.perf_counter()
    rec = RunRecord("pipeline", {**p, "seed": seed}, [Path(args.config)] if args.config else [],
                    [], t0)
    with staged(out) as work:
        work.mkdir(parents=True)
        scenes_dir = work / "scenes"
        scenes_dir.mkdir()
        sim = derive_seed(seed, "physsim")
        train_scenes = _simulate_many([sim + i for i in range(p["train_scenes"])],
                                      p["size"], p["frames"], p["radius"], threads)
        held_seed = derive_seed(seed, "physsim.heldout")
        held = _simulate_many([held_seed + i for i in range(p["heldout"])],
                              p["size"], p["frames"], p["radius"], threads)
        for i, sc in enumerate(train_scenes):
            save_trajset(sc.trajectories, scenes_dir / f"train_{i:04d}.json")
        for i, sc in enumerate(held):
            save_trajset(sc.trajectories, scenes_dir / f"heldout_{i:04d}.json")
            _write_conditions(sc.trajectories, _encode_params(p), work / "conditions" / f"heldout_{i:04d}")
        train_sets = [load_trajset(f) for f in sorted(scenes_dir.glob("train_*.json"))]
        _train_model(train_sets, p, derive_seed(seed, "toydit.train"), work / "model.bin")
        per_scene = []
        sample_seed = derive_seed(seed, "toydit.sample")
        for i in range(p["heldout"]):
            gt = load_trajset(scenes_dir / f"heldout_{i:04d}.json")
            frames = _sample_for(work / "model.bin", gt, sample_seed + i)
            write_frames(work / "samples" / f"heldout_{i:04d}", frames)
            gen = extract_trajectories_toy(frames, assign_palette(_palette_size(gt)))
            per_scene.append(evaluate_sets(gt, gen, frames, render_scene(held[i])))
        summary = _aggregate(per_scene)
        summary["duration_s"] = round(time.perf_counter() - t0, 3)
        (work / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n",
                                           encoding="utf-8")
    rec.outputs.append(out)
    write_manifest(out, rec)


def _aggregate(per_scene: list[dict]) -> dict:
    def mean(key):
        vals = [s[key] for s in per_scene if s[key] is not None]
        return math.fsum(vals) / len(vals) if vals else None

    return {
        "mtem_percent": mean("mtem_percent"),
        "mtem_raw": mean("mtem_raw"),
        "psnr_db": mean("psnr_db"),
        "ssim": mean("ssim"),
        "pairs": sum(s["pairs"] for s in per_scene),
        "unmatched": sum(s["unmatched"] for s in per_scene),
        "scenes": per_scene,
    }


def cmd_verify(args) -> None:
    target = Path(args.dir)
    path = target if target.is_file() else target / MANIFEST
    if not path.is_file():
        raise ValueError(f"no manifest at {path}")
    problems = verify_manifest(path)
    if problems:
        raise ValueError("verification failed:\n  " + "\n  ".join(problems))
    print(f"ok: {path}")


# -- argument parsing ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog=TOOL, description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"{TOOL} {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="simulate one scene")
    p.add_argument("--config")
    _add_opts(p, SIM_OPTS)
    p.add_argument("--out", required=True, help="trajectory JSON")
    p.add_argument("--render-dir", help="write PPM frames here")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("encode", help="draw sparse-pose and object-ID condition frames")
    p.add_argument("--config")
    _add_opts(p, ENC_OPTS)
    p.add_argument("--traj", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("train", help="train a toy model on a directory of scenes")
    p.add_argument("--config")
    _add_opts(p, TRAIN_OPTS)
    p.add_argument("--data-dir", required=True)
    p.add_argument("--ckpt", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sample", help="generate a video conditioned on a trajectory")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--traj", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("evaluate", help="score generated trajectories against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth trajectory JSON")
    p.add_argument("--gen", required=True, help="detection CSV or directory of PPM frames")
    p.add_argument("--dims", help="WxH (must match the ground truth)")
    p.add_argument("--frames", type=int)
    p.add_argument("--ref-frames", help="reference frames for PSNR/SSIM")
    p.add_argument("--json", required=True, help="summary output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("pipeline", help="simulate, encode, train, sample and evaluate")
    p.add_argument("--config")
    _add_opts(p, PIPE_OPTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_pipeline)

    p = sub.add_parser("verify", help="re-digest the files listed in a manifest")
    p.add_argument("dir", help="output directory or manifest path")
    p.set_defaults(func=cmd_verify)
    return parser


DOMAIN_ERRORS = (ValueError, OSError, FloatingPointError, CheckpointError, KeyError)


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return 2
    except SystemExit as exc:  # --help / --version
        return exc.code if isinstance(exc.code, int) else 0
    except DOMAIN_ERRORS as exc:
        print(f"{TOOL}: error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
