"""Binary checkpoints and flat ``key = value`` config text.

Layout (all integers little-endian)::

    b"ITGN"  u32 version
    u32 config_bytes  config text (UTF-8, ``key = value`` lines)
    repeated until EOF:
        u32 name_bytes  name (UTF-8)  u32 rank  u32 dims[rank]
        u64 data_bytes  float32 values, C order
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Mapping

import numpy as np

from .model import DitConfig, ToyDiT

MAGIC = b"ITGN"
VERSION = 1


class CheckpointError(ValueError):
    pass


# -- flat config text -------------------------------------------------------------


def parse_config(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are skipped."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ValueError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        if key in out:
            raise ValueError(f"{source}:{lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def format_config(values: Mapping[str, object]) -> str:
    return "".join(f"{k} = {v}\n" for k, v in sorted(values.items()))


def read_config(path: str | Path) -> dict[str, str]:
    return parse_config(Path(path).read_text(encoding="utf-8"), str(path))


# -- binary checkpoint ------------------------------------------------------------


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CheckpointError(f"truncated checkpoint while reading {what}")
    return data


def write_checkpoint(path: str | Path, cfg: DitConfig, params: Mapping[str, np.ndarray],
                     extra: Mapping[str, object] | None = None) -> None:
    """Write ``params`` as float32 plus the model config (and ``extra`` keys, prefixed ``x.``)."""
    meta = {f"model.{k}": v for k, v in cfg.to_dict().items()}
    meta.update({f"x.{k}": v for k, v in (extra or {}).items()})
    text = format_config(meta).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(MAGIC + struct.pack("<II", VERSION, len(text)) + text)
        for name in sorted(params):
            arr = np.ascontiguousarray(params[name], dtype="<f4")
            nb = name.encode("utf-8")
            fh.write(struct.pack("<I", len(nb)) + nb)
            fh.write(struct.pack(f"<I{arr.ndim}I", arr.ndim, *arr.shape))
            fh.write(struct.pack("<Q", arr.nbytes) + arr.tobytes())


def read_checkpoint(path: str | Path) -> tuple[DitConfig, dict[str, np.ndarray], dict[str, str]]:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4, "magic") != MAGIC:
            raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
        version, n_text = struct.unpack("<II", _read_exact(fh, 8, "header"))
        if version != VERSION:
            raise CheckpointError(f"{path}: unsupported checkpoint version {version}")
        meta = parse_config(_read_exact(fh, n_text, "config").decode("utf-8"), str(path))
        params: dict[str, np.ndarray] = {}
        while head := fh.read(4):
            if len(head) != 4:
                raise CheckpointError("truncated checkpoint while reading tensor name")
            (n_name,) = struct.unpack("<I", head)
            name = _read_exact(fh, n_name, "tensor name").decode("utf-8")
            (rank,) = struct.unpack("<I", _read_exact(fh, 4, f"{name} rank"))
            dims = struct.unpack(f"<{rank}I", _read_exact(fh, 4 * rank, f"{name} dims"))
            (nbytes,) = struct.unpack("<Q", _read_exact(fh, 8, f"{name} length"))
            if nbytes != 4 * int(np.prod(dims, dtype=np.int64)):
                raise CheckpointError(f"{name}: {nbytes} bytes does not match dims {dims}")
            data = np.frombuffer(_read_exact(fh, nbytes, f"{name} data"), dtype="<f4")
            params[name] = data.reshape(dims).copy()
    model_keys = {k[6:]: v for k, v in meta.items() if k.startswith("model.")}
    extra = {k[2:]: v for k, v in meta.items() if k.startswith("x.")}
    return DitConfig.from_dict(model_keys), params, extra


def load_model(path: str | Path) -> tuple[ToyDiT, dict[str, str]]:
    cfg, params, extra = read_checkpoint(path)
    return ToyDiT(cfg, params), extra
