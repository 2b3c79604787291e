"""Hard-edged disc rasterization and binary PPM (P6) I/O.

Pixel (row i, column j) sits at continuous coordinate (x=j, y=i).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np


def disc_mask(cx: float, cy: float, radius: float, width: int, height: int) -> np.ndarray:
    """Boolean (H, W) mask of pixels whose center lies within ``radius``."""
    ys, xs = np.ogrid[:height, :width]
    return (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius


def draw_disc(canvas: np.ndarray, cx: float, cy: float, radius: float, color) -> None:
    h, w = canvas.shape[:2]
    x0, x1 = max(0, int(np.floor(cx - radius))), min(w, int(np.ceil(cx + radius)) + 1)
    y0, y1 = max(0, int(np.floor(cy - radius))), min(h, int(np.ceil(cy + radius)) + 1)
    if x0 >= x1 or y0 >= y1:
        return
    ys, xs = np.ogrid[y0:y1, x0:x1]
    m = (xs - cx) ** 2 + (ys - cy) ** 2 <= radius * radius
    canvas[y0:y1, x0:x1][m] = color


def write_ppm(path: str | Path, image: np.ndarray) -> None:
    """Write an (H, W, 3) uint8 array (or float in [0, 1]) as binary P6."""
    img = np.asarray(image)
    if img.dtype != np.uint8:
        img = np.clip(np.rint(np.asarray(img, float) * 255.0), 0, 255).astype(np.uint8)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) image, got {img.shape}")
    h, w = img.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(np.ascontiguousarray(img).tobytes())


def read_ppm(path: str | Path) -> np.ndarray:
    data = Path(path).read_bytes()
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P6":
        raise ValueError(f"{path}: not a binary PPM (magic {tokens[0]!r})")
    w, h, maxval = (int(t) for t in tokens[1:])
    if maxval != 255:
        raise ValueError(f"{path}: unsupported maxval {maxval}")
    pos += 1  # single whitespace after maxval
    raw = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return raw.reshape(h, w, 3).copy()


def write_frames(out_dir: str | Path, frames: np.ndarray, pattern: str = "frame_%05d.ppm") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i, fr in enumerate(frames):
        p = out / (pattern % i)
        write_ppm(p, fr)
        paths.append(p)
    return paths


def read_frames(in_dir: str | Path, glob: str = "frame_*.ppm") -> np.ndarray:
    paths = sorted(Path(in_dir).glob(glob))
    if not paths:
        raise ValueError(f"no frames matching {glob} in {in_dir}")
    return np.stack([read_ppm(p) for p in paths])
