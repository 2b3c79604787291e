"""Factorized spatial/temporal diffusion transformer with an interaction encoder.

Token layout is (B, N, S, L): batch, frames, spatial tokens per frame
(H'/k * W'/k) and embedding width. Spatial attention mixes the S axis
within a frame; temporal attention transposes to (B, S, N, L) and mixes
the N axis at a fixed spatial location.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor

COND_MODES = ("none", "pose", "pose_id")


@dataclass(frozen=True)
class DitConfig:
    patch: int = 2  # k
    width: int = 64  # L
    blocks: int = 4
    heads: int = 4
    steps: int = 200  # diffusion steps T
    lr: float = 1e-3
    seed: int = 0
    frames: int = 16  # N
    latent_size: int = 16  # H' == W'
    channels: int = 3
    cond: str = "pose_id"
    mlp_ratio: int = 4
    dtype: str = "float32"

    def __post_init__(self) -> None:
        for f in ("patch", "width", "blocks", "heads", "steps", "frames",
                  "latent_size", "channels", "mlp_ratio"):
            if getattr(self, f) <= 0:
                raise ValueError(f"{f} must be positive")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.width % self.heads:
            raise ValueError(f"width {self.width} not divisible by heads {self.heads}")
        if self.latent_size % self.patch:
            raise ValueError(
                f"latent size {self.latent_size} not divisible by patch {self.patch}"
            )
        if self.cond not in COND_MODES:
            raise ValueError(f"cond must be one of {COND_MODES}, got {self.cond!r}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"unsupported dtype {self.dtype}")

    @property
    def tokens_per_frame(self) -> int:
        return (self.latent_size // self.patch) ** 2

    @property
    def patch_dim(self) -> int:
        return self.patch * self.patch * self.channels

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "DitConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        out = {}
        for k, v in d.items():
            if k not in kinds:
                raise ValueError(f"unknown model config key {k!r}")
            default = getattr(cls, k)
            out[k] = type(default)(v) if not isinstance(default, str) else str(v)
        return cls(**out)


# -- patchify and reshapes --------------------------------------------------------


def patchify(latent, k: int, weights, bias=None) -> Tensor:
    """Non-overlapping k x k patches projected to L channels.

    ``latent`` is (..., N, H', W', C); ``weights`` is (k*k*C, L). Equivalent
    to a stride-k, kernel-k convolution with L output channels. Returns
    (..., N, H'/k * W'/k, L).
    """
    x = ad.as_tensor(latent)
    *lead, n, h, w, c = x.shape
    if h % k or w % k:
        raise ValueError(f"latent {h}x{w} not divisible by patch size {k}")
    wt = ad.as_tensor(weights)
    if wt.shape[0] != k * k * c:
        raise ValueError(f"patchify weights need {k * k * c} rows, got {wt.shape}")
    tok = patch_tokens(x, k)
    out = tok @ wt
    return out + bias if bias is not None else out


def patch_tokens(x: Tensor, k: int) -> Tensor:
    """(..., N, H, W, C) -> (..., N, H/k*W/k, k*k*C) raw patch vectors, (kh, kw, c) order."""
    *lead, n, h, w, c = x.shape
    nd = len(lead)
    x = x.reshape(*lead, n, h // k, k, w // k, k, c)
    perm = tuple(range(nd)) + tuple(nd + a for a in (0, 1, 3, 2, 4, 5))
    x = x.transpose(perm)
    return x.reshape(*lead, n, (h // k) * (w // k), k * k * c)


def unpatchify(tokens: Tensor, k: int, h: int, w: int, c: int) -> Tensor:
    *lead, n, s, _ = tokens.shape
    nd = len(lead)
    x = tokens.reshape(*lead, n, h // k, w // k, k, k, c)
    perm = tuple(range(nd)) + tuple(nd + a for a in (0, 1, 3, 2, 4, 5))
    x = x.transpose(perm)
    return x.reshape(*lead, n, h, w, c)


def spatial_reshape(tokens):
    """Frames as batch, spatial tokens as sequence: (..., N, S, L) unchanged."""
    return tokens


def temporal_reshape(tokens):
    """Spatial locations as batch, frames as sequence: (..., N, S, L) -> (..., S, N, L)."""
    if isinstance(tokens, Tensor):
        nd = tokens.data.ndim
        return tokens.transpose(tuple(range(nd - 3)) + (nd - 2, nd - 3, nd - 1))
    return np.swapaxes(tokens, -3, -2)


temporal_reshape_inverse = temporal_reshape


# -- embeddings -----------------------------------------------------------------


def sincos(pos: np.ndarray, dim: int, base: float = 10000.0) -> np.ndarray:
    pos = np.asarray(pos, dtype=np.float64)
    half = dim // 2
    freqs = np.exp(-math.log(base) * np.arange(half) / max(half, 1))
    ang = pos[..., None] * freqs
    out = np.concatenate([np.sin(ang), np.cos(ang)], axis=-1)
    if dim % 2:
        out = np.concatenate([out, np.zeros(out.shape[:-1] + (1,))], axis=-1)
    return out


def timestep_embedding(t, dim: int) -> np.ndarray:
    return sincos(np.asarray(t, dtype=np.float64).reshape(-1), dim)


def position_embedding(frames: int, grid: int, dim: int) -> np.ndarray:
    """Fixed (N, grid*grid, L) embedding: 2-D spatial sin/cos plus frame index sin/cos."""
    rows, cols = np.meshgrid(np.arange(grid), np.arange(grid), indexing="ij")
    half = dim // 2
    spatial = np.concatenate(
        [sincos(rows.ravel(), half, 100.0), sincos(cols.ravel(), dim - half, 100.0)], axis=-1
    )
    temporal = sincos(np.arange(frames), dim, 100.0)
    return temporal[:, None, :] + spatial[None, :, :]


# -- model ------------------------------------------------------------------------


class ToyDiT:
    """Parameters plus forward pass; gradients come from :mod:`autodiff`."""

    def __init__(self, cfg: DitConfig, params: dict[str, np.ndarray] | None = None):
        self.cfg = cfg
        self.dtype = np.dtype(cfg.dtype)
        if params is None:
            params = init_params(cfg)
        expected = set(param_shapes(cfg))
        if set(params) != expected:
            missing = sorted(expected - set(params))
            extra = sorted(set(params) - expected)
            raise ValueError(f"parameter mismatch: missing {missing}, unexpected {extra}")
        self.params: dict[str, Tensor] = {
            name: Tensor(np.asarray(v, dtype=self.dtype).reshape(param_shapes(cfg)[name]),
                         requires_grad=True)
            for name, v in params.items()
        }
        self._pos_cache: dict[tuple[int, int], np.ndarray] = {}

    def p(self, name: str) -> Tensor:
        return self.params[name]

    def state(self) -> dict[str, np.ndarray]:
        return {k: v.data for k, v in self.params.items()}

    def _linear(self, x: Tensor, prefix: str) -> Tensor:
        return x @ self.p(prefix + ".w") + self.p(prefix + ".b")

    def _norm(self, x: Tensor, prefix: str) -> Tensor:
        return ad.layer_norm(x) * self.p(prefix + ".g") + self.p(prefix + ".b")

    def _attention(self, x: Tensor, prefix: str, record: list | None) -> Tensor:
        """Multi-head self-attention over axis -2 of a (B, G, Seq, L) tensor."""
        b, g, s, width = x.shape
        h = self.cfg.heads
        d = width // h

        def heads(t: Tensor) -> Tensor:
            return t.reshape(b, g, s, h, d).transpose(0, 1, 3, 2, 4)

        q = heads(self._linear(x, prefix + ".q"))
        k = heads(self._linear(x, prefix + ".k"))
        v = heads(self._linear(x, prefix + ".v"))
        scores = (q @ k.transpose(0, 1, 2, 4, 3)) * (1.0 / math.sqrt(d))
        probs = ad.softmax(scores)
        if record is not None:
            record.append((prefix, probs.data))
        out = (probs @ v).transpose(0, 1, 3, 2, 4).reshape(b, g, s, width)
        return self._linear(out, prefix + ".o")

    def spatial_block(self, x: Tensor, i: int, record: list | None = None) -> Tensor:
        pre = f"blocks.{i}"
        return x + self._attention(spatial_reshape(self._norm(x, pre + ".ln1")), pre + ".attn_s", record)

    def temporal_block(self, x: Tensor, i: int, record: list | None = None) -> Tensor:
        pre = f"blocks.{i}"
        h = temporal_reshape(self._norm(x, pre + ".ln2"))
        return x + temporal_reshape_inverse(self._attention(h, pre + ".attn_t", record))

    def mlp_block(self, x: Tensor, i: int) -> Tensor:
        pre = f"blocks.{i}"
        h = ad.gelu(self._linear(self._norm(x, pre + ".ln3"), pre + ".mlp1"))
        return x + self._linear(h, pre + ".mlp2")

    def embed_tokens(self, z) -> Tensor:
        """Patch embedding plus fixed position embedding, (B, N, S, L)."""
        cfg = self.cfg
        z = ad.as_tensor(np.asarray(z, dtype=self.dtype))
        tok = patchify(z, cfg.patch, self.p("patch.w"), self.p("patch.b"))
        n, s = tok.shape[-3], tok.shape[-2]
        key = (n, s)
        if key not in self._pos_cache:
            grid = int(round(math.sqrt(s)))
            self._pos_cache[key] = position_embedding(n, grid, cfg.width).astype(self.dtype)
        return tok + self._pos_cache[key]

    def time_embed(self, t) -> Tensor:
        t = np.asarray(t).reshape(-1)
        if np.any(t < 1) or np.any(t > self.cfg.steps):
            raise ValueError(f"timestep out of range [1, {self.cfg.steps}]: {t}")
        e = Tensor(timestep_embedding(t, self.cfg.width).astype(self.dtype))
        e = self._linear(ad.gelu(self._linear(e, "temb.1")), "temb.2")
        return e.reshape(len(t), 1, 1, self.cfg.width)

    def interaction_encoder(self, pose_latent=None, id_latent=None) -> Tensor | None:
        """Encode condition latents into (B, N, S, L) tokens.

        Each modality is patchified and passed through its own 2-layer
        perceptron; the fusion perceptron maps their concatenation to L.
        """
        cfg = self.cfg
        if cfg.cond == "none":
            return None
        if pose_latent is None:
            raise ValueError("conditioned model needs a sparse-pose latent")
        branches = [("pose", pose_latent)]
        if cfg.cond == "pose_id":
            if id_latent is None:
                raise ValueError("pose_id model needs an object-ID latent")
            if np.shape(id_latent) != np.shape(pose_latent):
                raise ValueError(
                    f"modality shape mismatch: pose {np.shape(pose_latent)} vs id {np.shape(id_latent)}"
                )
            branches.append(("id", id_latent))
        hs = []
        for name, lat in branches:
            x = patch_tokens(ad.as_tensor(np.asarray(lat, dtype=self.dtype)), cfg.patch)
            h = ad.gelu(self._linear(x, f"enc.{name}.1"))
            hs.append(self._linear(h, f"enc.{name}.2"))
        h = hs[0] if len(hs) == 1 else ad.concat(hs, axis=-1)
        h = ad.gelu(self._linear(h, "enc.fuse.1"))
        return self._linear(h, "enc.fuse.2")

    def forward(self, z, t, pose=None, ids=None, cond_tokens: Tensor | None = None,
                record: list | None = None) -> Tensor:
        """Predict noise for latents ``z`` of shape (B, N, H', W', C) at steps ``t``."""
        cfg = self.cfg
        z = np.asarray(z)
        if z.ndim == 4:
            z = z[None]
        b, n, h, w, c = z.shape
        if c != cfg.channels:
            raise ValueError(f"expected {cfg.channels} latent channels, got {c}")
        x = self.embed_tokens(z)
        x = x + self.time_embed(np.broadcast_to(np.asarray(t).reshape(-1), (b,)))
        if cond_tokens is None and cfg.cond != "none" and pose is not None:
            cond_tokens = self.interaction_encoder(
                np.asarray(pose).reshape(z.shape),
                None if ids is None else np.asarray(ids).reshape(z.shape),
            )
        if cond_tokens is not None:
            if cond_tokens.shape != x.shape:
                raise ValueError(f"condition tokens {cond_tokens.shape} vs visual {x.shape}")
            x = x + cond_tokens
        for i in range(cfg.blocks):
            x = self.spatial_block(x, i, record)
            x = self.temporal_block(x, i, record)
            x = self.mlp_block(x, i)
        x = ad.layer_norm(x)
        x = self._linear(x, "final")
        return unpatchify(x, cfg.patch, h, w, c)


def param_shapes(cfg: DitConfig) -> dict[str, tuple[int, ...]]:
    L, pd = cfg.width, cfg.patch_dim
    hidden = cfg.mlp_ratio * L
    shapes: dict[str, tuple[int, ...]] = {
        "patch.w": (pd, L), "patch.b": (L,),
        "temb.1.w": (L, L), "temb.1.b": (L,),
        "temb.2.w": (L, L), "temb.2.b": (L,),
    }
    for i in range(cfg.blocks):
        pre = f"blocks.{i}"
        for ln in ("ln1", "ln2", "ln3"):
            shapes[f"{pre}.{ln}.g"] = (L,)
            shapes[f"{pre}.{ln}.b"] = (L,)
        for attn in ("attn_s", "attn_t"):
            for proj in ("q", "k", "v", "o"):
                shapes[f"{pre}.{attn}.{proj}.w"] = (L, L)
                shapes[f"{pre}.{attn}.{proj}.b"] = (L,)
        shapes[f"{pre}.mlp1.w"] = (L, hidden)
        shapes[f"{pre}.mlp1.b"] = (hidden,)
        shapes[f"{pre}.mlp2.w"] = (hidden, L)
        shapes[f"{pre}.mlp2.b"] = (L,)
    shapes["final.w"] = (L, pd)
    shapes["final.b"] = (pd,)
    branches = {"none": [], "pose": ["pose"], "pose_id": ["pose", "id"]}[cfg.cond]
    for name in branches:
        shapes[f"enc.{name}.1.w"] = (pd, L)
        shapes[f"enc.{name}.1.b"] = (L,)
        shapes[f"enc.{name}.2.w"] = (L, L)
        shapes[f"enc.{name}.2.b"] = (L,)
    if branches:
        shapes["enc.fuse.1.w"] = (len(branches) * L, L)
        shapes["enc.fuse.1.b"] = (L,)
        shapes["enc.fuse.2.w"] = (L, L)
        shapes["enc.fuse.2.b"] = (L,)
    return shapes


def init_params(cfg: DitConfig) -> dict[str, np.ndarray]:
    """Scaled-normal weights, zero biases, unit norm gains, zero output projection."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(0x1D17,)))
    out = {}
    for name, shape in param_shapes(cfg).items():
        if name.endswith(".g"):
            out[name] = np.ones(shape)
        elif len(shape) == 1 or name == "final.w":
            out[name] = np.zeros(shape)
        else:
            out[name] = rng.normal(0.0, 1.0 / math.sqrt(shape[0]), size=shape)
    return out
