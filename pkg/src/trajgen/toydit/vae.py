"""Stand-in video autoencoder: spatial average pooling / nearest-neighbor upsampling."""

from __future__ import annotations

import numpy as np

POOL = 2


def vae_stub_encode(video: np.ndarray, pool: int = POOL) -> np.ndarray:
    """(..., F, H, W, C) -> (..., F, H/pool, W/pool, C); no temporal compression."""
    v = np.asarray(video)
    v = v / 255.0 if v.dtype == np.uint8 else v.astype(np.float64)
    h, w, c = v.shape[-3:]
    if h % pool or w % pool:
        raise ValueError(f"frame size {h}x{w} not divisible by pool factor {pool}")
    lead = v.shape[:-3]
    v = v.reshape(*lead, h // pool, pool, w // pool, pool, c)
    return v.mean(axis=(-4, -2))


def vae_stub_decode(latent: np.ndarray, pool: int = POOL) -> np.ndarray:
    z = np.asarray(latent)
    return np.repeat(np.repeat(z, pool, axis=-3), pool, axis=-2)


def to_model_space(latent: np.ndarray) -> np.ndarray:
    """Map [0, 1] latents to the [-1, 1] range the diffusion model works in."""
    return 2.0 * np.asarray(latent) - 1.0


def from_model_space(z: np.ndarray) -> np.ndarray:
    return (np.asarray(z) + 1.0) / 2.0
