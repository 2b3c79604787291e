"""Noise schedule, forward noising, training step and ancestral sampling."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import autodiff as ad
from .model import ToyDiT
from .vae import from_model_space, vae_stub_decode

BETA_START, BETA_END = 1e-4, 0.02
REFERENCE_STEPS = 1000


@dataclass(frozen=True)
class NoiseSchedule:
    betas: np.ndarray  # betas[t] for t = 1..T stored at index t; betas[0] = 0
    alpha_bar: np.ndarray  # alpha_bar[0] = 1, strictly decreasing

    @property
    def steps(self) -> int:
        return len(self.betas) - 1

    @classmethod
    def linear(cls, steps: int) -> "NoiseSchedule":
        """Linear betas, range rescaled by 1000/T so short schedules still end near zero."""
        if steps < 1:
            raise ValueError("steps must be >= 1")
        scale = REFERENCE_STEPS / steps
        b = np.linspace(BETA_START * scale, BETA_END * scale, steps)
        b = np.minimum(b, 0.999)
        betas = np.concatenate([[0.0], b])
        alpha_bar = np.concatenate([[1.0], np.cumprod(1.0 - b)])
        return cls(betas, alpha_bar)


def add_noise(z, t: int, eps, sched: NoiseSchedule) -> np.ndarray:
    z = np.asarray(z)
    eps = np.asarray(eps)
    if z.shape != eps.shape:
        raise ValueError(f"noise shape {eps.shape} != latent shape {z.shape}")
    if not 0 <= t <= sched.steps:
        raise ValueError(f"t={t} outside [0, {sched.steps}]")
    if t == 0:
        return z.copy()
    ab = sched.alpha_bar[t]
    return math.sqrt(ab) * z + math.sqrt(1.0 - ab) * eps


def add_noise_batch(z: np.ndarray, t: np.ndarray, eps: np.ndarray, sched: NoiseSchedule) -> np.ndarray:
    ab = sched.alpha_bar[np.asarray(t)].reshape((-1,) + (1,) * (z.ndim - 1))
    return (np.sqrt(ab) * z + np.sqrt(1.0 - ab) * eps).astype(z.dtype)


@dataclass
class Adam:
    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step_count: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def step(self, params: dict[str, ad.Tensor]) -> None:
        self.step_count += 1
        c1 = 1.0 - self.beta1**self.step_count
        c2 = 1.0 - self.beta2**self.step_count
        for name, p in params.items():
            g = p.grad
            if g is None:
                continue
            if name not in self.m:
                self.m[name] = np.zeros_like(p.data)
                self.v[name] = np.zeros_like(p.data)
            m, v = self.m[name], self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.data -= (self.lr * (m / c1) / (np.sqrt(v / c2) + self.eps)).astype(p.data.dtype)


@dataclass
class Batch:
    latents: np.ndarray  # (B, N, H', W', C) in model space
    pose: np.ndarray | None = None  # (B, N, H', W', C) condition latents in [0, 1]
    ids: np.ndarray | None = None


def training_step(model: ToyDiT, opt: Adam, batch: Batch, sched: NoiseSchedule,
                  rng: np.random.Generator, step_index: int = 0) -> float:
    """One noise-prediction step: sample t and eps, MSE to predicted noise, Adam update."""
    z = np.asarray(batch.latents, dtype=model.dtype)
    if len(z) == 0:
        raise ValueError("empty batch")
    b = len(z)
    t = rng.integers(1, sched.steps + 1, size=b)
    eps = rng.standard_normal(z.shape).astype(model.dtype)
    zt = add_noise_batch(z, t, eps, sched)
    ad.zero_grad(model.params.values())
    pred = model.forward(zt, t, pose=batch.pose, ids=batch.ids)
    loss = ad.mean_square_error(pred, eps)
    value = float(loss.data)
    if not math.isfinite(value):
        raise FloatingPointError(f"divergence at step {step_index}: loss={value}")
    ad.backward(loss)
    opt.step(model.params)
    return value


def sample_latents(model: ToyDiT, sched: NoiseSchedule, shape: tuple[int, ...],
                   seed: int, pose=None, ids=None) -> np.ndarray:
    """Ancestral DDPM sampling from z_T ~ N(0, I) down to z_0 (model space).

    ``shape`` is (B, N, H', W', C). The predicted clean latent is clipped to
    [-1, 1] before forming the posterior mean.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0x5A3,)))
    z = rng.standard_normal(shape).astype(model.dtype)
    cond = None
    if model.cfg.cond != "none" and pose is not None:
        cond = model.interaction_encoder(
            np.asarray(pose).reshape(shape),
            None if ids is None else np.asarray(ids).reshape(shape),
        )
    b = shape[0]
    for t in range(sched.steps, 0, -1):
        eps = model.forward(z, np.full(b, t), cond_tokens=cond).data
        ab, ab_prev = sched.alpha_bar[t], sched.alpha_bar[t - 1]
        beta = sched.betas[t]
        x0 = np.clip((z - math.sqrt(1.0 - ab) * eps) / math.sqrt(ab), -1.0, 1.0)
        mean = (math.sqrt(ab_prev) * beta / (1.0 - ab)) * x0 + (
            math.sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab)
        ) * z
        if t > 1:
            var = beta * (1.0 - ab_prev) / (1.0 - ab)
            mean = mean + math.sqrt(var) * rng.standard_normal(shape)
        z = mean.astype(model.dtype)
        if not np.all(np.isfinite(z)):
            raise FloatingPointError(f"non-finite latent at step {t}")
    return z


def sample(model: ToyDiT, sched: NoiseSchedule, seed: int, pose=None, ids=None,
           batch: int = 1, pool: int = 2) -> np.ndarray:
    """Generate (B, F, H, W, 3) videos in [0, 1]."""
    cfg = model.cfg
    shape = (batch, cfg.frames, cfg.latent_size, cfg.latent_size, cfg.channels)
    z = sample_latents(model, sched, shape, seed, pose, ids)
    video = vae_stub_decode(from_model_space(z), pool)
    return np.clip(video, 0.0, 1.0)
