"""Noise schedules, closed-form forward noising, and the DDIM reverse step.

The forward process corrupts a clean latent as
``z_t = sqrt(abar_t) * z_0 + sqrt(1 - abar_t) * eps`` with
``abar_t = prod_{s<=t}(1 - beta_s)``. The reverse update is the
deterministic DDIM step (eta = 0): reconstruct the implied z_0 from the
noise prediction, then re-noise to the previous trajectory timestep.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeMismatchError, SingularityError

DEFAULT_TRAIN_STEPS = 1000
DEFAULT_BETA_START = 1e-4
DEFAULT_BETA_END = 2e-2
DEFAULT_INFERENCE_STEPS = 50


@dataclass(frozen=True)
class StepPair:
    """One reverse-trajectory hop from timestep ``t`` down to ``t_prev``."""

    t: int
    t_prev: int

    def __post_init__(self):
        if not self.t > self.t_prev >= 0:
            raise ConfigError(f"step pair requires t > t_prev >= 0, got ({self.t}, {self.t_prev})")


@dataclass(frozen=True)
class NoiseSchedule:
    """Beta sequence, cumulative alpha-bar products, and sampling trajectory.

    ``betas[k]`` is beta at training timestep k+1; ``alpha_bars`` has length
    T+1 with ``alpha_bars[0] = 1`` so index t reads abar_t directly.
    ``timesteps`` is the strictly decreasing inference subsequence; the last
    entry chains to t_prev = 0.
    """

    betas: np.ndarray
    alpha_bars: np.ndarray
    timesteps: np.ndarray

    def __post_init__(self):
        betas = np.asarray(self.betas, dtype=np.float64)
        if betas.ndim != 1 or betas.size < 1:
            raise ConfigError("betas must be a non-empty 1-D array")
        if np.any(betas <= 0.0) or np.any(betas >= 1.0):
            raise ConfigError("betas must lie strictly inside (0, 1)")
        abars = np.asarray(self.alpha_bars, dtype=np.float64)
        if abars.shape != (betas.size + 1,) or abars[0] != 1.0:
            raise ConfigError("alpha_bars must have length T+1 with alpha_bars[0] = 1")
        if np.any(np.diff(abars) >= 0.0):
            raise ConfigError("alpha_bars must be strictly decreasing")
        ts = np.asarray(self.timesteps, dtype=np.int64)
        if ts.ndim != 1 or ts.size < 1:
            raise ConfigError("timesteps must be a non-empty 1-D array")
        if np.any(np.diff(ts) >= 0):
            raise ConfigError("timesteps must be strictly decreasing")
        if ts[0] > betas.size or ts[-1] < 1:
            raise ConfigError(f"timesteps must stay within [1, {betas.size}]")
        object.__setattr__(self, "betas", betas)
        object.__setattr__(self, "alpha_bars", abars)
        object.__setattr__(self, "timesteps", ts)

    @property
    def total_train_steps(self) -> int:
        return int(self.betas.size)

    @property
    def num_inference_steps(self) -> int:
        return int(self.timesteps.size)

    def alpha_bar(self, t: int) -> float:
        if not 0 <= t <= self.total_train_steps:
            raise ConfigError(f"timestep {t} outside [0, {self.total_train_steps}]")
        return float(self.alpha_bars[t])

    def step_pairs(self) -> list[StepPair]:
        """The (t, t_prev) hops of the trajectory, ending at t_prev = 0."""
        ts = self.timesteps.tolist()
        return [StepPair(t, t_next) for t, t_next in zip(ts, ts[1:] + [0])]


def build_linear_schedule(
    total_train_steps: int = DEFAULT_TRAIN_STEPS,
    beta_start: float = DEFAULT_BETA_START,
    beta_end: float = DEFAULT_BETA_END,
    num_inference_steps: int = DEFAULT_INFERENCE_STEPS,
) -> NoiseSchedule:
    """Linearly spaced betas with a uniform-stride inference trajectory.

    The trajectory takes ``num_inference_steps`` timesteps evenly spaced
    from T downward (ties round toward larger t), so the first entry is T
    and the last chains to t_prev = 0.
    """
    if total_train_steps < 1:
        raise ConfigError(f"total_train_steps must be >= 1, got {total_train_steps}")
    if not (0.0 < beta_start <= beta_end < 1.0):
        raise ConfigError(
            f"need 0 < beta_start <= beta_end < 1, got ({beta_start}, {beta_end})")
    if not 1 <= num_inference_steps <= total_train_steps:
        raise ConfigError(
            f"num_inference_steps must be in [1, {total_train_steps}], got {num_inference_steps}")
    betas = np.linspace(beta_start, beta_end, total_train_steps, dtype=np.float64)
    alpha_bars = np.concatenate(([1.0], np.cumprod(1.0 - betas)))
    # t_k = round_half_up(T * (N - k) / N); stride T/N >= 1 keeps it strict.
    k = np.arange(num_inference_steps, dtype=np.float64)
    raw = total_train_steps * (num_inference_steps - k) / num_inference_steps
    timesteps = np.floor(raw + 0.5).astype(np.int64)
    return NoiseSchedule(betas=betas, alpha_bars=alpha_bars, timesteps=timesteps)


def add_noise(z0: np.ndarray, eps: np.ndarray, t: int, sched: NoiseSchedule) -> np.ndarray:
    """Closed-form forward corruption of ``z0`` to timestep ``t``.

    Accepts t = 0 (abar_0 = 1) as the no-noise limit.
    """
    if z0.shape != eps.shape:
        raise ShapeMismatchError(f"z0 shape {z0.shape} != eps shape {eps.shape}")
    abar = sched.alpha_bar(t)
    return np.sqrt(abar) * z0 + np.sqrt(1.0 - abar) * eps


def ddim_step(z_t: np.ndarray, eps_hat: np.ndarray, pair: StepPair, sched: NoiseSchedule) -> np.ndarray:
    """Deterministic reverse update from ``pair.t`` to ``pair.t_prev``."""
    if z_t.shape != eps_hat.shape:
        raise ShapeMismatchError(f"z_t shape {z_t.shape} != eps_hat shape {eps_hat.shape}")
    abar_t = sched.alpha_bar(pair.t)
    if abar_t == 0.0:
        raise SingularityError(f"alpha_bar({pair.t}) = 0; cannot invert the forward process")
    abar_prev = sched.alpha_bar(pair.t_prev)
    z0_hat = (z_t - np.sqrt(1.0 - abar_t) * eps_hat) / np.sqrt(abar_t)
    return np.sqrt(abar_prev) * z0_hat + np.sqrt(1.0 - abar_prev) * eps_hat
