"""Per-timestep patch denoising loop.

Each timestep works against an immutable snapshot of z_t: every patch the
denoiser sees is cropped from the snapshot, so overlapping a region that
was already denoised this step implicitly reverts it to its pre-step
value. Results are pasted first-come-first-kept into the step's output
grid under a per-pixel ledger; already-denoised cells within a tolerance
band of a paste's fresh cells are averaged with the incoming values to
hide seams, and cells deeper in the overlap keep their first denoising.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .denoisers import Condition, Denoiser
from .errors import ConfigError, SchedulingError, ShapeMismatchError
from .grid import PatchRegion, check_finite, crop
from .guidance import GuidanceStack, SliderConfig, chess_mask_apply, fuse_phase, guidance_at, is_guided
from .schedule import NoiseSchedule, StepPair, ddim_step

DEFAULT_OVERLAP_TOLERANCE = 10  # band width in latent pixels
LIVELOCK_FACTOR = 64


@dataclass
class StageStats:
    """Engine instrumentation for one generation (one cascade stage)."""

    patches_per_step: list[int] = field(default_factory=list)
    denoiser_calls: int = 0
    max_patch_area: int = 0
    configured_patch_area: int = 0
    wall_time_s: float = 0.0


class StepLedger:
    """Tracks which latent positions have been denoised this timestep.

    ``band`` marks the cells averaged by the most recent paste; it is
    reset on every paste.
    """

    def __init__(self, height: int, width: int):
        self.height = height
        self.width = width
        self.denoised = np.zeros((height, width), dtype=bool)
        self.band = np.zeros((height, width), dtype=bool)
        self._remaining = height * width

    def clear(self) -> None:
        self.denoised[:] = False
        self.band[:] = False
        self._remaining = self.height * self.width

    def full(self) -> bool:
        return self._remaining == 0

    def mark(self, region: PatchRegion, fresh: np.ndarray) -> None:
        view = self.denoised[region.slices]
        view[fresh] = True
        self._remaining -= int(fresh.sum())


class EngineState:
    """Working state of one timestep loop.

    ``prev`` is the read-only snapshot of z_t; ``next`` accumulates
    z_{t_prev}. ``write_counts`` counts first-writes per cell and must be
    exactly 1 everywhere when a timestep completes.
    """

    def __init__(self, shape: tuple[int, int, int], sched: NoiseSchedule,
                 rng: np.random.Generator, patch_h: int, patch_w: int, *,
                 overlap_tolerance: int = DEFAULT_OVERLAP_TOLERANCE,
                 selection: str = "random",
                 mask_guidance_step: str = "prev",
                 stats: StageStats | None = None):
        channels, height, width = shape
        if not (1 <= patch_h <= height and 1 <= patch_w <= width):
            raise ConfigError(
                f"patch {patch_h}x{patch_w} must fit inside grid {height}x{width}")
        if overlap_tolerance < 0:
            raise ConfigError(f"overlap tolerance must be >= 0, got {overlap_tolerance}")
        if selection not in ("random", "raster"):
            raise ConfigError(f"unknown selection mode {selection!r}")
        if mask_guidance_step not in ("prev", "current"):
            raise ConfigError(f"mask_guidance_step must be 'prev' or 'current', got {mask_guidance_step!r}")
        self.channels, self.height, self.width = channels, height, width
        self.sched = sched
        self.rng = rng
        self.patch_h, self.patch_w = patch_h, patch_w
        self.overlap_tolerance = overlap_tolerance
        self.selection = selection
        self.mask_guidance_step = mask_guidance_step
        self.stats = stats if stats is not None else StageStats()
        self.stats.configured_patch_area = patch_h * patch_w
        self.ledger = StepLedger(height, width)
        self.write_counts = np.zeros((height, width), dtype=np.int32)
        self.prev: np.ndarray | None = None
        self.next: np.ndarray | None = None
        self._raster_plan = self._build_raster_plan()

    def _build_raster_plan(self) -> list[PatchRegion]:
        tops = list(range(0, self.height - self.patch_h + 1, self.patch_h))
        if tops[-1] != self.height - self.patch_h:
            tops.append(self.height - self.patch_h)
        lefts = list(range(0, self.width - self.patch_w + 1, self.patch_w))
        if lefts[-1] != self.width - self.patch_w:
            lefts.append(self.width - self.patch_w)
        return [PatchRegion(t, l, self.patch_h, self.patch_w) for t in tops for l in lefts]

    def begin_step(self, z_t: np.ndarray) -> None:
        """Install z_t as the immutable snapshot and reset the ledger."""
        if z_t.shape != (self.channels, self.height, self.width):
            raise ShapeMismatchError(
                f"z_t shape {z_t.shape} != grid shape {(self.channels, self.height, self.width)}")
        self.prev = z_t
        self.prev.setflags(write=False)
        self.next = z_t.copy()
        self.ledger.clear()
        self.write_counts[:] = 0


def select_patch(state: EngineState) -> PatchRegion:
    """Pick the next region to denoise; it always holds >= 1 fresh cell.

    Random mode draws an un-denoised cell uniformly, then a uniform patch
    placement covering that cell, clamped inside the grid. Raster mode
    walks a fixed tiling in row-major order (test determinism).
    """
    ledger = state.ledger
    if ledger.full():
        raise SchedulingError("select_patch called with a full ledger")
    if state.selection == "raster":
        for region in state._raster_plan:
            if not ledger.denoised[region.slices].all():
                return region
        raise SchedulingError("raster plan exhausted with un-denoised cells left")
    undenoised = np.flatnonzero(~ledger.denoised.ravel())
    pick = int(undenoised[int(state.rng.integers(undenoised.size))])
    r, c = divmod(pick, state.width)
    top_lo = max(0, r - state.patch_h + 1)
    top_hi = min(r, state.height - state.patch_h)
    left_lo = max(0, c - state.patch_w + 1)
    left_hi = min(c, state.width - state.patch_w)
    top = int(state.rng.integers(top_lo, top_hi + 1))
    left = int(state.rng.integers(left_lo, left_hi + 1))
    return PatchRegion(top, left, state.patch_h, state.patch_w)


def blend_paste(state: EngineState, region: PatchRegion, new_patch: np.ndarray) -> None:
    """Write a denoised patch into the step output under the ledger rules.

    Fresh cells (not yet denoised this step) take the new values and are
    marked. Cells already denoised and within Chebyshev distance
    ``overlap_tolerance`` of any of this paste's fresh cells are averaged
    50/50 with the new values; deeper overlap keeps its first denoising.
    """
    region.check_inside(state.height, state.width)
    if new_patch.shape != (state.channels, region.height, region.width):
        raise ShapeMismatchError(
            f"patch shape {new_patch.shape} != expected {(state.channels, region.height, region.width)}")
    check_finite(new_patch, "pasted patch")
    already = state.ledger.denoised[region.slices]
    fresh = ~already
    state.ledger.band[:] = False
    if fresh.any():
        size = 2 * state.overlap_tolerance + 1
        near_fresh = ndimage.maximum_filter(
            fresh.astype(np.uint8), size=size, mode="constant", cval=0).astype(bool)
        band = already & near_fresh
    else:
        band = np.zeros_like(already)
    out = state.next[(..., *region.slices)]
    out[:, fresh] = new_patch[:, fresh]
    if band.any():
        out[:, band] = 0.5 * (out[:, band] + new_patch[:, band])
        state.ledger.band[region.slices] = band
    state.write_counts[region.slices][fresh] += 1
    state.ledger.mark(region, fresh)


def denoise_timestep(state: EngineState, pair: StepPair, denoiser: Denoiser,
                     condition: Condition = None, *,
                     guidance: GuidanceStack | None = None,
                     guided: bool = False) -> np.ndarray:
    """Run one full reverse step; returns z_{t_prev} once coverage is complete.

    Every model input is cropped from the pre-step snapshot, never from
    the partially built output. Guided steps fuse the input patch with
    guidance at t before prediction and chess-mask the denoised result
    with guidance afterwards.
    """
    if state.prev is None:
        raise SchedulingError("begin_step must be called before denoise_timestep")
    if guided and guidance is None:
        raise ConfigError("guided step requested without a guidance stack")
    grid_area = state.height * state.width
    patch_area = state.patch_h * state.patch_w
    max_patches = LIVELOCK_FACTOR * max(1, -(-grid_area // patch_area))
    mask_t = pair.t_prev if state.mask_guidance_step == "prev" else pair.t
    patches = 0
    while not state.ledger.full():
        region = select_patch(state)
        patch = crop(state.prev, region)
        if guided:
            patch = fuse_phase(patch, guidance_at(guidance, pair.t, region))
        eps_hat = denoiser.predict_noise(patch, pair.t, condition, region)
        state.stats.denoiser_calls += 1
        state.stats.max_patch_area = max(state.stats.max_patch_area, region.area)
        new = ddim_step(patch, eps_hat, pair, state.sched)
        if guided:
            new = chess_mask_apply(new, guidance_at(guidance, mask_t, region), region)
        blend_paste(state, region, new)
        patches += 1
        if patches > max_patches:
            raise SchedulingError(
                f"timestep exceeded {max_patches} patches without covering the grid")
    if not np.all(state.write_counts == 1):
        raise SchedulingError("a latent position was first-written more or less than once")
    state.stats.patches_per_step.append(patches)
    result = state.next
    state.prev = None
    state.next = None
    return result


def sample_latent(height: int, width: int, sched: NoiseSchedule, denoiser: Denoiser,
                  patch_size: int | tuple[int, int], *,
                  channels: int = 4,
                  condition: Condition = None,
                  seed=None,
                  rng: np.random.Generator | None = None,
                  z_init: np.ndarray | None = None,
                  guidance: GuidanceStack | None = None,
                  slider: int = 0,
                  overlap_tolerance: int = DEFAULT_OVERLAP_TOLERANCE,
                  selection: str = "random",
                  mask_guidance_step: str = "prev",
                  stats: StageStats | None = None) -> np.ndarray:
    """Generate a clean latent by patch-based reverse diffusion.

    Starts from ``z_init`` (or fresh standard-normal noise from the seeded
    generator) and runs the full inference trajectory. ``slider`` counts
    the guided steps from the noisiest end and requires ``guidance`` when
    positive. The denoiser only ever sees patches of exactly
    ``patch_size``, whatever the grid resolution.
    """
    if isinstance(patch_size, int):
        patch_h = patch_w = patch_size
    else:
        patch_h, patch_w = patch_size
    n_steps = sched.num_inference_steps
    slider_cfg = SliderConfig(slider, n_steps)
    if slider > 0 and guidance is None:
        raise ConfigError("slider > 0 requires a guidance stack")
    if guidance is not None and guidance.z0_guid.shape != (channels, height, width):
        raise ShapeMismatchError(
            f"guidance shape {guidance.z0_guid.shape} != latent shape {(channels, height, width)}")
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))
    state = EngineState((channels, height, width), sched, rng, patch_h, patch_w,
                        overlap_tolerance=overlap_tolerance, selection=selection,
                        mask_guidance_step=mask_guidance_step, stats=stats)
    if z_init is None:
        z = rng.standard_normal((channels, height, width))
    else:
        if z_init.shape != (channels, height, width):
            raise ShapeMismatchError(
                f"z_init shape {z_init.shape} != latent shape {(channels, height, width)}")
        z = np.array(z_init, dtype=np.float64)
    started = time.perf_counter()
    for i, pair in enumerate(sched.step_pairs()):
        guided = guidance is not None and is_guided(i, slider_cfg)
        state.begin_step(z)
        z = denoise_timestep(state, pair, denoiser, condition,
                             guidance=guidance, guided=guided)
    state.stats.wall_time_s += time.perf_counter() - started
    return z
