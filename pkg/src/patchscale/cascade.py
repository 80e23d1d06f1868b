"""Stage orchestration: base generation, then guided upscaling stages.

Each stage decodes to pixel space, and the next stage re-enters latent
space only through Lanczos upsampling of that image followed by the codec
encoder — latent tensors themselves are never resized. The number of
stages is free: one hop straight to the target resolution, or a chain of
intermediates for more local refinement.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .denoisers import Condition, Denoiser, OracleDenoiser
from .engine import DEFAULT_OVERLAP_TOLERANCE, StageStats, sample_latent
from .errors import ConfigError
from .guidance import GuidanceStack, prepare_guidance
from .resample import lanczos_resize
from .schedule import (DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_TRAIN_STEPS,
                       NoiseSchedule, build_linear_schedule)


@dataclass(frozen=True)
class StageSpec:
    """One cascade stage: target pixel resolution and sampling knobs."""

    height: int
    width: int
    steps: int = 50
    slider: int = 0
    patch_height: int = 128
    patch_width: int = 128
    seed: int | None = None


@dataclass
class StageResult:
    """Decoded image and instrumentation of one completed stage."""

    index: int
    spec: StageSpec
    seed: int
    latent_shape: tuple[int, int, int]
    image: np.ndarray
    stats: StageStats


# A factory receives everything a stage knows and returns its denoiser.
DenoiserFactory = Callable[[int, StageSpec, NoiseSchedule, tuple, Union[GuidanceStack, None]], Denoiser]


def stage_seed(master_seed: int, stage_index: int) -> int:
    """Per-stage seed derived by counter, so adding a stage never perturbs earlier ones."""
    seq = np.random.SeedSequence((int(master_seed), int(stage_index)))
    return int(seq.generate_state(1, np.uint64)[0])


def validate_stages(stages: list[StageSpec], codec) -> list[tuple[int | None, str]]:
    """Constraint violations as (stage index or None, message) pairs."""
    problems: list[tuple[int | None, str]] = []
    if not stages:
        problems.append((None, "at least one stage is required"))
    f = codec.scale
    prev_dims = None
    for k, stage in enumerate(stages):
        if stage.height < 1 or stage.width < 1:
            problems.append((k, f"dims {stage.height}x{stage.width} must be >= 1"))
            continue
        if stage.height % f or stage.width % f:
            problems.append(
                (k, f"dims {stage.height}x{stage.width} not divisible by codec scale {f}"))
            continue
        lat_h, lat_w = stage.height // f, stage.width // f
        if not (1 <= stage.patch_height <= lat_h and 1 <= stage.patch_width <= lat_w):
            problems.append(
                (k, f"patch {stage.patch_height}x{stage.patch_width} must fit latent {lat_h}x{lat_w}"))
        if stage.steps < 1:
            problems.append((k, f"steps must be >= 1, got {stage.steps}"))
        elif not 0 <= stage.slider <= stage.steps:
            problems.append((k, f"slider {stage.slider} outside [0, {stage.steps}]"))
        if k == 0 and stage.slider != 0:
            problems.append((0, "stage 0 has no predecessor to guide it; slider must be 0"))
        if prev_dims is not None and (stage.height < prev_dims[0] or stage.width < prev_dims[1]):
            problems.append(
                (k, f"dims {stage.height}x{stage.width} shrink below previous {prev_dims[0]}x{prev_dims[1]}"))
        prev_dims = (stage.height, stage.width)
    return problems


def run_cascade(stages: list[StageSpec], denoiser: Denoiser | DenoiserFactory, codec,
                condition: Condition = None, *,
                master_seed: int = 0,
                train_steps: int = DEFAULT_TRAIN_STEPS,
                beta_start: float = DEFAULT_BETA_START,
                beta_end: float = DEFAULT_BETA_END,
                overlap_tolerance: int = DEFAULT_OVERLAP_TOLERANCE,
                mask_guidance_step: str = "prev",
                trace: list[StageResult] | None = None) -> np.ndarray:
    """Run every stage in order and return the final decoded image.

    ``denoiser`` is either a single instance used everywhere or a factory
    called once per stage. Stage seeds default to counter-derived children
    of ``master_seed``. Pass a list as ``trace`` to collect each stage's
    decoded image and stats (the CLI writes intermediates and the run
    report from it).
    """
    problems = validate_stages(stages, codec)
    if problems:
        raise ConfigError([msg if k is None else f"stage {k}: {msg}" for k, msg in problems])
    image: np.ndarray | None = None
    for k, stage in enumerate(stages):
        try:
            seed = stage.seed if stage.seed is not None else stage_seed(master_seed, k)
            sched = build_linear_schedule(train_steps, beta_start, beta_end, stage.steps)
            shape = (codec.latent_channels, stage.height // codec.scale, stage.width // codec.scale)
            rng_seq, guid_seq = np.random.SeedSequence(seed).spawn(2)
            rng = np.random.Generator(np.random.PCG64(rng_seq))
            if k == 0:
                stack = None
            else:
                stack = prepare_guidance(image, codec, stage.height, stage.width, guid_seq, sched)
            stage_denoiser = denoiser if isinstance(denoiser, Denoiser) else denoiser(
                k, stage, sched, shape, stack)
            stats = StageStats()
            z0 = sample_latent(shape[1], shape[2], sched, stage_denoiser,
                               (stage.patch_height, stage.patch_width),
                               channels=shape[0], condition=condition, rng=rng,
                               guidance=stack, slider=stage.slider,
                               overlap_tolerance=overlap_tolerance,
                               mask_guidance_step=mask_guidance_step, stats=stats)
            image = codec.decode(z0)
        except Exception as exc:
            raise _with_stage_context(exc, k) from exc
        if trace is not None:
            trace.append(StageResult(index=k, spec=stage, seed=seed,
                                     latent_shape=shape, image=image, stats=stats))
    return image


def _with_stage_context(exc: Exception, stage_index: int) -> Exception:
    message = f"stage {stage_index}: {exc}"
    try:
        return type(exc)(message)
    except Exception:
        return RuntimeError(message)


def oracle_factory_from_image(target_image: np.ndarray, codec,
                              max_patch_area_from_stage: bool = True) -> DenoiserFactory:
    """Denoiser factory whose per-stage target is the encoded target image.

    The target is Lanczos-resized to each stage's pixel dims and encoded,
    so the analytic oracle steers every stage toward the same picture.
    """
    def factory(stage_index: int, stage: StageSpec, sched: NoiseSchedule,
                latent_shape: tuple, stack: GuidanceStack | None) -> Denoiser:
        resized = lanczos_resize(target_image, stage.height, stage.width)
        target = codec.encode(resized)
        max_area = stage.patch_height * stage.patch_width if max_patch_area_from_stage else None
        return OracleDenoiser(target, sched, max_patch_area=max_area)

    return factory
