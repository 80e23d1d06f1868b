"""Structure guidance for upscaling stages.

The previous stage's image, upsampled and encoded, yields guidance latents
on demand via the closed-form forward process. During guided steps the
engine fuses each working patch with its guidance patch in Fourier space —
keeping the patch's amplitudes but averaging the phases circularly — and
composites the denoised result with guidance through an absolute-parity
chess mask. The Slider decides how many reverse steps, counted from the
noisiest, are guided at all.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, ShapeMismatchError
from .grid import PatchRegion, crop, fft2, ifft2
from .resample import as_image, lanczos_resize
from .schedule import NoiseSchedule, add_noise

# |e^{i a} + e^{i b}| below this counts as antipodal; the patch phase wins.
DEGENERATE_PHASOR_TOL = 1e-12


@dataclass(frozen=True)
class SliderConfig:
    """Number of guided reverse steps, counted from the noisiest step."""

    slider: int
    num_steps: int

    def __post_init__(self):
        if not 0 <= self.slider <= self.num_steps:
            raise ConfigError(
                f"slider must be in [0, {self.num_steps}], got {self.slider}")


def is_guided(step_index: int, cfg: SliderConfig) -> bool:
    """True iff reverse step ``step_index`` (0 = noisiest) uses guidance.

    slider = 0 leaves every step unconstrained; slider = num_steps guides
    them all, reproducing the previous resolution almost exactly.
    """
    return step_index < cfg.slider


@dataclass(frozen=True)
class GuidanceStack:
    """Encoded guidance latent plus its fixed noise draw.

    ``guidance_at`` re-noises ``z0_guid`` to any timestep on demand; no
    per-timestep tensor is ever stored. With ``fresh_noise_per_step`` the
    draw is re-derived deterministically per timestep instead of shared —
    kept off by default so guidance is temporally coherent.
    """

    z0_guid: np.ndarray
    eps_guid: np.ndarray
    sched: NoiseSchedule
    fresh_noise_per_step: bool = False
    noise_entropy: int = 0

    def __post_init__(self):
        if self.z0_guid.shape != self.eps_guid.shape:
            raise ShapeMismatchError(
                f"z0_guid shape {self.z0_guid.shape} != eps_guid shape {self.eps_guid.shape}")

    def eps_at(self, t: int) -> np.ndarray:
        if not self.fresh_noise_per_step:
            return self.eps_guid
        seq = np.random.SeedSequence((self.noise_entropy, int(t)))
        return np.random.Generator(np.random.PCG64(seq)).standard_normal(self.z0_guid.shape)


def prepare_guidance(prev_image: np.ndarray, codec, target_h: int, target_w: int,
                     seed, sched: NoiseSchedule, *,
                     fresh_noise_per_step: bool = False) -> GuidanceStack:
    """Upsample the previous stage's image and encode it as guidance.

    ``target_h``/``target_w`` are pixel dims of the new stage; they must be
    at least the source dims and divisible by the codec scale. The noise
    draw comes once from the seeded generator, so equal inputs give
    bit-identical stacks.
    """
    prev_image = as_image(prev_image)
    if target_h < prev_image.shape[0] or target_w < prev_image.shape[1]:
        raise ConfigError(
            f"target dims {target_h}x{target_w} smaller than source {prev_image.shape[0]}x{prev_image.shape[1]}")
    if target_h % codec.scale or target_w % codec.scale:
        raise ConfigError(
            f"target dims {target_h}x{target_w} not divisible by codec scale {codec.scale}")
    z0_guid = codec.encode(lanczos_resize(prev_image, target_h, target_w))
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rng = np.random.Generator(np.random.PCG64(seq))
    eps_guid = rng.standard_normal(z0_guid.shape)
    entropy = int(np.random.Generator(np.random.PCG64(seq.spawn(1)[0])).integers(0, 2**63))
    return GuidanceStack(z0_guid=z0_guid, eps_guid=eps_guid, sched=sched,
                         fresh_noise_per_step=fresh_noise_per_step, noise_entropy=entropy)


def guidance_at(stack: GuidanceStack, t: int, region: PatchRegion) -> np.ndarray:
    """Guidance patch at timestep ``t`` for ``region``; pure in (t, region)."""
    return add_noise(crop(stack.z0_guid, region), crop(stack.eps_at(t), region),
                     t, stack.sched)


def average_phases(phi_a: np.ndarray, phi_b: np.ndarray) -> np.ndarray:
    """Circular mean of two phase arrays: arg(e^{i phi_a} + e^{i phi_b}).

    Summing unit phasors handles wraparound correctly (0 and 2*pi - 0.2
    average to -0.1, not pi). Antipodal pairs have no defined mean; there
    the first operand's phase is kept.
    """
    s = np.exp(1j * np.asarray(phi_a)) + np.exp(1j * np.asarray(phi_b))
    degenerate = np.abs(s) < DEGENERATE_PHASOR_TOL
    return np.where(degenerate, phi_a, np.angle(np.where(degenerate, 1.0, s)))


def fuse_spectrum(z_patch: np.ndarray, guid_patch: np.ndarray, *,
                  average_phase: bool = True,
                  average_amplitude: bool = False) -> np.ndarray:
    """Fused Fourier representation of a working patch and its guidance.

    Default (the product path): the patch's amplitudes with circularly
    averaged phases. The flags select the ablation variants — amplitude
    averaging with the patch's phases, or averaging both — for test-bench
    comparison only.
    """
    if z_patch.shape != guid_patch.shape:
        raise ShapeMismatchError(
            f"patch shape {z_patch.shape} != guidance shape {guid_patch.shape}")
    spec_z = fft2(z_patch)
    spec_g = fft2(guid_patch)
    amp = np.abs(spec_z)
    if average_amplitude:
        amp = 0.5 * (amp + np.abs(spec_g))
    phase = np.angle(spec_z)
    if average_phase:
        phase = average_phases(phase, np.angle(spec_g))
    return amp * np.exp(1j * phase)


def fuse_phase(z_patch: np.ndarray, guid_patch: np.ndarray) -> np.ndarray:
    """Phase-average fusion in Fourier space, back in the spatial domain.

    The fused spectrum is not conjugate-symmetric in general, so the
    inverse takes the real part unconditionally.
    """
    return ifft2(fuse_spectrum(z_patch, guid_patch), allow_asymmetric=True)


def chess_mask(region: PatchRegion) -> np.ndarray:
    """Parity mask over ``region`` in absolute grid coordinates.

    Cell (i, j) gets 0 when i + j is even (guidance wins there) and 1 when
    odd (the denoised value wins). Absolute coordinates make overlapping
    regions agree on every shared cell.
    """
    i = region.top + np.arange(region.height, dtype=np.int64)
    j = region.left + np.arange(region.width, dtype=np.int64)
    return ((i[:, None] + j[None, :]) % 2).astype(np.float64)


def chess_mask_apply(denoised_patch: np.ndarray, guid_patch: np.ndarray,
                     region: PatchRegion) -> np.ndarray:
    """Composite a denoised patch with guidance through the chess mask."""
    if denoised_patch.shape != guid_patch.shape:
        raise ShapeMismatchError(
            f"denoised shape {denoised_patch.shape} != guidance shape {guid_patch.shape}")
    if denoised_patch.shape[-2:] != (region.height, region.width):
        raise ShapeMismatchError(
            f"patch shape {denoised_patch.shape[-2:]} != region {region.height}x{region.width}")
    lam = chess_mask(region)
    return lam * denoised_patch + (1.0 - lam) * guid_patch
