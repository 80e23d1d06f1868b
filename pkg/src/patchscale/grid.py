"""Latent grids, patch regions, and the per-channel 2-D Fourier pair.

A latent grid is a float64 array of shape (channels, height, width); a
spectrum is its complex DFT, channel by channel, in unshifted layout with
the unnormalized-forward / 1/(p_h*p_w)-inverse convention (numpy default).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BoundsError, NumericError, ShapeMismatchError

# Max tolerated |imag|/max(1, max|real|) when inverting a spectrum that is
# expected to be conjugate-symmetric.
IFFT_RESIDUE_TOL = 1e-6


@dataclass(frozen=True)
class PatchRegion:
    """A (top, left, height, width) window in latent pixel coordinates."""

    top: int
    left: int
    height: int
    width: int

    def __post_init__(self):
        if self.height < 1 or self.width < 1:
            raise BoundsError(f"region size {self.height}x{self.width} must be >= 1x1")
        if self.top < 0 or self.left < 0:
            raise BoundsError(f"region corner ({self.top}, {self.left}) is negative")

    @property
    def slices(self) -> tuple[slice, slice]:
        return (slice(self.top, self.top + self.height),
                slice(self.left, self.left + self.width))

    @property
    def area(self) -> int:
        return self.height * self.width

    def check_inside(self, grid_height: int, grid_width: int) -> None:
        if self.top + self.height > grid_height:
            raise BoundsError(
                f"region rows [{self.top}, {self.top + self.height}) exceed grid height {grid_height}")
        if self.left + self.width > grid_width:
            raise BoundsError(
                f"region cols [{self.left}, {self.left + self.width}) exceed grid width {grid_width}")


def new_grid(channels: int, height: int, width: int, fill: float = 0.0) -> np.ndarray:
    """Allocate a latent grid of shape (channels, height, width)."""
    if channels < 1 or height < 1 or width < 1:
        raise ShapeMismatchError(f"grid dims ({channels}, {height}, {width}) must be >= 1")
    return np.full((channels, height, width), fill, dtype=np.float64)


def as_grid(data) -> np.ndarray:
    """Validate and return ``data`` as a float64 latent grid."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeMismatchError(f"latent grid must be 3-D (C, H, W), got shape {arr.shape}")
    if min(arr.shape) < 1:
        raise ShapeMismatchError(f"grid dims {arr.shape} must be >= 1")
    return arr


def check_finite(arr: np.ndarray, what: str = "grid") -> np.ndarray:
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{what} contains non-finite values")
    return arr


def crop(grid: np.ndarray, region: PatchRegion) -> np.ndarray:
    """Copy the values of ``region`` out of ``grid``.

    The source is untouched; the result owns its memory.
    """
    region.check_inside(grid.shape[-2], grid.shape[-1])
    return grid[(..., *region.slices)].copy()


def paste(grid: np.ndarray, region: PatchRegion, patch: np.ndarray) -> None:
    """Write ``patch`` into ``region`` of ``grid`` in place."""
    region.check_inside(grid.shape[-2], grid.shape[-1])
    if patch.shape[-2:] != (region.height, region.width):
        raise ShapeMismatchError(
            f"patch shape {patch.shape[-2:]} does not match region {region.height}x{region.width}")
    grid[(..., *region.slices)] = patch


def fft2(patch: np.ndarray) -> np.ndarray:
    """Per-channel 2-D DFT of a latent patch (forward unnormalized)."""
    check_finite(patch, "fft2 input")
    return np.fft.fft2(patch, axes=(-2, -1))


def ifft2(spec: np.ndarray, *, allow_asymmetric: bool = False) -> np.ndarray:
    """Inverse per-channel 2-D DFT, returning the real part.

    Spectra of real patches are conjugate-symmetric and must invert with
    negligible imaginary residue; that is checked unless
    ``allow_asymmetric`` is set, which the phase-fusion path uses because
    replacing phases coefficient-wise breaks the symmetry.
    """
    if not np.all(np.isfinite(spec.real)) or not np.all(np.isfinite(spec.imag)):
        raise NumericError("ifft2 input contains non-finite values")
    out = np.fft.ifft2(spec, axes=(-2, -1))
    if not allow_asymmetric:
        scale = max(1.0, float(np.max(np.abs(out.real))) if out.size else 1.0)
        residue = float(np.max(np.abs(out.imag))) if out.size else 0.0
        if residue > IFFT_RESIDUE_TOL * scale:
            raise NumericError(
                f"ifft2 imaginary residue {residue:.3e} exceeds {IFFT_RESIDUE_TOL:.0e} * {scale:.3e}")
    return np.ascontiguousarray(out.real)
