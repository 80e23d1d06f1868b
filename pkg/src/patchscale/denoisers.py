"""Noise-prediction contract plus the analytic implementations used in tests.

A denoiser maps (patch, t, condition, region) to a noise estimate of the
same shape. The region carries absolute grid coordinates; neural denoisers
would ignore it, analytic ones need it to localize their target. Every call
passes through the size tripwire: presenting a patch larger than the
declared maximum raises ContractViolationError, which is how the engine's
constant-memory guarantee is enforced rather than sampled.
"""

from __future__ import annotations

from typing import Hashable, Mapping

import numpy as np

from .errors import ContractViolationError, NumericError, ShapeMismatchError, SingularityError
from .grid import PatchRegion, check_finite, crop
from .schedule import NoiseSchedule

Condition = Hashable


class Denoiser:
    """Base class implementing the contract checks around ``_predict``."""

    def __init__(self, max_patch_area: int | None = None):
        self.max_patch_area = max_patch_area

    def predict_noise(self, patch: np.ndarray, t: int, condition: Condition,
                      region: PatchRegion) -> np.ndarray:
        area = patch.shape[-2] * patch.shape[-1]
        if self.max_patch_area is not None and area > self.max_patch_area:
            raise ContractViolationError(
                f"patch area {area} exceeds declared maximum {self.max_patch_area}")
        if (region.height, region.width) != patch.shape[-2:]:
            raise ShapeMismatchError(
                f"region {region.height}x{region.width} does not match patch {patch.shape[-2:]}")
        out = self._predict(patch, t, condition, region)
        if out.shape != patch.shape:
            raise ShapeMismatchError(
                f"denoiser returned shape {out.shape} for input {patch.shape}")
        return check_finite(out, "noise prediction")

    def _predict(self, patch: np.ndarray, t: int, condition: Condition,
                 region: PatchRegion) -> np.ndarray:
        raise NotImplementedError


class ZeroDenoiser(Denoiser):
    """Predicts zero noise everywhere; drives the DDIM step to pure rescaling."""

    def _predict(self, patch, t, condition, region):
        return np.zeros_like(patch)


class OracleDenoiser(Denoiser):
    """Exact noise prediction derived from a known clean target latent.

    Inverts the closed-form forward process:
    ``eps_hat = (patch - sqrt(abar_t) * target[region]) / sqrt(1 - abar_t)``.
    The prediction is patch-consistent — predicting on a crop equals
    cropping the full-grid prediction — so patch-based and whole-grid
    sampling are exactly comparable.

    ``target`` is either one grid used for every condition or a mapping
    from condition tokens to grids.
    """

    def __init__(self, target: np.ndarray | Mapping[Condition, np.ndarray],
                 sched: NoiseSchedule, max_patch_area: int | None = None):
        super().__init__(max_patch_area)
        self.sched = sched
        if isinstance(target, Mapping):
            self._registry = {c: np.asarray(g, dtype=np.float64) for c, g in target.items()}
            self._default = None
        else:
            self._registry = {}
            self._default = np.asarray(target, dtype=np.float64)

    def target_for(self, condition: Condition) -> np.ndarray:
        if self._default is not None:
            return self._default
        try:
            return self._registry[condition]
        except KeyError:
            raise NumericError(f"no oracle target registered for condition {condition!r}") from None

    def _predict(self, patch, t, condition, region):
        abar = self.sched.alpha_bar(t)
        if abar == 1.0:
            raise SingularityError(f"alpha_bar({t}) = 1; noise at t=0 is undefined")
        target = crop(self.target_for(condition), region)
        if target.shape != patch.shape:
            raise ShapeMismatchError(
                f"oracle target crop {target.shape} does not match patch {patch.shape}")
        return (patch - np.sqrt(abar) * target) / np.sqrt(1.0 - abar)
