"""Pixel images and separable Lanczos resampling.

A pixel image is a float64 array of shape (height, width, channels) with
values in [0, 1] and 1 or 3 channels. All resolution changes in the
cascade happen here, in pixel space; latent tensors are never resized.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError

LANCZOS_A = 3  # kernel window: sinc(x) * sinc(x/a) for |x| < a


def as_image(data) -> np.ndarray:
    """Validate and return ``data`` as a float64 (H, W, C) pixel image."""
    img = np.asarray(data, dtype=np.float64)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3 or img.shape[2] not in (1, 3):
        raise ShapeMismatchError(
            f"pixel image must be (H, W, 1|3), got shape {np.asarray(data).shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ShapeMismatchError(f"image dims {img.shape[:2]} must be >= 1")
    return img


def _lanczos_kernel(x: np.ndarray, a: int) -> np.ndarray:
    out = np.sinc(x) * np.sinc(x / a)
    return np.where(np.abs(x) < a, out, 0.0)


def _axis_weights(n_in: int, n_out: int, a: int = LANCZOS_A) -> np.ndarray:
    """Dense (n_out, n_in) row-stochastic Lanczos weight matrix.

    Output index o samples the source at x = o * n_in / n_out
    (corner-aligned). For downscales the kernel is stretched by the scale
    ratio to act as a low-pass filter. Taps falling outside the source are
    clamped to the border; each row is normalized to sum 1 so constants
    are preserved exactly.
    """
    x = np.arange(n_out, dtype=np.float64) * (n_in / n_out)
    s = max(1.0, n_in / n_out)
    lo = np.floor(x - a * s).astype(np.int64) + 1
    taps = int(np.ceil(2 * a * s))
    idx = lo[:, None] + np.arange(taps)[None, :]
    w = _lanczos_kernel((idx - x[:, None]) / s, a)
    weights = np.zeros((n_out, n_in), dtype=np.float64)
    np.add.at(weights, (np.arange(n_out)[:, None], np.clip(idx, 0, n_in - 1)), w)
    return weights / weights.sum(axis=1, keepdims=True)


def lanczos_resize(img: np.ndarray, out_h: int, out_w: int, a: int = LANCZOS_A) -> np.ndarray:
    """Separable Lanczos resampling to (out_h, out_w), clamped to [0, 1]."""
    img = as_image(img)
    if out_h < 1 or out_w < 1:
        raise ShapeMismatchError(f"output dims ({out_h}, {out_w}) must be >= 1")
    rows = _axis_weights(img.shape[0], out_h, a)
    cols = _axis_weights(img.shape[1], out_w, a)
    out = np.tensordot(rows, img, axes=([1], [0]))           # (out_h, W, C)
    out = np.tensordot(cols, out, axes=([1], [1]))           # (out_w, out_h, C)
    return np.clip(out.transpose(1, 0, 2), 0.0, 1.0)
