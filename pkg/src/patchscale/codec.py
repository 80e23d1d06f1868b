"""Mock latent codecs with real-VAE shape semantics.

Both codecs honor the same contract: ``encode`` maps an (H, W, C) pixel
image to a latent grid of shape (latent_channels, H/f, W/f); ``decode``
maps back to pixel space, clamping to [0, 1]. A learned autoencoder can be
dropped in behind the same two methods.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeMismatchError
from .grid import as_grid
from .resample import as_image


class IdentityCodec:
    """Scale-1 codec: latent space is pixel space with channels first."""

    def __init__(self, channels: int = 3):
        if channels not in (1, 3):
            raise ShapeMismatchError(f"image channels must be 1 or 3, got {channels}")
        self.scale = 1
        self.latent_channels = channels
        self.image_channels = channels

    def encode(self, img: np.ndarray) -> np.ndarray:
        img = as_image(img)
        if img.shape[2] != self.image_channels:
            raise ShapeMismatchError(
                f"expected {self.image_channels}-channel image, got {img.shape[2]}")
        return np.ascontiguousarray(img.transpose(2, 0, 1))

    def decode(self, z: np.ndarray) -> np.ndarray:
        z = as_grid(z)
        if z.shape[0] != self.latent_channels:
            raise ShapeMismatchError(
                f"expected {self.latent_channels}-channel latent, got {z.shape[0]}")
        return np.clip(z.transpose(1, 2, 0), 0.0, 1.0)


def _bilinear_up(plane: np.ndarray, factor: int) -> np.ndarray:
    """Bilinear upsample of a 2-D plane by an integer factor.

    Half-pixel sample centers, edge-clamped.
    """
    out = plane
    for axis in (0, 1):
        n = out.shape[axis]
        x = (np.arange(n * factor, dtype=np.float64) + 0.5) / factor - 0.5
        i0 = np.clip(np.floor(x).astype(np.int64), 0, n - 1)
        i1 = np.clip(i0 + 1, 0, n - 1)
        frac = np.clip(x - np.floor(x), 0.0, 1.0)
        lo = np.take(out, i0, axis=axis)
        hi = np.take(out, i1, axis=axis)
        shape = [1, 1]
        shape[axis] = frac.size
        f = frac.reshape(shape)
        out = lo * (1.0 - f) + hi * f
    return out


class PoolCodec:
    """Box-average encoder / bilinear decoder at an integer scale factor.

    Encoding collapses the image to its channel mean, box-averages each
    f x f block, and replicates the result across ``latent_channels``.
    Decoding averages the latent channels, bilinearly upsamples, and
    replicates across ``image_channels``. Reconstruction is exact only for
    constant images; the declared tolerance is otherwise loose — this is
    shape-faithful plumbing, not a learned autoencoder.
    """

    def __init__(self, scale: int = 8, latent_channels: int = 4, image_channels: int = 3):
        if scale < 1:
            raise ShapeMismatchError(f"scale must be >= 1, got {scale}")
        if image_channels not in (1, 3):
            raise ShapeMismatchError(f"image channels must be 1 or 3, got {image_channels}")
        self.scale = scale
        self.latent_channels = latent_channels
        self.image_channels = image_channels

    def encode(self, img: np.ndarray) -> np.ndarray:
        img = as_image(img)
        h, w = img.shape[:2]
        f = self.scale
        if h % f or w % f:
            raise ShapeMismatchError(f"image dims {h}x{w} not divisible by scale {f}")
        gray = img.mean(axis=2)
        pooled = gray.reshape(h // f, f, w // f, f).mean(axis=(1, 3))
        return np.repeat(pooled[None, :, :], self.latent_channels, axis=0)

    def decode(self, z: np.ndarray) -> np.ndarray:
        z = as_grid(z)
        if z.shape[0] != self.latent_channels:
            raise ShapeMismatchError(
                f"expected {self.latent_channels}-channel latent, got {z.shape[0]}")
        up = _bilinear_up(z.mean(axis=0), self.scale)
        img = np.repeat(up[:, :, None], self.image_channels, axis=2)
        return np.clip(img, 0.0, 1.0)
