"""Binary PPM (P6) and PGM (P5) image files, 8-bit only.

Values map linearly between [0, 1] floats and 0..255 with round-half-up
quantization. The written header is exactly ``{magic}\\n{w} {h}\\n255\\n``
so outputs are byte-reproducible.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import FormatError
from .resample import as_image

_MAGIC_CHANNELS = {b"P5": 1, b"P6": 3}


def write_image(img: np.ndarray, path) -> None:
    """Write a pixel image as P6 (3 channels) or P5 (1 channel)."""
    img = as_image(img)
    magic = b"P6" if img.shape[2] == 3 else b"P5"
    q = np.clip(np.floor(img * 255.0 + 0.5), 0, 255).astype(np.uint8)
    header = magic + b"\n%d %d\n255\n" % (img.shape[1], img.shape[0])
    Path(path).write_bytes(header + q.tobytes())


def read_image(path) -> np.ndarray:
    """Read a P5/P6 file into a float64 (H, W, C) image in [0, 1]."""
    data = Path(path).read_bytes()
    if len(data) < 2 or data[:2] not in _MAGIC_CHANNELS:
        raise FormatError(f"{path}: not a binary PGM/PPM file (expected P5 or P6 magic)")
    channels = _MAGIC_CHANNELS[data[:2]]
    pos = 2
    fields: list[int] = []
    while len(fields) < 3:
        if pos >= len(data):
            raise FormatError(f"{path}: header ended before width/height/maxval")
        byte = data[pos:pos + 1]
        if byte.isspace():
            pos += 1
        elif byte == b"#":
            eol = data.find(b"\n", pos)
            pos = len(data) if eol < 0 else eol + 1
        elif byte.isdigit():
            start = pos
            while pos < len(data) and data[pos:pos + 1].isdigit():
                pos += 1
            fields.append(int(data[start:pos]))
        else:
            raise FormatError(f"{path}: unexpected byte {byte!r} in header")
    width, height, maxval = fields
    if width < 1 or height < 1:
        raise FormatError(f"{path}: bad dimensions {width}x{height}")
    if maxval != 255:
        raise FormatError(f"{path}: maxval {maxval} unsupported (only 8-bit, maxval 255)")
    if pos >= len(data) or not data[pos:pos + 1].isspace():
        raise FormatError(f"{path}: missing whitespace before payload")
    pos += 1
    need = width * height * channels
    payload = data[pos:pos + need]
    if len(payload) < need:
        raise FormatError(f"{path}: payload truncated ({len(payload)} of {need} bytes)")
    values = np.frombuffer(payload, dtype=np.uint8).astype(np.float64) / 255.0
    return values.reshape(height, width, channels)
