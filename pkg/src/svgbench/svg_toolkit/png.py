"""Minimal deterministic PNG writer.

Encodes 8-bit RGB or RGBA arrays as PNG with a fixed parameterization
(filter type 0 on every row, zlib level 6, single IDAT chunk) so that
identical pixels always produce identical bytes, independent of library
versions.
"""

import struct
import zlib

import numpy as np

_SIGNATURE = b"\x89PNG\r\n\x1a\n"

# PNG color types for the channel counts we emit.
_COLOR_TYPE = {3: 2, 4: 6}  # 3 channels -> truecolor, 4 -> truecolor+alpha


def _chunk(tag: bytes, payload: bytes) -> bytes:
    body = tag + payload
    return struct.pack(">I", len(payload)) + body + struct.pack(
        ">I", zlib.crc32(body) & 0xFFFFFFFF
    )


def encode_png(pixels: np.ndarray) -> bytes:
    """Encode an (H, W, 3) RGB or (H, W, 4) RGBA uint8 array as PNG bytes."""
    arr = np.asarray(pixels)
    if arr.ndim != 3 or arr.shape[2] not in (3, 4) or arr.dtype != np.uint8:
        raise ValueError("expected (H, W, 3) or (H, W, 4) uint8 pixel array")
    height, width = arr.shape[:2]
    channels = arr.shape[2]
    if height < 1 or width < 1:
        raise ValueError("image must be at least 1x1")

    # filter byte 0 (None) prepended to each raw scanline
    raw = np.empty((height, 1 + width * channels), dtype=np.uint8)
    raw[:, 0] = 0
    raw[:, 1:] = arr.reshape(height, width * channels)

    ihdr = struct.pack(">IIBBBBB", width, height, 8, _COLOR_TYPE[channels], 0, 0, 0)
    idat = zlib.compress(raw.tobytes(), 6)
    return (
        _SIGNATURE
        + _chunk(b"IHDR", ihdr)
        + _chunk(b"IDAT", idat)
        + _chunk(b"IEND", b"")
    )


def decode_png(data: bytes) -> np.ndarray:
    """Decode PNG bytes back to an (H, W, 4) RGBA uint8 array (round-trip aid)."""
    from PIL import Image
    import io

    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGBA"), dtype=np.uint8)
