"""Binary mask IO.

Accepted encodings:
  - PNG: any nonzero channel marks foreground.
  - RLE JSON: {"size": [height, width], "counts": [...]} with counts
    alternating background/foreground runs in row-major order, starting
    with a background run (possibly 0).
"""

import io
import json
from pathlib import Path
from typing import List, Sequence, Union

import numpy as np
from PIL import Image


def decode_rle(size: Sequence[int], counts: Sequence[int]) -> np.ndarray:
    height, width = int(size[0]), int(size[1])
    total = height * width
    if any(c < 0 for c in counts):
        raise ValueError("RLE counts must be non-negative")
    if sum(counts) != total:
        raise ValueError(f"RLE counts sum {sum(counts)} != {total} pixels")
    flat = np.zeros(total, dtype=bool)
    pos = 0
    fg = False
    for run in counts:
        if fg:
            flat[pos : pos + run] = True
        pos += run
        fg = not fg
    return flat.reshape(height, width)


def encode_rle(mask: np.ndarray) -> List[int]:
    flat = np.asarray(mask, dtype=bool).ravel()
    counts: List[int] = []
    fg = False
    pos = 0
    n = len(flat)
    while pos < n:
        run_end = pos
        while run_end < n and flat[run_end] == fg:
            run_end += 1
        counts.append(run_end - pos)
        pos = run_end
        fg = not fg
    if not counts:
        counts = [0]
    # A mask starting with foreground yields a leading 0 background run.
    return counts


def load_mask(source: Union[str, Path, bytes, dict]) -> np.ndarray:
    """Load a binary mask from a PNG path/bytes or an RLE JSON mapping."""
    if isinstance(source, dict):
        return decode_rle(source["size"], source["counts"])
    if isinstance(source, bytes):
        if source.lstrip().startswith(b"{"):
            payload = json.loads(source.decode("utf-8"))
            return decode_rle(payload["size"], payload["counts"])
        img = Image.open(io.BytesIO(source))
        return _image_to_mask(img)
    path = Path(source)
    if path.suffix.lower() == ".json":
        payload = json.loads(path.read_text(encoding="utf-8"))
        return decode_rle(payload["size"], payload["counts"])
    with Image.open(path) as img:
        return _image_to_mask(img)


def _image_to_mask(img: Image.Image) -> np.ndarray:
    arr = np.asarray(img)
    if arr.ndim == 2:
        return arr != 0
    return np.any(arr != 0, axis=-1)
