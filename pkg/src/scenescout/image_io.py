"""Image file IO: PNG for color, PFM for float depth, indexed PNG for masks."""

from __future__ import annotations

import io
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import ParseError


def write_png(image: np.ndarray, path: str | Path) -> None:
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def read_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def png_bytes(image: np.ndarray) -> bytes:
    buf = io.BytesIO()
    Image.fromarray(np.asarray(image, dtype=np.uint8), mode="RGB").save(buf, format="PNG")
    return buf.getvalue()


def decode_png_bytes(data: bytes) -> np.ndarray:
    with Image.open(io.BytesIO(data)) as img:
        return np.asarray(img.convert("RGB"), dtype=np.uint8)


def write_pfm(depth: np.ndarray, path: str | Path) -> None:
    """Write a single-channel float32 PFM (little-endian, scale -1.0).

    Rows are stored bottom-up per the format convention; +inf becomes 0.0.
    """
    depth = np.asarray(depth, dtype=np.float32)
    if depth.ndim != 2:
        raise ValueError("PFM writer expects a 2D depth map")
    data = np.where(np.isfinite(depth), depth, np.float32(0.0))
    with open(path, "wb") as fh:
        fh.write(b"Pf\n")
        fh.write(f"{depth.shape[1]} {depth.shape[0]}\n".encode("ascii"))
        fh.write(b"-1.0\n")
        fh.write(np.flipud(data).astype("<f4").tobytes())


def read_pfm(path: str | Path) -> np.ndarray:
    """Read a grayscale PFM; 0.0 values are restored to +inf."""
    raw = Path(path).read_bytes()
    parts = raw.split(b"\n", 3)
    if len(parts) < 4 or parts[0] not in (b"Pf", b"PF"):
        raise ParseError("not a PFM file")
    if parts[0] == b"PF":
        raise ParseError("color PFM not supported, expected grayscale 'Pf'")
    try:
        width, height = (int(x) for x in parts[1].split())
        scale = float(parts[2])
    except ValueError as exc:
        raise ParseError("malformed PFM header") from exc
    dtype = "<f4" if scale < 0 else ">f4"
    expect = width * height * 4
    if len(parts[3]) < expect:
        raise ParseError("truncated PFM data")
    data = np.frombuffer(parts[3][:expect], dtype=dtype).reshape(height, width)
    data = np.flipud(data).astype(np.float32)
    return np.where(data == 0.0, np.float32(np.inf), data)


_MASK_PALETTE_SEED = 12345


def _mask_palette(n: int) -> list[int]:
    # index 0 black, then visually distinct pseudo-random colors, stable across runs
    rng = np.random.default_rng(_MASK_PALETTE_SEED)
    colors = rng.integers(48, 255, size=(max(n, 1), 3))
    palette = [0, 0, 0]
    for c in colors:
        palette.extend(int(x) for x in c)
    palette.extend([0] * (768 - len(palette)))
    return palette[:768]


def write_index_png(indices: np.ndarray, path: str | Path) -> None:
    """Write an 8-bit indexed (palette) PNG of small integer region ids."""
    arr = np.asarray(indices)
    if arr.min() < 0 or arr.max() > 255:
        raise ValueError("indices must fit uint8")
    img = Image.fromarray(arr.astype(np.uint8), mode="P")
    img.putpalette(_mask_palette(int(arr.max())))
    img.save(path, format="PNG")


def read_index_png(path: str | Path) -> np.ndarray:
    with Image.open(path) as img:
        if img.mode not in ("P", "L"):
            raise ParseError(f"mask PNG must be indexed or grayscale, got mode {img.mode!r}")
        return np.asarray(img, dtype=np.int64)
