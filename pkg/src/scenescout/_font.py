"""Embedded 5x7 bitmap font so overlays need no font files and stay byte-exact."""

from __future__ import annotations

import numpy as np

_GLYPHS = {
    "0": ".XXX.|X...X|X..XX|X.X.X|XX..X|X...X|.XXX.",
    "1": "..X..|.XX..|..X..|..X..|..X..|..X..|.XXX.",
    "2": ".XXX.|X...X|....X|...X.|..X..|.X...|XXXXX",
    "3": "XXXXX|...X.|..X..|...X.|....X|X...X|.XXX.",
    "4": "...X.|..XX.|.X.X.|X..X.|XXXXX|...X.|...X.",
    "5": "XXXXX|X....|XXXX.|....X|....X|X...X|.XXX.",
    "6": "..XX.|.X...|X....|XXXX.|X...X|X...X|.XXX.",
    "7": "XXXXX|....X|...X.|..X..|.X...|.X...|.X...",
    "8": ".XXX.|X...X|X...X|.XXX.|X...X|X...X|.XXX.",
    "9": ".XXX.|X...X|X...X|.XXXX|....X|...X.|.XX..",
    "A": ".XXX.|X...X|X...X|XXXXX|X...X|X...X|X...X",
    "B": "XXXX.|X...X|X...X|XXXX.|X...X|X...X|XXXX.",
    "C": ".XXX.|X...X|X....|X....|X....|X...X|.XXX.",
    "D": "XXX..|X..X.|X...X|X...X|X...X|X..X.|XXX..",
    "E": "XXXXX|X....|X....|XXXX.|X....|X....|XXXXX",
    "F": "XXXXX|X....|X....|XXXX.|X....|X....|X....",
    "G": ".XXX.|X...X|X....|X.XXX|X...X|X...X|.XXXX",
    "H": "X...X|X...X|X...X|XXXXX|X...X|X...X|X...X",
    "I": ".XXX.|..X..|..X..|..X..|..X..|..X..|.XXX.",
    "J": "..XXX|...X.|...X.|...X.|...X.|X..X.|.XX..",
    "K": "X...X|X..X.|X.X..|XX...|X.X..|X..X.|X...X",
    "L": "X....|X....|X....|X....|X....|X....|XXXXX",
    "M": "X...X|XX.XX|X.X.X|X.X.X|X...X|X...X|X...X",
    "N": "X...X|X...X|XX..X|X.X.X|X..XX|X...X|X...X",
    "O": ".XXX.|X...X|X...X|X...X|X...X|X...X|.XXX.",
    "P": "XXXX.|X...X|X...X|XXXX.|X....|X....|X....",
    "Q": ".XXX.|X...X|X...X|X...X|X.X.X|X..X.|.XX.X",
    "R": "XXXX.|X...X|X...X|XXXX.|X.X..|X..X.|X...X",
    "S": ".XXXX|X....|X....|.XXX.|....X|....X|XXXX.",
    "T": "XXXXX|..X..|..X..|..X..|..X..|..X..|..X..",
    "U": "X...X|X...X|X...X|X...X|X...X|X...X|.XXX.",
    "V": "X...X|X...X|X...X|X...X|X...X|.X.X.|..X..",
    "W": "X...X|X...X|X...X|X.X.X|X.X.X|XX.XX|X...X",
    "X": "X...X|X...X|.X.X.|..X..|.X.X.|X...X|X...X",
    "Y": "X...X|X...X|.X.X.|..X..|..X..|..X..|..X..",
    "Z": "XXXXX|....X|...X.|..X..|.X...|X....|XXXXX",
    "-": ".....|.....|.....|XXXXX|.....|.....|.....",
    ":": ".....|..X..|.....|.....|.....|..X..|.....",
    ".": ".....|.....|.....|.....|.....|.XX..|.XX..",
    ",": ".....|.....|.....|.....|..XX.|..X..|.X...",
    "(": "...X.|..X..|.X...|.X...|.X...|..X..|...X.",
    ")": ".X...|..X..|...X.|...X.|...X.|..X..|.X...",
    " ": ".....|.....|.....|.....|.....|.....|.....",
}

GLYPH_W = 5
GLYPH_H = 7
GLYPH_ADVANCE = 6  # glyph width + 1 px spacing, before scaling

_BITMAPS = {
    ch: np.array([[c == "X" for c in row] for row in pattern.split("|")], dtype=bool)
    for ch, pattern in _GLYPHS.items()
}


def glyph(ch: str) -> np.ndarray:
    return _BITMAPS.get(ch.upper(), _BITMAPS[" "])


def text_size(text: str, scale: int = 1) -> tuple[int, int]:
    """Pixel (width, height) of rendered text at an integer scale."""
    if not text:
        return 0, 0
    return (len(text) * GLYPH_ADVANCE - 1) * scale, GLYPH_H * scale


def scale_for_font_px(font_px: int) -> int:
    """Integer glyph scale whose height best matches the requested font size."""
    return max(1, round(font_px / GLYPH_H))


def text_mask(text: str, scale: int = 1) -> np.ndarray:
    """Boolean (h, w) bitmap of the text."""
    w, h = text_size(text, scale)
    mask = np.zeros((max(h, 1), max(w, 1)), dtype=bool)
    x = 0
    for ch in text:
        bitmap = glyph(ch)
        big = np.kron(bitmap, np.ones((scale, scale), dtype=bool))
        mask[0:GLYPH_H * scale, x:x + GLYPH_W * scale] |= big
        x += GLYPH_ADVANCE * scale
    return mask


def draw_text(
    image: np.ndarray,
    text: str,
    x: int,
    y: int,
    color: tuple[int, int, int],
    scale: int = 1,
    halo: tuple[int, int, int] | None = None,
) -> None:
    """Stamp text onto an RGB image in place, top-left corner at (x, y).

    Pixels falling outside the image are silently clipped. When halo is
    given, a 1-px (scaled) outline in that color is drawn first for contrast.
    """
    mask = text_mask(text, scale)
    if halo is not None:
        for dy in (-scale, 0, scale):
            for dx in (-scale, 0, scale):
                if dx == 0 and dy == 0:
                    continue
                _stamp(image, mask, x + dx, y + dy, halo)
    _stamp(image, mask, x, y, color)


def _stamp(image: np.ndarray, mask: np.ndarray, x: int, y: int, color) -> None:
    h, w = mask.shape
    ih, iw = image.shape[:2]
    x0, y0 = max(0, x), max(0, y)
    x1, y1 = min(iw, x + w), min(ih, y + h)
    if x0 >= x1 or y0 >= y1:
        return
    sub = mask[y0 - y:y1 - y, x0 - x:x1 - x]
    image[y0:y1, x0:x1][sub] = color
