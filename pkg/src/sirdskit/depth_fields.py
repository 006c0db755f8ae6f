"""Parametric depth maps, letter glyph embedding, and boundary smoothing.

Depth fields hold normalized values in [0, 1] where 0 is the image plane and
1 the maximum encodable near-depth. Background surfaces occupy [0, 0.6] of
that range; embedded letter plateaus exceed the background peak by a stated
ratio (1/5, 1/6, or 1/7).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import ParameterError

__all__ = [
    "DepthField",
    "GlyphSpec",
    "SURFACE_KINDS",
    "LETTERS",
    "make_surface",
    "embed_glyph",
    "smooth5",
    "rasterize_letter",
]

SURFACE_KINDS = ("egg_crate", "diagonal_sine", "ellipsoid", "mexican_hat", "flat")

BACKGROUND_SPAN = 0.6

# Hand-authored 7x7 master bitmaps. L must read as a full left column plus a
# bottom row; X must equal its own mirror; P and B differ only in the lower bowl.
_GLYPH_ROWS = {
    "S": (
        "0111111",
        "1000000",
        "1000000",
        "0111110",
        "0000001",
        "0000001",
        "1111110",
    ),
    "X": (
        "1000001",
        "0100010",
        "0010100",
        "0001000",
        "0010100",
        "0100010",
        "1000001",
    ),
    "L": (
        "1000000",
        "1000000",
        "1000000",
        "1000000",
        "1000000",
        "1000000",
        "1111111",
    ),
    "T": (
        "1111111",
        "0001000",
        "0001000",
        "0001000",
        "0001000",
        "0001000",
        "0001000",
    ),
    "P": (
        "1111110",
        "1000001",
        "1000001",
        "1111110",
        "1000000",
        "1000000",
        "1000000",
    ),
    "B": (
        "1111110",
        "1000001",
        "1000001",
        "1111110",
        "1000001",
        "1000001",
        "1111110",
    ),
}

LETTERS = tuple(_GLYPH_ROWS)

_SMOOTH_1D = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
SMOOTH_KERNEL = np.outer(_SMOOTH_1D, _SMOOTH_1D)


@dataclass(frozen=True, eq=False)
class DepthField:
    """W x H grid of normalized depth values plus a provenance descriptor."""

    values: np.ndarray
    provenance: dict

    def __post_init__(self):
        v = self.values
        if v.ndim != 2:
            raise ParameterError("depth values must be a 2-D grid")
        if v.size and (v.min() < 0.0 or v.max() > 1.0):
            raise ParameterError("depth values must lie in [0, 1]")

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class GlyphSpec:
    """A letter to embed: size in pixels, plateau ratio, horizontal offset."""

    letter: str
    size: int
    depth_ratio: float
    horizontal_offset: int = 0

    def __post_init__(self):
        if self.letter != "NONE" and self.letter not in _GLYPH_ROWS:
            raise ParameterError(f"unsupported letter {self.letter!r}")
        if self.letter != "NONE" and self.size < 10:
            raise ParameterError(f"glyph size must be >= 10, got {self.size}")
        if self.depth_ratio <= 0:
            raise ParameterError(f"depth_ratio must be positive, got {self.depth_ratio}")
        if abs(self.horizontal_offset) > 400:
            raise ParameterError(
                f"horizontal offset must be within [-400, 400], got {self.horizontal_offset}"
            )


def make_surface(kind: str, width: int, height: int) -> DepthField:
    """Build one of the background surfaces, normalized to span [0, 0.6].

    The flat surface is all zeros. The others are smooth analytic fields:
    egg crate and diagonal sine use two periods across the grid, the
    ellipsoid uses semi-axes 0.45 W and 0.45 H, the Mexican hat a width of
    0.25 min(W, H).
    """
    if kind not in SURFACE_KINDS:
        raise ParameterError(f"unknown surface kind {kind!r}")
    if width < 64 or height < 64:
        raise ParameterError("surface dimensions must be at least 64 pixels")
    if kind == "flat":
        z = np.zeros((height, width))
        return DepthField(values=z, provenance={"kind": kind})
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    if kind == "egg_crate":
        z = np.sin(2.0 * np.pi * 2.0 * x / width) * np.sin(2.0 * np.pi * 2.0 * y / height)
    elif kind == "diagonal_sine":
        z = np.sin(2.0 * np.pi * 2.0 * (x / width + y / height))
    elif kind == "ellipsoid":
        cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
        a, b = 0.45 * width, 0.45 * height
        z = np.sqrt(np.clip(1.0 - ((x - cx) / a) ** 2 - ((y - cy) / b) ** 2, 0.0, None))
    else:  # mexican_hat
        cx, cy = (width - 1) / 2.0, (height - 1) / 2.0
        s = 0.25 * min(width, height)
        r2 = ((x - cx) ** 2 + (y - cy) ** 2) / s**2
        z = (1.0 - r2) * np.exp(-r2 / 2.0)
    z = (z - z.min()) / (z.max() - z.min())
    return DepthField(values=BACKGROUND_SPAN * z, provenance={"kind": kind})


def rasterize_letter(letter: str, size: int) -> np.ndarray:
    """Scale the 7x7 master bitmap of a letter to size x size, nearest neighbor."""
    if letter not in _GLYPH_ROWS:
        raise ParameterError(f"unsupported letter {letter!r}")
    if size < 10:
        raise ParameterError(f"glyph size must be >= 10, got {size}")
    master = np.array([[c == "1" for c in row] for row in _GLYPH_ROWS[letter]], dtype=bool)
    idx = (np.arange(size) * 7) // size
    return master[np.ix_(idx, idx)]


def embed_glyph(base: DepthField, glyph: GlyphSpec) -> DepthField:
    """Set glyph pixels to the plateau height 0.6 * (1 + depth_ratio).

    The glyph is centered vertically and shifted horizontally by the spec
    offset. The output is not smoothed; apply smooth5 separately. A NONE
    glyph returns the base unchanged.
    """
    if glyph.letter == "NONE":
        return base
    plateau = BACKGROUND_SPAN * (1.0 + glyph.depth_ratio)
    if plateau > 1.0:
        raise ParameterError(f"plateau {plateau:.4f} exceeds the encodable depth range")
    h, w = base.values.shape
    top = (h - glyph.size) // 2
    left = (w - glyph.size) // 2 + glyph.horizontal_offset
    if top < 0 or top + glyph.size > h or left < 0 or left + glyph.size > w:
        raise ParameterError("glyph bounding box falls outside the field")
    mask = rasterize_letter(glyph.letter, glyph.size)
    values = base.values.copy()
    region = values[top : top + glyph.size, left : left + glyph.size]
    region[mask] = plateau
    provenance = dict(base.provenance)
    provenance["glyph"] = {
        "letter": glyph.letter,
        "size": glyph.size,
        "depth_ratio": glyph.depth_ratio,
        "horizontal_offset": glyph.horizontal_offset,
    }
    return DepthField(values=values, provenance=provenance)


def smooth5(field: DepthField) -> DepthField:
    """Convolve with the normalized 5x5 binomial kernel, clamping at edges."""
    smoothed = ndimage.convolve(field.values, SMOOTH_KERNEL, mode="nearest")
    smoothed = np.clip(smoothed, 0.0, 1.0)
    provenance = dict(field.provenance)
    provenance["smoothed"] = True
    return DepthField(values=smoothed, provenance=provenance)
