"""Autostereogram rendering from a depth field and a noise patch.

The upsampled noise patch is tiled vertically into a strip one strip-width
wide; the image is then propagated left to right so that every pixel at
column x >= s(x) copies the pixel s(x) columns to its left, where the local
separation s depends on the depth value at that pixel. Every copy is recorded
as an equality link so the constraint structure can be verified bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .depth_fields import DepthField
from .errors import GeometryError, ParameterError
from .spectral_noise import NoisePatch, upsample2

__all__ = [
    "ViewGeometry",
    "Stimulus",
    "disparity",
    "separation",
    "render",
    "verify_links",
]


@dataclass(frozen=True)
class ViewGeometry:
    """Viewing geometry in pixel units.

    eye_separation_px (E) and viewing_distance_px (D) set the separation law
    s(phi) = E * D / (phi * max_depth_px + D). Defaults are calibrated so that
    s(0) equals the strip width (256) and s(1) = 216, a maximum disparity of
    40 pixels.
    """

    eye_separation_px: float = 256.0
    viewing_distance_px: float = 540.0
    max_depth_px: float = 100.0
    strip_width_px: int = 256
    replications: int = 6

    def __post_init__(self):
        if self.eye_separation_px <= 0 or self.viewing_distance_px <= 0:
            raise GeometryError("eye separation and viewing distance must be positive")
        if self.max_depth_px < 0:
            raise GeometryError("max_depth_px must be nonnegative")
        if self.strip_width_px < 2 or self.replications < 1:
            raise GeometryError("strip width and replications must be positive")
        if separation(0.0, self) > self.strip_width_px or separation(1.0, self) <= 0:
            raise GeometryError(
                "separation must stay in (0, strip_width] over the whole depth range"
            )

    @property
    def image_width(self) -> int:
        return self.strip_width_px * self.replications

    def as_dict(self) -> dict:
        return {
            "eye_separation_px": self.eye_separation_px,
            "viewing_distance_px": self.viewing_distance_px,
            "max_depth_px": self.max_depth_px,
            "strip_width_px": self.strip_width_px,
            "replications": self.replications,
        }


@dataclass(frozen=True, eq=False)
class Stimulus:
    """A rendered autostereogram plus its equality-constraint structure.

    links holds one int32 array of shape (n, 2) per image row; each pair
    (x_left, x_right) marks two columns constrained to the same gray value.
    """

    image: np.ndarray
    links: list
    geometry: ViewGeometry
    provenance: dict

    @property
    def height(self) -> int:
        return self.image.shape[0]

    @property
    def width(self) -> int:
        return self.image.shape[1]

    def flat_links(self):
        """All links as flat arrays (rows, x_left, x_right)."""
        rows = np.concatenate(
            [np.full(pairs.shape[0], y, dtype=np.int32) for y, pairs in enumerate(self.links)]
        )
        xl = np.concatenate([pairs[:, 0] for pairs in self.links])
        xr = np.concatenate([pairs[:, 1] for pairs in self.links])
        return rows, xl, xr

    def row_partner_map(self, row: int) -> dict:
        """Mapping x_left -> x_right for one row's links."""
        pairs = self.links[row]
        return dict(zip(pairs[:, 0].tolist(), pairs[:, 1].tolist()))


def disparity(phi: float, geom: ViewGeometry) -> float:
    """Binocular disparity in pixels for normalized depth phi."""
    z = phi * geom.max_depth_px
    return geom.eye_separation_px * z / (z + geom.viewing_distance_px)


def separation(phi, geom: ViewGeometry):
    """Integer pixel separation s(phi), rounded half up."""
    z = np.asarray(phi, dtype=np.float64) * geom.max_depth_px
    s = geom.eye_separation_px * geom.viewing_distance_px / (z + geom.viewing_distance_px)
    out = np.floor(s + 0.5).astype(np.int32)
    if out.ndim == 0:
        return int(out)
    return out


def _quantize_pattern(values: np.ndarray) -> np.ndarray:
    lo, hi = values.min(), values.max()
    if hi == lo:
        return np.full(values.shape, 128, dtype=np.uint8)
    return np.floor((values - lo) / (hi - lo) * 255.0 + 0.5).astype(np.uint8)


def render(depth: DepthField, patch: NoisePatch, geom: ViewGeometry | None = None) -> Stimulus:
    """Render the autostereogram for a depth field with a given noise pattern.

    The pattern is quantized to 8 bits once, before propagation, so that all
    recorded equality links are bit-exact in the output image.
    """
    if geom is None:
        geom = ViewGeometry()
    height, width = depth.values.shape
    if width != geom.image_width:
        raise ParameterError(
            f"depth width {width} does not match strip_width * replications = {geom.image_width}"
        )
    pattern = upsample2(patch.values)
    if pattern.shape[1] != geom.strip_width_px:
        raise ParameterError(
            f"upsampled patch width {pattern.shape[1]} does not match strip width "
            f"{geom.strip_width_px}"
        )
    pattern8 = _quantize_pattern(pattern)
    tiles = -(-height // pattern8.shape[0])
    strip = np.tile(pattern8, (tiles, 1))[:height]

    sep = separation(depth.values, geom)
    if sep.min() <= 0 or sep.max() > geom.strip_width_px:
        raise GeometryError("separation left the (0, strip_width] range")

    image = np.zeros((height, width), dtype=np.uint8)
    rows = np.arange(height)
    src_map = np.full((height, width), -1, dtype=np.int32)
    for x in range(width):
        src = x - sep[:, x]
        seeded = src < 0
        if x < geom.strip_width_px:
            image[:, x] = np.where(seeded, strip[:, x], image[rows, np.maximum(src, 0)])
        else:
            image[:, x] = image[rows, src]
        propagated = ~seeded
        src_map[propagated, x] = src[propagated]

    links = []
    for y in range(height):
        xs = np.nonzero(src_map[y] >= 0)[0]
        pairs = np.empty((xs.size, 2), dtype=np.int32)
        pairs[:, 0] = src_map[y, xs]
        pairs[:, 1] = xs
        links.append(pairs)

    provenance = {
        "spec": {
            "beta": patch.spec.beta,
            "size": patch.spec.size,
            "seed": patch.spec.seed,
            "amplitude": patch.spec.amplitude,
        },
        "depth": dict(depth.provenance),
        "geometry": geom.as_dict(),
    }
    return Stimulus(image=image, links=links, geometry=geom, provenance=provenance)


def verify_links(stim: Stimulus, max_report: int = 100):
    """Check every recorded link for pixel equality.

    Returns (ok, violations) where violations is a list of (row, x_left,
    x_right) tuples, truncated to max_report entries.
    """
    violations = []
    for y, pairs in enumerate(stim.links):
        if pairs.size == 0:
            continue
        row = stim.image[y]
        bad = row[pairs[:, 0]] != row[pairs[:, 1]]
        if np.any(bad):
            for xl, xr in pairs[bad][:max_report - len(violations)]:
                violations.append((y, int(xl), int(xr)))
            if len(violations) >= max_report:
                break
    return len(violations) == 0, violations
