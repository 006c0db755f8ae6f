"""Matching-function analysis of rendered stimuli.

Lambda(x, x~) = f(mean squared gray difference) scores how well column x of a
stimulus matches column x~, averaged over a chosen block of rows and over
several stimuli that share depth and noise statistics. Ridges of the surface
mark consistent depth interpretations; the counter-diagonal slice through the
planar interpretation exposes the basin of attraction around displacement 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .sirds_render import Stimulus

__all__ = [
    "MatchKernel",
    "MatchSurface",
    "match_surface",
    "basin_slice",
    "planar_profile",
    "half_width_at_half_height",
    "ridge_sharpness",
]


@dataclass(frozen=True)
class MatchKernel:
    """The score kernel f(z) = 1 / (1 + lambda z); f(0) = 1, f'(0) = -lambda."""

    lam: float = 0.001

    def __post_init__(self):
        if self.lam <= 0:
            raise ParameterError(f"lambda must be positive, got {self.lam}")

    def __call__(self, z):
        return 1.0 / (1.0 + self.lam * np.asarray(z, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class MatchSurface:
    """Lambda grid over a column window, plus the sources that were averaged.

    grid[i, j] scores columns (x_start + i, x_start + j). sources lists
    (stimulus id or index, row_lo, row_hi) per averaged stimulus.
    """

    grid: np.ndarray
    x_start: int
    sources: tuple
    kernel: MatchKernel

    @property
    def size(self) -> int:
        return self.grid.shape[0]


def _stimulus_key(stim: Stimulus):
    prov = stim.provenance
    return (prov.get("spec", {}).get("beta"), repr(sorted(prov.get("depth", {}).items())))


def match_surface(
    stimuli,
    rows,
    kernel: MatchKernel | None = None,
    window: tuple[int, int] | None = None,
) -> MatchSurface:
    """Average squared column differences over rows and stimuli, then apply f.

    rows is a (row_lo, row_hi) half-open range applied to every stimulus.
    window is (x_start, width); the default is a 512-column window centered
    in the image. Gray values are normalized to [0, 1] before differencing.
    """
    stimuli = list(stimuli)
    if not stimuli:
        raise ParameterError("need at least one stimulus")
    if kernel is None:
        kernel = MatchKernel()
    keys = {_stimulus_key(s) for s in stimuli}
    if len(keys) > 1:
        raise ParameterError("stimuli mix depth fields or noise exponents")
    row_lo, row_hi = int(rows[0]), int(rows[1])
    height, width = stimuli[0].image.shape
    if not (0 <= row_lo < row_hi <= height):
        raise ParameterError(f"row range {row_lo}:{row_hi} invalid for height {height}")
    total_rows = (row_hi - row_lo) * len(stimuli)
    if total_rows < 8:
        raise ParameterError(f"need at least 8 rows in total, got {total_rows}")
    if window is None:
        window = (width // 2 - 256, 512)
    x_start, n = int(window[0]), int(window[1])
    if not (0 <= x_start and x_start + n <= width and n >= 2):
        raise ParameterError(f"window {window} does not fit image width {width}")

    total = np.zeros((n, n))
    for stim in stimuli:
        block = stim.image[row_lo:row_hi, x_start : x_start + n].astype(np.float64) / 255.0
        gram = block.T @ block
        sq = np.sum(block * block, axis=0)
        total += sq[:, None] + sq[None, :] - 2.0 * gram
    msd = np.clip(total / total_rows, 0.0, None)
    grid = kernel(msd)
    sources = tuple(
        (stim.provenance.get("stimulus_id", idx), row_lo, row_hi)
        for idx, stim in enumerate(stimuli)
    )
    return MatchSurface(grid=grid, x_start=x_start, sources=sources, kernel=kernel)


def basin_slice(surface: MatchSurface):
    """Counter-diagonal of the surface through the window center.

    Returns (displacements, values): the value at displacement d = 2k is
    Lambda(x0 - k, x0 + k}, so displacement 0 sits on the main diagonal and
    measures the planar self-match.
    """
    n = surface.size
    center = n // 2
    kmax = min(center, n - 1 - center)
    ks = np.arange(-kmax, kmax + 1)
    displacements = 2 * ks
    values = surface.grid[center - ks, center + ks]
    return displacements, values


def planar_profile(surface: MatchSurface, max_disp: int = 128):
    """Mean Lambda at each even displacement, pooled over window positions.

    For each displacement d = 2k the values Lambda(x - k, x + k) for all
    window positions x lie on one off-diagonal of the grid; averaging them
    gives a far lower-variance basin profile than a single counter-diagonal
    cut. Suitable when the basin is stationary across the window.
    """
    n = surface.size
    kmax = min(max_disp // 2, (n - 1) // 2)
    disp = np.arange(0, kmax + 1) * 2
    vals = np.empty(kmax + 1)
    for k in range(kmax + 1):
        upper = np.diagonal(surface.grid, 2 * k)
        lower = np.diagonal(surface.grid, -2 * k)
        vals[k] = 0.5 * (upper.mean() + lower.mean())
    displacements = np.concatenate([-disp[:0:-1], disp])
    values = np.concatenate([vals[:0:-1], vals])
    return displacements, values


def half_width_at_half_height(displacements, values, tail=(64, 128)):
    """Full width at half height of the central peak of a basin profile.

    The peak is the value at displacement 0; the floor is the mean profile
    value over the tail band of absolute displacements. On each side the
    crossing of (peak + floor) / 2 is located by linear interpolation and the
    two sides are averaged. Profiles that never descend to the half level
    within the tail band are clipped at the band edge.
    """
    d = np.asarray(displacements, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    tail_lo, tail_hi = tail
    if tail_lo <= 0 or tail_hi <= tail_lo:
        raise ParameterError(f"invalid tail band {tail}")
    i0 = int(np.argmin(np.abs(d)))
    if d[i0] != 0:
        raise ParameterError("profile does not sample displacement 0")
    peak = v[i0]
    widths = []
    for side in (-1, 1):
        sel = (d * side >= 0) & (np.abs(d) <= tail_hi)
        ds = np.abs(d[sel])
        vs = v[sel]
        order = np.argsort(ds)
        ds, vs = ds[order], vs[order]
        band = vs[ds >= tail_lo]
        if band.size == 0:
            raise ParameterError("profile does not reach the tail band")
        floor = band.mean()
        half = 0.5 * (peak + floor)
        width = ds[-1]
        for i in range(1, len(ds)):
            if vs[i] < half:
                frac = (vs[i - 1] - half) / (vs[i - 1] - vs[i])
                width = ds[i - 1] + frac * (ds[i] - ds[i - 1])
                break
        widths.append(width)
    return float(np.mean(widths))


def ridge_sharpness(stim: Stimulus, kernel: MatchKernel | None = None) -> float:
    """Mean squared gray gradient along the recorded links, scaled by 2 lambda.

    Central finite differences with unit pixel step are evaluated at both
    endpoints of every link whose neighborhood lies inside the image; the
    result is 2 |f'(0)| E[(dI/dx)^2 + (dI/dx~)^2] on [0, 1] gray values.
    Larger values mean sharper matching ridges.
    """
    if kernel is None:
        kernel = MatchKernel()
    rows, xl, xr = stim.flat_links()
    width = stim.width
    ok = (xl >= 1) & (xr <= width - 2)
    rows, xl, xr = rows[ok], xl[ok], xr[ok]
    if rows.size == 0:
        return 0.0
    gray = stim.image.astype(np.float64) / 255.0
    dl = (gray[rows, xl + 1] - gray[rows, xl - 1]) / 2.0
    dr = (gray[rows, xr + 1] - gray[rows, xr - 1]) / 2.0
    return float(2.0 * kernel.lam * np.mean(dl**2 + dr**2))
