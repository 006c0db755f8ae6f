"""Colored-noise synthesis and spectral analysis.

Synthesizes square noise patches whose power spectrum follows S(f) = C * f^(-beta),
estimates the spectral exponent from the radially averaged periodogram, computes
low-pass filtered autocorrelation profiles, and fits the scale law that relates
the curvature of the autocorrelation at lag zero to the filter scale sigma.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInputError, ParameterError

__all__ = [
    "SpectrumSpec",
    "NoisePatch",
    "AutocorrelationProfile",
    "generate_patch",
    "estimate_beta",
    "upsample2",
    "autocorrelation",
    "curvature_scale_law",
    "curvature_exponents_per_seed",
]


@dataclass(frozen=True)
class SpectrumSpec:
    """Parameters of the 1/f^beta noise law.

    beta is the spectral exponent, amplitude the constant C, size the square
    patch edge in pixels, seed the generator seed. Output patches are
    normalized to zero mean and unit variance, so amplitude has no effect on
    the returned values; it is kept as part of the spectrum description.
    """

    beta: float
    size: int
    seed: int
    amplitude: float = 1.0

    def __post_init__(self):
        if not (0.0 <= self.beta < 3.0):
            raise ParameterError(f"beta must be in [0, 3), got {self.beta}")
        if self.size < 8 or (self.size & (self.size - 1)) != 0:
            raise ParameterError(f"size must be a power of two >= 8, got {self.size}")
        if self.amplitude <= 0:
            raise ParameterError(f"amplitude must be positive, got {self.amplitude}")


@dataclass(frozen=True, eq=False)
class NoisePatch:
    """A synthesized noise patch plus the spec that produced it."""

    values: np.ndarray
    spec: SpectrumSpec


@dataclass(frozen=True, eq=False)
class AutocorrelationProfile:
    """Horizontal autocorrelation R(tau) of a low-pass filtered patch.

    lags run symmetrically from -L to L; values are in signal-power units so
    R(0) equals the filtered-signal variance. cutoff_sigma is the low-pass
    scale in pixels (cutoff frequency f0 = 1/sigma cycles per pixel).
    """

    lags: np.ndarray
    values: np.ndarray
    cutoff_sigma: float

    def value_at(self, lag: int) -> float:
        idx = np.nonzero(self.lags == lag)[0]
        if idx.size == 0:
            raise ParameterError(f"lag {lag} outside profile range")
        return float(self.values[idx[0]])


def _shaped_spectrum(rng: np.random.Generator, shape, freq_radius, beta, amplitude):
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    spec = (re + 1j * im) / np.sqrt(2.0)
    shaping = np.zeros_like(freq_radius)
    nz = freq_radius > 0
    shaping[nz] = np.sqrt(amplitude) * freq_radius[nz] ** (-beta / 2.0)
    return spec * shaping


def generate_patch(spec: SpectrumSpec) -> NoisePatch:
    """Synthesize a zero-mean unit-variance patch with spectrum C * f^(-beta).

    A unit-variance complex Gaussian spectrum is shaped by f^(-beta/2) over
    radial frequency, the DC bin is zeroed, and the real part of the inverse
    transform is normalized. Deterministic in spec.seed.
    """
    rng = np.random.default_rng(spec.seed)
    fx = np.fft.fftfreq(spec.size)
    fr = np.hypot(fx[None, :], fx[:, None])
    shaped = _shaped_spectrum(rng, (spec.size, spec.size), fr, spec.beta, spec.amplitude)
    patch = np.fft.ifft2(shaped).real
    patch -= patch.mean()
    sd = patch.std()
    if sd == 0:
        raise DegenerateInputError("synthesized patch has zero variance")
    patch /= sd
    return NoisePatch(values=patch, spec=spec)


def _as_values(patch) -> np.ndarray:
    if isinstance(patch, NoisePatch):
        return patch.values
    return np.asarray(patch, dtype=np.float64)


def radial_periodogram(values: np.ndarray):
    """Radially averaged periodogram: mean |FFT|^2 per integer frequency radius."""
    n = values.shape[0]
    power = np.abs(np.fft.fft2(values)) ** 2
    k = np.fft.fftfreq(n) * n
    kr = np.hypot(k[None, :], k[:, None])
    bins = np.rint(kr).astype(int)
    counts = np.bincount(bins.ravel())
    sums = np.bincount(bins.ravel(), weights=power.ravel())
    radii = np.arange(len(counts))
    valid = counts > 0
    return radii[valid], sums[valid] / counts[valid]


def estimate_beta(patch) -> float:
    """Estimate the spectral exponent from the radially averaged periodogram.

    Fits a least-squares line to log power vs log radius over integer radii
    1..N/4, excluding the DC bin and the highest octave, and returns the
    negated slope.
    """
    values = _as_values(patch)
    n = values.shape[0]
    if n < 32:
        raise ParameterError(f"patch size must be >= 32 for estimation, got {n}")
    if np.ptp(values) == 0:
        raise DegenerateInputError("constant patch has no spectral slope")
    radii, power = radial_periodogram(values)
    keep = (radii >= 1) & (radii <= n // 4)
    if np.any(power[keep] <= 0):
        raise DegenerateInputError("empty spectral bins in the fit range")
    slope = np.polyfit(np.log(radii[keep].astype(float)), np.log(power[keep]), 1)[0]
    return float(-slope)


def upsample2(patch) -> np.ndarray:
    """Nearest-neighbor upsample by 2: each value becomes a 2x2 block."""
    values = _as_values(patch)
    return np.repeat(np.repeat(values, 2, axis=0), 2, axis=1)


def _lowpass_radial(values: np.ndarray, f0: float) -> np.ndarray:
    """Hard radial frequency cutoff at f0 cycles/pixel."""
    h, w = values.shape
    fy = np.fft.fftfreq(h)
    fx = np.fft.fftfreq(w)
    fr = np.hypot(fx[None, :], fy[:, None])
    spec = np.fft.fft2(values)
    spec[fr > f0] = 0.0
    return np.fft.ifft2(spec).real


def _autocorr_horizontal(rows: np.ndarray, lags) -> np.ndarray:
    """Biased horizontal autocorrelation in power units, averaged over rows."""
    n = rows.shape[1]
    out = np.empty(len(lags))
    for i, lag in enumerate(lags):
        lag = int(abs(lag))
        if lag >= n:
            raise ParameterError(f"lag {lag} exceeds row length {n}")
        if lag == 0:
            out[i] = np.mean(np.sum(rows * rows, axis=1) / n)
        else:
            out[i] = np.mean(np.sum(rows[:, :-lag] * rows[:, lag:], axis=1) / n)
    return out


def autocorrelation(patch, cutoff_sigma: float, max_lag: int | None = None) -> AutocorrelationProfile:
    """Low-pass filter at f0 = 1/sigma, then average horizontal autocorrelation over rows.

    sigma = 1 places the cutoff at or beyond Nyquist, leaving the patch
    unfiltered. Values are in power units: R(0) is the filtered variance.
    """
    values = _as_values(patch)
    n = values.shape[1]
    if cutoff_sigma < 1.0:
        raise ParameterError(f"cutoff_sigma must be >= 1 pixel, got {cutoff_sigma}")
    if cutoff_sigma > n:
        raise ParameterError(f"cutoff_sigma {cutoff_sigma} exceeds patch extent {n}")
    if max_lag is None:
        max_lag = n // 4
    if max_lag >= n:
        raise ParameterError(f"max_lag {max_lag} exceeds row length {n}")
    filtered = _lowpass_radial(values, 1.0 / cutoff_sigma)
    pos = np.arange(0, max_lag + 1)
    vals_pos = _autocorr_horizontal(filtered, pos)
    lags = np.concatenate([-pos[:0:-1], pos])
    vals = np.concatenate([vals_pos[:0:-1], vals_pos])
    return AutocorrelationProfile(lags=lags, values=vals, cutoff_sigma=float(cutoff_sigma))


def _row_ensemble(beta: float, shape, seed: int) -> np.ndarray:
    """Stack of independent 1-D processes, each with spectrum |f|^(-beta)."""
    rows, cols = shape
    rng = np.random.default_rng(seed)
    f = np.abs(np.fft.fftfreq(cols))
    shaped = _shaped_spectrum(rng, (rows, cols), np.broadcast_to(f, (rows, cols)).copy(), beta, 1.0)
    sig = np.fft.ifft(shaped, axis=1).real
    sig -= sig.mean()
    sd = sig.std()
    if sd == 0:
        raise DegenerateInputError("row ensemble has zero variance")
    return sig / sd


def _lowpass_rows(rows: np.ndarray, f0: float) -> np.ndarray:
    f = np.abs(np.fft.fftfreq(rows.shape[1]))
    spec = np.fft.fft(rows, axis=1)
    spec[:, f > f0] = 0.0
    return np.fft.ifft(spec, axis=1).real


def _curvature_matrix(beta, sigmas, seeds, size):
    """|R''_sigma(0)| per (seed, sigma), from per-line 1-D ensembles.

    The second derivative at lag 0 is the central second difference with step
    1 in tau/sigma units, i.e. R(sigma) - 2 R(0) + R(-sigma) = 2 (R(sigma) - R(0)).
    """
    sigmas = [float(s) for s in sigmas]
    if len(set(sigmas)) < 3:
        raise ParameterError("need at least 3 distinct sigma values")
    if not (0.0 <= beta < 3.0):
        raise ParameterError(f"beta must be in [0, 3), got {beta}")
    if min(sigmas) < 1.0:
        raise ParameterError("sigma values must be >= 1 pixel")
    seeds = list(seeds)
    if not seeds:
        raise ParameterError("need at least one seed")
    vals = np.zeros((len(seeds), len(sigmas)))
    for i, seed in enumerate(seeds):
        lines = _row_ensemble(beta, (size, size), seed)
        for j, sigma in enumerate(sigmas):
            filtered = _lowpass_rows(lines, 1.0 / sigma)
            r = _autocorr_horizontal(filtered, [0, int(round(sigma))])
            vals[i, j] = abs(2.0 * (r[1] - r[0]))
    return np.asarray(sigmas), vals


def curvature_scale_law(beta: float, sigmas, seeds, size: int = 256) -> float:
    """Fitted exponent of |R''_sigma(0)| versus sigma; contract: close to beta - 1.

    For each sigma the curvature of the low-pass filtered autocorrelation at
    lag zero is estimated per seed, averaged over seeds, and a least-squares
    line is fit in log-log coordinates.
    """
    sig_arr, vals = _curvature_matrix(beta, sigmas, seeds, size)
    mean_vals = vals.mean(axis=0)
    if np.any(mean_vals <= 0):
        raise DegenerateInputError("curvature estimates vanished; cannot fit log-log slope")
    return float(np.polyfit(np.log(sig_arr), np.log(mean_vals), 1)[0])


def curvature_exponents_per_seed(beta: float, sigmas, seeds, size: int = 256) -> np.ndarray:
    """Per-seed fitted exponents, for confidence-interval style checks."""
    sig_arr, vals = _curvature_matrix(beta, sigmas, seeds, size)
    if np.any(vals <= 0):
        raise DegenerateInputError("curvature estimates vanished; cannot fit log-log slope")
    log_s = np.log(sig_arr)
    return np.array([np.polyfit(log_s, np.log(v), 1)[0] for v in vals])
