"""Autostereogram toolkit: colored-noise stimuli, matching-function analysis,
and a psychophysics experiment harness."""

from .depth_fields import DepthField, GlyphSpec, embed_glyph, make_surface, rasterize_letter, smooth5
from .errors import DataError, DegenerateInputError, GeometryError, ParameterError, SirdsError
from .experiment_kit import (
    SessionManifest,
    StatsReport,
    TrialRecord,
    build_inventory,
    report,
    score,
    t_test_one_tailed,
)
from .match_model import (
    MatchKernel,
    MatchSurface,
    basin_slice,
    half_width_at_half_height,
    match_surface,
    planar_profile,
    ridge_sharpness,
)
from .sirds_render import Stimulus, ViewGeometry, disparity, render, separation, verify_links
from .spectral_noise import (
    AutocorrelationProfile,
    NoisePatch,
    SpectrumSpec,
    autocorrelation,
    curvature_exponents_per_seed,
    curvature_scale_law,
    estimate_beta,
    generate_patch,
    upsample2,
)

__version__ = "0.1.0"
