import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from sirdskit import (
    SessionManifest,
    SpectrumSpec,
    ViewGeometry,
    generate_patch,
    make_surface,
    render,
    storage,
)
from sirdskit.experiment_kit import CHOICE_SETS, Trial


@pytest.fixture(scope="session")
def geometry():
    return ViewGeometry()


def make_mini_session(root):
    """A 3-trial, 2-training-slot session with tiny placeholder images."""
    trials = (
        Trial(0, "m-000", "ellipsoid", {"surface": "ellipsoid", "beta": 1.0}),
        Trial(1, "m-001", "egg_crate", {"surface": "egg_crate", "beta": 0.0}),
        Trial(2, "m-002", "mexican_hat", {"surface": "mexican_hat", "beta": 2.0}),
    )
    manifest = SessionManifest(
        experiment_id=1,
        master_seed=0,
        trials=trials,
        training_ids=("m-000", "m-002"),
        choice_set=tuple(CHOICE_SETS[1]),
        geometry=ViewGeometry().as_dict(),
    )
    stim_dir = root / "stimuli"
    stim_dir.mkdir(parents=True)
    rng = np.random.default_rng(0)
    for trial in trials:
        img = rng.integers(0, 256, size=(8, 8), dtype=np.uint8)
        storage.save_gray_png(stim_dir / f"{trial.stimulus_id}.png", img)
    storage.save_json(root / "manifest.json", manifest.as_dict())
    return manifest


@pytest.fixture(scope="session")
def pink_ellipsoid_set(geometry):
    """Five pink-noise ellipsoid stimuli, reused by ridge-recovery tests."""
    depth = make_surface("ellipsoid", geometry.image_width, 1024)
    stimuli = []
    for seed in range(5):
        patch = generate_patch(SpectrumSpec(beta=1.0, size=128, seed=seed))
        stimuli.append(render(depth, patch, geometry))
    return stimuli


@pytest.fixture(scope="session")
def exp1_session(tmp_path_factory, geometry):
    """Full experiment-1 inventory (140 stimuli), built once per run."""
    from sirdskit import build_inventory

    out = tmp_path_factory.mktemp("exp1_session")
    manifest = build_inventory(1, master_seed=1001, out_dir=out, geom=geometry)
    return out, manifest
