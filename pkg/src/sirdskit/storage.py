"""File formats: images, sidecars, manifests, response logs, and reports.

All JSON payloads carry schema_version 1. Stimulus images are 8-bit grayscale
PNG; depth fields are 16-bit grayscale PNG (value = round(65535 * phi)); link
structures are a compact little-endian binary sidecar; responses are
append-only JSON lines.
"""

from __future__ import annotations

import csv
import json
import os
import struct
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DataError

__all__ = [
    "SCHEMA_VERSION",
    "save_gray_png",
    "load_gray_png",
    "save_depth_png",
    "load_depth_png",
    "save_json",
    "load_json",
    "save_links",
    "load_links",
    "append_jsonl",
    "read_jsonl",
    "write_csv",
    "save_patch_artifacts",
]

SCHEMA_VERSION = 1

_LINKS_MAGIC = b"SLNK"


def save_gray_png(path, values: np.ndarray) -> None:
    """Write an 8-bit grayscale PNG with fixed, reproducible settings."""
    arr = np.asarray(values)
    if arr.dtype != np.uint8:
        raise DataError(f"expected uint8 image, got {arr.dtype}")
    Image.fromarray(arr).save(path, format="PNG", optimize=False)


def load_gray_png(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L"), dtype=np.uint8)


def save_depth_png(path, phi: np.ndarray) -> None:
    """Write a depth field as 16-bit grayscale PNG."""
    arr = np.floor(np.asarray(phi, dtype=np.float64) * 65535.0 + 0.5).astype(np.uint16)
    Image.fromarray(arr).save(path, format="PNG", optimize=False)


def load_depth_png(path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im, dtype=np.uint16)
    return arr.astype(np.float64) / 65535.0


def save_json(path, payload: dict) -> None:
    body = dict(payload)
    body.setdefault("schema_version", SCHEMA_VERSION)
    Path(path).write_text(json.dumps(body, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_json(path) -> dict:
    try:
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read JSON file {path}: {exc}") from exc
    if payload.get("schema_version") != SCHEMA_VERSION:
        raise DataError(
            f"{path}: schema_version {payload.get('schema_version')!r}, expected {SCHEMA_VERSION}"
        )
    return payload


def save_links(path, links) -> None:
    """Write per-row link pairs: magic, version, row count, then per row a
    pair count followed by count little-endian (x_left, x_right) uint32 pairs."""
    with open(path, "wb") as fh:
        fh.write(_LINKS_MAGIC)
        fh.write(struct.pack("<II", SCHEMA_VERSION, len(links)))
        for pairs in links:
            arr = np.ascontiguousarray(np.asarray(pairs, dtype="<u4"))
            fh.write(struct.pack("<I", arr.shape[0]))
            fh.write(arr.tobytes())


def load_links(path) -> list:
    with open(path, "rb") as fh:
        magic = fh.read(4)
        if magic != _LINKS_MAGIC:
            raise DataError(f"{path}: not a link sidecar")
        version, height = struct.unpack("<II", fh.read(8))
        if version != SCHEMA_VERSION:
            raise DataError(f"{path}: link sidecar version {version}")
        links = []
        for _ in range(height):
            (count,) = struct.unpack("<I", fh.read(4))
            raw = fh.read(count * 8)
            if len(raw) != count * 8:
                raise DataError(f"{path}: truncated link sidecar")
            pairs = np.frombuffer(raw, dtype="<u4").reshape(count, 2).astype(np.int32)
            links.append(pairs)
    return links


def append_jsonl(path, record: dict) -> None:
    """Append one JSON object as a line, flushing and fsyncing before return."""
    body = dict(record)
    body.setdefault("schema_version", SCHEMA_VERSION)
    line = json.dumps(body, sort_keys=True)
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line + "\n")
        fh.flush()
        os.fsync(fh.fileno())


def read_jsonl(path) -> list:
    records = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    payload = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise DataError(f"{path}:{lineno}: bad JSON line: {exc}") from exc
                if payload.get("schema_version") != SCHEMA_VERSION:
                    raise DataError(
                        f"{path}:{lineno}: schema_version {payload.get('schema_version')!r}"
                    )
                records.append(payload)
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    return records


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def save_patch_artifacts(basepath, patch) -> dict:
    """Export a noise patch: 8-bit PNG preview, raw float64 grid, JSON spec.

    Returns the written paths. The raw grid is little-endian float64, row
    major, with the spec sidecar carrying its shape.
    """
    base = Path(basepath)
    values = patch.values
    lo, hi = values.min(), values.max()
    scale = (values - lo) / (hi - lo) if hi > lo else np.zeros_like(values)
    png8 = np.floor(scale * 255.0 + 0.5).astype(np.uint8)
    png_path = base.with_suffix(".png")
    raw_path = base.with_suffix(".f64")
    json_path = base.with_suffix(".json")
    save_gray_png(png_path, png8)
    values.astype("<f8").tofile(raw_path)
    save_json(
        json_path,
        {
            "kind": "noise_patch",
            "beta": patch.spec.beta,
            "size": patch.spec.size,
            "seed": patch.spec.seed,
            "amplitude": patch.spec.amplitude,
            "raw_dtype": "<f8",
            "raw_shape": list(values.shape),
        },
    )
    return {"png": str(png_path), "raw": str(raw_path), "json": str(json_path)}
