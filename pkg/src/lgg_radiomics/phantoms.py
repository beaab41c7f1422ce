"""Synthetic image/mask phantoms for demos and tests.

Class 1 phantoms are coarse, blotchy ellipsoids; class 0 phantoms are
smoother and slightly brighter.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np
from scipy import ndimage

from .volume_io import MaskVolume, Volume, write_volume

DIMS = (24, 24, 8)
SPACING = (1.0, 1.0, 2.5)


def make_phantom(label: int, seed: int, dims=DIMS, spacing=SPACING) -> tuple[Volume, MaskVolume]:
    rng = np.random.default_rng(seed)
    x, y, z = np.indices(dims, dtype=np.float64)
    centre = np.array(dims, dtype=float) / 2 - 0.5 + rng.uniform(-1.5, 1.5, 3) * (1, 1, 0.3)
    radii = rng.uniform(5.0, 8.5, 3) * np.array([1, 1, 1 / spacing[2]])
    inside = (((x - centre[0]) / radii[0]) ** 2 + ((y - centre[1]) / radii[1]) ** 2
              + ((z - centre[2]) / radii[2]) ** 2) <= 1.0

    noise = rng.normal(size=dims)
    if label == 1:
        texture = ndimage.gaussian_filter(noise, sigma=1.0) * 180 + rng.normal(0, 25, dims)
        base = 420.0
    else:
        texture = ndimage.gaussian_filter(noise, sigma=2.0) * 120 + rng.normal(0, 15, dims)
        base = 480.0
    base += rng.normal(0, 30)
    image = np.where(inside, base + texture, 100 + rng.normal(0, 10, dims))
    return Volume(dims, spacing, image), MaskVolume(dims, spacing, inside.astype(np.int64))


def write_phantom_suite(outdir, n_positive: int = 14, n_negative: int = 10, seed: int = 0) -> Path:
    """Write NRRD image/mask pairs plus ``manifest.csv``; returns the manifest path."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    labels = [1] * n_positive + [0] * n_negative
    manifest = outdir / "manifest.csv"
    with open(manifest, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["case_id", "image_path", "mask_path", "roi_label", "class_label"])
        for n, label in enumerate(labels):
            case = f"case{n:03d}"
            img, mask = make_phantom(label, seed * 100003 + n)
            write_volume(outdir / f"{case}_image.nrrd", img, "float")
            write_volume(outdir / f"{case}_mask.nrrd", mask, "uchar")
            w.writerow([case, f"{case}_image.nrrd", f"{case}_mask.nrrd", 1, label])
    return manifest
