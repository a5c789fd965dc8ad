"""Desk-scale dataset stand-ins: cluttered synthetic images with an embedded
query glyph, and feature matrices with controllable cluster structure.

Target images differ from distractors only by a small glyph (default: a ring)
dropped somewhere fully inside the frame, which is what makes the retrieval
task non-trivial for a human scanning a grid. Feature sets place relevant
rows around one center and the rest around k distractor centers;
``separation`` is the gap between the relevant center and its nearest
distractor center in units of the within-cluster noise.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, ImageDraw

from .dataio import FeatureMatrix

IMAGE_SIZE = (192, 144)


@dataclass(frozen=True)
class GlyphSpec:
    """Query glyph parameters: a ring of radius scale_min..scale_max px."""

    shape: str = "ring"
    scale_min: int = 8
    scale_max: int = 18
    color: tuple[int, int, int] = (220, 30, 30)

    def __post_init__(self):
        if self.shape not in ("ring", "cross"):
            raise ValueError(f"unknown glyph shape {self.shape!r}")
        if not 2 <= self.scale_min <= self.scale_max:
            raise ValueError("need 2 <= scale_min <= scale_max")


def place_glyph(
    rng: np.random.Generator, spec: GlyphSpec, width: int, height: int
) -> tuple[int, int, int]:
    """Draw (cx, cy, radius) with the glyph's bounding box fully inside the frame."""
    radius = int(rng.integers(spec.scale_min, spec.scale_max + 1))
    cx = int(rng.integers(radius, width - radius))
    cy = int(rng.integers(radius, height - radius))
    return cx, cy, radius


def _draw_clutter(draw: ImageDraw.ImageDraw, rng: np.random.Generator, width: int, height: int):
    n_shapes = int(rng.integers(12, 25))
    for _ in range(n_shapes):
        kind = int(rng.integers(0, 3))
        color = tuple(int(v) for v in rng.integers(0, 256, size=3))
        x0, y0 = int(rng.integers(0, width)), int(rng.integers(0, height))
        w, h = int(rng.integers(8, width // 2)), int(rng.integers(8, height // 2))
        box = (x0, y0, min(x0 + w, width - 1), min(y0 + h, height - 1))
        if kind == 0:
            draw.rectangle(box, fill=color)
        elif kind == 1:
            draw.ellipse(box, fill=color)
        else:
            x1 = int(rng.integers(0, width))
            y1 = int(rng.integers(0, height))
            draw.line((x0, y0, x1, y1), fill=color, width=int(rng.integers(1, 5)))


def _draw_glyph(draw: ImageDraw.ImageDraw, spec: GlyphSpec, cx: int, cy: int, radius: int):
    box = (cx - radius, cy - radius, cx + radius, cy + radius)
    if spec.shape == "ring":
        draw.ellipse(box, outline=spec.color, width=max(2, radius // 4))
    else:
        draw.line((cx - radius, cy, cx + radius, cy), fill=spec.color, width=3)
        draw.line((cx, cy - radius, cx, cy + radius), fill=spec.color, width=3)


def gen_images(
    n: int,
    n_targets: int,
    glyph_spec: GlyphSpec | None = None,
    seed: int = 0,
    out_dir: str | Path = ".",
    prefix: str = "img",
) -> dict:
    """Render n cluttered PNGs, the first n_targets of which carry the glyph.

    Returns (and writes as ``manifest.json``) a manifest listing id, file and
    is_target per image. Rendering is deterministic in the seed.
    """
    if not 0 <= n_targets <= n:
        raise ValueError(f"need 0 <= n_targets <= n, got {n_targets}/{n}")
    spec = glyph_spec or GlyphSpec()
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    width, height = IMAGE_SIZE
    images = []
    for k in range(n):
        image_id = f"{prefix}{k:05d}"
        is_target = k < n_targets
        img = Image.new("RGB", IMAGE_SIZE, tuple(int(v) for v in rng.integers(30, 120, size=3)))
        draw = ImageDraw.Draw(img)
        _draw_clutter(draw, rng, width, height)
        if is_target:
            cx, cy, radius = place_glyph(rng, spec, width, height)
            _draw_glyph(draw, spec, cx, cy, radius)
        filename = f"{image_id}.png"
        img.save(out_dir / filename)
        images.append({"id": image_id, "file": filename, "is_target": is_target})
    manifest = {
        "version": 1,
        "seed": seed,
        "n": n,
        "n_targets": n_targets,
        "glyph": {"shape": spec.shape, "scale_min": spec.scale_min, "scale_max": spec.scale_max},
        "images": images,
    }
    with open(out_dir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


def load_manifest(path: str | Path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def gen_feature_set(
    n: int = 5000,
    d: int = 128,
    n_relevant: int = 250,
    separation: float = 10.0,
    noise_sd: float = 1.0,
    seed: int = 0,
    n_distractor_clusters: int = 8,
    prefix: str = "img",
) -> tuple[FeatureMatrix, list[str]]:
    """Synthesize an n x d feature matrix plus the relevant-id ground truth.

    Relevant rows sit ``separation * noise_sd`` away (in L2) from the nearest
    distractor cluster center; all clusters share isotropic noise_sd.
    """
    if d < 2:
        raise ValueError("need d >= 2")
    if not 0 < n_relevant < n:
        raise ValueError("need 0 < n_relevant < n")
    rng = np.random.default_rng(seed)

    # The relevant center sits separation * noise_sd along a random axis v;
    # distractor cluster 0 sits at the origin (the nearest center, exactly the
    # stated distance) and the others scatter in the complement of v, so the
    # whole distractor mixture stays on one side of the v-axis margin. All
    # radii scale with the separation: separation 0 collapses every cluster
    # onto one blob.
    v = rng.standard_normal(d)
    v /= np.linalg.norm(v)
    relevant_center = v * (separation * noise_sd)
    directions = rng.standard_normal((n_distractor_clusters, d))
    directions -= np.outer(directions @ v, v)
    norms = np.linalg.norm(directions, axis=1, keepdims=True)
    directions = np.divide(directions, norms, out=np.zeros_like(directions), where=norms > 0)
    radii = separation * noise_sd * (0.5 + rng.uniform(size=n_distractor_clusters))
    centers = directions * radii[:, None]
    centers[0] = 0.0

    assignment = rng.integers(0, n_distractor_clusters, size=n)
    relevant_rows = np.sort(rng.choice(n, size=n_relevant, replace=False))
    is_relevant = np.zeros(n, dtype=bool)
    is_relevant[relevant_rows] = True
    values = rng.standard_normal((n, d)) * noise_sd
    values[is_relevant] += relevant_center
    values[~is_relevant] += centers[assignment[~is_relevant]]

    image_ids = [f"{prefix}{k:05d}" for k in range(n)]
    relevant_ids = [image_ids[k] for k in np.flatnonzero(is_relevant)]
    mat = FeatureMatrix(image_ids=image_ids, values=values, targets=is_relevant)
    return mat, relevant_ids
