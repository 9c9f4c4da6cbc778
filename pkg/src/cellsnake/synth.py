"""Synthetic disk-cell sequences with exact ground truth."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import SceneSpecError
from .image import GrayImage


@dataclass
class CellSpec:
    trajectory: list  # per-frame (x, y) centre
    radius: float
    contrast: float
    split_frame: int | None = None
    split_offsets: tuple | None = None  # two (dx, dy) daughter offsets from the trajectory
    split_radius: float | None = None  # default: radius / sqrt(2), area-preserving

    @property
    def daughter_radius(self):
        return self.split_radius if self.split_radius is not None else self.radius / math.sqrt(2)


@dataclass
class SceneSpec:
    width: int
    height: int
    background: float
    noise_sigma: float
    cells: list = field(default_factory=list)
    seed: int = 0
    n_frames: int | None = None

    def __post_init__(self):
        if self.n_frames is None:
            self.n_frames = len(self.cells[0].trajectory) if self.cells else 1

    def validate(self):
        def bad(where, msg):
            raise SceneSpecError(f"{where}: {msg}")

        if int(self.width) != self.width or self.width < 2:
            bad("width", f"must be an integer >= 2, got {self.width}")
        if int(self.height) != self.height or self.height < 2:
            bad("height", f"must be an integer >= 2, got {self.height}")
        if not 0.0 <= self.background <= 1.0:
            bad("background", f"must lie in [0, 1], got {self.background}")
        if not math.isfinite(self.noise_sigma) or self.noise_sigma < 0:
            bad("noise_sigma", f"must be >= 0, got {self.noise_sigma}")
        if int(self.seed) != self.seed or self.seed < 0:
            bad("seed", f"must be a non-negative integer, got {self.seed}")
        if self.n_frames < 1:
            bad("frames", "need at least one frame")
        for i, c in enumerate(self.cells):
            where = f"cells[{i}]"
            if len(c.trajectory) != self.n_frames:
                bad(f"{where}.trajectory", f"has {len(c.trajectory)} positions, expected {self.n_frames}")
            if not c.radius > 0:
                bad(f"{where}.radius", f"must be > 0, got {c.radius}")
            if not -1.0 <= c.contrast <= 1.0:
                bad(f"{where}.contrast", f"must lie in [-1, 1], got {c.contrast}")
            if not 0.0 <= self.background + c.contrast <= 1.0:
                bad(f"{where}.contrast", f"background + contrast = {self.background + c.contrast} leaves [0, 1]")
            if c.split_frame is not None:
                if not 1 <= c.split_frame < self.n_frames:
                    bad(f"{where}.split_frame", f"must lie in [1, {self.n_frames - 1}], got {c.split_frame}")
                if c.split_offsets is None or len(c.split_offsets) != 2:
                    bad(f"{where}.split_offsets", "need exactly two (dx, dy) offsets")
                if not c.daughter_radius > 0:
                    bad(f"{where}.split_radius", "must be > 0")
        for f in range(self.n_frames):
            for cid, x, y, r, _ in _disks(self, f):
                if x - r < 0 or y - r < 0 or x + r > self.width - 1 or y + r > self.height - 1:
                    bad(f"cell {cid} frame {f}",
                        f"disk at ({x}, {y}) radius {r} leaves the {self.width}x{self.height} image")
        return self

    @classmethod
    def from_dict(cls, d):
        known = {"width", "height", "background", "noise_sigma", "seed", "frames", "cells"}
        unknown = set(d) - known
        if unknown:
            raise SceneSpecError(f"unknown scene keys: {sorted(unknown)}")
        try:
            n_frames = d.get("frames")
            cells = []
            for i, cd in enumerate(d.get("cells", [])):
                cells.append(_cell_from_dict(cd, n_frames, f"cells[{i}]"))
            spec = cls(width=d["width"], height=d["height"], background=float(d.get("background", 0.2)),
                       noise_sigma=float(d.get("noise_sigma", 0.0)), cells=cells,
                       seed=d.get("seed", 0), n_frames=n_frames)
        except KeyError as exc:
            raise SceneSpecError(f"missing required key {exc.args[0]!r}") from None
        except (TypeError, ValueError) as exc:
            raise SceneSpecError(f"malformed scene spec: {exc}") from None
        return spec.validate()

    def to_dict(self):
        return {
            "width": self.width, "height": self.height, "background": self.background,
            "noise_sigma": self.noise_sigma, "seed": self.seed, "frames": self.n_frames,
            "cells": [{
                "trajectory": [list(map(float, p)) for p in c.trajectory], "radius": c.radius,
                "contrast": c.contrast, "split_frame": c.split_frame,
                "split_offsets": [list(o) for o in c.split_offsets] if c.split_offsets else None,
                "split_radius": c.split_radius,
            } for c in self.cells],
        }


def _cell_from_dict(cd, n_frames, where):
    known = {"trajectory", "center", "velocity", "radius", "contrast", "split_frame", "split_offsets", "split_radius"}
    unknown = set(cd) - known
    if unknown:
        raise SceneSpecError(f"{where}: unknown keys {sorted(unknown)}")
    if "trajectory" in cd:
        traj = [tuple(float(v) for v in p) for p in cd["trajectory"]]
    elif "center" in cd:
        if n_frames is None:
            raise SceneSpecError(f"{where}: 'center' needs a top-level 'frames' count")
        cx, cy = (float(v) for v in cd["center"])
        vx, vy = (float(v) for v in cd.get("velocity", (0.0, 0.0)))
        traj = [(cx + vx * f, cy + vy * f) for f in range(n_frames)]
    else:
        raise SceneSpecError(f"{where}: needs 'trajectory' or 'center'")
    offs = cd.get("split_offsets")
    return CellSpec(trajectory=traj, radius=float(cd["radius"]), contrast=float(cd["contrast"]),
                    split_frame=cd.get("split_frame"),
                    split_offsets=tuple(tuple(float(v) for v in o) for o in offs) if offs else None,
                    split_radius=cd.get("split_radius"))


def load_scene(path) -> SceneSpec:
    try:
        d = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SceneSpecError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(d, dict):
        raise SceneSpecError(f"{path}: top level must be an object")
    return SceneSpec.from_dict(d)


def _daughter_ids(spec):
    """Ground-truth ids: cells are 1..k, daughters numbered after them in split order."""
    nxt = len(spec.cells) + 1
    ids = {}
    for i, c in enumerate(spec.cells):
        if c.split_frame is not None:
            ids[i] = (nxt, nxt + 1)
            nxt += 2
    return ids


def _disks(spec, frame):
    """(cell id, x, y, radius, contrast) of every disk present at ``frame``."""
    out = []
    dids = _daughter_ids(spec)
    for i, c in enumerate(spec.cells):
        x, y = c.trajectory[frame]
        if c.split_frame is not None and frame >= c.split_frame:
            for did, (dx, dy) in zip(dids[i], c.split_offsets):
                out.append((did, x + dx, y + dy, c.daughter_radius, c.contrast))
        else:
            out.append((i + 1, x, y, c.radius, c.contrast))
    return out


@dataclass
class GroundTruth:
    labels: list  # per-frame int32 label maps
    pixels: list  # per-frame {cell id: (K, 2) array of (x, y)}
    centroids: list  # per-frame {cell id: (cx, cy)}

    def foreground(self, frame):
        return self.labels[frame] > 0


def render_frame(spec: SceneSpec, frame: int):
    h, w = spec.height, spec.width
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    img = np.full((h, w), float(spec.background))
    labels = np.zeros((h, w), dtype=np.int32)
    best = np.full((h, w), np.inf)
    for cid, x, y, r, contrast in _disks(spec, frame):
        d = np.hypot(xx - x, yy - y)
        # linear 1-px soft edge centred on the radius
        img += contrast * np.clip(r + 0.5 - d, 0.0, 1.0)
        rel = d / r
        inside = (d <= r) & (rel < best)
        labels[inside] = cid
        best[inside] = rel[inside]
    if spec.noise_sigma > 0:
        rng = np.random.default_rng(int(spec.seed) + frame)
        img = img + rng.normal(0.0, spec.noise_sigma, size=img.shape)
    return GrayImage(np.clip(img, 0.0, 1.0)), labels


def render_sequence(spec: SceneSpec):
    spec.validate()
    frames, labels, pixels, cents = [], [], [], []
    for f in range(spec.n_frames):
        img, lab = render_frame(spec, f)
        frames.append(img)
        labels.append(lab)
        px, ct = {}, {}
        for cid in np.unique(lab[lab > 0]):
            ys, xs = np.nonzero(lab == cid)
            px[int(cid)] = np.column_stack([xs, ys])
            ct[int(cid)] = (float(xs.mean()), float(ys.mean()))
        pixels.append(px)
        cents.append(ct)
    return frames, GroundTruth(labels, pixels, cents)


def _as_key_set(p):
    a = np.asarray(p)
    if a.dtype == bool:
        return set(np.flatnonzero(a.ravel()).tolist()), a.shape
    a = a.reshape(-1, 2).astype(np.int64)
    return set(zip(a[:, 0].tolist(), a[:, 1].tolist())), None


def mask_jaccard(predicted, truth) -> float:
    """|P & T| / |P | T| of two pixel sets (boolean masks or (K, 2) coords)."""
    t, tshape = _as_key_set(truth)
    if not t:
        raise ValueError("ground-truth pixel set is empty")
    p, pshape = _as_key_set(predicted)
    if (tshape is None) != (pshape is None) or (tshape is not None and tshape != pshape):
        raise ValueError("predicted and truth must be the same kind of pixel set")
    if not p:
        return 0.0
    return len(p & t) / len(p | t)
