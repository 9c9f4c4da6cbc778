"""Base per-frame segmentation: Otsu threshold, open/close, 8-connected
components, and Moore boundary tracing to seed snakes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import ndimage

from . import _backend
from .errors import DegenerateContourError, DegenerateHistogramError
from .image import GrayImage
from .snake import Contour, resample

POLARITIES = ("bright", "dark")


@dataclass(frozen=True, eq=False)
class Segment:
    id: int
    pixels: np.ndarray  # (K, 2) int64 (x, y), raster order

    def __post_init__(self):
        p = np.asarray(self.pixels, dtype=np.int64).reshape(-1, 2)
        if len(p) == 0:
            raise ValueError(f"segment {self.id} has no pixels")
        if p.min() < 0:
            raise ValueError("pixel coordinates must be non-negative")
        p = p[np.lexsort((p[:, 0], p[:, 1]))]
        p.setflags(write=False)
        object.__setattr__(self, "pixels", p)

    @property
    def area(self) -> int:
        return len(self.pixels)

    @cached_property
    def centroid(self):
        c = self.pixels.mean(axis=0)
        return float(c[0]), float(c[1])

    @cached_property
    def bbox(self):
        """Inclusive (x0, y0, x1, y1)."""
        lo = self.pixels.min(axis=0)
        hi = self.pixels.max(axis=0)
        return int(lo[0]), int(lo[1]), int(hi[0]), int(hi[1])

    @cached_property
    def keys(self) -> np.ndarray:
        """Sorted unique int64 pixel keys for set arithmetic."""
        k = (self.pixels[:, 1] << 32) | self.pixels[:, 0]
        return np.unique(k)


@dataclass(eq=False)
class Segmentation:
    frame: int
    segments: list
    labels: np.ndarray  # int32, 0 = background

    @property
    def shape(self):
        return self.labels.shape

    @cached_property
    def by_id(self):
        return {s.id: s for s in self.segments}

    def __getitem__(self, sid) -> Segment:
        return self.by_id[sid]

    @property
    def ids(self):
        return [s.id for s in self.segments]


@dataclass(frozen=True)
class SegmenterSettings:
    polarity: str = "dark"
    morph_radius: int = 1
    min_area: int = 20

    def __post_init__(self):
        if self.polarity not in POLARITIES:
            raise ValueError(f"segmenter.polarity must be one of {POLARITIES}, got {self.polarity!r}")
        if int(self.morph_radius) != self.morph_radius or self.morph_radius < 0:
            raise ValueError("segmenter.morph_radius must be an integer >= 0")
        if int(self.min_area) != self.min_area or self.min_area < 1:
            raise ValueError("segmenter.min_area must be an integer >= 1")


def otsu_threshold(img: GrayImage) -> float:
    """Threshold in (0, 1) maximizing between-class variance (256 bins).

    Class 0 is bins <= k; the threshold sits half a bin above k, so bright
    binarization selects bins > k and dark binarization bins <= k. Empty
    bins between the classes leave the variance flat over a run of k; the
    threshold is then placed at the middle of the first maximal run, which
    makes it symmetric under intensity inversion.
    """
    bins = np.rint(img.pixels.ravel() * 255.0).astype(np.int64)
    hist = np.bincount(bins, minlength=256).astype(np.float64)
    if np.count_nonzero(hist) < 2:
        raise DegenerateHistogramError("image has a single intensity level; Otsu threshold undefined")
    p = hist / hist.sum()
    levels = np.arange(256, dtype=np.float64)
    w0 = np.cumsum(p)[:-1]
    m0 = np.cumsum(p * levels)[:-1]
    mt = float(np.sum(p * levels))
    w1 = 1.0 - w0
    with np.errstate(divide="ignore", invalid="ignore"):
        var = (mt * w0 - m0) ** 2 / (w0 * w1)
    var[(w0 <= 0) | (w1 <= 0)] = -1.0
    k1 = int(np.argmax(var))
    k2 = k1
    while k2 + 1 < var.size and var[k2 + 1] == var[k1]:
        k2 += 1
    return ((k1 + k2) / 2.0 + 0.5) / 255.0


def binarize(img: GrayImage, threshold: float, polarity: str = "bright") -> np.ndarray:
    if polarity == "bright":
        return img.pixels >= threshold
    if polarity == "dark":
        return img.pixels <= threshold
    raise ValueError(f"polarity must be one of {POLARITIES}, got {polarity!r}")


def disk_structure(radius: int) -> np.ndarray:
    r = int(radius)
    yy, xx = np.mgrid[-r:r + 1, -r:r + 1]
    return xx * xx + yy * yy <= r * r


def morph_open_close(mask, radius: int) -> np.ndarray:
    """Binary opening then closing with a disk; pixels outside count as
    foreground for erosion so an all-true mask stays all-true."""
    mask = np.asarray(mask, dtype=bool)
    if radius == 0:
        return mask.copy()
    if radius < 0:
        raise ValueError("morphology radius must be >= 0")
    se = disk_structure(radius)
    out = ndimage.binary_erosion(mask, se, border_value=1)
    out = ndimage.binary_dilation(out, se, border_value=0)
    out = ndimage.binary_dilation(out, se, border_value=0)
    return ndimage.binary_erosion(out, se, border_value=1)


def connected_components(mask, min_area: int = 1, frame: int = 0) -> Segmentation:
    """8-connected components, ids 1..m in raster order of each first pixel."""
    mask = np.asarray(mask, dtype=bool)
    raw, n = _backend.label8(mask.view(np.uint8))
    labels = np.zeros(mask.shape, dtype=np.int32)
    segments = []
    if n:
        flat = raw.ravel()
        order = np.argsort(flat, kind="stable")
        counts = np.bincount(flat, minlength=n + 1)
        starts = np.concatenate([[0], np.cumsum(counts)])
        w = mask.shape[1]
        for lab in range(1, n + 1):
            if counts[lab] < min_area:
                continue
            idx = order[starts[lab]:starts[lab + 1]]
            sid = len(segments) + 1
            labels.ravel()[idx] = sid
            segments.append(Segment(sid, np.column_stack([idx % w, idx // w])))
    return Segmentation(frame, segments, labels)


def segment_image(img: GrayImage, settings: SegmenterSettings | None = None, frame: int = 0) -> Segmentation:
    settings = settings or SegmenterSettings()
    t = otsu_threshold(img)
    mask = binarize(img, t, settings.polarity)
    mask = morph_open_close(mask, settings.morph_radius)
    return connected_components(mask, settings.min_area, frame)


def segmentation_from_labels(labels, frame: int = 0) -> Segmentation:
    """Wrap an existing label map (ids kept as given)."""
    labels = np.asarray(labels, dtype=np.int32)
    segs = []
    for sid in np.unique(labels[labels > 0]):
        ys, xs = np.nonzero(labels == sid)
        segs.append(Segment(int(sid), np.column_stack([xs, ys])))
    return Segmentation(frame, segs, labels.copy())


def boundary_pixels(seg: Segment) -> np.ndarray:
    """Moore-neighbour trace of the outer boundary, counterclockwise as
    displayed, starting at the raster-first pixel. Returns (K, 2) (x, y)."""
    x0, y0, x1, y1 = seg.bbox
    local = np.zeros((y1 - y0 + 1, x1 - x0 + 1), dtype=np.uint8)
    local[seg.pixels[:, 1] - y0, seg.pixels[:, 0] - x0] = 1
    sx, sy = seg.pixels[0]
    pts = _backend.moore_trace(local, sx - x0, sy - y0)
    return pts + np.array([x0, y0])


def _shoelace(p):
    x, y = p[:, 0].astype(float), p[:, 1].astype(float)
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def trace_boundary(seg: Segment, spacing: float = 2.0) -> Contour:
    x0, y0, x1, y1 = seg.bbox
    if seg.area < 4 or x1 - x0 < 1 or y1 - y0 < 1:
        raise DegenerateContourError(
            f"segment {seg.id} (area {seg.area}, extent {x1 - x0 + 1}x{y1 - y0 + 1}) is too thin to enclose")
    pts = boundary_pixels(seg)
    if len(pts) < 4 or math.isclose(_shoelace(pts), 0.0, abs_tol=1e-9):
        raise DegenerateContourError(f"segment {seg.id} boundary encloses no area")
    return resample(pts.astype(np.float64), spacing)


def partition_ok(seg: Segmentation) -> bool:
    """Disjoint cover: each pixel carries exactly one label, areas add up."""
    labels = seg.labels
    total = sum(s.area for s in seg.segments) + int(np.count_nonzero(labels == 0))
    if total != labels.size:
        return False
    for s in seg.segments:
        if not np.all(labels[s.pixels[:, 1], s.pixels[:, 0]] == s.id):
            return False
    ids = set(np.unique(labels).tolist()) - {0}
    return ids == {s.id for s in seg.segments}
