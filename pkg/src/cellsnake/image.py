"""Image containers, smoothing, differentiation and snake energy fields.

Arrays are indexed ``[y, x]`` (row-major); public coordinates are ``(x, y)``
with x along columns. All containers hold read-only float64 arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from . import _backend

# Below this gradient magnitude (intensity/pixel) level-line curvature is 0.
EPSILON_GRAD = 1e-6


def _frozen(arr, name):
    a = np.array(arr, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ValueError(f"{name} must be at least 1x1")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GrayImage:
    """Normalized grayscale image, intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        a = _frozen(self.pixels, "pixels")
        if a.min() < 0.0 or a.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")
        object.__setattr__(self, "pixels", a)

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self):
        return self.pixels.shape


@dataclass(frozen=True, eq=False)
class ScalarField:
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values, "values"))

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def shape(self):
        return self.values.shape

    @classmethod
    def zeros(cls, height, width):
        return cls(np.zeros((height, width)))


@dataclass(frozen=True, eq=False)
class VectorField:
    gx: np.ndarray
    gy: np.ndarray

    def __post_init__(self):
        gx = _frozen(self.gx, "gx")
        gy = _frozen(self.gy, "gy")
        if gx.shape != gy.shape:
            raise ValueError("gx and gy shapes differ")
        object.__setattr__(self, "gx", gx)
        object.__setattr__(self, "gy", gy)

    @property
    def width(self) -> int:
        return self.gx.shape[1]

    @property
    def height(self) -> int:
        return self.gx.shape[0]

    @property
    def shape(self):
        return self.gx.shape


def _check_sigma(sigma):
    if not math.isfinite(sigma) or sigma < 0:
        raise ValueError(f"sigma must be finite and >= 0, got {sigma}")


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Sampled Gaussian truncated at ceil(3 sigma), normalized to sum 1."""
    _check_sigma(sigma)
    if sigma == 0:
        return np.ones(1)
    radius = max(1, math.ceil(3 * sigma))
    t = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (t / sigma) ** 2)
    return k / k.sum()


def _smooth_array(a, sigma):
    if sigma == 0:
        return np.array(a, dtype=np.float64)
    k = gaussian_kernel(sigma)
    out = ndimage.correlate1d(a, k, axis=0, mode="nearest")
    return ndimage.correlate1d(out, k, axis=1, mode="nearest")


def gaussian_smooth(img: GrayImage, sigma: float) -> GrayImage:
    _check_sigma(sigma)
    if sigma == 0:
        return img
    out = _smooth_array(img.pixels, sigma)
    # convex combination of [0,1] values; clip only guards rounding
    return GrayImage(np.clip(out, 0.0, 1.0))


def _gradient_array(a):
    if a.shape[0] < 2 or a.shape[1] < 2:
        raise ValueError(f"gradient needs at least 2x2 pixels, got {a.shape[1]}x{a.shape[0]}")
    gy, gx = np.gradient(a)
    return gx, gy


def gradient(img) -> VectorField:
    """Central differences inside, one-sided at the border."""
    a = img.pixels if isinstance(img, GrayImage) else img.values
    gx, gy = _gradient_array(a)
    return VectorField(gx, gy)


def line_energy(img: GrayImage) -> ScalarField:
    return ScalarField(img.pixels)


def edge_energy(img: GrayImage, sigma: float) -> ScalarField:
    _check_sigma(sigma)
    gx, gy = _gradient_array(_smooth_array(img.pixels, sigma))
    return ScalarField(-(gx * gx + gy * gy))


def termination_energy(img: GrayImage, sigma: float) -> ScalarField:
    """Curvature of the level lines of the smoothed image."""
    if not math.isfinite(sigma) or sigma <= 0:
        raise ValueError(f"termination energy needs sigma > 0, got {sigma}")
    c = _smooth_array(img.pixels, sigma)
    cx, cy = _gradient_array(c)
    cxx, cxy = _gradient_array(cx)
    _, cyy = _gradient_array(cy)
    mag2 = cx * cx + cy * cy
    num = cyy * cx * cx - 2.0 * cxy * cx * cy + cxx * cy * cy
    out = np.zeros_like(c)
    ok = np.sqrt(mag2) >= EPSILON_GRAD
    out[ok] = num[ok] / mag2[ok] ** 1.5
    return ScalarField(out)


def image_energy(img: GrayImage, w_line: float, w_edge: float, w_term: float,
                 sigma: float) -> ScalarField:
    """Pixelwise weighted sum of line, edge and termination energies.

    Terms with zero weight are skipped, so e.g. ``sigma=0`` is fine as long
    as ``w_term`` is 0.
    """
    for name, w in (("w_line", w_line), ("w_edge", w_edge), ("w_term", w_term)):
        if not math.isfinite(w):
            raise ValueError(f"{name} must be finite")
    total = np.zeros(img.shape)
    if w_line:
        total += w_line * line_energy(img).values
    if w_edge:
        total += w_edge * edge_energy(img, sigma).values
    if w_term:
        total += w_term * termination_energy(img, sigma).values
    return ScalarField(total)


def _check_coords(shape, xs, ys):
    h, w = shape
    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    bad = ~((xs >= 0) & (xs <= w - 1) & (ys >= 0) & (ys <= h - 1))
    if np.any(bad):
        i = int(np.flatnonzero(bad.ravel())[0])
        raise ValueError(
            f"sample point ({xs.ravel()[i]}, {ys.ravel()[i]}) outside [0, {w - 1}] x [0, {h - 1}]")
    return xs, ys


def bilinear_sample(field: ScalarField, x: float, y: float) -> float:
    xs, ys = _check_coords(field.shape, [x], [y])
    return float(_backend.bilinear(field.values, xs, ys)[0])


def sample_field(field: ScalarField, xs, ys) -> np.ndarray:
    """Vectorized ``bilinear_sample``."""
    xs, ys = _check_coords(field.shape, xs, ys)
    return _backend.bilinear(field.values, xs, ys)


def sample_vectors(vf: VectorField, xs, ys) -> np.ndarray:
    """Bilinear samples of a vector field; returns an (n, 2) array."""
    xs, ys = _check_coords(vf.shape, xs, ys)
    return np.stack([_backend.bilinear(vf.gx, xs, ys), _backend.bilinear(vf.gy, xs, ys)], axis=-1)
