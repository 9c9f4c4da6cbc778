"""Discrete closed active contour and its semi-implicit evolution.

A contour stores N nodes sampled uniformly in the curve parameter over
[0, l). The parameter length ``l`` is fixed when the contour is created or
resampled (it defaults to the polygon perimeter) and is carried unchanged
through evolution steps, so between resamplings the internal energy is a
fixed quadratic form in the node coordinates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np
from scipy import linalg, sparse
from scipy.sparse import linalg as splinalg

from . import _backend
from .errors import DegenerateContourError
from .image import ScalarField, VectorField, gradient, sample_field, sample_vectors

DENSE_LIMIT = 512


def perimeter(points) -> float:
    p = np.asarray(points, dtype=np.float64)
    return float(np.sum(np.hypot(*(np.roll(p, -1, axis=0) - p).T)))


@dataclass(frozen=True, eq=False)
class Contour:
    points: np.ndarray
    length: float | None = None

    def __post_init__(self):
        p = np.array(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[1] != 2:
            raise ValueError(f"contour points must be (N, 2), got {p.shape}")
        if len(p) < 4:
            raise ValueError(f"contour needs at least 4 nodes, got {len(p)}")
        if not np.all(np.isfinite(p)):
            raise ValueError("contour has non-finite coordinates")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)
        length = perimeter(p) if self.length is None else float(self.length)
        if not math.isfinite(length) or length < 0:
            raise ValueError(f"invalid parameter length {length}")
        object.__setattr__(self, "length", length)

    def __len__(self):
        return len(self.points)

    @property
    def n(self) -> int:
        return len(self.points)

    @property
    def h(self) -> float:
        """Parameter step l/N; 1 for a zero-length contour."""
        return self.length / self.n if self.length > 0 else 1.0

    @property
    def perimeter(self) -> float:
        return perimeter(self.points)

    @property
    def centroid(self):
        """Area centroid of the polygon (vertex mean if the area vanishes)."""
        x, y = self.points.T
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        a = cr.sum() / 2.0
        if abs(a) < 1e-12:
            return float(x.mean()), float(y.mean())
        return float(((x + xn) * cr).sum() / (6 * a)), float(((y + yn) * cr).sum() / (6 * a))

    def with_points(self, points) -> "Contour":
        """Same parameterization, moved nodes."""
        return Contour(points, self.length)


@dataclass(frozen=True)
class SnakeParams:
    alpha: float = 0.1
    beta: float = 0.4
    gamma: float = 1.0
    w_line: float = 0.0
    w_edge: float = 100.0
    w_term: float = 0.0
    max_iterations: int = 500
    move_tol: float = 0.05
    resample_spacing: float = 2.0
    resample_every: int = 5

    def __post_init__(self):
        for name in ("alpha", "beta", "gamma", "w_line", "w_edge", "w_term", "move_tol", "resample_spacing"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"snake.{name} must be finite")
        if self.alpha < 0:
            raise ValueError("snake.alpha must be >= 0")
        if self.beta < 0:
            raise ValueError("snake.beta must be >= 0")
        if self.gamma <= 0:
            raise ValueError("snake.gamma must be > 0")
        if int(self.max_iterations) != self.max_iterations or self.max_iterations < 1:
            raise ValueError("snake.max_iterations must be an integer >= 1")
        if self.move_tol <= 0:
            raise ValueError("snake.move_tol must be > 0")
        if self.resample_spacing < 1:
            raise ValueError("snake.resample_spacing must be >= 1")
        if int(self.resample_every) != self.resample_every or self.resample_every < 1:
            raise ValueError("snake.resample_every must be an integer >= 1")

    def scaled(self, c):
        """All energy weights and the step damping multiplied by ``c``."""
        return replace(self, alpha=self.alpha * c, beta=self.beta * c, gamma=self.gamma * c,
                       w_line=self.w_line * c, w_edge=self.w_edge * c, w_term=self.w_term * c)


@dataclass
class EvolutionReport:
    contour: Contour
    iterations: int
    energy_history: list = field(default_factory=list)
    converged: bool = False
    last_displacement: float = math.inf


def _diff_ops(n):
    eye = np.eye(n)
    d1 = eye - np.roll(eye, -1, axis=1)  # (D1 v)_i = v_i - v_{i-1}
    d2 = np.roll(eye, 1, axis=1) - 2 * eye + np.roll(eye, -1, axis=1)
    return d1, d2


@lru_cache(maxsize=8)
def internal_matrix(n: int, h: float, alpha: float, beta: float) -> np.ndarray:
    """Cyclic pentadiagonal operator A with grad E_int = A v (per coordinate)."""
    d1, d2 = _diff_ops(n)
    a = (alpha / h) * (d1.T @ d1) + (beta / h ** 3) * (d2.T @ d2)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=8)
def _factor(n, h, alpha, beta, gamma):
    m = gamma * np.eye(n) + internal_matrix(n, h, alpha, beta)
    if n <= DENSE_LIMIT:
        return ("dense", linalg.cho_factor(m))
    return ("sparse", splinalg.splu(sparse.csc_matrix(m)))


def _solve(fac, rhs):
    kind, f = fac
    return linalg.cho_solve(f, rhs) if kind == "dense" else f.solve(rhs)


def internal_energy(c: Contour, alpha: float, beta: float) -> float:
    v = c.points
    h = c.h
    d1 = v - np.roll(v, 1, axis=0)
    d2 = np.roll(v, -1, axis=0) - 2 * v + np.roll(v, 1, axis=0)
    s1 = float(np.sum(d1 * d1))
    s2 = float(np.sum(d2 * d2))
    return (alpha * s1 / h ** 2 + beta * s2 / h ** 4) * h / 2.0


def internal_energy_gradient(c: Contour, alpha: float, beta: float) -> np.ndarray:
    return internal_matrix(c.n, c.h, float(alpha), float(beta)) @ c.points


def contour_image_energy(c: Contour, field: ScalarField) -> float:
    v = c.points
    return float(np.sum(sample_field(field, v[:, 0], v[:, 1])) * c.h)


def total_energy(c: Contour, field: ScalarField, params: SnakeParams,
                 external: ScalarField | None = None) -> float:
    e = internal_energy(c, params.alpha, params.beta) + contour_image_energy(c, field)
    if external is not None:
        e += contour_image_energy(c, external)
    return e


def force_field(field: ScalarField, external: ScalarField | None = None) -> VectorField:
    """Negative gradient of the (combined) energy field."""
    vals = field.values if external is None else field.values + external.values
    g = gradient(ScalarField(vals))
    return VectorField(-g.gx, -g.gy)


def evolve_step(c: Contour, force: VectorField, params: SnakeParams) -> Contour:
    """One semi-implicit step: (gamma I + A) v_new = gamma v_old + F(v_old)."""
    v = c.points
    f = sample_vectors(force, v[:, 0], v[:, 1])
    fac = _factor(c.n, c.h, float(params.alpha), float(params.beta), float(params.gamma))
    new = _solve(fac, params.gamma * v + f)
    assert np.all(np.isfinite(new)), "semi-implicit system produced non-finite nodes"
    h, w = force.shape
    new[:, 0] = np.clip(new[:, 0], 0.0, w - 1)
    new[:, 1] = np.clip(new[:, 1], 0.0, h - 1)
    return c.with_points(new)


def resample_count(per: float, spacing: float) -> int:
    return max(4, int(math.floor(per / spacing + 0.5)))


def resample(c, spacing: float) -> Contour:
    """Redistribute nodes at uniform arc length along the closed polyline.

    Node 0 is kept; the node count is ``max(4, round(perimeter / spacing))``.
    """
    if spacing < 1:
        raise ValueError("resample spacing must be >= 1")
    p = np.asarray(getattr(c, "points", c), dtype=np.float64)
    closed = np.vstack([p, p[:1]])
    seg = np.hypot(*np.diff(closed, axis=0).T)
    per = float(seg.sum())
    if per <= 0:
        raise DegenerateContourError("cannot resample a zero-perimeter contour")
    n = resample_count(per, spacing)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.arange(n) * (per / n)
    keep = np.concatenate([[True], seg > 0])  # interp needs increasing abscissae
    x = np.interp(t, s[keep], closed[keep, 0])
    y = np.interp(t, s[keep], closed[keep, 1])
    pts = np.column_stack([x, y])
    return Contour(pts)


def evolve(c: Contour, field: ScalarField, params: SnakeParams,
           external: ScalarField | None = None) -> EvolutionReport:
    """Evolve to a local minimum of the total energy.

    Stops once the largest node move of a step falls below ``move_tol`` or
    after ``max_iterations`` steps; resamples every ``resample_every`` steps.
    """
    if external is not None and external.shape != field.shape:
        raise ValueError("external field shape differs from image field")
    force = force_field(field, external)
    report = EvolutionReport(contour=c, iterations=0)
    cur = c
    for it in range(1, params.max_iterations + 1):
        new = evolve_step(cur, force, params)
        disp = float(np.max(np.abs(new.points - cur.points)))
        converged = disp < params.move_tol
        if not converged and it % params.resample_every == 0:
            new = resample(new, params.resample_spacing)
        cur = new
        report.energy_history.append(total_energy(cur, field, params, external))
        report.iterations = it
        report.last_displacement = disp
        if converged:
            report.converged = True
            break
    report.contour = cur
    return report


def contour_mask(c, height: int, width: int) -> np.ndarray:
    """Boolean mask of pixel centres inside or on the contour polygon."""
    pts = np.asarray(getattr(c, "points", c), dtype=np.float64)
    return _backend.fill_polygon(pts, height, width).astype(bool)


def circle_contour(cx, cy, radius, n=None, spacing=2.0) -> Contour:
    if n is None:
        n = resample_count(2 * math.pi * radius, spacing)
    t = 2 * math.pi * np.arange(n) / n
    return Contour(np.column_stack([cx + radius * np.cos(t), cy + radius * np.sin(t)]))


def rectangle_contour(x0, y0, x1, y1, spacing=2.0) -> Contour:
    corners = np.array([[x0, y0], [x0, y1], [x1, y1], [x1, y0]], dtype=np.float64)
    return resample(corners, spacing)
