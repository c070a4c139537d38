"""Convex domains with exact boundary data.

Planar domains are star-shaped about the origin and described by a boundary
curve ``b(theta)``, traversed counterclockwise over ``[0, 2 pi)``; the ball
uses spherical angles.  Distances to curved boundaries come from a Newton
projection onto the curve.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import OutOfCollarError, OutOfDomainError
from .spectral import SymMatrix
from .symmetric import gamma_k_membership

FOOT_TOL = 1e-12
FOOT_MAX_ITER = 50
INSIDE_TOL = 1e-12
CONVEXITY_TOL = 1e-9
_SEEDS = 512


class DomainKind(str, Enum):
    DISK = "disk"
    ELLIPSE = "ellipse"
    BALL = "ball"
    SUPERELLIPSE = "superellipse"


@dataclass(frozen=True)
class BoundaryPoint:
    """Boundary position, outward unit normal and principal curvatures (inner normal)."""

    position: np.ndarray
    outward_normal: np.ndarray
    curvatures: np.ndarray

    def __post_init__(self):
        nu = np.asarray(self.outward_normal, dtype=float)
        if abs(np.linalg.norm(nu) - 1.0) > 1e-12:
            raise ValueError("outward normal must have unit length")


class ConvexityClass(str, Enum):
    STRICT = "strictly_(k-1)_convex_and_convex"
    CONVEX_ONLY = "convex_only"
    NEITHER = "neither"


@dataclass(frozen=True)
class Domain:
    """One of the four analytic families.

    ``a``/``b`` are the semi-axes (both equal to the radius for disk and
    ball), ``p`` the superellipse exponent.  ``collar_width`` defaults to half
    the smallest radius of curvature, capped at a tenth of the diameter.
    """

    kind: DomainKind
    a: float
    b: float
    p: int = 2
    collar_width: float | None = None
    diameter: float = field(init=False)
    max_curvature: float = field(init=False)

    def __post_init__(self):
        kind = DomainKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if not (self.a > 0 and self.b > 0):
            raise ValueError("domain dimensions must be positive")
        if kind in (DomainKind.DISK, DomainKind.BALL) and self.a != self.b:
            raise ValueError(f"{kind.value} needs a single radius")
        if kind is DomainKind.SUPERELLIPSE:
            if int(self.p) != self.p or self.p < 2 or self.p % 2:
                raise ValueError("superellipse exponent must be an even integer >= 2")
        elif self.p != 2:
            raise ValueError("exponent only applies to superellipses")
        object.__setattr__(self, "p", int(self.p))
        diam, kmax = self._extent()
        object.__setattr__(self, "diameter", diam)
        object.__setattr__(self, "max_curvature", kmax)
        mu = self.collar_width
        if mu is None:
            mu = min(0.5 / kmax, 0.1 * diam)
        elif not (0 < mu < 1.0 / kmax):
            raise ValueError(f"collar width must lie in (0, {1.0 / kmax:.6g})")
        object.__setattr__(self, "collar_width", float(mu))

    # constructors -------------------------------------------------------
    @classmethod
    def disk(cls, radius: float = 1.0, collar_width=None) -> Domain:
        return cls(DomainKind.DISK, radius, radius, collar_width=collar_width)

    @classmethod
    def ellipse(cls, a: float, b: float, collar_width=None) -> Domain:
        return cls(DomainKind.ELLIPSE, a, b, collar_width=collar_width)

    @classmethod
    def ball(cls, radius: float = 1.0, collar_width=None) -> Domain:
        return cls(DomainKind.BALL, radius, radius, collar_width=collar_width)

    @classmethod
    def superellipse(cls, a: float, b: float, p: int, collar_width=None) -> Domain:
        return cls(DomainKind.SUPERELLIPSE, a, b, p, collar_width)

    @classmethod
    def from_dict(cls, d: dict) -> Domain:
        kind = DomainKind(d["kind"])
        mu = d.get("collar_width")
        if kind in (DomainKind.DISK, DomainKind.BALL):
            return cls(kind, d.get("radius", 1.0), d.get("radius", 1.0), collar_width=mu)
        if kind is DomainKind.ELLIPSE:
            return cls(kind, d["a"], d["b"], collar_width=mu)
        return cls(kind, d["a"], d["b"], d["p"], mu)

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.kind in (DomainKind.DISK, DomainKind.BALL):
            d["radius"] = self.a
        else:
            d["a"], d["b"] = self.a, self.b
        if self.kind is DomainKind.SUPERELLIPSE:
            d["p"] = self.p
        d["collar_width"] = self.collar_width
        return d

    @property
    def n(self) -> int:
        return 3 if self.kind is DomainKind.BALL else 2

    @property
    def is_round(self) -> bool:
        return self.kind in (DomainKind.DISK, DomainKind.BALL)

    # boundary curve -----------------------------------------------------
    def curve(self, theta):
        """Boundary point and its first two theta-derivatives, each shaped (..., 2)."""
        if self.n != 2:
            raise ValueError("curve parametrisation is only defined for planar domains")
        t = np.asarray(theta, dtype=float)
        c, s = np.cos(t), np.sin(t)
        e = np.stack([self.a * c, self.b * s], axis=-1)
        de = np.stack([-self.a * s, self.b * c], axis=-1)
        dde = -e
        if self.kind is not DomainKind.SUPERELLIPSE or self.p == 2:
            return e, de, dde
        p = self.p
        # b = e * g with g = S^(-1/p), S = c^p + s^p
        S = c**p + s**p
        dS = p * (-(c ** (p - 1)) * s + s ** (p - 1) * c)
        ddS = p * ((p - 1) * c ** (p - 2) * s**2 - c**p + (p - 1) * s ** (p - 2) * c**2 - s**p)
        g = S ** (-1.0 / p)
        dg = -g * dS / (p * S)
        ddg = g * ((1.0 / p + 1.0) * dS**2 / (p * S**2) - ddS / (p * S))
        g, dg, ddg = g[..., None], dg[..., None], ddg[..., None]
        return e * g, de * g + e * dg, dde * g + 2 * de * dg + e * ddg

    def curvature(self, theta):
        _, d1, d2 = self.curve(theta)
        cross = d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0]
        return cross / np.linalg.norm(d1, axis=-1) ** 3

    def _extent(self):
        if self.is_round:
            return 2.0 * self.a, 1.0 / self.a
        if self.kind is DomainKind.ELLIPSE:
            lo, hi = sorted((self.a, self.b))
            return 2.0 * hi, hi / lo**2
        th = np.linspace(0.0, np.pi / 2, 2049)
        # quarter curve suffices by the double reflection symmetry
        r2 = self._refine_max(lambda t: np.sum(self.curve(t)[0] ** 2, axis=-1), th)
        return 2.0 * np.sqrt(r2), self._refine_max(self.curvature, th)

    @staticmethod
    def _refine_max(fn, grid):
        values = fn(grid)
        i = int(np.argmax(values))
        lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        res = minimize_scalar(lambda t: -float(fn(t)), bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        return max(float(-res.fun), float(values[i]))

    def level(self, x: np.ndarray) -> np.ndarray:
        """Implicit function, <= 1 exactly on the closed domain."""
        x = np.asarray(x, dtype=float)
        if self.is_round:
            return np.sum(x**2, axis=-1) / self.a**2
        return np.abs(x[..., 0] / self.a) ** self.p + np.abs(x[..., 1] / self.b) ** self.p


def _points(dom: Domain, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != dom.n:
        raise ValueError(f"expected points in R^{dom.n}, got shape {x.shape}")
    outside = dom.level(x) > 1.0 + INSIDE_TOL
    if np.any(outside):
        bad = x[outside] if x.ndim > 1 else x
        raise OutOfDomainError(f"point {np.atleast_2d(bad)[0].tolist()} lies outside the closed domain")
    return x


def _foot_parameter(dom: Domain, x: np.ndarray) -> np.ndarray:
    """Curve parameter of the nearest boundary point, by seeded Newton on (b - x).b' = 0."""
    flat = x.reshape(-1, 2)
    seeds = np.linspace(0.0, 2 * np.pi, _SEEDS, endpoint=False)
    pts = dom.curve(seeds)[0]
    d2 = np.sum((flat[:, None, :] - pts[None, :, :]) ** 2, axis=-1)
    t = seeds[np.argmin(d2, axis=1)]
    max_step = 2 * np.pi / _SEEDS
    for _ in range(FOOT_MAX_ITER):
        e, d1, dd = dom.curve(t)
        r = e - flat
        g = np.sum(r * d1, axis=-1)
        gp = np.sum(d1 * d1, axis=-1) + np.sum(r * dd, axis=-1)
        step = -g / np.where(gp > 0, gp, np.sum(d1 * d1, axis=-1))
        step = np.clip(step, -max_step, max_step)
        t = t + step
        if np.all(np.abs(step) * np.linalg.norm(d1, axis=-1) <= FOOT_TOL):
            break
    return t.reshape(x.shape[:-1])


def foot_point(dom: Domain, x):
    """Nearest boundary point: ``(positions, outward normals, curvatures)``, batched."""
    x = _points(dom, x)
    if dom.is_round:
        r = np.linalg.norm(x, axis=-1, keepdims=True)
        e1 = np.zeros(dom.n)
        e1[0] = 1.0
        nu = np.where(r > 0, x / np.where(r > 0, r, 1.0), e1)
        kap = np.full(x.shape[:-1] + (dom.n - 1,), 1.0 / dom.a)
        return dom.a * nu, nu, kap
    t = _foot_parameter(dom, x)
    pos, d1, _ = dom.curve(t)
    nu = np.stack([d1[..., 1], -d1[..., 0]], axis=-1) / np.linalg.norm(d1, axis=-1, keepdims=True)
    return pos, nu, dom.curvature(t)[..., None]


def signed_distance(dom: Domain, x):
    """Distance to the boundary for points of the closed domain (non-negative inside)."""
    x = _points(dom, x)
    if dom.is_round:
        d = np.maximum(dom.a - np.linalg.norm(x, axis=-1), 0.0)
    else:
        pos, _, _ = foot_point(dom, x)
        d = np.linalg.norm(pos - x, axis=-1)
    return float(d) if np.ndim(d) == 0 else d


def _require_collar(dom: Domain, d) -> None:
    if np.any(np.asarray(d) >= dom.collar_width):
        raise OutOfCollarError(f"distance {np.max(d):.6g} not below collar width {dom.collar_width:.6g}")


def normal_extension(dom: Domain, x) -> np.ndarray:
    """-grad d on the collar: the outward normal at the nearest boundary point."""
    x = _points(dom, x)
    _require_collar(dom, signed_distance(dom, x))
    return foot_point(dom, x)[1]


def h_barrier(dom: Domain, x):
    """-d + d^2 on the collar."""
    d = signed_distance(dom, x)
    _require_collar(dom, d)
    return -d + d * d


def tangential_projector(nu):
    """I - nu nu^T; batched over leading axes.  Rejects non-unit vectors."""
    nu = np.asarray(nu, dtype=float)
    if np.any(np.abs(np.linalg.norm(nu, axis=-1) - 1.0) > 1e-10):
        raise ValueError("tangential projector needs a unit normal")
    n = nu.shape[-1]
    return SymMatrix(np.eye(n) - nu[..., :, None] * nu[..., None, :])


def boundary_curvatures(dom: Domain, param) -> BoundaryPoint:
    """Boundary data at curve parameter theta (planar) or spherical angles (theta, phi)."""
    if dom.n == 2:
        t = float(param)
        pos, d1, _ = dom.curve(t)
        nu = np.array([d1[1], -d1[0]]) / np.linalg.norm(d1)
        return BoundaryPoint(pos, nu, np.array([float(dom.curvature(t))]))
    th, ph = (float(v) for v in param)
    nu = np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
    return BoundaryPoint(dom.a * nu, nu, np.full(2, 1.0 / dom.a))


def boundary_samples(dom: Domain, count: int) -> np.ndarray:
    """Curvature vectors at ``count`` deterministic boundary points, shape (count, n-1)."""
    if dom.is_round:
        return np.full((count, dom.n - 1), 1.0 / dom.a)
    # uniform in theta; includes the axis points where superellipses flatten
    th = np.linspace(0.0, 2 * np.pi, count, endpoint=False)
    return dom.curvature(th)[:, None]


def convexity_class(dom: Domain, k: int, samples: int = 720) -> ConvexityClass:
    """Strict (k-1)-convexity plus convexity, convexity alone, or neither.

    Curvatures within ``CONVEXITY_TOL`` (scaled by 1/diameter) of zero count as
    zero, so flat points fail strictness but not convexity.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > dom.n:
        raise ValueError(f"k={k} exceeds the dimension {dom.n}")
    kap = boundary_samples(dom, samples)
    tol = CONVEXITY_TOL / dom.diameter
    convex = bool(np.all(kap >= -tol))
    if k == 1:
        strict = True
    else:
        cm = gamma_k_membership(kap, k - 1)
        strict = bool(np.all(cm.margin > tol))
    if convex and strict:
        return ConvexityClass.STRICT
    return ConvexityClass.CONVEX_ONLY if convex else ConvexityClass.NEITHER
