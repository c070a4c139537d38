"""Boundary-fitted grids and node-local difference stencils.

Planar charts are ``x = rho * b(theta)`` with ``b`` the boundary curve; the
ball uses spherical coordinates.  Radial nodes sit at ``rho_i = (i + 1/2) h``
with the last one on the boundary, so no node lies on the pole: a stencil
reaching ``i = -1`` continues through the centre to the opposite node of the
innermost ring, where the chart is smooth.

At every node the chart-space difference operators (central inside, second
order one-sided in ``rho`` on the boundary) are converted into Cartesian
gradient and Hessian estimates by matching them against quadratic monomials in
``x - x_node``.  The resulting weights reproduce any quadratic exactly and are
second-order accurate for smooth functions.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .geometry import Domain


def _upper_pairs(n):
    return list(combinations_with_replacement(range(n), 2))


def _unit(n, a, s=1):
    e = [0] * n
    e[a] = s
    return tuple(e)


def _add(*offs):
    return tuple(int(sum(v)) for v in zip(*offs))


def _scale(off, s):
    return tuple(s * v for v in off)


def chart_operators(n: int, boundary: bool):
    """Difference operators in index units: list of {offset: coefficient}.

    Order: first derivatives along each chart axis, then second derivatives
    for every pair a <= b.  Axis 0 is radial; on the boundary it is
    differenced backwards.
    """
    zero = (0,) * n

    def first(a):
        if a == 0 and boundary:
            return {zero: 1.5, _unit(n, 0, -1): -2.0, _unit(n, 0, -2): 0.5}
        return {_unit(n, a, -1): -0.5, _unit(n, a, 1): 0.5}

    def second(a):
        if a == 0 and boundary:
            return {zero: 2.0, _unit(n, 0, -1): -5.0, _unit(n, 0, -2): 4.0, _unit(n, 0, -3): -1.0}
        return {_unit(n, a, -1): 1.0, zero: -2.0, _unit(n, a, 1): 1.0}

    def mixed(a, b):
        out = {}
        for off_a, ca in first(a).items():
            for off_b, cb in first(b).items():
                key = _add(off_a, off_b)
                out[key] = out.get(key, 0.0) + ca * cb
        return out

    ops = [first(a) for a in range(n)]
    ops += [second(a) if a == b else mixed(a, b) for a, b in _upper_pairs(n)]
    return ops


def quadratic_basis(dx: np.ndarray) -> np.ndarray:
    """Monomials dx_a, then dx_a^2 / 2 or dx_a dx_b (a < b), on the last axis."""
    n = dx.shape[-1]
    cols = [dx[..., a] for a in range(n)]
    for a, b in _upper_pairs(n):
        cols.append(0.5 * dx[..., a] ** 2 if a == b else dx[..., a] * dx[..., b])
    return np.stack(cols, axis=-1)


@dataclass
class Stencil:
    """Neighbour indices and jet weights for one group of nodes.

    ``weights[node, q, s]`` multiplies ``u[nbrs[node, s]] - u[node]``; rows q
    are the gradient components followed by Hessian entries for a <= b.
    """

    nodes: np.ndarray
    nbrs: np.ndarray
    weights: np.ndarray


class Grid:
    """Nodes, boundary data, quadrature weights and jet stencils on a domain."""

    def __init__(self, domain: Domain, nr: int, nt: int, nphi: int | None = None):
        if nr < 4:
            raise ValueError("need at least 4 radial nodes")
        if nt < 4 or nt % 2:
            raise ValueError("angular node count must be even and at least 4")
        self.domain = domain
        self.n = domain.n
        self.h = 1.0 / (nr - 0.5)
        if self.n == 2:
            if nphi is not None:
                raise ValueError("planar grids take no azimuthal count")
            self.shape = (nr, nt)
        else:
            nphi = 2 * nt if nphi is None else nphi
            if nphi < 4 or nphi % 2:
                raise ValueError("azimuthal node count must be even and at least 4")
            self.shape = (nr, nt, nphi)
        self.size = int(np.prod(self.shape))
        idx = np.indices(self.shape).reshape(self.n, -1)
        self.index = idx
        self.rho = (idx[0] + 0.5) * self.h
        self._build_geometry()
        self.boundary = idx[0] == nr - 1
        self.boundary_nodes = np.flatnonzero(self.boundary)
        self.interior_nodes = np.flatnonzero(~self.boundary)
        self.stencils = [self._stencil(self.interior_nodes, False), self._stencil(self.boundary_nodes, True)]
        self._pairs = _upper_pairs(self.n)

    # geometry -------------------------------------------------------------
    def _angles(self):
        if self.n == 2:
            nt = self.shape[1]
            return 2 * np.pi * self.index[1] / nt
        nt, nphi = self.shape[1], self.shape[2]
        return (self.index[1] + 0.5) * np.pi / nt, 2 * np.pi * self.index[2] / nphi

    def _build_geometry(self):
        dom = self.domain
        if self.n == 2:
            th = self._angles()
            b, db, _ = dom.curve(th)
            self.x = self.rho[:, None] * b
            cross = b[:, 0] * db[:, 1] - b[:, 1] * db[:, 0]
            self.jacobian = self.rho * cross
            nu = np.stack([db[:, 1], -db[:, 0]], axis=1)
            self.normal_field = nu / np.linalg.norm(nu, axis=1, keepdims=True)
            dth = 2 * np.pi / self.shape[1]
            self.weights = self._radial_weights(1) * dth * self.jacobian
        else:
            th, ph = self._angles()
            r = dom.a
            u = np.stack([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)], axis=1)
            self.x = (self.rho * r)[:, None] * u
            self.jacobian = self.rho**2 * r**3 * np.sin(th)
            self.normal_field = u
            dth = np.pi / self.shape[1]
            dph = 2 * np.pi / self.shape[2]
            self.weights = self._radial_weights(2) * dth * dph * self.jacobian

    def _radial_weights(self, power: int) -> np.ndarray:
        """Trapezoid in rho on [rho_0, 1] plus the [0, rho_0] piece for integrands ~ rho^power."""
        h = self.h
        nr = self.shape[0]
        w = np.full(nr, h)
        w[-1] = 0.5 * h
        w[0] = 0.5 * h + 0.5 * h / (power + 1)
        return w[self.index[0]]

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normals at the boundary nodes."""
        return self.normal_field[self.boundary_nodes]

    @property
    def volume(self) -> float:
        return float(np.sum(self.weights))

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, np.asarray(values, dtype=float)))

    def mean(self, values) -> float:
        return self.integrate(values) / self.volume

    # stencils -------------------------------------------------------------
    def _wrap(self, offs: np.ndarray) -> np.ndarray:
        """Map possibly out-of-range chart indices to node indices across the pole and seams."""
        if self.n == 2:
            nr, nt = self.shape
            i, j = offs
            flip = i < 0
            i = np.where(flip, -1 - i, i)
            j = np.where(flip, j + nt // 2, j) % nt
            return i * nt + j
        nr, nt, nphi = self.shape
        i, j, m = offs
        flip = i < 0
        i = np.where(flip, -1 - i, i)
        j = np.where(flip, nt - 1 - j, j)
        m = np.where(flip, m + nphi // 2, m)
        lo, hi = j < 0, j >= nt
        j = np.where(lo, -1 - j, np.where(hi, 2 * nt - 1 - j, j))
        m = np.where(lo | hi, m + nphi // 2, m) % nphi
        return (i * nt + j) * nphi + m

    def _stencil(self, nodes: np.ndarray, boundary: bool) -> Stencil:
        ops = chart_operators(self.n, boundary)
        zero = (0,) * self.n
        offsets = [zero] + sorted({o for op in ops for o in op} - {zero})
        q, s = len(ops), len(offsets)
        opmat = np.zeros((q, s))
        for r, op in enumerate(ops):
            for off, c in op.items():
                opmat[r, offsets.index(off)] = c
        base = self.index[:, nodes]
        nbrs = np.stack([self._wrap(base + np.array(off)[:, None]) for off in offsets], axis=1)
        dx = self.x[nbrs] - self.x[nodes][:, None, :]
        m = np.einsum("qs,nsp->nqp", opmat, quadratic_basis(dx))
        w = np.linalg.solve(m, np.broadcast_to(opmat, (len(nodes), q, s)))
        return Stencil(nodes, nbrs[:, 1:], w[:, :, 1:])

    # evaluation -----------------------------------------------------------
    def jets(self, u: np.ndarray):
        """Cartesian gradient (N, n) and Hessian (N, n, n) of nodal values ``u``."""
        u = np.asarray(u, dtype=float)
        q = self.n + len(self._pairs)
        out = np.empty((self.size, q))
        for st in self.stencils:
            diff = u[st.nbrs] - u[st.nodes][:, None]
            out[st.nodes] = np.einsum("nqs,ns->nq", st.weights, diff)
        grad = out[:, : self.n]
        hess = np.empty((self.size, self.n, self.n))
        for r, (a, b) in enumerate(self._pairs):
            hess[:, a, b] = hess[:, b, a] = out[:, self.n + r]
        return grad, hess

    def gradient(self, u) -> np.ndarray:
        return self.jets(u)[0]

    def hessian(self, u) -> np.ndarray:
        return self.jets(u)[1]

    def describe(self) -> dict:
        return {"shape": list(self.shape), "nodes": self.size, "h": self.h, "domain": self.domain.to_dict()}
