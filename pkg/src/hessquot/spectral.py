"""Hessian quotient operator on symmetric matrices.

Matrices may be batched: anything shaped ``(..., n, n)`` is decomposed in one
vectorised Jacobi pass, which is how the PDE solver evaluates every grid node
at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import NotAdmissibleError
from .symmetric import (
    ConeMargin,
    HessianPair,
    gamma_k_membership,
    quotient_gradient_unchecked,
    quotient_unchecked,
)


@dataclass(frozen=True)
class SymMatrix:
    """Dense symmetric matrix; symmetrised exactly on construction."""

    entries: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.entries, dtype=float)
        if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
            raise ValueError(f"expected square matrices, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        object.__setattr__(self, "entries", 0.5 * (a + np.swapaxes(a, -1, -2)))

    @property
    def n(self) -> int:
        return self.entries.shape[-1]


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues sorted descending; eigenvectors are the columns of ``basis``."""

    eigenvalues: np.ndarray
    basis: np.ndarray

    def reconstruct(self) -> np.ndarray:
        q = self.basis
        return np.einsum("...ia,...a,...ja->...ij", q, self.eigenvalues, q)


MatrixLike = Union[SymMatrix, ArrayLike]


def _entries(a: MatrixLike) -> np.ndarray:
    if isinstance(a, SymMatrix):
        return a.entries
    return SymMatrix(a).entries


def jacobi_eigh(a: np.ndarray, tol: float = 1e-13, max_sweeps: int = 50):
    """Cyclic Jacobi on a stack of symmetric matrices.

    Sweeps until the off-diagonal Frobenius norm of every matrix is below
    ``tol`` times its full norm. Returns unsorted ``(w, v)``.
    """
    a = np.asarray(a, dtype=float)
    shape = a.shape
    n = shape[-1]
    # batch axis last keeps every row/column slice contiguous
    a = np.ascontiguousarray(np.moveaxis(a.reshape(-1, n, n), 0, -1))
    v = np.zeros_like(a)
    for i in range(n):
        v[i, i] = 1.0
    scale = np.sqrt(np.einsum("ijb,ijb->b", a, a))
    offmask = ~np.eye(n, dtype=bool)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(a[offmask] ** 2, axis=0))
        if not np.any(off > tol * scale):
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                rot = apq != 0.0
                if not rot.any():
                    continue
                safe = np.where(rot, apq, 1.0)
                with np.errstate(over="ignore"):
                    # |tau| overflowing to inf just means t = 0
                    tau = (a[q, q] - a[p, p]) / (2.0 * safe)
                    t = np.where(tau >= 0, 1.0, -1.0) / (np.abs(tau) + np.hypot(1.0, tau))
                c = np.where(rot, 1.0 / np.sqrt(1.0 + t * t), 1.0)
                s = np.where(rot, t * c, 0.0)
                ap, aq = a[:, p].copy(), a[:, q]
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp, rq = a[p].copy(), a[q]
                a[p] = c * rp - s * rq
                a[q] = s * rp + c * rq
                a[p, q] = np.where(rot, 0.0, a[p, q])
                a[q, p] = a[p, q]
                vp, vq = v[:, p].copy(), v[:, q]
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    w = np.einsum("iib->bi", a)
    v = np.moveaxis(v, -1, 0)
    return w.reshape(shape[:-1]), v.reshape(shape)


def eigen_sym(a: MatrixLike) -> SpectralDecomposition:
    """Eigen-decomposition with eigenvalues in descending order.

    Ties keep the Jacobi output order (stable sort), so the basis within a
    repeated eigenspace is arbitrary but deterministic.
    """
    entries = _entries(a)
    w, v = jacobi_eigh(entries)
    order = np.argsort(-w, axis=-1, kind="stable")
    w = np.take_along_axis(w, order, axis=-1)
    v = np.take_along_axis(v, order[..., None, :], axis=-1)
    return SpectralDecomposition(w, v)


def _check_pair(p: HessianPair, n: int) -> None:
    if p.n != n:
        raise ValueError(f"pair is for n={p.n}, matrix has n={n}")


def _require(w: np.ndarray, k: int) -> None:
    cm = gamma_k_membership(w, k)
    if not np.all(cm.member):
        worst = float(np.min(cm.margin))
        raise NotAdmissibleError(f"lambda(A) not in Gamma_{k} (margin {worst:.3e})", worst)


def operator_value(a: MatrixLike, p: HessianPair) -> float | np.ndarray:
    """sigma_k(lambda(A)) / sigma_l(lambda(A))."""
    dec = eigen_sym(a)
    _check_pair(p, dec.eigenvalues.shape[-1])
    _require(dec.eigenvalues, p.k)
    val = quotient_unchecked(dec.eigenvalues, p.k, p.l)
    return float(val) if np.ndim(val) == 0 else val


def derivative_from_decomposition(dec: SpectralDecomposition, k: int, l: int) -> np.ndarray:
    g = quotient_gradient_unchecked(dec.eigenvalues, k, l)
    q = dec.basis
    return np.einsum("...ia,...a,...ja->...ij", q, g, q)


def operator_derivative(a: MatrixLike, p: HessianPair) -> np.ndarray:
    """Linearisation F^{ij} = dF/da_ij as Q diag(dF/dlambda) Q^T."""
    dec = eigen_sym(a)
    _check_pair(p, dec.eigenvalues.shape[-1])
    _require(dec.eigenvalues, p.k)
    return derivative_from_decomposition(dec, p.k, p.l)


def admissibility(a: MatrixLike, k: int) -> ConeMargin:
    return gamma_k_membership(eigen_sym(a).eigenvalues, k)
