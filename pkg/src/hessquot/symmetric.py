"""Elementary symmetric functions, Garding cones and Hessian quotients.

Every function accepts either a :class:`Spectrum` or an array whose last axis
holds the eigenvalues; leading axes broadcast, so a ``(N, n)`` batch is
evaluated in one call.  Scalars come back for 1-D input.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Union

import numpy as np
from numpy.typing import ArrayLike

from .errors import InvalidDegreeError, NotAdmissibleError


@dataclass(frozen=True)
class Spectrum:
    """An eigenvalue vector."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim != 1 or v.size < 1:
            raise ValueError("a spectrum is a non-empty 1-D vector")
        if not np.all(np.isfinite(v)):
            raise ValueError("spectrum entries must be finite")
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class HessianPair:
    """Index pair selecting the operator sigma_k / sigma_l in dimension n."""

    k: int
    l: int
    n: int

    def __post_init__(self):
        if not (0 <= self.l < self.k <= self.n):
            raise ValueError(f"need 0 <= l < k <= n, got k={self.k}, l={self.l}, n={self.n}")


@dataclass(frozen=True)
class ConeMargin:
    """Cone membership with the normalised slack min_i sigma_i / C(n, i).

    For batched input both fields are arrays over the leading axes.
    """

    member: bool | np.ndarray
    margin: float | np.ndarray


SpectrumLike = Union[Spectrum, ArrayLike]


def _values(lam: SpectrumLike) -> np.ndarray:
    if isinstance(lam, Spectrum):
        return lam.values
    v = np.asarray(lam, dtype=float)
    if v.ndim == 0:
        raise ValueError("eigenvalues must have at least one axis")
    return v


def _out(x: np.ndarray):
    return float(x) if np.ndim(x) == 0 else x


def _check_degree(m: int, n: int) -> None:
    if m < 0 or m > n:
        raise InvalidDegreeError(f"degree {m} outside 0..{n}")


def sigma_all(lam: SpectrumLike, upto: int) -> np.ndarray:
    """Return sigma_0..sigma_upto stacked on a new last axis.

    Coefficients of prod_i (t + lam_i) are accumulated one factor at a time,
    O(n * upto) work per vector.
    """
    v = _values(lam)
    e = np.zeros(v.shape[:-1] + (upto + 1,))
    e[..., 0] = 1.0
    if upto == 0:
        return e
    for i in range(v.shape[-1]):
        e[..., 1:] = e[..., 1:] + v[..., i, None] * e[..., :-1]
    return e


def elementary_symmetric(lam: SpectrumLike, m: int, excluded=()) -> float | np.ndarray:
    """sigma_m of ``lam`` with the entries at ``excluded`` set to zero."""
    v = _values(lam)
    n = v.shape[-1]
    _check_degree(m, n)
    excluded = tuple(int(i) for i in excluded)
    if len(set(excluded)) != len(excluded):
        raise ValueError(f"repeated excluded index in {excluded}")
    for i in excluded:
        if not 0 <= i < n:
            raise IndexError(f"excluded index {i} outside 0..{n - 1}")
    if excluded:
        v = v.copy()
        v[..., list(excluded)] = 0.0
    return _out(sigma_all(v, m)[..., m])


def sigma_minors(lam: SpectrumLike, m: int) -> np.ndarray:
    """Array of sigma_m(lam | i) over i on the last axis; zero when m < 0."""
    v = _values(lam)
    n = v.shape[-1]
    if m < 0:
        return np.zeros(v.shape)
    if m > n:
        raise InvalidDegreeError(f"degree {m} outside 0..{n}")
    zeroed = v[..., None, :] * (1.0 - np.eye(n))
    return sigma_all(zeroed, m)[..., m]


def sigma_gradient(lam: SpectrumLike, m: int) -> np.ndarray:
    """Gradient of sigma_m: component i is sigma_{m-1}(lam | i)."""
    v = _values(lam)
    n = v.shape[-1]
    if m < 1 or m > n:
        raise InvalidDegreeError(f"degree {m} outside 1..{n}")
    return sigma_minors(v, m - 1)


def cone_margin_from_sigmas(sig: np.ndarray, n: int, k: int) -> np.ndarray:
    """Normalised slack from precomputed sigma_0..sigma_k (last axis)."""
    scale = np.array([comb(n, i) for i in range(1, k + 1)], dtype=float)
    return np.min(sig[..., 1 : k + 1] / scale, axis=-1)


def gamma_k_membership(lam: SpectrumLike, k: int) -> ConeMargin:
    """Membership of ``lam`` in the open cone Gamma_k (strict, no tolerance)."""
    v = _values(lam)
    n = v.shape[-1]
    if k < 1 or k > n:
        raise InvalidDegreeError(f"cone index {k} outside 1..{n}")
    margin = cone_margin_from_sigmas(sigma_all(v, k), n, k)
    member = margin > 0
    if np.ndim(margin) == 0:
        return ConeMargin(bool(member), float(margin))
    return ConeMargin(member, margin)


def _require_admissible(v: np.ndarray, k: int) -> None:
    cm = gamma_k_membership(v, k)
    if not np.all(cm.member):
        worst = float(np.min(cm.margin))
        raise NotAdmissibleError(f"eigenvalues not in Gamma_{k} (margin {worst:.3e})", worst)


def _pair(p: HessianPair, n: int) -> HessianPair:
    if p.n != n:
        raise ValueError(f"pair is for n={p.n}, eigenvalues have n={n}")
    return p


def quotient_unchecked(v: np.ndarray, k: int, l: int) -> np.ndarray:
    sig = sigma_all(v, k)
    return sig[..., k] / sig[..., l]


def quotient_gradient_unchecked(v: np.ndarray, k: int, l: int) -> np.ndarray:
    sig = sigma_all(v, k)
    sk = sig[..., k, None]
    sl = sig[..., l, None]
    top = sigma_minors(v, k - 1) * sl - sk * sigma_minors(v, l - 1)
    return top / sl**2


def hessian_quotient(lam: SpectrumLike, p: HessianPair) -> float | np.ndarray:
    """sigma_k(lam) / sigma_l(lam) for lam in Gamma_k."""
    v = _values(lam)
    _pair(p, v.shape[-1])
    _require_admissible(v, p.k)
    return _out(quotient_unchecked(v, p.k, p.l))


def hessian_quotient_gradient(lam: SpectrumLike, p: HessianPair) -> np.ndarray:
    """Gradient of sigma_k / sigma_l with respect to the eigenvalues.

    Component i is [sigma_{k-1}(lam|i) sigma_l - sigma_k sigma_{l-1}(lam|i)] / sigma_l^2.
    """
    v = _values(lam)
    _pair(p, v.shape[-1])
    _require_admissible(v, p.k)
    return quotient_gradient_unchecked(v, p.k, p.l)


def newton_maclaurin(lam: SpectrumLike, k: int, l: int, r: int, s: int):
    """Both sides of the generalised Newton-MacLaurin inequality.

    Returns ``(lhs, rhs)`` with lhs = [(sigma_k/C(n,k)) / (sigma_l/C(n,l))]^(1/(k-l))
    and rhs the same expression in (r, s); lhs <= rhs on Gamma_k.
    """
    v = _values(lam)
    n = v.shape[-1]
    if not (k > l >= 0 and r > s >= 0 and k >= r and l >= s and k <= n):
        raise ValueError(f"invalid index quadruple (k, l, r, s) = ({k}, {l}, {r}, {s})")
    _require_admissible(v, k)
    sig = sigma_all(v, k)

    def side(a, b):
        ratio = (sig[..., a] / comb(n, a)) / (sig[..., b] / comb(n, b))
        return ratio ** (1.0 / (a - b))

    return _out(side(k, l)), _out(side(r, s))
