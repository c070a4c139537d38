"""Seeded generation of eigenvalue vectors and matrices meeting cone and sign constraints.

Candidates are drawn from the box [-1, 3]^n and rejected against the
constraint predicates.  If rejection stalls, fresh candidates are pushed along
a direction that keeps every side constraint intact and points into Gamma_k,
using the smallest step on a geometric ladder that lands inside the cone.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InfeasibleSpecError, SamplingExhaustedError
from .spectral import eigen_sym
from .symmetric import HessianPair, cone_margin_from_sigmas, gamma_k_membership, sigma_all

BOX = (-1.0, 3.0)
BUDGET_PER_SAMPLE = 10**6
STALL_ROUNDS = 8
LADDER = 0.25 * 2.0 ** np.arange(40)


class Constraint(str, Enum):
    PLAIN = "plain_gamma_k"
    SORTED = "sorted_descending"
    NEGATIVE_ENTRY = "negative_entry"
    ARROWHEAD = "arrowhead_matrix"
    RATIO_BOUNDED = "ratio_bounded"


_CODES = {c: i for i, c in enumerate(Constraint)}


@dataclass(frozen=True)
class SampleSpec:
    n: int
    k: int
    l: int
    seed: int
    count: int
    constraint: Constraint = Constraint.PLAIN
    delta: float = 0.1
    eps: float = 0.1

    def __post_init__(self):
        HessianPair(self.k, self.l, self.n)
        object.__setattr__(self, "constraint", Constraint(self.constraint))
        if self.count < 0:
            raise ValueError("count must be non-negative")
        if self.constraint is Constraint.RATIO_BOUNDED:
            if not (0 < self.delta <= 1 and 0 < self.eps <= 1):
                raise ValueError("delta and eps must lie in (0, 1]")


def _check_feasible(spec: SampleSpec) -> None:
    c = spec.constraint
    if c in (Constraint.NEGATIVE_ENTRY, Constraint.ARROWHEAD, Constraint.RATIO_BOUNDED) and spec.k >= spec.n:
        raise InfeasibleSpecError(
            f"{c.value} needs a negative eigenvalue, impossible in Gamma_{spec.k} with n={spec.n}"
        )
    if c is Constraint.RATIO_BOUNDED and spec.k < 2:
        raise InfeasibleSpecError("ratio_bounded requires k >= 2")


def _arrowhead_sigmas(a: np.ndarray, k: int) -> np.ndarray:
    """sigma_0..sigma_k of lambda(A) for A with diagonal lower-right block.

    Sums of principal minors: sigma_m(A) = sigma_m(diag A) - sum_j a_1j^2 sigma_{m-2}(d | j),
    d being the lower-right diagonal.
    """
    diag = np.einsum("bii->bi", a)
    sig = sigma_all(diag, k)
    if k >= 2:
        b2 = a[:, 0, 1:] ** 2
        d = diag[:, 1:]
        m1 = d.shape[1]
        minors = sigma_all(d[:, None, :] * (1.0 - np.eye(m1)), k - 2)
        sig[:, 2:] -= np.einsum("bj,bjm->bm", b2, minors)
    return sig


def satisfies(spec: SampleSpec, samples: np.ndarray, exact: bool = True) -> np.ndarray:
    """Boolean mask: which samples meet every predicate of ``spec.constraint``.

    For arrowhead matrices ``exact`` selects cone membership through the Jacobi
    eigenvalues; otherwise principal-minor sums are used (same quantity,
    cheaper, used while rejecting).
    """
    s = np.asarray(samples, dtype=float)
    c = spec.constraint
    if c is Constraint.ARROWHEAD:
        n = spec.n
        block = s[:, 1:, 1:]
        off = block * (1.0 - np.eye(n - 1))
        ok = (s[:, 0, 0] < 0) & np.all(off == 0.0, axis=(1, 2))
        ok &= np.all(s == np.swapaxes(s, 1, 2), axis=(1, 2))
        if exact:
            member = gamma_k_membership(eigen_sym(s).eigenvalues, spec.k).member
        else:
            member = cone_margin_from_sigmas(_arrowhead_sigmas(s, spec.k), n, spec.k) > 0
        return ok & member
    ok = np.all(np.isfinite(s), axis=1) & gamma_k_membership(s, spec.k).member
    if c is Constraint.SORTED:
        ok &= np.all(np.diff(s, axis=1) <= 0, axis=1)
    elif c is Constraint.NEGATIVE_ENTRY:
        ok &= s[:, 0] < 0
    elif c is Constraint.RATIO_BOUNDED:
        ok &= np.all(np.diff(s[:, 1:], axis=1) <= 0, axis=1)
        ok &= (s[:, 0] > 0) & (s[:, -1] < 0)
        ok &= s[:, 0] >= spec.delta * s[:, 1]
        ok &= -s[:, -1] >= spec.eps * s[:, 0]
    return ok


def _draw(spec: SampleSpec, rng: np.random.Generator, m: int) -> np.ndarray:
    n = spec.n
    lo, hi = BOX
    c = spec.constraint
    if c is Constraint.ARROWHEAD:
        a = np.zeros((m, n, n))
        a[:, 0, 0] = -rng.uniform(0.0, 1.0, m) - 1e-12
        idx = np.arange(1, n)
        a[:, idx, idx] = rng.uniform(lo, hi, (m, n - 1))
        b = rng.uniform(-1.0, 1.0, (m, n - 1))
        a[:, 0, 1:] = b
        a[:, 1:, 0] = b
        return a
    if c is Constraint.RATIO_BOUNDED:
        tail = -np.sort(-rng.uniform(lo, hi, (m, n - 1)), axis=1)
        nonneg = tail[:, -1] >= 0
        tail[nonneg, -1] = -rng.uniform(0.0, 1.0, int(nonneg.sum())) - 1e-12
        first_lo = np.maximum(spec.delta * tail[:, 0], 0.0)
        first_hi = -tail[:, -1] / spec.eps
        first = first_lo + rng.uniform(0.0, 1.0, m) * (first_hi - first_lo)
        return np.column_stack([first, tail])
    lam = rng.uniform(lo, hi, (m, n))
    if c is Constraint.NEGATIVE_ENTRY:
        lam[:, 0] = -rng.uniform(0.0, 1.0, m) - 1e-12
    elif c is Constraint.SORTED:
        lam = -np.sort(-lam, axis=1)
    return lam


def _direction(spec: SampleSpec) -> np.ndarray:
    """Shift direction preserving the side constraints of ``spec``."""
    n = spec.n
    c = spec.constraint
    if c is Constraint.ARROWHEAD:
        return np.diag(np.r_[0.0, np.ones(n - 1)])
    if c is Constraint.NEGATIVE_ENTRY:
        return np.r_[0.0, np.ones(n - 1)]
    if c is Constraint.RATIO_BOUNDED:
        # lam_1..lam_{n-1} up by t, lam_n down by eps*t: both ratio bounds survive
        return np.r_[np.ones(n - 1), -spec.eps]
    return np.ones(n)


def _ladder(spec: SampleSpec, cand: np.ndarray) -> np.ndarray:
    d = _direction(spec)
    out = cand.copy()
    done = np.zeros(len(cand), dtype=bool)
    for t in LADDER:
        trial = cand + t * d
        ok = ~done & satisfies(spec, trial, exact=False)
        out[ok] = trial[ok]
        done |= ok
        if done.all():
            break
    return out[done]


def sample(spec: SampleSpec) -> np.ndarray:
    """Draw ``spec.count`` samples, shape ``(count, n)`` or ``(count, n, n)``.

    Output depends only on ``spec``; every returned sample has been checked
    against :func:`satisfies`.
    """
    _check_feasible(spec)
    ss = np.random.SeedSequence([spec.seed & (2**64 - 1), spec.n, spec.k, spec.l, _CODES[spec.constraint]])
    rng = np.random.default_rng(ss)
    shape = (spec.n, spec.n) if spec.constraint is Constraint.ARROWHEAD else (spec.n,)
    out = np.empty((spec.count,) + shape)
    filled = 0
    attempts = 0
    rounds = 0
    while filled < spec.count:
        need = spec.count - filled
        m = max(4 * need, 256)
        cand = _draw(spec, rng, m)
        attempts += m
        if rounds >= STALL_ROUNDS:
            good = _ladder(spec, cand)
        else:
            good = cand[satisfies(spec, cand, exact=False)]
        if spec.constraint is Constraint.ARROWHEAD:
            good = good[:need]
            good = good[satisfies(spec, good)]
        take = min(need, len(good))
        out[filled : filled + take] = good[:take]
        filled += take
        rounds += 1
        if attempts > BUDGET_PER_SAMPLE * max(spec.count, 1):
            raise SamplingExhaustedError(
                f"{spec.constraint.value}: {filled}/{spec.count} samples after {attempts} attempts"
            )
    if spec.count and not satisfies(spec, out).all():
        raise AssertionError("sampler produced a sample violating its constraint")
    return out
