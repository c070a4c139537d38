"""Randomised verification of the symmetric-function identities and inequalities.

Each ``check_*`` draws seeded samples, evaluates both sides of every
inequality in its group, and records an oriented margin normalised by
``max(|lhs|, |rhs|, 1)``; negative means violated.  Nothing is raised on a
violation: offending inputs are stored on the returned report.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from math import comb
from typing import Callable

import numpy as np

from .sampler import Constraint, SampleSpec, sample
from .spectral import derivative_from_decomposition, eigen_sym
from .symmetric import quotient_gradient_unchecked, sigma_all, sigma_minors

IDENTITY_TOL = 1e-10
INEQUALITY_TOL = 1e-9
MAX_STORED_FAILURES = 50


@dataclass
class CheckReport:
    name: str
    samples: int
    worst_margin: float
    tolerance: float
    failures: list = field(default_factory=list)
    failure_count: int = 0
    params: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.failure_count == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


@dataclass(frozen=True)
class StructureConstants:
    """Dominance constants for given (n, k, l, delta, eps).

    ``c0``/``c1`` need n >= 3 and are None otherwise.  ``c2`` bounds
    F^{11} from below by a fraction of the trace sum F^{jj}.
    """

    c0: float | None
    c1: float | None
    c2: float
    c3: float


def structure_constants(n: int, k: int, l: int, delta: float = 0.1, eps: float = 0.1) -> StructureConstants:
    c2 = n * (k - l) / (k * (n - l) * (n - k + 1))
    c3 = (k - l) / k / comb(n, l)
    if n >= 3:
        c0 = min(eps**2 * delta**2 / (2 * (n - 2) * (n - 1)), eps**2 * delta / (4 * (n - 1)))
        c1 = (n / k) * ((k - l) / (n - l)) * c0**2 / (n - k + 1)
    else:
        c0 = c1 = None
    return StructureConstants(c0, c1, c2, c3)


def _ge(lhs, rhs):
    """Oriented, normalised margin for lhs >= rhs."""
    lhs = np.asarray(lhs, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    scale = np.maximum(np.maximum(np.abs(lhs), np.abs(rhs)), 1.0)
    return (lhs - rhs) / scale


def _eq(lhs, rhs):
    return -np.abs(_ge(lhs, rhs))


def _report(name, inputs, margins: dict, tol, params) -> CheckReport:
    """Fold per-sample margins (label -> array (N,) or (N, m)) into a report."""
    n_samples = len(inputs)
    worst = np.full(n_samples, np.inf)
    which = np.empty(n_samples, dtype=object)
    for label, m in margins.items():
        m = np.asarray(m, dtype=float).reshape(n_samples, -1)
        mm = m.min(axis=1)
        better = mm < worst
        worst = np.where(better, mm, worst)
        which[better] = label
    bad = np.flatnonzero(worst < -tol)
    failures = [
        {"index": int(i), "check": which[i], "margin": float(worst[i]), "input": np.asarray(inputs[i]).tolist()}
        for i in bad[:MAX_STORED_FAILURES]
    ]
    return CheckReport(
        name=name,
        samples=n_samples,
        worst_margin=float(worst.min()) if n_samples else float("inf"),
        tolerance=tol,
        failures=failures,
        failure_count=int(bad.size),
        params=params,
    )


def _box(n: int, count: int, seed: int, tag: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence([seed & (2**64 - 1), n, tag]))
    return rng.uniform(-1.0, 3.0, (count, n))


def check_sigma_identities(n: int, k: int, samples: int, seed: int) -> CheckReport:
    """Minor expansion, Euler relation and minor-sum identity on arbitrary vectors."""
    lam = _box(n, samples, seed, 1000 + k)
    sig = sigma_all(lam, k)[:, k]
    mk = sigma_minors(lam, k)
    mk1 = sigma_minors(lam, k - 1)
    margins = {
        "expansion": _eq(sig[:, None], mk + lam * mk1),
        "euler": _eq(np.sum(lam * mk1, axis=1), k * sig),
        "minor_sum": _eq(np.sum(mk, axis=1), (n - k) * sig),
    }
    return _report("sigma_identities", lam, margins, IDENTITY_TOL, {"n": n, "k": k})


def check_diagonal_derivative(n: int, k: int, samples: int, seed: int) -> CheckReport:
    """Matrix derivative of sigma_k at diagonal W against the minor formula."""
    lam = sample(SampleSpec(n, k, 0, seed, samples, Constraint.PLAIN))
    w = np.zeros((samples, n, n))
    idx = np.arange(n)
    w[:, idx, idx] = lam
    d = derivative_from_decomposition(eigen_sym(w), k, 0)
    diag = np.einsum("bii->bi", d)
    off = d * (1.0 - np.eye(n))
    margins = {
        "diagonal": _eq(diag, sigma_minors(lam, k - 1)),
        "off_diagonal": _eq(off.reshape(samples, -1), 0.0),
    }
    return _report("diagonal_derivative", lam, margins, IDENTITY_TOL, {"n": n, "k": k})


def check_sorted_cone_bounds(n: int, k: int, samples: int, seed: int) -> CheckReport:
    """Minor chain, positivity/product bound and lambda_1 bound for sorted lam in Gamma_k."""
    lam = sample(SampleSpec(n, k, 0, seed, samples, Constraint.SORTED))
    sig = sigma_all(lam, k)[:, k]
    minors = sigma_minors(lam, k - 1)
    margins = {
        "minor_chain": _ge(minors[:, 1:], minors[:, :-1]),
        "minor_positive": _ge(minors[:, 0], 0.0),
        "lambda_k_positive": _ge(lam[:, k - 1], 0.0),
        "product_bound": _ge(comb(n, k) * np.prod(lam[:, :k], axis=1), sig),
        "lambda1_bound": _ge(lam[:, 0] * minors[:, 0], k / n * sig),
    }
    return _report("sorted_cone_bounds", lam, margins, INEQUALITY_TOL, {"n": n, "k": k})


def maclaurin_quadruples(k: int, l: int):
    return [(r, s) for r in range(1, k + 1) for s in range(0, min(l, r - 1) + 1)]


def check_newton_maclaurin_bounds(n: int, k: int, l: int, samples: int, seed: int) -> CheckReport:
    """Generalised Newton-MacLaurin over every admissible (r, s) for this (k, l)."""
    lam = sample(SampleSpec(n, k, l, seed, samples, Constraint.PLAIN))
    sig = sigma_all(lam, k)

    def side(a, b):
        return ((sig[:, a] / comb(n, a)) / (sig[:, b] / comb(n, b))) ** (1.0 / (a - b))

    lhs = side(k, l)
    margins = {f"r={r},s={s}": _ge(side(r, s), lhs) for r, s in maclaurin_quadruples(k, l)}
    return _report("newton_maclaurin_bounds", lam, margins, INEQUALITY_TOL, {"n": n, "k": k, "l": l})


def check_negative_entry(n: int, k: int, l: int, samples: int, seed: int) -> CheckReport:
    """Dropping a negative entry raises sigma_m; the quotient's derivative in it dominates."""
    lam = sample(SampleSpec(n, k, l, seed, samples, Constraint.NEGATIVE_ENTRY))
    sig = sigma_all(lam, k)
    minor1 = sigma_all(np.where(np.arange(n) == 0, 0.0, lam), k)
    grad = quotient_gradient_unchecked(lam, k, l)
    c2 = structure_constants(n, k, l).c2
    margins = {
        "sigma_minor_ge": _ge(minor1, sig),
        "derivative_dominance": _ge(grad[:, 0], c2 * grad.sum(axis=1)),
    }
    return _report("negative_entry", lam, margins, INEQUALITY_TOL, {"n": n, "k": k, "l": l})


def check_arrowhead(n: int, k: int, l: int, samples: int, seed: int) -> CheckReport:
    """Derivative bounds for matrices with a_11 < 0 and diagonal lower-right block."""
    a = sample(SampleSpec(n, k, l, seed, samples, Constraint.ARROWHEAD))
    d = derivative_from_decomposition(eigen_sym(a), k, l)
    diag = np.einsum("bii->bi", d)
    total = diag.sum(axis=1)
    const = structure_constants(n, k, l)
    margins = {
        "a11_dominance": _ge(diag[:, 0], const.c2 * total),
        "trace_lower_bound": _ge(total, const.c3 * (-a[:, 0, 0]) ** (k - l - 1)),
    }
    return _report("arrowhead", a, margins, INEQUALITY_TOL, {"n": n, "k": k, "l": l})


def check_ratio_bounded(n: int, k: int, l: int, delta: float, eps: float, samples: int, seed: int) -> CheckReport:
    """Uniform minor bound and derivative dominance under the two ratio hypotheses."""
    spec = SampleSpec(n, k, l, seed, samples, Constraint.RATIO_BOUNDED, delta=delta, eps=eps)
    lam = sample(spec)
    sig = sigma_all(lam, k - 1)
    minor1 = sigma_all(np.where(np.arange(n) == 0, 0.0, lam), k - 1)
    grad = quotient_gradient_unchecked(lam, k, l)
    const = structure_constants(n, k, l, delta, eps)
    margins = {
        "sigma_minor_ratio": _ge(minor1, const.c0 * sig),
        "derivative_dominance": _ge(grad[:, 0], const.c1 * grad.sum(axis=1)),
    }
    params = {"n": n, "k": k, "l": l, "delta": delta, "eps": eps}
    return _report("ratio_bounded", lam, margins, INEQUALITY_TOL, params)


def configurations(ns):
    return [(n, k, l) for n in ns for k in range(1, n + 1) for l in range(k)]


def config_checks(n, k, l, samples, seed, delta=0.1, eps=0.1) -> list[Callable[[], CheckReport]]:
    """Checks applicable to (n, k, l); checks needing a negative entry skip k = n."""
    jobs = [
        lambda: check_sigma_identities(n, k, samples, seed),
        lambda: check_diagonal_derivative(n, k, samples, seed),
        lambda: check_sorted_cone_bounds(n, k, samples, seed),
        lambda: check_newton_maclaurin_bounds(n, k, l, samples, seed),
    ]
    if k < n:
        jobs.append(lambda: check_negative_entry(n, k, l, samples, seed))
        jobs.append(lambda: check_arrowhead(n, k, l, samples, seed))
        if k >= 2 and n >= 3:
            jobs.append(lambda: check_ratio_bounded(n, k, l, delta, eps, samples, seed))
    return jobs


def run_suite(ns=(3, 4, 5, 6), samples=10_000, seed=7, threads=1, delta=0.1, eps=0.1) -> list[CheckReport]:
    """Run every applicable check over the (n, k, l) matrix; order is deterministic."""
    jobs = []
    for n, k, l in configurations(ns):
        jobs.extend(config_checks(n, k, l, samples, seed, delta, eps))
    if threads <= 1:
        return [job() for job in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: job(), jobs))
