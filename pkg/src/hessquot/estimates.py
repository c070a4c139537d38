"""A-priori bounds, solution audits and refinement/epsilon studies."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from math import comb
from typing import Callable

import numpy as np

from .geometry import Domain, tangential_projector
from .grid import Grid
from .solver import (
    BoundaryMode,
    SolveReport,
    SolverConfig,
    comparison_quadratic,
    nodal_state,
    solve_homotopy,
)
from .spectral import eigen_sym
from .symmetric import HessianPair, gamma_k_membership, quotient_unchecked

IDENTITY_TOL = 1e-8
# attainment checks compare maxima of nodal values; allow for rounding
ATTAIN_TOL = 1e-9
UNIFORMITY_FACTOR = 2.0


@dataclass(frozen=True)
class AprioriBounds:
    M0: float
    A: float
    diam: float
    max_abs_phi: float
    sup_f: float

    def to_dict(self) -> dict:
        return asdict(self)


def _as_pair(pair) -> HessianPair:
    return pair if isinstance(pair, HessianPair) else HessianPair(*pair)


def c0_bound(f, phi, dom: Domain, pair: HessianPair) -> AprioriBounds:
    """Sup-norm bound max(|phi|, |phi| + 2 A diam + A diam^2) from the comparison quadratic."""
    pair = _as_pair(pair)
    f = np.asarray(f, dtype=float)
    if f.size == 0 or not np.all(f > 0):
        raise ValueError("f must be positive")
    sup_f = float(np.max(f))
    a = 0.5 * (comb(pair.n, pair.l) / comb(pair.n, pair.k) * sup_f) ** (1.0 / (pair.k - pair.l))
    mphi = float(np.max(np.abs(phi)))
    d = dom.diameter
    m0 = max(mphi, mphi + 2 * a * d + a * d * d)
    return AprioriBounds(m0, a, d, mphi, sup_f)


def bounds_for(report: SolveReport, f, phi, pair: HessianPair) -> AprioriBounds:
    grid = report.solution.grid
    fv = np.broadcast_to(np.asarray(f, dtype=float), (grid.size,))
    pv = np.broadcast_to(np.asarray(phi, dtype=float), (grid.size,))
    return c0_bound(fv, pv[grid.boundary_nodes], grid.domain, pair)


@dataclass(frozen=True)
class AuditReport:
    c0_ok: bool
    admissible_everywhere: bool
    boundary_identity_ok: bool
    max_at_boundary_ok: bool
    comparison_ok: bool
    c0_margin: float
    admissibility_margin: float
    boundary_identity_margin: float
    max_at_boundary_margin: float
    comparison_margin: float

    @property
    def passed(self) -> bool:
        return all((self.c0_ok, self.admissible_everywhere, self.boundary_identity_ok, self.max_at_boundary_ok, self.comparison_ok))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def audit_solution(report: SolveReport, bounds: AprioriBounds, pair: HessianPair) -> AuditReport:
    """Check a Robin-problem solution against the sup bound and structural properties.

    Margins are oriented so that each flag holds exactly when its margin is >= 0.
    """
    pair = _as_pair(pair)
    u = report.solution
    grid = u.grid
    vals = u.values
    c = float(np.mean(vals[grid.index[0] == 0]))
    grad, hess = grid.jets(vals - c)
    lam = eigen_sym(hess).eigenvalues
    adm = float(np.min(gamma_k_membership(lam, pair.k).margin))

    bd = grid.boundary_nodes
    du = grad[bd]
    nu = grid.normals
    proj = tangential_projector(nu).entries
    tangential = np.einsum("nab,nb->na", proj, du)
    u_nu = np.sum(nu * du, axis=1)
    gap = np.abs(np.sum(du * du, axis=1) - np.sum(tangential**2, axis=1) - u_nu**2)
    scale = max(1.0, float(np.max(np.sum(du * du, axis=1))))
    ident = IDENTITY_TOL - float(np.max(gap)) / scale

    tol = ATTAIN_TOL * max(1.0, float(np.max(np.abs(vals))))
    max_margin = float(np.max(vals[bd]) - np.max(vals)) + tol
    _, quad = comparison_quadratic(grid, pair, bounds.sup_f)
    diff = vals - quad
    cmp_margin = float(np.min(diff) - np.min(diff[bd])) + tol

    c0 = bounds.M0 - float(np.max(np.abs(vals)))
    return AuditReport(c0 >= 0, adm > 0, ident >= 0, max_margin >= 0, cmp_margin >= 0, c0, adm, ident, max_margin, cmp_margin)


# --- epsilon uniformity --------------------------------------------------


def field_sups(report: SolveReport, eps: float) -> dict:
    grid = report.solution.grid
    offset = report.extra.get("offset", 0.0)
    w = report.solution.values - offset
    grad, hess = grid.jets(w)
    lam = eigen_sym(hess).eigenvalues
    return {
        "eps": eps,
        "sup_eps_u": float(np.max(np.abs(eps * (offset + w)))),
        "sup_grad": float(np.max(np.linalg.norm(grad, axis=1))),
        "sup_hess": float(np.max(np.abs(lam))),
        "c_eps": float(-eps * (offset + grid.mean(w))),
    }


def _spread(values) -> float:
    v = np.abs(np.asarray(values, dtype=float))
    return float(np.max(v) / np.min(v)) if np.min(v) > 0 else math.inf


def epsilon_uniformity_study(grid: Grid, f, phi, pair, ladder=None, config: SolverConfig | None = None) -> dict:
    """Sup norms of eps u, Du and D^2 u along the eps ladder.

    A column is uniform when its largest entry is within a factor 2 of its
    smallest (which also bounds it by twice the median).
    """
    config = config or SolverConfig()
    ladder = tuple(config.epsilon_ladder if ladder is None else ladder)
    rows = []
    for eps in ladder:
        rep = solve_homotopy(grid, f, phi, BoundaryMode.epsilon(eps), pair, config)
        rows.append(field_sups(rep, eps))
    spreads = {col: _spread([r[col] for r in rows]) for col in ("sup_eps_u", "sup_grad", "sup_hess")}
    uniform = {col: s < UNIFORMITY_FACTOR for col, s in spreads.items()}
    return {"rows": rows, "spread": spreads, "uniform": uniform, "passed": all(uniform.values())}


# --- manufactured solutions ----------------------------------------------


@dataclass(frozen=True)
class ManufacturedCase:
    """Exact solution u with its gradient and Hessian; data follow from them."""

    name: str
    domain: Domain
    k: int
    l: int
    u: Callable
    grad: Callable
    hess: Callable
    polynomial: bool
    base: int = 16
    levels: int = 3

    @property
    def pair(self) -> HessianPair:
        return HessianPair(self.k, self.l, self.domain.n)

    def data(self, grid: Grid):
        """(f, phi) as nodal arrays for the Robin problem solved by u."""
        x = grid.x
        f = quotient_unchecked(eigen_sym(self.hess(x)).eigenvalues, self.k, self.l)
        phi = np.sum(grid.normal_field * self.grad(x), axis=1) + self.u(x)
        return f, phi

    def grid(self, level: int) -> Grid:
        m = self.base * 2**level
        if self.domain.n == 2:
            return Grid(self.domain, m, 2 * m)
        return Grid(self.domain, m, m, 2 * m)


def _diag_quadratic(coef, bump: float):
    """u = sum_a coef_a x_a^2 / 2 + bump * exp(x_1)."""
    coef = np.asarray(coef, dtype=float)

    def u(x):
        return 0.5 * x**2 @ coef + bump * np.exp(x[:, 0])

    def grad(x):
        g = x * coef
        g[:, 0] += bump * np.exp(x[:, 0])
        return g

    def hess(x):
        h = np.zeros((len(x), coef.size, coef.size))
        h[:, np.arange(coef.size), np.arange(coef.size)] = coef
        h[:, 0, 0] += bump * np.exp(x[:, 0])
        return h

    return u, grad, hess


def _case(name, dom, k, l, coef, bump, base=16, levels=3):
    u, g, h = _diag_quadratic(coef, bump)
    return ManufacturedCase(name, dom, k, l, u, g, h, bump == 0.0, base, levels)


CATALOG = {
    c.name: c
    for c in (
        _case("ma_disk_quadratic", Domain.disk(), 2, 0, [1, 1], 0.0),
        _case("quotient_disk_quadratic", Domain.disk(), 2, 1, [1, 2], 0.0),
        _case("ma_disk_exp", Domain.disk(), 2, 0, [1, 1], 0.1),
        _case("quotient_disk_exp", Domain.disk(), 2, 1, [1, 2], 0.1),
        _case("quotient_ellipse_exp", Domain.ellipse(1.5, 1.0), 2, 1, [1, 2], 0.1),
        _case("laplace_superellipse_exp", Domain.superellipse(1.0, 0.8, 4), 1, 0, [1, 2], 0.1, base=32),
        _case("ball_quadratic", Domain.ball(), 3, 1, [1, 2, 1.5], 0.0, base=6, levels=2),
        _case("ball_quotient_exp", Domain.ball(), 3, 2, [1, 2, 1.5], 0.1, base=6, levels=2),
    )
}


def convergence_study(case_id: str, refinements: int | None = None, config: SolverConfig | None = None) -> dict:
    """Max-norm errors on successively halved grids and the observed orders.

    Orders use the actual ratio of radial spacings, log(e1/e2) / log(h1/h2).
    For polynomial (quadratic) cases the scheme is exact, errors sit at
    rounding level and the order column is None.
    """
    if case_id not in CATALOG:
        raise KeyError(f"unknown manufactured case {case_id!r}; known: {sorted(CATALOG)}")
    case = CATALOG[case_id]
    refinements = case.levels if refinements is None else refinements
    if refinements < 1:
        raise ValueError("refinements must be >= 1")
    rows = []
    for level in range(refinements):
        grid = case.grid(level)
        f, phi = case.data(grid)
        rep = solve_homotopy(grid, f, phi, BoundaryMode.robin(), case.pair, config)
        err = float(np.max(np.abs(rep.solution.values - case.u(grid.x))))
        row = {"shape": list(grid.shape), "h": grid.h, "error": err, "iterations": rep.total_iterations, "order": None}
        if rows and not case.polynomial:
            prev = rows[-1]
            row["order"] = math.log(prev["error"] / err) / math.log(prev["h"] / grid.h)
        rows.append(row)
    orders = [r["order"] for r in rows if r["order"] is not None]
    return {
        "case": case_id,
        "polynomial": case.polynomial,
        "rows": rows,
        "min_order": min(orders) if orders else None,
        "max_error": max(r["error"] for r in rows),
    }


def solution_table(report: SolveReport, f, phi, mode: BoundaryMode, pair: HessianPair) -> dict:
    """Per-node columns for the CSV dump: coordinates, u, |Du|, Hessian eigenvalues, residual."""
    grid = report.solution.grid
    st = nodal_state(report.solution, f, phi, mode, pair)
    return {
        "x": grid.x,
        "u": report.solution.values,
        "grad_norm": np.linalg.norm(st["grad"], axis=1),
        "eigenvalues": st["eigenvalues"],
        "residual": st["residual"],
        "boundary": grid.boundary,
    }
