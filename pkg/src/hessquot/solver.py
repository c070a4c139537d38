"""Damped Newton, homotopy continuation and the vanishing-epsilon sweep.

Interior nodes carry ``F(D^2 u) - f`` with ``F = sigma_k / sigma_l`` of the
Hessian eigenvalues; boundary nodes carry ``u_nu + beta u - phi`` where
``beta`` is 1 for the Robin problem and ``eps`` for the regularised one.

Internally a solution is held as ``C + w`` with a scalar offset ``C`` and a
field ``w`` whose mean over the innermost ring is zero.  Difference weights
near the pole are large (they scale like 1 / (h^2 dtheta^2)), so keeping the
nodal values there small protects the Hessian from cancellation when ``u`` is
dominated by a large constant, as it is for small ``eps``.  The Newton system
is solved for ``(dC, dw)`` together with that normalisation row.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from math import comb

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ContinuationError, LineSearchError, NotAdmissibleError, SolverError
from .geometry import ConvexityClass, convexity_class
from .grid import Grid
from .spectral import SymMatrix, derivative_from_decomposition, eigen_sym
from .symmetric import HessianPair, gamma_k_membership, quotient_unchecked

# refinement aims for tol; on fine grids rounding in the matvec floors it
# near 1e-12, and an inexact direction is still a descent direction
LINEAR_ACCEPT = 1e-8
MAX_REFINEMENTS = 8


@dataclass(frozen=True)
class BoundaryMode:
    """``robin``: u_nu = -u + phi.  ``epsilon``: u_nu = -eps u + phi."""

    kind: str = "robin"
    eps: float = 1.0

    def __post_init__(self):
        if self.kind not in ("robin", "epsilon"):
            raise ValueError(f"unknown boundary mode {self.kind!r}")
        if self.kind == "robin" and self.eps != 1.0:
            raise ValueError("robin mode has eps = 1")
        if not self.eps > 0:
            raise ValueError("eps must be positive")

    @classmethod
    def robin(cls) -> BoundaryMode:
        return cls("robin", 1.0)

    @classmethod
    def epsilon(cls, eps: float) -> BoundaryMode:
        return cls("epsilon", float(eps))

    @property
    def beta(self) -> float:
        return self.eps


@dataclass(frozen=True)
class SolverConfig:
    newton_tolerance: float = 1e-10
    max_newton_iterations: int = 50
    backtrack_factor: float = 0.5
    min_step: float = 2.0**-20
    initial_dt: float = 0.1
    dt_growth: float = 1.5
    dt_floor: float = 1e-4
    fast_iterations: int = 3
    linear_tolerance: float = 1e-12
    epsilon_ladder: tuple = (1e-1, 3e-2, 1e-2, 3e-3, 1e-3)

    def __post_init__(self):
        object.__setattr__(self, "epsilon_ladder", tuple(float(e) for e in self.epsilon_ladder))
        for name in ("newton_tolerance", "min_step", "initial_dt", "dt_floor", "linear_tolerance"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_newton_iterations < 1:
            raise ValueError("max_newton_iterations must be at least 1")
        if not 0 < self.backtrack_factor < 1:
            raise ValueError("backtrack_factor must lie in (0, 1)")
        if self.dt_growth < 1:
            raise ValueError("dt_growth must be at least 1")
        lad = self.epsilon_ladder
        if not lad or any(e <= 0 for e in lad) or any(b >= a for a, b in zip(lad, lad[1:])):
            raise ValueError("epsilon ladder must be non-empty, positive and strictly decreasing")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["epsilon_ladder"] = list(self.epsilon_ladder)
        return d

    @classmethod
    def from_dict(cls, d: dict | None) -> SolverConfig:
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown solver settings: {sorted(unknown)}")
        return cls(**d)


@dataclass
class DiscreteField:
    """One value per grid node."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.grid.size,):
            raise ValueError(f"expected {self.grid.size} nodal values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        self.values = v

    @classmethod
    def from_function(cls, grid: Grid, fn) -> DiscreteField:
        return cls(np.broadcast_to(np.asarray(fn(grid.x), dtype=float), (grid.size,)).copy(), grid)


@dataclass
class SolveReport:
    converged: bool
    iterations: list
    final_residual: float
    margin_history: list
    solution: DiscreteField
    c_estimate: float | None = None
    t_reached: float = 1.0
    message: str = ""
    extra: dict = field(default_factory=dict)

    @property
    def total_iterations(self) -> int:
        return int(sum(self.iterations))

    def to_dict(self) -> dict:
        return {
            "converged": self.converged,
            "iterations": list(self.iterations),
            "total_iterations": self.total_iterations,
            "final_residual": self.final_residual,
            "min_margin": min(self.margin_history) if self.margin_history else None,
            "margin_history": list(self.margin_history),
            "c_estimate": self.c_estimate,
            "t_reached": self.t_reached,
            "message": self.message,
            "grid": self.solution.grid.describe(),
            **self.extra,
        }


def _nodal(grid: Grid, data) -> np.ndarray:
    if isinstance(data, DiscreteField):
        return data.values
    if callable(data):
        return DiscreteField.from_function(grid, data).values
    return DiscreteField(np.broadcast_to(np.asarray(data, dtype=float), (grid.size,)), grid).values


def _pair(grid: Grid, pair) -> HessianPair:
    if not isinstance(pair, HessianPair):
        pair = HessianPair(*pair) if len(pair) == 3 else HessianPair(pair[0], pair[1], grid.n)
    if pair.n != grid.n:
        raise ValueError(f"pair is for n={pair.n}, grid has n={grid.n}")
    return pair


class _Discretisation:
    """Residual, Jacobian and linear solves for fixed data on one grid."""

    def __init__(self, grid: Grid, pair: HessianPair, f, phi, mode: BoundaryMode):
        self.grid = grid
        self.pair = pair
        self.f = _nodal(grid, f)
        self.phi = _nodal(grid, phi)
        self.beta = mode.beta
        self.ring = np.flatnonzero(grid.index[0] == 0)
        self.pair_weights = np.array([1.0 if a == b else 2.0 for a, b in grid._pairs])

    def split(self, u: np.ndarray):
        c = float(np.mean(u[self.ring]))
        return c, u - c

    def evaluate(self, c: float, w: np.ndarray) -> dict:
        g = self.grid
        grad, hess = g.jets(w)
        dec = eigen_sym(hess)
        margin = gamma_k_membership(dec.eigenvalues, self.pair.k).margin
        res = np.empty(g.size)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = quotient_unchecked(dec.eigenvalues, self.pair.k, self.pair.l)
        it, bd = g.interior_nodes, g.boundary_nodes
        res[it] = val[it] - self.f[it]
        res[bd] = np.sum(g.normals * grad[bd], axis=1) + self.beta * (c + w[bd]) - self.phi[bd]
        return {"grad": grad, "hess": hess, "dec": dec, "margin": margin, "res": res}

    @staticmethod
    def admissible(state) -> bool:
        return bool(np.all(state["margin"] > 0))

    def _row_coefficients(self, state):
        """Per stencil group: coefficients multiplying (dw_s - dw_node)."""
        g = self.grid
        fij = derivative_from_decomposition(state["dec"], self.pair.k, self.pair.l)
        coeffs = []
        for st, is_boundary in zip(g.stencils, (False, True)):
            if is_boundary:
                nu = g.normals
                cf = np.einsum("na,nas->ns", nu, st.weights[:, : g.n])
            else:
                fp = np.stack([fij[st.nodes, a, b] for a, b in g._pairs], axis=1) * self.pair_weights
                cf = np.einsum("nq,nqs->ns", fp, st.weights[:, g.n :])
            coeffs.append(cf)
        return coeffs

    def assemble(self, coeffs):
        g = self.grid
        N = g.size
        rows, cols, vals = [], [], []
        for st, cf in zip(g.stencils, coeffs):
            r = np.repeat(st.nodes, st.nbrs.shape[1])
            rows += [r, st.nodes]
            cols += [st.nbrs.ravel(), st.nodes]
            vals += [cf.ravel(), -cf.sum(axis=1)]
        bd = g.boundary_nodes
        rows += [bd, bd, np.full(len(self.ring), N)]
        cols += [bd, np.full(len(bd), N), self.ring]
        vals += [np.full(len(bd), self.beta), np.full(len(bd), self.beta), np.full(len(self.ring), 1.0 / len(self.ring))]
        return sp.csc_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N + 1, N + 1)
        )

    def apply(self, coeffs, z: np.ndarray) -> np.ndarray:
        """Jacobian times z = (dw, dC), summing differences so large weights cancel exactly."""
        g = self.grid
        N = g.size
        dw, dc = z[:N], z[N]
        out = np.empty(N + 1)
        for st, cf in zip(g.stencils, coeffs):
            out[st.nodes] = np.sum(cf * (dw[st.nbrs] - dw[st.nodes][:, None]), axis=1)
        bd = g.boundary_nodes
        out[bd] += self.beta * (dw[bd] + dc)
        out[N] = np.mean(dw[self.ring])
        return out

    def newton_direction(self, state, tol: float) -> np.ndarray:
        coeffs = self._row_coefficients(state)
        mat = self.assemble(coeffs)
        rhs = np.append(-state["res"], 0.0)
        try:
            lu = spla.splu(mat)
        except RuntimeError as exc:
            raise SolverError(f"singular Newton matrix: {exc}") from exc
        z = lu.solve(rhs)
        scale = np.linalg.norm(rhs)
        for _ in range(MAX_REFINEMENTS):
            r = rhs - self.apply(coeffs, z)
            if np.linalg.norm(r) <= tol * scale:
                break
            z = z + lu.solve(r)
        else:
            r = rhs - self.apply(coeffs, z)
            if np.linalg.norm(r) > LINEAR_ACCEPT * scale:
                raise SolverError(f"linear solve stalled at relative residual {np.linalg.norm(r) / scale:.2e}")
        return z


def _not_admissible(state, grid: Grid) -> NotAdmissibleError:
    node = int(np.argmin(state["margin"]))
    m = float(state["margin"][node])
    return NotAdmissibleError(
        f"Hessian leaves the admissible cone at node {node} {grid.x[node].tolist()} (margin {m:.3e})",
        m,
        node,
        residual=state["res"],
    )


def discrete_hessian(u: DiscreteField, node: int | None = None):
    """Cartesian D^2 u at one node (as a SymMatrix) or at all nodes (array (N, n, n))."""
    grid = u.grid
    c = float(np.mean(u.values[grid.index[0] == 0]))
    hess = grid.hessian(u.values - c)
    if node is None:
        return hess
    return SymMatrix(hess[node])


def nodal_state(u: DiscreteField, f, phi, mode: BoundaryMode, pair) -> dict:
    """Gradient, Hessian, eigenvalues, cone margin and residual at every node, unchecked."""
    grid = u.grid
    disc = _Discretisation(grid, _pair(grid, pair), f, phi, mode)
    state = disc.evaluate(*disc.split(u.values))
    return {
        "grad": state["grad"],
        "hess": state["hess"],
        "eigenvalues": state["dec"].eigenvalues,
        "margin": state["margin"],
        "residual": state["res"],
    }


def residual(u: DiscreteField, f, phi, mode: BoundaryMode, pair) -> DiscreteField:
    """Nodal residual; raises NotAdmissibleError (with the raw residual attached) off the cone."""
    grid = u.grid
    disc = _Discretisation(grid, _pair(grid, pair), f, phi, mode)
    c, w = disc.split(u.values)
    state = disc.evaluate(c, w)
    if not disc.admissible(state):
        raise _not_admissible(state, grid)
    return DiscreteField(state["res"], grid)


def _newton(disc: _Discretisation, c: float, w: np.ndarray, config: SolverConfig):
    """Returns (c, w, iterations, residual, margins, converged)."""
    state = disc.evaluate(c, w)
    if not disc.admissible(state):
        raise _not_admissible(state, disc.grid)
    rnorm = float(np.max(np.abs(state["res"])))
    margins = [float(np.min(state["margin"]))]
    its = 0
    while rnorm > config.newton_tolerance:
        if its >= config.max_newton_iterations:
            return c, w, its, rnorm, margins, False
        z = disc.newton_direction(state, config.linear_tolerance)
        dw, dc = z[:-1], z[-1]
        step = 1.0
        while True:
            w_try = w + step * dw
            c_try = c + step * dc
            trial = disc.evaluate(c_try, w_try)
            if disc.admissible(trial):
                r_try = float(np.max(np.abs(trial["res"])))
                if r_try < rnorm:
                    break
            step *= config.backtrack_factor
            if step < config.min_step:
                raise LineSearchError(f"Newton step fell below {config.min_step:g} at residual {rnorm:.3e}")
        shift = float(np.mean(w_try[disc.ring]))
        c, w = c_try + shift, w_try - shift
        state = trial if shift == 0.0 else disc.evaluate(c, w)
        rnorm = float(np.max(np.abs(state["res"])))
        margins.append(float(np.min(state["margin"])))
        its += 1
    return c, w, its, rnorm, margins, True


def newton_solve(u0: DiscreteField, f, phi, mode: BoundaryMode, pair, config: SolverConfig | None = None) -> SolveReport:
    """Damped Newton from an admissible ``u0``.  Non-convergence is reported, not raised."""
    config = config or SolverConfig()
    grid = u0.grid
    disc = _Discretisation(grid, _pair(grid, pair), f, phi, mode)
    c, w = disc.split(u0.values)
    c, w, its, rnorm, margins, ok = _newton(disc, c, w, config)
    msg = "" if ok else f"no convergence in {its} iterations"
    return SolveReport(ok, [its], rnorm, margins, DiscreteField(c + w, grid), message=msg, extra={"offset": c})


def comparison_quadratic(grid: Grid, pair, sup_f: float, center=None):
    """A and the nodal values of A |x - center|^2, whose operator value is sup_f."""
    p = _pair(grid, pair)
    a = 0.5 * (comb(p.n, p.l) / comb(p.n, p.k) * sup_f) ** (1.0 / (p.k - p.l))
    x1 = np.zeros(grid.n) if center is None else np.asarray(center, dtype=float)
    return a, a * np.sum((grid.x - x1) ** 2, axis=1)


def homotopy_start(grid: Grid, f, mode: BoundaryMode, pair, center=None):
    """Starting quadratic u0 with the data (f0, phi0) it solves exactly on this grid."""
    p = _pair(grid, pair)
    fv = _nodal(grid, f)
    _, u0 = comparison_quadratic(grid, p, float(np.max(fv)), center)
    disc = _Discretisation(grid, p, np.zeros(grid.size), np.zeros(grid.size), mode)
    c, w = disc.split(u0)
    grad, hess = grid.jets(w)
    f0 = quotient_unchecked(eigen_sym(hess).eigenvalues, p.k, p.l)
    phi0 = np.zeros(grid.size)
    bd = grid.boundary_nodes
    phi0[bd] = np.sum(grid.normals * grad[bd], axis=1) + mode.beta * u0[bd]
    return u0, f0, phi0


def solve_homotopy(grid: Grid, f, phi, mode: BoundaryMode, pair, config: SolverConfig | None = None, center=None) -> SolveReport:
    """Continuation from the comparison quadratic to the target data.

    Data move linearly in t; the step grows by ``dt_growth`` after quick
    Newton solves and halves on failure.
    """
    config = config or SolverConfig()
    p = _pair(grid, pair)
    fv, phiv = _nodal(grid, f), _nodal(grid, phi)
    if not np.all(fv > 0):
        raise ValueError("right-hand side f must be positive")
    u0, f0, phi0 = homotopy_start(grid, fv, mode, p, center)
    disc = _Discretisation(grid, p, f0, phi0, mode)
    c, w = disc.split(u0)
    t, dt = 0.0, config.initial_dt
    iterations, margins, ts = [], [], []
    rnorm = 0.0
    while t < 1.0:
        t_new = min(1.0, t + dt)
        disc.f = (1 - t_new) * f0 + t_new * fv
        disc.phi = (1 - t_new) * phi0 + t_new * phiv
        try:
            c_new, w_new, its, r_new, m_new, ok = _newton(disc, c, w, config)
        except (SolverError, NotAdmissibleError):
            ok = False
        if ok:
            c, w, t, rnorm = c_new, w_new, t_new, r_new
            iterations.append(its)
            margins.extend(m_new)
            ts.append(t)
            if its <= config.fast_iterations:
                dt *= config.dt_growth
            continue
        dt *= 0.5
        if dt < config.dt_floor:
            partial = SolveReport(False, iterations, rnorm, margins, DiscreteField(c + w, grid), t_reached=t)
            raise ContinuationError(f"homotopy step fell below {config.dt_floor:g} at t = {t:.6g}", t, partial)
    extra = {"offset": c, "t_steps": ts, "mode": mode.kind, "eps": mode.eps, "k": p.k, "l": p.l}
    return SolveReport(True, iterations, rnorm, margins, DiscreteField(c + w, grid), extra=extra)


def richardson_constant(eps, c_eps) -> float:
    """Linear extrapolation to eps = 0 through the two smallest eps."""
    if len(eps) == 1:
        return float(c_eps[0])
    e1, e2 = eps[-2], eps[-1]
    c1, c2 = c_eps[-2], c_eps[-1]
    return float((e1 * c2 - e2 * c1) / (e1 - e2))


def solve_classical_neumann(grid: Grid, f, phi, pair, config: SolverConfig | None = None) -> SolveReport:
    """Sweep the eps ladder and extrapolate c_eps = -eps * mean(u^eps) to eps = 0.

    The returned solution is u^eps - mean(u^eps) at the smallest eps.
    """
    config = config or SolverConfig()
    p = _pair(grid, pair)
    if convexity_class(grid.domain, grid.n) is not ConvexityClass.STRICT:
        raise ValueError("the vanishing-eps procedure needs a strictly convex domain")
    c_eps, reports = [], []
    for eps in config.epsilon_ladder:
        rep = solve_homotopy(grid, f, phi, BoundaryMode.epsilon(eps), p, config)
        offset = rep.extra["offset"]
        mean = offset + grid.mean(rep.solution.values - offset)
        c_eps.append(-eps * mean)
        reports.append(rep)
    c = richardson_constant(config.epsilon_ladder, c_eps)
    last = reports[-1]
    offset = last.extra["offset"]
    w = last.solution.values - offset
    v = w - grid.mean(w)
    extra = dict(last.extra)
    extra.update(
        epsilons=list(config.epsilon_ladder),
        c_by_epsilon=[float(x) for x in c_eps],
        steps_by_epsilon=[r.iterations for r in reports],
        mean_at_smallest=float(offset + grid.mean(w)),
    )
    return SolveReport(
        converged=all(r.converged for r in reports),
        iterations=[i for r in reports for i in r.iterations],
        final_residual=max(r.final_residual for r in reports),
        margin_history=[m for r in reports for m in r.margin_history],
        solution=DiscreteField(v, grid),
        c_estimate=c,
        extra=extra,
    )
