"""JSON run configuration: schema, validation and round-trip serialisation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from .errors import ConfigError, ExpressionSyntaxError
from .expr import CompiledExpression, max_variable
from .geometry import ConvexityClass, Domain, convexity_class
from .grid import Grid
from .solver import SolverConfig

MODES = ("robin", "classical")
DEFAULT_GRID_2D = {"nr": 64, "nt": 128}
DEFAULT_GRID_3D = {"nr": 12, "nt": 12, "nphi": 24}
DEFAULT_SEED = 7

_positive = {"type": "number", "exclusiveMinimum": 0}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "hessquot run configuration",
    "type": "object",
    "required": ["problem", "domain", "f", "phi"],
    "additionalProperties": False,
    "properties": {
        "problem": {
            "type": "object",
            "required": ["n", "k", "l"],
            "additionalProperties": False,
            "properties": {
                "n": {"type": "integer", "enum": [2, 3]},
                "k": {"type": "integer", "minimum": 1},
                "l": {"type": "integer", "minimum": 0},
            },
        },
        "domain": {
            "type": "object",
            "required": ["kind"],
            "additionalProperties": False,
            "properties": {
                "kind": {"enum": ["disk", "ellipse", "ball", "superellipse"]},
                "radius": _positive,
                "a": _positive,
                "b": _positive,
                "p": {"type": "number", "minimum": 2},
                "collar_width": {"oneOf": [_positive, {"type": "null"}]},
            },
        },
        "f": {"type": "string", "minLength": 1},
        "phi": {"type": "string", "minLength": 1},
        "exact": {"type": ["string", "null"]},
        "mode": {"enum": list(MODES)},
        "solver": {"type": "object"},
        "grid": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "nr": {"type": "integer", "minimum": 4},
                "nt": {"type": "integer", "minimum": 4},
                "nphi": {"type": "integer", "minimum": 4},
            },
        },
        "output_dir": {"type": "string", "minLength": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
}


@dataclass(frozen=True)
class RunConfig:
    """One solve: operator, domain, data expressions, mode and numerics.

    ``exact`` is an optional closed-form solution; when given, reports carry
    the max-norm error against it.
    """

    n: int
    k: int
    l: int
    domain: dict
    f: str
    phi: str
    mode: str = "robin"
    solver: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    output_dir: str = "hessquot-out"
    seed: int = DEFAULT_SEED
    exact: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> RunConfig:
        try:
            jsonschema.validate(data, CONFIG_SCHEMA)
        except jsonschema.ValidationError as exc:
            where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
            raise ConfigError(f"config invalid at {where}: {exc.message}") from None
        prob = data["problem"]
        n = prob["n"]
        try:
            dom = Domain.from_dict(data["domain"])
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad domain: {exc}") from None
        grid = dict(data.get("grid") or {})
        default = DEFAULT_GRID_2D if n == 2 else DEFAULT_GRID_3D
        grid = {**default, **grid}
        cfg = cls(
            n=n,
            k=prob["k"],
            l=prob["l"],
            domain=dom.to_dict(),
            f=data["f"],
            phi=data["phi"],
            mode=data.get("mode", "robin"),
            solver=dict(data.get("solver") or {}),
            grid=grid,
            output_dir=data.get("output_dir", "hessquot-out"),
            seed=data.get("seed", DEFAULT_SEED),
            exact=data.get("exact"),
        )
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        d = {
            "problem": {"n": self.n, "k": self.k, "l": self.l},
            "domain": dict(self.domain),
            "f": self.f,
            "phi": self.phi,
            "mode": self.mode,
            "solver": dict(self.solver),
            "grid": dict(self.grid),
            "output_dir": self.output_dir,
            "seed": self.seed,
        }
        if self.exact is not None:
            d["exact"] = self.exact
        return d

    def validate(self) -> None:
        if not 0 <= self.l < self.k <= self.n:
            raise ConfigError(f"need 0 <= l < k <= n, got (n, k, l) = ({self.n}, {self.k}, {self.l})")
        dom = self.build_domain()
        if dom.n != self.n:
            raise ConfigError(f"domain {dom.kind.value!r} is {dom.n}-dimensional but problem has n = {self.n}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        for name in ("f", "phi", "exact"):
            text = getattr(self, name)
            if text is None:
                continue
            try:
                tree = CompiledExpression(text).tree
            except ExpressionSyntaxError as exc:
                raise ConfigError(f"{name}: {exc}") from None
            if max_variable(tree) > self.n:
                raise ConfigError(f"{name} uses x{max_variable(tree)} but n = {self.n}")
        try:
            self.solver_config()
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"solver: {exc}") from None
        if self.n == 2 and "nphi" in self.grid:
            raise ConfigError("planar grids take no nphi")
        try:
            _check_grid(self.n, self.grid)
        except ValueError as exc:
            raise ConfigError(f"grid: {exc}") from None
        if self.mode == "classical" and convexity_class(dom, self.n) is not ConvexityClass.STRICT:
            raise ConfigError("classical mode needs a strictly convex domain")

    def build_domain(self) -> Domain:
        return Domain.from_dict(self.domain)

    def build_grid(self) -> Grid:
        g = self.grid
        return Grid(self.build_domain(), g["nr"], g["nt"], g.get("nphi"))

    def solver_config(self) -> SolverConfig:
        return SolverConfig.from_dict(self.solver)

    def expressions(self):
        """Compiled (f, phi, exact-or-None)."""
        ex = CompiledExpression(self.exact) if self.exact else None
        return CompiledExpression(self.f), CompiledExpression(self.phi), ex


def _check_grid(n: int, g: dict) -> None:
    if g["nt"] % 2:
        raise ValueError("nt must be even")
    if n == 3 and g.get("nphi", 2 * g["nt"]) % 2:
        raise ValueError("nphi must be even")


def load_config(path) -> RunConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON ({exc})") from None
    return RunConfig.from_dict(data)


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
