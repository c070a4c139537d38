import numpy as np
import pytest

from hessquot.geometry import Domain
from hessquot.grid import Grid, chart_operators, quadratic_basis

GRIDS = [
    Grid(Domain.disk(), 8, 16),
    Grid(Domain.disk(0.6), 9, 12),
    Grid(Domain.ellipse(1.5, 1.0), 10, 20),
    Grid(Domain.superellipse(1.0, 0.8, 4), 12, 24),
    Grid(Domain.ball(), 6, 6, 12),
]
IDS = ["disk", "small-disk", "ellipse", "superellipse", "ball"]


def random_quadratic(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n))
    a = a + a.T
    b = rng.normal(size=n)
    return a, b, rng.normal()


@pytest.mark.parametrize("grid", GRIDS, ids=IDS)
def test_jets_exact_on_quadratics(grid):
    a, b, c = random_quadratic(grid.n, 3)
    u = 0.5 * np.einsum("ni,ij,nj->n", grid.x, a, grid.x) + grid.x @ b + c
    grad, hess = grid.jets(u)
    np.testing.assert_allclose(hess, np.broadcast_to(a, hess.shape), atol=1e-8)
    np.testing.assert_allclose(grad, grid.x @ a + b, atol=1e-9)


def test_diag_quadratic_hessian_to_1e10():
    grid = Grid(Domain.disk(), 32, 64)
    u = 0.5 * (grid.x[:, 0] ** 2 + 2 * grid.x[:, 1] ** 2)
    hess = grid.hessian(u)
    assert np.max(np.abs(hess - np.diag([1.0, 2.0]))) <= 1e-10


@pytest.mark.parametrize("grid", GRIDS, ids=IDS)
def test_linear_function_has_zero_hessian(grid):
    hess = grid.hessian(grid.x[:, 0])
    assert np.max(np.abs(hess)) < 1e-9


def test_hessian_second_order_for_smooth_function():
    errs = []
    for m in (16, 32, 64):
        g = Grid(Domain.ellipse(1.5, 1.0), m, 2 * m)
        hess = g.hessian(np.exp(g.x[:, 0]) * np.cos(g.x[:, 1]))
        e = np.exp(g.x[:, 0]) * np.cos(g.x[:, 1])
        exact = np.stack([np.stack([e, -np.exp(g.x[:, 0]) * np.sin(g.x[:, 1])], -1), np.stack([-np.exp(g.x[:, 0]) * np.sin(g.x[:, 1]), -e], -1)], -2)
        # away from the two innermost rings, where the chart is singular
        keep = g.index[0] >= 2
        errs.append(np.max(np.abs(hess - exact)[keep]))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.7), orders


def test_chart_operators_annihilate_constants():
    for n in (2, 3):
        for boundary in (False, True):
            for op in chart_operators(n, boundary):
                assert abs(sum(op.values())) < 1e-14


def test_quadratic_basis_layout():
    dx = np.array([[2.0, 3.0]])
    np.testing.assert_allclose(quadratic_basis(dx), [[2.0, 3.0, 2.0, 6.0, 4.5]])


@pytest.mark.parametrize(
    "dom, volume",
    [
        (Domain.disk(), np.pi),
        (Domain.disk(0.6), np.pi * 0.36),
        (Domain.ellipse(1.5, 1.0), np.pi * 1.5),
        (Domain.ball(), 4 * np.pi / 3),
    ],
)
def test_quadrature_volume(dom, volume):
    g = Grid(dom, 24, 48) if dom.n == 2 else Grid(dom, 12, 12, 24)
    assert g.volume == pytest.approx(volume, rel=2e-3 if dom.n == 2 else 1e-2)


def test_ball_quadrature_second_order():
    errs = [abs(Grid(Domain.ball(), m, m, 2 * m).volume - 4 * np.pi / 3) for m in (6, 12, 24)]
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_quadrature_second_order():
    errs = []
    for m in (16, 32, 64):
        g = Grid(Domain.disk(), m, 2 * m)
        errs.append(abs(g.mean(np.sum(g.x**2, axis=1)) - 0.5))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_superellipse_area():
    from math import gamma

    g = Grid(Domain.superellipse(1.0, 0.8, 4), 64, 128)
    area = 4 * 0.8 * gamma(1.25) ** 2 / gamma(1.5)
    assert g.volume == pytest.approx(area, rel=1e-3)


@pytest.mark.parametrize("grid", GRIDS, ids=IDS)
def test_boundary_nodes_on_boundary_with_unit_normals(grid):
    xb = grid.x[grid.boundary_nodes]
    dom = grid.domain
    if dom.kind.value == "ellipse":
        lhs = (xb[:, 0] / dom.a) ** 2 + (xb[:, 1] / dom.b) ** 2
    elif dom.kind.value == "superellipse":
        lhs = np.abs(xb[:, 0] / dom.a) ** dom.p + np.abs(xb[:, 1] / dom.b) ** dom.p
    else:
        lhs = np.sum(xb**2, axis=1) / dom.a**2
    np.testing.assert_allclose(lhs, 1.0, atol=1e-12)
    np.testing.assert_allclose(np.linalg.norm(grid.normals, axis=1), 1.0, atol=1e-12)
    # outward: positive against the position vector for these star domains
    assert np.all(np.sum(grid.normals * xb, axis=1) > 0)


def test_wrap_across_pole_2d():
    g = Grid(Domain.disk(), 6, 8)
    node = g._wrap(np.array([[-1], [1]]))
    assert node[0] == 0 * 8 + 5
    np.testing.assert_allclose(g.x[node[0]], -g.x[1], atol=1e-15)


def test_wrap_across_pole_and_seams_3d():
    g = Grid(Domain.ball(), 5, 6, 12)
    for off in ([-1, 2, 3], [1, -1, 4], [2, 6, 7]):
        node = g._wrap(np.array(off)[:, None])[0]
        i, j, m = off
        th = (j + 0.5) * np.pi / 6
        ph = 2 * np.pi * m / 12
        rho = (i + 0.5) * g.h
        expect = rho * np.array([np.sin(th) * np.cos(ph), np.sin(th) * np.sin(ph), np.cos(th)])
        np.testing.assert_allclose(g.x[node], expect, atol=1e-14)


def test_grid_validation():
    with pytest.raises(ValueError):
        Grid(Domain.disk(), 3, 8)
    with pytest.raises(ValueError):
        Grid(Domain.disk(), 8, 7)
    with pytest.raises(ValueError):
        Grid(Domain.disk(), 8, 8, 8)
    with pytest.raises(ValueError):
        Grid(Domain.ball(), 8, 8, 7)


def test_describe():
    d = Grid(Domain.disk(), 8, 16).describe()
    assert d["shape"] == [8, 16] and d["nodes"] == 128 and d["domain"]["kind"] == "disk"
