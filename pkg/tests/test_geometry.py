import numpy as np
import pytest

from hessquot.errors import OutOfCollarError, OutOfDomainError
from hessquot.geometry import (
    ConvexityClass,
    Domain,
    boundary_curvatures,
    convexity_class,
    foot_point,
    h_barrier,
    normal_extension,
    signed_distance,
    tangential_projector,
)

CATALOG = [
    Domain.disk(1.0),
    Domain.disk(0.7),
    Domain.ellipse(2.0, 1.0),
    Domain.ellipse(1.0, 1.5),
    Domain.superellipse(1.0, 0.8, 4),
    Domain.ball(1.0),
]


def collar_points(dom, count, seed):
    """Points at known depth t along the inward normal of a boundary point."""
    rng = np.random.default_rng(seed)
    t = rng.uniform(0.02, 0.98, count) * dom.collar_width
    if dom.n == 2:
        th = rng.uniform(0, 2 * np.pi, count)
        b, d1, _ = dom.curve(th)
        nu = np.stack([d1[:, 1], -d1[:, 0]], axis=1) / np.linalg.norm(d1, axis=1, keepdims=True)
        kap = dom.curvature(th)[:, None]
    else:
        v = rng.normal(size=(count, 3))
        nu = v / np.linalg.norm(v, axis=1, keepdims=True)
        b = dom.a * nu
        kap = np.full((count, 2), 1.0 / dom.a)
    return b - t[:, None] * nu, t, nu, kap


def fd_gradient(fn, x, h):
    n = x.shape[-1]
    g = np.empty_like(x)
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        g[:, i] = (fn(x + e) - fn(x - e)) / (2 * h)
    return g


def test_distance_examples():
    disk = Domain.disk()
    assert signed_distance(disk, [0.3, 0.4]) == pytest.approx(0.5)
    assert signed_distance(disk, [0.6, 0.8]) == 0.0
    assert signed_distance(Domain.ellipse(2, 1), [0.0, 0.0]) == pytest.approx(1.0, abs=1e-12)


def test_ellipse_distance_against_dense_sampling():
    dom = Domain.ellipse(2.0, 1.0)
    rng = np.random.default_rng(0)
    x = rng.uniform(-1, 1, (300, 2)) * [1.9, 0.95]
    x = x[dom.level(x) <= 1]
    th = np.linspace(0, 2 * np.pi, 200_000, endpoint=False)
    pts = dom.curve(th)[0]
    dense = np.array([np.min(np.linalg.norm(pts - p, axis=1)) for p in x])
    d = signed_distance(dom, x)
    # sampling only ever overestimates, by O(spacing^2)
    assert np.all(d <= dense + 1e-12)
    assert np.max(dense - d) <= 1e-7


def test_distance_outside_raises():
    with pytest.raises(OutOfDomainError):
        signed_distance(Domain.disk(), [1.1, 0.0])
    with pytest.raises(OutOfDomainError):
        signed_distance(Domain.superellipse(1, 1, 4), [[0.0, 0.0], [0.95, 0.95]])


@pytest.mark.parametrize("dom", CATALOG, ids=lambda d: f"{d.kind.value}-{d.a}-{d.b}")
def test_distance_on_collar(dom):
    x, t, nu, kap = collar_points(dom, 1000, 1)
    np.testing.assert_allclose(signed_distance(dom, x), t, atol=1e-12)
    g = fd_gradient(lambda y: signed_distance(dom, y), x, 1e-5)
    assert np.max(np.abs(np.linalg.norm(g, axis=1) - 1)) <= 1e-6
    np.testing.assert_allclose(normal_extension(dom, x), nu, atol=1e-10)


@pytest.mark.parametrize("dom", CATALOG, ids=lambda d: f"{d.kind.value}-{d.a}-{d.b}")
def test_distance_hessian_matches_curvature(dom):
    x, t, nu, kap = collar_points(dom, 40, 2)
    h = 3e-4
    n = dom.n
    eye = np.eye(n) * h
    d = lambda y: signed_distance(dom, y)  # noqa: E731
    hess = np.empty((len(x), n, n))
    for i in range(n):
        for j in range(n):
            hess[:, i, j] = (d(x + eye[i] + eye[j]) - d(x + eye[i] - eye[j]) - d(x - eye[i] + eye[j]) + d(x - eye[i] - eye[j])) / (4 * h * h)
    ev = np.sort(np.linalg.eigvalsh(-hess), axis=1)
    expected = np.sort(np.column_stack([kap / (1 - kap * t[:, None]), np.zeros(len(x))]), axis=1)
    assert np.max(np.abs(ev - expected)) <= 1e-4


def test_normal_extension_examples():
    disk = Domain.disk(collar_width=0.9)
    np.testing.assert_allclose(normal_extension(disk, [0.5, 0.0]), [1, 0])
    np.testing.assert_allclose(normal_extension(Domain.disk(), [0.0, 1.0]), [0, 1])
    with pytest.raises(OutOfCollarError):
        normal_extension(Domain.disk(), [0.5, 0.0])


def test_normal_extension_is_minus_gradient_near_ellipse_vertex():
    dom = Domain.ellipse(2.0, 1.0)
    x = np.array([[1.9, 0.01], [1.95, -0.02], [1.99, 0.0]])
    g = fd_gradient(lambda y: signed_distance(dom, y), x, 1e-5)
    np.testing.assert_allclose(normal_extension(dom, x), -g, atol=1e-8)


def test_tangential_projector():
    np.testing.assert_allclose(tangential_projector([0, 0, 1.0]).entries, np.diag([1, 1, 0]))
    rng = np.random.default_rng(3)
    for n in (2, 3, 5):
        nu = rng.normal(size=n)
        nu /= np.linalg.norm(nu)
        c = tangential_projector(nu).entries
        np.testing.assert_allclose(c @ nu, 0, atol=1e-12)
        np.testing.assert_allclose(c @ c, c, atol=1e-12)
        np.testing.assert_array_equal(c, c.T)
        z = rng.normal(size=n)
        assert z @ z == pytest.approx((c @ z) @ (c @ z) + (z @ nu) ** 2, abs=1e-12)
    with pytest.raises(ValueError):
        tangential_projector([1.0, 1.0])


def test_boundary_curvature_examples():
    assert boundary_curvatures(Domain.disk(2.0), 0.3).curvatures[0] == pytest.approx(0.5)
    bp = boundary_curvatures(Domain.ellipse(2.0, 1.0), 0.0)
    assert bp.curvatures[0] == pytest.approx(2.0)
    np.testing.assert_allclose(bp.outward_normal, [1, 0])
    np.testing.assert_allclose(boundary_curvatures(Domain.ball(2.0), (0.4, 1.0)).curvatures, [0.5, 0.5])


@pytest.mark.parametrize("dom", [Domain.ellipse(2.0, 1.0), Domain.superellipse(1.0, 0.8, 4)], ids=["ellipse", "super"])
def test_curvature_against_normal_field_differences(dom):
    # kappa = |d nu / ds| with s arclength
    th = np.linspace(0, 2 * np.pi, 37)
    h = 1e-5

    def normal(t):
        d1 = dom.curve(t)[1]
        return np.stack([d1[..., 1], -d1[..., 0]], -1) / np.linalg.norm(d1, axis=-1, keepdims=True)

    dnu = (normal(th + h) - normal(th - h)) / (2 * h)
    speed = np.linalg.norm(dom.curve(th)[1], axis=-1)
    np.testing.assert_allclose(np.linalg.norm(dnu, axis=-1) / speed, dom.curvature(th), atol=1e-7)


def test_convexity_classes():
    assert convexity_class(Domain.disk(), 2) is ConvexityClass.STRICT
    assert convexity_class(Domain.ball(), 3) is ConvexityClass.STRICT
    assert convexity_class(Domain.ellipse(3.0, 1.0), 2) is ConvexityClass.STRICT
    assert convexity_class(Domain.superellipse(1.0, 1.0, 4), 2) is ConvexityClass.CONVEX_ONLY
    assert convexity_class(Domain.superellipse(1.0, 1.0, 4), 1) is ConvexityClass.STRICT
    assert convexity_class(Domain.superellipse(1.0, 1.0, 2), 2) is ConvexityClass.STRICT


def test_superellipse_flat_points_have_zero_curvature():
    dom = Domain.superellipse(1.0, 1.0, 4)
    assert abs(dom.curvature(0.0)) < 1e-14 and abs(dom.curvature(np.pi / 2)) < 1e-14
    assert dom.diameter == pytest.approx(2 * 2**0.25)


def test_h_barrier():
    assert h_barrier(Domain.disk(collar_width=0.9), [0.5, 0.0]) == pytest.approx(-0.25)
    assert h_barrier(Domain.disk(), [0.0, -1.0]) == 0.0
    assert h_barrier(Domain.disk(), [0.9, 0.0]) == pytest.approx(-0.09)
    with pytest.raises(OutOfCollarError):
        h_barrier(Domain.disk(), [0.1, 0.0])


def test_domain_validation_and_round_trip():
    with pytest.raises(ValueError):
        Domain.superellipse(1, 1, 3)
    with pytest.raises(ValueError):
        Domain.disk(1.0, collar_width=1.5)
    for dom in CATALOG:
        assert Domain.from_dict(dom.to_dict()) == dom
    assert Domain.disk().collar_width == pytest.approx(0.2)
    assert Domain.ellipse(2.0, 1.0).collar_width == pytest.approx(0.25)


def test_foot_point_batch_shapes():
    pos, nu, kap = foot_point(Domain.ellipse(2, 1), np.zeros((3, 4, 2)))
    assert pos.shape == (3, 4, 2) and nu.shape == (3, 4, 2) and kap.shape == (3, 4, 1)
