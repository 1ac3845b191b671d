import numpy as np
import pytest

from elastiforms.geometry import (
    GeometryError,
    ambient_metric_at,
    christoffel,
    killing_residual,
    lie_derivative_metric,
    make_metric,
    raise_lower,
    volume_form,
)
from elastiforms.grid import Chart, build_grid

from conftest import eye_metric


def test_christoffel_euclidean(unit_grid, euclid):
    gam = christoffel(euclid, unit_grid)
    assert np.max(np.abs(gam)) < 1e-13


def test_christoffel_cylindrical(cyl_grid):
    m = make_metric("convective", ambient_metric_at(cyl_grid.chart, cyl_grid.nodes()))
    gam = christoffel(m, cyl_grid)
    r = cyl_grid.nodes()[..., 0]
    # r^2 is quadratic, so the stencils reproduce the hand values exactly
    assert np.max(np.abs(gam[..., 0, 1, 1] + r)) < 1e-12
    assert np.max(np.abs(gam[..., 1, 0, 1] - 1.0 / r)) < 1e-12
    assert np.max(np.abs(gam[..., 1, 1, 0] - 1.0 / r)) < 1e-12
    mask = np.ones((3, 3, 3), dtype=bool)
    for idx in [(0, 1, 1), (1, 0, 1), (1, 1, 0)]:
        mask[idx] = False
    assert np.max(np.abs(gam[..., mask])) < 1e-12


def test_christoffel_conformal():
    # g = exp(2 X^1) I: Gamma^1_11 = 1 (analytic differentiation oracle)
    errs = []
    for n in (9, 17):
        g = build_grid(Chart("body"), (n, n, n))
        x = g.nodes()
        comps = np.exp(2.0 * x[..., 0])[..., None, None] * np.eye(3)
        m = make_metric("convective", comps)
        gam = christoffel(m, g)
        errs.append(np.max(np.abs(gam[..., 0, 0, 0] - 1.0)))
    assert errs[0] < 0.05
    assert errs[1] < errs[0] / 3.0


def test_spd_rejection(unit_grid):
    bad = np.broadcast_to(np.diag([1.0, -1.0, 1.0]), unit_grid.shape + (3, 3)).copy()
    with pytest.raises(GeometryError):
        make_metric("convective", bad)


def test_metric_inverse_identity(unit_grid, rng):
    a = rng.normal(size=unit_grid.shape + (3, 3))
    m = make_metric("convective", np.einsum("...ij,...kj->...ik", a, a) + 3 * np.eye(3))
    prod = np.einsum("...ij,...jk->...ik", m.values, m.inv)
    assert np.max(np.abs(prod - np.eye(3))) < 1e-12


def test_raise_lower_euclidean(unit_grid, euclid):
    v = np.zeros(unit_grid.shape + (3,))
    v[..., 0] = 1.0
    flat = raise_lower(v, euclid, 0, "flat")
    assert np.allclose(flat, v)


def test_raise_lower_cylindrical(cyl_grid):
    m = make_metric("convective", ambient_metric_at(cyl_grid.chart, cyl_grid.nodes()))
    v = np.zeros(cyl_grid.shape + (3,))
    v[..., 1] = 1.0  # d_theta
    flat = raise_lower(v, m, 0, "flat")
    r = cyl_grid.nodes()[..., 0]
    assert np.max(np.abs(flat[..., 1] - r ** 2)) < 1e-13


def test_sharp_flat_roundtrip(unit_grid, rng):
    a = rng.normal(size=unit_grid.shape + (3, 3))
    m = make_metric("convective", np.einsum("...ij,...kj->...ik", a, a) + 3 * np.eye(3))
    v = rng.normal(size=unit_grid.shape + (3,))
    back = raise_lower(raise_lower(v, m, 0, "flat"), m, 0, "sharp")
    assert np.max(np.abs(back - v)) < 1e-12


def test_raise_lower_leg_validation(unit_grid, euclid):
    with pytest.raises(GeometryError):
        raise_lower(np.zeros(unit_grid.shape + (3,)), euclid, 1, "flat")
    with pytest.raises(GeometryError):
        raise_lower(np.zeros(unit_grid.shape + (3,)), euclid, 0, "sideways")


def test_volume_form_values(unit_grid, cyl_grid, euclid):
    assert np.allclose(volume_form(euclid).density, 1.0)
    mc = make_metric("convective", ambient_metric_at(cyl_grid.chart, cyl_grid.nodes()))
    assert np.max(np.abs(volume_form(mc).density - cyl_grid.nodes()[..., 0])) < 1e-13
    m4 = make_metric("convective",
                     np.broadcast_to(4.0 * np.eye(3), unit_grid.shape + (3, 3)).copy())
    assert np.allclose(volume_form(m4).density, 8.0)
    assert volume_form(m4).parity == "pseudo"


def test_lie_derivative_killing_rotation(unit_grid, euclid):
    x = unit_grid.nodes()
    v = np.stack([-x[..., 1], x[..., 0], np.zeros(unit_grid.shape)], axis=-1)
    assert killing_residual(v, euclid, unit_grid) < 1e-10


def test_lie_derivative_stretch(unit_grid, euclid):
    x = unit_grid.nodes()
    v = np.zeros(unit_grid.shape + (3,))
    v[..., 0] = x[..., 0]
    lie = lie_derivative_metric(v, euclid, unit_grid)
    expected = np.zeros_like(lie)
    expected[..., 0, 0] = 2.0
    assert np.max(np.abs(lie - expected)) < 1e-12
    assert killing_residual(v, euclid, unit_grid) == pytest.approx(2.0, abs=1e-12)


def test_lie_derivative_translation(unit_grid, euclid):
    v = np.zeros(unit_grid.shape + (3,))
    v[..., 2] = 1.0
    assert killing_residual(v, euclid, unit_grid) == 0.0


def test_lie_derivative_flow_pullback_oracle(rng):
    """L_v g matches the finite difference of the flow pullback at s = 0.

    Explicit small-s Euler flow phi_s(x) = x + s v(x); the pullback of
    the Euclidean metric is (I + s Dv)^T (I + s Dv).
    """
    g = build_grid(Chart("body"), (17, 17, 17))
    x = g.nodes()
    v = np.stack([
        np.sin(1.3 * x[..., 0]) * x[..., 1],
        np.cos(x[..., 2]) + 0.5 * x[..., 0] ** 2,
        x[..., 0] * x[..., 1] * 0.7,
    ], axis=-1)
    m = eye_metric(g)
    lie = lie_derivative_metric(v, m, g)
    from elastiforms.geometry import frame_gradient

    dv = frame_gradient(v, g)  # [k, i] = d_i v^k
    s = 1e-4
    f = np.eye(3) + s * np.einsum("...ki->...ik", dv)
    pulled = np.einsum("...ia,...ib->...ab", f, f)
    fd = (pulled - np.eye(3)) / s
    assert np.max(np.abs(lie - fd)) < 5e-4  # O(s) flow error dominates
