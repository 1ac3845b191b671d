import numpy as np
import pytest

from elastiforms.grid import (
    Chart,
    Grid,
    GridError,
    SampledField,
    build_grid,
    integrate_boundary,
    integrate_interior,
    partial_derivative,
)
from elastiforms import forms


def test_build_grid_unit_cube():
    g = build_grid(Chart("body"), (5, 5, 5))
    assert g.shape == (5, 5, 5)
    assert np.allclose(g.spacing, 0.25)
    assert g.nodes().shape == (5, 5, 5, 3)
    assert g.nodes()[0, 0, 0, 0] == 0.0 and g.nodes()[-1, -1, -1, 2] == 1.0


def test_build_grid_anisotropic():
    chart = Chart("body", ranges=((0.0, 2.0), (0.0, 1.0), (0.0, 1.0)))
    g = build_grid(chart, (9, 5, 5))
    assert np.allclose(g.spacing, (0.25, 0.25, 0.25))


def test_build_grid_too_coarse():
    with pytest.raises(GridError):
        build_grid(Chart("body"), (3, 5, 5))


def test_partial_derivative_linear_exact(unit_grid):
    x = unit_grid.nodes()
    d = partial_derivative(x[..., 0], unit_grid, 0)
    assert np.max(np.abs(d - 1.0)) < 1e-13


def test_partial_derivative_quadratic_exact(unit_grid):
    x = unit_grid.nodes()
    d = partial_derivative(x[..., 0] ** 2, unit_grid, 0)
    assert np.max(np.abs(d - 2.0 * x[..., 0])) < 1e-12


def test_partial_derivative_second_order():
    errs = []
    for n in (17, 33):
        g = build_grid(Chart("body"), (n, n, n))
        x = g.nodes()
        d = partial_derivative(np.sin(np.pi * x[..., 0]), g, 0)
        errs.append(np.max(np.abs(d - np.pi * np.cos(np.pi * x[..., 0]))))
    ratio = errs[0] / errs[1]
    assert 3.3 < ratio < 4.7  # order two: error ratio ~ 4 under halving


def test_partial_derivative_linearity(unit_grid, rng):
    f = rng.normal(size=unit_grid.shape)
    g = rng.normal(size=unit_grid.shape)
    lhs = partial_derivative(2.0 * f + 3.0 * g, unit_grid, 1)
    rhs = 2.0 * partial_derivative(f, unit_grid, 1) + 3.0 * partial_derivative(g, unit_grid, 1)
    assert np.max(np.abs(lhs - rhs)) < 1e-13


def test_partial_derivative_axis_range(unit_grid):
    with pytest.raises(GridError):
        partial_derivative(np.zeros(unit_grid.shape), unit_grid, 3)


def test_sbp_scheme_summation_by_parts(unit_grid, rng):
    """The two-point closure pairs exactly with trapezoid weights."""
    u = rng.normal(size=unit_grid.shape)
    v = rng.normal(size=unit_grid.shape)
    du = partial_derivative(u, unit_grid, 0, scheme="sbp")
    dv = partial_derivative(v, unit_grid, 0, scheme="sbp")
    pairing = integrate_interior(u * dv + v * du, unit_grid)
    h = unit_grid.spacing[1]
    w1 = np.full(unit_grid.shape[1], h); w1[0] = w1[-1] = h / 2
    w2 = np.full(unit_grid.shape[2], h); w2[0] = w2[-1] = h / 2
    boundary = np.einsum("jk,j,k->", (u * v)[-1] - (u * v)[0], w1, w2)
    assert abs(pairing - boundary) < 1e-13


def test_integrate_interior_constant(unit_grid):
    assert integrate_interior(np.ones(unit_grid.shape), unit_grid) == pytest.approx(1.0)


def test_integrate_interior_linear(unit_grid):
    x = unit_grid.nodes()
    assert integrate_interior(x[..., 0], unit_grid) == pytest.approx(0.5, abs=1e-13)


def test_integrate_interior_convergence():
    vals = []
    for n in (9, 17):
        g = build_grid(Chart("body"), (n, n, n))
        x = g.nodes()
        vals.append(integrate_interior(np.sin(np.pi * x[..., 0]), g))
    exact = 2.0 / np.pi
    e9, e17 = abs(vals[0] - exact), abs(vals[1] - exact)
    assert e17 < e9 / 3.5  # order ~ 2


def test_integrate_boundary_zero(unit_grid):
    data = {face: np.zeros((9, 9)) for face in unit_grid.faces()}
    assert integrate_boundary(data, unit_grid) == 0.0


@pytest.mark.parametrize("which, expected", [("constant", 0.0), ("linear", 1.0)])
def test_divergence_theorem_flux(unit_grid, which, expected):
    # v = d_1 (div 0) and v = X^1 d_1 (div 1): flux of iota_v omega equals the
    # volume integral of the divergence
    x = unit_grid.nodes()
    comp = np.ones(unit_grid.shape) if which == "constant" else x[..., 0]
    alpha = forms.scalar_form(
        2, np.stack([np.zeros(unit_grid.shape), np.zeros(unit_grid.shape), comp], axis=-1),
        "convective",
    )
    flux = integrate_boundary(forms.face_restriction(alpha, unit_grid), unit_grid)
    assert flux == pytest.approx(expected, abs=1e-12)


def test_integrate_boundary_missing_face(unit_grid):
    data = {face: np.zeros((9, 9)) for face in unit_grid.faces()[:-1]}
    with pytest.raises(GridError):
        integrate_boundary(data, unit_grid)


def test_sampled_field_validation(unit_grid):
    with pytest.raises(GridError):
        SampledField(unit_grid, np.zeros((3, 3, 3)))
    with pytest.raises(GridError):
        SampledField(unit_grid, np.full(unit_grid.shape, np.nan))
    f = SampledField(unit_grid, np.zeros(unit_grid.shape + (3,)))
    assert f.component_shape == (3,)


def test_orientation_flag(unit_grid):
    flipped = unit_grid.with_orientation(-1)
    assert integrate_interior(np.ones(unit_grid.shape), flipped) == pytest.approx(-1.0)
