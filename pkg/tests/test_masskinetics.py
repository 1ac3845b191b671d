import numpy as np
import pytest

from elastiforms.grid import Chart, build_grid, integrate_interior
from elastiforms.geometry import make_metric, volume_form
from elastiforms import forms
from elastiforms.config import (
    MotionCurve,
    bump_motion,
    dilation_motion,
    induced_metrics,
    pull_form_leg,
    rigid_motion,
    shear_motion,
    velocity_triplet,
)
from elastiforms.masskinetics import (
    MassError,
    MassStructure,
    density_from_form,
    g_tilde_as_spatial,
    incompressibility_residual,
    kinetic_energy,
    mass_conservation_residual,
    momentum_from_velocity,
    momentum_triplet,
    spatial_mass_form,
    spatial_mass_form_residual,
    velocity_from_momentum,
)

from conftest import eye_metric


def unit_mass(grid, rho=1.0):
    ref = eye_metric(grid, "reference")
    return MassStructure.from_density(grid, ref, rho)


def test_spatial_mass_form_dilation(unit_grid):
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart, dilation_motion(1.0))
    cfg = curve.configuration(1.0)
    mu = spatial_mass_form(mass.mu_hat, cfg)
    assert np.allclose(mu.density, 1.0 / 8.0)
    assert integrate_interior(mu.density * cfg.det_f, unit_grid) == pytest.approx(1.0)


def test_spatial_mass_form_identity_and_shear(unit_grid):
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart, shear_motion(0.3))
    mu_id = spatial_mass_form(mass.mu_hat, curve.configuration(0.0))
    assert np.allclose(mu_id.density, mass.mu_hat.density)
    mu_shear = spatial_mass_form(mass.mu_hat, curve.configuration(1.0))
    assert np.allclose(mu_shear.density, mass.mu_hat.density)  # det F = 1


def test_density_from_form_examples(unit_grid):
    mass = unit_mass(unit_grid)
    g4 = make_metric("convective",
                     np.broadcast_to(4.0 * np.eye(3), unit_grid.shape + (3, 3)).copy())
    rho_hat = density_from_form(mass.mu_hat, volume_form(g4))
    assert np.allclose(rho_hat, 1.0 / 8.0)
    rho_tilde = density_from_form(mass.mu_hat, volume_form(mass.ref_metric))
    assert np.allclose(rho_tilde, 1.0)


def test_density_chain_consistency(unit_grid):
    """rho~ = J rho^ on a generic motion."""
    mass = unit_mass(unit_grid, rho=1.0)
    curve = MotionCurve(unit_grid, unit_grid.chart, bump_motion(0.1, 1.2))
    cfg = curve.configuration(0.6)
    g_hat, _ = induced_metrics(cfg)
    rho_hat = mass.rho_convective(g_hat)
    from elastiforms.stress import metric_jacobian

    jac = metric_jacobian(g_hat, mass.ref_metric)
    assert np.max(np.abs(mass.rho_tilde - jac * rho_hat)) < 1e-12


def test_density_positive_volume_guard(unit_grid):
    mass = unit_mass(unit_grid)
    omega = volume_form(eye_metric(unit_grid))
    omega.density = 0.0 * omega.density
    with pytest.raises(MassError):
        density_from_form(mass.mu_hat, omega)


def test_mass_conservation_material(unit_grid):
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart, dilation_motion(0.5))
    assert mass_conservation_residual(curve, mass, 0.3, "material") == 0.0


def test_mass_conservation_rigid(unit_grid):
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart,
                        rigid_motion(omega=0.8, translation=(0.1, 0.0, 0.0)), dt=1e-3)
    assert mass_conservation_residual(curve, mass, 0.4, "convective") < 1e-6
    assert mass_conservation_residual(curve, mass, 0.4, "spatial") < 1e-6


def test_mass_conservation_dilation_oracle(unit_grid):
    """Convective density rate: rho^ = (1+t)^-3, so d_t rho^(0) = -3."""
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart, dilation_motion(1.0), dt=1e-3)
    g_hat0, _ = induced_metrics(curve.configuration(0.0))
    rho0 = mass.rho_convective(g_hat0)
    dt = 1e-3
    g_hat_p, _ = induced_metrics(curve.configuration(dt))
    g_hat_m, _ = induced_metrics(curve.configuration(-dt))
    rate = (mass.rho_convective(g_hat_p) - mass.rho_convective(g_hat_m)) / (2 * dt)
    assert np.max(np.abs(rate + 3.0 * rho0)) < 1e-5
    assert mass_conservation_residual(curve, mass, 0.0, "convective") < 1e-5
    assert mass_conservation_residual(curve, mass, 0.0, "spatial") < 1e-5


def test_spatial_mass_form_law(unit_grid):
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart, dilation_motion(1.0), dt=1e-3)
    assert spatial_mass_form_residual(curve, mass, 0.2) < 1e-5


def test_incompressibility_residuals(unit_grid):
    rigid = MotionCurve(unit_grid, unit_grid.chart, rigid_motion(omega=0.7), dt=1e-3)
    r = incompressibility_residual(rigid, 0.3)
    assert max(r) < 1e-6
    shear = MotionCurve(unit_grid, unit_grid.chart, shear_motion(0.5), dt=1e-3)
    r = incompressibility_residual(shear, 0.8)
    assert max(r) < 1e-6
    dila = MotionCurve(unit_grid, unit_grid.chart, dilation_motion(1.0), dt=1e-3)
    div_hat, jac_dot, div_v = incompressibility_residual(dila, 1.0)
    assert div_v == pytest.approx(1.5, abs=1e-6)  # 3/(1+t) at t = 1
    assert jac_dot > 1.0


def test_momentum_roundtrip(unit_grid, rng):
    mass = unit_mass(unit_grid)
    g = eye_metric(unit_grid)
    v = rng.normal(size=unit_grid.shape + (3,))
    m = momentum_from_velocity(v, g, mass.mu_hat, "convective")
    assert m.parity == "pseudo" and m.degree == 3
    back = velocity_from_momentum(m, g, mass.mu_hat)
    assert np.max(np.abs(back - v)) < 1e-12


def test_momentum_constant_field(unit_grid):
    mass = unit_mass(unit_grid)
    g = eye_metric(unit_grid)
    b = np.broadcast_to(np.array([0.1, 0.2, -0.3]), unit_grid.shape + (3,)).copy()
    m = momentum_from_velocity(b, g, mass.mu_hat, "convective")
    assert np.max(np.abs(m.comps[..., :, 0] - b)) < 1e-13


def test_momentum_pullback_square(unit_grid):
    """Pulling the form leg commutes with the star: both paths agree."""
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart, bump_motion(0.1, 1.2))
    m_tilde, m_sp, m_hat, cfg = momentum_triplet(curve, mass, 0.5)
    pulled = pull_form_leg(m_sp, cfg)
    assert np.max(np.abs(pulled.comps - m_tilde.comps)) < 1e-10
    from elastiforms.config import pull_value_leg

    pulled_hat = pull_value_leg(m_tilde, cfg)
    assert np.max(np.abs(pulled_hat.comps - m_hat.comps)) < 1e-10


def test_kinetic_energy_uniform(unit_grid):
    mass = unit_mass(unit_grid)
    g = eye_metric(unit_grid)
    b = np.broadcast_to(np.array([0.3, 0.0, 0.4]), unit_grid.shape + (3,)).copy()
    m = momentum_from_velocity(b, g, mass.mu_hat, "convective")
    assert kinetic_energy(b, m, unit_grid) == pytest.approx(0.125, abs=1e-12)
    assert kinetic_energy(0.0 * b, momentum_from_velocity(0.0 * b, g, mass.mu_hat,
                                                          "convective"), unit_grid) == 0.0


def test_kinetic_energy_across_representations(unit_grid):
    mass = unit_mass(unit_grid)
    curve = MotionCurve(unit_grid, unit_grid.chart, dilation_motion(1.0))
    t = 0.5
    m_tilde, m_sp, m_hat, cfg = momentum_triplet(curve, mass, t)
    v_tilde, v_sp, v_hat, _ = velocity_triplet(curve, t)
    e_mat = kinetic_energy(v_tilde, m_tilde, unit_grid)
    e_hat = kinetic_energy(v_hat, m_hat, unit_grid)
    e_sp = kinetic_energy(v_sp, m_sp, unit_grid, config=cfg)
    assert e_hat == pytest.approx(e_mat, rel=1e-10)
    assert e_sp == pytest.approx(e_mat, rel=1e-10)


def test_total_mass_constant_along_motion(unit_grid):
    mass = unit_mass(unit_grid, rho=1.0 + 0.2 * unit_grid.nodes()[..., 1])
    curve = MotionCurve(unit_grid, unit_grid.chart, bump_motion(0.1, 1.2))
    total0 = mass.total_mass()
    for t in (0.3, 0.9):
        cfg = curve.configuration(t)
        mu = spatial_mass_form(mass.mu_hat, cfg)
        assert integrate_interior(mu.density * cfg.det_f, unit_grid) == pytest.approx(total0)


def test_kinetic_energy_orientation_invariance(unit_grid):
    """Flipping mu and the chart orientation together changes nothing."""
    mass = unit_mass(unit_grid)
    g = eye_metric(unit_grid)
    b = np.broadcast_to(np.array([0.5, 0.1, 0.0]), unit_grid.shape + (3,)).copy()
    m = momentum_from_velocity(b, g, mass.mu_hat, "convective")
    e = kinetic_energy(b, m, unit_grid)
    flipped_m = forms.orientation_flip(m)
    e_flipped = kinetic_energy(b, flipped_m, unit_grid.with_orientation(-1))
    assert e_flipped == pytest.approx(e, rel=1e-12)
