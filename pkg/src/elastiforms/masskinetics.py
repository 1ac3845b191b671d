"""Mass forms, densities, conservation diagnostics, momentum and energy.

The body carries a single time-independent mass 3-pseudo-form.  Every
other mass or density object is derived from it: the spatial mass form
by pushforward, densities by ratios against the relevant volume forms.
Momenta are mass-weighted Hodge stars of the velocities.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, integrate_interior
from .geometry import MetricField, make_metric, volume_form
from .forms import (
    BundleValuedForm,
    FormError,
    covector_form,
    duality_pairing,
    hodge_flat,
    hodge_sharp,
    mass_form,
    vector_form,
    wedge_dot,
)
from .config import Configuration, MotionCurve, induced_metrics, velocity_triplet
from .calculus import (
    convective_context,
    divergence,
    lie_derivative_form,
    spatial_context,
    vector_field,
)


class MassError(ValueError):
    pass


@dataclass
class MassStructure:
    """The body mass form together with the reference volume structure.

    ``mu_hat`` doubles as the material mass form.  ``rho_tilde`` is the
    (time-independent) material density against the reference volume
    form of ``ref_metric``.
    """

    grid: Grid
    ref_metric: MetricField
    mu_hat: BundleValuedForm
    rho_tilde: np.ndarray

    @classmethod
    def from_density(cls, grid, ref_metric, rho_tilde=1.0):
        rho = np.asarray(rho_tilde, dtype=float)
        if rho.ndim == 0:
            rho = np.full(grid.shape, float(rho))
        if np.any(rho < 0):
            raise MassError("mass density must be non-negative")
        mu = mass_form(rho * ref_metric.sqrt_det, "convective")
        return cls(grid=grid, ref_metric=ref_metric, mu_hat=mu, rho_tilde=rho)

    def mu_material(self):
        """The same top form, tagged for material-representation pairings."""
        return mass_form(self.mu_hat.density, "material")

    def mu_spatial(self, config):
        return spatial_mass_form(self.mu_hat, config)

    def rho_convective(self, g_hat):
        return density_from_form(self.mu_hat, volume_form(g_hat))

    def rho_spatial(self, config):
        """Spatial density at image points (pulled-back sampling)."""
        mu = self.mu_spatial(config)
        omega = volume_form(config.spatial_metric())
        return density_from_form(mu, omega)

    def total_mass(self):
        return integrate_interior(self.mu_hat.density, self.grid)


def spatial_mass_form(mu_hat, config):
    """Pushforward of the body mass form, in pulled-back sampling.

    The stored density at body node X is the spatial chart component at
    x = phi(X), i.e. the body density divided by det F; the change of
    variables theorem then preserves total mass exactly in quadrature.
    """
    return mass_form(mu_hat.density / config.det_f, "spatial")


def density_from_form(m, omega):
    """Pointwise ratio of a mass form against a volume pseudo-form."""
    dens = omega.density
    if np.any(dens <= 0):
        raise MassError("volume form density must be positive")
    return m.density / dens


def momentum_from_velocity(v, metric, mass, representation, form_metric=None, over_map=None):
    """Covector-valued 3-pseudo-form ``star-flat`` of the velocity."""
    zeta = vector_form(0, v, representation, over_map=over_map)
    return hodge_flat(zeta, metric, mass, form_metric=form_metric)


def velocity_from_momentum(momentum, metric, mass, form_metric=None):
    sharp = hodge_sharp(momentum, metric, mass, form_metric=form_metric)
    return sharp.comps[..., 0]


def kinetic_energy(v, momentum, grid, config=None):
    """Half the duality pairing of a velocity with its momentum."""
    zeta = vector_form(0, v, momentum.representation, over_map=momentum.over_map)
    return 0.5 * duality_pairing(momentum, zeta, grid, config=config)


def _time_derivative(fn, t, dt):
    return (fn(t + dt) - fn(t - dt)) / (2.0 * dt)


def mass_conservation_residual(curve, mass, t, representation, dt=None):
    """Max-norm defect of the stated conservation law per representation.

    material:   d_t of the body mass form (identically zero by storage)
    convective: d_t rho_hat + rho_hat div_hat(v_hat)
    spatial:    d_t rho + v(rho) + rho div(v), at fixed spatial point
    """
    dt = curve.dt if dt is None else dt
    if representation == "material":
        return 0.0

    v_tilde, v_spat, v_hat, cfg = velocity_triplet(curve, t)
    if representation == "convective":
        def rho_hat_at(s):
            g_hat, _ = induced_metrics(curve.configuration(s))
            return mass.rho_convective(g_hat)

        rho_dot = _time_derivative(rho_hat_at, t, dt)
        g_hat, _ = induced_metrics(cfg)
        ctx = convective_context(g_hat, curve.grid)
        div_v = divergence(vector_field("convective", v_hat), ctx).values
        return float(np.max(np.abs(rho_dot + rho_hat_at(t) * div_v)))

    if representation == "spatial":
        def rho_at(s):
            return mass.rho_spatial(curve.configuration(s))

        rho = rho_at(t)
        stored_dot = _time_derivative(rho_at, t, dt)
        from .geometry import frame_gradient

        drho = frame_gradient(rho, curve.grid, f_inv=cfg.f_inv)
        # fixed-point time derivative of the pulled-back samples
        rho_dot = stored_dot - np.einsum("...m,...m->...", v_spat, drho)
        ctx = spatial_context(cfg)
        div_v = divergence(vector_field("spatial", v_spat), ctx).values
        advect = np.einsum("...m,...m->...", v_spat, drho)
        return float(np.max(np.abs(rho_dot + advect + rho * div_v)))

    raise MassError(f"unknown representation {representation!r}")


def spatial_mass_form_residual(curve, mass, t, dt=None):
    """Max-norm of the top-form law: d_t mu + d(iota_v mu) at fixed point."""
    dt = curve.dt if dt is None else dt
    _, v_spat, _, cfg = velocity_triplet(curve, t)
    grid = curve.grid

    def mu_at(s):
        return mass.mu_spatial(curve.configuration(s)).density

    stored_dot = _time_derivative(mu_at, t, dt)
    from .geometry import frame_gradient

    dmu = frame_gradient(mu_at(t), grid, f_inv=cfg.f_inv)
    mu_dot = stored_dot - np.einsum("...m,...m->...", v_spat, dmu)
    mu_t = mass.mu_spatial(curve.configuration(t))
    from .forms import exterior_derivative, interior_product

    flux = exterior_derivative(interior_product(v_spat, mu_t), grid, f_inv=cfg.f_inv)
    return float(np.max(np.abs(mu_dot + flux.density)))


def incompressibility_residual(curve, t, dt=None):
    """(max |div_hat v_hat|, max |d_t J|, max |div v|) along the motion."""
    dt = curve.dt if dt is None else dt
    _, v_spat, v_hat, cfg = velocity_triplet(curve, t)
    g_hat, _ = induced_metrics(cfg)
    cctx = convective_context(g_hat, curve.grid)
    div_hat = divergence(vector_field("convective", v_hat), cctx).values

    def jac_at(s):
        return curve.configuration(s).jac

    jac_dot = _time_derivative(jac_at, t, dt)

    sctx = spatial_context(cfg)
    div_v = divergence(vector_field("spatial", v_spat), sctx).values
    return (
        float(np.max(np.abs(div_hat))),
        float(np.max(np.abs(jac_dot))),
        float(np.max(np.abs(div_v))),
    )


def momentum_triplet(curve, mass, t):
    """The three momentum forms of a motion at time t."""
    v_tilde, v_spat, v_hat, cfg = velocity_triplet(curve, t)
    g_hat, g_tilde = induced_metrics(cfg)
    mu_hat = mass.mu_hat
    mu_mat = mass.mu_material()
    mu_spat = mass.mu_spatial(cfg)
    m_hat = momentum_from_velocity(v_hat, g_hat, mu_hat, "convective")
    m_tilde = momentum_from_velocity(
        v_tilde, g_tilde, mu_mat, "material",
        form_metric=mass.ref_metric, over_map=cfg,
    )
    m_spat = momentum_from_velocity(v_spat, g_tilde_as_spatial(g_tilde), mu_spat, "spatial")
    return m_tilde, m_spat, m_hat, cfg


def g_tilde_as_spatial(g_tilde):
    """Relabel the ambient metric samples for spatial-representation use."""
    return MetricField("spatial", g_tilde.values, g_tilde.inv, g_tilde.sqrt_det)
