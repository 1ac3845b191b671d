"""Hyperelastic constitutive laws and the web of stress representations.

Stress enters as twice the metric gradient of the stored energy with
the value leg lowered (convective representation) and every other
entry of the web is reached from there: the extensive stress is a
covector-valued 2-pseudo-form, its ``bare`` mixed-tensor variant is the
mass-weighted Hodge sharp of it, and the contravariant ``mass`` variant
scales by the density.  Conversions across representations pull or push
one leg at a time, so the classical Piola-transformation formulas
become derived facts checked in the tests rather than definitions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import integrate_boundary, integrate_face, FACE_PAIR
from .geometry import MetricField
from .forms import (
    BundleValuedForm,
    face_restriction,
    hodge_flat,
    hodge_sharp,
    vector_form,
    wedge_dot,
)
from .config import (
    Configuration,
    induced_metrics,
    pull_form_leg,
    pull_value_leg,
    push_form_leg,
    push_value_leg,
)
from .masskinetics import MassStructure, g_tilde_as_spatial, spatial_mass_form


class StressError(ValueError):
    pass


SVK = "saint_venant_kirchhoff"
NEO_HOOKEAN = "neo_hookean_compressible"

REPS = ("spatial", "material", "convective")
WEIGHTS = ("extensive", "bare", "mass")


@dataclass
class ConstitutiveModel:
    """Isotropic stored-energy law with Lame moduli."""

    kind: str
    lame_lambda: float
    lame_mu: float

    def __post_init__(self):
        if self.kind not in (SVK, NEO_HOOKEAN):
            raise StressError(f"unknown constitutive kind {self.kind!r}")
        if self.lame_mu <= 0:
            raise StressError("shear modulus must be positive")
        if 3.0 * self.lame_lambda + 2.0 * self.lame_mu <= 0:
            raise StressError("bulk modulus 3*lambda + 2*mu must be positive")


@dataclass
class StressState:
    """One entry of the stress web.

    ``weight`` selects the variant: ``extensive`` (covector-valued
    2-pseudo-form), ``bare`` (mixed tensor ``tau``, value index first),
    or ``mass`` (contravariant tensor ``sigma``; in the material case
    the body index comes first).
    """

    representation: str
    weight: str
    payload: object

    def __post_init__(self):
        if self.representation not in REPS:
            raise StressError(f"bad representation {self.representation!r}")
        if self.weight not in WEIGHTS:
            raise StressError(f"bad weight {self.weight!r}")


@dataclass
class LogStrain:
    delta_hat: np.ndarray


# ---------------------------------------------------------------------------
# stored energy and its metric gradient


def _green_invariants(g_hat, ref):
    e_green = 0.5 * (g_hat.values - ref.values)
    mixed = np.einsum("...IJ,...JK->...IK", ref.inv, e_green)
    tr1 = np.trace(mixed, axis1=-2, axis2=-1)
    tr2 = np.einsum("...IJ,...JI->...", mixed, mixed)
    return e_green, tr1, tr2


def _log_jac(g_hat, ref):
    return np.log(g_hat.sqrt_det / ref.sqrt_det)


def metric_jacobian(g_hat, ref):
    """Volume ratio J as a function of the deformation state alone."""
    return g_hat.sqrt_det / ref.sqrt_det


def strain_energy(model, g_hat, mass):
    """Specific stored energy and the energy 3-pseudo-form e * mu.

    Both laws are normalized to vanish at the reference metric.
    """
    ref = mass.ref_metric
    rho = mass.rho_tilde
    lam, mu = model.lame_lambda, model.lame_mu
    if model.kind == SVK:
        _, tr1, tr2 = _green_invariants(g_hat, ref)
        e = (0.5 * lam * tr1 ** 2 + mu * tr2) / rho
    else:
        i1 = np.einsum("...IJ,...JI->...", ref.inv, g_hat.values)
        lj = _log_jac(g_hat, ref)
        e = (0.5 * mu * (i1 - 3.0 - 2.0 * lj) + 0.5 * lam * lj ** 2) / rho
    from .forms import mass_form

    energy_form = mass_form(e * mass.mu_hat.density, "convective")
    return e, energy_form


def energy_metric_gradient(model, g_hat, mass):
    """Contravariant symmetric gradient of the specific energy.

    Convention: ``de = grad^{IJ} dg_{IJ}`` summed over all index pairs,
    which is exactly what a componentwise finite-difference probe of the
    energy measures.
    """
    ref = mass.ref_metric
    rho = mass.rho_tilde[..., None, None]
    lam, mu = model.lame_lambda, model.lame_mu
    if model.kind == SVK:
        _, tr1, _ = _green_invariants(g_hat, ref)
        e_up = np.einsum("...IA,...AB,...BJ->...IJ",
                         ref.inv, 0.5 * (g_hat.values - ref.values), ref.inv)
        grad = 0.5 * lam * tr1[..., None, None] * ref.inv + mu * e_up
    else:
        lj = _log_jac(g_hat, ref)
        grad = 0.5 * mu * (ref.inv - g_hat.inv) + 0.5 * lam * lj[..., None, None] * g_hat.inv
    return grad / rho


def rougee_stress(model, g_hat, mass):
    """Extensive convective stress 2 * rho_hat * de/dg, value leg lowered.

    Only the deformation state enters: the configuration is not needed,
    which is what makes convective time stepping self-contained.
    """
    sigma_hat = convected_stress(model, g_hat, mass)
    rho_hat = mass.rho_tilde / metric_jacobian(g_hat, mass.ref_metric)
    tau = tau_from_sigma(sigma_hat, rho_hat, g_hat, "convective")
    payload = hodge_flat(
        vector_form(1, tau, "convective"), g_hat, mass.mu_hat,
    )
    return StressState("convective", "extensive", payload)


def convected_stress(model, g_hat, mass):
    """sigma_hat = 2 rho_hat de/dg, the contravariant convective stress."""
    rho_hat = mass.rho_tilde / metric_jacobian(g_hat, mass.ref_metric)
    return 2.0 * rho_hat[..., None, None] * energy_metric_gradient(model, g_hat, mass)


# ---------------------------------------------------------------------------
# weight conversions within one representation


def tau_from_sigma(sigma, rho, metric, representation, ref_metric=None):
    """Mixed stress tau from the contravariant sigma.

    Spatial/convective: ``tau^j_k = sigma^{jm} g_{mk} / rho``.
    Material: ``tau^j_I = G_{IM} sigma^{Mj} / rho`` (body leg through
    the reference metric, value index stays first in tau).
    """
    if representation == "material":
        return np.einsum("...IM,...Mj->...jI", ref_metric.values, sigma) / rho[..., None, None]
    return np.einsum("...jm,...mk->...jk", sigma, metric.values) / rho[..., None, None]


def sigma_from_tau(tau, rho, metric, representation, ref_metric=None):
    if representation == "material":
        return np.einsum("...IM,...jM->...Ij", ref_metric.inv, tau) * rho[..., None, None]
    return np.einsum("...jm,...mk->...jk", tau, metric.inv) * rho[..., None, None]


# ---------------------------------------------------------------------------
# the web


@dataclass
class WebContext:
    """Configuration, metrics and mass data shared by web conversions."""

    config: Configuration
    mass: MassStructure
    g_hat: MetricField = None
    g_tilde: MetricField = None

    def __post_init__(self):
        if self.g_hat is None or self.g_tilde is None:
            self.g_hat, self.g_tilde = induced_metrics(self.config)
        self.grid = self.config.grid
        self.jac = metric_jacobian(self.g_hat, self.mass.ref_metric)
        self.rho_hat = self.mass.rho_tilde / self.jac
        self.g_sp = g_tilde_as_spatial(self.g_tilde)
        self.mu_sp = spatial_mass_form(self.mass.mu_hat, self.config)

    def star_args(self, representation):
        """(value metric, mass form, form metric) for that star."""
        if representation == "convective":
            return self.g_hat, self.mass.mu_hat, None
        if representation == "material":
            return self.g_tilde, self.mass.mu_material(), self.mass.ref_metric
        if representation == "spatial":
            return self.g_sp, self.mu_sp, None
        raise StressError(f"bad representation {representation!r}")

    def density(self, representation):
        if representation == "convective":
            return self.rho_hat
        if representation == "material":
            return self.mass.rho_tilde
        return self.rho_hat  # spatial density at image points equals rho_hat samples

    def metric(self, representation):
        if representation == "convective":
            return self.g_hat
        if representation == "material":
            return self.g_tilde
        return self.g_sp

    def over_map(self, representation):
        return self.config if representation == "material" else None


def _to_extensive(state, ctx):
    if state.weight == "extensive":
        return state.payload
    rep = state.representation
    metric, mu, form_metric = ctx.star_args(rep)
    tau = state.payload
    if state.weight == "mass":
        tau = tau_from_sigma(state.payload, ctx.density(rep), metric, rep,
                             ref_metric=ctx.mass.ref_metric)
    zeta = vector_form(1, tau, rep, over_map=ctx.over_map(rep))
    return hodge_flat(zeta, metric, mu, form_metric=form_metric)


def _from_extensive(payload, rep, weight, ctx):
    if weight == "extensive":
        return StressState(rep, "extensive", payload)
    metric, mu, form_metric = ctx.star_args(rep)
    tau = hodge_sharp(payload, metric, mu, form_metric=form_metric).comps
    if weight == "bare":
        return StressState(rep, "bare", tau)
    sigma = sigma_from_tau(tau, ctx.density(rep), metric, rep,
                           ref_metric=ctx.mass.ref_metric)
    return StressState(rep, "mass", sigma)


_CHAIN = {"spatial": 0, "material": 1, "convective": 2}


def stress_web_convert(state, target_representation, target_weight, ctx):
    """Any-to-any conversion through the canonical extensive path.

    Extensive stresses transform by per-leg pullbacks along the chain
    spatial <-> material <-> convective; weights are converted at the
    end points with the representation's Hodge star and density.
    """
    if target_representation not in REPS or target_weight not in WEIGHTS:
        raise StressError(f"bad target {target_representation}/{target_weight}")
    payload = _to_extensive(state, ctx)
    pos = _CHAIN[state.representation]
    goal = _CHAIN[target_representation]
    while pos < goal:
        payload = pull_form_leg(payload, ctx.config) if pos == 0 else pull_value_leg(payload, ctx.config)
        pos += 1
    while pos > goal:
        payload = push_value_leg(payload, ctx.config) if pos == 2 else push_form_leg(payload, ctx.config)
        pos -= 1
    return _from_extensive(payload, target_representation, target_weight, ctx)


def symmetry_residual(state, ctx):
    """Defect of the basis-pair exchange symmetry of an extensive stress.

    Evaluates ``(alpha-sharp (x) beta) wedge-dot T`` over all coordinate
    basis pairs and returns the largest antisymmetric part, normalized
    by the volume density so a unit off-diagonal contravariant stress
    gives residual one.  Material stresses are rejected: with one leg on
    each manifold the exchange is not even well formed.
    """
    if state.representation == "material":
        raise StressError("symmetry is undefined for the two-point material stress")
    rep = state.representation
    t_ext = _to_extensive(StressState(rep, state.weight, state.payload), ctx)
    metric, _, _ = ctx.star_args(rep)
    grid_shape = t_ext.comps.shape[:3]
    w = np.zeros(grid_shape + (3, 3))
    for a in range(3):
        for b in range(3):
            zeta = np.zeros(grid_shape + (3, 3))
            # value leg: (dX^a)-sharp; form leg: dX^b
            zeta[..., :, b] = metric.inv[..., a, :]
            pair = wedge_dot(vector_form(1, zeta, rep, over_map=t_ext.over_map), t_ext)
            w[..., a, b] = pair.density
    skew = w - np.swapaxes(w, -1, -2)
    return float(np.max(np.abs(skew) / metric.sqrt_det[..., None, None]))


def boundary_traction_power(state, v, ctx):
    """Surface power of an extensive stress against a velocity.

    ``v`` holds the velocity components of the state's representation.
    The 2-form ``v wedge-dot T`` is restricted to the boundary faces and
    integrated with the outward-induced orientation; spatial data (in
    pulled-back sampling) is transported to the body boundary by pulling
    the form leg back first, which is the change-of-variables identity
    for the moving surface.
    """
    if state.weight != "extensive":
        raise StressError("boundary power wants the extensive stress")
    rep = state.representation
    payload = state.payload
    zeta = vector_form(0, v, rep, over_map=payload.over_map)
    two_form = wedge_dot(zeta, payload)
    if rep == "spatial":
        two_form = pull_form_leg(two_form, ctx.config)
    return integrate_boundary(face_restriction(two_form, ctx.grid), ctx.grid)


def boundary_traction_power_classical(sigma, v, metric, grid):
    """Normal/area-form expression of the surface power.

    ``integral of sigma-flat(v, n) against the induced area form``, with
    the unit outward normal and area form built from ``metric`` face by
    face.  Used as the independent oracle for the exterior route.
    """
    sigma_flat = np.einsum("...ia,...ab,...bj->...ij", metric.values, sigma, metric.values)
    total = 0.0
    for axis, side in grid.faces():
        sl = grid.face_slice(axis, side)
        sgn = 1.0 if side == 1 else -1.0
        ginv_f = metric.inv[sl]
        n = sgn * ginv_f[..., :, axis] / np.sqrt(ginv_f[..., axis, axis])[..., None]
        integrand = np.einsum(
            "...ij,...i,...j->...", sigma_flat[sl], v[sl], n
        )
        # area form: contraction of the outward normal into the volume form
        area = metric.sqrt_det[sl] * np.abs(n[..., axis])
        total += integrate_face(integrand * area, grid, axis)
    return total


def log_strain(g1, g2):
    """Pointwise half-logarithm between two deformation states.

    ``delta = 1/2 g1^{1/2} log(g1^{-1/2} g2 g1^{-1/2}) g1^{1/2}``, the
    affine-invariant realization of ``1/2 g1 . log(g1^{-1} g2)``; output
    is symmetric and vanishes iff the states coincide.
    """
    w1, q1 = np.linalg.eigh(g1.values)
    if np.any(w1 <= 0):
        raise StressError("first metric is not SPD")
    sq = np.einsum("...ij,...j,...kj->...ik", q1, np.sqrt(w1), q1)
    isq = np.einsum("...ij,...j,...kj->...ik", q1, 1.0 / np.sqrt(w1), q1)
    m = np.einsum("...ij,...jk,...kl->...il", isq, g2.values, isq)
    wm, qm = np.linalg.eigh(0.5 * (m + np.swapaxes(m, -1, -2)))
    if np.any(wm <= 0):
        raise StressError("second metric is not SPD")
    logm = np.einsum("...ij,...j,...kj->...ik", qm, np.log(wm), qm)
    delta = 0.5 * np.einsum("...ij,...jk,...kl->...il", sq, logm, sq)
    return LogStrain(delta_hat=0.5 * (delta + np.swapaxes(delta, -1, -2)))
