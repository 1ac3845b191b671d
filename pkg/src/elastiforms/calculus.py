"""Connection-based differential operators in the three representations.

The convective connection differentiates body tensors with the
Christoffel symbols of the current body metric; the spatial connection
acts in the ambient frame through the chain rule of the embedding; the
material connection mixes both: value (ambient) legs see the ambient
Christoffels composed with the embedding and contracted through F,
while body legs see the constant reference connection.

Exterior covariant derivatives differentiate the component fields of a
bundle-valued form as a collection of vectors/covectors (the value leg
alone feels the connection) and antisymmetrize over form indices; no
body metric enters, which is what keeps the material version intrinsic.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Grid
from .geometry import MetricField, christoffel, frame_gradient, make_metric
from .forms import (
    SLOTS,
    SLOT_INDEX,
    BundleValuedForm,
    FormError,
    exterior_derivative,
    interior_product,
)
from .config import Configuration, induced_metrics


class CalculusError(ValueError):
    pass


@dataclass
class TensorField:
    """Per-node tensor components with explicit index bookkeeping.

    ``index_kinds`` holds one ``(variance, leg)`` pair per component
    axis, variance in {"up", "down"}, leg in {"body", "spatial"}.
    """

    representation: str
    values: np.ndarray
    index_kinds: tuple

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim - 3 != len(self.index_kinds):
            raise CalculusError(
                f"{self.values.ndim - 3} component axes but {len(self.index_kinds)} index kinds"
            )


def vector_field(rep, values):
    leg = "spatial" if rep in ("spatial", "material") else "body"
    return TensorField(rep, values, (("up", leg),))


def covector_field(rep, values):
    leg = "spatial" if rep in ("spatial", "material") else "body"
    return TensorField(rep, values, (("down", leg),))


@dataclass
class ConnectionContext:
    """Everything needed to differentiate covariantly in one representation."""

    representation: str
    grid: Grid
    metric: MetricField
    config: Configuration = None
    ref_metric: MetricField = None
    gamma_value: np.ndarray = field(default=None, repr=False)
    gamma_body: np.ndarray = field(default=None, repr=False)
    scheme: str = "b2"

    def __post_init__(self):
        if self.representation in ("spatial", "material") and self.config is None:
            raise CalculusError(f"{self.representation} context needs a configuration")
        if self.gamma_value is None:
            f_inv = self.config.f_inv if self.representation in ("spatial", "material") else None
            self.gamma_value = christoffel(self.metric, self.grid, f_inv=f_inv)
        if self.representation == "material" and self.gamma_body is None:
            if self.ref_metric is None:
                raise CalculusError("material context needs the reference metric")
            self.gamma_body = christoffel(self.ref_metric, self.grid)
        if self.representation == "convective" and self.gamma_body is None:
            self.gamma_body = self.gamma_value

    def partials(self, values):
        """Component derivatives, last axis: ambient frame for spatial."""
        f_inv = self.config.f_inv if self.representation == "spatial" else None
        return frame_gradient(values, self.grid, f_inv=f_inv, scheme=self.scheme)

    def effective_gamma(self, leg):
        """Connection coefficients ``[i, d, m]`` seen by an index on ``leg``.

        ``d`` is the derivative index (ambient for the spatial
        representation, body otherwise).
        """
        if self.representation == "spatial":
            if leg != "spatial":
                raise CalculusError("spatial tensors have ambient legs only")
            return self.gamma_value
        if self.representation == "convective":
            if leg != "body":
                raise CalculusError("convective tensors have body legs only")
            return self.gamma_value
        if leg == "body":
            return self.gamma_body
        # material value leg: ambient symbols at image points through F
        return np.einsum("...jD,...ijm->...iDm", self.config.f, self.gamma_value)


def spatial_context(config):
    g_tilde = config.spatial_metric()
    return ConnectionContext("spatial", config.grid, g_tilde, config=config)


def convective_context(g_hat, grid):
    return ConnectionContext("convective", grid, g_hat)


def material_context(config, ref_metric):
    g_tilde = config.spatial_metric()
    return ConnectionContext("material", config.grid, g_tilde, config=config,
                             ref_metric=ref_metric)


def covariant_derivative(t, ctx):
    """One extra covariant index, prepended as the first component leg."""
    if t.representation != ctx.representation:
        raise CalculusError(
            f"field is {t.representation} but context is {ctx.representation}"
        )
    vals = t.values
    nrest = vals.ndim - 3
    grads = ctx.partials(vals)
    out = np.moveaxis(grads, -1, 3)
    for p, (variance, leg) in enumerate(t.index_kinds):
        gamma = ctx.effective_gamma(leg)
        if variance == "up":
            gam, sign = gamma, 1.0
        else:
            gam, sign = np.einsum("...mdi->...idm", gamma), -1.0
        moved = np.moveaxis(vals, 3 + p, -1)
        gam_rs = gam.reshape(gam.shape[:3] + (1,) * (nrest - 1) + (3, 3, 3))
        corr = np.einsum("...idm,...m->...id", gam_rs, moved)
        corr = np.moveaxis(corr, -1, 3)
        corr = np.moveaxis(corr, -1, 4 + p)
        out = out + sign * corr
    deriv_leg = "spatial" if ctx.representation == "spatial" else "body"
    return TensorField(t.representation, out, (("down", deriv_leg),) + tuple(t.index_kinds))


def divergence(t, ctx):
    """Trace of the covariant differential.

    The derivative index is contracted with the last contravariant index
    living on the same leg (ambient for spatial tensors, body for
    convective and material ones).
    """
    deriv_leg = "spatial" if ctx.representation == "spatial" else "body"
    target = None
    for p in range(len(t.index_kinds) - 1, -1, -1):
        if t.index_kinds[p] == ("up", deriv_leg):
            target = p
            break
    if target is None:
        raise CalculusError(f"no contravariant {deriv_leg} index to contract")
    cov = covariant_derivative(t, ctx)
    vals = np.trace(cov.values, axis1=3, axis2=4 + target)
    kinds = tuple(k for p, k in enumerate(t.index_kinds) if p != target)
    return TensorField(t.representation, vals, kinds)


def exterior_covariant_derivative(alpha, ctx):
    """Degree k -> k+1 on vector- or covector-valued forms.

    Component vector (or covector) fields are differentiated with the
    value-leg connection and antisymmetrized over the form indices.
    Scalar values reduce to the plain exterior derivative.
    """
    if alpha.degree == 3:
        raise FormError("no 4-forms on a 3-chart")
    if alpha.representation != ctx.representation:
        raise CalculusError(
            f"form is {alpha.representation} but context is {ctx.representation}"
        )
    if alpha.value_kind == "scalar":
        f_inv = ctx.config.f_inv if ctx.representation == "spatial" else None
        return exterior_derivative(alpha, ctx.grid, f_inv=f_inv)
    k = alpha.degree
    grads = ctx.partials(alpha.comps)  # (..., v, s, d)
    leg = "body" if ctx.representation == "convective" else "spatial"
    gamma = ctx.effective_gamma(leg)
    if alpha.value_kind == "vector":
        corr = np.einsum("...vdm,...ms->...vsd", gamma, alpha.comps)
    else:
        corr = -np.einsum("...mdv,...ms->...vsd", gamma, alpha.comps)
    dval = grads + corr
    out = np.zeros(alpha.comps.shape[:3] + (3, len(SLOTS[k + 1])))
    for im, c in enumerate(SLOTS[k + 1]):
        for j, cj in enumerate(c):
            rest = c[:j] + c[j + 1:]
            out[..., im] += (-1.0) ** j * dval[..., :, SLOT_INDEX[k][rest], cj]
    return BundleValuedForm(
        degree=k + 1,
        value_kind=alpha.value_kind,
        representation=alpha.representation,
        parity=alpha.parity,
        comps=out,
        over_map=alpha.over_map,
    )


def lie_derivative_form(v, alpha, grid, f_inv=None):
    """Homotopy-formula Lie derivative of a scalar k-form along v."""
    if alpha.value_kind != "scalar":
        raise FormError("lie_derivative_form acts on scalar-valued forms")
    k = alpha.degree
    parts = []
    if k < 3:
        parts.append(interior_product(v, exterior_derivative(alpha, grid, f_inv=f_inv)).comps)
    if k > 0:
        parts.append(exterior_derivative(interior_product(v, alpha), grid, f_inv=f_inv).comps)
    total = parts[0] if len(parts) == 1 else parts[0] + parts[1]
    return BundleValuedForm(k, "scalar", alpha.representation, alpha.parity,
                            total, alpha.over_map)


def material_time_derivative(field_fn, curve, t, dt=None, d_dt=None):
    """Covariant time derivative of a field over the motion.

    ``field_fn(t)`` returns either velocity-shaped samples ``(..., 3)``
    (ambient components over the embedding) or gradient-shaped samples
    ``(..., 3, 3)`` whose trailing axis is a body index; the connection
    correction then acts columnwise.  ``d_dt`` may supply the exact
    component time derivative; otherwise second-order central
    differencing with step ``dt`` is used.
    """
    dt = curve.dt if dt is None else dt
    if d_dt is None:
        d_dt = (np.asarray(field_fn(t + dt), dtype=float)
                - np.asarray(field_fn(t - dt), dtype=float)) / (2.0 * dt)
    z = np.asarray(field_fn(t), dtype=float)
    cfg = curve.configuration(t)
    g_tilde = cfg.spatial_metric()
    gamma = christoffel(g_tilde, curve.grid, f_inv=cfg.f_inv)
    v = curve.material_velocity(t)
    if z.ndim == 4:
        corr = np.einsum("...ijk,...j,...k->...i", gamma, v, z)
    elif z.ndim == 5:
        corr = np.einsum("...ijk,...j,...kI->...iI", gamma, v, z)
    else:
        raise CalculusError(f"unsupported field shape {z.shape}")
    return d_dt + corr


def acceleration_triplet(curve, t, dt=None):
    """Material, spatial and convective accelerations of a motion.

    The spatial field is assembled from its own formula (fixed-point
    time derivative plus self-advection) on the pulled-back sampling;
    the convective one uses the body connection of the current induced
    metric.
    """
    dt = curve.dt if dt is None else dt
    cfg = curve.configuration(t)
    grid = curve.grid
    v_tilde = curve.material_velocity(t)
    vdot = curve.material_acceleration_components(t)

    g_tilde = cfg.spatial_metric()
    gamma = christoffel(g_tilde, grid, f_inv=cfg.f_inv)
    a_material = vdot + np.einsum("...ijk,...j,...k->...i", gamma, v_tilde, v_tilde)

    # spatial: d_t v at fixed x = (stored rate) - advective part
    sctx = spatial_context(cfg)
    grad_v = covariant_derivative(vector_field("spatial", v_tilde), sctx).values
    dv_frame = frame_gradient(v_tilde, grid, f_inv=cfg.f_inv)
    dt_v_fixed = vdot - np.einsum("...m,...im->...i", v_tilde, dv_frame)
    a_spatial = dt_v_fixed + np.einsum("...m,...mi->...i", v_tilde, grad_v)

    def v_hat_at(s):
        c = curve.configuration(s)
        return np.einsum("...Ii,...i->...I", c.f_inv, curve.material_velocity(s))

    v_hat = v_hat_at(t)
    vhat_dot = (v_hat_at(t + dt) - v_hat_at(t - dt)) / (2.0 * dt)
    g_hat, _ = induced_metrics(cfg)
    cctx = convective_context(g_hat, grid)
    grad_vhat = covariant_derivative(vector_field("convective", v_hat), cctx).values
    a_convective = vhat_dot + np.einsum("...M,...MI->...I", v_hat, grad_vhat)
    return a_material, a_spatial, a_convective
