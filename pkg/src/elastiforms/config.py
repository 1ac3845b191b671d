"""Embeddings, deformation gradients, induced metrics and motions.

Spatial fields never live on their own grid: they are sampled at image
points ``x = phi(X)`` and indexed by the body lattice ("pulled-back
sampling").  The deformation gradient provides the chain rule for every
ambient-frame derivative, so the inverse map is never constructed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import Chart, Grid, partial_derivative
from .geometry import GeometryError, MetricField, ambient_metric_at, make_metric
from .forms import BundleValuedForm, slots_to_full, full_to_slots

REPRESENTATION_TAGS = ("spatial", "material", "convective")


class ConfigurationError(ValueError):
    pass


@dataclass
class Configuration:
    """One placement of the body in the ambient chart.

    ``f`` and ``f_inv`` are the per-node deformation gradient and its
    inverse (indexed ``[i, I]`` and ``[I, i]``); ``det_f > 0`` everywhere
    for an orientation-preserving embedding.  ``jac`` is the metric
    volume ratio: ``det_f`` times the ratio of ambient to reference
    volume densities.
    """

    grid: Grid
    ambient_chart: Chart
    phi: np.ndarray
    f: np.ndarray
    f_inv: np.ndarray
    det_f: np.ndarray
    jac: np.ndarray
    time_tag: float = 0.0
    g_spatial: MetricField = field(default=None, repr=False)

    def spatial_metric(self):
        """Ambient metric sampled at the image points (lazy)."""
        if self.g_spatial is None:
            comps = ambient_metric_at(self.ambient_chart, self.phi)
            self.g_spatial = make_metric("material", comps, check=False)
        return self.g_spatial


def identity_configuration(grid, ambient_chart=None, t=0.0):
    chart = ambient_chart if ambient_chart is not None else grid.chart
    nodes = grid.nodes()
    eye = np.broadcast_to(np.eye(3), grid.shape + (3, 3)).copy()
    ones = np.ones(grid.shape)
    return Configuration(
        grid=grid, ambient_chart=chart, phi=nodes,
        f=eye, f_inv=eye.copy(), det_f=ones, jac=ones.copy(), time_tag=t,
    )


def deformation_gradient(phi, grid, ambient_chart, analytic_f=None, t=0.0,
                         ref_sqrt_det=None, scheme="b2"):
    """Assemble a configuration from embedding samples.

    ``analytic_f`` bypasses the finite-difference gradient when a closed
    form is available.  ``ref_sqrt_det`` is the reference volume density
    used for the Jacobian; by default the ambient metric evaluated on
    the body lattice (identity reference placement).
    """
    phi = np.asarray(phi, dtype=float)
    if phi.shape != grid.shape + (3,):
        raise ConfigurationError(f"phi must be sampled on the grid, got shape {phi.shape}")
    if analytic_f is not None:
        f = np.asarray(analytic_f, dtype=float)
    else:
        f = np.stack([partial_derivative(phi, grid, a, scheme=scheme) for a in range(3)],
                     axis=-1)
    det_f = np.linalg.det(f)
    if np.any(det_f <= 0.0):
        bad = np.unravel_index(int(np.argmin(det_f)), det_f.shape)
        raise ConfigurationError(
            f"orientation not preserved: det F = {det_f.min():.3e} at node {bad}"
        )
    f_inv = np.linalg.inv(f)
    g_img = ambient_metric_at(ambient_chart, phi)
    if ref_sqrt_det is None:
        ref_sqrt_det = np.sqrt(np.linalg.det(ambient_metric_at(ambient_chart, grid.nodes())))
    jac = det_f * np.sqrt(np.linalg.det(g_img)) / ref_sqrt_det
    return Configuration(
        grid=grid, ambient_chart=ambient_chart, phi=phi,
        f=f, f_inv=f_inv, det_f=det_f, jac=jac, time_tag=t,
    )


def induced_metrics(config, check=True):
    """Convective and material metrics induced by a configuration.

    Returns ``(g_hat, g_tilde)``: the body metric ``F^T (g o phi) F``
    and the ambient metric at image points.  ``check=False`` skips the
    SPD eigenvalue screen (time-stepping loops, where det F > 0 already
    guarantees it).
    """
    g_tilde = config.spatial_metric()
    comps = np.einsum("...iI,...ij,...jJ->...IJ", config.f, g_tilde.values, config.f)
    try:
        g_hat = make_metric("convective", comps, check=check)
    except GeometryError as exc:  # pragma: no cover - cannot occur for det F > 0
        raise ConfigurationError(f"induced metric not SPD: {exc}") from exc
    return g_hat, g_tilde


# ---------------------------------------------------------------------------
# per-leg pullbacks and pushforwards


def _transform_form_leg(comps, degree, mat):
    """Contract each form index with ``mat[new, old]``."""
    if degree == 0:
        return comps.copy()
    full = slots_to_full(degree, comps)
    mat_b = mat.reshape(mat.shape[:3] + (1,) * (full.ndim - 4) + (3, 3))
    for pos in range(degree):
        axis = full.ndim - degree + pos
        full = np.moveaxis(
            np.einsum("...o,...no->...n", np.moveaxis(full, axis, -1), mat_b),
            -1, axis,
        )
    return full_to_slots(degree, full)


def pull_form_leg(alpha, config):
    """Spatial -> material: contract form indices with F, keep the value leg."""
    if alpha.representation != "spatial":
        raise ConfigurationError("pull_form_leg expects a spatial form")
    mat = np.swapaxes(config.f, -1, -2)  # [A, a] = F^a_A
    comps = _transform_form_leg(alpha.comps, alpha.degree, mat)
    return BundleValuedForm(alpha.degree, alpha.value_kind, "material",
                            alpha.parity, comps, over_map=config)


def push_form_leg(alpha, config):
    """Material -> spatial: inverse of :func:`pull_form_leg`."""
    if alpha.representation != "material":
        raise ConfigurationError("push_form_leg expects a material form")
    mat = np.swapaxes(config.f_inv, -1, -2)  # [a, A] = (F^-1)^A_a
    comps = _transform_form_leg(alpha.comps, alpha.degree, mat)
    return BundleValuedForm(alpha.degree, alpha.value_kind, "spatial",
                            alpha.parity, comps, over_map=None)


def pull_value_leg(alpha, config):
    """Material -> convective: contract the value leg through F.

    Vector values go through ``F^{-1}``, covector values through ``F``;
    the form leg is untouched.
    """
    if alpha.representation != "material":
        raise ConfigurationError("pull_value_leg expects a material form")
    if alpha.value_kind == "vector":
        comps = np.einsum("...Ii,...is->...Is", config.f_inv, alpha.comps)
    elif alpha.value_kind == "covector":
        comps = np.einsum("...iI,...is->...Is", config.f, alpha.comps)
    else:
        comps = alpha.comps.copy()
    return BundleValuedForm(alpha.degree, alpha.value_kind, "convective",
                            alpha.parity, comps, over_map=None)


def push_value_leg(alpha, config):
    """Convective -> material: inverse of :func:`pull_value_leg`."""
    if alpha.representation != "convective":
        raise ConfigurationError("push_value_leg expects a convective form")
    if alpha.value_kind == "vector":
        comps = np.einsum("...iI,...Is->...is", config.f, alpha.comps)
    elif alpha.value_kind == "covector":
        comps = np.einsum("...Ii,...Is->...is", config.f_inv, alpha.comps)
    else:
        comps = alpha.comps.copy()
    return BundleValuedForm(alpha.degree, alpha.value_kind, "material",
                            alpha.parity, comps, over_map=config)


def full_pullback(alpha, config):
    """Spatial -> convective on both legs."""
    return pull_value_leg(pull_form_leg(alpha, config), config)


def full_pushforward(alpha, config):
    return push_form_leg(push_value_leg(alpha, config), config)


# ---------------------------------------------------------------------------
# motions


@dataclass
class Motion:
    """Analytic one-parameter family of embeddings.

    ``phi(points, t)`` is mandatory; ``velocity``, ``gradient`` and
    ``acceleration`` are optional closed forms (components of d/dt phi,
    dphi/dX and d^2/dt^2 phi).
    """

    name: str
    phi: callable
    velocity: callable = None
    gradient: callable = None
    acceleration: callable = None


def translation_motion(b=(1.0, 0.0, 0.0)):
    b = np.asarray(b, dtype=float)

    def phi(x, t):
        return x + t * b

    def vel(x, t):
        return np.broadcast_to(b, x.shape).copy()

    def grad(x, t):
        return np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3)).copy()

    def acc(x, t):
        return np.zeros_like(x)

    return Motion("translation", phi, vel, grad, acc)


def _rotation_matrix(axis, angle):
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    k = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])
    return np.eye(3) + np.sin(angle) * k + (1.0 - np.cos(angle)) * (k @ k)


def rigid_motion(omega=1.0, axis=(0.0, 0.0, 1.0), translation=(0.0, 0.0, 0.0),
                 center=(0.5, 0.5, 0.5)):
    """Rotation at constant rate about an axis through ``center`` plus a drift."""
    b = np.asarray(translation, dtype=float)
    c = np.asarray(center, dtype=float)
    u = np.asarray(axis, dtype=float)
    u = u / np.linalg.norm(u)
    k = np.array([[0.0, -u[2], u[1]], [u[2], 0.0, -u[0]], [-u[1], u[0], 0.0]])

    def phi(x, t):
        r = _rotation_matrix(u, omega * t)
        return (x - c) @ r.T + c + t * b

    def vel(x, t):
        r = _rotation_matrix(u, omega * t)
        rdot = omega * (k @ r)
        return (x - c) @ rdot.T + b

    def grad(x, t):
        r = _rotation_matrix(u, omega * t)
        return np.broadcast_to(r, x.shape[:-1] + (3, 3)).copy()

    def acc(x, t):
        r = _rotation_matrix(u, omega * t)
        rdd = (omega ** 2) * (k @ k @ r)
        return (x - c) @ rdd.T

    return Motion("rigid", phi, vel, grad, acc)


def dilation_motion(rate=1.0):
    def phi(x, t):
        return (1.0 + rate * t) * x

    def vel(x, t):
        return rate * x

    def grad(x, t):
        return np.broadcast_to((1.0 + rate * t) * np.eye(3), x.shape[:-1] + (3, 3)).copy()

    def acc(x, t):
        return np.zeros_like(x)

    return Motion("dilation", phi, vel, grad, acc)


def shear_motion(rate=0.3):
    def phi(x, t):
        out = x.copy()
        out[..., 0] = x[..., 0] + rate * t * x[..., 1]
        return out

    def vel(x, t):
        out = np.zeros_like(x)
        out[..., 0] = rate * x[..., 1]
        return out

    def grad(x, t):
        f = np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3)).copy()
        f[..., 0, 1] = rate * t
        return f

    def acc(x, t):
        return np.zeros_like(x)

    return Motion("shear", phi, vel, grad, acc)


def bump_motion(amplitude=0.05, frequency=1.0, wavenumber=np.pi):
    """Smooth large-support deformation oscillating in time.

    ``wavenumber`` sets the spatial scale of the shape; moderate values
    keep second-order stencils in their asymptotic range on coarse
    lattices.
    """
    w = wavenumber

    def shape_fn(x):
        s = np.zeros_like(x)
        s[..., 0] = np.sin(w * x[..., 0]) * np.cos(0.5 * w * x[..., 1])
        s[..., 1] = np.sin(w * x[..., 1]) * np.cos(0.5 * w * x[..., 2])
        s[..., 2] = np.sin(w * x[..., 2]) * np.cos(0.5 * w * x[..., 0])
        return s

    def shape_grad(x):
        g = np.zeros(x.shape[:-1] + (3, 3))
        g[..., 0, 0] = w * np.cos(w * x[..., 0]) * np.cos(0.5 * w * x[..., 1])
        g[..., 0, 1] = -0.5 * w * np.sin(w * x[..., 0]) * np.sin(0.5 * w * x[..., 1])
        g[..., 1, 1] = w * np.cos(w * x[..., 1]) * np.cos(0.5 * w * x[..., 2])
        g[..., 1, 2] = -0.5 * w * np.sin(w * x[..., 1]) * np.sin(0.5 * w * x[..., 2])
        g[..., 2, 2] = w * np.cos(w * x[..., 2]) * np.cos(0.5 * w * x[..., 0])
        g[..., 2, 0] = -0.5 * w * np.sin(w * x[..., 2]) * np.sin(0.5 * w * x[..., 0])
        return g

    def phi(x, t):
        return x + amplitude * np.sin(frequency * t) * shape_fn(x)

    def vel(x, t):
        return amplitude * frequency * np.cos(frequency * t) * shape_fn(x)

    def grad(x, t):
        eye = np.broadcast_to(np.eye(3), x.shape[:-1] + (3, 3))
        return eye + amplitude * np.sin(frequency * t) * shape_grad(x)

    def acc(x, t):
        return -amplitude * frequency ** 2 * np.sin(frequency * t) * shape_fn(x)

    return Motion("bump", phi, vel, grad, acc)


MOTION_LIBRARY = {
    "translation": translation_motion,
    "rigid": rigid_motion,
    "dilation": dilation_motion,
    "shear": shear_motion,
    "bump": bump_motion,
}


@dataclass
class MotionCurve:
    """A motion sampled over a body grid in a fixed ambient chart."""

    grid: Grid
    ambient_chart: Chart
    motion: Motion
    dt: float = 1e-3
    use_analytic_gradient: bool = True
    ref_sqrt_det: np.ndarray = None

    def __post_init__(self):
        if self.ref_sqrt_det is None:
            g0 = ambient_metric_at(self.ambient_chart, self.motion.phi(self.grid.nodes(), 0.0))
            f0 = self._gradient(0.0)
            self.ref_sqrt_det = np.abs(np.linalg.det(f0)) * np.sqrt(np.linalg.det(g0))

    def _gradient(self, t):
        nodes = self.grid.nodes()
        if self.use_analytic_gradient and self.motion.gradient is not None:
            return self.motion.gradient(nodes, t)
        return np.stack(
            [partial_derivative(self.motion.phi(nodes, t), self.grid, a) for a in range(3)],
            axis=-1,
        )

    def configuration(self, t):
        nodes = self.grid.nodes()
        phi = self.motion.phi(nodes, t)
        analytic = self._gradient(t) if (self.use_analytic_gradient and self.motion.gradient is not None) else None
        return deformation_gradient(
            phi, self.grid, self.ambient_chart, analytic_f=analytic, t=t,
            ref_sqrt_det=self.ref_sqrt_det,
        )

    def material_velocity(self, t):
        nodes = self.grid.nodes()
        if self.motion.velocity is not None:
            return self.motion.velocity(nodes, t)
        return (self.motion.phi(nodes, t + self.dt) - self.motion.phi(nodes, t - self.dt)) / (2.0 * self.dt)

    def material_acceleration_components(self, t):
        """d/dt of the stored velocity components at fixed body point."""
        nodes = self.grid.nodes()
        if self.motion.acceleration is not None:
            return self.motion.acceleration(nodes, t)
        return (
            self.material_velocity(t + self.dt) - self.material_velocity(t - self.dt)
        ) / (2.0 * self.dt)

    def reference_metric(self):
        """G = pullback of the ambient metric at t = 0."""
        cfg0 = self.configuration(0.0)
        g_hat0, _ = induced_metrics(cfg0)
        return make_metric("reference", g_hat0.values)


def velocity_triplet(curve, t):
    """Material, spatial and convective velocities at time t.

    The spatial field is returned in pulled-back sampling, so its
    components coincide with the material ones; the convective field is
    ``F^{-1}`` times the material one.
    """
    cfg = curve.configuration(t)
    v_tilde = curve.material_velocity(t)
    v_spatial = v_tilde.copy()
    v_hat = np.einsum("...Ii,...i->...I", cfg.f_inv, v_tilde)
    return v_tilde, v_spatial, v_hat, cfg


def metric_norm_equality_residual(curve, t):
    """Max-node defect of the kinetic-metric equality across representations."""
    v_tilde, _, v_hat, cfg = velocity_triplet(curve, t)
    g_hat, g_tilde = induced_metrics(cfg)
    lhs = np.einsum("...ij,...i,...j->...", g_tilde.values, v_tilde, v_tilde)
    rhs = np.einsum("...IJ,...I,...J->...", g_hat.values, v_hat, v_hat)
    return float(np.max(np.abs(lhs - rhs)))
