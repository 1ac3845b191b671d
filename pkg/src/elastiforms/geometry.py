"""Riemannian metric fields and the operations they induce.

Metrics are stored as per-node symmetric 3x3 matrices.  A metric tagged
``spatial`` or ``material`` lives at image points of the embedding and
its chart derivatives go through the inverse deformation gradient
(chain rule); ``convective`` and ``reference`` metrics are differentiated
directly in body coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import CARTESIAN, CYLINDRICAL, Grid, chart_gradient, GridError

SPD_EIG_FLOOR = 1e-10

REPRESENTATIONS = ("spatial", "material", "convective", "reference")


class GeometryError(ValueError):
    pass


def frame_gradient(values, grid, f_inv=None, scheme="b2"):
    """Derivatives of per-node components in the relevant frame.

    Returns an array shaped ``values.shape + (3,)`` with the derivative
    axis last.  Without ``f_inv`` this is the chart derivative; with the
    inverse deformation gradient ``f_inv`` (shape ``(n1,n2,n3,3,3)``,
    indexed ``[I, i]``) the stored samples are read as a field at image
    points and the ambient derivative is obtained by the chain rule
    ``d/dx^i = (F^-1)^I_i d/dX^I``.
    """
    values = np.asarray(values, dtype=float)
    grads = np.stack([_pd(values, grid, a, scheme) for a in range(3)], axis=-1)
    if f_inv is None:
        return grads
    ncomp = values.ndim - 3
    finv = f_inv.reshape(f_inv.shape[:3] + (1,) * ncomp + (3, 3))
    return np.einsum("...I,...Ii->...i", grads, finv)


def _pd(values, grid, axis, scheme="b2"):
    from .grid import partial_derivative

    return partial_derivative(values, grid, axis, scheme=scheme)


@dataclass
class MetricField:
    """SPD (0,2) tensor field with derived inverse and volume density."""

    representation: str
    values: np.ndarray
    inv: np.ndarray
    sqrt_det: np.ndarray

    def raise_index(self, w):
        """g^{ij} w_j for per-node covectors ``w``."""
        return np.einsum("...ij,...j->...i", self.inv, w)

    def lower_index(self, v):
        return np.einsum("...ij,...j->...i", self.values, v)


def make_metric(representation, components, check=True):
    """Build a metric field, enforcing exact symmetry and SPD-ness.

    ``check=False`` skips the eigenvalue screen (hot loops whose inputs
    are SPD by construction); positivity of the determinant is still
    required for the volume density.
    """
    if representation not in REPRESENTATIONS:
        raise GeometryError(f"unknown representation {representation!r}")
    g = np.asarray(components, dtype=float)
    if g.shape[-2:] != (3, 3):
        raise GeometryError("metric components must be per-node 3x3 matrices")
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    if check:
        eigvals = np.linalg.eigvalsh(g).min(axis=-1)
        if float(eigvals.min()) <= SPD_EIG_FLOOR:
            bad = np.unravel_index(int(np.argmin(eigvals)), eigvals.shape)
            raise GeometryError(f"metric not SPD at node {bad}: min eigenvalue {eigvals.min():.3e}")
    det = np.linalg.det(g)
    if not check and np.any(det <= 0):
        raise GeometryError("metric determinant not positive")
    inv = np.linalg.inv(g)
    sqrt_det = np.sqrt(det)
    return MetricField(representation=representation, values=g, inv=inv, sqrt_det=sqrt_det)


def ambient_metric_at(chart, points):
    """Ambient metric components evaluated at coordinate triples.

    Cartesian charts are Euclidean; cylindrical charts read the first
    coordinate as the radius, giving ``diag(1, r^2, 1)``.
    """
    points = np.asarray(points, dtype=float)
    base = points.shape[:-1]
    g = np.zeros(base + (3, 3))
    g[..., 0, 0] = 1.0
    g[..., 2, 2] = 1.0
    if chart.coordinate_system == CARTESIAN:
        g[..., 1, 1] = 1.0
    elif chart.coordinate_system == CYLINDRICAL:
        r = points[..., 0]
        if np.any(r <= 0):
            raise GeometryError("cylindrical chart requires a positive radius coordinate")
        g[..., 1, 1] = r ** 2
    else:
        raise GridError(f"unknown coordinate system {chart.coordinate_system!r}")
    return g


def christoffel(metric, grid, f_inv=None):
    """Christoffel symbols of a metric field, shape ``(n1,n2,n3,3,3,3)``.

    Indexed ``[k, i, j]`` for ``Gamma^k_{ij}``, computed with the Koszul
    formula from finite-difference derivatives of the samples.  Pass
    ``f_inv`` when the metric is stored in pulled-back sampling so the
    derivatives act in the ambient frame.
    """
    dg = frame_gradient(metric.values, grid, f_inv=f_inv)  # [..., i, j, k] = d_k g_ij
    # Gamma^k_ij = 1/2 g^{kl} (d_i g_lj + d_j g_il - d_l g_ij)
    bracket = (
        np.einsum("...lji->...lij", dg)
        + np.einsum("...ilj->...lij", dg)
        - np.einsum("...ijl->...lij", dg)
    )
    gamma = 0.5 * np.einsum("...kl,...lij->...kij", metric.inv, bracket)
    return gamma


def raise_lower(tensor, metric, leg, direction):
    """Contract one index of a per-node tensor with g or its inverse.

    ``leg`` counts component axes (0 is the first axis after the node
    axes); ``direction`` is ``"flat"`` to lower or ``"sharp"`` to raise.
    """
    t = np.asarray(tensor, dtype=float)
    ncomp = t.ndim - 3
    if not 0 <= leg < ncomp:
        raise GeometryError(f"tensor has {ncomp} component legs, requested leg {leg}")
    if direction == "flat":
        mat = metric.values
    elif direction == "sharp":
        mat = metric.inv
    else:
        raise GeometryError("direction must be 'flat' or 'sharp'")
    axis = 3 + leg
    moved = np.moveaxis(t, axis, -1)
    mat_b = mat.reshape(mat.shape[:3] + (1,) * (ncomp - 1) + (3, 3))
    out = np.einsum("...j,...ij->...i", moved, mat_b)
    return np.moveaxis(out, -1, axis)


@dataclass
class VolumePseudoForm:
    """Top-form density sqrt(det g) in the chart; always pseudo."""

    density: np.ndarray
    parity: str = "pseudo"


def volume_form(metric):
    return VolumePseudoForm(density=metric.sqrt_det.copy())


def lie_derivative_metric(v, metric, grid, f_inv=None):
    """(L_v g)_{ij} = v^k d_k g_ij + g_kj d_i v^k + g_ik d_j v^k."""
    dg = frame_gradient(metric.values, grid, f_inv=f_inv)
    dv = frame_gradient(v, grid, f_inv=f_inv)  # [..., k, i] = d_i v^k
    out = (
        np.einsum("...k,...ijk->...ij", v, dg)
        + np.einsum("...kj,...ki->...ij", metric.values, dv)
        + np.einsum("...ik,...kj->...ij", metric.values, dv)
    )
    return 0.5 * (out + np.swapaxes(out, -1, -2))


def killing_residual(v, metric, grid, f_inv=None):
    """Max-norm of the metric Lie derivative; zero for isometry generators."""
    return float(np.max(np.abs(lie_derivative_metric(v, metric, grid, f_inv=f_inv))))
