"""Charts, structured grids, finite-difference stencils and quadrature.

The body is discretized on a uniform tensor-product lattice over a
rectangular chart.  All derivative stencils are second order (central in
the interior, one-sided on the boundary) and therefore exact on
polynomials of degree <= 2.  Quadrature is the product trapezoidal rule,
exact on integrands that are multilinear in the chart coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

CARTESIAN = "cartesian"
CYLINDRICAL = "cylindrical"

#: minimum nodes per axis: central stencils plus one-sided closures
MIN_NODES = 5


class GridError(ValueError):
    """Configuration error in chart or grid construction."""


@dataclass(frozen=True)
class Chart:
    """A rectangular coordinate chart.

    Parameters
    ----------
    name : str
        Identifier used in reports and serialized files.
    ranges : tuple
        Three ``(lo, hi)`` pairs, one per coordinate axis.
    coordinate_system : str
        ``"cartesian"`` or ``"cylindrical"``.  Only meaningful for the
        ambient chart; cylindrical charts read the first coordinate as
        the radius.
    """

    name: str
    ranges: tuple = ((0.0, 1.0), (0.0, 1.0), (0.0, 1.0))
    coordinate_system: str = CARTESIAN

    def __post_init__(self):
        if len(self.ranges) != 3:
            raise GridError("charts are three-dimensional; got %d ranges" % len(self.ranges))
        for lo, hi in self.ranges:
            if not lo < hi:
                raise GridError(f"degenerate range [{lo}, {hi}]")
        if self.coordinate_system not in (CARTESIAN, CYLINDRICAL):
            raise GridError(f"unknown coordinate system {self.coordinate_system!r}")


def unit_cube(name="body"):
    return Chart(name=name, ranges=((0.0, 1.0), (0.0, 1.0), (0.0, 1.0)))


@dataclass(frozen=True)
class Grid:
    """Uniform lattice over a chart.

    ``orientation`` is the sign of the chart orientation relative to the
    coordinate order; integrals of (pseudo) form densities pick it up.
    """

    chart: Chart
    resolution: tuple
    orientation: int = 1
    axes: tuple = field(init=False, repr=False)
    spacing: tuple = field(init=False)

    def __post_init__(self):
        if len(self.resolution) != 3:
            raise GridError("resolution must have three entries")
        for n in self.resolution:
            if n < MIN_NODES:
                raise GridError(f"need at least {MIN_NODES} nodes per axis, got {n}")
        axes = tuple(
            np.linspace(lo, hi, n)
            for (lo, hi), n in zip(self.chart.ranges, self.resolution)
        )
        spacing = tuple(ax[1] - ax[0] for ax in axes)
        object.__setattr__(self, "axes", axes)
        object.__setattr__(self, "spacing", spacing)

    @property
    def shape(self):
        return tuple(self.resolution)

    def nodes(self):
        """Node coordinates, shape ``(n1, n2, n3, 3)``."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def boundary_mask(self):
        """Boolean mask of boundary nodes."""
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(3):
            idx = [slice(None)] * 3
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask

    def interior_mask(self):
        return ~self.boundary_mask()

    def faces(self):
        """All six boundary faces as ``(axis, side)`` pairs, side in {0, 1}."""
        return [(axis, side) for axis in range(3) for side in (0, 1)]

    def face_slice(self, axis, side):
        """Index expression selecting the nodes of one boundary face."""
        idx = [slice(None)] * 3
        idx[axis] = 0 if side == 0 else -1
        return tuple(idx)

    def with_orientation(self, orientation):
        return replace(self, orientation=orientation)

    def h_max(self):
        return max(self.spacing)


def build_grid(chart, resolution):
    """Validate and build a grid; ``resolution`` is a per-axis node count."""
    return Grid(chart=chart, resolution=tuple(int(n) for n in resolution))


@dataclass
class SampledField:
    """Per-node component samples of a field over a grid.

    ``values`` has the three node axes first, then any component axes.
    Mostly an interchange record for serialization: the numerical kernels
    below operate on the bare arrays.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[:3] != self.grid.shape:
            raise GridError(
                f"values shape {self.values.shape} does not start with grid shape {self.grid.shape}"
            )
        if not np.all(np.isfinite(self.values)):
            raise GridError("field contains non-finite values")

    @property
    def component_shape(self):
        return self.values.shape[3:]


def partial_derivative(values, grid, axis, scheme="b2"):
    """Second-order chart derivative along a node axis.

    Central differences in the interior.  Boundary planes use the
    three-point one-sided stencil (``scheme="b2"``, second order, exact
    on quadratics) or the two-point one-sided stencil (``scheme="sbp"``)
    whose pairing with the trapezoidal weights telescopes exactly; the
    time steppers use the latter so semi-discrete energy balance holds
    to integrator accuracy.  Linear in the input; component axes
    (anything beyond the first three) are carried along unchanged.
    """
    values = np.asarray(values, dtype=float)
    if axis not in (0, 1, 2):
        raise GridError(f"axis must be 0, 1 or 2, got {axis}")
    if scheme not in ("b2", "sbp"):
        raise GridError(f"unknown derivative scheme {scheme!r}")
    h = grid.spacing[axis]
    out = np.empty_like(values)

    def sl(i):
        idx = [slice(None)] * values.ndim
        idx[axis] = i
        return tuple(idx)

    interior = [slice(None)] * values.ndim
    interior[axis] = slice(1, -1)
    lo = [slice(None)] * values.ndim
    lo[axis] = slice(2, None)
    hi = [slice(None)] * values.ndim
    hi[axis] = slice(None, -2)
    out[tuple(interior)] = (values[tuple(lo)] - values[tuple(hi)]) / (2.0 * h)

    if scheme == "b2":
        out[sl(0)] = (-3.0 * values[sl(0)] + 4.0 * values[sl(1)] - values[sl(2)]) / (2.0 * h)
        out[sl(-1)] = (3.0 * values[sl(-1)] - 4.0 * values[sl(-2)] + values[sl(-3)]) / (2.0 * h)
    else:
        out[sl(0)] = (values[sl(1)] - values[sl(0)]) / h
        out[sl(-1)] = (values[sl(-1)] - values[sl(-2)]) / h
    return out


def chart_gradient(values, grid):
    """Stack of the three chart derivatives, last component axis first.

    Returns an array of shape ``(3,) + values.shape``.
    """
    return np.stack([partial_derivative(values, grid, a) for a in range(3)])


def _trapz_weights(n, h):
    w = np.full(n, h)
    w[0] = 0.5 * h
    w[-1] = 0.5 * h
    return w


def integrate_interior(density, grid):
    """Product trapezoidal quadrature of a top-form density.

    ``density`` holds the single chart component of a 3-form sampled on
    the nodes.  The result carries the grid orientation sign.
    """
    density = np.asarray(density, dtype=float)
    if density.shape != grid.shape:
        raise GridError(f"density shape {density.shape} != grid shape {grid.shape}")
    acc = density
    for axis in range(2, -1, -1):
        w = _trapz_weights(grid.resolution[axis], grid.spacing[axis])
        acc = np.tensordot(acc, w, axes=([axis], [0]))
    return grid.orientation * float(acc)


# Sorted index pair tangent to a face with normal along `axis`, and the sign
# eps[axis, pair] relating it to the ambient orientation.
FACE_PAIR = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
FACE_PAIR_SIGN = {0: 1.0, 1: -1.0, 2: 1.0}


def integrate_face(face_values, grid, axis):
    """Trapezoidal quadrature over one face, no orientation bookkeeping."""
    b, c = FACE_PAIR[axis]
    wb = _trapz_weights(grid.resolution[b], grid.spacing[b])
    wc = _trapz_weights(grid.resolution[c], grid.spacing[c])
    return float(np.einsum("bc,b,c->", face_values, wb, wc))


def integrate_boundary(face_data, grid):
    """Oriented boundary quadrature of a 2-form restriction.

    ``face_data`` maps each ``(axis, side)`` face to the 2D samples of
    the surviving 2-form component (the sorted pair of axes tangent to
    that face).  Orientation is induced by the outward normal: the
    result is ``sum_faces sign * trapz2d`` with ``sign = +eps`` on the
    upper face and ``-eps`` on the lower one.
    """
    total = 0.0
    for axis in range(3):
        for side in (0, 1):
            key = (axis, side)
            if key not in face_data:
                raise GridError(f"missing boundary data for face {key}")
            outward = 1.0 if side == 1 else -1.0
            total += outward * FACE_PAIR_SIGN[axis] * integrate_face(
                np.asarray(face_data[key], dtype=float), grid, axis
            )
    return grid.orientation * total
