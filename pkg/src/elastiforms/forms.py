"""Bundle-valued differential forms with explicit form-leg/value-leg split.

A form of degree k carries one vector/covector/scalar value index and k
antisymmetric form indices.  Only sorted form-index tuples are stored
(1, 3, 3, 1 slots for k = 0..3), so antisymmetry is exact by
construction.  Components sit in an array of shape
``(n1, n2, n3, nval, nslots)``.

Orientation-sensitive quantities (mass, momentum, stress) are tagged
``pseudo`` and negate their stored components under an orientation
reversal; the tag propagates through products by parity XOR.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .grid import Grid, integrate_interior
from .geometry import MetricField, frame_gradient

SLOTS = {
    0: ((),),
    1: ((0,), (1,), (2,)),
    2: ((0, 1), (0, 2), (1, 2)),
    3: ((0, 1, 2),),
}
SLOT_INDEX = {k: {t: i for i, t in enumerate(SLOTS[k])} for k in SLOTS}

VALUE_KINDS = ("vector", "covector", "scalar")
PARITIES = ("true", "pseudo")

# Levi-Civita symbol
EPS = np.zeros((3, 3, 3))
for _p in itertools.permutations(range(3)):
    _sgn = 1.0
    _lst = list(_p)
    for _i in range(3):
        for _j in range(_i + 1, 3):
            if _lst[_i] > _lst[_j]:
                _sgn = -_sgn
    EPS[_p] = _sgn


class FormError(ValueError):
    pass


def _merge_sign(s, t):
    """Sign of sorting the concatenation of two disjoint sorted tuples."""
    if set(s) & set(t):
        return None, 0.0
    concat = s + t
    sign = 1.0
    for i in range(len(concat)):
        for j in range(i + 1, len(concat)):
            if concat[i] > concat[j]:
                sign = -sign
    return tuple(sorted(concat)), sign


def _merge_table(k, l):
    table = []
    for ia, s in enumerate(SLOTS[k]):
        for ib, t in enumerate(SLOTS[l]):
            merged, sign = _merge_sign(s, t)
            if merged is not None:
                table.append((ia, ib, SLOT_INDEX[k + l][merged], sign))
    return tuple(table)


MERGE = {(k, l): _merge_table(k, l) for k in range(4) for l in range(4) if k + l <= 3}


@dataclass
class BundleValuedForm:
    """Degree-k form with a vector, covector or scalar value leg."""

    degree: int
    value_kind: str
    representation: str
    parity: str
    comps: np.ndarray
    over_map: object = None

    def __post_init__(self):
        if self.degree not in (0, 1, 2, 3):
            raise FormError(f"degree must be 0..3, got {self.degree}")
        if self.value_kind not in VALUE_KINDS:
            raise FormError(f"unknown value kind {self.value_kind!r}")
        if self.parity not in PARITIES:
            raise FormError(f"unknown parity {self.parity!r}")
        nval = 1 if self.value_kind == "scalar" else 3
        nslots = len(SLOTS[self.degree])
        self.comps = np.asarray(self.comps, dtype=float)
        if self.comps.shape[-2:] != (nval, nslots):
            raise FormError(
                f"component shape {self.comps.shape[-2:]} does not match "
                f"(value={nval}, slots={nslots}) for degree {self.degree}"
            )
        if (self.representation == "material" and self.value_kind != "scalar"
                and self.over_map is None):
            raise FormError("material forms must carry their configuration (over_map)")

    @property
    def density(self):
        """Single chart component of a scalar top-form."""
        if self.degree != 3 or self.value_kind != "scalar":
            raise FormError("density is defined for scalar 3-forms only")
        return self.comps[..., 0, 0]


def scalar_form(degree, comps, representation, parity="true", over_map=None):
    comps = np.asarray(comps, dtype=float)
    if degree == 0 and comps.ndim == 3:
        comps = comps[..., None, None]
    elif comps.ndim == 4:
        comps = comps[..., None, :]
    return BundleValuedForm(degree, "scalar", representation, parity, comps, over_map)


def vector_form(degree, comps, representation, parity="true", over_map=None):
    comps = np.asarray(comps, dtype=float)
    if degree == 0 and comps.ndim == 4:
        comps = comps[..., None]
    return BundleValuedForm(degree, "vector", representation, parity, comps, over_map)


def covector_form(degree, comps, representation, parity="true", over_map=None):
    comps = np.asarray(comps, dtype=float)
    if degree == 0 and comps.ndim == 4:
        comps = comps[..., None]
    return BundleValuedForm(degree, "covector", representation, parity, comps, over_map)


def mass_form(density, representation, over_map=None):
    """Scalar 3-pseudo-form from its chart density."""
    density = np.asarray(density, dtype=float)
    return scalar_form(3, density[..., None], representation, parity="pseudo", over_map=over_map)


def slots_to_full(k, comps):
    """Expand sorted-slot storage (last axis) into k antisymmetric axes."""
    if k == 0:
        return comps[..., 0]
    if k == 1:
        return comps
    if k == 2:
        full = np.zeros(comps.shape[:-1] + (3, 3))
        for idx, (a, b) in enumerate(SLOTS[2]):
            full[..., a, b] = comps[..., idx]
            full[..., b, a] = -comps[..., idx]
        return full
    if k == 3:
        return np.einsum("...,abc->...abc", comps[..., 0], EPS)
    raise FormError(f"bad degree {k}")


def full_to_slots(k, full):
    """Extract sorted-slot storage from a fully indexed antisymmetric array."""
    if k == 0:
        return full[..., None]
    if k == 1:
        return full
    slots = SLOTS[k]
    out = np.empty(full.shape[: full.ndim - k] + (len(slots),))
    for idx, t in enumerate(slots):
        sel = full
        for ax in reversed(t):
            sel = sel[..., ax]
        out[..., idx] = sel
    return out


def _parity_xor(p1, p2):
    return "pseudo" if (p1 == "pseudo") != (p2 == "pseudo") else "true"


def _check_match(a, b, op):
    if a.representation != b.representation:
        raise FormError(f"{op}: representation mismatch {a.representation} vs {b.representation}")
    if a.representation == "material" and a.over_map is not None and b.over_map is not None:
        if a.over_map is not b.over_map:
            ta = getattr(a.over_map, "time_tag", None)
            tb = getattr(b.over_map, "time_tag", None)
            if ta != tb:
                raise FormError(f"{op}: material forms over different configurations ({ta} vs {tb})")


def wedge_dot(zeta, chi):
    """Duality product on value legs, wedge on form legs.

    ``zeta`` must be vector-valued and ``chi`` covector-valued (a scalar
    value leg on either side is also accepted and treated as a plain
    wedge factor on that side).  Metric-free.
    """
    _check_match(zeta, chi, "wedge_dot")
    k, l = zeta.degree, chi.degree
    if k + l > 3:
        raise FormError(f"wedge of degrees {k}+{l} exceeds the chart dimension")
    if zeta.value_kind == "covector" or chi.value_kind == "vector":
        raise FormError("wedge_dot pairs a vector-valued form with a covector-valued one")
    base = zeta.comps.shape[:3]
    out = np.zeros(base + (1, len(SLOTS[k + l])))
    pairwise = np.einsum("...vs,...vt->...st", zeta.comps, chi.comps)
    for ia, ib, im, sign in MERGE[(k, l)]:
        out[..., 0, im] += sign * pairwise[..., ia, ib]
    return BundleValuedForm(
        degree=k + l,
        value_kind="scalar",
        representation=zeta.representation,
        parity=_parity_xor(zeta.parity, chi.parity),
        comps=out,
        over_map=zeta.over_map if zeta.over_map is not None else chi.over_map,
    )


def interior_product(v, alpha):
    """First-slot contraction of a scalar k-form with a vector field."""
    if alpha.value_kind != "scalar":
        raise FormError("interior product acts on scalar-valued forms")
    k = alpha.degree
    if k == 0:
        raise FormError("interior product of a 0-form is undefined")
    full = slots_to_full(k, alpha.comps[..., 0, :])
    vv = v.reshape(v.shape[:3] + (3,) + (1,) * (k - 1))
    contracted = (full * vv).sum(axis=3)
    comps = full_to_slots(k - 1, contracted)
    return scalar_form(k - 1, comps, alpha.representation, alpha.parity, alpha.over_map)


def exterior_derivative(alpha, grid, f_inv=None):
    """d on scalar k-forms by antisymmetrized chart differentiation.

    Spatial forms stored in pulled-back sampling must pass the inverse
    deformation gradient so derivatives act in the ambient frame.
    """
    if alpha.value_kind != "scalar":
        raise FormError("exterior_derivative acts on scalar-valued forms; "
                        "use the exterior covariant derivative for bundle values")
    k = alpha.degree
    if k == 3:
        raise FormError("no 4-forms on a 3-chart")
    grads = frame_gradient(alpha.comps, grid, f_inv=f_inv)  # (..., 1, S, 3)
    out = np.zeros(alpha.comps.shape[:3] + (1, len(SLOTS[k + 1])))
    for im, c in enumerate(SLOTS[k + 1]):
        for j, cj in enumerate(c):
            rest = c[:j] + c[j + 1:]
            out[..., 0, im] += (-1.0) ** j * grads[..., 0, SLOT_INDEX[k][rest], cj]
    return scalar_form(k + 1, out, alpha.representation, alpha.parity, alpha.over_map)


def _weighted_star_slots(k, comps, g_inv, det_g, weight):
    """mu-weighted Hodge of slot data along the last axis (k -> 3-k).

    ``g_inv``, ``det_g`` and ``weight`` must broadcast against the
    leading axes of ``comps`` (callers insert a singleton value axis).
    ``weight`` is the top-form density of mu; form indices are raised
    with ``g_inv``.
    """
    if k == 0:
        return comps * weight[..., None]
    if k == 1:
        up = np.einsum("...ab,...b->...a", g_inv, comps)
        full = np.einsum("...a,abc->...bc", up, EPS) * weight[..., None, None]
        return full[..., [0, 0, 1], [1, 2, 2]]
    if k == 2:
        full = slots_to_full(2, comps)
        up = np.einsum("...ac,...bd,...cd->...ab", g_inv, g_inv, full)
        return 0.5 * np.einsum("...ab,abc->...c", up, EPS) * weight[..., None]
    if k == 3:
        return comps * (weight / det_g)[..., None]
    raise FormError(f"bad degree {k}")


def _weighted_star_inverse_slots(kout, comps, g_inv, det_g, weight):
    """Inverse of the weighted star, producing a k_out form from 3-k_out."""
    sqrt_det = np.sqrt(det_g)
    unweighted = _weighted_star_slots(3 - kout, comps, g_inv, det_g, sqrt_det)
    rel = weight / sqrt_det
    return unweighted / rel[..., None]


def hodge_flat(zeta, metric, mass, form_metric=None):
    """Mass-weighted Hodge star: vector-valued k -> covector-valued 3-k.

    The value leg is lowered with ``metric``; the form leg is dualized
    against the mass form ``mass`` with form indices raised by
    ``form_metric`` (defaults to ``metric``; the material star passes
    the reference metric there).  Parity flips against the mass parity.
    """
    if zeta.value_kind != "vector":
        raise FormError("hodge_flat acts on vector-valued forms")
    fm = form_metric if form_metric is not None else metric
    weight = mass.density
    if np.any(np.abs(weight) < 1e-300):
        raise FormError("degenerate mass form: zero density node")
    starred = _weighted_star_slots(
        zeta.degree, zeta.comps,
        fm.inv[..., None, :, :], (fm.sqrt_det ** 2)[..., None], weight[..., None],
    )
    lowered = np.einsum("...ij,...js->...is", metric.values, starred)
    return BundleValuedForm(
        degree=3 - zeta.degree,
        value_kind="covector",
        representation=zeta.representation,
        parity=_parity_xor(zeta.parity, mass.parity),
        comps=lowered,
        over_map=zeta.over_map,
    )


def hodge_sharp(chi, metric, mass, form_metric=None):
    """Inverse of :func:`hodge_flat` on covector-valued (3-k)-forms."""
    if chi.value_kind != "covector":
        raise FormError("hodge_sharp acts on covector-valued forms")
    fm = form_metric if form_metric is not None else metric
    weight = mass.density
    if np.any(np.abs(weight) < 1e-300):
        raise FormError("degenerate mass form: zero density node")
    raised = np.einsum("...ij,...js->...is", metric.inv, chi.comps)
    unstarred = _weighted_star_inverse_slots(
        3 - chi.degree, raised,
        fm.inv[..., None, :, :], (fm.sqrt_det ** 2)[..., None], weight[..., None],
    )
    return BundleValuedForm(
        degree=3 - chi.degree,
        value_kind="vector",
        representation=chi.representation,
        parity=_parity_xor(chi.parity, mass.parity),
        comps=unstarred,
        over_map=chi.over_map,
    )


def inner_product(zeta, xi, metric, form_metric=None):
    """Pointwise inner product of vector-valued k-forms.

    Value legs contract with the metric, each form index with its
    inverse (the material case uses the reference metric on form legs).
    """
    if zeta.degree != xi.degree:
        raise FormError("inner product needs equal degrees")
    fm = form_metric if form_metric is not None else metric
    k = zeta.degree
    za = slots_to_full(k, zeta.comps)
    xa = slots_to_full(k, xi.comps)
    if k == 0:
        return np.einsum("...ij,...i,...j->...", metric.values, za, xa)
    if k == 1:
        return np.einsum("...ij,...ab,...ia,...jb->...", metric.values, fm.inv, za, xa)
    if k == 2:
        return 0.5 * np.einsum(
            "...ij,...ac,...bd,...iab,...jcd->...", metric.values, fm.inv, fm.inv, za, xa
        )
    if k == 3:
        det = fm.sqrt_det ** 2
        return np.einsum("...ij,...i,...j->...", metric.values, zeta.comps[..., 0], xi.comps[..., 0]) / det
    raise FormError(f"bad degree {k}")


def orientation_flip(alpha):
    """Negate pseudo-form components; true forms are untouched."""
    if alpha.parity == "pseudo":
        return replace(alpha, comps=-alpha.comps)
    return replace(alpha, comps=alpha.comps.copy())


def duality_pairing(chi, zeta, grid, config=None):
    """Integral of ``zeta wedge-dot chi`` over the domain.

    Spatial-representation integrands are stored in pulled-back sampling,
    so the quadrature runs over the body chart after pulling the top
    form leg back (a factor det F); pass the configuration then.
    """
    top = wedge_dot(zeta, chi)
    if top.degree != 3:
        raise FormError("duality pairing needs complementary degrees")
    density = top.density
    if top.representation == "spatial":
        if config is None:
            raise FormError("spatial pairing needs the configuration for the volume factor")
        density = density * config.det_f
    return integrate_interior(density, grid)


def face_restriction(alpha, grid):
    """Trace of a scalar 2-form on each boundary face.

    Returns the face data mapping consumed by
    :func:`elastiforms.grid.integrate_boundary`: per face, the samples
    of the single surviving component (the sorted pair tangent to the
    face).
    """
    from .grid import FACE_PAIR

    if alpha.degree != 2 or alpha.value_kind != "scalar":
        raise FormError("face restriction is defined for scalar 2-forms")
    data = {}
    for axis, side in grid.faces():
        pair = FACE_PAIR[axis]
        slot = SLOT_INDEX[2][pair]
        data[(axis, side)] = alpha.comps[grid.face_slice(axis, side)][..., 0, slot]
    return data
