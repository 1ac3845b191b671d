"""Seeded smooth random fields for residual checks.

Low-wavenumber trigonometric combinations keep second derivatives O(1)
so second-order stencils sit in their asymptotic range already on small
lattices, while every component genuinely depends on all three
coordinates (residual identities can degenerate to round-off on
separable fields, which would break empirical order estimates).
"""

from __future__ import annotations

import numpy as np


def _modes(rng, n_modes):
    amps = rng.uniform(0.3, 1.0, size=n_modes) * rng.choice([-1.0, 1.0], size=n_modes)
    freqs = rng.uniform(0.5, 1.4, size=(n_modes, 3))
    phases = rng.uniform(0.0, 2.0 * np.pi, size=(n_modes, 3))
    return amps, freqs, phases


def smooth_scalar(grid, rng, n_modes=3, scale=1.0):
    """Random smooth scalar with O(1) derivatives of every order used."""
    x = grid.nodes()
    amps, freqs, phases = _modes(rng, n_modes)
    out = np.zeros(grid.shape)
    for a, f, p in zip(amps, freqs, phases):
        out += a * (
            np.sin(f[0] * x[..., 0] + p[0])
            * np.sin(f[1] * x[..., 1] + p[1])
            * np.sin(f[2] * x[..., 2] + p[2])
        )
    return scale * out


def smooth_vector(grid, rng, scale=1.0):
    return np.stack([smooth_scalar(grid, rng, scale=scale) for _ in range(3)], axis=-1)


def smooth_covector(grid, rng, scale=1.0):
    return smooth_vector(grid, rng, scale=scale)


def smooth_symmetric_tensor(grid, rng, scale=1.0):
    """Random smooth symmetric (2,0) or (0,2) components."""
    out = np.zeros(grid.shape + (3, 3))
    for i in range(3):
        for j in range(i, 3):
            c = smooth_scalar(grid, rng, scale=scale)
            out[..., i, j] = c
            out[..., j, i] = c
    return out


def smooth_spd_metric(grid, rng, amplitude=0.3):
    """Identity plus a smooth symmetric perturbation, safely SPD."""
    pert = smooth_symmetric_tensor(grid, rng, scale=amplitude / 3.0)
    lim = np.abs(np.linalg.eigvalsh(pert)).max()
    if lim > 0.8:
        pert *= 0.8 / lim
    return np.eye(3) + pert


def smooth_form_components(grid, rng, degree, vector_valued=True, scale=1.0):
    """Random components for a bundle-valued form of the given degree."""
    from .forms import SLOTS

    nval = 3 if vector_valued else 3
    nslots = len(SLOTS[degree])
    comps = np.stack(
        [
            np.stack([smooth_scalar(grid, rng, scale=scale) for _ in range(nslots)], axis=-1)
            for _ in range(nval)
        ],
        axis=-2,
    )
    return comps
