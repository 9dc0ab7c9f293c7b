"""Shared builders for the test suite.

The u(1) single-wave connection below is the workhorse worked example: every
derived quantity has a closed form, so tests can assert against hand values
instead of against other library code.
"""

import math

import numpy as np

from ymklab import FormField, StructureGroup, TorusGrid


def u1_wave(grid, u):
    """u(1) connection on a square torus with one curvature wave.

    Gamma_2(x) = i * (u L / 2 pi) * sin(2 pi x_1 / L), all other components
    zero.  Then F_12 = i u cos(2 pi x_1 / L), and with the extended fiber
    norm (both index orders of the antisymmetric pair are summed)

        |F|^2     = 2 u^2 cos^2,
        |grad F|^2 = 2 (u 2 pi / L)^2 sin^2,

    so the curvature energies integrate in closed form on the L x L torus:

        E_0 = u^2 L^2 / 2,   E_k = u^2 (2 pi / L)^{2k} L^2 / 2.
    """
    group = StructureGroup.u1()
    L = grid.lengths[0]
    x1 = grid.axis_points(0)
    coef = u * L / (2.0 * math.pi)
    data = np.zeros((grid.dim,) + grid.sizes + (1, 1), dtype=complex)
    data[1, ..., 0, 0] = (1j * coef * np.sin(2.0 * math.pi * x1 / L))[
        (...,) + (None,) * (grid.dim - 1)]
    return FormField(grid, group, data, 1)


def zero_mean(field):
    """Project out the constant Fourier mode of each component."""
    axes = tuple(range(1, 1 + field.grid.dim))
    data = field.data - field.data.mean(axis=axes, keepdims=True)
    return field.like(data)


def extended_pointwise_norm(field, index):
    """Pointwise extended fiber norm at one grid point of a 2-form."""
    pt = field.data[(slice(None), slice(None)) + tuple(index)]
    n = pt.shape[0]
    tot = sum(-np.trace(pt[i, j] @ pt[i, j]).real
              for i in range(n) for j in range(n))
    return math.sqrt(max(tot, 0.0))
