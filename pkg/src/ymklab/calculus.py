"""Covariant differential operators for connections on flat tori.

The sign and index conventions, fixed package-wide:

- curvature          F_ij = d_i G_j - d_j G_i + [G_i, G_j]
- covariant derivative prepends a slot:  (nabla w)_{a,I} = d_a w_I + [G_a, w_I]
- antisymmetrized covariant derivative raising a pure form of degree p-1:

      (D psi)_{i1..ip} = sum_v (-1)^{v-1} nabla_{i_v} psi_{i1.. i_v dropped ..ip}

- codifferential lowering a pure form of degree p >= 1:

      (Dstar w)_{i2..ip} = - sum_a nabla_a w_{a i2..ip}

  The minus sign is what makes the rescaled adjoint identity come out with a
  positive factor: integral <Dstar w, psi> = (1/p) integral <w, D psi> under
  the ordered-tuple inner product.
- rough laplacian    lap = sum_a nabla_a nabla_a   (slot signature preserved)
- hodge laplacian    lap_D = Dstar D + D Dstar

Every pointwise product is projected back under the grid's spectral cutoff,
so chains of these operators keep band-limited fields band-limited.
"""

import numpy as np

from .algebra import FormField
from .grid import spectral_partial


def _partials_stack(grid, values, fiber_ndim=2):
    """All first partials of `values` stacked along a new leading axis.

    One forward transform shared across the dim inverse transforms.
    """
    axes = grid.spatial_axes(fiber_ndim)
    hat = np.fft.fftn(values, axes=axes)
    out = np.empty((grid.dim,) + values.shape, dtype=complex)
    for a in range(grid.dim):
        mult = grid._expand(1j * grid.kappa(a), a, fiber_ndim)
        out[a] = np.fft.ifftn(hat * mult, axes=axes)
    return out


def _contract_leading_pair(data):
    """Trace over the first two slot axes: out_I = sum_a T_{a,a,I}."""
    return np.einsum("aa...->...", data)


def _mask_hat(grid, hat):
    """Apply the spectral cutoff to transformed matrix-valued data."""
    return hat * grid._mask[..., None, None]


def _hat(grid, values):
    return np.fft.fftn(values, axes=grid.spatial_axes(2))


def _commutator_stack(gamma, field_data, slots):
    """[G_a, w_I] stacked over a: shape (dim,) + field shape."""
    grid = gamma.grid
    gex = gamma.data.reshape(
        (grid.dim,) + (1,) * slots + grid.sizes + (gamma.group.m,) * 2)
    w = field_data[None]
    return gex @ w - w @ gex


def _fused_curvature(gamma):
    """Curvature samples and transform in one spectral pass."""
    grid = gamma.grid
    axes = grid.spatial_axes(2)
    ghat = np.fft.fftn(gamma.data, axes=axes)
    comm = gamma.data[:, None] @ gamma.data[None, :] \
        - gamma.data[None, :] @ gamma.data[:, None]
    fhat = _mask_hat(grid, np.fft.fftn(comm, axes=axes))
    for a in range(grid.dim):
        mult = grid._expand(1j * grid.kappa(a), a, 2)
        fhat[a] += mult * ghat
        fhat[:, a] -= mult * ghat
    return np.fft.ifftn(fhat, axes=axes), fhat


def _fused_cov(gamma, w_data, w_hat, slots):
    """Covariant derivative of raw data, reusing the input transform.

    Returns (samples, transform) with one prepended slot axis.
    """
    grid = gamma.grid
    axes = grid.spatial_axes(2)
    comm = _commutator_stack(gamma, w_data, slots)
    out_hat = _mask_hat(grid, np.fft.fftn(comm, axes=axes))
    for a in range(grid.dim):
        out_hat[a] += grid._expand(1j * grid.kappa(a), a, 2) * w_hat
    return np.fft.ifftn(out_hat, axes=axes), out_hat


def _fused_div(gamma, w_data, w_hat):
    """Covariant divergence against the leading slot of raw data.

    sum_a (d_a w_{a,I} + [G_a, w_{a,I}]), reusing the input transform.
    Returns (samples, transform) with the leading slot dropped.
    """
    grid = gamma.grid
    n = grid.dim
    axes = grid.spatial_axes(2)
    m = gamma.group.m
    rest = w_data.shape[1:]
    wr = w_data.reshape((n, -1) + grid.sizes + (m, m))
    ga = gamma.data[:, None]
    comm = (ga @ wr - wr @ ga).sum(axis=0).reshape(rest)
    out_hat = _mask_hat(grid, np.fft.fftn(comm, axes=axes))
    for a in range(n):
        out_hat += grid._expand(1j * grid.kappa(a), a, 2) * w_hat[a]
    return np.fft.ifftn(out_hat, axes=axes), out_hat


def curvature(gamma):
    """Curvature 2-form of a connection coefficient field.

    F_ij = d_i G_j - d_j G_i + [G_i, G_j], with the commutator projected
    under the spectral cutoff.  Antisymmetric in (i, j) by construction.
    """
    if gamma.degree != 1 or gamma.nderiv != 0:
        raise ValueError("curvature expects a degree-1 connection field")
    data, _ = _fused_curvature(gamma)
    return FormField(gamma.grid, gamma.group, data, degree=2)


def covariant_derivative(gamma, field):
    """Covariant derivative, prepending one derivative slot.

    (nabla field)_{a, I} = d_a field_I + [G_a, field_I]; the commutator is
    projected under the cutoff.
    """
    grid = field.grid
    data, _ = _fused_cov(gamma, field.data, _hat(grid, field.data),
                         field.slots)
    return FormField(grid, field.group, data, field.degree, field.nderiv + 1)


def iterated_covariant_derivative(gamma, field, times):
    """Apply the covariant derivative `times` times (times >= 0)."""
    out = field
    for _ in range(times):
        out = covariant_derivative(gamma, out)
    return out


def exterior_derivative(gamma, psi):
    """Antisymmetrized covariant derivative on a pure form.

    Takes degree p-1 to degree p via the alternating sum of nabla placed in
    each slot position with sign (-1)^{v-1}.
    """
    if psi.nderiv != 0:
        raise ValueError("exterior derivative expects a pure form field")
    T = covariant_derivative(gamma, psi).data
    p = psi.degree + 1
    acc = np.zeros_like(T)
    for v in range(p):
        term = np.moveaxis(T, 0, v)
        acc += term if v % 2 == 0 else -term
    return FormField(psi.grid, psi.group, acc, degree=p)


def codifferential(gamma, omega):
    """Codifferential on a pure form of degree >= 1.

    (Dstar w)_{i2..ip} = - sum_a nabla_a w_{a i2..ip}.
    """
    if omega.nderiv != 0 or omega.degree < 1:
        raise ValueError("codifferential expects a pure form of degree >= 1")
    grid = omega.grid
    data, _ = _fused_div(gamma, omega.data, _hat(grid, omega.data))
    return FormField(grid, omega.group, -data, degree=omega.degree - 1)


def div_leading(gamma, field):
    """Covariant divergence against the leading slot: sum_a nabla_a w_{a,I}.

    Works on mixed derivative/form fields; the result drops the leading slot
    (a derivative slot if the field has any, else the first form slot).
    No sign: callers that want the codifferential convention negate.
    """
    if field.slots < 1:
        raise ValueError("div_leading needs at least one slot")
    grid = field.grid
    data, _ = _fused_div(gamma, field.data, _hat(grid, field.data))
    if field.nderiv >= 1:
        return FormField(field.grid, field.group, data,
                         field.degree, field.nderiv - 1)
    return FormField(field.grid, field.group, data, field.degree - 1)


def rough_laplacian(gamma, field):
    """Trace of two covariant derivatives: sum_a nabla_a nabla_a field."""
    T = covariant_derivative(gamma, covariant_derivative(gamma, field)).data
    return field.like(_contract_leading_pair(T))


def hodge_laplacian(gamma, omega):
    """Form laplacian Dstar D + D Dstar on pure forms.

    For degree 0 the second term is absent.  At top degree the raised form
    vanishes by antisymmetry, so the first term contributes nothing; it is
    still evaluated, which keeps the code uniform at desk-scale cost.
    """
    if omega.nderiv != 0:
        raise ValueError("hodge laplacian expects a pure form field")
    up = codifferential(gamma, exterior_derivative(gamma, omega))
    if omega.degree == 0:
        return up
    down = exterior_derivative(gamma, codifferential(gamma, omega))
    return up + down
