"""Curvature energy functionals and their L2 gradients.

Energies (all with the 1/2 prefactor on the squared L2 norm):

    ym_energy        E_0 = 1/2 ||F||^2
    ymk_energy       E_k = 1/2 ||nabla^(k) F||^2
    bym_energy       1/2 ||Dstar F||^2            (diagnostic)
    ym_rho_k_energy  rho * E_k + E_0

`grad_discrete` is the exact gradient of the *discrete* (spectrally
truncated) energy: it is built by transposing every primitive of the forward
evaluation (partial derivatives, fiber commutators, cutoff projections), so
an Euler step with it dissipates the discrete energy to round-off and
finite-difference directional tests close at machine-limited accuracy.

`grad_continuum` evaluates closed-form gradients of the continuum k-energies
(k <= 1) for cross-checking; its normalization is half of the discrete one,
with the calibration factor 2 recorded by the consistency tests.
"""

import numpy as np

from .algebra import FormField, l2_norm_sq
from .calculus import (_fused_cov, _fused_curvature, _fused_div,
                       codifferential, covariant_derivative, curvature,
                       rough_laplacian)


def ym_energy(gamma):
    """1/2 ||F||^2 over the torus."""
    return 0.5 * l2_norm_sq(curvature(gamma))


def ymk_energy(gamma, k):
    """1/2 ||nabla^(k) F||^2 over the torus (k >= 0)."""
    if k < 0:
        raise ValueError("k must be >= 0")
    w = curvature(gamma)
    for _ in range(k):
        w = covariant_derivative(gamma, w)
    return 0.5 * l2_norm_sq(w)


def bym_energy(gamma):
    """1/2 ||Dstar F||^2 over the torus."""
    F = curvature(gamma)
    return 0.5 * l2_norm_sq(codifferential(gamma, F))


def ym_rho_k_energy(gamma, k, rho):
    """Blend rho * (k-energy) + (curvature energy), rho >= 0."""
    if rho < 0:
        raise ValueError("rho must be >= 0")
    return rho * ymk_energy(gamma, k) + ym_energy(gamma)


def _attach_raw(grid, m, n, phi_data, phi_slots, w_data):
    """Transpose of the slotwise bracket-attachment B -> [B_a, phi_I].

    Given phi data with slot tuple I and a cotangent carrying one extra
    leading slot, returns raw degree-1 data  out_a = sum_I [phi_I, W_{a I}]
    (not yet projected under the cutoff)."""
    S = n ** phi_slots
    pr = phi_data.reshape((S,) + grid.sizes + (m, m))
    wr = w_data.reshape((n, S) + grid.sizes + (m, m))
    return (np.einsum("s...xy,as...yz->a...xz", pr, wr)
            - np.einsum("as...xy,s...yz->a...xz", wr, pr))


def _attach_adjoint(phi, W):
    """FormField wrapper around `_attach_raw`, projected under the cutoff."""
    grid = phi.grid
    return grid.dealias(_attach_raw(grid, phi.group.m, grid.dim,
                                    phi.data, phi.slots, W.data))


def ymk_energy_and_grad(gamma, k=0, rho=None):
    """Discrete energy and its exact gradient from one shared chain.

    Returns (energy, gradient FormField).  With rho=None the energy is
    ymk_energy(gamma, k); otherwise ym_rho_k_energy(gamma, k, rho).  The
    gradient is built by transposing every primitive of the forward
    evaluation (partial derivatives, fiber commutators, cutoff
    projections), so an Euler step dissipates the discrete energy to
    round-off and finite-difference directional tests close at
    machine-limited accuracy.
    """
    if k < 0:
        raise ValueError("k must be >= 0")
    grid, group = gamma.grid, gamma.group
    m, n = group.m, grid.dim

    chain = [_fused_curvature(gamma)]
    for _ in range(k):
        d, h = chain[-1]
        chain.append(_fused_cov(gamma, d, h, len(chain) + 1))

    def half_norm_sq(data, degree, nderiv):
        f = FormField(grid, group, data, degree=degree, nderiv=nderiv)
        return 0.5 * l2_norm_sq(f)

    energy = half_norm_sq(chain[k][0], 2, k)

    # Backpropagate the cotangent W through the derivative chain.  Every
    # intermediate stays band-limited, which is what makes each primitive
    # transpose exact for the truncated energy.  The single projection at
    # the end covers all the raw bracket transposes accumulated on the way.
    wd, wh = chain[k]
    acc = np.zeros_like(gamma.data)
    for j in range(k, 0, -1):
        acc += _attach_raw(grid, m, n, chain[j - 1][0], j + 1, wd)
        dd, dh = _fused_div(gamma, wd, wh)
        wd, wh = -dd, -dh
    # W is now the cotangent against the linearized curvature dF[B] = D B;
    # its transpose on antisymmetric 2-forms is twice the codifferential:
    # -2 times the divergence against the leading slot.
    dd, _ = _fused_div(gamma, wd, wh)
    acc -= 2.0 * dd
    if rho is not None:
        energy = rho * energy + half_norm_sq(chain[0][0], 2, 0)
        d0, _ = _fused_div(gamma, chain[0][0], chain[0][1])
        acc = rho * acc - 2.0 * d0
    data = grid.dealias(acc)
    return energy, FormField(grid, group, data, degree=1)


def grad_discrete(gamma, k=0, rho=None):
    """Exact L2 gradient of the discrete energy with respect to gamma.

    With rho=None this is the gradient of ymk_energy(gamma, k); otherwise
    the gradient of ym_rho_k_energy(gamma, k, rho).
    """
    return ymk_energy_and_grad(gamma, k, rho)[1]


def grad_continuum(gamma, k=0):
    """Closed-form continuum gradient of the k-energy, k <= 1.

    k=0:  Dstar F
    k=1:  -Dstar(lap F) + 1/2 sum_I [F_I, (nabla F)_{a I}]

    Normalized to half of grad_discrete; the factor is pinned by tests.
    """
    F = curvature(gamma)
    if k == 0:
        return codifferential(gamma, F)
    if k == 1:
        lapF = rough_laplacian(gamma, F)
        main = -1.0 * codifferential(gamma, lapF)
        nablaF = covariant_derivative(gamma, F)
        lower = 0.5 * _attach_adjoint(F, nablaF)
        return FormField(gamma.grid, gamma.group, main.data + lower, degree=1)
    raise ValueError("closed-form continuum gradient implemented for k <= 1")


def directional_derivative_check(gamma, direction, k=0, rho=None, eps=1e-2):
    """Five-point directional derivative of the discrete energy against the
    pairing with grad_discrete.  The energy is a quartic polynomial in the
    step, so the stencil is exact up to round-off; the returned relative
    error is dominated by cancellation, not truncation.

    Returns (numeric, analytic, relative_error)."""
    from .grid import integrate
    from .algebra import inner_product

    def energy_at(s):
        g = gamma + s * direction
        e = ymk_energy(g, k)
        if rho is not None:
            e = rho * e + ym_energy(g)
        return e

    num = (-energy_at(2 * eps) + 8.0 * energy_at(eps)
           - 8.0 * energy_at(-eps) + energy_at(-2 * eps)) / (12.0 * eps)
    grad = grad_discrete(gamma, k, rho)
    ana = float(integrate(gamma.grid, inner_product(grad, direction)))
    rel = abs(num - ana) / max(abs(ana), 1e-30)
    return num, ana, rel
