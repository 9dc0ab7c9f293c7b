"""Matrix structure groups and Lie-algebra-valued tensor fields.

Fiber values are anti-Hermitian m x m complex matrices stored in numpy's
natural `arr[..., row, col]` layout, so composition is `@` and the adjoint
action is the plain matrix commutator.  A field of tensor degree (l, p)
carries l derivative slots followed by p antisymmetric form slots, each slot
running over the torus axes, then the spatial axes, then the fiber pair:

    data.shape == (dim,)*(l+p) + grid.sizes + (m, m)

Inner products contract every ordered slot tuple and use the minus-trace
pairing on the fiber, which is positive definite on anti-Hermitian values.
"""

import itertools
import math

import numpy as np

from .grid import integrate

ANTIHERM_TOL = 1e-12


class StructureGroup:
    """A compact matrix gauge group: u(1), su(2), or full u(m).

    `basis` spans the (real) Lie algebra by anti-Hermitian matrices; `m` is
    the fiber dimension.
    """

    def __init__(self, name, m, basis):
        self.name = name
        self.m = int(m)
        self.basis = np.asarray(basis, dtype=complex)
        self.algebra_dim = len(basis)

    @classmethod
    def u1(cls):
        return cls("u1", 1, [np.array([[1j]])])

    @classmethod
    def su2(cls):
        s1 = np.array([[0, 1], [1, 0]], dtype=complex)
        s2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
        s3 = np.array([[1, 0], [0, -1]], dtype=complex)
        return cls("su2", 2, [1j * s1, 1j * s2, 1j * s3])

    @classmethod
    def unitary(cls, m):
        basis = []
        for a in range(m):
            E = np.zeros((m, m), dtype=complex)
            E[a, a] = 1j
            basis.append(E)
        for a in range(m):
            for b in range(a + 1, m):
                re = np.zeros((m, m), dtype=complex)
                re[a, b], re[b, a] = 1.0, -1.0
                im = np.zeros((m, m), dtype=complex)
                im[a, b] = im[b, a] = 1j
                basis.extend([re, im])
        return cls(f"u({m})", m, basis)

    @classmethod
    def parse(cls, name):
        name = name.strip().lower()
        if name in ("u1", "u(1)"):
            return cls.u1()
        if name in ("su2", "su(2)"):
            return cls.su2()
        if name.startswith("u(") and name.endswith(")"):
            return cls.unitary(int(name[2:-1]))
        raise ValueError(f"unknown structure group {name!r}")

    def __repr__(self):
        return f"StructureGroup({self.name})"


class FormField:
    """Lie-algebra-valued tensor field on a torus grid.

    Parameters
    ----------
    grid, group : the geometry and fiber structure.
    data : complex ndarray shaped (dim,)*(nderiv+degree) + sizes + (m, m).
    degree : number of antisymmetric form slots.
    nderiv : number of (non-antisymmetric) derivative slots, stored to the
        left of the form slots.
    """

    def __init__(self, grid, group, data, degree, nderiv=0):
        data = np.asarray(data, dtype=complex)
        expected = (grid.dim,) * (nderiv + degree) + grid.sizes + (group.m,) * 2
        if data.shape != expected:
            raise ValueError(f"field data shape {data.shape} != {expected}")
        self.grid = grid
        self.group = group
        self.data = data
        self.degree = int(degree)
        self.nderiv = int(nderiv)

    @property
    def slots(self):
        return self.nderiv + self.degree

    @classmethod
    def zeros(cls, grid, group, degree, nderiv=0):
        shape = (grid.dim,) * (nderiv + degree) + grid.sizes + (group.m,) * 2
        return cls(grid, group, np.zeros(shape, dtype=complex), degree, nderiv)

    def copy(self):
        return FormField(self.grid, self.group, self.data.copy(),
                         self.degree, self.nderiv)

    def like(self, data):
        return FormField(self.grid, self.group, data, self.degree, self.nderiv)

    def _flat(self):
        """View with all slots collapsed into one leading axis."""
        n_flat = self.grid.dim ** self.slots if self.slots else 1
        return self.data.reshape((n_flat,) + self.grid.sizes + (self.group.m,) * 2)

    def antihermitian_defect(self):
        return float(np.abs(self.data + np.conj(np.swapaxes(self.data, -1, -2))).max())

    def check_antihermitian(self, tol=ANTIHERM_TOL):
        defect = self.antihermitian_defect()
        if defect > tol:
            raise ValueError(f"field is not anti-Hermitian: defect {defect:.3e}")
        return self

    # arithmetic used by the integrators; scalar factors only
    def __add__(self, other):
        return self.like(self.data + other.data)

    def __sub__(self, other):
        return self.like(self.data - other.data)

    def __mul__(self, c):
        return self.like(self.data * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.like(-self.data)


def alternate_form_part(field):
    """Antisymmetrize the form slots (the trailing `degree` slot axes)."""
    p = field.degree
    if p < 2:
        return field
    axes = list(range(field.nderiv, field.nderiv + p))
    acc = np.zeros_like(field.data)
    for perm in itertools.permutations(range(p)):
        sign = _perm_sign(perm)
        order = list(range(field.nderiv)) + [axes[i] for i in perm] \
            + list(range(field.slots, field.data.ndim))
        acc += sign * np.transpose(field.data, order)
    return field.like(acc / math.factorial(p))


def _perm_sign(perm):
    sign = 1
    seen = [False] * len(perm)
    for i in range(len(perm)):
        if seen[i]:
            continue
        j, cyc = i, 0
        while not seen[j]:
            seen[j] = True
            j = perm[j]
            cyc += 1
        if cyc % 2 == 0:
            sign = -sign
    return sign


# ---------------------------------------------------------------------------
# products and norms
# ---------------------------------------------------------------------------

def bracket(w, z):
    """Pointwise fiber commutator of two fields with identical slot signature,
    projected back under the spectral cutoff."""
    if w.data.shape != z.data.shape:
        raise ValueError("bracket requires matching slot signatures")
    vals = w.data @ z.data - z.data @ w.data
    return w.like(w.grid.dealias(vals))


def inner_product(w, z):
    """Pointwise extended inner product: minus-trace over the fiber, summed
    over every ordered slot tuple.  Returns a real scalar field."""
    if w.data.shape != z.data.shape:
        raise ValueError("inner product requires matching slot signatures")
    a, b = w._flat(), z._flat()
    val = -np.einsum("s...ab,s...ba->...", a, b)
    return val.real


def l2_norm_sq(w):
    """Squared L2 norm over the torus."""
    return float(integrate(w.grid, inner_product(w, w)))


def lp_norm(w, p, mask=None):
    """L^p norm of the pointwise magnitude |w| = sqrt(<w,w>), optionally
    restricted to a boolean region mask."""
    mag = np.sqrt(np.maximum(inner_product(w, w), 0.0))
    dens = mag ** p
    if mask is not None:
        dens = dens * mask
    return float(integrate(w.grid, dens)) ** (1.0 / p)


def frobenius_sup(w):
    """Sup over the grid of the pointwise magnitude sqrt(<w,w>)."""
    return float(np.sqrt(np.maximum(inner_product(w, w), 0.0)).max())


def pound(w, z):
    """Metric contraction of the leading form index of each factor, fiber
    values composed in the order w . z.  Degree drops by two."""
    if w.degree < 1 or z.degree < 1 or w.nderiv or z.nderiv:
        raise ValueError("pound needs two pure form fields of degree >= 1")
    n, sizes, m = w.grid.dim, w.grid.sizes, w.group.m
    wr = w.data.reshape((n, n ** (w.degree - 1)) + sizes + (m, m))
    zr = z.data.reshape((n, n ** (z.degree - 1)) + sizes + (m, m))
    out = np.einsum("aj...xy,ak...yz->jk...xz", wr, zr)
    new_deg = w.degree + z.degree - 2
    out = out.reshape((n,) * new_deg + sizes + (m, m))
    res = FormField(w.grid, w.group, out, new_deg)
    return res.like(w.grid.dealias(res.data))


def pound_bracket(w, z):
    """Fiberwise commutator with the leading form indices contracted:

        [w, z]#_{J,K} = sum_a [w_{aJ}, z_{aK}]

    For degree-1 pairs this coincides with pound(w,z) - pound(z,w); in general
    it is the antisymmetrized-in-fiber version that the curvature identities
    use, and it changes sign under swapping the factors (with their slots).
    """
    if w.degree < 1 or z.degree < 1 or w.nderiv or z.nderiv:
        raise ValueError("pound_bracket needs two pure form fields of degree >= 1")
    n, sizes, m = w.grid.dim, w.grid.sizes, w.group.m
    wr = w.data.reshape((n, n ** (w.degree - 1)) + sizes + (m, m))
    zr = z.data.reshape((n, n ** (z.degree - 1)) + sizes + (m, m))
    fwd = np.einsum("aj...xy,ak...yz->jk...xz", wr, zr)
    rev = np.einsum("ak...xy,aj...yz->jk...xz", zr, wr)
    new_deg = w.degree + z.degree - 2
    out = (fwd - rev).reshape((n,) * new_deg + sizes + (m, m))
    res = FormField(w.grid, w.group, out, new_deg)
    return res.like(w.grid.dealias(res.data))


# ---------------------------------------------------------------------------
# random data and fiber matrix functions
# ---------------------------------------------------------------------------

def random_scalar(grid, band, rng):
    """Real scalar field with spectrum supported on |mode_a| <= band, unit sup."""
    spec = np.zeros(grid.sizes, dtype=complex)
    sel = np.ones(grid.sizes, dtype=bool)
    for a in range(grid.dim):
        sel &= grid._expand(np.abs(grid.modes(a)) <= band, a, 0)
    cnt = int(sel.sum())
    spec[sel] = rng.standard_normal(cnt) + 1j * rng.standard_normal(cnt)
    f = np.fft.ifftn(spec).real
    peak = np.abs(f).max()
    return f / peak if peak > 0 else f


def random_field(grid, group, degree, band, amplitude, rng, nderiv=0):
    """Random band-limited anti-Hermitian field, antisymmetrized in its form
    slots, with pointwise magnitude on the order of `amplitude`."""
    shape = (grid.dim,) * (nderiv + degree) + grid.sizes + (group.m,) * 2
    data = np.zeros(shape, dtype=complex)
    flat = data.reshape((-1,) + grid.sizes + (group.m,) * 2)
    for s in range(flat.shape[0]):
        for T in group.basis:
            flat[s] += random_scalar(grid, band, rng)[..., None, None] * T
    field = FormField(grid, group, data * amplitude, degree, nderiv)
    if degree >= 2:
        field = alternate_form_part(field)
    return field


def random_connection(grid, group, band, amplitude, rng):
    """Random band-limited connection coefficient field (degree-1)."""
    return random_field(grid, group, 1, band, amplitude, rng)


def expm_antihermitian(X):
    """Matrix exponential of anti-Hermitian values via the eigendecomposition
    of the Hermitian matrix -iX; batched over leading axes."""
    H = np.asarray(X) / 1j
    w, V = np.linalg.eigh(H)
    phase = np.exp(1j * w)
    return np.einsum("...ab,...b,...cb->...ac", V, phase, np.conj(V))


def polar_unitary(A):
    """Closest unitary matrix in Frobenius norm (polar factor), batched."""
    U, _, Vh = np.linalg.svd(A)
    return U @ Vh
