"""Machine checks of the structural identities behind the energies and
flows: curvature commutation, flat Weitzenboeck comparisons, the curvature
variation formula, the rescaled adjoint factor of the divergence, bracket
contraction symmetries, the Kato inequality, parabolic scaling laws, and
the principal symbol forms of the linearized operators.

Every check computes its two sides through independent code paths and
reports a residual scaled by (1 + sup of the inputs).  Checks are exact
modulo round-off when the inputs leave band headroom for every product in
the chain; the suite constructs its inputs that way on purpose.

Symbol conventions: for a constant-coefficient operator assembled from
covariant derivatives at the flat connection, `S_<op>` below denotes the
plain real substitution (each derivative slot replaced by the covector
xi).  An operator of total order 2k+2 then acts on cos(xi.x) B waves as
(-1)^(k+1) times its S-composition, which is exactly how the closed
quadratic forms are normalized here.
"""

import math

import numpy as np

from .algebra import (FormField, bracket, frobenius_sup, inner_product,
                      l2_norm_sq, pound_bracket, random_connection,
                      random_field)
from .calculus import (codifferential, covariant_derivative,
                       exterior_derivative, hodge_laplacian,
                       iterated_covariant_derivative, rough_laplacian,
                       _partials_stack)
from .energy import ym_energy, ymk_energy, bym_energy
from .flow import rescale_snapshot, zoom_form
from .gauge import act_on_form, random_gauge
from .grid import TorusGrid, ball_mask, integrate


def zero_connection(grid, group):
    shape = (grid.dim,) + grid.sizes + (group.m,) * 2
    return FormField(grid, group, np.zeros(shape, dtype=complex), degree=1)


def _scale(*fields):
    return 1.0 + sum(frobenius_sup(f) for f in fields)


def _sup_diff(x, y):
    return float(np.abs(x - y).max())


# ---------------------------------------------------------------------------
# curvature commutation, Weitzenboeck, variation, adjoint factor
# ---------------------------------------------------------------------------

def check_commutator(gamma, omega):
    """[nabla_a, nabla_b] omega = [F_ab, omega], both sides independent.
    Returns the scaled sup residual."""
    from .calculus import curvature
    grid, group = gamma.grid, gamma.group
    n, m = grid.dim, group.m
    T = covariant_derivative(gamma, covariant_derivative(gamma, omega))
    lhs = T.data - T.data.swapaxes(0, 1)
    F = curvature(gamma)
    Fr = F.data.reshape((n, n) + (1,) * omega.slots + grid.sizes + (m, m))
    wr = omega.data[None, None]
    rhs = grid.dealias(Fr @ wr - wr @ Fr)
    return _sup_diff(lhs, rhs) / _scale(gamma, omega)


def check_bochner(gamma, omega, degree):
    """Flat-torus Weitzenboeck comparison for form degree 1 or 2:

        deg 1:  (D*D + DD*) w = -Lap w + pb(F, w)
        deg 2:  (D*D + DD*) w = -Lap w + pb(F, w) - pb(F, w)^T

    with pb the contracted fiber commutator.  Scaled sup residual."""
    from .calculus import curvature
    if omega.degree != degree or degree not in (1, 2):
        raise ValueError("degree must be 1 or 2 and match the field")
    lhs = hodge_laplacian(gamma, omega).data
    F = curvature(gamma)
    rough = rough_laplacian(gamma, omega).data
    pb = pound_bracket(F, omega).data
    if degree == 1:
        rhs = -rough + pb
    else:
        rhs = -rough + pb - pb.swapaxes(0, 1)
    return _sup_diff(lhs, rhs) / _scale(gamma, omega)


def check_variation(gamma, dgamma, ell, step=1e-3):
    """Variation of the curvature chain in the direction dgamma.

    ell = 0:  d/ds F(G + s B) = D_G B          (exact: F is quadratic)
    ell = 1:  d/ds nabla^(G+sB) F(G+sB) = nabla_G (D_G B) + attach(B, F)

    where attach(B, F)_[a,I] = [B_a, F_I].  The left side is a five-point
    difference through the full nonlinear code path; both chains are
    polynomial of degree <= 3 in s, so the stencil is exact and the
    residual is pure round-off.  Scaled sup residual.
    """
    from .calculus import curvature
    grid, group = gamma.grid, gamma.group
    n, m = grid.dim, group.m

    def chain(s):
        g = gamma + s * dgamma
        F = curvature(g)
        return (F if ell == 0 else covariant_derivative(g, F)).data

    lhs = (-chain(2 * step) + 8.0 * chain(step)
           - 8.0 * chain(-step) + chain(-2 * step)) / (12.0 * step)

    DB = exterior_derivative(gamma, dgamma)
    if ell == 0:
        rhs = DB.data
    else:
        F = curvature(gamma)
        Br = dgamma.data.reshape((n,) + (1,) * F.slots + grid.sizes + (m, m))
        Fr = F.data[None]
        attach = grid.dealias(Br @ Fr - Fr @ Br)
        rhs = covariant_derivative(gamma, DB).data + attach
    return _sup_diff(lhs, rhs) / _scale(gamma, dgamma)


def check_adjoint_factor(gamma, omega, psi):
    """The divergence pairs against the alternating derivative with a
    degree factor:  integral <omega, D psi> = p * integral <D* omega, psi>
    for omega of degree p and psi of degree p - 1.  Returns (ratio,
    scaled residual of num - p * den)."""
    p = omega.degree
    if psi.degree != p - 1:
        raise ValueError("psi must have degree one less than omega")
    num = float(integrate(gamma.grid,
                          inner_product(omega, exterior_derivative(gamma, psi))))
    den = float(integrate(gamma.grid,
                          inner_product(codifferential(gamma, omega), psi)))
    ratio = num / den if den != 0 else math.nan
    resid = abs(num - p * den) / (1.0 + abs(num) + abs(den))
    return ratio, resid


def check_pound_antisymmetry(w, z):
    """pb(w, z)_[J,K] = -pb(z, w)_[K,J].  Scaled sup residual."""
    lhs = pound_bracket(w, z).data
    rhs = pound_bracket(z, w).data
    jw, jz = w.degree - 1, z.degree - 1
    total = jw + jz
    perm = list(range(jz, total)) + list(range(jz)) \
        + list(range(total, rhs.ndim))
    return _sup_diff(lhs, -np.transpose(rhs, perm)) / _scale(w, z)


def check_pound_equivariance(sigma, w, z):
    """pb conjugates like its arguments: pb(s.w, s.z) = s.pb(w, z)."""
    lhs = pound_bracket(act_on_form(sigma, w), act_on_form(sigma, z)).data
    rhs = act_on_form(sigma, pound_bracket(w, z)).data
    return _sup_diff(lhs, rhs) / _scale(w, z)


def check_kato(gamma, omega, floor_frac=0.2, return_fields=False):
    """Pointwise Kato inequality |d|w|| <= |nabla w| on the region where
    |w| stays above floor_frac times its sup.

    The left side is evaluated through d<w,w> / (2|w|), so no square root
    ever passes through a transform and both sides are spectrally exact
    for band-limited inputs with headroom.  Returns the largest masked
    violation, scaled; negative values mean strict inequality everywhere.
    """
    grid = gamma.grid
    u = inner_product(omega, omega)
    du = _partials_stack(grid, u, fiber_ndim=0).real
    mag = np.sqrt(np.maximum(u, 0.0))
    mask = mag >= floor_frac * mag.max()
    lhs_sq = (du ** 2).sum(axis=0) / np.where(mask, 4.0 * np.maximum(u, 1e-300), 1.0)
    nw = covariant_derivative(gamma, omega)
    rhs_sq = inner_product(nw, nw)
    lhs = np.sqrt(np.maximum(lhs_sq, 0.0))
    rhs = np.sqrt(np.maximum(rhs_sq, 0.0))
    violation = float(np.where(mask, lhs - rhs, -np.inf).max())
    scaled = violation / _scale(omega, nw)
    if return_fields:
        return scaled, {"lhs": lhs, "rhs": rhs, "mask": mask}
    return scaled


def check_comparison(gamma):
    """Integrated flat comparison of the first derivative energy with the
    divergence energy:  E_1 - 2 E_div + (1/2) int <B(F), F> = 0 where
    B(F)_[il] = 2 sum_a [F_ai, F_al].  Returns the scaled residual."""
    from .calculus import curvature
    F = curvature(gamma)
    e1 = ymk_energy(gamma, 1)
    ed = bym_energy(gamma)
    pb = pound_bracket(F, F)
    corr = 0.5 * float(integrate(
        gamma.grid,
        inner_product(pb.like(pb.data - pb.data.swapaxes(0, 1)), F)))
    resid = abs(e1 - 2.0 * ed + 0.5 * corr)
    return resid / (1.0 + abs(e1) + abs(ed) + abs(corr))


def check_bianchi(gamma):
    """D F = 0 for the curvature of any connection.  Scaled sup residual."""
    from .calculus import curvature
    F = curvature(gamma)
    DF = exterior_derivative(gamma, F)
    return float(np.abs(DF.data).max()) / _scale(gamma, F)


# ---------------------------------------------------------------------------
# principal symbols
# ---------------------------------------------------------------------------

def _sub_curvature_lin(xi, B):
    return xi[:, None, None, None] * B[None] - xi[None, :, None, None] * B[:, None]


def _sub_codiff_deg2(xi, eta):
    return -np.einsum("a,ab...->b...", xi, eta)


def _sub_codiff_deg1(xi, B):
    return -np.einsum("a,a...->...", xi, B)


def _sub_main(xi, B, k):
    """Real substitution through div . lap^k . (curvature linearization)."""
    xi2 = float(xi @ xi)
    return xi2 ** k * _sub_codiff_deg2(xi, _sub_curvature_lin(xi, B))


def _sub_gauge_term(xi, B, k):
    """Real substitution through d . lap^k . div on degree-1 fields."""
    xi2 = float(xi @ xi)
    mu = xi2 ** k * _sub_codiff_deg1(xi, B)
    return xi[:, None, None] * mu[None]


def _pair(X, Y):
    """Minus-trace pairing summed over the leading slot axes."""
    Xf = X.reshape((-1,) + X.shape[-2:])
    Yf = Y.reshape((-1,) + Y.shape[-2:])
    return float(np.real(-np.einsum("sab,sba->", Xf, Yf)))


def transverse_symbol_form(xi, B, k):
    """Closed quadratic form of the linearized main term:
    (-1)^k |xi|^2k (|xi|^2 |B|^2 - |<B, xi>|^2)."""
    xi2 = float(xi @ xi)
    s = np.einsum("a,a...->...", xi, B)
    return (-1.0) ** k * xi2 ** k * (xi2 * _pair(B, B) - _pair(s, s))


def full_symbol_form(xi, B, k):
    """Closed quadratic form of the gauge-fixed linearization:
    (-1)^k |xi|^(2k+2) |B|^2."""
    xi2 = float(xi @ xi)
    return (-1.0) ** k * xi2 ** (k + 1) * _pair(B, B)


def symbol_residuals(xi, B, k):
    """Compositional substitution versus the closed forms.  Returns the
    dict of scaled residuals; the operator-to-wave sign (-1)^(k+1) is
    folded in so that both routes price the same object."""
    sgn = (-1.0) ** (k + 1)
    main = sgn * _sub_main(xi, B, k)
    gauge = sgn * _sub_gauge_term(xi, B, k)
    scale = 1.0 + float(xi @ xi) ** (k + 1) * abs(_pair(B, B))
    q_main = _pair(main, B)
    q_full = _pair(main + gauge, B)
    full_vec = (-1.0) ** k * float(xi @ xi) ** (k + 1) * B
    return {
        "transverse_form": abs(q_main - transverse_symbol_form(xi, B, k)) / scale,
        "full_form": abs(q_full - full_symbol_form(xi, B, k)) / scale,
        "full_vector": float(np.abs(main + gauge - full_vec).max()) / scale,
    }


def _wave_basis(grid, group, mode):
    """cos(kappa.x) e_a T_alpha for every axis slot and algebra direction."""
    phase = np.zeros(grid.sizes)
    for a in range(grid.dim):
        x = grid._expand(grid.axis_points(a), a, 0)
        phase = phase + 2.0 * np.pi * mode[a] * x / grid.lengths[a]
    wave = np.cos(phase)
    fields = []
    for a in range(grid.dim):
        for T in group.basis:
            data = np.zeros((grid.dim,) + grid.sizes + (group.m,) * 2,
                            dtype=complex)
            data[a] = wave[..., None, None] * T
            fields.append(FormField(grid, group, data, degree=1))
    return fields


def discrete_symbol_grams(grid, group, mode, k):
    """Gram matrices of the linearized main and gauge terms extracted from
    the actual grid operators at the flat connection, normalized so they
    equal the closed symbol forms at xi = kappa(mode).

    Returns (G_main, G_gauge, xi)."""
    zero = zero_connection(grid, group)
    basis = _wave_basis(grid, group, mode)
    nb = len(basis)
    half_vol = grid.volume / 2.0
    xi = np.array([2.0 * np.pi * mode[a] / grid.lengths[a]
                   for a in range(grid.dim)])

    def lap_k(field):
        out = field
        for _ in range(k):
            out = rough_laplacian(zero, out)
        return out

    G_main = np.zeros((nb, nb))
    G_gauge = np.zeros((nb, nb))
    for i, w in enumerate(basis):
        main = codifferential(zero, lap_k(exterior_derivative(zero, w)))
        mu = lap_k(codifferential(zero, w))
        gauge = exterior_derivative(zero, mu)
        for j, v in enumerate(basis):
            G_main[i, j] = float(integrate(grid, inner_product(main, v))) / half_vol
            G_gauge[i, j] = float(integrate(grid, inner_product(gauge, v))) / half_vol
    # An order-(2k+2) operator acts on cosine waves as i^(2k+2) =
    # (-1)^(k+1) times its real substitution, and the closed symbol forms
    # carry the same (-1)^(k+1); the raw Grams already match them.
    return G_main, G_gauge, xi


def _closed_grams(grid, group, xi, k):
    basisB = []
    for a in range(grid.dim):
        for T in group.basis:
            B = np.zeros((grid.dim, group.m, group.m), dtype=complex)
            B[a] = T
            basisB.append(B)
    nb = len(basisB)
    sgn = (-1.0) ** (k + 1)
    Gm = np.zeros((nb, nb))
    Gg = np.zeros((nb, nb))
    for i, B in enumerate(basisB):
        main = sgn * _sub_main(xi, B, k)
        gauge = sgn * _sub_gauge_term(xi, B, k)
        for j, C in enumerate(basisB):
            Gm[i, j] = _pair(main, C)
            Gg[i, j] = _pair(gauge, C)
    return Gm, Gg


def check_symbol(grid, group, mode, k):
    """Grid-extracted symbol Grams versus the closed substitution Grams,
    definiteness of the transverse form after the (-1)^k sign, its kernel
    dimension (one mode direction per algebra generator), and strict
    positivity of the gauge-fixed form.  Returns a report dict."""
    G_main, G_gauge, xi = discrete_symbol_grams(grid, group, mode, k)
    Cm, Cg = _closed_grams(grid, group, xi, k)
    scale = 1.0 + float(np.abs(Cm).max()) + float(np.abs(Cg).max())
    agree_main = float(np.abs(G_main - Cm).max()) / scale
    agree_gauge = float(np.abs(G_gauge - Cg).max()) / scale

    sym = (-1.0) ** k * 0.5 * (G_main + G_main.T)
    eig = np.linalg.eigvalsh(sym)
    top = float(eig.max())
    psd_defect = max(0.0, -float(eig.min())) / (top if top > 0 else 1.0)
    kernel_dim = int((eig < 1e-10 * max(top, 1.0)).sum())

    full = 0.5 * (G_main + G_gauge + (G_main + G_gauge).T)
    xi2 = float(xi @ xi)
    # the gauge-fixed Gram must be (-1)^k |xi|^(2k+2) times the plain
    # basis Gram <B_i, B_j>
    basisB = []
    for a in range(grid.dim):
        for T in group.basis:
            B = np.zeros((grid.dim, group.m, group.m), dtype=complex)
            B[a] = T
            basisB.append(B)
    Gb = np.array([[_pair(Bi, Bj) for Bj in basisB] for Bi in basisB])
    target = (-1.0) ** k * xi2 ** (k + 1) * Gb
    full_resid = float(np.abs(full - target).max()) / (1.0 + np.abs(target).max())
    eig_full = np.linalg.eigvalsh((-1.0) ** k * full)
    return {
        "agree_main": agree_main,
        "agree_gauge": agree_gauge,
        "psd_defect": psd_defect,
        "kernel_dim": kernel_dim,
        "expected_kernel": group.algebra_dim,
        "full_resid": full_resid,
        "full_is_definite": bool(eig_full.min() > 0),
        "k": k,
        "mode": tuple(int(v) for v in mode),
    }


# ---------------------------------------------------------------------------
# scaling laws
# ---------------------------------------------------------------------------

def divisible_filter(field, q):
    """Keep only Fourier modes whose components are all divisible by q, so
    the field is exactly representable after a zoom by 1/q."""
    grid = field.grid
    axes = grid.spatial_axes(2)
    hat = np.fft.fftn(field.data, axes=axes)
    keep = np.ones(grid.sizes, dtype=bool)
    for a in range(grid.dim):
        keep &= grid._expand(np.mod(grid.modes(a), q) == 0, a, 0)
    hat *= keep[(None,) * field.slots + (...,) + (None, None)]
    return field.like(np.fft.ifftn(hat, axes=axes))


def check_scaling_derivative(gamma, omega, lam, ell, center):
    """Covariant chain rule under zoom: with G_lam the zoomed connection and
    plain pullback of omega, nabla^(ell) picks up exactly lam^ell:

        nabla^(ell)_[G_lam] (omega o zoom) = lam^ell zoom(nabla^(ell) omega)

    Exact for fields whose modes divide by 1/lam.  Scaled sup residual."""
    glam = rescale_snapshot(gamma, center, lam)
    wlam = zoom_form(omega, center, lam, weight=0)
    lhs = iterated_covariant_derivative(glam, wlam, ell).data
    rhs = zoom_form(iterated_covariant_derivative(gamma, omega, ell),
                    center, lam, weight=ell).data
    return _sup_diff(lhs, rhs) / _scale(gamma, omega)


def check_curvature_zoom(gamma, lam, center):
    """F(G_lam) = lam^2 F(G) o zoom.  Scaled sup residual."""
    from .calculus import curvature
    glam = rescale_snapshot(gamma, center, lam)
    lhs = curvature(glam).data
    rhs = zoom_form(curvature(gamma), center, lam, weight=2).data
    return _sup_diff(lhs, rhs) / _scale(gamma)


def _region_mask(grid, center, radius, lam, region):
    if region == "torus":
        return 1.0, 1.0
    if region == "ball":
        return (ball_mask(grid, center, radius),
                ball_mask(grid, center, lam * radius))
    if region == "box":
        big, small = np.ones(grid.sizes, bool), np.ones(grid.sizes, bool)
        for a in range(grid.dim):
            x = grid._expand(grid.axis_points(a), a, 0) * np.ones(grid.sizes)
            d = x - center[a]
            L = grid.lengths[a]
            # wrap into [-L/2, L/2) so that radius = L/2 covers the seam
            d = d - L * np.floor(d / L + 0.5)
            eps = 1e-9 * grid.spacing[a]
            big &= (d >= -radius - eps) & (d < radius - eps)
            small &= (d >= -lam * radius - eps) & (d < lam * radius - eps)
        return big, small
    raise ValueError("region must be 'ball', 'box' or 'torus'")


def check_scaling_lp(gamma, ell, p, lam, center, radius, region="ball"):
    """Local L^p mass of the zoomed derivative chain versus the original:

        int_[R] |nabla^(ell) F_lam|^p = lam^((ell+2)p - n) int_[lam R] ...

    over balls or boxes around the zoom center (exponent (ell+2)p over
    the whole torus).  Returns measured and expected exponents and both
    masses; the exponent is read off from the mass ratio."""
    from .calculus import curvature
    grid = gamma.grid
    glam = rescale_snapshot(gamma, center, lam)
    W = iterated_covariant_derivative(gamma, curvature(gamma), ell)
    Wlam = iterated_covariant_derivative(glam, curvature(glam), ell)
    mask_big, mask_small = _region_mask(grid, center, radius, lam, region)
    dens = np.maximum(inner_product(W, W), 0.0) ** (p / 2.0)
    dens_lam = np.maximum(inner_product(Wlam, Wlam), 0.0) ** (p / 2.0)
    mass = float(integrate(grid, dens * mask_small))
    mass_lam = float(integrate(grid, dens_lam * mask_big))
    n = 0 if region == "torus" else grid.dim
    expected = (ell + 2) * p - n
    measured = math.log(mass_lam / mass) / math.log(lam) \
        if mass > 0 and mass_lam > 0 else math.nan
    return {
        "measured": measured,
        "expected": float(expected),
        "mass_zoomed": mass_lam,
        "mass_original": mass,
        "region": region,
    }


def critical_dimension(k):
    """Dimension in which the k-energy is scale invariant: 2(k + 2)."""
    return 2 * (k + 2)


def interpolation_ratio_report(gamma, ell, j):
    """Monitored interpolation quotient

        ||nabla^ell F|| / (||nabla^(ell+j) F||^theta ||F||^(1-theta)),
        theta = ell / (ell + j),

    in L2.  Report only; 0 on flat input instead of 0/0."""
    from .calculus import curvature
    F = curvature(gamma)
    chain = [F]
    for _ in range(ell + j):
        chain.append(covariant_derivative(gamma, chain[-1]))
    low = math.sqrt(l2_norm_sq(chain[0]))
    mid = math.sqrt(l2_norm_sq(chain[ell]))
    high = math.sqrt(l2_norm_sq(chain[ell + j]))
    theta = ell / (ell + j) if (ell + j) > 0 else 0.0
    denom = high ** theta * low ** (1.0 - theta)
    ratio = mid / denom if denom > 0 else 0.0
    return {"l2_f": low, "l2_mid": mid, "l2_high": high,
            "theta": theta, "ratio": ratio}


# ---------------------------------------------------------------------------
# the suite
# ---------------------------------------------------------------------------

SUITE_TOL = 1e-8


def run_identity_suite(seed=0, trials=50, verbose=False):
    """Run every structural check over `trials` seeded random inputs split
    across u(1) and su(2) on a 32^2 torus (16^3 where a third axis is
    needed).  Returns a report dict keyed by check name; each entry has
    max_scaled_residual, tol, trials, failures (seeds), and pass."""
    from .algebra import StructureGroup
    grid2 = TorusGrid((32, 32), (2 * np.pi, 2 * np.pi))
    grid3 = TorusGrid((16, 16, 16), (2 * np.pi, 2 * np.pi, 2 * np.pi))
    groups = (StructureGroup.u1(), StructureGroup.su2())

    report = {}

    def run(name, fn, n_trials=None, tol=SUITE_TOL):
        n_trials = trials if n_trials is None else n_trials
        worst = 0.0
        failures = []
        for i in range(n_trials):
            s = seed + i
            res = fn(s, groups[i % len(groups)])
            worst = max(worst, res)
            if res > tol:
                failures.append(s)
                if verbose:
                    print(f"identity failure: check={name} seed={s} "
                          f"residual={res:.3e}")
        report[name] = {"max_scaled_residual": worst, "tol": tol,
                        "trials": n_trials, "failures": failures,
                        "pass": not failures}

    def fields2(s, group, degree, nderiv=0):
        rng = np.random.default_rng(s)
        gamma = random_connection(grid2, group, 2, 0.4, rng)
        omega = random_field(grid2, group, degree, 3, 0.7, rng, nderiv)
        return rng, gamma, omega

    def commutator(s, group):
        _, gamma, omega = fields2(s, group, 1)
        return check_commutator(gamma, omega)

    def bochner1(s, group):
        _, gamma, omega = fields2(s, group, 1)
        return check_bochner(gamma, omega, 1)

    def bochner2(s, group):
        rng = np.random.default_rng(s)
        gamma = random_connection(grid3, group, 1, 0.4, rng)
        omega = random_field(grid3, group, 2, 2, 0.7, rng)
        return check_bochner(gamma, omega, 2)

    def variation0(s, group):
        rng, gamma, _ = fields2(s, group, 1)
        dgamma = random_connection(grid2, group, 3, 0.5, rng)
        return check_variation(gamma, dgamma, 0)

    def variation1(s, group):
        rng, gamma, _ = fields2(s, group, 1)
        dgamma = random_connection(grid2, group, 3, 0.5, rng)
        return check_variation(gamma, dgamma, 1)

    def adjoint(s, group):
        rng = np.random.default_rng(s)
        p = 1 + (s % 3)
        if p == 3:
            grid, bg, bw = grid3, 1, 2
        else:
            grid, bg, bw = grid2, 2, 3
        gamma = random_connection(grid, group, bg, 0.4, rng)
        omega = random_field(grid, group, p, bw, 0.7, rng)
        psi = random_field(grid, group, p - 1, bw, 0.7, rng)
        _, resid = check_adjoint_factor(gamma, omega, psi)
        return resid

    def pound_anti(s, group):
        rng = np.random.default_rng(s)
        w = random_field(grid2, group, 2, 3, 0.7, rng)
        z = random_field(grid2, group, 1, 3, 0.7, rng)
        return check_pound_antisymmetry(w, z)

    def pound_equi(s, group):
        rng = np.random.default_rng(s)
        w = random_field(grid2, group, 2, 3, 0.7, rng)
        z = random_field(grid2, group, 1, 3, 0.7, rng)
        sigma = random_gauge(grid2, group, rng, kind="winding", band=1)
        return check_pound_equivariance(sigma, w, z)

    def kato(s, group):
        rng = np.random.default_rng(s)
        gamma = random_connection(grid2, group, 2, 0.4, rng)
        omega = random_field(grid2, group, 1, 3, 0.7, rng)
        base = np.zeros_like(omega.data)
        base[0] = 1.0 * group.basis[-1]
        omega = omega.like(omega.data + base)
        return max(check_kato(gamma, omega), 0.0)

    run("commutator", commutator)
    run("bochner_deg1", bochner1)
    run("bochner_deg2", bochner2)
    run("variation_ell0", variation0)
    run("variation_ell1", variation1)
    run("adjoint_factor", adjoint)
    run("pound_antisymmetry", pound_anti)
    run("pound_equivariance", pound_equi, tol=1e-10)
    run("kato", kato)

    def bianchi(s, group):
        rng = np.random.default_rng(s)
        return check_bianchi(random_connection(grid2, group, 3, 0.6, rng))

    def comparison(s, group):
        rng = np.random.default_rng(s)
        return check_comparison(random_connection(grid2, group, 2, 0.4, rng))

    run("bianchi", bianchi)
    run("comparison_energy", comparison)

    ok = all(entry["pass"] for entry in report.values())
    report["_summary"] = {"pass": ok, "seed": seed, "trials": trials}
    return report
