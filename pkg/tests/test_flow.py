"""Time integration: step laws, the abelian closed form, blowup handling,
and the parabolic rescaling utilities."""

import math

import numpy as np

from ymklab import (FlowConfig, FlowState, FormField, StructureGroup,
                    TorusGrid, blowup_monitor, cfl_timestep, curvature,
                    flow_step, grad_discrete, normalized_zoom, random_field,
                    rescale_snapshot, run_flow, smoothing_report)
from ymklab.flow import abelian_mode_initial, lump_initial
from conftest import extended_pointwise_norm

SEED = 41
SU2 = StructureGroup.su2()
U1 = StructureGroup.u1()


def test_cfl_scales_with_the_symbol_order():
    """Halving every torus length doubles the largest resolved frequency,
    so the parabolic step bound for an order 2k+2 operator shrinks by
    2^{2k+2}."""
    for k in (0, 1, 2):
        g1 = TorusGrid((16, 16), (1.0, 1.0))
        g2 = TorusGrid((16, 16), (0.5, 0.5))
        ratio = cfl_timestep(g1, k) / cfl_timestep(g2, k)
        assert abs(ratio - 2.0 ** (2 * k + 2)) < 1e-10 * 2.0 ** (2 * k + 2)


def test_euler_step_is_explicit_gradient_descent():
    g = TorusGrid((16, 16), (1.0, 1.0))
    gam = random_field(g, SU2, 1, 2, 0.4, np.random.default_rng(SEED))
    cfg = FlowConfig(k=1, rho=0.5, integrator="euler", dt=1e-5, t_max=1e-4)
    st = FlowState(t=0.0, gamma=gam)
    stepped = flow_step(st, cfg, 1e-5)
    manual = gam.data - 1e-5 * grad_discrete(gam, 1, 0.5).data
    assert np.array_equal(stepped.gamma.data, manual)
    assert stepped.t == 1e-5 and stepped.step_index == 1


def test_rk4_matches_the_abelian_closed_form():
    """A transverse u(1) mode kappa decays by exp(-2 |kappa|^2 t) under the
    discrete-gradient flow; 20 rk4 steps reproduce that to near round-off."""
    g = TorusGrid((32, 32), (1.0, 1.0))
    gam = abelian_mode_initial(g, U1, (0, 1), 0, 0.3, phase=0.7)
    cfg = FlowConfig(k=0, integrator="rk4", dt=1e-4, t_max=2e-3)
    st = FlowState(t=0.0, gamma=gam)
    for _ in range(20):
        st = flow_step(st, cfg, 1e-4)
    kap2 = (2.0 * math.pi) ** 2
    exact = gam.data * math.exp(-2.0 * kap2 * st.t)
    err = np.max(np.abs(st.gamma.data - exact)) / np.max(np.abs(gam.data))
    assert err < 1e-10


def test_exp_euler_is_exact_for_abelian_data_at_large_steps():
    """The integrating-factor step applies the per-mode transverse decay in
    closed form; with no nonlinear remainder one step of size 0.05 lands on
    the exact solution even though explicit euler would need dt ~ 1e-3."""
    g = TorusGrid((32, 32), (1.0, 1.0))
    gam = abelian_mode_initial(g, U1, (0, 1), 0, 0.3, phase=0.7)
    cfg = FlowConfig(k=0, integrator="exp_euler", dt=0.05, t_max=0.05)
    st = flow_step(FlowState(t=0.0, gamma=gam), cfg, 0.05)
    kap2 = (2.0 * math.pi) ** 2
    exact = gam.data * math.exp(-2.0 * kap2 * 0.05)
    err = np.max(np.abs(st.gamma.data - exact)) / np.max(np.abs(exact))
    assert err < 1e-12


def test_euler_respects_and_violates_the_cfl_bound():
    """At the default safety the energy decreases; at four times the bound
    the k=0 iteration on the same data grows past any fixed factor."""
    g = TorusGrid((16, 16), (1.0, 1.0))
    gam = random_field(g, SU2, 1, 2, 0.4, np.random.default_rng(SEED + 1))
    from ymklab import ym_energy
    e0 = ym_energy(gam)

    dt_ok = cfl_timestep(g, 0)
    cfg = FlowConfig(k=0, integrator="euler", dt=dt_ok, t_max=200 * dt_ok)
    st = FlowState(t=0.0, gamma=gam.copy())
    for _ in range(200):
        st = flow_step(st, cfg, dt_ok)
    assert ym_energy(st.gamma) < e0

    dt_bad = 4.0 * dt_ok
    st = FlowState(t=0.0, gamma=gam.copy())
    grew = False
    for _ in range(200):
        st = flow_step(st, cfg, dt_bad)
        if not np.all(np.isfinite(st.gamma.data)) \
                or ym_energy(st.gamma) > 1e3 * e0:
            grew = True
            break
    assert grew


def test_run_flow_emits_records_and_dissipates():
    g = TorusGrid((16, 16), (1.0, 1.0))
    gam = random_field(g, SU2, 1, 2, 0.3, np.random.default_rng(SEED + 2))
    cfg = FlowConfig(k=0, integrator="euler", dt=None, t_max=5e-3,
                     sample_interval=10)
    st, recs = run_flow(gam, cfg)
    assert not st.blown_up
    assert recs[0].t == 0.0
    assert abs(recs[-1].t - st.t) < 1e-15
    energies = [r.ym_rho_k for r in recs]
    assert all(b <= a + 1e-12 for a, b in zip(energies, energies[1:]))
    gnorms = [r.grad_norm for r in recs]
    assert all(gn >= 0.0 and math.isfinite(gn) for gn in gnorms)

    rep = smoothing_report(recs, 0, q_max=2)
    assert set(rep) == {1, 2}
    for q in (1, 2):
        assert rep[q]["finite"] and rep[q]["sup"] >= 0.0


def test_blowup_freezes_the_state_and_stamps_the_report():
    """A ceiling below the initial curvature sup must flag immediately,
    leave a finite frozen state, and record where the sup was attained."""
    g = TorusGrid((16, 16), (1.0, 1.0))
    gam = random_field(g, SU2, 1, 2, 0.5, np.random.default_rng(SEED + 3))
    cfg = FlowConfig(k=0, integrator="euler", dt=1e-4, t_max=0.01,
                     sample_interval=5, sup_ceiling=1e-6)
    st, recs = run_flow(gam, cfg)
    assert st.blown_up
    assert st.blowup_info is not None
    assert math.isfinite(st.blowup_info["sup_F"])
    assert st.blowup_info["sup_location"] is not None
    assert np.all(np.isfinite(st.gamma.data))
    assert len(recs) >= 1


def test_blowup_monitor_finds_the_lump_center():
    g = TorusGrid((64, 64), (1.0, 1.0))
    lump = lump_initial(g, SU2, 0.08, 0.05, center=(0.5, 0.5))
    scan = blowup_monitor(lump, 0, radius=0.125, stride=1)
    loc = scan["sup_location"]
    assert math.isfinite(scan["sup_F"]) and scan["sup_F"] > 0.0
    assert abs(loc[0] - 0.5) < 0.1 and abs(loc[1] - 0.5) < 0.1


def test_rescale_snapshot_matches_the_hand_formula():
    """Zooming G(y) = i a sin(2 pi y_1 / L) e_2 about c gives
    lam * G(c + lam (x - c)); trig-polynomial resampling is exact for both
    dyadic and non-dyadic factors."""
    L, a = 2.0, 0.37
    g = TorusGrid((32, 32), (L, L))
    x1 = g.axis_points(0)
    data = np.zeros((2,) + g.sizes + (1, 1), dtype=complex)
    data[1, ..., 0, 0] = (1j * a * np.sin(2 * math.pi * x1 / L))[:, None]
    gam = FormField(g, U1, data, 1)
    c = (0.25, 0.5)
    for lam in (0.5, 0.7):
        z = rescale_snapshot(gam, c, lam)
        y1 = c[0] + lam * (x1 - c[0])
        expect = lam * 1j * a * np.sin(2 * math.pi * y1 / L)
        err = np.max(np.abs(z.data[1, ..., 0, 0] - expect[:, None]))
        assert err < 1e-12, lam
    import pytest
    with pytest.raises(ValueError):
        rescale_snapshot(gam, c, 0.0)


def test_normalized_zoom_pins_the_curvature_to_one():
    g = TorusGrid((64, 64), (1.0, 1.0))
    lump = lump_initial(g, SU2, 0.08, 0.05)
    zoomed, info = normalized_zoom(lump, 0)
    val = extended_pointwise_norm(curvature(zoomed), info["center_index"])
    assert abs(val - 1.0) < 1e-8
    assert 0.0 < info["mu"] <= 1.0
    assert abs(info["lam"] - info["peak"] ** (-1.0)) < 1e-12
