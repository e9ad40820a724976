"""Fixed-point time stepping: decoupling, damping, halving, and probes.

Key scenarios:

  * With kappa = 0, no reaction, and mirror-identical species the transport
    operator is the same in every sweep, so sweep two reproduces sweep one
    bit for bit and the increment is exactly zero: the step converges in
    exactly two sweeps.

  * Damping and the sweep starting guess change the path, never the fixed
    point: runs with damping 0.7 or a zero initial iterate land within a
    few tol of the undamped run.

  * A step too large for the allotted sweeps is halved until it converges;
    the shortened steps are accepted and the march still lands exactly on
    the requested end time.
"""

import numpy as np
import pytest

from dpnpsim.gummel import (
    GummelError,
    advance,
    gummel_step,
    initial_state,
)
from dpnpsim.mesh import CellField, build_grid
from dpnpsim.params import PhysParams, ReactionSpec
from dpnpsim.schedule import constant_schedule
from dpnpsim.transport import Concentrations


def weighted_dist(grid, params, a, b):
    vol = grid.cell_volume
    d1 = a.conc.c1.values - b.conc.c1.values
    d2 = a.conc.c2.values - b.conc.c2.values
    return float(
        np.sqrt(abs(params.z1) * (d1**2).sum() * vol + abs(params.z2) * (d2**2).sum() * vol)
    )


def coupled_setup(n=12):
    g = build_grid(n, n, 1.0, 1.0)
    p = PhysParams(
        theta=0.8,
        kappa=0.1,
        z1=1,
        z2=-2,
        reaction=ReactionSpec("exchange", 0.1),
    )
    c1 = CellField.from_function(g, lambda x, y: 0.6 + 0.3 * np.cos(np.pi * x) * np.cos(np.pi * y))
    c2 = CellField.from_function(g, lambda x, y: 0.4 + 0.1 * np.sin(np.pi * x))
    init = Concentrations(c1, c2)
    sched = constant_schedule(
        g,
        sigma={"top": 0.02, "bottom": -0.02},
        f={"left": -0.05, "right": 0.05},
        g1={"left": 0.03},
        g2={"right": 0.02},
        rho_b=CellField.full(g, 0.01),
    )
    return g, p, init, sched


def test_initial_state_is_consistent_at_t0():
    g, p, init, sched = coupled_setup()
    st = initial_state(g, p, init, sched.at(0.0))
    assert st.time == 0.0
    assert st.consistent
    assert st.conc is init
    assert st.electro.phi.values.shape == (g.ny, g.nx)
    assert st.flow.q_faces.fx.shape == (g.ny, g.nx + 1)


def test_decoupled_limit_converges_in_exactly_two_sweeps():
    # kappa = 0 and identical neutral species: the transport system does not
    # depend on the lagged iterate, so the second sweep repeats the first
    # exactly and the increment is identically zero.
    g = build_grid(8, 8, 1.0, 1.0)
    p = PhysParams(theta=0.8, kappa=0.0, z1=1, z2=-1)
    c0 = CellField.from_function(g, lambda x, y: 0.5 + 0.2 * np.cos(np.pi * x))
    init = Concentrations(c0, CellField(g, c0.values.copy()))
    sched = constant_schedule(g, f={"left": -0.1, "right": 0.1})
    st0 = initial_state(g, p, init, sched.at(0.0))
    _, rep = gummel_step(g, p, st0, sched.at(0.01), 0.01, tol=1e-10, max_sweeps=50)
    assert rep.sweeps == 2
    assert rep.residuals[0] > 1e-3
    assert rep.residuals[1] == 0.0
    assert rep.converged


def test_step_validates_damping_and_init_iterate():
    g, p, init, sched = coupled_setup(6)
    st0 = initial_state(g, p, init, sched.at(0.0))
    with pytest.raises(ValueError, match="damping"):
        gummel_step(g, p, st0, sched.at(0.01), 0.01, 1e-8, 10, damping=0.0)
    with pytest.raises(ValueError, match="init_iterate"):
        gummel_step(g, p, st0, sched.at(0.01), 0.01, 1e-8, 10, init_iterate="warm")


def test_step_raises_with_report_when_sweeps_exhausted():
    g, p, init, sched = coupled_setup(6)
    st0 = initial_state(g, p, init, sched.at(0.0))
    with pytest.raises(GummelError) as exc:
        gummel_step(g, p, st0, sched.at(0.01), 0.01, tol=1e-300, max_sweeps=3)
    rep = exc.value.report
    assert rep.sweeps == 3
    assert not rep.converged
    assert len(rep.residuals) == 3


def test_converged_state_carries_applied_rates_and_time():
    g, p, init, sched = coupled_setup(8)
    st0 = initial_state(g, p, init, sched.at(0.0))
    st1, rep = gummel_step(g, p, st0, sched.at(0.02), 0.02, tol=1e-10, max_sweeps=50)
    assert st1.time == pytest.approx(0.02)
    assert st1.consistent
    assert rep.converged and rep.residuals[-1] <= 1e-10
    # production uses the lagged iterate, consumption the new one, so the
    # exchange rates cancel only to the sweep tolerance
    np.testing.assert_allclose(st1.applied_r1 + st1.applied_r2, 0.0, atol=1e-9)
    assert np.any(st1.applied_r1 != 0.0)


def test_advance_lands_exactly_on_T_end_with_clipped_final_step():
    g, p, init, sched = coupled_setup(8)
    res = advance(g, p, init, sched, T_end=0.05, dt=0.02, tol=1e-10)
    times = [s.time for s in res.states]
    assert times[0] == 0.0
    assert len(res.states) == len(res.reports) + 1
    assert len(res.monitors) == len(res.reports)
    assert times[-1] == pytest.approx(0.05, abs=1e-14)
    # steps 0.02, 0.02, then clipped 0.01
    assert len(res.reports) == 3
    assert times[2] - times[1] == pytest.approx(0.02)
    assert times[3] - times[2] == pytest.approx(0.01)
    assert res.ledger is not None and res.evaluator is not None


def test_all_monitors_pass_on_mild_coupled_run():
    g, p, init, sched = coupled_setup()
    res = advance(g, p, init, sched, T_end=0.05, dt=0.01, tol=1e-10)
    for m in res.monitors:
        for flag in type(m).FLAGS:
            assert getattr(m, flag), "%s failed at t=%g" % (flag, m.time)
        assert m.case == "converged"


def test_probe_extra_sweep_residual_stays_below_tol():
    g, p, init, sched = coupled_setup()
    res = advance(
        g, p, init, sched, T_end=0.05, dt=0.01, tol=1e-10, probe_extra_sweep=True
    )
    for rep in res.reports:
        assert rep.extra_sweep_residual is not None
        assert rep.extra_sweep_residual <= 1e-10


def test_damping_and_zero_init_reach_the_same_fixed_point():
    g, p, init, sched = coupled_setup()
    tol = 1e-10
    kw = dict(T_end=0.05, dt=0.01, tol=tol, monitor=False)
    base = advance(g, p, init, sched, **kw)
    damped = advance(g, p, init, sched, damping=0.7, **kw)
    zeroed = advance(g, p, init, sched, init_iterate="zero", **kw)
    assert weighted_dist(g, p, base.states[-1], damped.states[-1]) <= 10 * tol
    assert weighted_dist(g, p, base.states[-1], zeroed.states[-1]) <= 10 * tol
    # damping slows the sweep but must not change the answer
    assert sum(r.sweeps for r in damped.reports) > sum(r.sweeps for r in base.reports)


def test_symmetric_electrolyte_keeps_species_identical():
    # z = (1, -1), identical initial data, inflow, and exchange coupling:
    # every operation treats the species identically, so they stay equal.
    g = build_grid(16, 16, 1.0, 1.0)
    p = PhysParams(theta=1.0, kappa=0.5, z1=1, z2=-1)
    w = CellField.from_function(g, lambda x, y: 0.5 + 0.3 * np.cos(np.pi * x) * np.cos(np.pi * y))
    init = Concentrations(w, CellField(g, w.values.copy()))
    sched = constant_schedule(
        g, f={"bottom": -0.2, "top": 0.2}, g1={"left": 0.05}, g2={"left": 0.05}
    )
    res = advance(g, p, init, sched, T_end=0.05, dt=0.01, tol=1e-10)
    gap = max(np.abs(s.conc.c1.values - s.conc.c2.values).max() for s in res.states)
    assert gap <= 1e-8


def test_advance_halves_dt_until_the_sweep_converges():
    # strong coupling and a tight sweep budget: the nominal step cannot
    # converge, the halved steps do, and the march still reaches T_end.
    g = build_grid(8, 8, 1.0, 1.0)
    p = PhysParams(theta=0.6, kappa=3.0, z1=2, z2=-1)
    c1 = CellField.from_function(g, lambda x, y: 0.8 + 0.5 * np.sin(np.pi * x) * np.sin(np.pi * y))
    init = Concentrations(c1, CellField.full(g, 0.3))
    sched = constant_schedule(g, sigma={"left": 0.05, "right": -0.05})
    res = advance(g, p, init, sched, T_end=0.1, dt=0.1, tol=1e-8, max_sweeps=6)
    halvings = [r.halvings for r in res.reports]
    assert max(halvings) >= 3
    assert len(res.reports) > 2  # shortened steps were accepted as real steps
    assert res.states[-1].time == pytest.approx(0.1, abs=1e-12)
    assert all(r.converged for r in res.reports)


def test_advance_raises_after_exhausting_halvings():
    g = build_grid(8, 8, 1.0, 1.0)
    p = PhysParams(theta=0.6, kappa=3.0, z1=2, z2=-1)
    c1 = CellField.from_function(g, lambda x, y: 0.8 + 0.5 * np.sin(np.pi * x) * np.sin(np.pi * y))
    init = Concentrations(c1, CellField.full(g, 0.3))
    sched = constant_schedule(g, sigma={"left": 0.05, "right": -0.05})
    with pytest.raises(GummelError):
        advance(g, p, init, sched, T_end=0.1, dt=0.1, tol=1e-300, max_sweeps=1)
