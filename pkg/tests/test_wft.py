import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tritrack.analysis import build_blowup_data, random_grid_data
from tritrack.model import ModelError, build_grid_flux, burgers_linear, potential_A
from tritrack.pcfn import StepFunction, sample_to_grid, tvs
from tritrack.riemann import WaveKind, rh_factor, scalar_riemann
from tritrack.wft import (
    CircuitBreakerError,
    Collision,
    DegeneracyError,
    EngineError,
    init,
    next_collision,
    resolve_collision,
    run_until,
    snapshot,
    trace_characteristic,
)

M = burgers_linear()


def rh_chain_v(us, Z_far_right=1.0):
    """``v`` values making every jump of ``us`` lie on the RH curve (no 2-waves)."""
    Z = [Z_far_right]
    for a, b in zip(us[-2::-1], us[:0:-1]):
        Z.append(Z[-1] * rh_factor(M, a, b))
    Z = Z[::-1]
    return [z * math.exp(-potential_A(M, u)) for u, z in zip(us, Z)]


def data(xs, us, vs=None):
    vs = vs if vs is not None else rh_chain_v(us)
    return StepFunction(xs, us), StepFunction(xs, vs)


def test_single_riemann_datum():
    sim = init(M, 10, *data([0.0], [0.3, -0.3], [1.0, 1.0]))
    fronts = list(sim.alive())
    assert [f.kind for f in fronts] == [WaveKind.CONTACT2, WaveKind.SHOCK1]
    assert [f.speed for f in fronts] == [-0.7, 0.0]
    run_until(sim, 10.0)
    assert sim.interactions == 0 and len(sim) == 2


def test_constant_data_has_no_fronts():
    sim = init(M, 10, StepFunction.constant(0.1), StepFunction.constant(2.0))
    assert len(sim) == 0 and next_collision(sim) is None
    run_until(sim, 3.0)
    u, v = snapshot(sim, 3.0)
    assert u == StepFunction.constant(0.1) and v == StepFunction.constant(2.0)


def test_two_block_front_count_matches_fans():
    nu = 5
    xs, us, vs = [0.0, 1.0, 2.0], [0.0, 0.2, -0.2, 0.0], [1.0, 1.5, 0.5, 1.0]
    sim = init(M, nu, StepFunction(xs, us), StepFunction(xs, vs))
    g = build_grid_flux(M, nu)
    expected = 0
    for a, b, va, vb in zip(us[:-1], us[1:], vs[:-1], vs[1:]):
        jumps = scalar_riemann(g, a, b)
        expected += len(jumps)
        Z = vb * math.exp(potential_A(M, b))
        for j in reversed(jumps):
            Z *= rh_factor(M, j.u_left, j.u_right)
        if Z != va * math.exp(potential_A(M, a)):
            expected += 1
    assert len(sim) == expected


def test_collision_time_linear_intercept():
    # shock 0.3 -> 0.1 at x=0 (speed 0.2), shock 0.1 -> -0.1 at x=1 (speed 0)
    sim = init(M, 10, *data([0.0, 1.0], [0.3, 0.1, -0.1]))
    assert all(f.family == 1 for f in sim.alive())
    ev = next_collision(sim)
    assert ev.t == pytest.approx(5.0, rel=1e-15) and ev.x == pytest.approx(1.0)
    assert len(ev.fronts) == 2


def test_sorted_speeds_no_collision():
    sim = init(M, 10, *data([0.0], [-0.2, 0.2]))
    assert next_collision(sim) is None
    run_until(sim, 5.0)
    assert sim.interactions == 0


def first_event_after(sim, t):
    # earlier events are 2-contacts crossing shocks, which leave shock speeds alone
    while True:
        ev = next_collision(sim)
        if ev.t > t:
            return ev
        resolve_collision(sim, ev)


TRIPLE = ([-1.0, 0.0, 1.0], [0.15, 0.05, -0.05, -0.15], [1.0, 1.0, 1.0, 1.0])


def test_symmetric_triple_meet_is_one_group():
    sim = init(M, 20, *data(*TRIPLE))
    ev = first_event_after(sim, 9.0)
    assert [f.family for f in ev.fronts] == [1, 1, 1]
    assert ev.t == pytest.approx(10.0) and ev.x == pytest.approx(0.0, abs=1e-12)


def test_symmetric_triple_meet_exact_mode():
    sim = init(M, 20, *data(*TRIPLE), exact=True)
    ev = first_event_after(sim, 9)
    assert [f.family for f in ev.fronts] == [1, 1, 1]
    assert isinstance(ev.t, Fraction) and ev.x == 0
    resolve_collision(sim, ev)
    kinds = [f.kind for f in sim.alive()]
    assert kinds.count(WaveKind.SHOCK1) == 1


def test_two_shocks_merge():
    sim = init(M, 10, *data([-1.0, 1.0], [0.2, 0.0, -0.2]))
    ev = next_collision(sim)
    assert ev.t == pytest.approx(10.0)
    resolve_collision(sim, ev)
    fronts = list(sim.alive())
    assert [f.kind for f in fronts] == [WaveKind.CONTACT2, WaveKind.SHOCK1]
    shock = fronts[1]
    assert (shock.u_left, shock.u_right, shock.speed) == (0.2, -0.2, 0.0)
    assert fronts[0].speed == pytest.approx(M.a(0.2))


def test_shock_meets_contact2_on_its_right():
    # stationary shock 0.3 -> -0.3 at 0, Contact2 at 0.5 inside u = -0.3
    us = [0.3, -0.3, -0.3]
    Zr_far = 2.0
    Z_mid = 1.0
    Z_left = Z_mid * rh_factor(M, 0.3, -0.3)
    vs = [Z_left * math.exp(0.3), Z_mid * math.exp(-0.3), Zr_far * math.exp(-0.3)]
    u0 = StepFunction([0.0, 0.5], us)
    v0 = StepFunction([0.0, 0.5], vs)
    sim = init(M, 10, u0, v0)
    assert [f.kind for f in sim.alive()] == [WaveKind.SHOCK1, WaveKind.CONTACT2]
    ev = next_collision(sim)
    assert ev.t == pytest.approx(0.5 / 1.3)
    resolve_collision(sim, ev)
    c2, s1 = list(sim.alive())
    assert c2.kind is WaveKind.CONTACT2 and c2.speed == pytest.approx(-0.7)
    assert s1.kind is WaveKind.SHOCK1 and s1.speed == 0.0
    assert (s1.u_left, s1.u_right) == (0.3, -0.3)
    assert s1.Z_left == pytest.approx(Zr_far * rh_factor(M, 0.3, -0.3), rel=1e-15)


def test_contact2_pileup_raises():
    sim = init(M, 10, StepFunction.constant(0.1), StepFunction([0.0, 1.0], [1.0, 2.0, 3.0]))
    a, b = list(sim.alive())
    with pytest.raises(EngineError):
        resolve_collision(sim, Collision(1.0, 0.0, (a, b)))


def test_run_backwards_and_cap():
    sim = init(M, 10, *data([0.0, 1.0], [0.3, 0.1, -0.1]), cap=0)
    with pytest.raises(CircuitBreakerError):
        run_until(sim, 10.0)
    sim = init(M, 10, *data([0.0], [0.3, -0.3]))
    run_until(sim, 1.0)
    with pytest.raises(ValueError):
        run_until(sim, 0.5)


def test_init_errors():
    with pytest.raises(ModelError):
        init(burgers_linear(1.0), 10, StepFunction.constant(0.0), StepFunction.constant(1.0))
    with pytest.raises(ValueError):
        init(M, 10, StepFunction([0.0], [0.0, 0.05]), StepFunction.constant(1.0))


def test_snapshots():
    u0, v0 = data([0.0], [0.3, -0.3], [1.0, 1.0])
    sim = init(M, 10, u0, v0)
    run_until(sim, 1.0)
    u, v = snapshot(sim, 0.0)
    assert u == u0 and np.allclose(v.values, v0.values)
    u, v = snapshot(sim, 1.0)
    assert u.breakpoints.tolist() == [0.0]
    assert v.breakpoints.tolist() == [-0.7, 0.0]
    assert v.values[1] == pytest.approx(13 / 7, rel=1e-14)
    with pytest.raises(ValueError):
        snapshot(sim, 2.0)


def test_trace_across_stationary_shock():
    sim = init(M, 10, *data([0.0], [0.3, -0.3], [1.0, 1.0]))
    run_until(sim, 2.0)
    tr = trace_characteristic(sim, 1.0, 2.0)
    (t0, x0), (t1, x1), (t2, x2) = tr.vertices
    assert (x1 - x0) / (t1 - t0) == pytest.approx(-1.3)
    assert (x2 - x1) / (t2 - t1) == pytest.approx(-0.7)
    assert tr.Z_final / tr.Z_initial == pytest.approx(1.0192216, rel=1e-7)
    assert len(tr.crossings) == 1 and tr.crossings[0].ratio == rh_factor(M, 0.3, -0.3)


def test_trace_degeneracy():
    sim = init(M, 10, *data([0.0], [0.3, -0.3], [1.0, 1.0]))
    run_until(sim, 1.0)
    with pytest.raises(DegeneracyError) as err:
        trace_characteristic(sim, 0.0, 1.0)
    assert err.value.front_id is not None


def test_trace_in_constant_region():
    sim = init(M, 10, StepFunction.constant(0.2), StepFunction.constant(1.0))
    tr = trace_characteristic(sim, 0.5, 0.0)
    assert tr.Z_final == tr.Z_initial
    run_until(sim, 2.0)
    tr = trace_characteristic(sim, 0.5, 2.0)
    assert tr.vertices[-1][1] == pytest.approx(0.5 + 2 * M.a(0.2))


def test_blowup_early_interactions_are_1_2_crossings():
    data3 = build_blowup_data(3)
    nu = 27
    sim = init(M, nu, sample_to_grid(data3.u0, nu), data3.v0)
    T = float(min(data3.T))
    run_until(sim, T * (1 - 1e-9))
    assert sim.interactions > 0
    for ev in sim.events:
        fams = sorted(sim.fronts[i].family for i in ev.killed)
        assert fams == [1, 2]


def test_pruning_keeps_left_side():
    sim = init(M, 10, *data([0.0], [0.3, -0.3], [1.0, 1.0]))
    run_until(sim, 0.5)
    dropped = sim.truncate_right(-0.1)
    assert dropped == 1
    assert [f.kind for f in sim.alive()] == [WaveKind.CONTACT2]
    sim.check_invariants()


def test_exact_and_float_modes_agree():
    rng = np.random.default_rng(7)
    u0, v0 = random_grid_data(rng, 20, M.M, pieces=5)
    a = init(M, 20, u0, v0)
    b = init(M, 20, u0, v0, exact=True)
    # t = 1.7 is well away from any event time of this run
    run_until(a, 1.7)
    run_until(b, Fraction(17, 10))
    assert len(a.events) == len(b.events) > 10
    ua, va = snapshot(a, 1.7)
    ub, vb = snapshot(b, Fraction(17, 10))
    assert ua.values.tolist() == ub.values.tolist()
    np.testing.assert_allclose(ua.breakpoints, ub.breakpoints, atol=1e-12)
    np.testing.assert_allclose(va.values, vb.values, rtol=1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10**6), st.integers(2, 7))
def test_engine_invariants(seed, pieces):
    rng = np.random.default_rng(seed)
    nu = 30
    u0, v0 = random_grid_data(rng, nu, M.M, pieces)
    sim = init(M, nu, u0, v0, debug=True)
    window = sim.window(2.0)
    mass0 = (u0.integral(*window), v0.integral(*window))
    tv0 = [tvs(sample_to_grid(u0, nu), s)[0] for s in (1.0, 0.5, 1 / 3)]
    sup0 = float(np.max(np.abs(u0.values)))
    prev = tv0
    while True:
        ev = next_collision(sim)
        if ev is None or ev.t > 2.0:
            break
        assert ev.t >= sim.clock
        resolve_collision(sim, ev)
        u, v = snapshot(sim, sim.clock)
        assert np.all(np.abs(u.values * nu - np.round(u.values * nu)) < 1e-9)
        assert np.max(np.abs(u.values)) <= sup0 + 1e-15
        assert np.min(v.values) > 0
        assert abs(u.integral(*window) - mass0[0]) <= 1e-10
        assert abs(v.integral(*window) - mass0[1]) <= 1e-10
        now = [tvs(u, s)[0] for s in (1.0, 0.5, 1 / 3)]
        for a, b in zip(now, prev):
            assert a <= b * (1 + 1e-12) + 1e-15
        prev = now
