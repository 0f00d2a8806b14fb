import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tritrack.model import ModelError, build_grid_flux, burgers_linear, cubic_shifted, to_Z
from tritrack.riemann import (
    WaveKind,
    grid_index,
    oleinik_check,
    rh_factor,
    rh_plus,
    scalar_fan_indices,
    scalar_riemann,
    shock_speed,
    system_riemann,
)

BURGERS = burgers_linear()
G10 = build_grid_flux(BURGERS, 10)


def burgers_r(d):
    return (1 - d / 2) / (1 + d / 2) * math.exp(d)


def test_burgers_shock():
    fan = scalar_riemann(G10, 0.3, -0.3)
    assert len(fan) == 1
    assert fan[0].speed == 0.0 and fan[0].kind is WaveKind.SHOCK1


def test_burgers_rarefaction():
    fan = scalar_riemann(G10, -0.2, 0.2)
    assert [j.speed for j in fan] == [-0.15, -0.05, 0.05, 0.15]
    assert all(j.kind is WaveKind.CONTACT1 for j in fan)


def test_exact_mode_speeds():
    out = scalar_fan_indices(G10, -2, 2, exact=True)
    assert [s for _, _, s, _ in out] == [
        Fraction(-3, 20), Fraction(-1, 20), Fraction(1, 20), Fraction(3, 20)
    ]


def test_grid_index():
    assert grid_index(0.3, 10) == 3
    assert grid_index(Fraction(-1, 5), 10) == -2
    with pytest.raises(ValueError):
        grid_index(0.35, 10)


def test_rh_factor_burgers():
    assert rh_factor(BURGERS, 0.3, -0.3) == pytest.approx(1.3 / 0.7 * math.exp(-0.6), rel=1e-14)
    assert rh_factor(BURGERS, 0.3, -0.3) == pytest.approx(1.0192216, rel=1e-7)
    assert rh_factor(BURGERS, 0.1, 0.1) == 1.0


@settings(max_examples=200, deadline=None)
@given(st.floats(-1 / 3, 1 / 3), st.floats(-1 / 3, 1 / 3))
def test_burgers_factor_depends_on_jump_only(um, up):
    if abs(up - um) < 1e-6:
        return
    assert rh_factor(BURGERS, um, up) == pytest.approx(burgers_r(up - um), rel=1e-12)


def test_rh_factor_rejects_out_of_range():
    with pytest.raises(ModelError):
        rh_factor(BURGERS, 0.5, 0.0)


def test_rh_plus_zero():
    assert rh_plus(BURGERS, 0.3, -0.3, 0.0) == 0.0


def test_system_riemann_intermediate_state():
    m = BURGERS
    fan = system_riemann(m, G10, (0.3, to_Z(m, 0.3, 1.0)), (-0.3, to_Z(m, -0.3, 1.0)))
    assert [w.kind for w in fan] == [WaveKind.CONTACT2, WaveKind.SHOCK1]
    assert fan.speeds == [-0.7, 0.0]
    v_m = fan.intermediate_Z * math.exp(0.3)
    assert abs(v_m - 13 / 7) / (13 / 7) <= 1e-14


def test_no_contact2_when_Z_matches():
    m = BURGERS
    Zr = 1.0
    Zl = rh_plus(m, 0.3, -0.3, Zr)
    fan = system_riemann(m, G10, (0.3, Zl), (-0.3, Zr))
    assert [w.kind for w in fan] == [WaveKind.SHOCK1]


def test_pure_contact2():
    fan = system_riemann(BURGERS, G10, (0.1, 1.0), (0.1, 2.0))
    assert len(fan) == 1 and fan[0].kind is WaveKind.CONTACT2
    assert fan[0].speed == pytest.approx(-0.9)


def test_cubic_composite_wave_straddling_inflection():
    m = cubic_shifted()
    g = build_grid_flux(m, 20)
    fan = scalar_riemann(g, -0.5, 0.5)
    speeds = [j.speed for j in fan]
    assert speeds == sorted(speeds) and len(set(speeds)) == len(speeds)
    assert fan[0].kind is WaveKind.SHOCK1  # concave part is jumped over
    assert all(j.kind is WaveKind.CONTACT1 for j in fan[1:])
    for j in fan:
        assert oleinik_check(g, j.u_left, j.u_right, j.speed)


def _lower_envelope(nodes):
    # independent oracle: for each node, the max over supporting lines below
    n = len(nodes)
    env = np.array(nodes, dtype=float)
    for i in range(n):
        for a in range(i + 1):
            for b in range(i, n):
                if a == b:
                    continue
                chord = nodes[a] + (nodes[b] - nodes[a]) * (i - a) / (b - a)
                env[i] = min(env[i], chord)
    return env


@settings(max_examples=80, deadline=None)
@given(st.integers(-20, 20), st.integers(-20, 20))
def test_fan_is_the_convex_envelope(km, kp):
    m = cubic_shifted()
    g = build_grid_flux(m, 20)
    out = scalar_fan_indices(g, km, kp)
    if km == kp:
        assert out == []
        return
    lo, hi = sorted((km, kp))
    nodes = [g.node(k) for k in range(lo, hi + 1)]
    sign = 1 if km < kp else -1
    env = sign * _lower_envelope([sign * y for y in nodes])
    # chain the fan and compare the interpolant with the envelope
    speeds = [s for _, _, s, _ in out]
    assert all(a < b for a, b in zip(speeds, speeds[1:]))
    assert out[0][0] == km and out[-1][1] == kp
    for (k0, k1, s, _) in out:
        for k in range(min(k0, k1), max(k0, k1) + 1):
            val = g.node(k0) + s * (k - k0) / 20
            assert val == pytest.approx(env[k - lo], abs=1e-12)
        assert oleinik_check(g, k0 / 20, k1 / 20, s)


def test_oleinik_rejects_wrong_side():
    # Burgers rarefaction jumped by a single shock violates the chord test
    assert not oleinik_check(G10, -0.2, 0.2, 0.0)
    assert not oleinik_check(G10, 0.3, -0.3, 0.1)


def test_shock_speed():
    assert shock_speed(G10, 0.2, 0.0) == pytest.approx(0.1)
    assert shock_speed(BURGERS, 0.2, -0.2) == 0.0
