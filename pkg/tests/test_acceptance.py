"""Acceptance criteria, each at its stated tolerance and time budget.

Every test records one ``PASS``/``FAIL`` line, printed together at the end
of the pytest run.
"""

import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from tritrack.analysis import (
    LINF_CONSTANT,
    blowup_growth_fit,
    blowup_wft_crosscheck,
    build_blowup_data,
    cubic_flatness_scan,
    engine_property_check,
    rarefaction_convergence,
    transport_residual,
    weak_transport_residual,
)
from tritrack.model import build_grid_flux, burgers_linear, cubic_shifted, to_Z
from tritrack.pcfn import StepFunction, tvs, tvs_bruteforce
from tritrack.riemann import WaveKind, rh_factor, scalar_riemann, system_riemann
from tritrack.wft import init, run_until


@contextmanager
def criterion(record, number, title, budget):
    state = {"ok": False, "detail": ""}
    t0 = time.perf_counter()
    try:
        yield state
    finally:
        dt = time.perf_counter() - t0
        ok = state["ok"] and dt < budget
        record(f"criterion {number}: {'PASS' if ok else 'FAIL'}  {title}  "
               f"[{dt:.2f}s / {budget:g}s]  {state['detail']}")
    assert state["ok"], state["detail"]
    assert dt < budget, f"took {dt:.2f}s, budget {budget}s"


def test_criterion_01_tvs_oracle(acceptance_line):
    with criterion(acceptance_line, 1, "TV^s DP equals brute force", 10) as c:
        # dyadic values keep every power sum exact, so equality is bitwise
        rng = np.random.default_rng(2024)
        mismatches = 0
        for _ in range(500):
            n = int(rng.integers(1, 15))
            vals = rng.integers(-64, 65, size=n) / 32.0
            f = StepFunction(np.arange(n - 1, dtype=float), vals)
            for s in (1.0, 0.5, 1.0 / 3.0):
                if tvs(f, s)[0] != tvs_bruteforce(vals, s):
                    mismatches += 1
        c["ok"] = mismatches == 0
        c["detail"] = f"mismatches={mismatches}/1500"


def test_criterion_02_scalar_riemann(acceptance_line):
    with criterion(acceptance_line, 2, "Burgers fans exact", 1) as c:
        g = build_grid_flux(burgers_linear(), 10)
        shock = scalar_riemann(g, 0.3, -0.3)
        rare = scalar_riemann(g, -0.2, 0.2)
        ok_shock = [j.speed for j in shock] == [0.0] and shock[0].kind is WaveKind.SHOCK1
        ok_rare = [j.speed for j in rare] == [-0.15, -0.05, 0.05, 0.15]
        c["ok"] = ok_shock and ok_rare
        c["detail"] = f"shock={[j.speed for j in shock]} rarefaction={[j.speed for j in rare]}"


def test_criterion_03_intermediate_state(acceptance_line):
    with criterion(acceptance_line, 3, "v_m = 13/7", 1) as c:
        m = burgers_linear()
        g = build_grid_flux(m, 10)
        fan = system_riemann(m, g, (0.3, to_Z(m, 0.3, 1.0)), (-0.3, to_Z(m, -0.3, 1.0)))
        v_m = fan.intermediate_Z * math.exp(0.3)
        rel = abs(v_m - 13 / 7) / (13 / 7)
        c["ok"] = rel <= 1e-14
        c["detail"] = f"v_m={v_m!r} rel={rel:.2e}"


def test_criterion_04_cubic_flatness(acceptance_line):
    with criterion(acceptance_line, 4, "cubic flatness exponent 3 +- 0.05", 5) as c:
        burgers = cubic_flatness_scan(burgers_linear(), 60, constant_target=2 / 3)
        cubic = cubic_flatness_scan(cubic_shifted(), 60)
        c["ok"] = burgers.passed and cubic.passed
        c["detail"] = (
            f"burgers_linear k={burgers.exponent:.4f} C={burgers.constant:.5f} "
            f"({'ok' if burgers.passed else 'FAIL'}); "
            f"cubic_shifted k={cubic.exponent:.4f} zero_points={cubic.extra['zero_points']} "
            f"r(0.1,-0.1)-1={rh_factor(cubic_shifted(), 0.1, -0.1) - 1:.3e} "
            f"({'ok' if cubic.passed else 'FAIL'})"
        )


def test_criterion_05_rarefaction_rate(acceptance_line):
    with criterion(acceptance_line, 5, "rarefaction error slope -2 +- 0.3", 5) as c:
        rep = rarefaction_convergence((20, 40, 80, 160))
        c["ok"] = rep.passed
        c["detail"] = f"slope={rep.exponent:.4f}"


def test_criterion_06_engine_properties(acceptance_line):
    with criterion(acceptance_line, 6, "conservation, positivity, TV^s decay, Z bound", 60) as c:
        rep = engine_property_check(runs=20, nu=50, C=LINF_CONSTANT)
        e = rep.extra
        c["ok"] = rep.passed
        c["detail"] = (f"drift={e['mass_drift']:.1e} min_v={e['min_v']:.3g} "
                       f"tv_violations={e['tv_violations']} C_needed={e['C_needed']:.4f} "
                       f"<= C={LINF_CONSTANT} events={e['events']}")


def test_criterion_07_blowup_rate(acceptance_line):
    with criterion(acceptance_line, 7, "log Z slope 2/3 +- 2%, monotone", 5) as c:
        rep = blowup_growth_fit((10**3, 10**4, 10**5, 10**6))
        c["ok"] = rep.passed
        c["detail"] = f"slope={rep.exponent:.5f} monotone={rep.extra['monotone']}"


@pytest.mark.slow
def test_criterion_08_engine_vs_product(acceptance_line):
    nu = 3**4 * 10
    with criterion(acceptance_line, 8, f"traced Z vs rounded product, nu={nu}", 120) as c:
        worst = 0.0
        ok = True
        parts = []
        for N in (1, 2, 3, 6, 12):
            cc = blowup_wft_crosscheck(N, nu)
            worst = max(worst, cc.rel_error, cc.terminal_rel_error)
            ok = ok and cc.passed and cc.rel_error <= 1e-10 and cc.terminal_rel_error <= 1e-10
            parts.append(f"N={N}:{cc.terminal_rel_error:.1e}")
        c["ok"] = ok
        c["detail"] = f"worst rel={worst:.1e} " + " ".join(parts)


def test_criterion_09_bvs_dichotomy(acceptance_line):
    with criterion(acceptance_line, 9, "TV^1/3 diverges, TV^1/4 increments < 1e-3", 30) as c:
        div_ok, inc_ok = True, True
        parts = []
        for N in (10**3, 10**4):
            u = build_blowup_data(N).u0
            tv3 = tvs(u, 1 / 3)[0]
            bound = 8 * math.log(N + 26) * 0.95
            div_ok = div_ok and tv3 > bound
            inc = tvs(build_blowup_data(N + 1).u0, 0.25)[0] - tvs(u, 0.25)[0]
            inc_ok = inc_ok and inc < 1e-3
            parts.append(f"N={N}: tv1/3={tv3:.2f}>{bound:.2f} inc1/4={inc:.2e}")
        c["ok"] = div_ok and inc_ok
        c["detail"] = (f"divergence {'ok' if div_ok else 'FAIL'}, "
                       f"convergence {'ok' if inc_ok else 'FAIL'}; " + "; ".join(parts))


def test_criterion_10_transport_residual(acceptance_line):
    with criterion(acceptance_line, 10, "weak transport residual", 5) as c:
        m = burgers_linear()
        sim = init(m, 10, StepFunction.constant(0.1), StepFunction([0.0], [1.0, 2.0]))
        run_until(sim, 1.0)
        flat = transport_residual(sim, ((0.5, 1.5), (0.1, 0.9)))
        with_contact = transport_residual(sim, ((-1.0, 1.0), (0.0, 1.0)))
        Zl, Zr = to_Z(m, 0.1, 1.0), to_Z(m, 0.1, 2.0)
        a = float(m.a(0.1))
        bad = weak_transport_residual(a, lambda t: ([(a + 0.1) * t], [Zl, Zr]),
                                      ((-1.0, 1.0), (0.0, 1.0)))
        c["ok"] = flat <= 1e-8 and with_contact <= 1e-8 and bad >= 1e-2
        c["detail"] = f"constant={flat:.1e} contact2={with_contact:.1e} mis-sped={bad:.4f}"
