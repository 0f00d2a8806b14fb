"""Command line entry point: ``tritrack {solve,riemann,blowup,verify,tvs}``.

``solve`` reads a plain ``key = value`` config file.  Values are decoded as
JSON when possible and kept as strings otherwise; ``#`` starts a comment.

=============  =============================================================
key            meaning
=============  =============================================================
model          registry name (``burgers_linear``, ``cubic_shifted``) or
               ``{"f": [...], "a": [...]}`` ascending coefficients
M              state bound (default: the model's own)
nu             grid parameter, integer >= 1
T              horizon, >= 0
initial        ``[[x, u, v], ...]`` pieces (first ``x`` ignored, may be
               null), ``csv:PATH`` (columns ``x,u,v`` or ``x,value``), or
               ``blowup:N``
v              constant ``v0`` when the initial data carry no ``v`` (1.0)
snapshots      list of times (``T`` is always added)
traces         list of start points for 2-characteristics
output         output directory (default ``out``)
cap            interaction cap (default 10**7)
exact          ``true`` for rational event times
=============  =============================================================

Exit statuses: 0 success, 1 failed verification, 2 bad configuration or
input, 3 uniform strict hyperbolicity fails, 4 interaction cap exceeded,
5 internal engine error.
"""

from __future__ import annotations

import argparse
import concurrent.futures as cf
import csv
import io
import json
import math
import os
import sys
import tempfile
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis
from .model import ModelError, build_grid_flux, check_ush, from_Z, get_model, to_Z
from .pcfn import StepFunction, read_csv, sample_to_grid, tvs, tvs_bruteforce
from .riemann import system_riemann
from .wft import CircuitBreakerError, DegeneracyError, EngineError, Simulation, init

HEADER = "# tritrack-v1"

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2
EXIT_USH = 3
EXIT_CAP = 4
EXIT_ENGINE = 5


class ConfigError(ValueError):
    pass


# ----------------------------------------------------------------------
# output helpers


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    return repr(float(x))


def _table(header, rows) -> str:
    buf = io.StringIO()
    buf.write(HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(c) for c in row])
    return buf.getvalue()


def write_atomic(path: Path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _tag(x: float) -> str:
    return repr(float(x))


# ----------------------------------------------------------------------
# configuration


def parse_config(text: str) -> dict:
    cfg: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (p.strip() for p in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        try:
            cfg[key] = json.loads(value)
        except json.JSONDecodeError:
            cfg[key] = value
    return cfg


KNOWN_KEYS = {"model", "M", "nu", "T", "initial", "v", "snapshots", "traces", "output", "cap", "exact"}


def _number(cfg, key, kind=float, default=None):
    if key not in cfg:
        if default is None:
            raise ConfigError(f"missing key {key!r}")
        return default
    val = cfg[key]
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ConfigError(f"{key} must be a number, got {val!r}")
    if kind is int and float(val) != int(val):
        raise ConfigError(f"{key} must be an integer, got {val!r}")
    return kind(val)


def _initial_data(spec, base: Path, v_const: float) -> tuple[StepFunction, StepFunction]:
    if isinstance(spec, str) and spec.startswith("blowup:"):
        try:
            N = int(spec.split(":", 1)[1])
        except ValueError:
            raise ConfigError(f"bad blow-up block count in {spec!r}") from None
        if not 1 <= N <= analysis.MAX_GEOMETRIC_BLOCKS:
            raise ConfigError(
                f"blow-up block count must be in [1, {analysis.MAX_GEOMETRIC_BLOCKS}]"
            )
        data = analysis.build_blowup_data(N)
        return data.u0, data.v0
    if isinstance(spec, str) and spec.startswith("csv:"):
        path = Path(spec[4:])
        if not path.is_absolute():
            path = base / path
        if not path.exists():
            raise ConfigError(f"initial data file {path} does not exist")
        text = path.read_text()
        try:
            header = next(ln for ln in text.splitlines() if ln.strip() and not ln.startswith("#"))
            cols = [c.strip() for c in header.split(",")]
            if "u" in cols:
                u0 = read_csv(path, "u")
                v0 = read_csv(path, "v") if "v" in cols else StepFunction.constant(v_const)
            else:
                u0 = read_csv(path)
                v0 = StepFunction.constant(v_const)
        except (ValueError, StopIteration) as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
        return u0, v0
    if isinstance(spec, list):
        try:
            rows = [(float("-inf") if r[0] is None else float(r[0]), float(r[1]),
                     float(r[2]) if len(r) > 2 else v_const) for r in spec]
            u0 = StepFunction.from_pieces([(x, u) for x, u, _ in rows])
            v0 = StepFunction.from_pieces([(x, v) for x, _, v in rows])
        except (TypeError, ValueError, IndexError) as exc:
            raise ConfigError(f"bad inline initial data: {exc}") from None
        return u0, v0
    raise ConfigError(f"cannot interpret initial data {spec!r}")


def load_run_config(path: Path) -> dict:
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    cfg = parse_config(path.read_text())
    unknown = set(cfg) - KNOWN_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    try:
        model = get_model(cfg.get("model", "burgers_linear"),
                          _number(cfg, "M") if "M" in cfg else None)
    except ModelError as exc:
        raise ConfigError(str(exc)) from None
    nu = _number(cfg, "nu", int)
    if nu < 1:
        raise ConfigError("nu must be >= 1")
    T = _number(cfg, "T")
    if not T >= 0:
        raise ConfigError("T must be >= 0")
    v_const = _number(cfg, "v", float, 1.0)
    u0, v0 = _initial_data(cfg.get("initial"), path.parent, v_const)
    snaps = cfg.get("snapshots", [])
    traces = cfg.get("traces", [])
    for key, seq in (("snapshots", snaps), ("traces", traces)):
        if not isinstance(seq, list) or not all(
            isinstance(x, (int, float)) and not isinstance(x, bool) for x in seq
        ):
            raise ConfigError(f"{key} must be a list of numbers")
    if any(not 0 <= t <= T for t in snaps):
        raise ConfigError("snapshot times must lie in [0, T]")
    out = Path(cfg.get("output", "out"))
    if not out.is_absolute():
        out = path.parent / out
    exact = cfg.get("exact", False)
    if not isinstance(exact, bool):
        raise ConfigError("exact must be true or false")
    return {
        "model": model,
        "nu": nu,
        "T": T,
        "u0": u0,
        "v0": v0,
        "snapshots": sorted(set(float(t) for t in snaps) | {T}),
        "traces": [float(x) for x in traces],
        "output": out,
        "cap": _number(cfg, "cap", int, 10_000_000),
        "exact": exact,
    }


# ----------------------------------------------------------------------
# solve


def fronts_table(sim: Simulation) -> str:
    m = sim.model
    rows = []
    for f in sorted(sim.fronts.values(), key=lambda f: f.id):
        rows.append([
            f.id, f.family, f.kind.value, f.birth_t, f.birth_x, f.death_t, f.speed,
            f.u_left, f.u_right, from_Z(m, f.u_left, float(f.Z_left)),
            from_Z(m, f.u_right, float(f.Z_right)),
        ])
    header = ["id", "family", "kind", "birth_t", "birth_x", "death_t", "speed",
              "u_l", "u_r", "v_l", "v_r"]
    return _table(header, rows)


def snapshot_table(sim: Simulation, t) -> str:
    u, v = sim.snapshot(t)
    xs = sorted(set(u.breakpoints.tolist()) | set(v.breakpoints.tolist()))
    lefts = [-math.inf] + xs
    rows = [[x, u.value_at(x) if x != -math.inf else u.values[0],
             v.value_at(x) if x != -math.inf else v.values[0]] for x in lefts]
    return _table(["x", "u", "v"], rows)


def trace_table(trace) -> str:
    rows = []
    for i, (t, x) in enumerate(trace.vertices):
        Z = trace.Z_segments[min(i, len(trace.Z_segments) - 1)]
        rows.append([t, x, Z])
    return _table(["t", "x", "Z"], rows)


def cmd_solve(args) -> int:
    try:
        cfg = load_run_config(Path(args.config))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    m = cfg["model"]
    margin = check_ush(m)
    if margin <= 0:
        print(f"uniform strict hyperbolicity fails for {m.name} on [-{m.M}, {m.M}]: "
              f"inf f' - sup a = {margin:.6g}", file=sys.stderr)
        return EXIT_USH
    nu = cfg["nu"]
    u0 = sample_to_grid(cfg["u0"], nu)
    out: Path = cfg["output"]
    try:
        sim = init(m, nu, u0, cfg["v0"], exact=cfg["exact"], cap=cfg["cap"])
    except ModelError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    T = Fraction(cfg["T"]) if cfg["exact"] else cfg["T"]
    window = sim.window(T)
    stats = []
    status = EXIT_OK
    try:
        for t in cfg["snapshots"]:
            tt = Fraction(t) if cfg["exact"] else t
            sim.run_until(tt)
            write_atomic(out / f"snapshot_{_tag(t)}.csv", snapshot_table(sim, tt))
            st = sim.stats(tt, window)
            stats.append([st[k] for k in STATS_KEYS])
    except CircuitBreakerError as exc:
        print(f"circuit breaker: {exc}", file=sys.stderr)
        status = EXIT_CAP
    except EngineError as exc:
        print(f"engine error: {exc}", file=sys.stderr)
        write_atomic(out / "events.csv", _events_table(exc.events or sim.events))
        status = EXIT_ENGINE
    write_atomic(out / "fronts.csv", fronts_table(sim))
    write_atomic(out / "stats.csv", _table(STATS_KEYS, stats))
    if status != EXIT_OK:
        return status
    for x0 in cfg["traces"]:
        try:
            trace = sim.trace_characteristic(x0, T)
        except DegeneracyError as exc:
            print(f"trace from {x0!r} skipped: {exc}", file=sys.stderr)
            continue
        write_atomic(out / f"trace_{_tag(x0)}.csv", trace_table(trace))
    return EXIT_OK


STATS_KEYS = ["t", "tvs_u_1", "tvs_u_1/2", "tvs_u_1/3", "mass_u", "mass_v", "max_abs_Z"]


def _events_table(events) -> str:
    rows = [[e.t, e.x, " ".join(map(str, e.killed)), " ".join(map(str, e.born))] for e in events]
    return _table(["t", "x", "killed", "born"], rows)


# ----------------------------------------------------------------------
# riemann / blowup / tvs


def _pair(text: str) -> tuple[float, float]:
    try:
        u, v = (float(p) for p in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'u,v', got {text!r}") from None
    return u, v


def cmd_riemann(args) -> int:
    try:
        m = get_model(args.model, args.M)
    except ModelError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    margin = check_ush(m)
    if margin <= 0:
        print(f"uniform strict hyperbolicity fails: margin {margin:.6g}", file=sys.stderr)
        return EXIT_USH
    g = build_grid_flux(m, args.nu)
    (ul, vl), (ur, vr) = args.left, args.right
    try:
        fan = system_riemann(m, g, (ul, to_Z(m, ul, vl)), (ur, to_Z(m, ur, vr)))
    except (ModelError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    for w in fan:
        (a, Za), (b, Zb) = w.left_state, w.right_state
        rows.append([w.kind.value, w.speed, a, from_Z(m, a, Za), b, from_Z(m, b, Zb)])
    sys.stdout.write(_table(["kind", "speed", "u_l", "v_l", "u_r", "v_r"], rows))
    return EXIT_OK


def cmd_blowup(args) -> int:
    if args.blocks < 1:
        print("config error: --blocks must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    Z, logZ = analysis.blowup_ratio_product(args.blocks)
    report = {
        "blocks": args.blocks,
        "Z_left": Z,
        "log_Z": logZ,
        "bvs_sum_p3": analysis.bvs_partial_sums(args.blocks, 3.0),
    }
    status = EXIT_OK
    if args.nu is not None:
        if args.blocks > analysis.MAX_GEOMETRIC_BLOCKS:
            print(f"config error: front tracking needs --blocks <= "
                  f"{analysis.MAX_GEOMETRIC_BLOCKS}", file=sys.stderr)
            return EXIT_CONFIG
        try:
            cc = analysis.blowup_wft_crosscheck(args.blocks, args.nu, x0=args.trace_from)
        except CircuitBreakerError as exc:
            print(f"circuit breaker: {exc}", file=sys.stderr)
            return EXIT_CAP
        report["crosscheck"] = cc.to_dict()
        status = EXIT_OK if cc.passed else EXIT_FAIL
    text = json.dumps(report, indent=2, default=float) + "\n"
    if args.out:
        write_atomic(Path(args.out), text)
    sys.stdout.write(text)
    return status


def _parse_s(text: str) -> float:
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"bad exponent {text!r}") from None


def cmd_tvs(args) -> int:
    try:
        f = read_csv(Path(args.input), args.column)
    except (OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    rows = []
    for s in args.s:
        try:
            tv, semi = tvs(f, s)
        except ValueError as exc:
            print(f"input error: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        rows.append([s, tv, semi])
    sys.stdout.write(_table(["s", "tv", "seminorm"], rows))
    return EXIT_OK


# ----------------------------------------------------------------------
# verify


def _suite_tvs():
    rng = np.random.default_rng(1)
    mismatches = 0
    for _ in range(500):
        n = int(rng.integers(1, 15))
        vals = rng.integers(-16, 17, size=n) / 8.0
        f = StepFunction(np.arange(n - 1, dtype=float), vals)
        for s in (1.0, 0.5, 1.0 / 3.0):
            if tvs(f, s)[0] != tvs_bruteforce(f.values, s):
                mismatches += 1
    rep = analysis.FitReport("tvs_oracle", (500, 14), float("nan"), float(mismatches), 0.0,
                             0.0, 0.0, mismatches == 0)
    return [rep], {}


def _suite_cubic():
    reps = [
        analysis.cubic_flatness_scan(get_model("burgers_linear"), constant_target=2.0 / 3.0),
        analysis.cubic_flatness_scan(get_model("cubic_shifted")),
    ]
    bs = np.geomspace(*analysis.FLATNESS_BAND, 41)
    from .riemann import rh_factor

    rows = [[b] + [rh_factor(get_model(n), b, -b) - 1.0 for n in ("burgers_linear", "cubic_shifted")]
            for b in bs]
    return reps, {"cubic_flatness.csv": (["b", "burgers_linear", "cubic_shifted"], rows)}


def _suite_rarefaction():
    rep = analysis.rarefaction_convergence()
    rows = list(zip(rep.sample_range, rep.extra["errors"]))
    return [rep], {"rarefaction.csv": (["nu", "error"], rows)}


def _suite_blowup(blocks: int):
    Ns = [n for n in (10**3, 10**4, 10**5, 10**6) if n <= blocks] or [blocks]
    if len(Ns) < 2:
        Ns = sorted({max(1, blocks // 1000), max(2, blocks // 100), max(3, blocks // 10), blocks})
    rep = analysis.blowup_growth_fit(Ns)
    rows = list(zip(Ns, rep.extra["log_Z"]))
    return [rep], {"blowup_growth.csv": (["N", "log_Z"], rows)}


def _suite_bvs():
    reps = analysis.bvs_dichotomy()
    rows = [[n, tv3, ref, tv4, inc] for (n, tv3, ref), (_, tv4, inc)
            in zip(reps[0].extra["rows"], reps[1].extra["rows"])]
    return reps, {"bvs.csv": (["N", "tvs_1/3", "8ln(N+26)", "tvs_1/4", "increment_1/4"], rows)}


def _suite_crosscheck():
    reps, rows = [], []
    for N in (1, 2, 3, 6, 12):
        cc = analysis.blowup_wft_crosscheck(N, 810)
        reps.append(analysis.FitReport(f"crosscheck[N={N}]", (N, 810), float("nan"),
                                       cc.terminal_Z, cc.rel_error, cc.oracle_product, 1e-10,
                                       cc.passed, cc.to_dict()))
        rows.append([N, cc.shock_product, cc.oracle_product, cc.rel_error, cc.terminal_rel_error])
    return reps, {"crosscheck.csv": (["N", "shock_product", "oracle", "rel_error",
                                      "terminal_rel_error"], rows)}


def _suite_engine():
    return [analysis.engine_property_check()], {}


def _suite_transport():
    from .model import burgers_linear
    from .wft import init as wft_init

    m = burgers_linear()
    sim = wft_init(m, 10, StepFunction.constant(0.1), StepFunction([0.0], [1.0, 2.0]))
    sim.run_until(1.0)
    good = analysis.transport_residual(sim, ((-1.0, 1.0), (0.0, 1.0)))
    Zl, Zr = to_Z(m, 0.1, 1.0), to_Z(m, 0.1, 2.0)
    c = float(m.a(0.1))
    bad = analysis.weak_transport_residual(
        c, lambda t: ([(c + 0.1) * t], [Zl, Zr]), ((-1.0, 1.0), (0.0, 1.0))
    )
    reps = [
        analysis.FitReport("transport[contact2]", (-1.0, 1.0), float("nan"), good, good,
                           0.0, 1e-8, good <= 1e-8),
        analysis.FitReport("transport[mis-sped]", (-1.0, 1.0), float("nan"), bad, bad,
                           1e-2, 0.0, bad >= 1e-2),
    ]
    return reps, {}


SUITES = {
    "tvs": _suite_tvs,
    "cubic": _suite_cubic,
    "rarefaction": _suite_rarefaction,
    "blowup": _suite_blowup,
    "bvs": _suite_bvs,
    "crosscheck": _suite_crosscheck,
    "engine": _suite_engine,
    "transport": _suite_transport,
}


def _run_suite(name: str, blocks: int):
    if name == "blowup":
        return SUITES[name](blocks)
    return SUITES[name]()


def _threads() -> int:
    raw = os.environ.get("TRITRACK_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def cmd_verify(args) -> int:
    names = args.suite or list(SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        print(f"config error: unknown suite(s) {unknown}; known: {sorted(SUITES)}", file=sys.stderr)
        return EXIT_CONFIG
    workers = min(_threads(), len(names))
    if workers > 1:
        with cf.ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_suite, names, [args.blocks] * len(names)))
    else:
        results = [_run_suite(n, args.blocks) for n in names]
    reports = []
    out_dir = Path(args.out_dir) if args.out_dir else None
    for name, (reps, tables) in zip(names, results):
        for r in reps:
            reports.append({"suite": name, **r.to_dict()})
        if out_dir is not None:
            for fname, (header, rows) in tables.items():
                write_atomic(out_dir / fname, _table(header, rows))
    ok = all(r["passed"] for r in reports)
    doc = {"passed": ok, "reports": reports}
    text = json.dumps(doc, indent=2, default=_json_default) + "\n"
    if args.report:
        write_atomic(Path(args.report), text)
    for r in reports:
        print(f"{'PASS' if r['passed'] else 'FAIL'}  {r['name']}")
    if not ok:
        for r in reports:
            if not r["passed"]:
                print(f"failed: {r['name']} (exponent {r['exponent']!r}, "
                      f"constant {r['constant']!r}, target {r['target']!r})", file=sys.stderr)
    return EXIT_OK if ok else EXIT_FAIL


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, Fraction):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return str(obj)


# ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tritrack", description="Front tracking for triangular systems.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="run front tracking from a config file")
    s.add_argument("config")
    s.set_defaults(func=cmd_solve)

    r = sub.add_parser("riemann", help="solve one Riemann problem, states given as u,v")
    r.add_argument("--model", default="burgers_linear")
    r.add_argument("--M", type=float, default=None)
    r.add_argument("--nu", type=int, required=True)
    r.add_argument("--left", type=_pair, required=True)
    r.add_argument("--right", type=_pair, required=True)
    r.set_defaults(func=cmd_riemann)

    b = sub.add_parser("blowup", help="blow-up product, optionally cross-checked by front tracking")
    b.add_argument("--blocks", type=int, required=True)
    b.add_argument("--nu", type=int, default=None)
    b.add_argument("--trace-from", type=float, default=1.0)
    b.add_argument("--out", default=None)
    b.set_defaults(func=cmd_blowup)

    v = sub.add_parser("verify", help="run the verification scans")
    v.add_argument("--suite", action="append", choices=sorted(SUITES))
    v.add_argument("--blocks", type=int, default=10**6)
    v.add_argument("--report", default="verify_report.json")
    v.add_argument("--out-dir", default=None)
    v.set_defaults(func=cmd_verify)

    t = sub.add_parser("tvs", help="fractional total variation of a step-function CSV")
    t.add_argument("input")
    t.add_argument("--s", type=_parse_s, nargs="+", default=[1.0, 0.5, 1.0 / 3.0])
    t.add_argument("--column", default="value")
    t.set_defaults(func=cmd_tvs)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
