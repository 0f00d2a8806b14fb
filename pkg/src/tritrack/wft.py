"""Event-driven wave front tracking for the triangular system.

Fronts live in a doubly linked list ordered by position.  Candidate
collisions between adjacent fronts sit in a heap and are validated lazily
when popped: an entry is stale as soon as one of its fronts dies or the
two stop being neighbours.  Every collision is resolved by one Riemann
problem between the outer states of the colliding group, so the u-part of
a 1-front passes unchanged through a 2-contact and only ``Z`` is updated.

Fronts carry ``Z`` rather than ``v``; snapshots convert back.  Dead fronts
are kept together with per-front neighbour logs so that 2-characteristics
can be traced after the run.
"""

from __future__ import annotations

import heapq
import itertools
import math
from bisect import bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

import numpy as np

from .model import FluxModel, GridFlux, ModelError, build_grid_flux, check_ush, potential_A
from .pcfn import StepFunction, tvs
from .riemann import WaveKind, _fan_waves, grid_index, rh_factor

__all__ = [
    "EngineError",
    "CircuitBreakerError",
    "DegeneracyError",
    "Front",
    "Collision",
    "EventRecord",
    "Crossing",
    "CharTrace",
    "Simulation",
    "init",
    "next_collision",
    "resolve_collision",
    "run_until",
    "snapshot",
    "trace_characteristic",
    "DEFAULT_CAP",
]

DEFAULT_CAP = 10_000_000
POSITION_RTOL = 1e-12


class EngineError(RuntimeError):
    """Internal consistency violation; carries the tail of the event log."""

    def __init__(self, message: str, events=()):
        super().__init__(message)
        self.events = list(events)


class CircuitBreakerError(RuntimeError):
    """Interaction count exceeded the configured cap."""


class DegeneracyError(ValueError):
    """A 2-characteristic runs along a 2-contact or through an interaction point."""

    def __init__(self, message: str, front_id: int | None = None):
        super().__init__(message)
        self.front_id = front_id


@dataclass(eq=False)
class Front:
    id: int
    kind: WaveKind
    birth_t: float
    birth_x: float
    speed: float
    k_left: int
    k_right: int
    Z_left: float
    Z_right: float
    nu: int
    death_t: float | None = None
    prev: "Front | None" = field(default=None, repr=False)
    next: "Front | None" = field(default=None, repr=False)
    left_log: list = field(default_factory=list, repr=False)
    right_log: list = field(default_factory=list, repr=False)

    @property
    def family(self) -> int:
        return self.kind.family

    @property
    def alive(self) -> bool:
        return self.death_t is None

    @property
    def u_left(self) -> float:
        return self.k_left / self.nu

    @property
    def u_right(self) -> float:
        return self.k_right / self.nu

    def position(self, t):
        return self.birth_x + self.speed * (t - self.birth_t)

    def neighbour_at(self, side: str, t):
        log = self.left_log if side == "left" else self.right_log
        i = bisect_right([e[0] for e in log], t) - 1
        return log[max(i, 0)][1]


@dataclass(frozen=True)
class Collision:
    t: float
    x: float
    fronts: tuple[Front, ...]


@dataclass(frozen=True)
class EventRecord:
    t: float
    x: float
    killed: tuple[int, ...]
    born: tuple[int, ...]
    left_outer: Front | None = field(repr=False)
    right_outer: Front | None = field(repr=False)
    truncation: bool = False


@dataclass(frozen=True)
class Crossing:
    front_id: int
    t: float
    ratio: float


@dataclass
class CharTrace:
    """Polyline of a 2-characteristic with the ``Z`` value on each segment."""

    vertices: list = field(default_factory=list)
    Z_segments: list = field(default_factory=list)
    u_segments: list = field(default_factory=list)
    crossings: list = field(default_factory=list)
    max_state_mismatch: float = 0.0

    @property
    def Z_final(self) -> float:
        return self.Z_segments[-1]

    @property
    def Z_initial(self) -> float:
        return self.Z_segments[0]


class Simulation:
    """Front tracking state for one run; mutate only through the event loop."""

    def __init__(self, model: FluxModel, grid: GridFlux, exact: bool = False,
                 cap: int = DEFAULT_CAP, tol: float = 0.0, debug: bool = False):
        self.model = model
        self.grid = grid
        self.nu = grid.nu
        self.exact = exact
        self.cap = cap
        self.tol = tol
        self.debug = debug
        self.clock = Fraction(0) if exact else 0.0
        self.head: Front | None = None
        self.far_left: tuple[int, float] = (0, 0.0)
        self.far_right: tuple[int, float] = (0, 0.0)
        self.fronts: dict[int, Front] = {}
        self.initial_ids: list[int] = []
        self.events: list[EventRecord] = []
        self.death_event: dict[int, EventRecord] = {}
        self.interactions = 0
        self.u0: StepFunction | None = None
        self.v0: StepFunction | None = None
        self.span: tuple[float, float] = (0.0, 0.0)
        self._heap: list = []
        self._seq = itertools.count()
        self._ids = itertools.count()

    # ------------------------------------------------------------------
    # front list plumbing

    def alive(self) -> Iterator[Front]:
        f = self.head
        while f is not None:
            yield f
            f = f.next

    def __len__(self) -> int:
        return sum(1 for _ in self.alive())

    def _new_front(self, wave, t, x) -> Front:
        speed = wave.speed
        if not self.exact:
            speed = float(speed)
        fr = Front(
            id=next(self._ids),
            kind=wave.kind,
            birth_t=t,
            birth_x=x,
            speed=speed,
            k_left=grid_index(wave.left_state[0], self.nu),
            k_right=grid_index(wave.right_state[0], self.nu),
            Z_left=wave.left_state[1],
            Z_right=wave.right_state[1],
            nu=self.nu,
        )
        self.fronts[fr.id] = fr
        return fr

    def _fan(self, kl, Zl, kr, Zr):
        return _fan_waves(self.model, self.grid, kl, kr, Zl, Zr, exact=self.exact)

    def _schedule(self, left: Front | None, right: Front | None) -> None:
        if left is None or right is None or not left.speed > right.speed:
            return
        tau = max(left.birth_t, right.birth_t)
        gap = right.position(tau) - left.position(tau)
        if gap < 0:
            gap = 0 * gap
        t = tau + gap / (left.speed - right.speed)
        if t < self.clock:
            t = self.clock
        heapq.heappush(self._heap, (t, left.position(t), next(self._seq), left, right))

    @staticmethod
    def _valid(entry) -> bool:
        _, _, _, left, right = entry
        return left.alive and right.alive and left.next is right

    def _link(self, prev: Front | None, new: list[Front], nxt: Front | None, t) -> None:
        chain = [prev, *new, nxt]
        for a, b in zip(chain[:-1], chain[1:]):
            if a is not None:
                a.next = b
                a.right_log.append((t, b))
            else:
                self.head = b
            if b is not None:
                b.prev = a
                b.left_log.append((t, a))

    # ------------------------------------------------------------------
    # events

    def next_collision(self) -> Collision | None:
        heap = self._heap
        while heap and not self._valid(heap[0]):
            heapq.heappop(heap)
        if not heap:
            return None
        t_max = heap[0][0] + self.tol if self.tol else heap[0][0]
        batch = []
        while heap and heap[0][0] <= t_max:
            entry = heapq.heappop(heap)
            if self._valid(entry):
                batch.append(entry)
        batch.sort(key=lambda e: (e[1], e[2]))
        for entry in batch:
            heapq.heappush(heap, entry)
        t, x, _, left, right = batch[0]
        if t < self.clock:
            # scheduled before a slightly later event of the same tolerance band
            t, x = self.clock, left.position(self.clock)
        group = [left, right]
        while group[0].prev is not None and abs(group[0].prev.position(t) - x) <= self.tol:
            group.insert(0, group[0].prev)
        while group[-1].next is not None and abs(group[-1].next.position(t) - x) <= self.tol:
            group.append(group[-1].next)
        return Collision(t, x, tuple(group))

    def resolve_collision(self, event: Collision) -> EventRecord:
        group = event.fronts
        t, x = event.t, event.x
        for a, b in zip(group[:-1], group[1:]):
            if a.next is not b or a.k_right != b.k_left or a.Z_right != b.Z_left:
                raise EngineError(
                    f"state chaining broken between fronts {a.id} and {b.id} at t={t}",
                    self.events[-20:],
                )
        if all(f.family == 2 for f in group):
            raise EngineError(
                f"2-contacts {[f.id for f in group]} collided at t={t}", self.events[-20:]
            )
        first, last = group[0], group[-1]
        prev, nxt = first.prev, last.next
        waves = self._fan(first.k_left, first.Z_left, last.k_right, last.Z_right)
        for f in group:
            f.death_t = t
        new = [self._new_front(w, t, x) for w in waves]
        self._link(prev, new, nxt, t)
        rec = EventRecord(
            t, x, tuple(f.id for f in group), tuple(f.id for f in new), prev, nxt
        )
        self.events.append(rec)
        for f in group:
            self.death_event[f.id] = rec
        if new:
            self._schedule(prev, new[0])
            self._schedule(new[-1], nxt)
        else:
            self._schedule(prev, nxt)
        self.clock = t
        self.interactions += 1
        if self.debug:
            self.check_invariants(t)
        return rec

    def run_until(self, T) -> None:
        if T < self.clock:
            raise ValueError(f"cannot run backwards: T={T} < clock={self.clock}")
        if self.exact:
            T = Fraction(T)
        while True:
            ev = self.next_collision()
            if ev is None or ev.t > T:
                break
            self.resolve_collision(ev)
            if self.interactions > self.cap:
                raise CircuitBreakerError(
                    f"more than {self.cap} interactions before t={T}; "
                    f"last event at t={float(ev.t):.6g}"
                )
        self.clock = T

    def truncate_right(self, x) -> int:
        """Drop every alive front strictly right of ``x`` at the current clock.

        Only sound when ``x`` is the position of a 2-characteristic: 1-fronts
        are faster and 2-fronts never cross it, so nothing right of it can
        reach the left side again.  The far-right state becomes the state
        just left of ``x``.  Returns the number of fronts dropped.
        """
        t = self.clock
        keep: Front | None = None
        dropped: list[Front] = []
        for f in self.alive():
            if f.position(t) > x + self.tol:
                dropped.append(f)
            else:
                keep = f
        if not dropped:
            return 0
        rec = EventRecord(t, x, tuple(f.id for f in dropped), (), keep, None, truncation=True)
        for f in dropped:
            f.death_t = t
            self.death_event[f.id] = rec
        self.events.append(rec)
        if keep is None:
            self.head = None
            self.far_right = self.far_left
        else:
            keep.next = None
            keep.right_log.append((t, None))
            self.far_right = (keep.k_right, keep.Z_right)
        return len(dropped)

    def check_invariants(self, t=None) -> None:
        t = self.clock if t is None else t
        k, Z = self.far_left
        last_x = None
        for f in self.alive():
            if f.k_left != k or f.Z_left != Z:
                raise EngineError(f"state chaining broken at front {f.id}", self.events[-20:])
            if f.family == 2 and f.k_left != f.k_right:
                raise EngineError(f"2-contact {f.id} changes u", self.events[-20:])
            if f.family == 1 and f.k_left == f.k_right:
                raise EngineError(f"1-front {f.id} has no u-jump", self.events[-20:])
            x = f.position(t)
            if last_x is not None and x < last_x - self.tol:
                raise EngineError(f"front {f.id} out of order at t={t}", self.events[-20:])
            last_x = x
            k, Z = f.k_right, f.Z_right
        if (k, Z) != self.far_right:
            raise EngineError("rightmost state differs from the far-field state", self.events[-20:])

    # ------------------------------------------------------------------
    # output

    def _fronts_at(self, t) -> list[Front]:
        if t == self.clock:
            return list(self.alive())
        live = [
            f for f in self.fronts.values()
            if f.birth_t <= t and (f.death_t is None or f.death_t > t)
        ]
        live.sort(key=lambda f: (f.position(t), f.speed, f.id))
        return live

    def state_at(self, t) -> tuple[list, list, list]:
        """Breakpoints and the ``(k, Z)`` pieces of the solution at time ``t``."""
        if t > self.clock + self.tol:
            raise ValueError(f"snapshot time {t} is beyond the clock {self.clock}")
        xs: list = []
        ks = [self.far_left[0]]
        Zs = [self.far_left[1]]
        for f in self._fronts_at(t):
            if f.k_left != ks[-1] or f.Z_left != Zs[-1]:
                raise EngineError(f"state chaining broken at front {f.id} (t={t})")
            x = float(f.position(t))
            if xs and x <= xs[-1]:
                ks[-1], Zs[-1] = f.k_right, f.Z_right
                continue
            xs.append(x)
            ks.append(f.k_right)
            Zs.append(f.Z_right)
        return xs, ks, Zs

    def snapshot(self, t) -> tuple[StepFunction, StepFunction]:
        xs, ks, Zs = self.state_at(t)
        us = [k / self.nu for k in ks]
        vs = [Z * math.exp(-potential_A(self.model, u)) for u, Z in zip(us, Zs)]
        return StepFunction(xs, us), StepFunction(xs, vs)

    def Z_profile(self, t) -> StepFunction:
        xs, _, Zs = self.state_at(t)
        return StepFunction(xs, Zs)

    def window(self, T) -> tuple[float, float]:
        """Interval that no front can leave before time ``T``."""
        m = self.model
        us = np.linspace(-m.M, m.M, 2001)
        c = float(max(np.max(np.abs(m.df(us))), np.max(np.abs(m.a(us)))))
        lo, hi = self.span
        pad = c * float(T) + 1.0
        return lo - pad, hi + pad

    def stats(self, t, window: tuple[float, float]) -> dict:
        u, v = self.snapshot(t)
        Z = self.Z_profile(t)
        lo, hi = window
        return {
            "t": float(t),
            "tvs_u_1": tvs(u, 1.0)[0],
            "tvs_u_1/2": tvs(u, 0.5)[0],
            "tvs_u_1/3": tvs(u, 1.0 / 3.0)[0],
            "mass_u": u.integral(lo, hi),
            "mass_v": v.integral(lo, hi),
            "max_abs_Z": float(np.max(np.abs(Z.values))),
        }

    # ------------------------------------------------------------------
    # 2-characteristics

    def trace_characteristic(self, x0, T) -> CharTrace:
        """Follow ``dx/dt = a(u)`` from ``(x0, 0)`` to time ``T``."""
        if T > self.clock + self.tol:
            raise ValueError(f"trace horizon {T} is beyond the clock {self.clock}")
        if self.exact:
            x0, T = Fraction(x0), Fraction(T)
        tol = self.tol
        m = self.model
        initial = [self.fronts[i] for i in self.initial_ids]
        for f in initial:
            if abs(f.birth_x - x0) <= tol:
                raise DegeneracyError(
                    f"start point {x0} is a Riemann point (front {f.id})", f.id
                )
        Fl = None
        Fr = None
        for f in initial:
            if f.birth_x < x0:
                Fl = f
            elif Fr is None:
                Fr = f
        if Fl is not None:
            k, Z = Fl.k_right, Fl.Z_right
        elif Fr is not None:
            k, Z = Fr.k_left, Fr.Z_left
        else:
            k, Z = self.far_left
        t = 0 * T
        x = x0
        trace = CharTrace(vertices=[(t, x)], Z_segments=[Z], u_segments=[k / self.nu])
        inf = math.inf
        while True:
            c = m.a_exact(Fraction(k, self.nu)) if self.exact else m.a(k / self.nu)
            t_cross = inf
            for nb in (Fl, Fr):
                if nb is not None and nb.family == 2 and abs(nb.position(t) - x) <= tol:
                    raise DegeneracyError(
                        f"trace from {x0} runs along 2-contact {nb.id} at t={float(t)}", nb.id
                    )
            if Fl is not None and Fl.family == 1:
                gap = x - Fl.position(t)
                if gap < 0:
                    gap = 0 * gap
                t_cross = t + gap / (Fl.speed - c)
            t_dl = Fl.death_t if Fl is not None and Fl.death_t is not None else inf
            t_dr = Fr.death_t if Fr is not None and Fr.death_t is not None else inf
            t_next = min(t_cross, t_dl, t_dr)
            if t_next >= T:
                x = x + c * (T - t)
                t = T
                trace.vertices.append((t, x))
                break
            x = x + c * (t_next - t)
            t = t_next
            trace.vertices.append((t, x))
            if t_cross <= min(t_dl, t_dr):
                if abs(t_cross - t_dl) <= tol:
                    raise DegeneracyError(
                        f"trace from {x0} passes through the interaction point of front "
                        f"{Fl.id} at t={float(t)}", Fl.id,
                    )
                ratio = rh_factor(m, Fl.u_left, Fl.u_right)
                Z = Z * ratio
                trace.crossings.append(Crossing(Fl.id, t, ratio))
                if Fl.Z_left != 0:
                    mism = abs(Z - Fl.Z_left) / abs(Fl.Z_left)
                    trace.max_state_mismatch = max(trace.max_state_mismatch, mism)
                Fr = Fl
                Fl = Fr.neighbour_at("left", t)
                k = Fr.k_left
            else:
                if t_dr == t:
                    Fr = self._successor(Fr, t, x, side="right")
                if t_dl == t:
                    Fl = self._successor(Fl, t, x, side="left")
                    if Fr is not None:
                        Fl = Fr.neighbour_at("left", t)
                if Fl is not None and Fl.k_right != k:
                    raise EngineError(f"trace lost its region at t={float(t)} near front {Fl.id}")
            trace.Z_segments.append(Z)
            trace.u_segments.append(k / self.nu)
        return trace

    def _successor(self, dead: Front, t, x, side: str) -> Front | None:
        ev = self.death_event[dead.id]
        if not ev.truncation and abs(ev.x - x) <= self.tol:
            raise DegeneracyError(
                f"trace passes through interaction point at t={float(t)}", dead.id
            )
        born = [self.fronts[i] for i in ev.born]
        if side == "left":
            nb = born[-1] if born else ev.left_outer
        else:
            nb = born[0] if born else ev.right_outer
        if nb is not None and nb.death_t is not None and nb.death_t <= t:
            return self._successor(nb, t, x, side)
        return nb


def _merge_breakpoints(u0: StepFunction, v0: StepFunction) -> list[float]:
    return sorted(set(u0.breakpoints.tolist()) | set(v0.breakpoints.tolist()))


def init(
    model: FluxModel,
    nu: int,
    u0: StepFunction,
    v0: StepFunction,
    *,
    exact: bool = False,
    cap: int = DEFAULT_CAP,
    debug: bool = False,
) -> Simulation:
    """Solve the Riemann problems at every breakpoint of the initial data."""
    margin = check_ush(model)
    if margin <= 0:
        raise ModelError(f"USH fails for {model.name} on M={model.M}: margin {margin:.6g}")
    grid = build_grid_flux(model, nu)
    for val in u0.values:
        grid_index(float(val), nu)
        if abs(val) > model.M * (1 + 1e-12):
            raise ModelError(f"initial value {val} exceeds M = {model.M}")
    points = _merge_breakpoints(u0, v0)
    width = (points[-1] - points[0]) if len(points) > 1 else 1.0
    tol = Fraction(0) if exact else POSITION_RTOL * max(width, 1.0)
    sim = Simulation(model, grid, exact=exact, cap=cap, tol=tol, debug=debug)
    sim.u0, sim.v0 = u0, v0
    sim.span = (points[0], points[-1]) if points else (0.0, 0.0)

    def state(x_left_limit: bool, x: float | None):
        if x is None:
            u = float(u0.values[0]) if x_left_limit else float(u0.values[-1])
            v = float(v0.values[0]) if x_left_limit else float(v0.values[-1])
        else:
            u, v = u0.value_at(x), v0.value_at(x)
        k = grid_index(u, nu)
        return k, v * math.exp(potential_A(model, k / nu))

    sim.far_left = state(True, None)
    sim.far_right = state(False, None)
    t0 = Fraction(0) if exact else 0.0
    fronts: list[Front] = []
    left = sim.far_left
    for x in points:
        right = state(False, x)
        bx = Fraction(x) if exact else x
        for w in sim._fan(left[0], left[1], right[0], right[1]):
            fronts.append(sim._new_front(w, t0, bx))
        left = right
    sim.initial_ids = [f.id for f in fronts]
    sim._link(None, fronts, None, t0)
    if not fronts:
        sim.head = None
    for a, b in zip(fronts[:-1], fronts[1:]):
        sim._schedule(a, b)
    if debug:
        sim.check_invariants(t0)
    return sim


def next_collision(sim: Simulation) -> Collision | None:
    return sim.next_collision()


def resolve_collision(sim: Simulation, event: Collision) -> EventRecord:
    return sim.resolve_collision(event)


def run_until(sim: Simulation, T) -> Simulation:
    sim.run_until(T)
    return sim


def snapshot(sim: Simulation, t) -> tuple[StepFunction, StepFunction]:
    return sim.snapshot(t)


def trace_characteristic(sim: Simulation, x0, T) -> CharTrace:
    return sim.trace_characteristic(x0, T)
