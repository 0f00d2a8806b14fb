"""Riemann solvers for the triangular system in ``(u, Z)`` coordinates.

The scalar part uses the lower convex / upper concave envelope of the
piecewise-linear grid flux between the two states.  The ``Z`` component is
chained right-to-left through the 1-fan along the global Rankine-Hugoniot
curve ``Z_- = Z_+ r(u_-, u_+)`` and any remaining mismatch with the left
state is carried by a single 2-contact travelling at ``a(u_-)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple

from .model import FluxModel, GridFlux, ModelError, potential_A

__all__ = [
    "WaveKind",
    "Jump",
    "ElementaryWave",
    "WaveFan",
    "grid_index",
    "shock_speed",
    "rh_factor",
    "rh_plus",
    "scalar_riemann",
    "scalar_fan_indices",
    "oleinik_check",
    "system_riemann",
    "COINCIDENCE_EPS",
]

COINCIDENCE_EPS = 1e-14


class WaveKind(str, enum.Enum):
    SHOCK1 = "Shock1"
    CONTACT1 = "Contact1"
    CONTACT2 = "Contact2"

    @property
    def family(self) -> int:
        return 2 if self is WaveKind.CONTACT2 else 1

    def __str__(self) -> str:
        return self.value


class Jump(NamedTuple):
    """One segment of the scalar fan: ``u_left -> u_right`` at ``speed``."""

    u_left: float
    u_right: float
    speed: float
    kind: WaveKind


@dataclass(frozen=True)
class ElementaryWave:
    kind: WaveKind
    speed: float
    left_state: tuple[float, float]
    right_state: tuple[float, float]

    @property
    def family(self) -> int:
        return self.kind.family


@dataclass(frozen=True)
class WaveFan:
    """Elementary waves ordered left to right, states in ``(u, Z)``."""

    waves: tuple[ElementaryWave, ...]

    def __len__(self) -> int:
        return len(self.waves)

    def __iter__(self):
        return iter(self.waves)

    def __getitem__(self, i):
        return self.waves[i]

    @property
    def speeds(self) -> list[float]:
        return [w.speed for w in self.waves]

    @property
    def intermediate_Z(self) -> float | None:
        """``Z_m``: the state between the 2-contact and the 1-fan."""
        ones = [w for w in self.waves if w.family == 1]
        if ones:
            return ones[0].left_state[1]
        if self.waves:
            return self.waves[0].right_state[1]
        return None


def grid_index(u: float, nu: int, tol: float = 1e-9) -> int:
    """Index ``k`` with ``u == k / nu``; raises for off-grid values."""
    if isinstance(u, Fraction):
        k = u * nu
        if k.denominator != 1:
            raise ValueError(f"state {u} is not on the grid 1/{nu}")
        return int(k)
    k = round(u * nu)
    if abs(u * nu - k) > tol * max(1.0, abs(u * nu)):
        raise ValueError(f"state {u!r} is not on the grid 1/{nu}")
    return int(k)


def shock_speed(g: GridFlux | FluxModel, u_minus: float, u_plus: float) -> float:
    """Rankine-Hugoniot speed ``[f] / [u]``."""
    if u_minus == u_plus:
        raise ValueError("shock speed needs distinct states")
    if isinstance(g, GridFlux):
        return g.secant(grid_index(u_minus, g.nu), grid_index(u_plus, g.nu))
    return (g.f(u_plus) - g.f(u_minus)) / (u_plus - u_minus)


def rh_factor(m: FluxModel, u_minus: float, u_plus: float) -> float:
    """``r(u-, u+) = (s - a(u+)) / (s - a(u-)) * exp(A(u-) - A(u+))``."""
    u_minus = float(u_minus)
    u_plus = float(u_plus)
    if abs(u_plus - u_minus) < COINCIDENCE_EPS:
        return 1.0
    bound = m.M * (1 + 1e-12)
    if abs(u_minus) > bound or abs(u_plus) > bound:
        raise ModelError(f"states ({u_minus}, {u_plus}) leave [-M, M] with M = {m.M}")
    s = (m.f(u_plus) - m.f(u_minus)) / (u_plus - u_minus)
    num = s - m.a(u_plus)
    den = s - m.a(u_minus)
    if not (num > 0 and den > 0):
        raise ModelError(
            f"uniform strict hyperbolicity fails between {u_minus} and {u_plus}: "
            f"s - a = ({num}, {den})"
        )
    return num / den * math.exp(potential_A(m, u_minus) - potential_A(m, u_plus))


def rh_plus(m: FluxModel, u_minus: float, u_plus: float, Z_plus: float) -> float:
    """Left state ``Z_-`` on the Rankine-Hugoniot curve through ``(u+, Z+)``."""
    if Z_plus == 0:
        return 0.0 * Z_plus
    return Z_plus * rh_factor(m, u_minus, u_plus)


def _cross(o, a, b) -> float:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _lower_hull(points, exact_y=None):
    """Monotone chain; near-collinear float triples are settled exactly."""
    hull = []
    for p in points:
        while len(hull) >= 2 and _turn(hull[-2], hull[-1], p, exact_y) <= 0:
            hull.pop()
        hull.append(p)
    return hull


def _turn(o, a, b, exact_y):
    c = _cross(o, a, b)
    if exact_y is None or isinstance(c, Fraction):
        return c
    band = 1e-12 * (
        abs((a[0] - o[0]) * (b[1] - o[1])) + abs((a[1] - o[1]) * (b[0] - o[0]))
    )
    if abs(c) > band:
        return c
    eo, ea, eb = ((q[0], exact_y(q[0])) for q in (o, a, b))
    return _cross(eo, ea, eb)


def scalar_fan_indices(g: GridFlux, k_minus: int, k_plus: int, exact: bool = False):
    """Entropy fan for ``f_nu`` between grid indices.

    Returns a list of ``(k_left, k_right, speed, is_contact)`` ordered by
    strictly increasing speed.  Collinear nodes are merged into one jump.
    """
    if k_minus == k_plus:
        return []
    lo, hi = sorted((k_minus, k_plus))
    if not (g.covers(lo) and g.covers(hi)):
        raise ValueError(f"states {lo}/{g.nu}, {hi}/{g.nu} outside the grid flux range")
    node = g.node_exact if exact else g.node
    has_exact = g.exact_nodes is not None and not exact
    if k_minus < k_plus:
        pts = [(k, node(k)) for k in range(lo, hi + 1)]
        hull = _lower_hull(pts, g.node_exact if has_exact else None)
    else:
        # upper concave envelope = lower hull of -f, traversed right to left
        pts = [(-k, -node(k)) for k in range(hi, lo - 1, -1)]
        ey = (lambda x: -g.node_exact(-x)) if has_exact else None
        hull = [(-k, -y) for k, y in _lower_hull(pts, ey)]
    out = []
    for (k0, f0), (k1, f1) in zip(hull[:-1], hull[1:]):
        speed = g.secant_exact(k0, k1) if exact else g.secant(k0, k1)
        is_contact = _is_affine(node, k0, k1, f0, f1, exact, g.node_exact if has_exact else None)
        out.append((k0, k1, speed, is_contact))
    return out


def _is_affine(node, k0, k1, f0, f1, exact, exact_node=None) -> bool:
    if abs(k1 - k0) == 1:
        return True
    step = 1 if k1 > k0 else -1
    scale = max(abs(f0), abs(f1), 1.0)
    for k in range(k0 + step, k1, step):
        chord = f0 + (f1 - f0) * (k - k0) / (k1 - k0)
        dev = node(k) - chord
        if (dev != 0) if exact else (abs(dev) > 1e-13 * scale):
            return False
    if exact or exact_node is None:
        return True
    return _is_affine(exact_node, k0, k1, exact_node(k0), exact_node(k1), True)


def scalar_riemann(g: GridFlux, u_minus: float, u_plus: float) -> list[Jump]:
    """Weak entropy solution of the Riemann problem for ``f_nu``."""
    km = grid_index(u_minus, g.nu)
    kp = grid_index(u_plus, g.nu)
    return [
        Jump(k0 / g.nu, k1 / g.nu, float(s), WaveKind.CONTACT1 if c else WaveKind.SHOCK1)
        for k0, k1, s, c in scalar_fan_indices(g, km, kp)
    ]


def oleinik_check(g: GridFlux, u_minus: float, u_plus: float, s: float, tol: float = 1e-12) -> bool:
    """Chord form of the Oleinik condition for the grid flux.

    For ``u- < u+`` the chord must lie below ``f_nu``; for ``u- > u+`` above.
    ``s`` must also be the chord slope.
    """
    km = grid_index(u_minus, g.nu)
    kp = grid_index(u_plus, g.nu)
    if km == kp:
        return True
    f0, f1 = g.node(km), g.node(kp)
    chord_slope = (f1 - f0) / ((kp - km) / g.nu)
    scale = max(1.0, abs(chord_slope))
    if abs(chord_slope - s) > tol * scale:
        return False
    fscale = max(1.0, abs(f0), abs(f1))
    lo, hi = sorted((km, kp))
    for k in range(lo + 1, hi):
        chord = f0 + chord_slope * (k - km) / g.nu
        dev = g.node(k) - chord
        if km < kp and dev < -tol * fscale:
            return False
        if km > kp and dev > tol * fscale:
            return False
    return True


def system_riemann(
    m: FluxModel,
    g: GridFlux,
    left: tuple[float, float],
    right: tuple[float, float],
) -> WaveFan:
    """Full ``(u, Z)`` Riemann fan: optional 2-contact, then the 1-fan."""
    (u_l, Z_l), (u_r, Z_r) = left, right
    kl = grid_index(u_l, g.nu)
    kr = grid_index(u_r, g.nu)
    waves = _fan_waves(m, g, kl, kr, Z_l, Z_r)
    return WaveFan(tuple(waves))


def _fan_waves(m, g, kl, kr, Z_l, Z_r, exact=False):
    bound = m.M * g.nu * (1 + 1e-12)
    if abs(kl) > bound or abs(kr) > bound:
        raise ModelError(f"states {kl}/{g.nu}, {kr}/{g.nu} leave [-M, M] with M = {m.M}")
    jumps = scalar_fan_indices(g, kl, kr, exact=exact)
    ones = []
    Z = Z_r
    for k0, k1, s, is_contact in reversed(jumps):
        Z_left = rh_plus(m, k0 / g.nu, k1 / g.nu, Z)
        kind = WaveKind.CONTACT1 if is_contact else WaveKind.SHOCK1
        ones.append(ElementaryWave(kind, s, (k0 / g.nu, Z_left), (k1 / g.nu, Z)))
        Z = Z_left
    ones.reverse()
    waves = []
    if Z_l != Z:
        c2_speed = m.a_exact(Fraction(kl, g.nu)) if exact else m.a(kl / g.nu)
        if ones and not (c2_speed < ones[0].speed):
            raise ModelError("2-contact is not slower than the 1-fan; USH violated")
        waves.append(
            ElementaryWave(WaveKind.CONTACT2, c2_speed, (kl / g.nu, Z_l), (kl / g.nu, Z))
        )
    waves.extend(ones)
    return waves
