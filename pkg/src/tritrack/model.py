"""Flux pairs ``(f, a)`` for the triangular system

.. math::

    u_t + f(u)_x = 0, \\qquad v_t + (a(u) v)_x = 0,

together with the Riemann-invariant potential ``A`` (``A' = a' / (a - f')``,
``A(0) = 0``), the change of variables ``Z = v exp(A(u))`` and the
piecewise-linear grid flux used by front tracking.

Models are polynomial: coefficients are kept so that the same model can be
evaluated on floats, numpy arrays or :class:`fractions.Fraction` values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy import integrate

__all__ = [
    "ModelError",
    "NumericError",
    "FluxModel",
    "GridFlux",
    "polynomial_model",
    "burgers_linear",
    "cubic_shifted",
    "get_model",
    "MODELS",
    "check_ush",
    "potential_A",
    "to_Z",
    "from_Z",
    "build_grid_flux",
]


class ModelError(ValueError):
    """The model violates uniform strict hyperbolicity or is malformed."""


class NumericError(ArithmeticError):
    """A quadrature or other numerical procedure failed to converge."""


def _horner(coeffs: Sequence, x):
    acc = coeffs[-1] * 1 if coeffs else 0
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def _deriv(coeffs: Sequence) -> tuple:
    out = tuple(c * k for k, c in enumerate(coeffs) if k)
    return out or (0,)


def _as_fractions(coeffs: Sequence) -> tuple:
    return tuple(Fraction(c) for c in coeffs)


@dataclass(frozen=True)
class FluxModel:
    """Polynomial flux ``f`` and velocity ``a`` with state bound ``M``.

    Coefficients are in ascending order, ``f(u) = sum(f_coeffs[k] * u**k)``.
    ``closed_form_A`` optionally replaces quadrature for the potential.
    """

    name: str
    f_coeffs: tuple
    a_coeffs: tuple
    M: float
    closed_form_A: Callable[[float], float] | None = field(default=None, compare=False)

    def __post_init__(self):
        if not self.M > 0:
            raise ModelError(f"state bound M must be positive, got {self.M}")
        object.__setattr__(self, "f_coeffs", tuple(float(c) for c in self.f_coeffs))
        object.__setattr__(self, "a_coeffs", tuple(float(c) for c in self.a_coeffs))

    def f(self, u):
        return _horner(self.f_coeffs, u)

    def df(self, u):
        return _horner(_deriv(self.f_coeffs), u)

    def d2f(self, u):
        return _horner(_deriv(_deriv(self.f_coeffs)), u)

    def a(self, u):
        return _horner(self.a_coeffs, u)

    def da(self, u):
        return _horner(_deriv(self.a_coeffs), u)

    def h(self, u):
        """Hyperbolic gap ``f' - a``."""
        return self.df(u) - self.a(u)

    def eigenvalues(self, u) -> tuple:
        return self.df(u), self.a(u)

    def f_exact(self, u: Fraction) -> Fraction:
        return _horner(_as_fractions(self.f_coeffs), u)

    def a_exact(self, u: Fraction) -> Fraction:
        return _horner(_as_fractions(self.a_coeffs), u)

    def with_bound(self, M: float) -> "FluxModel":
        return FluxModel(self.name, self.f_coeffs, self.a_coeffs, M, self.closed_form_A)

    def __hash__(self) -> int:
        return hash((self.name, self.f_coeffs, self.a_coeffs, self.M))


def polynomial_model(f_coeffs, a_coeffs, M: float, name: str = "polynomial") -> FluxModel:
    return FluxModel(name, tuple(f_coeffs), tuple(a_coeffs), M)


def burgers_linear(M: float = 1.0 / 3.0) -> FluxModel:
    """``f = u^2/2``, ``a = u - 1``; here ``A(u) = -u`` exactly."""
    return FluxModel("burgers_linear", (0.0, 0.0, 0.5), (-1.0, 1.0), M, closed_form_A=_minus_u)


def cubic_shifted(M: float = 1.0) -> FluxModel:
    """``f = u^3/3 + 2u``, ``a = u - 1``: inflection at 0, non-convex."""
    return FluxModel("cubic_shifted", (0.0, 2.0, 0.0, 1.0 / 3.0), (-1.0, 1.0), M)


def _minus_u(u: float) -> float:
    return -u


MODELS: Mapping[str, Callable[..., FluxModel]] = {
    "burgers_linear": burgers_linear,
    "cubic_shifted": cubic_shifted,
}


def get_model(spec, M: float | None = None) -> FluxModel:
    """Resolve a registry name or a ``{"f": [...], "a": [...]}`` mapping."""
    if isinstance(spec, FluxModel):
        return spec if M is None else spec.with_bound(M)
    if isinstance(spec, str):
        try:
            factory = MODELS[spec]
        except KeyError:
            raise ModelError(f"unknown model {spec!r}; known: {sorted(MODELS)}") from None
        return factory() if M is None else factory(M)
    if isinstance(spec, Mapping):
        if "f" not in spec or "a" not in spec:
            raise ModelError("polynomial model needs 'f' and 'a' coefficient lists")
        return polynomial_model(spec["f"], spec["a"], 1.0 if M is None else M)
    raise ModelError(f"cannot interpret model specification {spec!r}")


def check_ush(m: FluxModel) -> float:
    """Sampled ``inf f' - sup a`` over ``[-M, M]``; positive means USH holds.

    The sampling step is ``1e-4 * 2M`` and both endpoints are included, so
    the answer is exact for monotone ``f'`` and ``a``.
    """
    u = np.linspace(-m.M, m.M, 10_001)
    return float(np.min(m.df(u)) - np.max(m.a(u)))


def _a_prime_over_gap(m: FluxModel, w: float) -> float:
    return m.da(w) / (m.a(w) - m.df(w))


@lru_cache(maxsize=200_000)
def _cached_A(m: FluxModel, u: float) -> float:
    if m.closed_form_A is not None:
        return float(m.closed_form_A(u))
    if u == 0.0:
        return 0.0
    val, err, *rest = integrate.quad(
        lambda w: _a_prime_over_gap(m, w), 0.0, u, epsabs=1e-12, epsrel=1e-12, full_output=1
    )
    info = rest[1] if len(rest) > 1 else ""
    if err > 1e-10 or (len(rest) > 1 and "roundoff" in str(info).lower()):
        raise NumericError(f"quadrature for A({u}) did not converge (error estimate {err:.2e})")
    return float(val)


def potential_A(m: FluxModel, u: float) -> float:
    """Riemann-invariant potential, normalised by ``A(0) = 0``."""
    return _cached_A(m, float(u))


def to_Z(m: FluxModel, u: float, v: float) -> float:
    return v * math.exp(potential_A(m, u))


def from_Z(m: FluxModel, u: float, Z: float) -> float:
    return Z * math.exp(-potential_A(m, u))


@dataclass(frozen=True)
class GridFlux:
    """Piecewise-linear interpolant of ``f`` on the nodes ``k / nu``.

    Nodes cover ``[-M - 1/nu, M + 1/nu]``; ``k_min`` is the index of the
    first node.
    """

    nu: int
    k_min: int
    nodes: np.ndarray
    exact_nodes: tuple | None = field(default=None, compare=False, repr=False)

    @property
    def k_max(self) -> int:
        return self.k_min + self.nodes.size - 1

    def node(self, k: int) -> float:
        return float(self.nodes[k - self.k_min])

    def node_exact(self, k: int) -> Fraction:
        if self.exact_nodes is None:
            raise ValueError("grid flux was built without exact nodes")
        return self.exact_nodes[k - self.k_min]

    def covers(self, k: int) -> bool:
        return self.k_min <= k <= self.k_max

    def slope(self, k: int) -> float:
        """Slope of ``f_nu`` on the cell ``[k/nu, (k+1)/nu]``."""
        return self.nu * (self.node(k + 1) - self.node(k))

    def secant(self, k_left: int, k_right: int) -> float:
        """``(f_nu(u+) - f_nu(u-)) / (u+ - u-)`` between two nodes, correctly rounded."""
        if self.exact_nodes is None:
            if k_left == k_right:
                raise ValueError("secant needs two distinct nodes")
            return (self.node(k_right) - self.node(k_left)) / ((k_right - k_left) / self.nu)
        return float(self.secant_exact(k_left, k_right))

    def secant_exact(self, k_left: int, k_right: int) -> Fraction:
        if k_left == k_right:
            raise ValueError("secant needs two distinct nodes")
        return (self.node_exact(k_right) - self.node_exact(k_left)) / Fraction(
            k_right - k_left, self.nu
        )

    def __call__(self, u):
        grid = (np.arange(self.nodes.size) + self.k_min) / self.nu
        return np.interp(u, grid, self.nodes)


def build_grid_flux(m: FluxModel, nu: int, exact: bool = True) -> GridFlux:
    """Grid flux on ``[-M - 1/nu, M + 1/nu]``.

    With ``exact`` the node values are also kept as fractions (of the
    binary coefficients), so secant speeds are correctly rounded.
    """
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    k_lo = math.floor(-(m.M + 1.0 / nu) * nu)
    k_hi = math.ceil((m.M + 1.0 / nu) * nu)
    ks = np.arange(k_lo, k_hi + 1)
    nodes = np.array([m.f(k / nu) for k in ks.tolist()], dtype=float)
    nodes.setflags(write=False)
    exact_nodes = None
    if exact:
        exact_nodes = tuple(m.f_exact(Fraction(k, nu)) for k in ks.tolist())
    return GridFlux(nu, int(k_lo), nodes, exact_nodes)
