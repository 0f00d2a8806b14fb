"""Piecewise-constant functions of one variable and fractional total variation.

A :class:`StepFunction` is stored as a strictly increasing array of
breakpoints together with ``len(breakpoints) + 1`` values.  Value ``i``
holds on the open interval between breakpoint ``i - 1`` and breakpoint
``i``; evaluation at a breakpoint returns the right limit.

The fractional total variation

.. math::

    TV^s u = \\sup_{x_1 < \\dots < x_n} \\sum_i |u(x_{i+1}) - u(x_i)|^{1/s}

of a step function only depends on its ordered local extrema, so
:func:`tvs` reduces to :func:`local_extrema` and then runs an
``O(m^2)`` dynamic program over the extrema.
"""

from __future__ import annotations

import csv
import io
import math
from bisect import bisect_right
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "StepFunction",
    "sample_to_grid",
    "round_to_grid",
    "local_extrema",
    "tvs",
    "tvs_bruteforce",
    "read_csv",
    "write_csv",
    "BRUTEFORCE_CAP",
]

BRUTEFORCE_CAP = 18


@dataclass(frozen=True)
class StepFunction:
    """Immutable piecewise-constant function with finitely many jumps."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __init__(self, breakpoints: Iterable[float], values: Iterable[float]):
        bp = np.array(list(breakpoints), dtype=float)
        vals = np.array(list(values), dtype=float)
        if vals.size != bp.size + 1:
            raise ValueError(
                f"need len(values) == len(breakpoints) + 1, got {vals.size} and {bp.size}"
            )
        if bp.size and not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if not np.all(np.isfinite(bp)) or not np.all(np.isfinite(vals)):
            raise ValueError("breakpoints and values must be finite")
        keep = vals[1:] != vals[:-1]
        bp = bp[keep]
        vals = np.concatenate([vals[:1], vals[1:][keep]])
        bp.setflags(write=False)
        vals.setflags(write=False)
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @classmethod
    def constant(cls, value: float) -> "StepFunction":
        return cls([], [value])

    @classmethod
    def from_pieces(cls, pieces: Sequence[tuple[float, float]]) -> "StepFunction":
        """Build from ``(left_endpoint, value)`` pairs; the first endpoint is ignored."""
        if not pieces:
            raise ValueError("at least one piece is required")
        return cls([p[0] for p in pieces[1:]], [p[1] for p in pieces])

    def __call__(self, x):
        idx = np.searchsorted(self.breakpoints, x, side="right")
        return self.values[idx]

    def value_at(self, x: float) -> float:
        return float(self.values[bisect_right(self.breakpoints.tolist(), x)])

    def __len__(self) -> int:
        return int(self.values.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepFunction):
            return NotImplemented
        return np.array_equal(self.breakpoints, other.breakpoints) and np.array_equal(
            self.values, other.values
        )

    def __hash__(self) -> int:
        return hash((self.breakpoints.tobytes(), self.values.tobytes()))

    def __repr__(self) -> str:
        return f"StepFunction(breakpoints={self.breakpoints.tolist()}, values={self.values.tolist()})"

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def integral(self, lo: float, hi: float, offset: float = 0.0) -> float:
        """Integral of ``f - offset`` over ``[lo, hi]``."""
        edges = np.concatenate([[lo], np.clip(self.breakpoints, lo, hi), [hi]])
        widths = np.diff(edges)
        return float(np.sum(widths * (self.values - offset)))

    def restrict(self, lo: float, hi: float) -> "StepFunction":
        """Pieces meeting the open interval ``(lo, hi)``, unbounded at both ends."""
        bp = self.breakpoints
        inside = (bp > lo) & (bp < hi)
        first = int(np.searchsorted(bp, lo, side="right"))
        vals = self.values[first : first + int(inside.sum()) + 1]
        return StepFunction(bp[inside], vals)


def round_to_grid(value: float, nu: int) -> int:
    """Index ``k`` of the nearest grid point ``k / nu``, ties toward zero."""
    scaled = value * nu
    k = math.ceil(abs(scaled) - 0.5)
    return int(math.copysign(k, scaled)) if k else 0


def sample_to_grid(raw: StepFunction, nu: int) -> StepFunction:
    """Round every value of ``raw`` to the grid ``nu^{-1} Z``."""
    if nu < 1:
        raise ValueError("nu must be a positive integer")
    vals = [round_to_grid(v, nu) / nu for v in raw.values]
    return StepFunction(raw.breakpoints, vals)


def local_extrema(f: StepFunction | Sequence[float]) -> np.ndarray:
    """Collapse monotone runs of the value sequence to their endpoints."""
    vals = np.asarray(f.values if isinstance(f, StepFunction) else f, dtype=float)
    if vals.size:
        vals = vals[np.concatenate([[True], vals[1:] != vals[:-1]])]
    if vals.size <= 2:
        return vals.copy()
    d = np.diff(vals)
    keep = np.ones(vals.size, dtype=bool)
    keep[1:-1] = d[:-1] * d[1:] < 0
    return vals[keep]


def _check_s(s: float) -> float:
    if not (0.0 < s <= 1.0):
        raise ValueError(f"s must lie in (0, 1], got {s!r}")
    return 1.0 / s


def _dp_max_power_sum(ext: np.ndarray, p: float) -> float:
    m = ext.size
    if m < 2:
        return 0.0
    best = np.zeros(m)
    for j in range(1, m):
        cand = best[:j] + np.abs(ext[j] - ext[:j]) ** p
        best[j] = cand.max()
    return float(best.max())


def tvs(f: StepFunction, s: float) -> tuple[float, float]:
    """Return ``(TV^s f, |f|_{BV^s})`` computed exactly over the extrema."""
    p = _check_s(s)
    ext = local_extrema(f)
    if p == 1.0:
        tv = float(np.sum(np.abs(np.diff(ext))))
    else:
        tv = _dp_max_power_sum(ext, p)
    return tv, tv**s


def tvs_bruteforce(f: StepFunction | Sequence[float], s: float) -> float:
    """Exhaustive maximum over all ordered subsets of the sample values.

    Enumerates the ``2^n`` subsets of the ``n`` pieces, vectorised over
    subsets; refuses inputs with more than ``BRUTEFORCE_CAP`` values.
    """
    p = _check_s(s)
    vals = np.asarray(f.values if isinstance(f, StepFunction) else f, dtype=float)
    n = vals.size
    if n > BRUTEFORCE_CAP:
        raise ValueError(f"brute force refuses {n} values (cap {BRUTEFORCE_CAP})")
    if n < 2:
        return 0.0
    masks = np.arange(1 << n, dtype=np.int64)
    total = np.zeros(masks.size)
    last = np.full(masks.size, -1, dtype=np.int64)
    for j in range(n):
        sel = ((masks >> j) & 1).astype(bool)
        add = sel & (last >= 0)
        prev = vals[last[add]]
        total[add] += np.abs(vals[j] - prev) ** p
        last[sel] = j
    return float(total.max())


HEADER = ("x", "value")


def write_csv(f: StepFunction, path: str | Path | None = None) -> str:
    """Serialise as ``x,value`` rows, one per piece, first row ``-inf``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEADER)
    lefts = [-math.inf] + f.breakpoints.tolist()
    for x, v in zip(lefts, f.values.tolist()):
        w.writerow([repr(float(x)), repr(float(v))])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(source: str | Path, column: str = "value") -> StepFunction:
    """Parse the ``x,value`` format (``column`` selects another value column)."""
    text = Path(source).read_text() if not _looks_like_csv(source) else str(source)
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.reader(lines))
    if not rows or rows[0][0].strip() != "x" or column not in [c.strip() for c in rows[0]]:
        raise ValueError(f"expected a header starting with 'x' and containing {column!r}")
    header = [c.strip() for c in rows[0]]
    col = header.index(column)
    pieces = []
    for row in rows[1:]:
        try:
            pieces.append((float(row[0]), float(row[col])))
        except (ValueError, IndexError) as exc:
            raise ValueError(f"malformed row {row!r}") from exc
    if not pieces or pieces[0][0] != -math.inf:
        raise ValueError("first row must use the -inf sentinel")
    return StepFunction.from_pieces(pieces)


def _looks_like_csv(source) -> bool:
    return isinstance(source, str) and "\n" in source
