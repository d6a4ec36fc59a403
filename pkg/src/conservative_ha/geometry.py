"""Closed intervals and axis-aligned rectangles over the extended reals.

Flows and guards of a multi-rectangular hybrid automaton are rectangles, so
everything the construction does to continuous data reduces to the handful
of operations here.  Comparisons are exact; no tolerance is applied.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

INF = math.inf


class DimensionError(ValueError):
    """Raised when rectangles or vectors of different dimension are mixed."""


@dataclass(frozen=True, slots=True)
class Interval:
    lo: float
    hi: float

    def __post_init__(self) -> None:
        if math.isnan(self.lo) or math.isnan(self.hi):
            raise ValueError("interval bounds must not be NaN")
        if self.lo > self.hi:
            raise ValueError(f"empty interval [{self.lo}, {self.hi}]")

    @property
    def singular(self) -> bool:
        return self.lo == self.hi

    @property
    def bounded(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    @property
    def width(self) -> float:
        return self.hi - self.lo

    def __contains__(self, v: float) -> bool:
        return self.lo <= v <= self.hi

    def __repr__(self) -> str:
        return f"[{_fmt(self.lo)}, {_fmt(self.hi)}]"


@dataclass(frozen=True, slots=True)
class Rect:
    """An n-dimensional product of closed intervals."""

    dims: tuple[Interval, ...]

    def __post_init__(self) -> None:
        if len(self.dims) == 0:
            raise ValueError("a rectangle needs at least one dimension")

    @classmethod
    def from_bounds(cls, bounds: Iterable[Sequence[float]]) -> Rect:
        return cls(tuple(Interval(float(lo), float(hi)) for lo, hi in bounds))

    @classmethod
    def point(cls, x: Sequence[float]) -> Rect:
        return cls(tuple(Interval(float(v), float(v)) for v in x))

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def lo(self) -> tuple[float, ...]:
        return tuple(iv.lo for iv in self.dims)

    @property
    def hi(self) -> tuple[float, ...]:
        return tuple(iv.hi for iv in self.dims)

    @property
    def singular(self) -> bool:
        return all(iv.singular for iv in self.dims)

    @property
    def bounded(self) -> bool:
        return all(iv.bounded for iv in self.dims)

    def bounds(self) -> list[tuple[float, float]]:
        return [(iv.lo, iv.hi) for iv in self.dims]

    def __len__(self) -> int:
        return len(self.dims)

    def __iter__(self):
        return iter(self.dims)

    def __getitem__(self, d: int) -> Interval:
        return self.dims[d]

    def __repr__(self) -> str:
        return "×".join(repr(iv) for iv in self.dims)


def _fmt(v: float) -> str:
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    if float(v).is_integer():
        return str(int(v))
    return repr(float(v))


def _check_dim(n: int, m: int) -> None:
    if n != m:
        raise DimensionError(f"dimension mismatch: {n} vs {m}")


def full(n: int) -> Rect:
    """The unconstrained rectangle (-inf, inf)^n, used as the vacuous guard."""
    if n < 1:
        raise ValueError("dimension must be at least 1")
    return Rect(tuple(Interval(-INF, INF) for _ in range(n)))


def zero(n: int) -> Rect:
    return Rect.point([0.0] * n)


def contains_point(r: Rect, x: Sequence[float], eps: float = 0.0) -> bool:
    _check_dim(r.n, len(x))
    for iv, v in zip(r.dims, x):
        if not (iv.lo - eps <= v <= iv.hi + eps):
            return False
    return True


def box_hull(rects: Iterable[Rect]) -> Rect:
    """Component-wise bounding box of a non-empty collection of rectangles.

    The box contains the true convex hull of its inputs, which is what keeps
    merged flows and guards over-approximating.
    """
    it = iter(rects)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("box_hull of an empty collection") from None
    los = list(first.lo)
    his = list(first.hi)
    n = first.n
    for r in it:
        _check_dim(n, r.n)
        for d, iv in enumerate(r.dims):
            if iv.lo < los[d]:
                los[d] = iv.lo
            if iv.hi > his[d]:
                his[d] = iv.hi
    return Rect(tuple(Interval(lo, hi) for lo, hi in zip(los, his)))


def hull_of_points(points: Iterable[Sequence[float]]) -> Rect:
    return box_hull(Rect.point(p) for p in points)


def scale_translate(r: Rect, x: Sequence[float], delay: float) -> Rect:
    """The rectangle x + delay * r."""
    _check_dim(r.n, len(x))
    if delay < 0:
        raise ValueError(f"negative delay {delay}")
    dims = []
    for iv, v in zip(r.dims, x):
        if delay == 0:
            dims.append(Interval(v, v))
        else:
            dims.append(Interval(v + delay * iv.lo, v + delay * iv.hi))
    return Rect(tuple(dims))


def subset(a: Rect, b: Rect) -> bool:
    _check_dim(a.n, b.n)
    return all(ib.lo <= ia.lo and ia.hi <= ib.hi for ia, ib in zip(a.dims, b.dims))


def intersect(a: Rect, b: Rect) -> Rect | None:
    _check_dim(a.n, b.n)
    dims = []
    for ia, ib in zip(a.dims, b.dims):
        lo, hi = max(ia.lo, ib.lo), min(ia.hi, ib.hi)
        if lo > hi:
            return None
        dims.append(Interval(lo, hi))
    return Rect(tuple(dims))


def rate(x: Sequence[float], x2: Sequence[float], delay: float) -> tuple[float, ...]:
    """Per-dimension rate of change (x2 - x) / delay.

    This single expression is shared by ``solve``, delay validation and
    projection so that their floating point results agree bit for bit.
    """
    return tuple((b - a) / delay for a, b in zip(x, x2))


def shrink(r: Rect, fraction: float) -> Rect:
    """Shrink every bounded interval about its centre so its width drops by ``fraction``.

    Unbounded intervals are returned unchanged.
    """
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    dims = []
    for iv in r.dims:
        if not iv.bounded:
            dims.append(iv)
            continue
        cut = iv.width * fraction / 2
        dims.append(Interval(iv.lo + cut, iv.hi - cut))
    return Rect(tuple(dims))


def rect_to_json(r: Rect) -> list[list]:
    return [[_num_to_json(iv.lo), _num_to_json(iv.hi)] for iv in r.dims]


def rect_from_json(data) -> Rect:
    try:
        return Rect(tuple(Interval(num_from_json(lo), num_from_json(hi)) for lo, hi in data))
    except (TypeError, ValueError) as exc:
        raise ValueError(f"malformed rectangle {data!r}: {exc}") from None


def _num_to_json(v: float):
    if v == INF:
        return "inf"
    if v == -INF:
        return "-inf"
    return num_to_json(v)


def num_to_json(v: float):
    # integral values are written without a trailing ".0"; json's float repr
    # is already shortest-round-trip for everything else
    if math.isfinite(v) and float(v).is_integer() and abs(v) < 2**53:
        return int(v)
    return float(v)


def num_from_json(v) -> float:
    if isinstance(v, str):
        s = v.strip().lower()
        if s in ("inf", "+inf", "infinity"):
            return INF
        if s in ("-inf", "-infinity"):
            return -INF
        raise ValueError(f"unexpected string {v!r} in numeric field")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ValueError(f"expected a number, got {v!r}")
    return float(v)
