"""Lines, intersections and the pentagon in/out iteration.

Everything here is generic over the coordinate type: ``Fpe`` for the
error-tracked computation, ``PFloat`` for a plain high-precision reference,
``Fraction`` for exact checks. Only the singularity test differs: in ``k`` or
``c`` mode an ``Fpe`` determinant is singular when its confidence interval
contains zero; in ``exact`` mode, and for every other type, when it is zero.
"""

from __future__ import annotations

import json
from fractions import Fraction
from typing import Callable, Iterable, NamedTuple, Sequence

from .fpe import K_MODE, Fpe, ThresholdSignal, contains_zero, fpe_equal
from .softfp import PFloat, to_report


EXACT_MODE = "exact"


class DegenerateGeometryError(ValueError):
    pass


class Point2(NamedTuple):
    x: object
    y: object

    def translate(self, dx, dy) -> Point2:
        return Point2(self.x + dx, self.y + dy)


class Line2(NamedTuple):
    """``a*x + b*y + c = 0``."""

    a: object
    b: object
    c: object


class Parallel(NamedTuple):
    """Intersection outcome for lines judged parallel; keeps the determinant."""

    det: object


class Pentagon(tuple):
    """Five vertices in counterclockwise order."""

    def __new__(cls, vertices: Iterable[Point2]):
        vertices = tuple(Point2(*v) for v in vertices)
        if len(vertices) != 5:
            raise ValueError(f"a pentagon needs 5 vertices, got {len(vertices)}")
        return super().__new__(cls, vertices)

    def coordinates(self) -> list:
        return [c for p in self for c in p]

    def map(self, fn: Callable) -> Pentagon:
        return Pentagon(Point2(fn(p.x), fn(p.y)) for p in self)


def _is_singular(det, mode: str) -> bool:
    if isinstance(det, Fpe):
        if mode == EXACT_MODE:
            return det.x.is_zero
        return contains_zero(det, det.cfg, mode)
    if isinstance(det, PFloat):
        return det.is_zero
    return det == 0


def _collect(signals: list | None, *values) -> None:
    if signals is None:
        return
    for v in values:
        s = getattr(v, "signal", None)
        if s is not None:
            signals.append(s)


def line_through(
    p: Point2, q: Point2, signals: list[ThresholdSignal] | None = None, strict: bool = False, mode: str = K_MODE
) -> Line2:
    """Line through two points: ``a = qy - py``, ``b = px - qx``,
    ``c = -(a*px + b*py)``.

    Identical points raise. With ``strict``, error-tracked points whose
    coordinates are both judged equal by their confidence intervals raise too.
    """
    _check_distinct(p, q, strict, mode)
    a = q.y - p.y
    b = p.x - q.x
    ax = a * p.x
    by = b * p.y
    s = ax + by
    _collect(signals, a, b, ax, by, s)
    return Line2(a, b, -s)


def _check_distinct(p: Point2, q: Point2, strict: bool, mode: str) -> None:
    if isinstance(p.x, Fpe):
        same = p.x.x == q.x.x and p.y.x == q.y.x
        if not same and strict and mode != EXACT_MODE:
            same = fpe_equal(p.x, q.x, mode=mode) and fpe_equal(p.y, q.y, mode=mode)
    else:
        same = p.x == q.x and p.y == q.y
    if same:
        raise DegenerateGeometryError("coincident points do not define a line")


def intersect(l1: Line2, l2: Line2, mode: str = K_MODE, signals: list[ThresholdSignal] | None = None) -> Point2 | Parallel:
    """Cramer's rule, or ``Parallel`` when the determinant is singular."""
    a1b2 = l1.a * l2.b
    a2b1 = l2.a * l1.b
    det = a1b2 - a2b1
    _collect(signals, a1b2, a2b1, det)
    if _is_singular(det, mode):
        return Parallel(det)
    b1c2 = l1.b * l2.c
    b2c1 = l2.b * l1.c
    c1a2 = l1.c * l2.a
    c2a1 = l2.c * l1.a
    nx = b1c2 - b2c1
    ny = c1a2 - c2a1
    x = nx / det
    y = ny / det
    _collect(signals, b1c2, b2c1, c1a2, c2a1, nx, ny, x, y)
    return Point2(x, y)


def _meet(l1: Line2, l2: Line2, mode: str, signals, what: str) -> Point2:
    p = intersect(l1, l2, mode, signals)
    if isinstance(p, Parallel):
        raise DegenerateGeometryError(f"{what}: lines judged parallel")
    return p


def pent_in(P: Sequence[Point2], mode: str = K_MODE, signals: list[ThresholdSignal] | None = None) -> Pentagon:
    """Inner pentagon of the diagonals.

    Vertex i is diag(v[i-1], v[i+1]) meet diag(v[i], v[i+2]).
    """
    diagonals = [line_through(P[i], P[(i + 2) % 5], signals) for i in range(5)]
    # diagonals[j] joins v[j] and v[j+2]
    return Pentagon(
        _meet(diagonals[(i - 1) % 5], diagonals[i], mode, signals, "in") for i in range(5)
    )


def pent_out(P: Sequence[Point2], mode: str = K_MODE, signals: list[ThresholdSignal] | None = None) -> Pentagon:
    """Outer pentagon of the extended sides; inverse of ``pent_in``.

    Vertex i is side(v[i-2], v[i-1]) meet side(v[i], v[i+1]).
    """
    sides = [line_through(P[i], P[(i + 1) % 5], signals) for i in range(5)]
    return Pentagon(
        _meet(sides[(i - 2) % 5], sides[i], mode, signals, "out") for i in range(5)
    )


def iterate(P: Sequence[Point2], depth: int, mode: str = K_MODE, signals: list[ThresholdSignal] | None = None) -> Pentagon:
    """``out^depth(in^depth(P))``; equals P in exact arithmetic."""
    if depth < 1:
        raise ValueError(f"depth must be >= 1, got {depth}")
    Q = Pentagon(P)
    for _ in range(depth):
        Q = pent_in(Q, mode, signals)
    for _ in range(depth):
        Q = pent_out(Q, mode, signals)
    return Q


def _coord_text(v) -> str:
    if isinstance(v, Fpe):
        return to_report(v.x)
    if isinstance(v, PFloat):
        return to_report(v)
    if isinstance(v, Fraction) and v.denominator != 1:
        # terminating decimals only; anything else is written as a ratio
        d = v.denominator
        while d % 2 == 0:
            d //= 2
        while d % 5 == 0:
            d //= 5
        if d != 1:
            return f"{v.numerator}/{v.denominator}"
        from decimal import Decimal, localcontext

        with localcontext() as ctx:
            ctx.prec = 10 * len(str(v.denominator)) + len(str(v.numerator))
            return format(Decimal(v.numerator) / Decimal(v.denominator), "f")
    return str(v)


def pentagon_to_json(P: Sequence[Point2]) -> str:
    """JSON array of ``[x, y]`` pairs of lossless decimal text."""
    return json.dumps([[_coord_text(p.x), _coord_text(p.y)] for p in P])


def pentagon_from_json(text: str, convert: Callable[[str], object] = Fraction) -> Pentagon:
    pairs = json.loads(text)
    return Pentagon(Point2(convert(x), convert(y)) for x, y in pairs)
