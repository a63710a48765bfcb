"""
Finite grid posets, grid functions with rational coordinates, and the
floor / cube calculus that links a finite grid to the continuous parameter
space.

A grid function G = (G_1, ..., G_n) sends the index cube {0..m_1-1} x ... x
{0..m_n-1} into Q^n. Every rational point q has a floor: the largest index p
with G(p) <= q, or NEG_INF when q lies below the grid on some axis. The fiber
of p is the half-open cube of points whose floor is p.
"""

import bisect
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from .errors import UsageError

Point = Tuple[Fraction, ...]
Vertex = Tuple[int, ...]


class _NegInf:
    """Floor of a point lying below the grid on some axis"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "NEG_INF"


class _Infinity:
    """The +inf marker returned by rank-type functors off the order x <= y"""
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "inf"

    def __str__(self):
        return "inf"

    def __eq__(self, other):
        return other is self

    def __hash__(self):
        return hash("inf-marker")

    def __lt__(self, other):
        return False

    def __le__(self, other):
        return other is self

    def __gt__(self, other):
        return other is not self

    def __ge__(self, other):
        return True


NEG_INF = _NegInf()
INF = _Infinity()


def to_point(values: Iterable) -> Point:
    return tuple(Fraction(v) for v in values)


def leq(a: Sequence, b: Sequence) -> bool:
    """Product order"""
    return all(x <= y for x, y in zip(a, b))


@dataclass(frozen=True)
class GridPoset:
    """The product of chains {0..m_1-1} x ... x {0..m_n-1}"""
    sizes: Tuple[int, ...]

    def __post_init__(self):
        if len(self.sizes) < 1:
            raise UsageError("a grid poset needs at least one axis")
        if any(m < 1 for m in self.sizes):
            raise UsageError(f"every axis must be nonempty, got sizes {self.sizes}")

    @property
    def n(self) -> int:
        return len(self.sizes)

    @property
    def count(self) -> int:
        total = 1
        for m in self.sizes:
            total *= m
        return total

    def vertices(self) -> Iterator[Vertex]:
        return itertools.product(*(range(m) for m in self.sizes))

    def topological_order(self) -> List[Vertex]:
        """Vertices sorted by coordinate sum, then lexicographically"""
        return sorted(self.vertices(), key=lambda p: (sum(p), p))

    def contains(self, p: Vertex) -> bool:
        return len(p) == self.n and all(0 <= a < m for a, m in zip(p, self.sizes))

    def successor(self, p: Vertex, axis: int) -> Optional[Vertex]:
        if p[axis] + 1 >= self.sizes[axis]:
            return None
        return p[:axis] + (p[axis] + 1,) + p[axis + 1:]

    def covering_edges(self) -> Iterator[Tuple[Vertex, int, Vertex]]:
        """All Hasse edges (p, axis, p + e_axis)"""
        for p in self.vertices():
            for axis in range(self.n):
                q = self.successor(p, axis)
                if q is not None:
                    yield p, axis, q

    def squares(self) -> Iterator[Tuple[Vertex, int, int]]:
        """All 2-faces (p, i, j) with i < j"""
        for p in self.vertices():
            for i in range(self.n):
                for j in range(i + 1, self.n):
                    if p[i] + 1 < self.sizes[i] and p[j] + 1 < self.sizes[j]:
                        yield p, i, j


@dataclass(frozen=True)
class Cube:
    """
    A product of intervals in Q^n.

    A bound of None means -inf (lows) or +inf (highs). By default every axis
    is half-open [lo, hi); the closed flags describe faces and open parts.
    """
    lows: Tuple[Optional[Fraction], ...]
    highs: Tuple[Optional[Fraction], ...]
    low_closed: Optional[Tuple[bool, ...]] = None
    high_closed: Optional[Tuple[bool, ...]] = None

    def __post_init__(self):
        n = len(self.lows)
        if len(self.highs) != n:
            raise UsageError("cube bounds of different lengths")
        object.__setattr__(self, 'lows', tuple(None if v is None else Fraction(v) for v in self.lows))
        object.__setattr__(self, 'highs', tuple(None if v is None else Fraction(v) for v in self.highs))
        if self.low_closed is None:
            object.__setattr__(self, 'low_closed', tuple(lo is not None for lo in self.lows))
        if self.high_closed is None:
            object.__setattr__(self, 'high_closed', (False,) * n)
        for lo, hi in zip(self.lows, self.highs):
            if lo is not None and hi is not None and lo > hi:
                raise UsageError(f"cube lower bound {lo} exceeds upper bound {hi}")

    @classmethod
    def half_open(cls, lows: Sequence, highs: Sequence) -> "Cube":
        return cls(tuple(lows), tuple(highs))

    @classmethod
    def closed(cls, lows: Sequence, highs: Sequence) -> "Cube":
        n = len(lows)
        return cls(tuple(lows), tuple(highs), (True,) * n, (True,) * n)

    @classmethod
    def point(cls, q: Sequence) -> "Cube":
        return cls.closed(q, q)

    @property
    def n(self) -> int:
        return len(self.lows)

    def is_bounded(self) -> bool:
        return all(v is not None for v in self.lows + self.highs)

    def axis_is_point(self, axis: int) -> bool:
        lo, hi = self.lows[axis], self.highs[axis]
        return lo is not None and lo == hi

    def axis_is_empty(self, axis: int) -> bool:
        lo, hi = self.lows[axis], self.highs[axis]
        if lo is None or hi is None or lo < hi:
            return False
        return not (self.low_closed[axis] and self.high_closed[axis])

    def is_empty(self) -> bool:
        return any(self.axis_is_empty(i) for i in range(self.n))

    def span_axes(self) -> List[int]:
        """Axes along which the cube has positive length"""
        return [i for i in range(self.n) if not self.axis_is_point(i) and not self.axis_is_empty(i)]

    def volume(self) -> Fraction:
        """Volume along the spanning axes (1 for a point)"""
        if not self.is_bounded():
            raise UsageError("volume of an unbounded cube")
        vol = Fraction(1)
        for i in self.span_axes():
            vol *= self.highs[i] - self.lows[i]
        return vol

    def contains(self, q: Sequence) -> bool:
        for i, v in enumerate(q):
            lo, hi = self.lows[i], self.highs[i]
            if lo is not None and (v < lo or (v == lo and not self.low_closed[i])):
                return False
            if hi is not None and (v > hi or (v == hi and not self.high_closed[i])):
                return False
        return True

    def translate(self, x: Sequence) -> "Cube":
        """The cube moved by -x"""
        lows = tuple(None if lo is None else lo - Fraction(v) for lo, v in zip(self.lows, x))
        highs = tuple(None if hi is None else hi - Fraction(v) for hi, v in zip(self.highs, x))
        return Cube(lows, highs, self.low_closed, self.high_closed)

    def interior_point(self) -> Point:
        """A rational point of the cube, central on bounded axes"""
        out = []
        for i in range(self.n):
            lo, hi = self.lows[i], self.highs[i]
            if lo is None and hi is None:
                out.append(Fraction(0))
            elif lo is None:
                out.append(hi - 1)
            elif hi is None:
                out.append(lo + 1 if not self.low_closed[i] else lo)
            else:
                out.append((lo + hi) / 2)
        return tuple(out)

    def __str__(self) -> str:
        parts = []
        for i in range(self.n):
            lo, hi = self.lows[i], self.highs[i]
            left = "[" if self.low_closed[i] else "("
            right = "]" if self.high_closed[i] else ")"
            parts.append(f"{left}{'-inf' if lo is None else lo},{'+inf' if hi is None else hi}{right}")
        return " x ".join(parts)


@dataclass(frozen=True)
class GridFunction:
    """
    Rational coordinates for every index of a grid poset.

    proper grids are strictly increasing on every axis; improper ones are
    only non-decreasing and are consumed by internal constructions.
    """
    axes: Tuple[Tuple[Fraction, ...], ...]
    proper: bool = True

    def __post_init__(self):
        axes = tuple(tuple(Fraction(v) for v in axis) for axis in self.axes)
        object.__setattr__(self, 'axes', axes)
        if not axes:
            raise UsageError("a grid function needs at least one axis")
        for i, axis in enumerate(axes):
            if not axis:
                raise UsageError(f"axis {i} of the grid is empty")
            for a, b in zip(axis, axis[1:]):
                if (self.proper and a >= b) or a > b:
                    raise UsageError(f"axis {i} coordinates not increasing at {a}, {b}")

    @classmethod
    def integer(cls, sizes: Sequence[int]) -> "GridFunction":
        return cls(tuple(tuple(range(m)) for m in sizes))

    @property
    def n(self) -> int:
        return len(self.axes)

    @property
    def domain(self) -> GridPoset:
        return GridPoset(tuple(len(a) for a in self.axes))

    def __call__(self, p: Vertex) -> Point:
        return tuple(self.axes[i][k] for i, k in enumerate(p))

    def lower_corner(self) -> Point:
        return tuple(a[0] for a in self.axes)

    def upper_corner(self) -> Point:
        return tuple(a[-1] for a in self.axes)

    def refines(self, other: "GridFunction") -> bool:
        return self.n == other.n and all(set(b) <= set(a) for a, b in zip(self.axes, other.axes))


@dataclass(frozen=True)
class GridMap:
    """Per-axis strictly increasing index maps between grid posets"""
    domain: GridPoset
    codomain: GridPoset
    index_maps: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        if self.domain.n != self.codomain.n or len(self.index_maps) != self.domain.n:
            raise UsageError("grid map between posets of different dimension")
        for i, tau in enumerate(self.index_maps):
            if len(tau) != self.domain.sizes[i]:
                raise UsageError(f"index map on axis {i} has the wrong length")
            if any(a >= b for a, b in zip(tau, tau[1:])):
                raise UsageError(f"index map on axis {i} is not strictly increasing")
            if tau and (tau[0] < 0 or tau[-1] >= self.codomain.sizes[i]):
                raise UsageError(f"index map on axis {i} leaves the codomain")

    @classmethod
    def identity(cls, poset: GridPoset) -> "GridMap":
        return cls(poset, poset, tuple(tuple(range(m)) for m in poset.sizes))

    def __call__(self, p: Vertex) -> Vertex:
        return tuple(self.index_maps[i][k] for i, k in enumerate(p))

    def axis_floor(self, axis: int, k: int) -> int:
        """Largest domain index whose image is <= k, or -1"""
        return bisect.bisect_right(self.index_maps[axis], k) - 1

    def floor(self, q: Vertex):
        p = tuple(self.axis_floor(i, k) for i, k in enumerate(q))
        return NEG_INF if any(k < 0 for k in p) else p


def axis_floor(g: GridFunction, axis: int, value) -> int:
    """Largest index whose coordinate is <= value, or -1"""
    return bisect.bisect_right(g.axes[axis], value) - 1


def extended_floor(g: GridFunction, q: Sequence) -> Tuple[int, ...]:
    """Per-axis floors, with -1 marking an axis where q lies below the grid"""
    return tuple(axis_floor(g, i, Fraction(v)) for i, v in enumerate(q))


def floor(g: GridFunction, q: Sequence):
    """
    The G-floor of a rational point.

    Args:
        g: proper grid function
        q: point of Q^n

    Returns:
        The largest vertex p with g(p) <= q, or NEG_INF
    """
    if not g.proper:
        raise UsageError("floor needs a proper grid")
    if len(q) != g.n:
        raise UsageError(f"point of dimension {len(q)} on a grid of dimension {g.n}")
    p = extended_floor(g, q)
    return NEG_INF if any(k < 0 for k in p) else p


def cube_of(g: GridFunction, p) -> Cube:
    """
    Fiber of a vertex under the floor.

    p may contain -1 entries (the region below the grid on that axis); NEG_INF
    itself gives the region below the lower corner on every axis.
    """
    if p is NEG_INF:
        return Cube(tuple(None for _ in range(g.n)), g.lower_corner())
    lows, highs = [], []
    for i, k in enumerate(p):
        axis = g.axes[i]
        if k < 0:
            lows.append(None)
            highs.append(axis[0])
        else:
            lows.append(axis[k])
            highs.append(axis[k + 1] if k + 1 < len(axis) else None)
    return Cube(tuple(lows), tuple(highs))


def embedding(coarse: GridFunction, fine: GridFunction) -> GridMap:
    """Index embedding of a grid into a grid containing all of its coordinates"""
    if not fine.refines(coarse):
        raise UsageError("target grid does not contain the source coordinates")
    maps = tuple(tuple(fa.index(c) for c in ca) for ca, fa in zip(coarse.axes, fine.axes))
    return GridMap(coarse.domain, fine.domain, maps)


def from_coordinates(coords: Sequence[Iterable]) -> GridFunction:
    """Proper grid on the sorted per-axis union of the given coordinates"""
    return GridFunction(tuple(tuple(sorted(set(Fraction(c) for c in axis))) for axis in coords))


def common_refinement(g1: GridFunction, g2: GridFunction) -> Tuple[GridFunction, GridMap, GridMap]:
    """
    Independent common refinement of two grids.

    Returns:
        (g, t1, t2) with g o t1 = g1 and g o t2 = g2
    """
    if g1.n != g2.n:
        raise UsageError(f"cannot refine grids of dimension {g1.n} and {g2.n}")
    g = from_coordinates([a + b for a, b in zip(g1.axes, g2.axes)])
    return g, embedding(g1, g), embedding(g2, g)


def shift_grid(g: GridFunction, x: Sequence) -> GridFunction:
    """Every coordinate g_i(p) replaced by g_i(p) - x_i"""
    if len(x) != g.n:
        raise UsageError(f"shift of dimension {len(x)} on a grid of dimension {g.n}")
    return GridFunction(tuple(tuple(c - Fraction(v) for c in axis) for axis, v in zip(g.axes, x)), g.proper)


def _in_projection(window: Cube, i: int, c: Fraction) -> bool:
    lo, hi = window.lows[i], window.highs[i]
    return (lo is None or c >= lo) and (hi is None or c <= hi)


def restrict_and_extend(g: GridFunction, extra_coords: Sequence[Iterable], window: Optional[Cube] = None) -> GridFunction:
    """
    Per-axis union of g with the extra coordinates.

    With a window, only extra coordinates in the closure of its projection are
    added; the coordinates of g are always kept.
    """
    if len(extra_coords) != g.n:
        raise UsageError("extra coordinates must be given per axis")
    if window is not None and window.n != g.n:
        raise UsageError("window of the wrong dimension")
    coords = []
    for i, (axis, extra) in enumerate(zip(g.axes, extra_coords)):
        extra = [Fraction(c) for c in extra]
        if window is not None:
            extra = [c for c in extra if _in_projection(window, i, c)]
        coords.append(list(axis) + extra)
    return from_coordinates(coords)


def coordinates_inside(g: GridFunction, window: Cube) -> List[List[bool]]:
    """Per axis, whether each coordinate lies in the closure of the window's projection"""
    if window.n != g.n:
        raise UsageError("window of the wrong dimension")
    return [[_in_projection(window, i, c) for c in axis] for i, axis in enumerate(g.axes)]


def bounding_box(points: Iterable[Sequence]) -> Optional[Tuple[Point, Point]]:
    pts = [to_point(p) for p in points]
    if not pts:
        return None
    n = len(pts[0])
    return (tuple(min(p[i] for p in pts) for i in range(n)),
            tuple(max(p[i] for p in pts) for i in range(n)))


def lattice(lows: Sequence, highs: Sequence, step: Fraction) -> List[Point]:
    """All points lows + k*step inside the closed box [lows, highs]"""
    axes = []
    for lo, hi in zip(lows, highs):
        lo, hi = Fraction(lo), Fraction(hi)
        count = int((hi - lo) // step) + 1
        axes.append([lo + k * step for k in range(count)])
    return [tuple(p) for p in itertools.product(*axes)]
