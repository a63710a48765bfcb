"""
Walls and chambers in the shift parameter.

As x moves, the discretised T_x* V keeps its grid combinatorics inside the
parts of a cube partition cut out by comparisons between shifted module
coordinates, stability coordinates and the origin. Inside a part every
pulled-back alpha_p, beta_p is affine in x (one parameter), so HN types can
only change on those part boundaries or at roots of the wall quadratics
alpha(d) beta(d') = alpha(d') beta(d).
"""

import itertools
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import sympy
from tqdm import tqdm

from ..config.settings import DEFAULT_SEED, WALL_BUDGET
from .errors import BudgetExceeded, InvariantViolation, UsageError
from .gridcomb import (Cube, GridFunction, GridMap, GridPoset, Point, Vertex, common_refinement,
                       shift_grid, to_point)
from .hncore import DIRECT, HNFiltration, HNType, all_submodules, hn_filtration
from .hninvariants import discretise_at
from .persmod import GridModule, full_submodule, zero_submodule
from .stabcond import DiscreteStability, StabilityCondition

logger = logging.getLogger(__name__)

Exact = Union[Fraction, sympy.Expr]
DimVec = Tuple[int, ...]


@dataclass(frozen=True)
class WallSystem:
    """Unordered pairs of distinct nonzero sub-dimension vectors of dim U"""
    poset: GridPoset
    dimvec: DimVec
    walls: Tuple[Tuple[DimVec, DimVec], ...]

    def __len__(self):
        return len(self.walls)

    def on_wall(self, ds: DiscreteStability, wall: Tuple[DimVec, DimVec]) -> bool:
        d, e = wall
        im_d, re_d = ds.charge(dict(zip(self.poset.vertices(), d)))
        im_e, re_e = ds.charge(dict(zip(self.poset.vertices(), e)))
        return im_d * re_e == im_e * re_d

    def walls_through(self, ds: DiscreteStability) -> List[Tuple[DimVec, DimVec]]:
        return [w for w in self.walls if self.on_wall(ds, w)]


def sub_dimension_vectors(dimvec: Sequence[int], budget: int = WALL_BUDGET) -> List[DimVec]:
    """Every nonzero d with 0 <= d <= dimvec"""
    count = 1
    for d in dimvec:
        count *= d + 1
    if count > budget:
        raise BudgetExceeded(f"{count} sub-dimension vectors exceed the wall budget of {budget}")
    return [d for d in itertools.product(*(range(k + 1) for k in dimvec)) if any(d)]


def wall_system(u: GridModule, ds_shape: Optional[GridPoset] = None, budget: int = WALL_BUDGET) -> WallSystem:
    if ds_shape is not None and ds_shape != u.poset:
        raise UsageError(f"stability shape {ds_shape.sizes} differs from the module grid {u.poset.sizes}")
    vectors = sub_dimension_vectors(u.dimension_vector(), budget)
    walls = tuple(itertools.combinations(vectors, 2))
    return WallSystem(u.poset, u.dimension_vector(), walls)


@dataclass(frozen=True)
class CubePartition:
    """
    Cubes tiling a bounded region of shifts, each with the common refinement
    combinatorics of the shifted module grid and the stability grid.
    """
    region: Cube
    axis_breakpoints: Tuple[Tuple[Fraction, ...], ...]
    parts: Tuple[Cube, ...]
    refinements: Tuple[Tuple[GridMap, GridMap], ...]

    def locate(self, q: Sequence) -> int:
        q = to_point(q)
        for k, part in enumerate(self.parts):
            if part.contains(q):
                return k
        raise UsageError(f"{q} lies outside the partitioned region {self.region}")


def _axis_pieces(lo: Fraction, hi: Fraction, low_closed: bool, high_closed: bool,
                 zeros: List[Fraction]) -> List[Tuple[Fraction, Fraction, bool, bool]]:
    if lo == hi:
        return [(lo, hi, True, True)]
    cuts = [lo] + sorted(z for z in set(zeros) if lo < z < hi) + [hi]
    pieces = [(lo, lo, True, True)] if low_closed else []
    for a, b in zip(cuts, cuts[1:]):
        pieces.append((a, b, False, False))
        if b != hi:
            pieces.append((b, b, True, True))
    if high_closed:
        pieces.append((hi, hi, True, True))
    return pieces


def cube_partition(gv: GridFunction, gz: GridFunction, region: Cube) -> CubePartition:
    """
    Partition of a bounded region by the zeros of c - x_i - z and c - x_i,
    c a module coordinate and z a stability coordinate on axis i.

    Args:
        gv: module grid
        gz: stability grid
        region: bounded cube of shifts (one or two parameters)
    """
    n = gv.n
    if n > 2:
        raise UsageError("cube partitions are only built for one or two parameters")
    if gz.n != n or region.n != n:
        raise UsageError("module grid, stability grid and region must share the dimension")
    if not region.is_bounded():
        raise UsageError("cube partitions need a bounded region")
    per_axis, breakpoints = [], []
    for i in range(n):
        zeros = [c - z for c in gv.axes[i] for z in gz.axes[i]] + list(gv.axes[i])
        lo, hi = region.lows[i], region.highs[i]
        breakpoints.append(tuple(sorted(z for z in set(zeros) if lo < z < hi)))
        per_axis.append(_axis_pieces(lo, hi, region.low_closed[i], region.high_closed[i], zeros))
    parts, refinements = [], []
    for combo in itertools.product(*per_axis):
        part = Cube(tuple(p[0] for p in combo), tuple(p[1] for p in combo),
                    tuple(p[2] for p in combo), tuple(p[3] for p in combo))
        _, t_module, t_stab = common_refinement(shift_grid(gv, part.interior_point()), gz)
        parts.append(part)
        refinements.append((t_module, t_stab))
    logger.debug(f"Cube partition of {region} into {len(parts)} parts")
    return CubePartition(region, tuple(breakpoints), tuple(parts), tuple(refinements))


def chamber_key(u: GridModule, ds: DiscreteStability, filtration: HNFiltration) -> tuple:
    """
    Combinatorial HN type, independent of how finely the grid is cut.

    Per vertex: the step dimensions, the module dimension and whether alpha
    is positive there on nonzero spaces; adjacent identical slices along
    every axis are merged and a leading empty slice is dropped, since below
    the grid the module vanishes anyway. The sign of every slope is appended.
    """
    data = {p: (tuple(step[p].dim for step in filtration.steps[1:]), u.dims[p], u.dims[p] > 0 and ds.alpha[p] > 0)
            for p in u.poset.vertices()}
    keep = [list(range(m)) for m in u.poset.sizes]

    def slice_at(axis, k):
        ranges = [keep[i] if i != axis else [k] for i in range(u.n)]
        return tuple(data[q] for q in itertools.product(*ranges))

    for axis in range(u.n):
        kept = [keep[axis][0]]
        for k in keep[axis][1:]:
            if slice_at(axis, k) != slice_at(axis, kept[-1]):
                kept.append(k)
        keep[axis] = kept
    for axis in range(u.n):
        if len(keep[axis]) > 1 and all(d[1] == 0 for d in slice_at(axis, keep[axis][0])):
            keep[axis] = keep[axis][1:]
    body = tuple(data[q] for q in itertools.product(*keep))
    return tuple(len(k) for k in keep), body, tuple(mu > 0 for mu in filtration.slopes)


def _filtration_of(u: GridModule, ds: DiscreteStability, strategy: str) -> HNFiltration:
    if u.is_zero():
        return HNFiltration(u, [zero_submodule(u)], [])
    if all(ds.alpha[p] == 0 for p in u.support_vertices()):
        return HNFiltration(u, [zero_submodule(u), full_submodule(u)], [Fraction(0)])
    return hn_filtration(u, ds, strategy)


def type_at(v: GridModule, z: StabilityCondition, x: Sequence, strategy: str = DIRECT) -> Tuple[tuple, HNType]:
    """(chamber key, HN type) of T_x* V"""
    u, ds = discretise_at(v, z, x)
    filtration = _filtration_of(u, ds, strategy)
    return chamber_key(u, ds, filtration), filtration.hn_type()


def _sym(value: Exact) -> sympy.Expr:
    if isinstance(value, Fraction):
        return sympy.Rational(value.numerator, value.denominator)
    return value


def _exact(value: sympy.Expr) -> Exact:
    if value.is_Rational:
        return Fraction(int(value.p), int(value.q))
    return value


def rational_between(a: Exact, b: Exact) -> Fraction:
    """A rational strictly between a < b, short when possible"""
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return (a + b) / 2
    lo, hi = _sym(a), _sym(b)
    mid = Fraction(str(sympy.N((lo + hi) / 2, 40)))
    short = mid.limit_denominator(10 ** 6)
    for candidate in (short, mid):
        if bool(lo < _sym(candidate)) and bool(_sym(candidate) < hi):
            return candidate
    raise InvariantViolation("rational-between", f"no rational found between {a} and {b}")


def _quadratic_roots(c2: Fraction, c1: Fraction, c0: Fraction, a: Fraction, b: Fraction) -> List[Exact]:
    """Real roots of c2 x^2 + c1 x + c0 strictly inside (a, b)"""
    if c2 == 0:
        if c1 == 0:
            return []
        roots = [_sym(-c0 / c1)]
    else:
        disc = c1 * c1 - 4 * c2 * c0
        if disc < 0:
            return []
        root = sympy.sqrt(_sym(disc))
        roots = [(_sym(-c1) + root) / _sym(2 * c2), (_sym(-c1) - root) / _sym(2 * c2)]
    lo, hi = _sym(a), _sym(b)
    return [_exact(r) for r in roots if bool(lo < r) and bool(r < hi)]


def _relevant_vectors(u: GridModule, budget: int) -> List[DimVec]:
    """Dimension vectors of subquotients of u: the only charges HN comparisons see"""
    try:
        subs = all_submodules(u)
    except BudgetExceeded:
        return sub_dimension_vectors(u.dimension_vector(), budget)
    if len(subs) * len(subs) > budget * budget:
        return sub_dimension_vectors(u.dimension_vector(), budget)
    vecs = {}
    for big in subs:
        dv_big = big.dimension_vector()
        for small in subs:
            if small.total_dim < big.total_dim and small <= big:
                vecs[tuple(a - b for a, b in zip(dv_big, small.dimension_vector()))] = None
    return list(vecs)


def _part_walls(v: GridModule, z: StabilityCondition, a: Fraction, b: Fraction,
                budget: int) -> List[Tuple[Fraction, Fraction, Fraction]]:
    """Normalised wall quadratics of an open part (a, b), found by affine interpolation"""
    x1, x2 = a + (b - a) / 3, a + 2 * (b - a) / 3
    u1, ds1 = discretise_at(v, z, (x1,))
    u2, ds2 = discretise_at(v, z, (x2,))
    if u1.poset != u2.poset or u1.dimension_vector() != u2.dimension_vector():
        raise InvariantViolation("chamber-combinatorics", f"grid changes inside the part ({a}, {b})")
    if u1.is_zero():
        return []
    vertices = list(u1.poset.vertices())

    def affine(f1, f2):
        slope = (f2 - f1) / (x2 - x1)
        return f1 - slope * x1, slope

    alpha = [affine(ds1.alpha[p], ds2.alpha[p]) for p in vertices]
    beta = [affine(ds1.beta[p], ds2.beta[p]) for p in vertices]
    signatures = set()
    for d in _relevant_vectors(u1, budget):
        a0 = sum((k * alpha[i][0] for i, k in enumerate(d) if k), Fraction(0))
        a1 = sum((k * alpha[i][1] for i, k in enumerate(d) if k), Fraction(0))
        b0 = sum((k * beta[i][0] for i, k in enumerate(d) if k), Fraction(0))
        b1 = sum((k * beta[i][1] for i, k in enumerate(d) if k), Fraction(0))
        signatures.add((a0, a1, b0, b1))
    walls = set()
    for (a0, a1, b0, b1), (e0, e1, f0, f1) in itertools.combinations(sorted(signatures), 2):
        c2 = a1 * f1 - e1 * b1
        c1 = a0 * f1 + a1 * f0 - e0 * b1 - e1 * b0
        c0 = a0 * f0 - e0 * b0
        lead = next((c for c in (c2, c1, c0) if c != 0), None)
        if lead is not None:
            walls.add((c2 / lead, c1 / lead, c0 / lead))
    return sorted(walls)


@dataclass
class Breakpoints1D:
    """
    Shifts where the HN type of T_x* V changes, with the type on every
    interval between them and at every rational breakpoint.
    """
    region: Tuple[Fraction, Fraction]
    breakpoints: List[Exact]
    intervals: List[Tuple[Exact, Exact, HNType]]
    point_types: Dict[Fraction, HNType] = field(default_factory=dict)
    candidates: List[Exact] = field(default_factory=list)
    keys: List[tuple] = field(default_factory=list, repr=False)

    def interval_index(self, x: Fraction) -> Optional[int]:
        """Index of the open interval containing x, None on a breakpoint"""
        q = _sym(Fraction(x))
        for k, (lo, hi, _) in enumerate(self.intervals):
            if bool(_sym(lo) < q) and bool(q < _sym(hi)):
                return k
        return None

    def to_dict(self) -> dict:
        def render(t: HNType):
            return [{'slope': str(s), 'dims': list(d)} for s, d in t.entries]

        return {
            'region': [str(self.region[0]), str(self.region[1])],
            'breakpoints': [str(b) for b in self.breakpoints],
            'intervals': [{'lo': str(lo), 'hi': str(hi), 'type': render(t)} for lo, hi, t in self.intervals],
            'point_types': {str(b): render(t) for b, t in self.point_types.items()},
        }


def x_breakpoints_1d(v: GridModule, z: StabilityCondition, region: Sequence,
                     strategy: str = DIRECT, budget: int = WALL_BUDGET, progress: bool = False) -> Breakpoints1D:
    """
    Exact HN type breakpoints of T_x* V for x in a closed interval.

    Candidates are the cube partition boundaries and the wall roots inside
    every open part; a candidate is kept when the types on its two sides or
    at the point itself differ.
    """
    if v.n != 1 or z.n != 1:
        raise UsageError("exact breakpoints are computed for one parameter only")
    lo, hi = Fraction(region[0]), Fraction(region[1])
    if lo > hi:
        raise UsageError(f"empty region [{lo}, {hi}]")
    if v.is_zero():
        key, t = type_at(v, z, (lo,), strategy)
        return Breakpoints1D((lo, hi), [], [(lo, hi, t)], {}, [lo, hi], [key])
    coords = v.grid.axes[0]
    base = z.base_grid.axes[0]
    span_lo = min(base[0], Fraction(0), coords[0] - hi)
    span_hi = max(base[-1], Fraction(0), coords[-1] - lo)
    gz = GridFunction((tuple(sorted(set(base) | {Fraction(0)} | set(z.beta.tail_breakpoints(0, span_lo, span_hi)))),))
    partition = cube_partition(v.grid, gz, Cube.closed((lo,), (hi,)))

    found = {_sym(lo), _sym(hi)}
    parts = [p for p in partition.parts if not p.axis_is_point(0)]
    for part in tqdm(parts, desc="Chamber parts", disable=not progress):
        a, b = part.lows[0], part.highs[0]
        found.add(_sym(a))
        found.add(_sym(b))
        for c2, c1, c0 in _part_walls(v, z, a, b, budget):
            found.update(_sym(r) for r in _quadratic_roots(c2, c1, c0, a, b))
    candidates = [_exact(c) for c in sorted(found, key=lambda s: sympy.N(s, 50))]

    between = []
    for a, b in zip(candidates, candidates[1:]):
        between.append(type_at(v, z, (rational_between(a, b),), strategy))
    at_point = {c: type_at(v, z, (c,), strategy) for c in candidates if isinstance(c, Fraction)}

    breakpoints, point_types = [], {}
    for k in range(1, len(candidates) - 1):
        c = candidates[k]
        left, right = between[k - 1][0], between[k][0]
        keys = {left, right}
        if c in at_point:
            keys.add(at_point[c][0])
        if len(keys) > 1:
            breakpoints.append(c)
            if c in at_point:
                point_types[c] = at_point[c][1]

    intervals, keys = [], []
    start = candidates[0]
    for k in range(len(between)):
        end = candidates[k + 1]
        if end in breakpoints or k == len(between) - 1:
            intervals.append((start, end, between[k][1]))
            keys.append(between[k][0])
            start = end
    logger.info(f"Found {len(breakpoints)} breakpoints among {len(candidates)} candidates on [{lo}, {hi}]")
    return Breakpoints1D((lo, hi), breakpoints, intervals, point_types, candidates, keys)


def constancy_check(v: GridModule, z: StabilityCondition, part: Cube, theta=None, probes: int = 8,
                    seed: int = DEFAULT_SEED, strategy: str = DIRECT) -> bool:
    """
    Whether the HN type is the same at random rational points of a part.

    For two parameters chambers are semialgebraic rather than cubical, so a
    False result marks a wall crossing the part, not a bug.
    """
    if not part.is_bounded():
        raise UsageError("constancy checks need a bounded part")
    rng = np.random.default_rng(seed)
    reference = None
    for _ in range(probes):
        q = []
        for i in range(part.n):
            lo, hi = part.lows[i], part.highs[i]
            if part.axis_is_point(i):
                q.append(lo)
            else:
                q.append(lo + (hi - lo) * Fraction(int(rng.integers(1, 1024)), 1024))
        key, t = type_at(v, z, q, strategy)
        if theta is not None:
            key = (key, sum(1 for mu in t.slopes if mu >= theta))
        if reference is None:
            reference = key
        elif key != reference:
            logger.warning(f"HN type not constant on {part}: differs at {tuple(str(c) for c in q)}")
            return False
    return True
