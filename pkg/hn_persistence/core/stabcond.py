"""
Stability conditions Z = beta + i alpha on finitely presentable modules.

alpha is a finite nonnegative combination of averaging forms over bounded
carriers (points, faces or full cubes); beta is the integral against a
strictly positive separable step density with geometric unit-cell tails, so
every cube integral is a closed-form rational.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

from ..config.settings import DEFAULT_TAIL_RATIO, DEFAULT_WINDOW_PADDING
from .errors import RefinementNeeded, UsageError, ValidationError
from .gridcomb import (Cube, GridFunction, GridPoset, Point, Vertex, bounding_box, coordinates_inside, cube_of,
                       from_coordinates, restrict_and_extend, shift_grid, to_point)

logger = logging.getLogger(__name__)

EVAL = "eval"
STEP = "step"


def _interval_overlap(lo1, hi1, lo2, hi2) -> Fraction:
    """Length of [lo1, hi1) meet [lo2, hi2); None bounds are infinite, result must be finite"""
    lo = lo2 if lo1 is None else lo1 if lo2 is None else max(lo1, lo2)
    hi = hi2 if hi1 is None else hi1 if hi2 is None else min(hi1, hi2)
    if lo is None or hi is None:
        raise UsageError("overlap of two unbounded intervals")
    return max(Fraction(0), hi - lo)


@dataclass(frozen=True)
class AxisProfile:
    """
    A positive step function on one axis.

    Steps are given on the window cells [breaks[i], breaks[i+1]); outside the
    window the value decays geometrically cell by cell, cells of width 1:
    [w_k + j, w_k + j + 1) carries values[-1] * right_ratio^(j+1) and
    [w_0 - j - 1, w_0 - j) carries values[0] * left_ratio^(j+1).
    """
    breaks: Tuple[Fraction, ...]
    values: Tuple[Fraction, ...]
    left_ratio: Fraction
    right_ratio: Fraction

    def _right_tail(self, t) -> Fraction:
        v, r = self.values[-1], self.right_ratio
        if t is None:
            return v * r / (1 - r)
        d = t - self.breaks[-1]
        whole = math.floor(d)
        frac = d - whole
        return v * r * (1 - r ** whole) / (1 - r) + frac * v * r ** (whole + 1)

    def _left_tail(self, t) -> Fraction:
        v, r = self.values[0], self.left_ratio
        if t is None:
            return v * r / (1 - r)
        d = self.breaks[0] - t
        whole = math.floor(d)
        frac = d - whole
        return v * r * (1 - r ** whole) / (1 - r) + frac * v * r ** (whole + 1)

    def integral(self, lo: Optional[Fraction], hi: Optional[Fraction]) -> Fraction:
        """Integral over [lo, hi); None stands for -inf / +inf"""
        if lo is not None and hi is not None and lo >= hi:
            return Fraction(0)
        w0, wk = self.breaks[0], self.breaks[-1]
        total = Fraction(0)
        for i, v in enumerate(self.values):
            total += v * _interval_overlap(lo, hi, self.breaks[i], self.breaks[i + 1])
        if hi is None or hi > wk:
            start = wk if lo is None or lo < wk else lo
            total += self._right_tail(hi) - self._right_tail(start)
        if lo is None or lo < w0:
            end = w0 if hi is None or hi > w0 else hi
            total += self._left_tail(lo) - self._left_tail(end)
        return total

    def value_at(self, t: Fraction) -> Fraction:
        w0, wk = self.breaks[0], self.breaks[-1]
        if t >= wk:
            return self.values[-1] * self.right_ratio ** (math.floor(t - wk) + 1)
        if t < w0:
            return self.values[0] * self.left_ratio ** math.ceil(w0 - t)
        for i in range(len(self.values)):
            if self.breaks[i] <= t < self.breaks[i + 1]:
                return self.values[i]
        raise UsageError(f"{t} not located on the profile")

    def minimum_on(self, lo: Fraction, hi: Fraction) -> Fraction:
        """Smallest value on the bounded interval [lo, hi)"""
        w0, wk = self.breaks[0], self.breaks[-1]
        values = [v for i, v in enumerate(self.values)
                  if _interval_overlap(lo, hi, self.breaks[i], self.breaks[i + 1]) > 0]
        if hi > wk:
            values.append(self.values[-1] * self.right_ratio ** math.ceil(hi - wk))
        if lo < w0:
            values.append(self.values[0] * self.left_ratio ** math.ceil(w0 - lo))
        return min(values)

    def tail_breakpoints(self, lo: Fraction, hi: Fraction) -> List[Fraction]:
        """Unit-cell boundaries outside the window lying in [lo, hi]"""
        out = []
        w0, wk = self.breaks[0], self.breaks[-1]
        if hi > wk:
            j = max(1, math.ceil(lo - wk))
            while wk + j <= hi:
                out.append(wk + j)
                j += 1
        if lo < w0:
            j = max(1, math.ceil(w0 - hi))
            while w0 - j >= lo:
                out.append(w0 - j)
                j += 1
        return sorted(out)


@dataclass(frozen=True)
class BetaSpec:
    """
    Separable positive density b = sum over terms of products of axis profiles.

    factors[t][i] lists the values of term t on the window cells of axis i;
    tails[i] = (left ratio, right ratio) on axis i.
    """
    window: Cube
    window_grid: GridFunction
    factors: Tuple[Tuple[Tuple[Fraction, ...], ...], ...]
    tails: Tuple[Tuple[Fraction, Fraction], ...]

    def __post_init__(self):
        object.__setattr__(self, 'factors', tuple(tuple(tuple(Fraction(v) for v in axis) for axis in term)
                                                  for term in self.factors))
        object.__setattr__(self, 'tails', tuple((Fraction(a), Fraction(b)) for a, b in self.tails))

    @property
    def n(self) -> int:
        return self.window_grid.n

    def profile(self, term: int, axis: int) -> AxisProfile:
        left, right = self.tails[axis]
        return AxisProfile(self.window_grid.axes[axis], self.factors[term][axis], left, right)

    def window_value(self, cell: Vertex) -> Fraction:
        total = Fraction(0)
        for term in self.factors:
            prod = Fraction(1)
            for i, k in enumerate(cell):
                prod *= term[i][k]
            total += prod
        return total

    def tail_breakpoints(self, axis: int, lo: Fraction, hi: Fraction) -> List[Fraction]:
        return self.profile(0, axis).tail_breakpoints(lo, hi)

    def lower_bound_on(self, cell: Cube) -> Fraction:
        """A positive lower bound of b on a bounded cube: termwise product of axis minima"""
        total = Fraction(0)
        for t in range(len(self.factors)):
            prod = Fraction(1)
            for i in range(cell.n):
                prod *= self.profile(t, i).minimum_on(cell.lows[i], cell.highs[i])
            total += prod
        return total

    def translate(self, x: Sequence) -> "BetaSpec":
        return BetaSpec(self.window.translate(x), shift_grid(self.window_grid, x), self.factors, self.tails)


@dataclass(frozen=True)
class AlphaTerm:
    """coeff times the average over a bounded carrier (a point, a face or a cube)"""
    carrier: Cube
    coeff: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'coeff', Fraction(self.coeff))

    def weight_on(self, cell: Cube) -> Fraction:
        """Average of the indicator of a half-open cell over the carrier"""
        w = Fraction(1)
        c = self.carrier
        for i in range(c.n):
            lo, hi = cell.lows[i], cell.highs[i]
            if c.axis_is_point(i):
                t = c.lows[i]
                if (lo is not None and t < lo) or (hi is not None and t >= hi):
                    return Fraction(0)
            else:
                length = c.highs[i] - c.lows[i]
                w *= _interval_overlap(lo, hi, c.lows[i], c.highs[i]) / length
                if w == 0:
                    return w
        return w

    def translate(self, x: Sequence) -> "AlphaTerm":
        return AlphaTerm(self.carrier.translate(x), self.coeff)


@dataclass(frozen=True)
class StabilityCondition:
    """
    Z = beta + i alpha.

    mode EVAL: alpha is a combination of point evaluations.
    mode STEP: alpha averages over points, faces or full cubes.
    signed conditions (negative cube coefficients) are for the oracle only.
    """
    n: int
    mode: str
    alpha: Tuple[AlphaTerm, ...]
    beta: BetaSpec
    signed: bool = False

    @property
    def base_grid(self) -> GridFunction:
        """
        Window grid and carrier bounds, plus one coordinate past the top on
        every axis so that carriers sit inside bounded cubes.
        """
        coords = [list(axis) for axis in self.beta.window_grid.axes]
        for term in self.alpha:
            c = term.carrier
            for i in range(self.n):
                for v in (c.lows[i], c.highs[i]):
                    if v is not None:
                        coords[i].append(v)
        for axis in coords:
            axis.append(max(axis) + 1)
        return from_coordinates(coords)

    def imaginary_on_cube(self, cell: Cube) -> Fraction:
        return sum((t.coeff * t.weight_on(cell) for t in self.alpha), Fraction(0))

    def real_on_cube(self, cell: Cube) -> Fraction:
        return beta_integral(self.beta, cell)

    def translate(self, x: Sequence) -> "StabilityCondition":
        return shift_Z(self, x)


@dataclass(frozen=True, eq=False)
class DiscreteStability:
    """alpha_p + i beta_p per vertex of a grid poset, beta_p > 0"""
    grid: GridPoset
    alpha: Dict[Vertex, Fraction]
    beta: Dict[Vertex, Fraction]

    def key(self) -> tuple:
        order = list(self.grid.vertices())
        return (self.grid.sizes, tuple(self.alpha[p] for p in order), tuple(self.beta[p] for p in order))

    def is_nonnegative(self) -> bool:
        return all(a >= 0 for a in self.alpha.values())

    def is_real(self) -> bool:
        return all(a == 0 for a in self.alpha.values())

    def charge(self, dims: Dict[Vertex, int]) -> Tuple[Fraction, Fraction]:
        """(Im Z, Re Z) of a dimension vector"""
        im = sum((self.alpha[p] * d for p, d in dims.items() if d), Fraction(0))
        re = sum((self.beta[p] * d for p, d in dims.items() if d), Fraction(0))
        return im, re


def _as_dims(ds: DiscreteStability, dimvec) -> Dict[Vertex, int]:
    if isinstance(dimvec, dict):
        return dimvec
    return dict(zip(ds.grid.vertices(), dimvec))


def slope(ds: DiscreteStability, dimvec: Union[Dict[Vertex, int], Sequence[int]]) -> Fraction:
    """
    Im Z / Re Z of a nonzero dimension vector.

    Raises:
        UsageError: for the zero dimension vector
    """
    im, re = ds.charge(_as_dims(ds, dimvec))
    if re == 0:
        raise UsageError("slope of the zero module")
    return im / re


def beta_integral(beta: BetaSpec, c: Cube) -> Fraction:
    """Exact integral of b over a (possibly unbounded) cube"""
    if c.is_empty() or any(c.axis_is_point(i) for i in range(c.n)):
        return Fraction(0)
    total = Fraction(0)
    for t in range(len(beta.factors)):
        prod = Fraction(1)
        for i in range(c.n):
            prod *= beta.profile(t, i).integral(c.lows[i], c.highs[i])
            if prod == 0:
                break
        total += prod
    return total


def alpha_eval(z: StabilityCondition, module) -> Fraction:
    """Im Z of a module's dimension vector, read cell by cell on the module grid"""
    total = Fraction(0)
    for p, d in module.dims.items():
        if d:
            total += d * z.imaginary_on_cube(cube_of(module.grid, p))
    return total


def required_coordinates(z: StabilityCondition, g: GridFunction) -> List[List[Fraction]]:
    """Base grid coordinates and tail breakpoints inside the span of g, per axis"""
    base = z.base_grid
    span = Cube.closed(tuple(axis[0] for axis in g.axes), tuple(axis[-1] for axis in g.axes))
    inside = coordinates_inside(base, span)
    out = []
    for i, axis in enumerate(g.axes):
        need = {c for c, ok in zip(base.axes[i], inside[i]) if ok}
        need.update(z.beta.tail_breakpoints(i, axis[0], axis[-1]))
        out.append(sorted(need))
    return out


def adapted_grid(z: StabilityCondition, module_grid: GridFunction,
                 extra_points: Iterable[Sequence] = ()) -> GridFunction:
    """
    Smallest grid containing the module grid, the base grid of z, the extra
    points and every tail breakpoint inside the resulting span.
    """
    coords = [list(axis) for axis in z.base_grid.axes]
    for q in extra_points:
        for i, v in enumerate(q):
            coords[i].append(Fraction(v))
    g = restrict_and_extend(module_grid, coords)
    return restrict_and_extend(g, required_coordinates(z, g))


def pullback_Z(z: StabilityCondition, g: GridFunction, check: bool = True) -> DiscreteStability:
    """
    The discrete stability f*Z on the grid poset of g.

    alpha_p = Im Z(1_cube(p)) and beta_p = integral of b over cube(p).

    Raises:
        RefinementNeeded: when g misses base grid coordinates or tail
        breakpoints inside its span, or alpha charges an unbounded cube
    """
    poset = g.domain
    alpha, beta = {}, {}
    for p in poset.vertices():
        cell = cube_of(g, p)
        alpha[p] = z.imaginary_on_cube(cell)
        beta[p] = beta_integral(z.beta, cell)
    if check:
        need = required_coordinates(z, g)
        missing = [[c for c in need_i if c not in set(axis)] for need_i, axis in zip(need, g.axes)]
        unbounded_mass = any(alpha[p] != 0 for p in poset.vertices()
                             if any(k == m - 1 for k, m in zip(p, poset.sizes)))
        if unbounded_mass:
            base = z.base_grid
            for i, axis in enumerate(g.axes):
                missing[i].extend(c for c in base.axes[i] if c > axis[-1])
        if any(missing):
            raise RefinementNeeded(missing)
    logger.debug(f"Pulled back stability condition to grid {poset.sizes}")
    return DiscreteStability(poset, alpha, beta)


def shift_Z(z: StabilityCondition, x: Sequence) -> StabilityCondition:
    """All carriers, the window and its grid moved by -x"""
    x = to_point(x)
    return StabilityCondition(z.n, z.mode, tuple(t.translate(x) for t in z.alpha), z.beta.translate(x), z.signed)


def default_beta(points: Iterable[Sequence], n: int, padding: int = DEFAULT_WINDOW_PADDING,
                 ratio: Fraction = DEFAULT_TAIL_RATIO) -> BetaSpec:
    """Constant 1 on the bounding box of the points padded on every side, geometric tails"""
    box = bounding_box(points)
    if box is None:
        lows, highs = (Fraction(0),) * n, (Fraction(0),) * n
    else:
        lows, highs = box
    lows = tuple(v - padding for v in lows)
    highs = tuple(v + padding for v in highs)
    window = Cube.half_open(lows, highs)
    grid = GridFunction(tuple((lo, hi) for lo, hi in zip(lows, highs)))
    factors = ((tuple((Fraction(1),) for _ in range(n))),)
    return BetaSpec(window, grid, factors, tuple((ratio, ratio) for _ in range(n)))


def constant_beta(window_lows: Sequence, window_highs: Sequence, value=1,
                  ratio: Fraction = DEFAULT_TAIL_RATIO) -> BetaSpec:
    n = len(window_lows)
    window = Cube.half_open(window_lows, window_highs)
    grid = GridFunction(tuple((Fraction(lo), Fraction(hi)) for lo, hi in zip(window_lows, window_highs)))
    factors = (tuple((Fraction(value) if i == 0 else Fraction(1),) for i in range(n)),)
    return BetaSpec(window, grid, factors, tuple((ratio, ratio) for _ in range(n)))


def skyscraper_condition(q: Sequence, beta: BetaSpec) -> StabilityCondition:
    q = to_point(q)
    return StabilityCondition(len(q), EVAL, (AlphaTerm(Cube.point(q), Fraction(1)),), beta)


def evaluation_condition(terms: Iterable[Tuple[Sequence, Fraction]], beta: BetaSpec) -> StabilityCondition:
    alpha = tuple(AlphaTerm(Cube.point(to_point(q)), Fraction(a)) for q, a in terms)
    return StabilityCondition(beta.n, EVAL, alpha, beta)


# Diagnostic names reported by validate
NEGATIVE_POINT_MASS = "negative-point-mass"
NEGATIVE_ALPHA_COEFFICIENT = "negative-alpha-coefficient"
UNBOUNDED_ALPHA_CARRIER = "unbounded-alpha-carrier"
NON_STEP_ALPHA_DENSITY = "non-step-alpha-density"
NONPOSITIVE_BETA = "nonpositive-beta-value"
TAIL_RATIO_RANGE = "beta-tail-ratio-out-of-range"
BETA_SHAPE = "beta-shape-mismatch"
EVAL_MODE_CARRIER = "eval-mode-non-point-carrier"
DIMENSION_MISMATCH = "dimension-mismatch"


def diagnose(z: StabilityCondition) -> List[str]:
    """Named diagnostics for every violated invariant; empty when z is well formed"""
    problems = []
    beta = z.beta
    if beta.n != z.n or beta.window.n != z.n:
        problems.append(f"{DIMENSION_MISMATCH}: beta lives in dimension {beta.n}, condition in {z.n}")
        return problems
    if not beta.window.is_bounded():
        problems.append(f"{BETA_SHAPE}: the beta window must be bounded")
    else:
        for i, axis in enumerate(beta.window_grid.axes):
            if axis[0] != beta.window.lows[i] or axis[-1] != beta.window.highs[i] or len(axis) < 2:
                problems.append(f"{BETA_SHAPE}: window grid axis {i} must run from the window's lower to upper bound")
    for t, term in enumerate(beta.factors):
        for i, values in enumerate(term):
            if i < beta.window_grid.n and len(values) != len(beta.window_grid.axes[i]) - 1:
                problems.append(f"{BETA_SHAPE}: term {t} axis {i} has {len(values)} values "
                                f"for {len(beta.window_grid.axes[i]) - 1} cells")
            if any(v <= 0 for v in values):
                problems.append(f"{NONPOSITIVE_BETA}: term {t} axis {i} has a value <= 0")
    if not beta.factors:
        problems.append(f"{NONPOSITIVE_BETA}: beta has no terms")
    for i, (left, right) in enumerate(beta.tails):
        if not (0 < left < 1 and 0 < right < 1):
            problems.append(f"{TAIL_RATIO_RANGE}: axis {i} tail ratios must lie in (0, 1)")
    for k, term in enumerate(z.alpha):
        c = term.carrier
        if c.n != z.n:
            problems.append(f"{DIMENSION_MISMATCH}: alpha term {k} lives in dimension {c.n}")
            continue
        if not c.is_bounded():
            problems.append(f"{UNBOUNDED_ALPHA_CARRIER}: alpha term {k} has carrier {c}")
            continue
        is_point = all(c.axis_is_point(i) for i in range(c.n))
        if z.mode == EVAL and not is_point:
            problems.append(f"{EVAL_MODE_CARRIER}: alpha term {k} is not a point evaluation")
        if term.coeff < 0:
            if is_point or z.mode == EVAL:
                problems.append(f"{NEGATIVE_POINT_MASS}: alpha term {k} has coefficient {term.coeff}")
            elif not z.signed:
                problems.append(f"{NEGATIVE_ALPHA_COEFFICIENT}: alpha term {k} has coefficient {term.coeff}")
    return problems


def diagnose_alpha_entry(entry: dict) -> List[str]:
    """Diagnostics for a raw alpha entry that no AlphaTerm can express"""
    if 'density' in entry:
        return [f"{NON_STEP_ALPHA_DENSITY}: alpha densities must be step functions on cubes, got {entry['density']!r}"]
    if 'limit' in entry:
        return [f"{UNBOUNDED_ALPHA_CARRIER}: limit functionals have no bounded carrier"]
    return []


def validate(z: StabilityCondition) -> StabilityCondition:
    """
    Raises:
        ValidationError: listing every named diagnostic
    """
    problems = diagnose(z)
    if problems:
        raise ValidationError(problems)
    return z
