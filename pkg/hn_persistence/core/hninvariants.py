"""
HN filtered rank invariants, theta profiles, theta_min, skyscraper
invariants and HN filtered landscapes.

s^theta(x, y) is the rank of HN^theta(T_x* V)_0 -> HN^theta(T_x* V)_(y-x)
when x <= y and +inf otherwise. Every evaluation discretises T_x* V on the
smallest grid adapted to both the module and the stability condition.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from ..config.settings import DEFAULT_TOLERANCE
from .errors import UsageError
from .exactfield import push
from .gridcomb import INF, NEG_INF, Cube, Point, floor, leq, to_point
from .hncore import DIRECT, HNFiltration, HNType, hn_filtration, hn_type
from .persmod import (GridModule, Submodule, full_submodule, restrict_to_grid, shift_module,
                      zero_submodule)
from .stabcond import (BetaSpec, DiscreteStability, StabilityCondition, adapted_grid, pullback_Z,
                       skyscraper_condition)

logger = logging.getLogger(__name__)


def discretise_at(module: GridModule, z: StabilityCondition, x: Sequence,
                  extra_points: Sequence[Sequence] = ()) -> Tuple[GridModule, DiscreteStability]:
    """
    T_x* V and Z pulled back to a common finite grid.

    Args:
        module: the module V
        z: stability condition
        x: shift
        extra_points: points whose coordinates are added to the grid (any
            such refinement must give the same invariants)

    Returns:
        (module on the adapted grid, pulled back discrete stability)
    """
    x = to_point(x)
    if len(x) != module.n or z.n != module.n:
        raise UsageError(f"shift of dimension {len(x)} for a module of dimension {module.n} "
                         f"and a condition of dimension {z.n}")
    shifted = shift_module(module, x)
    origin = (Fraction(0),) * module.n
    g = adapted_grid(z, shifted.grid, [origin] + [to_point(p) for p in extra_points])
    return restrict_to_grid(shifted, g), pullback_Z(z, g)


@dataclass(frozen=True)
class ThetaProfile:
    """HN slopes of the discretised T_x* V, strictly decreasing"""
    x: Point
    breakpoints: Tuple[Fraction, ...]


class FilteredRankInvariant:
    """
    s^theta of a module along a stability condition.

    Features:
    - Exact evaluation through adapted grids
    - Memo keyed by the discretised data, shared by every shift landing in the same chamber
    - Shortcut when Im Z vanishes on the shifted support
    """

    def __init__(self, module: GridModule, condition: StabilityCondition,
                 strategy: str = DIRECT, shortcut: bool = True):
        if module.n != condition.n:
            raise UsageError(f"module of dimension {module.n} with a condition of dimension {condition.n}")
        self.module = module
        self.condition = condition
        self.strategy = strategy
        self.shortcut = shortcut
        self.memo: Dict[tuple, HNFiltration] = {}
        self._points: Dict[tuple, Tuple[GridModule, DiscreteStability, HNFiltration]] = {}
        self.hits = 0
        self.misses = 0

    def _filtration(self, u: GridModule, ds: DiscreteStability) -> HNFiltration:
        if u.is_zero():
            return HNFiltration(u, [zero_submodule(u)], [])
        key = (ds.key(), u.signature()[1:])
        cached = self.memo.get(key)
        if cached is not None:
            self.hits += 1
            steps = [Submodule(u, dict(s.components)) for s in cached.steps]
            return HNFiltration(u, steps, list(cached.slopes))
        self.misses += 1
        if self.shortcut and all(ds.alpha[p] == 0 for p in u.support_vertices()):
            filtration = HNFiltration(u, [zero_submodule(u), full_submodule(u)], [Fraction(0)])
        else:
            filtration = hn_filtration(u, ds, self.strategy)
        self.memo[key] = filtration
        return filtration

    def discretised(self, x: Sequence, extra_points: Sequence[Sequence] = ()):
        """(module, stability, filtration) of T_x* V on its adapted grid"""
        x = to_point(x)
        extra = tuple(to_point(p) for p in extra_points)
        key = (x, extra)
        if key not in self._points:
            u, ds = discretise_at(self.module, self.condition, x, extra)
            self._points[key] = (u, ds, self._filtration(u, ds))
            logger.debug(f"Discretised shift {x} on grid {u.poset.sizes} "
                         f"(memo hits {self.hits}, misses {self.misses})")
        return self._points[key]

    def s_eval(self, theta, x: Sequence, y: Sequence, extra_points: Sequence[Sequence] = ()):
        """
        s^theta(x, y).

        Returns:
            A nonnegative integer, or INF when x is not below y
        """
        x, y = to_point(x), to_point(y)
        if not leq(x, y):
            return INF
        u, _, filtration = self.discretised(x, extra_points)
        if u.is_zero():
            return 0
        step = filtration.step_for(Fraction(theta))
        lo = floor(u.grid, (Fraction(0),) * len(x))
        hi = floor(u.grid, tuple(b - a for a, b in zip(x, y)))
        if lo is NEG_INF:
            return 0
        return push(u.map_between(lo, hi), step[lo]).dim

    def theta_profile(self, x: Sequence) -> ThetaProfile:
        _, _, filtration = self.discretised(x)
        return ThetaProfile(to_point(x), tuple(filtration.slopes))


def theta_min(z: StabilityCondition) -> Fraction:
    """
    min(0, min_c a_c) / min_c b_c over the bounded cubes of the base grid,
    a_c the density of alpha on c and b_c a lower bound of the beta density.

    For every theta at or below this value s^theta equals the rank invariant.
    """
    base = z.base_grid
    lowest_alpha = Fraction(0)
    lowest_beta = None
    for p in base.domain.vertices():
        if any(k + 1 >= m for k, m in zip(p, base.domain.sizes)):
            continue
        cell = Cube.half_open(base(p), tuple(base.axes[i][k + 1] for i, k in enumerate(p)))
        inside = cell.interior_point()
        density = Fraction(0)
        for term in z.alpha:
            c = term.carrier
            if not c.contains(inside):
                continue
            if c.span_axes() != list(range(c.n)):
                if term.coeff < 0:
                    raise UsageError(f"negative mass on the lower dimensional carrier {c} has no density bound")
                continue
            density += term.coeff / c.volume()
        lowest_alpha = min(lowest_alpha, density)
        b = z.beta.lower_bound_on(cell)
        lowest_beta = b if lowest_beta is None else min(lowest_beta, b)
    if lowest_alpha == 0 or lowest_beta is None:
        return Fraction(0)
    return lowest_alpha / lowest_beta


def skyscraper_invariant(v: GridModule, beta: BetaSpec, sample: Optional[Sequence[Sequence]] = None,
                         strategy: str = DIRECT) -> Dict[Point, HNType]:
    """
    HN type of v along the skyscraper condition at every sample point.

    Args:
        v: module over a finite field
        beta: real part shared by all skyscraper conditions
        sample: query points (default: the grid points of v)
    """
    points = [to_point(q) for q in sample] if sample is not None else [v.grid(p) for p in v.poset.vertices()]
    out = {}
    for q in points:
        z = skyscraper_condition(q, beta)
        g = adapted_grid(z, v.grid, [q])
        u = restrict_to_grid(v, g)
        out[q] = hn_type(u, pullback_Z(z, g), strategy) if not u.is_zero() else HNType((), g.domain.sizes)
    return out


def _landscape_scan(holds, candidates: List[Fraction]) -> Fraction:
    """sup of a downward closed set of epsilons, given every point where membership can change"""
    for a, b in zip(candidates, candidates[1:]):
        if not holds((a + b) / 2):
            return a
        if not holds(b):
            return b
    return candidates[-1]


def _exact_candidates_1d(inv: FilteredRankInvariant, x: Point, hi: Fraction) -> Optional[List[Fraction]]:
    """Every epsilon in [0, hi] where s(x - eps, x + eps) can change; None if one is irrational"""
    from .chambers import x_breakpoints_1d

    z = inv.condition
    t = x[0]
    found = {Fraction(0), hi}
    breakpoints = x_breakpoints_1d(inv.module, z, (t - hi, t), strategy=inv.strategy)
    for c in breakpoints.candidates:
        if not isinstance(c, Fraction):
            return None
        found.add(t - c)
    for c in inv.module.grid.axes[0]:
        found.add(c - t)
    for c in z.base_grid.axes[0]:
        found.add(c / 2)
    for c in z.beta.tail_breakpoints(0, Fraction(0), 2 * hi):
        found.add(c / 2)
    return sorted(e for e in found if 0 <= e <= hi)


def landscape_eval(inv: FilteredRankInvariant, k: int, x: Sequence, theta,
                   tol: Fraction = DEFAULT_TOLERANCE) -> Fraction:
    """
    sup{eps : s^theta(x - eps, x + eps) >= k}.

    Exact for one parameter, otherwise a bisection whose result lies within
    tol below the supremum.
    """
    if k < 1:
        raise UsageError(f"landscape index must be positive, got {k}")
    if tol <= 0:
        raise UsageError(f"tolerance must be positive, got {tol}")
    x = to_point(x)
    theta = Fraction(theta)

    def holds(eps: Fraction) -> bool:
        return inv.s_eval(theta, tuple(a - eps for a in x), tuple(a + eps for a in x)) >= k

    if inv.module.is_zero() or not holds(Fraction(0)):
        return Fraction(0)
    # below the grid on some axis the shifted module vanishes
    hi = min(a - lo for a, lo in zip(x, inv.module.grid.lower_corner())) + tol
    if inv.module.n == 1:
        candidates = _exact_candidates_1d(inv, x, hi)
        if candidates is not None:
            return _landscape_scan(holds, candidates)
    lo = Fraction(0)
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if holds(mid):
            lo = mid
        else:
            hi = mid
    return lo


def landscape_function(inv: FilteredRankInvariant, k: int, xs: Sequence[Sequence], theta,
                       tol: Fraction = DEFAULT_TOLERANCE) -> List[Fraction]:
    return [landscape_eval(inv, k, x, theta, tol) for x in xs]
