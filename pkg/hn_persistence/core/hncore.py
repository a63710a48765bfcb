"""
Harder-Narasimhan filtrations of finite grid representations.

Engine strategy (alpha >= 0, beta > 0):
1. A submodule of maximal slope is generated by its components at the
   vertices where alpha is positive, so only subspace tuples at those
   vertices are enumerated, in topological order, each choice containing
   what earlier choices already push there.
2. Branch-and-bound: a partial tuple is dropped when the largest alpha mass
   it can still reach over the beta mass it already has is below the
   incumbent slope.
3. Ties are merged by summation, which yields the maximal maximizer.

The cost is exponential in the dimension carried by the positive-alpha
vertices; the brute-force oracle enumerates every submodule instead.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterator, List, Optional, Tuple

from ..config.settings import ENGINE_TUPLE_BUDGET, ORACLE_DIM_BUDGET
from .errors import BudgetExceeded, InvariantViolation, UsageError
from .exactfield import Subspace, push, subspace_sum, subspaces_containing
from .gridcomb import Vertex
from .persmod import (GridModule, ModuleMap, Submodule, apply_map_to_submodule, compose_maps,
                      full_submodule, identity_map, preimage_submodule, quotient_with_projection,
                      sub_generated, submodule_sum, zero_submodule)
from .stabcond import DiscreteStability, slope

logger = logging.getLogger(__name__)

DIRECT = "direct"
DINKELBACH = "dinkelbach"


@dataclass(frozen=True)
class HNType:
    """(slope, cumulative dimension vector) per filtration step"""
    entries: Tuple[Tuple[Fraction, Tuple[int, ...]], ...]
    sizes: Optional[Tuple[int, ...]] = None

    @property
    def slopes(self) -> Tuple[Fraction, ...]:
        return tuple(s for s, _ in self.entries)

    def __len__(self):
        return len(self.entries)


@dataclass
class HNFiltration:
    """0 = V^0 < V^1 < ... < V^l = V with strictly decreasing quotient slopes"""
    parent: GridModule
    steps: List[Submodule]
    slopes: List[Fraction]

    @property
    def length(self) -> int:
        return len(self.slopes)

    def step_for(self, theta) -> Submodule:
        """V^i with mu(V^i / V^(i-1)) >= theta > mu(V^(i+1) / V^i)"""
        i = sum(1 for mu in self.slopes if mu >= theta)
        return self.steps[i]

    def hn_type(self) -> HNType:
        return HNType(tuple((mu, self.steps[i + 1].dimension_vector()) for i, mu in enumerate(self.slopes)),
                      self.parent.poset.sizes)

    def key(self) -> tuple:
        return tuple(step.key() for step in self.steps), tuple(self.slopes)


def _destabilizer_slope(ds: DiscreteStability, dims: Dict[Vertex, int]) -> Fraction:
    """Score used by the engine to rank candidate submodules"""
    return slope(ds, dims)


def _check_engine_inputs(u: GridModule, ds: DiscreteStability):
    if not u.field.is_finite:
        raise UsageError(f"the HN engine enumerates subspaces and needs a finite field; "
                         f"reduce the module modulo a prime first (got {u.field})")
    if ds.grid != u.poset:
        raise UsageError(f"stability on grid {ds.grid.sizes} for a module on grid {u.poset.sizes}")
    if not ds.is_nonnegative():
        raise UsageError("the HN engine needs a nonnegative imaginary part; "
                         "signed conditions are handled by oracle_hn_filtration")


class _TupleSearch:
    """
    Enumeration of the nonzero submodules generated on the positive-alpha
    vertices, each visited exactly once.
    """

    def __init__(self, u: GridModule, ds: DiscreteStability, budget: int):
        self.u = u
        self.ds = ds
        self.budget = budget
        self.order = [p for p in u.poset.topological_order() if ds.alpha[p] > 0 and u.dims[p] > 0]
        # largest alpha mass the vertices order[k:] can still contribute
        self.reachable = [Fraction(0)] * (len(self.order) + 1)
        for k in range(len(self.order) - 1, -1, -1):
            p = self.order[k]
            self.reachable[k] = self.reachable[k + 1] + ds.alpha[p] * u.dims[p]
        self.visited = 0
        self.pruned = 0
        self.incumbent: Optional[Fraction] = None

    def _beta_mass(self, w: Submodule) -> Fraction:
        return sum((self.ds.beta[p] * s.dim for p, s in w.components.items() if s.dim), Fraction(0))

    def candidates(self, prune: bool = True) -> Iterator[Submodule]:
        yield from self._visit(0, zero_submodule(self.u), Fraction(0), prune)

    def _visit(self, k: int, closure: Submodule, alpha_mass: Fraction, prune: bool) -> Iterator[Submodule]:
        if k == len(self.order):
            if not closure.is_zero():
                yield closure
            return
        p = self.order[k]
        for s in subspaces_containing(closure[p]):
            self.visited += 1
            if self.visited > self.budget:
                raise BudgetExceeded(f"HN engine visited more than {self.budget} subspace tuples")
            if s == closure[p]:
                grown = closure
            else:
                grown = submodule_sum(closure, sub_generated(self.u, {p: s}))
            mass = alpha_mass + self.ds.alpha[p] * s.dim
            if prune and self.incumbent is not None:
                beta_mass = self._beta_mass(grown)
                if beta_mass > 0 and (mass + self.reachable[k + 1]) / beta_mass < self.incumbent:
                    self.pruned += 1
                    continue
            yield from self._visit(k + 1, grown, mass, prune)


def _direct_search(search: _TupleSearch) -> Tuple[Submodule, Fraction]:
    best, best_slope = None, None
    for w in search.candidates(prune=True):
        mu = _destabilizer_slope(search.ds, w.dims())
        if best_slope is None or mu > best_slope:
            best, best_slope = w, mu
            search.incumbent = mu
        elif mu == best_slope:
            best = submodule_sum(best, w)
    return best, best_slope


def _dinkelbach_search(search: _TupleSearch, u_slope: Fraction) -> Tuple[Submodule, Fraction]:
    """Iterate lam <- best slope while max(alpha - lam * beta) is positive"""
    ds = search.ds
    pool = [(w, ds.charge(w.dims())) for w in search.candidates(prune=False)]
    lam = u_slope
    while True:
        value, argmax = max(((im - lam * re, w) for w, (im, re) in pool), key=lambda t: t[0])
        if value <= 0:
            break
        improved = _destabilizer_slope(ds, argmax.dims())
        if improved <= lam:
            raise InvariantViolation("dinkelbach-increasing", f"slope {improved} after {lam}")
        lam = improved
    best = None
    for w, (im, re) in pool:
        if im == lam * re:
            best = w if best is None else submodule_sum(best, w)
    return best, lam


def max_slope_destabilizer(u: GridModule, ds: DiscreteStability, strategy: str = DIRECT,
                           budget: int = ENGINE_TUPLE_BUDGET) -> Tuple[Submodule, Fraction]:
    """
    The maximal submodule among those of maximal slope.

    Args:
        u: nonzero module over a finite field
        ds: discrete stability with alpha >= 0 on the module's grid
        strategy: DIRECT (branch-and-bound) or DINKELBACH
        budget: maximal number of subspace tuples to visit

    Returns:
        (submodule, its slope)
    """
    _check_engine_inputs(u, ds)
    if u.is_zero():
        raise UsageError("the zero module has no destabilizing submodule")
    u_slope = slope(ds, u.dims)
    search = _TupleSearch(u, ds, budget)
    if not search.order:
        return full_submodule(u), u_slope
    if strategy == DINKELBACH:
        best, best_slope = _dinkelbach_search(search, u_slope)
    elif strategy == DIRECT:
        best, best_slope = _direct_search(search)
    else:
        raise UsageError(f"unknown search strategy {strategy!r}")
    logger.debug(f"Destabilizer search: {search.visited} tuples visited, {search.pruned} pruned, "
                 f"slope {best_slope}")
    return best, best_slope


def is_semistable(u: GridModule, ds: DiscreteStability, strategy: str = DIRECT) -> bool:
    w, _ = max_slope_destabilizer(u, ds, strategy)
    return w.is_full()


def is_stable(u: GridModule, ds: DiscreteStability) -> bool:
    """Every proper nonzero submodule has strictly smaller slope"""
    _check_engine_inputs(u, ds)
    if u.is_zero():
        raise UsageError("stability of the zero module is undefined")
    if u.total_dim == 1:
        return True
    search = _TupleSearch(u, ds, ENGINE_TUPLE_BUDGET)
    if not search.order:
        return False
    u_slope = slope(ds, u.dims)
    for w in search.candidates(prune=False):
        if not w.is_full() and _destabilizer_slope(ds, w.dims()) >= u_slope:
            return False
    return True


def _check_filtration(filtration: HNFiltration):
    slopes = filtration.slopes
    for a, b in zip(slopes, slopes[1:]):
        if not a > b:
            raise InvariantViolation("hn-slopes-decreasing", f"slopes {a} then {b}")
    for lower, upper in zip(filtration.steps, filtration.steps[1:]):
        if not (lower <= upper) or lower.total_dim >= upper.total_dim:
            raise InvariantViolation("hn-steps-increasing", f"{lower} then {upper}")
    if filtration.steps and not filtration.steps[-1].is_full():
        raise InvariantViolation("hn-last-step-full", repr(filtration.steps[-1]))


def hn_filtration(u: GridModule, ds: DiscreteStability, strategy: str = DIRECT,
                  verify: bool = False) -> HNFiltration:
    """
    HN filtration by repeated peeling of the maximal destabilizer.

    Args:
        u: module over a finite field
        ds: discrete stability on the module's grid, alpha >= 0
        strategy: destabilizer search strategy
        verify: also check that every quotient is semistable

    Returns:
        The filtration; the zero module yields the chain (0) with no slopes
    """
    if u.is_zero():
        return HNFiltration(u, [zero_submodule(u)], [])
    steps, slopes = [zero_submodule(u)], []
    current, projection = u, identity_map(u)
    while True:
        w, mu = max_slope_destabilizer(current, ds, strategy)
        if verify and not is_semistable(w.as_module(), ds, strategy):
            raise InvariantViolation("hn-quotients-semistable", f"quotient {len(slopes) + 1} is not semistable")
        steps.append(preimage_submodule(projection, w))
        slopes.append(mu)
        if w.is_full():
            break
        current, step_projection = quotient_with_projection(current, w)
        projection = compose_maps(projection, step_projection)
    filtration = HNFiltration(u, steps, slopes)
    _check_filtration(filtration)
    return filtration


def hn_theta(u: GridModule, ds: DiscreteStability, theta, strategy: str = DIRECT) -> Submodule:
    return hn_filtration(u, ds, strategy).step_for(theta)


def hn_type(u: GridModule, ds: DiscreteStability, strategy: str = DIRECT) -> HNType:
    return hn_filtration(u, ds, strategy).hn_type()


def all_submodules(u: GridModule) -> List[Submodule]:
    """Every submodule exactly once (finite field)"""
    order = u.poset.topological_order()
    out = []

    def visit(k: int, comps: Dict[Vertex, Subspace]):
        if k == len(order):
            out.append(Submodule(u, dict(comps)))
            return
        q = order[k]
        base = Subspace.zero(u.dims[q], u.field)
        for axis in range(u.n):
            if q[axis] > 0:
                p = q[:axis] + (q[axis] - 1,) + q[axis + 1:]
                base = subspace_sum(base, push(u.edge(p, axis), comps[p]))
        for s in subspaces_containing(base):
            comps[q] = s
            visit(k + 1, comps)
        del comps[q]

    visit(0, {})
    return out


def oracle_hn_filtration(u: GridModule, ds: DiscreteStability,
                         budget: int = ORACLE_DIM_BUDGET) -> HNFiltration:
    """
    HN filtration from first principles: V^(j+1) is the sum of all W > V^j
    maximizing the slope of W / V^j, over the full submodule lattice.

    Signed alpha is allowed here.
    """
    if not u.field.is_finite:
        raise UsageError("the oracle enumerates subspaces and needs a finite field")
    if u.total_dim > budget:
        raise BudgetExceeded(f"oracle refuses a module of total dimension {u.total_dim} (budget {budget})")
    if u.is_zero():
        return HNFiltration(u, [zero_submodule(u)], [])
    lattice = all_submodules(u)
    logger.debug(f"Oracle enumerated {len(lattice)} submodules")
    current = zero_submodule(u)
    steps, slopes = [current], []
    while not current.is_full():
        base = current.dims()
        best, best_slope = None, None
        for w in lattice:
            if w.total_dim == current.total_dim or not current <= w:
                continue
            mu = slope(ds, {p: d - base[p] for p, d in w.dims().items()})
            if best_slope is None or mu > best_slope:
                best, best_slope = w, mu
            elif mu == best_slope:
                best = submodule_sum(best, w)
        current = best
        steps.append(current)
        slopes.append(best_slope)
    return HNFiltration(u, steps, slopes)


def same_filtration(a: HNFiltration, b: HNFiltration) -> bool:
    """Identical subspace chains and slopes"""
    return a.key() == b.key()


def check_functoriality(f: ModuleMap, ds: DiscreteStability, theta, strategy: str = DIRECT) -> bool:
    """f(HN^theta(source)) is contained in HN^theta(target)"""
    image = apply_map_to_submodule(f, hn_theta(f.source, ds, theta, strategy))
    return image <= hn_theta(f.target, ds, theta, strategy)


def skyscraper_stability(u: GridModule, p: Vertex, beta: Dict[Vertex, Fraction]) -> DiscreteStability:
    alpha = {q: Fraction(1) if q == p else Fraction(0) for q in u.poset.vertices()}
    return DiscreteStability(u.poset, alpha, dict(beta))


def finite_skyscraper_invariant(u: GridModule, beta: Dict[Vertex, Fraction]) -> Dict[Vertex, HNType]:
    """HN type along the skyscraper weight at every vertex"""
    return {p: hn_type(u, skyscraper_stability(u, p, beta)) for p in u.poset.vertices()}


def hn_theta_surjectivity(u: GridModule, ds: DiscreteStability, theta) -> bool:
    """
    Along a skyscraper weight and theta > 0, every edge map between nonzero
    spaces of HN^theta is onto.
    """
    if theta <= 0:
        raise UsageError("surjectivity holds for theta > 0 only")
    w = hn_theta(u, ds, theta)
    for p, axis, q in u.poset.covering_edges():
        if w[p].dim and w[q].dim and push(u.edge(p, axis), w[p]) != w[q]:
            return False
    return True
