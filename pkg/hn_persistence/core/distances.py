"""
Erosion distances between sampled rank-type functors, the HN distance,
landscape distances and interleaving certificates.

Sampled erosion only sees constraints whose inflated pair stays inside the
sampling window and on the lattice, so it is a lower bound of the true
erosion distance that increases to it as the window grows and the
resolution shrinks.
"""

import itertools
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from .errors import UsageError
from .exactfield import Field
from .gridcomb import (INF, GridFunction, Point, Vertex, common_refinement, from_coordinates, lattice, shift_grid,
                       to_point)
from .hninvariants import FilteredRankInvariant, landscape_eval, theta_min
from .persmod import (GridModule, ModuleMap, Presentation, compose_maps, from_presentation, presentation_map,
                      rank_invariant, refine_map, restrict_to_grid, shift_map, shift_module_map)
from .stabcond import StabilityCondition

logger = logging.getLogger(__name__)

Pair = Tuple[Vertex, Vertex]


@dataclass
class SampledFunctor:
    """
    Values of a functor on the pairs x <= y of a lattice in a box.

    values[(i, j)] is the value at (lows + i h, lows + j h).
    """
    lows: Point
    highs: Point
    resolution: Fraction
    values: Dict[Pair, object]

    @property
    def shape(self) -> Tuple[int, ...]:
        return tuple(int((hi - lo) // self.resolution) + 1 for lo, hi in zip(self.lows, self.highs))

    def point(self, index: Vertex) -> Point:
        return tuple(lo + k * self.resolution for lo, k in zip(self.lows, index))

    def same_lattice(self, other: "SampledFunctor") -> bool:
        return (self.lows, self.highs, self.resolution) == (other.lows, other.highs, other.resolution)

    def rows(self, theta=None) -> List[list]:
        """CSV rows: x..., y..., theta, value"""
        out = []
        for (i, j), value in sorted(self.values.items()):
            out.append([str(c) for c in self.point(i)] + [str(c) for c in self.point(j)]
                       + ["" if theta is None else str(theta), str(value)])
        return out


def sample_functor(fn: Callable, lows: Sequence, highs: Sequence, resolution: Fraction,
                   progress: bool = False, desc: str = "Sampling") -> SampledFunctor:
    lows, highs = to_point(lows), to_point(highs)
    resolution = Fraction(resolution)
    if resolution <= 0:
        raise UsageError(f"resolution must be positive, got {resolution}")
    shape = tuple(int((hi - lo) // resolution) + 1 for lo, hi in zip(lows, highs))
    indices = list(itertools.product(*(range(m) for m in shape)))
    values = {}
    for i in tqdm(indices, desc=desc, disable=not progress):
        x = tuple(lo + k * resolution for lo, k in zip(lows, i))
        for j in itertools.product(*(range(a, m) for a, m in zip(i, shape))):
            y = tuple(lo + k * resolution for lo, k in zip(lows, j))
            values[(i, j)] = fn(x, y)
    return SampledFunctor(lows, highs, resolution, values)


def sample_s(inv: FilteredRankInvariant, theta, lows: Sequence, highs: Sequence, resolution: Fraction,
             progress: bool = False) -> SampledFunctor:
    theta = Fraction(theta)
    return sample_functor(lambda x, y: inv.s_eval(theta, x, y), lows, highs, resolution, progress,
                          desc=f"Sampling s at theta={theta}")


def sample_rho(v: GridModule, lows: Sequence, highs: Sequence, resolution: Fraction,
               progress: bool = False) -> SampledFunctor:
    return sample_functor(lambda x, y: rank_invariant(v, x, y), lows, highs, resolution, progress,
                          desc="Sampling rank invariant")


def _dominated(a: SampledFunctor, b: SampledFunctor, k: int) -> bool:
    """a(x - k h, y + k h) <= b(x, y) wherever the inflated pair is sampled"""
    for (i, j), value in b.values.items():
        inflated = (tuple(c - k for c in i), tuple(c + k for c in j))
        other = a.values.get(inflated)
        if other is None:
            continue
        if other is INF:
            if value is not INF:
                return False
        elif value is not INF and other > value:
            return False
    return True


def erosion_distance(a: SampledFunctor, b: SampledFunctor) -> Fraction:
    """
    Least lattice multiple eps with both erosion inequalities on the samples.

    Raises:
        UsageError: for functors sampled on different lattices
    """
    if not a.same_lattice(b):
        raise UsageError("erosion distance between functors sampled on different lattices")
    # from min(shape) steps on, every inflated pair leaves the lattice
    steps = min(a.shape)
    for k in range(steps):
        if _dominated(a, b, k) and _dominated(b, a, k):
            return k * a.resolution
    logger.debug(f"Erosion search saturated the sampling window: no shift below {steps} steps satisfies both "
                 f"inequalities, reporting {steps * a.resolution}")
    return steps * a.resolution


def theta_candidates(invs: Sequence[FilteredRankInvariant], lows: Point, highs: Point,
                      resolution: Fraction) -> List[Fraction]:
    slopes = set()
    for inv in invs:
        for x in lattice(lows, highs, resolution):
            slopes.update(inv.theta_profile(x).breakpoints)
    ordered = sorted(slopes)
    thetas = set(ordered)
    thetas.update((a + b) / 2 for a, b in zip(ordered, ordered[1:]))
    thetas.add(theta_min(invs[0].condition) - 1)
    return sorted(thetas)


def hn_distance_report(v: GridModule, w: GridModule, z: StabilityCondition, lows: Sequence,
                       highs: Sequence, resolution: Fraction, thetas="auto",
                       progress: bool = False) -> Dict[Fraction, Fraction]:
    """Sampled erosion of s^theta for every theta in the candidate set"""
    lows, highs = to_point(lows), to_point(highs)
    inv_v, inv_w = FilteredRankInvariant(v, z), FilteredRankInvariant(w, z)
    if thetas == "auto":
        thetas = theta_candidates([inv_v, inv_w], lows, highs, Fraction(resolution))
    report = {}
    for theta in thetas:
        theta = Fraction(theta)
        a = sample_s(inv_v, theta, lows, highs, resolution, progress)
        b = sample_s(inv_w, theta, lows, highs, resolution, progress)
        report[theta] = erosion_distance(a, b)
        logger.debug(f"theta={theta}: sampled erosion {report[theta]}")
    return report


def hn_distance(v: GridModule, w: GridModule, z: StabilityCondition, lows: Sequence, highs: Sequence,
                resolution: Fraction, thetas="auto", progress: bool = False) -> Fraction:
    report = hn_distance_report(v, w, z, lows, highs, resolution, thetas, progress)
    return max(report.values(), default=Fraction(0))


@dataclass
class InterleavingCertificate:
    """f: V -> T_eps* W and g: W -> T_eps* V, each on a grid refining its source"""
    eps: Fraction
    f: ModuleMap
    g: ModuleMap


def _composite_is_shift(first: ModuleMap, second: ModuleMap, eps: Fraction, source: GridModule) -> bool:
    """(T_eps* second) o first equals the 2 eps shift map of source"""
    moved = shift_module_map(second, (eps,) * source.n)
    grid, _, _ = common_refinement(first.source.grid, moved.source.grid)
    composite = compose_maps(refine_map(first, grid), refine_map(moved, grid))
    expected = shift_map(source, (2 * eps,) * source.n, grid)
    for c in grid.domain.vertices():
        if composite.components[c].entries != expected.components[c].entries:
            logger.debug(f"Composite differs from the shift map at {grid(c)}")
            return False
    return True


def verify_interleaving(cert: InterleavingCertificate, v: GridModule, w: GridModule) -> bool:
    """Both maps natural and both composites equal to the 2 eps shift maps"""
    eps = Fraction(cert.eps)
    if eps < 0:
        return False
    if not (cert.f.is_natural() and cert.g.is_natural()):
        return False
    if not cert.f.source.same_as(restrict_to_grid(v, cert.f.source.grid)):
        return False
    if not cert.g.source.same_as(restrict_to_grid(w, cert.g.source.grid)):
        return False
    return _composite_is_shift(cert.f, cert.g, eps, v) and _composite_is_shift(cert.g, cert.f, eps, w)


def _raise_to_generators(point: Point, coeffs: Sequence[Fraction], generators: Sequence[Point]) -> Point:
    """Smallest point above point and every generator the relation involves"""
    out = list(point)
    for c, g in zip(coeffs, generators):
        if c != 0:
            out = [max(a, b) for a, b in zip(out, g)]
    return tuple(out)


def certificate_grid(v: GridModule, w: GridModule, eps: Fraction) -> GridFunction:
    """Grid carrying both modules and both of them moved by -eps"""
    shift = (eps,) * v.n
    coords = [list(a) + list(b) + list(c) + list(d) for a, b, c, d in
              zip(v.grid.axes, w.grid.axes, shift_grid(v.grid, shift).axes, shift_grid(w.grid, shift).axes)]
    return from_coordinates(coords)


def perturb_presentation(p: Presentation, eps: Fraction, seed: int,
                         field: Optional[Field] = None) -> Tuple[Presentation, InterleavingCertificate]:
    """
    Every generator and relation moved by at most eps in sup norm.

    Moves are eps * k / 4 for integers k in [-4, 4]; a relation that ends up
    below one of its generators is raised to their join. The certificate maps
    every generator to the generator of the same index.
    """
    eps = Fraction(eps)
    if eps < 0:
        raise UsageError(f"perturbation size must be nonnegative, got {eps}")
    rng = np.random.default_rng(seed)
    field = field or Field(p.characteristic)

    def move(point: Point) -> Point:
        return tuple(c + eps * Fraction(int(k), 4) for c, k in zip(point, rng.integers(-4, 5, size=p.n)))

    generators = tuple(move(g) for g in p.generators)
    relations = tuple((_raise_to_generators(move(point), coeffs, generators), coeffs)
                      for point, coeffs in p.relations)
    moved = Presentation(p.n, generators, relations, p.characteristic).validate()
    v, w = from_presentation(p, field), from_presentation(moved, field)
    shift = (eps,) * p.n
    grid = certificate_grid(v, w, eps)
    f = presentation_map(p, moved, shift, grid, field)
    g = presentation_map(moved, p, shift, grid, field)
    return moved, InterleavingCertificate(eps, f, g)


def landscape_distance(inv_v: FilteredRankInvariant, inv_w: FilteredRankInvariant, theta, ks: Sequence[int],
                       lows: Sequence, highs: Sequence, resolution: Fraction, tol: Fraction,
                       progress: bool = False) -> Fraction:
    """max over k and lattice points x of |lambda_v(k, x) - lambda_w(k, x)|"""
    best = Fraction(0)
    points = lattice(lows, highs, Fraction(resolution))
    for k in ks:
        for x in tqdm(points, desc=f"Landscape k={k}", disable=not progress):
            gap = abs(landscape_eval(inv_v, k, x, theta, tol) - landscape_eval(inv_w, k, x, theta, tol))
            best = max(best, gap)
    return best
