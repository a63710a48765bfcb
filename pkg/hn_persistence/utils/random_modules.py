"""
Seeded random instances for the acceptance harness and the tests.

Every generator takes a numpy Generator so that a whole suite is
reproducible from one seed.
"""

import logging
from fractions import Fraction
from typing import List, Optional, Sequence

import numpy as np

from ..config.settings import ORACLE_DIM_BUDGET
from ..core.exactfield import Field, Subspace, prime_field
from ..core.gridcomb import Cube, GridFunction, GridPoset, Point, from_coordinates
from ..core.persmod import (GridModule, ModuleMap, Presentation, Submodule, from_presentation, hom_basis,
                            interval_module, linear_combination, sub_generated)
from ..core.stabcond import (EVAL, STEP, AlphaTerm, DiscreteStability, StabilityCondition, default_beta,
                             validate)

logger = logging.getLogger(__name__)

F2 = prime_field(2)


def random_fraction(rng: np.random.Generator, lo, hi, denominator: int = 2) -> Fraction:
    """Uniform among the multiples of 1/denominator in [lo, hi]"""
    a, b = int(Fraction(lo) * denominator), int(Fraction(hi) * denominator)
    return Fraction(int(rng.integers(a, b + 1)), denominator)


def random_point(rng: np.random.Generator, n: int, lo, hi, denominator: int = 2) -> Point:
    return tuple(random_fraction(rng, lo, hi, denominator) for _ in range(n))


def random_presentation(rng: np.random.Generator, n: int, coords: Sequence = (0, 1, 2),
                        max_generators: int = 3, max_relations: int = 3,
                        characteristic: int = 2) -> Presentation:
    """
    Generators at random points of coords^n and relations at random points
    above some of them, with random coefficients on the generators below.
    """
    coords = [Fraction(c) for c in coords]
    p = characteristic if characteristic else 5

    def point():
        return tuple(coords[int(k)] for k in rng.integers(0, len(coords), size=n))

    generators = [point() for _ in range(int(rng.integers(1, max_generators + 1)))]
    relations = []
    for _ in range(int(rng.integers(0, max_relations + 1))):
        where = point()
        below = [j for j, g in enumerate(generators) if all(a <= b for a, b in zip(g, where))]
        if not below:
            continue
        coeffs = [Fraction(0)] * len(generators)
        for j in below:
            coeffs[j] = Fraction(int(rng.integers(0, p)))
        if any(coeffs):
            relations.append((where, tuple(coeffs)))
    return Presentation(n, tuple(generators), tuple(relations), characteristic).validate()


def random_grid_module(rng: np.random.Generator, field: Field = F2, n: Optional[int] = None,
                       max_side: int = 3, max_total_dim: int = ORACLE_DIM_BUDGET,
                       attempts: int = 50) -> GridModule:
    """
    A nonzero module on a grid of at most max_side vertices per axis.

    Presentations are drawn until one fits the dimension bound; a thin
    interval module is the fallback.
    """
    n = n or int(rng.integers(1, 3))
    for _ in range(attempts):
        pres = random_presentation(rng, n, coords=range(max_side), characteristic=field.characteristic)
        u = from_presentation(pres, field)
        if 0 < u.total_dim <= max_total_dim:
            return u
    logger.debug(f"No presentation within dimension {max_total_dim} after {attempts} attempts")
    return interval_module((0,) * n, (1,) * n, field)


def random_discrete_stability(rng: np.random.Generator, poset: GridPoset, alpha_max: int = 3,
                              beta_max: int = 3, zero_alpha: float = 0.5) -> DiscreteStability:
    """alpha_p in {0..alpha_max} (zero with probability zero_alpha), beta_p in {1..beta_max}"""
    alpha, beta = {}, {}
    for p in poset.vertices():
        alpha[p] = Fraction(0) if rng.random() < zero_alpha else Fraction(int(rng.integers(1, alpha_max + 1)))
        beta[p] = Fraction(int(rng.integers(1, beta_max + 1)))
    return DiscreteStability(poset, alpha, beta)


def random_module_map(rng: np.random.Generator, v: GridModule, w: GridModule) -> ModuleMap:
    """A random linear combination of a basis of Hom(v, w)"""
    basis = hom_basis(v, w)
    if v.field.is_finite:
        coeffs = [int(c) for c in rng.integers(0, v.field.characteristic, size=len(basis))]
    else:
        coeffs = [int(c) for c in rng.integers(-2, 3, size=len(basis))]
    return linear_combination(basis, coeffs, v, w)


def random_submodule(rng: np.random.Generator, u: GridModule) -> Submodule:
    """Submodule generated by one random vector at a random supported vertex"""
    support = u.support_vertices()
    if not support:
        return sub_generated(u, {})
    p = support[int(rng.integers(0, len(support)))]
    f = u.field
    if f.is_finite:
        vector = [int(c) for c in rng.integers(0, f.characteristic, size=u.dims[p])]
    else:
        vector = [Fraction(int(c)) for c in rng.integers(-2, 3, size=u.dims[p])]
    return sub_generated(u, {p: Subspace.span([vector], u.dims[p], f)})


def random_condition(rng: np.random.Generator, n: int, points: Sequence[Sequence],
                     max_terms: int = 2, cube_terms: bool = True) -> StabilityCondition:
    """
    A nonnegative condition: point masses near the data and at most one
    small cube carrier, with the default beta around the data.
    """
    points = [tuple(Fraction(c) for c in q) for q in points] or [(Fraction(0),) * n]
    lows = [min(q[i] for q in points) for i in range(n)]
    highs = [max(q[i] for q in points) for i in range(n)]
    terms = []
    for _ in range(int(rng.integers(1, max_terms + 1))):
        q = tuple(random_fraction(rng, lo - Fraction(1, 2), hi, 2) for lo, hi in zip(lows, highs))
        terms.append(AlphaTerm(Cube.point(q), Fraction(int(rng.integers(1, 4)))))
    mode = EVAL
    if cube_terms and rng.random() < 0.5:
        corner = tuple(random_fraction(rng, lo, hi, 2) for lo, hi in zip(lows, highs))
        carrier = Cube.half_open(corner, tuple(c + Fraction(1, 2) for c in corner))
        terms.append(AlphaTerm(carrier, Fraction(int(rng.integers(1, 3)))))
        mode = STEP
    carriers = [t.carrier.lows for t in terms] + [t.carrier.highs for t in terms]
    beta = default_beta(list(points) + carriers, n)
    return validate(StabilityCondition(n, mode, tuple(terms), beta))


def random_refinement(rng: np.random.Generator, grid: GridFunction, count: int = 1) -> GridFunction:
    """The grid with count new coordinates strictly between existing ones"""
    coords = [list(axis) for axis in grid.axes]
    for _ in range(count):
        candidates = [i for i, axis in enumerate(coords) if len(axis) > 1]
        if not candidates:
            break
        i = candidates[int(rng.integers(0, len(candidates)))]
        axis = sorted(coords[i])
        k = int(rng.integers(0, len(axis) - 1))
        a, b = axis[k], axis[k + 1]
        coords[i].append(a + (b - a) * Fraction(int(rng.integers(1, 4)), 4))
    return from_coordinates(coords)


def presentation_points(pres: Presentation) -> List[Point]:
    return pres.points or [(Fraction(0),) * pres.n]
