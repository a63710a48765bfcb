"""
Acceptance suites: seeded property checks of the HN machinery.

Each suite draws random instances from its own generator (derived from the
run seed and the suite's position), checks one or more named invariants on
every instance and records failures by name. Instances that would exceed an
enumeration budget are skipped and counted.
"""

import logging
import time
import unittest.mock
from contextlib import nullcontext
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from ..config.settings import (DEFAULT_SEED, DEFAULT_TOLERANCE, DENSE_SAMPLING_STEP, HARNESS_SIZES,
                               ORACLE_DIM_BUDGET)
from ..utils.random_modules import (F2, random_condition, random_discrete_stability, random_fraction,
                                    random_grid_module, random_module_map, random_point, random_presentation,
                                    random_refinement, random_submodule)
from . import hncore
from .chambers import rational_between, type_at, x_breakpoints_1d
from .distances import (erosion_distance, hn_distance, landscape_distance, perturb_presentation, sample_rho,
                        sample_s, verify_interleaving)
from .errors import BudgetExceeded, InvariantViolation, ValidationError
from .gridcomb import INF, Cube, GridFunction, embedding, floor, lattice, leq
from .hncore import (DINKELBACH, check_functoriality, hn_filtration, max_slope_destabilizer, oracle_hn_filtration,
                     same_filtration)
from .hninvariants import FilteredRankInvariant, theta_min
from .persmod import (GridModule, Submodule, from_presentation, interval_module, pullback, pushforward, quotient,
                      rank_invariant, restrict_to_grid, sub_generated)
from .stabcond import (EVAL, NEGATIVE_POINT_MASS, NON_STEP_ALPHA_DENSITY, STEP, UNBOUNDED_ALPHA_CARRIER,
                       AlphaTerm, StabilityCondition, adapted_grid, constant_beta, default_beta,
                       diagnose_alpha_entry, pullback_Z, skyscraper_condition, slope, validate)

logger = logging.getLogger(__name__)

SLOPE_SIGN_FLIP = "slope-sign-flip"
MUTATIONS = (SLOPE_SIGN_FLIP,)
EPSILONS = (Fraction(1, 4), Fraction(1, 2), Fraction(1))
HALF_INTEGERS = (0, Fraction(1, 2), 1, Fraction(3, 2))
# Draws per requested instance in suites that only count qualifying instances
DRAWS_PER_INSTANCE = 20


@dataclass
class SuiteResult:
    """Outcome of one suite"""
    name: str
    checked: int = 0
    passed: int = 0
    skipped: int = 0
    failures: List[str] = field(default_factory=list)
    notes: Dict[str, int] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures

    def note(self, key: str):
        self.notes[key] = self.notes.get(key, 0) + 1


@dataclass
class HarnessReport:
    seed: int
    quick: bool
    mutation: Optional[str]
    suites: List[SuiteResult] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return all(s.ok for s in self.suites)

    def failed_invariants(self) -> List[str]:
        return sorted({f.split(':')[0] for s in self.suites for f in s.failures})

    def to_dict(self) -> dict:
        out = asdict(self)
        out['ok'] = self.ok
        out['failed_invariants'] = self.failed_invariants()
        return out


def _refined_step(step: Submodule, fine: GridModule, coarse: GridFunction) -> Submodule:
    """A submodule read on a refinement of its grid"""
    return Submodule(fine, {c: step[floor(coarse, fine.grid(c))] for c in fine.poset.vertices()})


class InstanceSkipped(Exception):
    """An instance that does not qualify for the suite's invariant; counted as a skip"""


def _is_semistable_by_oracle(u: GridModule, ds, budget: int) -> bool:
    return len(oracle_hn_filtration(u, ds, budget).slopes) == 1


def _window(modules: Sequence[GridModule], side: Fraction) -> Tuple[tuple, tuple]:
    n = modules[0].n
    lows = tuple(min(m.grid.axes[i][0] for m in modules) for i in range(n))
    return lows, tuple(lo + side for lo in lows)


class AcceptanceHarness:
    """
    Runs the property suites with fixed seeds and collects a report.

    Features:
    - One numpy Generator per suite, derived from the run seed
    - Quick mode with reduced instance counts and resolutions
    - Named invariants on every failure
    - Optional mutation of the engine's slope scoring, which must make the run fail
    """

    SUITES = tuple(HARNESS_SIZES)

    def __init__(self, seed: int = DEFAULT_SEED, quick: bool = False, progress: bool = True,
                 mutation: Optional[str] = None, suites: Optional[Sequence[str]] = None,
                 oracle_budget: int = ORACLE_DIM_BUDGET, tolerance: Fraction = DEFAULT_TOLERANCE):
        if mutation is not None and mutation not in MUTATIONS:
            raise ValueError(f"unknown mutation {mutation!r}; choose from {MUTATIONS}")
        unknown = [s for s in (suites or ()) if s not in self.SUITES]
        if unknown:
            raise ValueError(f"unknown suites {unknown}; choose from {self.SUITES}")
        self.seed = seed
        self.quick = quick
        self.progress = progress
        self.mutation = mutation
        self.suites = list(suites or self.SUITES)
        self.oracle_budget = oracle_budget
        self.tolerance = tolerance
        self.resolutions = (Fraction(1, 8),) if quick else (Fraction(1, 8), Fraction(1, 16))

    def _mutated(self):
        if self.mutation == SLOPE_SIGN_FLIP:
            return unittest.mock.patch.object(hncore, "_destabilizer_slope",
                                              lambda ds, dims: -slope(ds, dims))
        return nullcontext()

    def run(self) -> HarnessReport:
        report = HarnessReport(self.seed, self.quick, self.mutation)
        with self._mutated():
            for index, name in enumerate(self.SUITES):
                if name not in self.suites:
                    continue
                full, quick = HARNESS_SIZES[name]
                count = quick if self.quick else full
                rng = np.random.default_rng([self.seed, index])
                result = SuiteResult(name)
                logger.info(f"Suite {name}: {count} instances")
                start = time.time()
                getattr(self, f"_suite_{name}")(rng, count, result)
                result.seconds = round(time.time() - start, 2)
                logger.info(f"Suite {name}: {result.passed}/{result.checked} passed, {result.skipped} skipped "
                            f"in {result.seconds}s")
                report.suites.append(result)
        return report

    def _instances(self, count: int, name: str):
        return tqdm(range(count), desc=name, disable=not self.progress)

    def _check(self, result: SuiteResult, invariant: str, k: int, check: Callable[[], Optional[str]]) -> bool:
        """
        Run one instance; check returns None on success or a failure detail.

        Returns whether the instance was checked (as opposed to skipped).
        """
        try:
            detail = check()
        except BudgetExceeded as e:
            result.skipped += 1
            logger.debug(f"{result.name} instance {k} skipped: {e}")
            return False
        except InstanceSkipped as e:
            result.skipped += 1
            result.note(str(e))
            return False
        except InvariantViolation as e:
            result.checked += 1
            result.failures.append(f"{e.invariant}: instance {k}: {e}")
            return True
        result.checked += 1
        if detail is None:
            result.passed += 1
        else:
            result.failures.append(f"{invariant}: instance {k}: {detail}")
            logger.warning(f"{result.name} instance {k} failed {invariant}: {detail}")
        return True

    def _until_checked(self, result: SuiteResult, invariant: str, count: int, check: Callable[[], Optional[str]]):
        """Draw instances until count of them are checked, within DRAWS_PER_INSTANCE * count draws"""
        draws = 0
        with tqdm(total=count, desc=result.name, disable=not self.progress) as bar:
            while result.checked < count and draws < DRAWS_PER_INSTANCE * count:
                if self._check(result, invariant, draws, check):
                    bar.update(1)
                draws += 1
        if result.checked < count:
            result.note("draws-exhausted")
            logger.warning(f"{result.name}: only {result.checked} of {count} instances qualified in {draws} draws")

    # Suites

    def _suite_oracle_equivalence(self, rng: np.random.Generator, count: int, result: SuiteResult):
        budget = self.oracle_budget

        def check():
            u = random_grid_module(rng, max_total_dim=budget)
            ds = random_discrete_stability(rng, u.poset)
            oracle = oracle_hn_filtration(u, ds, budget)
            engine = hn_filtration(u, ds)
            if not same_filtration(engine, oracle):
                return f"engine slopes {engine.slopes} against oracle slopes {oracle.slopes}"
            if not same_filtration(hn_filtration(u, ds, DINKELBACH), oracle):
                return "dinkelbach-agreement: Dinkelbach search differs from the oracle"
            if any(ds.alpha[p] > 0 for p in u.support_vertices()):
                w, _ = max_slope_destabilizer(u, ds)
                seeds = {p: w[p] for p in u.poset.vertices() if ds.alpha[p] > 0}
                if sub_generated(u, seeds) != w:
                    return "destabilizer-generated-on-alpha-support: regenerated submodule differs"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "hn-oracle-equivalence", k, check)

    def _suite_commuting_diagram(self, rng: np.random.Generator, count: int, result: SuiteResult):
        def check():
            n = int(rng.integers(1, 3))
            pres = random_presentation(rng, n, coords=HALF_INTEGERS, max_generators=2, max_relations=2)
            v = from_presentation(pres, F2)
            z = random_condition(rng, n, pres.points)
            inv = FilteredRankInvariant(v, z)
            x = random_point(rng, n, -Fraction(1, 2), Fraction(3, 2), 4)
            y = tuple(a + random_fraction(rng, 0, 1, 4) for a in x)
            theta = random_fraction(rng, 0, 2, 4)
            extra = [random_point(rng, n, -1, 2, 8)]
            direct = inv.s_eval(theta, x, y)
            refined = inv.s_eval(theta, x, y, extra)
            if direct != refined:
                return f"s at {x}, {y}: {direct} on the adapted grid, {refined} on a finer one"
            plain = FilteredRankInvariant(v, z, shortcut=False).s_eval(theta, x, y)
            if plain != direct:
                return f"disjoint-support-shortcut: {direct} with the shortcut, {plain} without"
            u, _, filtration = inv.discretised(x)
            if u.is_zero():
                return None
            h = random_refinement(rng, u.grid, 2)
            fine = pushforward(embedding(u.grid, h), u, h)
            fine_filtration = hn_filtration(fine, pullback_Z(z, h))
            expected = [_refined_step(step, fine, u.grid) for step in filtration.steps]
            if [s.key() for s in fine_filtration.steps] != [s.key() for s in expected] \
                    or fine_filtration.slopes != filtration.slopes:
                return f"hn-commutes-with-refinement: slopes {filtration.slopes} then {fine_filtration.slopes}"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "discretisation-invariance", k, check)

    def _suite_semistability_transfer(self, rng: np.random.Generator, count: int, result: SuiteResult):
        budget = 2 * self.oracle_budget

        def check():
            n = int(rng.integers(1, 3))
            pres = random_presentation(rng, n, coords=(0, Fraction(1, 2), 1), max_generators=2, max_relations=3)
            v = from_presentation(pres, F2)
            z = random_condition(rng, n, pres.points, max_terms=1)
            g = adapted_grid(z, v.grid)
            u = restrict_to_grid(v, g)
            if u.is_zero():
                raise InstanceSkipped("zero")
            ds = pullback_Z(z, g)
            h = random_refinement(rng, g, 1)
            t = embedding(g, h)
            fine = pushforward(t, u, h)
            if not pullback(t, fine, g).same_as(u):
                return "pullback of the pushforward differs from the module"
            coarse_ss = _is_semistable_by_oracle(u, ds, budget)
            fine_ss = _is_semistable_by_oracle(fine, pullback_Z(z, h), budget)
            if not (coarse_ss or fine_ss):
                raise InstanceSkipped("unstable")
            if coarse_ss and not fine_ss:
                return "pushforward-preserves-semistability: refined module is not semistable"
            if fine_ss and not coarse_ss:
                return "pullback-reflects-semistability: coarse module is not semistable"
            return None

        self._until_checked(result, "semistability-transfer", count, check)

    def _suite_example_a(self, rng: np.random.Generator, count: int, result: SuiteResult):
        origin = (Fraction(0), Fraction(0))
        v = interval_module(origin, (1, 1), F2)
        z = StabilityCondition(2, EVAL, (AlphaTerm(Cube.point(origin), 1),), constant_beta(origin, (1, 1)))
        inv = FilteredRankInvariant(v, z)

        def check():
            theta = random_fraction(rng, Fraction(1, 4), 4, 8)
            x = random_point(rng, 2, -Fraction(1, 4), Fraction(5, 4), 8)
            y = tuple(a + random_fraction(rng, -Fraction(1, 8), 1, 8) for a in x)
            if not leq(x, y):
                expected = INF
            else:
                inside = all(a >= 0 for a in x) and all(b < 1 for b in y)
                volume = (1 - x[0]) * (1 - x[1])
                expected = 1 if inside and volume <= 1 / theta else 0
            got = inv.s_eval(theta, x, y)
            if got != expected:
                return f"theta {theta}, x {x}, y {y}: expected {expected}, got {got}"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "example-a-closed-form", k, check)

    def _suite_theta_min(self, rng: np.random.Generator, count: int, result: SuiteResult):
        def check():
            n = int(rng.integers(1, 3))
            pres = random_presentation(rng, n, coords=HALF_INTEGERS, max_generators=2, max_relations=2)
            v = from_presentation(pres, F2)
            z = random_condition(rng, n, pres.points)
            below = theta_min(z) - 1
            inv = FilteredRankInvariant(v, z)
            for _ in range(4):
                x = random_point(rng, n, -Fraction(1, 2), 2, 4)
                y = tuple(a + random_fraction(rng, 0, 1, 4) for a in x)
                s, rho = inv.s_eval(below, x, y), rank_invariant(v, x, y)
                if s != rho:
                    return f"at {x}, {y}: s = {s}, rank invariant = {rho}"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "theta-min-rank-invariant", k, check)

    def _perturbed_pair(self, rng: np.random.Generator, n: int):
        eps = EPSILONS[int(rng.integers(0, len(EPSILONS)))]
        pres = random_presentation(rng, n, coords=(0, Fraction(1, 2), 1), max_generators=2, max_relations=2)
        moved, cert = perturb_presentation(pres, eps, int(rng.integers(0, 2 ** 31)), F2)
        return pres, moved, from_presentation(pres, F2), from_presentation(moved, F2), cert

    def _suite_rank_stability(self, rng: np.random.Generator, count: int, result: SuiteResult):
        def check():
            n = int(rng.integers(1, 3))
            _, _, v, w, cert = self._perturbed_pair(rng, n)
            if not verify_interleaving(cert, v, w):
                return "interleaving-certificate: certificate rejected"
            lows, highs = _window([v, w], Fraction(2) if n == 1 else Fraction(1))
            for res in self.resolutions:
                d = erosion_distance(sample_rho(v, lows, highs, res), sample_rho(w, lows, highs, res))
                if d > cert.eps:
                    return f"erosion {d} exceeds {cert.eps} at resolution {res}"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "rank-invariant-stability", k, check)

    def _suite_hn_stability(self, rng: np.random.Generator, count: int, result: SuiteResult):
        def check():
            n = int(rng.integers(1, 3))
            pres, moved, v, w, cert = self._perturbed_pair(rng, n)
            z = random_condition(rng, n, pres.points + moved.points, max_terms=1, cube_terms=False)
            lows, highs = _window([v, w], Fraction(1) if n == 1 else Fraction(1, 2))
            for res in self.resolutions:
                d = hn_distance(v, w, z, lows, highs, res)
                if d > cert.eps:
                    return f"HN distance {d} exceeds {cert.eps} at resolution {res}"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "hn-distance-stability", k, check)

    def _suite_functoriality(self, rng: np.random.Generator, count: int, result: SuiteResult):
        def check():
            u = random_grid_module(rng)
            ds = random_discrete_stability(rng, u.poset)
            kind = int(rng.integers(0, 3))
            if kind == 0:
                target = u
            elif kind == 1:
                target = quotient(u, random_submodule(rng, u))
            else:
                target = restrict_to_grid(random_grid_module(rng, n=u.n), u.grid)
            f = random_module_map(rng, u, target)
            slopes = sorted(set(hn_filtration(u, ds).slopes) | set(hn_filtration(target, ds).slopes))
            thetas = set(slopes) | {(a + b) / 2 for a, b in zip(slopes, slopes[1:])}
            if slopes:
                thetas.update((slopes[0] - 1, slopes[-1] + 1))
            for theta in sorted(thetas):
                if not check_functoriality(f, ds, theta):
                    return f"image of the HN step at theta {theta} leaves the target's step"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "hn-functoriality", k, check)

    def _suite_landscape_chain(self, rng: np.random.Generator, count: int, result: SuiteResult):
        tol = self.tolerance

        def check():
            n = 1 if self.quick else int(rng.integers(1, 3))
            pres, moved, v, w, cert = self._perturbed_pair(rng, n)
            z = random_condition(rng, n, pres.points + moved.points, max_terms=1, cube_terms=False)
            theta = random_fraction(rng, 0, 1, 4)
            res = self.resolutions[0]
            lows, highs = _window([v, w], Fraction(1) if n == 1 else Fraction(1, 2))
            inv_v, inv_w = FilteredRankInvariant(v, z), FilteredRankInvariant(w, z)
            landscape = landscape_distance(inv_v, inv_w, theta, (1, 2), lows, highs, res, tol)
            erosion = erosion_distance(sample_s(inv_v, theta, lows, highs, res),
                                       sample_s(inv_w, theta, lows, highs, res))
            if landscape > cert.eps + (tol if n > 1 else 0):
                return f"landscape distance {landscape} exceeds {cert.eps}"
            if erosion > cert.eps:
                return f"sampled-erosion-stability: erosion {erosion} exceeds {cert.eps}"
            result.note("landscape_within_erosion" if landscape <= erosion + res else "landscape_above_erosion")
            return None

        for k in self._instances(count, result.name):
            self._check(result, "landscape-stability", k, check)

    def _suite_chambers_1d(self, rng: np.random.Generator, count: int, result: SuiteResult):
        def check():
            pres = random_presentation(rng, 1, coords=HALF_INTEGERS, max_generators=2, max_relations=2)
            v = from_presentation(pres, F2)
            q = (random_fraction(rng, -Fraction(1, 2), Fraction(3, 2), 2),)
            z = skyscraper_condition(q, default_beta(pres.points + [q], 1))
            coords = v.grid.axes[0]
            lo, hi = coords[0] - Fraction(1, 2), coords[-1] + Fraction(1, 2)
            found = x_breakpoints_1d(v, z, (lo, hi))
            for (x,) in lattice((lo,), (hi,), DENSE_SAMPLING_STEP):
                index = found.interval_index(x)
                if index is None:
                    continue
                key, _ = type_at(v, z, (x,))
                if key != found.keys[index]:
                    return f"breakpoints-cover-sampled-changes: HN type at {x} differs from its interval"
            candidates = found.candidates
            for b in found.breakpoints:
                i = candidates.index(b)
                keys = {type_at(v, z, (rational_between(candidates[i - 1], b),))[0],
                        type_at(v, z, (rational_between(b, candidates[i + 1]),))[0]}
                if isinstance(b, Fraction):
                    keys.add(type_at(v, z, (b,))[0])
                if len(keys) < 2:
                    return f"breakpoints-genuine: nothing changes at {b}"
            return None

        for k in self._instances(count, result.name):
            self._check(result, "chamber-exactness-1d", k, check)

    def _suite_guardrails(self, rng: np.random.Generator, count: int, result: SuiteResult):
        beta = constant_beta((0,), (1,))
        conditions = [
            (StabilityCondition(1, EVAL, (AlphaTerm(Cube.point((0,)), -1),), beta), NEGATIVE_POINT_MASS),
            (StabilityCondition(1, STEP, (AlphaTerm(Cube((0,), (None,)), 1),), beta), UNBOUNDED_ALPHA_CARRIER),
        ]
        entries = [({'density': 'x^2', 'coeff': '1'}, NON_STEP_ALPHA_DENSITY),
                   ({'limit': '+inf', 'coeff': '1'}, UNBOUNDED_ALPHA_CARRIER)]

        def check():
            for z, name in conditions:
                try:
                    validate(z)
                except ValidationError as e:
                    if not any(d.startswith(name) for d in e.diagnostics):
                        return f"expected {name}, got {e.diagnostics}"
                else:
                    return f"condition accepted, expected {name}"
            for entry, name in entries:
                if not any(d.startswith(name) for d in diagnose_alpha_entry(entry)):
                    return f"alpha entry {entry} not flagged with {name}"
            return None

        for k in range(count):
            self._check(result, "validation-guardrails", k, check)
