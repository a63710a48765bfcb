"""
Finitely presentable persistence modules as finite grid representations.

A GridModule stores a vector space dimension at every vertex of a grid poset
and a matrix on every Hasse covering edge; the grid function attaches
rational coordinates so that the module is the pushforward of this finite
representation to Q^n (constant on the half-open cells, zero below the grid).
"""

import itertools
import logging
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from .errors import UsageError, ValidationError
from .exactfield import (RATIONALS, Field, Matrix, Subspace, kernel_basis, preimage, push,
                         quotient_coordinates, rank, subspace_sum)
from .gridcomb import (INF, NEG_INF, GridFunction, GridMap, GridPoset, Point, Vertex, common_refinement,
                       extended_floor, floor, from_coordinates, leq, shift_grid, to_point)

logger = logging.getLogger(__name__)

Edge = Tuple[Vertex, int]


@dataclass(frozen=True)
class Presentation:
    """Generators and relations of a finitely presentable module"""
    n: int
    generators: Tuple[Point, ...]
    relations: Tuple[Tuple[Point, Tuple[Fraction, ...]], ...]
    characteristic: int = 0  # 0 for the rationals

    def __post_init__(self):
        object.__setattr__(self, 'generators', tuple(to_point(g) for g in self.generators))
        object.__setattr__(self, 'relations', tuple(
            (to_point(point), tuple(Fraction(c) for c in coeffs)) for point, coeffs in self.relations))

    def validate(self) -> "Presentation":
        problems = []
        for j, g in enumerate(self.generators):
            if len(g) != self.n:
                problems.append(f"generator {j} has {len(g)} coordinates, expected {self.n}")
        for k, (point, coeffs) in enumerate(self.relations):
            if len(point) != self.n:
                problems.append(f"relation {k} has {len(point)} coordinates, expected {self.n}")
                continue
            if len(coeffs) != len(self.generators):
                problems.append(f"relation {k} has {len(coeffs)} coefficients for {len(self.generators)} generators")
                continue
            for j, c in enumerate(coeffs):
                if c != 0 and not leq(self.generators[j], point):
                    problems.append(f"relation {k} has a coefficient on generator {j}, which is not below it")
        if problems:
            raise ValidationError(problems)
        return self

    @property
    def points(self) -> List[Point]:
        return list(self.generators) + [p for p, _ in self.relations]


@dataclass(frozen=True, eq=False)
class GridModule:
    """
    A representation of a grid poset with rational coordinates attached.

    maps[(p, axis)] is the matrix of V_p -> V_{p + e_axis}, of shape
    dims[p + e_axis] x dims[p].
    """
    grid: GridFunction
    field: Field
    dims: Dict[Vertex, int]
    maps: Dict[Edge, Matrix]
    _composites: Dict = dc_field(default_factory=dict, repr=False)

    @property
    def poset(self) -> GridPoset:
        return self.grid.domain

    @property
    def n(self) -> int:
        return self.grid.n

    def vertices(self) -> List[Vertex]:
        return list(self.poset.vertices())

    def dim(self, p) -> int:
        if p is NEG_INF:
            return 0
        return self.dims[p]

    def edge(self, p: Vertex, axis: int) -> Matrix:
        return self.maps[(p, axis)]

    def map_between(self, p, q) -> Matrix:
        """Structure map V_p -> V_q for p <= q (p may be NEG_INF)"""
        if p is NEG_INF or q is NEG_INF:
            return Matrix.zeros(self.dim(q), self.dim(p), self.field)
        if not leq(p, q):
            raise UsageError(f"no structure map from {p} to {q}")
        key = (p, q)
        if key not in self._composites:
            m = Matrix.identity(self.dims[p], self.field)
            cur = p
            for axis in range(self.n):
                while cur[axis] < q[axis]:
                    m = self.maps[(cur, axis)] @ m
                    cur = self.poset.successor(cur, axis)
            self._composites[key] = m
        return self._composites[key]

    def dimension_vector(self) -> Tuple[int, ...]:
        return tuple(self.dims[p] for p in self.poset.vertices())

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def is_zero(self) -> bool:
        return self.total_dim == 0

    def dim_at(self, q: Sequence) -> int:
        return self.dim(floor(self.grid, q))

    def support_vertices(self) -> List[Vertex]:
        return [p for p in self.poset.vertices() if self.dims[p] > 0]

    def signature(self) -> tuple:
        """Hashable structural identity"""
        return (self.grid.axes, self.field.characteristic, self.dimension_vector(),
                tuple((e, self.maps[e].entries) for e in sorted(self.maps)))

    def same_as(self, other: "GridModule") -> bool:
        return self.signature() == other.signature()

    def validate(self) -> "GridModule":
        """Check shapes of all edge maps and commutativity of every square"""
        problems = []
        poset = self.poset
        for p in poset.vertices():
            if p not in self.dims or self.dims[p] < 0:
                problems.append(f"missing or negative dimension at {p}")
        for p, axis, q in poset.covering_edges():
            m = self.maps.get((p, axis))
            if m is None:
                problems.append(f"missing edge map {p} -> {q}")
            elif (m.rows, m.cols) != (self.dims.get(q), self.dims.get(p)):
                problems.append(f"edge map {p} -> {q} has shape {m.rows}x{m.cols}")
        if problems:
            raise ValidationError(problems)
        for p, i, j in poset.squares():
            pi, pj = poset.successor(p, i), poset.successor(p, j)
            top = poset.successor(pi, j)
            left = self.maps[(pi, j)] @ self.maps[(p, i)]
            right = self.maps[(pj, i)] @ self.maps[(p, j)]
            if left.entries != right.entries:
                problems.append(f"square at {p} on axes {i},{j} does not commute (top {top})")
        if problems:
            raise ValidationError(problems)
        return self


def zero_module(n: int, field: Field = RATIONALS) -> GridModule:
    grid = GridFunction(tuple((Fraction(0),) for _ in range(n)))
    p = (0,) * n
    return GridModule(grid, field, {p: 0}, {})


def _assemble(grid: GridFunction, field: Field, source: GridModule, locate: Callable) -> GridModule:
    """Module on grid whose space at c is source at locate(c), maps from source"""
    poset = grid.domain
    where = {c: locate(c) for c in poset.vertices()}
    dims = {c: source.dim(where[c]) for c in poset.vertices()}
    maps = {(c, axis): source.map_between(where[c], where[d]) for c, axis, d in poset.covering_edges()}
    return GridModule(grid, field, dims, maps)


def _presentation_space(pres: Presentation, point: Point, field: Field):
    active = [j for j, g in enumerate(pres.generators) if leq(g, point)]
    position = {j: k for k, j in enumerate(active)}
    rows = []
    for rel_point, coeffs in pres.relations:
        if leq(rel_point, point):
            rows.append([field.coerce(coeffs[j]) for j in active])
    rel = Subspace.span(rows, len(active), field)
    proj, lift = quotient_coordinates(rel)
    return active, position, proj, lift


def _generator_inclusion(src_active: List[int], dst_position: Dict[int, int], field: Field) -> Matrix:
    rows = [[field.zero] * len(src_active) for _ in range(len(dst_position))]
    for k, j in enumerate(src_active):
        rows[dst_position[j]][k] = field.one
    return Matrix(len(dst_position), len(src_active), tuple(tuple(r) for r in rows), field)


def from_presentation(pres: Presentation, field: Optional[Field] = None) -> GridModule:
    """
    Module presented by generators and relations, on the per-axis sorted union
    of all their coordinates.

    Coefficients are reduced into the given field (default: the presentation's).
    """
    pres.validate()
    field = field or Field(pres.characteristic)
    points = pres.points
    if not pres.generators:
        return zero_module(pres.n, field)
    grid = from_coordinates([[p[i] for p in points] for i in range(pres.n)])
    poset = grid.domain
    spaces = {c: _presentation_space(pres, grid(c), field) for c in poset.vertices()}
    dims = {c: spaces[c][2].rows for c in poset.vertices()}
    maps = {}
    for c, axis, d in poset.covering_edges():
        src_active, _, _, src_lift = spaces[c]
        _, dst_position, dst_proj, _ = spaces[d]
        maps[(c, axis)] = dst_proj @ _generator_inclusion(src_active, dst_position, field) @ src_lift
    logger.debug(f"Presented module on grid {poset.sizes} with total dimension {sum(dims.values())}")
    return GridModule(grid, field, dims, maps).validate()


def presentation_map(source: Presentation, target: Presentation, x: Sequence, grid: GridFunction,
                     field: Field) -> "ModuleMap":
    """
    The map V -> T_x* W sending every generator to the generator of the same
    index, on a grid refining both modules.

    Well defined when each generator of target sits at or below the
    corresponding one of source moved by x, and likewise for relations.
    """
    x = to_point(x)
    src = restrict_to_grid(from_presentation(source, field), grid)
    tgt = restrict_to_grid(shift_module(from_presentation(target, field), x), grid)
    components = {}
    for c in grid.domain.vertices():
        point = grid(c)
        moved = tuple(a + b for a, b in zip(point, x))
        src_active, _, _, src_lift = _presentation_space(source, point, field)
        _, dst_position, dst_proj, _ = _presentation_space(target, moved, field)
        if any(j not in dst_position for j in src_active):
            raise UsageError(f"generator map is undefined at {point}: target generators lie too high")
        components[c] = dst_proj @ _generator_inclusion(src_active, dst_position, field) @ src_lift
    return ModuleMap(src, tgt, components).validate()


def spread_module(grid: GridFunction, indicator, field: Field = RATIONALS) -> GridModule:
    """
    The indicator module of a connected convex set of grid vertices.

    Args:
        grid: proper grid function
        indicator: iterable of vertices, or a predicate on vertices
    """
    poset = grid.domain
    members = {p for p in poset.vertices() if indicator(p)} if callable(indicator) else set(map(tuple, indicator))
    for p in members:
        if not poset.contains(p):
            raise ValidationError([f"vertex {p} is not in the grid"])
    ordered = sorted(members)
    for p, q in itertools.combinations(ordered, 2):
        lo, hi = (p, q) if leq(p, q) else (q, p) if leq(q, p) else (None, None)
        if lo is None:
            continue
        for r in itertools.product(*(range(a, b + 1) for a, b in zip(lo, hi))):
            if r not in members:
                raise ValidationError([f"set is not convex: {lo} <= {r} <= {hi} but {r} is missing"])
    if members:
        seen, stack = {ordered[0]}, [ordered[0]]
        while stack:
            p = stack.pop()
            for axis in range(poset.n):
                for step in (-1, 1):
                    q = p[:axis] + (p[axis] + step,) + p[axis + 1:]
                    if q in members and q not in seen:
                        seen.add(q)
                        stack.append(q)
        if len(seen) != len(members):
            witness = min(members - seen)
            raise ValidationError([f"set is not connected: {witness} is not reachable from {ordered[0]}"])
    dims = {p: 1 if p in members else 0 for p in poset.vertices()}
    maps = {}
    for p, axis, q in poset.covering_edges():
        if p in members and q in members:
            maps[(p, axis)] = Matrix.identity(1, field)
        else:
            maps[(p, axis)] = Matrix.zeros(dims[q], dims[p], field)
    return GridModule(grid, field, dims, maps).validate()


def interval_module(lows: Sequence, highs: Sequence, field: Field = RATIONALS) -> GridModule:
    """The module K on the half-open box [lows, highs); a None high means unbounded"""
    n = len(lows)
    axes = []
    for lo, hi in zip(lows, highs):
        axes.append((Fraction(lo),) if hi is None else (Fraction(lo), Fraction(hi)))
    grid = GridFunction(tuple(axes))
    return spread_module(grid, lambda p: all(k == 0 for k in p), field)


def restrict_to_grid(v: GridModule, h: GridFunction) -> GridModule:
    """The module read off at the coordinates of another grid"""
    if h.n != v.n:
        raise UsageError(f"grid of dimension {h.n} for a module of dimension {v.n}")

    def locate(c):
        p = extended_floor(v.grid, h(c))
        return NEG_INF if any(k < 0 for k in p) else p

    return _assemble(h, v.field, v, locate)


def refine(v: GridModule, h: GridFunction) -> GridModule:
    if not h.refines(v.grid):
        raise UsageError("grid does not refine the module grid")
    return restrict_to_grid(v, h)


def pushforward(t: GridMap, u: GridModule, grid: Optional[GridFunction] = None) -> GridModule:
    """Left Kan extension along an index embedding: constant on the fibers of the floor"""
    if t.domain != u.poset:
        raise UsageError("grid map domain does not match the module")
    grid = grid or GridFunction.integer(t.codomain.sizes)
    if grid.domain != t.codomain:
        raise UsageError("target grid does not match the grid map codomain")
    return _assemble(grid, u.field, u, t.floor)


def pullback(t: GridMap, v: GridModule, grid: Optional[GridFunction] = None) -> GridModule:
    """Precomposition with an index embedding"""
    if t.codomain != v.poset:
        raise UsageError("grid map codomain does not match the module")
    grid = grid or GridFunction.integer(t.domain.sizes)
    if grid.domain != t.domain:
        raise UsageError("source grid does not match the grid map domain")
    return _assemble(grid, v.field, v, t)


def shift_module(v: GridModule, x: Sequence) -> GridModule:
    """T_x* V: same representation, coordinates moved by -x"""
    return GridModule(shift_grid(v.grid, x), v.field, dict(v.dims), dict(v.maps))


def rank_invariant(v: GridModule, x: Sequence, y: Sequence):
    """Rank of V_x -> V_y, or INF when x is not below y"""
    x, y = to_point(x), to_point(y)
    if not leq(x, y):
        return INF
    fx = floor(v.grid, x)
    if fx is NEG_INF:
        return 0
    return rank(v.map_between(fx, floor(v.grid, y)))


def reduce_modulo(v: GridModule, field: Field) -> GridModule:
    """The same matrices read in another field"""
    maps = {e: Matrix.from_rows(m.entries, m.cols, field) for e, m in v.maps.items()}
    return GridModule(v.grid, field, dict(v.dims), maps)


class Submodule:
    """
    A choice of subspace W_p of V_p at every vertex.

    Closure under the edge maps is checked by is_closed(); constructors in
    this module only produce closed families.
    """

    def __init__(self, parent: GridModule, components: Dict[Vertex, Subspace]):
        self.parent = parent
        self.components = components

    def __getitem__(self, p: Vertex) -> Subspace:
        return self.components[p]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Submodule):
            return NotImplemented
        return (self.parent is other.parent or self.parent.same_as(other.parent)) and self.key() == other.key()

    def __hash__(self):
        return hash(self.key())

    def __le__(self, other: "Submodule") -> bool:
        return all(self.components[p] <= other.components[p] for p in self.components)

    def __repr__(self):
        return f"Submodule(dims={self.dimension_vector()})"

    def key(self) -> tuple:
        return tuple(self.components[p].basis for p in self.parent.poset.vertices())

    def dims(self) -> Dict[Vertex, int]:
        return {p: s.dim for p, s in self.components.items()}

    def dimension_vector(self) -> Tuple[int, ...]:
        return tuple(self.components[p].dim for p in self.parent.poset.vertices())

    @property
    def total_dim(self) -> int:
        return sum(s.dim for s in self.components.values())

    def is_zero(self) -> bool:
        return self.total_dim == 0

    def is_full(self) -> bool:
        return self.total_dim == self.parent.total_dim

    def violating_edge(self) -> Optional[Tuple[Vertex, Vertex]]:
        v = self.parent
        for p, axis, q in v.poset.covering_edges():
            if not push(v.edge(p, axis), self.components[p]) <= self.components[q]:
                return p, q
        return None

    def is_closed(self) -> bool:
        return self.violating_edge() is None

    def as_module(self) -> GridModule:
        """The submodule as a module in its own right, in echelon coordinates"""
        v = self.parent
        f = v.field
        maps = {}
        for p, axis, q in v.poset.covering_edges():
            src, dst = self.components[p], self.components[q]
            inclusion = Matrix(src.dim, v.dims[p], src.basis, f).transpose()
            image = v.edge(p, axis) @ inclusion
            pivots = [next(i for i, a in enumerate(r) if a != 0) for r in dst.basis]
            # echelon coordinates: read the pivot entries of each image column
            rows = tuple(tuple(image.entries[c][k] for k in range(src.dim)) for c in pivots)
            maps[(p, axis)] = Matrix(dst.dim, src.dim, rows, f)
        return GridModule(v.grid, f, self.dims(), maps)


def zero_submodule(v: GridModule) -> Submodule:
    return Submodule(v, {p: Subspace.zero(v.dims[p], v.field) for p in v.poset.vertices()})


def full_submodule(v: GridModule) -> Submodule:
    return Submodule(v, {p: Subspace.full(v.dims[p], v.field) for p in v.poset.vertices()})


def sub_generated(v: GridModule, seeds: Dict[Vertex, Subspace]) -> Submodule:
    """
    Smallest submodule containing the seeds.

    One pass in topological order suffices: a vertex only receives pushes from
    vertices that come before it.
    """
    components = {}
    for q in v.poset.topological_order():
        cur = seeds.get(q) or Subspace.zero(v.dims[q], v.field)
        for axis in range(v.n):
            if q[axis] == 0:
                continue
            p = q[:axis] + (q[axis] - 1,) + q[axis + 1:]
            cur = subspace_sum(cur, push(v.edge(p, axis), components[p]))
        components[q] = cur
    return Submodule(v, components)


def submodule_sum(a: Submodule, b: Submodule) -> Submodule:
    return Submodule(a.parent, {p: subspace_sum(a.components[p], b.components[p]) for p in a.components})


def submodule_from_components(v: GridModule, components: Dict[Vertex, Subspace]) -> Submodule:
    """Wrap a family of subspaces after checking closure"""
    w = Submodule(v, components)
    bad = w.violating_edge()
    if bad is not None:
        raise ValidationError([f"family is not closed under the map {bad[0]} -> {bad[1]}"])
    return w


@dataclass(frozen=True, eq=False)
class ModuleMap:
    """A natural transformation between modules on the same grid"""
    source: GridModule
    target: GridModule
    components: Dict[Vertex, Matrix]

    def validate(self) -> "ModuleMap":
        if self.source.grid != self.target.grid:
            raise UsageError("module map between modules on different grids")
        problems = []
        for p in self.source.poset.vertices():
            m = self.components.get(p)
            if m is None or (m.rows, m.cols) != (self.target.dims[p], self.source.dims[p]):
                problems.append(f"component at {p} missing or of the wrong shape")
        if problems:
            raise ValidationError(problems)
        for p, axis, q in self.source.poset.covering_edges():
            left = self.target.edge(p, axis) @ self.components[p]
            right = self.components[q] @ self.source.edge(p, axis)
            if left.entries != right.entries:
                problems.append(f"naturality fails on the edge {p} -> {q}")
        if problems:
            raise ValidationError(problems)
        return self

    def is_natural(self) -> bool:
        try:
            self.validate()
        except (ValidationError, UsageError):
            return False
        return True

    def is_zero(self) -> bool:
        return all(m.is_zero() for m in self.components.values())

    def equals(self, other: "ModuleMap") -> bool:
        return all(self.components[p].entries == other.components[p].entries for p in self.components)


def module_map_between(v: GridModule, w: GridModule, components: Dict[Vertex, Sequence[Sequence]]) -> ModuleMap:
    """
    A validated natural map from per-vertex matrices given as nested lists.

    Raises:
        ValidationError: when a component has the wrong shape or a square
        does not commute
    """
    comps = {p: Matrix.from_rows(components.get(p, ()), v.dims[p], v.field) for p in v.poset.vertices()}
    return ModuleMap(v, w, comps).validate()


def identity_map(v: GridModule) -> ModuleMap:
    return ModuleMap(v, v, {p: Matrix.identity(v.dims[p], v.field) for p in v.poset.vertices()})


def zero_map(v: GridModule, w: GridModule) -> ModuleMap:
    return ModuleMap(v, w, {p: Matrix.zeros(w.dims[p], v.dims[p], v.field) for p in v.poset.vertices()})


def compose_maps(f: ModuleMap, g: ModuleMap) -> ModuleMap:
    """g o f"""
    if f.target.grid != g.source.grid:
        raise UsageError("cannot compose maps on different grids")
    return ModuleMap(f.source, g.target, {p: g.components[p] @ f.components[p] for p in f.components})


def apply_map_to_submodule(f: ModuleMap, w: Submodule) -> Submodule:
    return Submodule(f.target, {p: push(f.components[p], w.components[p]) for p in f.components})


def preimage_submodule(f: ModuleMap, w: Submodule) -> Submodule:
    return Submodule(f.source, {p: preimage(f.components[p], w.components[p]) for p in f.components})


def quotient_with_projection(v: GridModule, w: Submodule) -> Tuple[GridModule, ModuleMap]:
    """V / W with the projection V -> V / W"""
    bad = w.violating_edge()
    if bad is not None:
        raise ValidationError([f"cannot take a quotient: submodule not closed on the edge {bad[0]} -> {bad[1]}"])
    coords = {p: quotient_coordinates(w.components[p]) for p in v.poset.vertices()}
    dims = {p: coords[p][0].rows for p in v.poset.vertices()}
    maps = {}
    for p, axis, q in v.poset.covering_edges():
        maps[(p, axis)] = coords[q][0] @ v.edge(p, axis) @ coords[p][1]
    quot = GridModule(v.grid, v.field, dims, maps)
    return quot, ModuleMap(v, quot, {p: coords[p][0] for p in v.poset.vertices()})


def quotient(v: GridModule, w: Submodule) -> GridModule:
    return quotient_with_projection(v, w)[0]


def _block_diagonal(a: Matrix, b: Matrix) -> Matrix:
    f = a.field
    rows = [tuple(r) + (f.zero,) * b.cols for r in a.entries]
    rows += [(f.zero,) * a.cols + tuple(r) for r in b.entries]
    return Matrix(a.rows + b.rows, a.cols + b.cols, tuple(rows), f)


def direct_sum(a: GridModule, b: GridModule) -> GridModule:
    if a.field != b.field:
        raise UsageError(f"direct sum over different fields {a.field} and {b.field}")
    grid, _, _ = common_refinement(a.grid, b.grid)
    ra, rb = restrict_to_grid(a, grid), restrict_to_grid(b, grid)
    dims = {p: ra.dims[p] + rb.dims[p] for p in grid.domain.vertices()}
    maps = {e: _block_diagonal(ra.maps[e], rb.maps[e]) for e in ra.maps}
    return GridModule(grid, a.field, dims, maps)


def summand_maps(a: GridModule, b: GridModule) -> Tuple[GridModule, List[ModuleMap]]:
    """
    The direct sum with its structure maps.

    Returns:
        (a + b, [inclusion of a, inclusion of b, projection to a, projection to b]),
        with a and b read on the grid of the sum
    """
    s = direct_sum(a, b)
    ra, rb = restrict_to_grid(a, s.grid), restrict_to_grid(b, s.grid)
    f = a.field
    inc_a, inc_b, pr_a, pr_b = {}, {}, {}, {}
    for p in s.poset.vertices():
        da, db = ra.dims[p], rb.dims[p]
        ident_a, ident_b = Matrix.identity(da, f), Matrix.identity(db, f)
        inc_a[p] = _block_diagonal(ident_a, Matrix.zeros(db, 0, f))
        inc_b[p] = _block_diagonal(Matrix.zeros(da, 0, f), ident_b)
        pr_a[p] = inc_a[p].transpose()
        pr_b[p] = inc_b[p].transpose()
    return s, [ModuleMap(ra, s, inc_a), ModuleMap(rb, s, inc_b), ModuleMap(s, ra, pr_a), ModuleMap(s, rb, pr_b)]


def hom_basis(v: GridModule, w: GridModule) -> List[ModuleMap]:
    """A basis of the space of natural maps V -> W (modules on the same grid)"""
    if v.grid != w.grid:
        raise UsageError("hom space between modules on different grids")
    f = v.field
    offset, index = 0, {}
    for p in v.poset.vertices():
        for a in range(w.dims[p]):
            for c in range(v.dims[p]):
                index[(p, a, c)] = offset
                offset += 1
    equations = []
    for p, axis, q in v.poset.covering_edges():
        we, ve = w.edge(p, axis), v.edge(p, axis)
        for a in range(w.dims[q]):
            for c in range(v.dims[p]):
                row = [f.zero] * offset
                for b in range(w.dims[p]):
                    if we.entries[a][b] != 0:
                        k = index[(p, b, c)]
                        row[k] = f.add(row[k], we.entries[a][b])
                for b in range(v.dims[q]):
                    if ve.entries[b][c] != 0:
                        k = index[(q, a, b)]
                        row[k] = f.sub(row[k], ve.entries[b][c])
                equations.append(tuple(row))
    solutions = kernel_basis(Matrix(len(equations), offset, tuple(equations), f))
    maps = []
    for vec in solutions.basis:
        comps = {}
        for p in v.poset.vertices():
            rows = tuple(tuple(vec[index[(p, a, c)]] for c in range(v.dims[p])) for a in range(w.dims[p]))
            comps[p] = Matrix(w.dims[p], v.dims[p], rows, f)
        maps.append(ModuleMap(v, w, comps))
    return maps


def linear_combination(maps: List[ModuleMap], coeffs: Sequence, v: GridModule, w: GridModule) -> ModuleMap:
    total = zero_map(v, w)
    for m, c in zip(maps, coeffs):
        total = ModuleMap(v, w, {p: total.components[p] + m.components[p].scale(v.field.coerce(c))
                                 for p in total.components})
    return total


def refine_map(f: ModuleMap, h: GridFunction) -> ModuleMap:
    """A map read on a finer grid, component at c taken from the floor of c"""
    if not h.refines(f.source.grid):
        raise UsageError("grid does not refine the map's grid")
    src, tgt = refine(f.source, h), refine(f.target, h)
    comps = {}
    for c in h.domain.vertices():
        p = floor(f.source.grid, h(c))
        comps[c] = Matrix.zeros(0, 0, f.source.field) if p is NEG_INF else f.components[p]
    return ModuleMap(src, tgt, comps)


def shift_module_map(f: ModuleMap, x: Sequence) -> ModuleMap:
    """T_x* f"""
    return ModuleMap(shift_module(f.source, x), shift_module(f.target, x), dict(f.components))


def shift_map(v: GridModule, x: Sequence, grid: Optional[GridFunction] = None) -> ModuleMap:
    """
    The x-shift map V -> T_x* V for x >= 0, on a grid refining both.

    Component at c is the structure map V_c -> V_{c + x}.
    """
    x = to_point(x)
    if any(a < 0 for a in x):
        raise UsageError(f"shift maps need a nonnegative vector, got {x}")
    shifted = shift_module(v, x)
    if grid is None:
        grid, _, _ = common_refinement(v.grid, shifted.grid)
    src, tgt = restrict_to_grid(v, grid), restrict_to_grid(shifted, grid)
    comps = {}
    for c in grid.domain.vertices():
        point = grid(c)
        lo = floor(v.grid, point)
        hi = floor(v.grid, tuple(a + b for a, b in zip(point, x)))
        comps[c] = v.map_between(lo, hi)
    return ModuleMap(src, tgt, comps)
