"""
Exact scalar and linear algebra over the rationals and prime fields F_p.

Scalars are plain Python values interpreted in a Field context: Fraction for
the rationals, int in [0, p) for F_p. Subspaces are stored by a reduced
row-echelon basis so that equality of subspaces is a syntactic comparison.
"""

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, List, Sequence, Tuple, Union

from ..config.settings import SUBSPACE_ENUMERATION_BUDGET
from .errors import BudgetExceeded, UsageError

Scalar = Union[int, Fraction]
Row = Tuple[Scalar, ...]


def _is_prime(p: int) -> bool:
    if p < 2:
        return False
    if p % 2 == 0:
        return p == 2
    d = 3
    while d * d <= p:
        if p % d == 0:
            return False
        d += 2
    return True


@dataclass(frozen=True)
class Field:
    """
    The ground field of a computation.

    characteristic 0 means the rationals; otherwise the prime field F_p.
    """
    characteristic: int = 0

    def __post_init__(self):
        if self.characteristic != 0 and not _is_prime(self.characteristic):
            raise UsageError(f"F_{self.characteristic} is not a prime field")

    @property
    def is_finite(self) -> bool:
        return self.characteristic != 0

    @property
    def order(self) -> int:
        if not self.is_finite:
            raise UsageError("the rationals have no finite order")
        return self.characteristic

    @property
    def zero(self) -> Scalar:
        return 0 if self.is_finite else Fraction(0)

    @property
    def one(self) -> Scalar:
        return 1 if self.is_finite else Fraction(1)

    def coerce(self, value) -> Scalar:
        """Bring an int, Fraction or "p/q" string into the field"""
        if isinstance(value, str):
            value = Fraction(value)
        if not self.is_finite:
            return Fraction(value)
        p = self.characteristic
        frac = Fraction(value)
        den = frac.denominator % p
        if den == 0:
            raise UsageError(f"denominator of {frac} vanishes modulo {p}")
        return (frac.numerator % p) * pow(den, p - 2, p) % p

    def add(self, a: Scalar, b: Scalar) -> Scalar:
        if self.is_finite:
            return (a + b) % self.characteristic
        return a + b

    def sub(self, a: Scalar, b: Scalar) -> Scalar:
        if self.is_finite:
            return (a - b) % self.characteristic
        return a - b

    def mul(self, a: Scalar, b: Scalar) -> Scalar:
        if self.is_finite:
            return (a * b) % self.characteristic
        return a * b

    def neg(self, a: Scalar) -> Scalar:
        if self.is_finite:
            return (-a) % self.characteristic
        return -a

    def inv(self, a: Scalar) -> Scalar:
        if a == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.is_finite:
            return pow(a, self.characteristic - 2, self.characteristic)
        return Fraction(1) / a

    def elements(self) -> List[Scalar]:
        return list(range(self.order))

    def render(self, a: Scalar) -> str:
        return str(a)

    def __str__(self) -> str:
        return f"F_{self.characteristic}" if self.is_finite else "Q"


RATIONALS = Field(0)


def prime_field(p: int) -> Field:
    return Field(p)


def row_reduce(rows: Sequence[Sequence[Scalar]], ncols: int, field: Field) -> Tuple[List[List[Scalar]], List[int]]:
    """
    Reduced row-echelon form by Gauss-Jordan elimination.

    Args:
        rows: input rows (not modified)
        ncols: row length
        field: ground field

    Returns:
        (nonzero rows of the reduced form, pivot columns)
    """
    m = [list(r) for r in rows]
    pivots: List[int] = []
    piv_r = 0
    for col in range(ncols):
        if piv_r == len(m):
            break
        sel = next((i for i in range(piv_r, len(m)) if m[i][col] != 0), None)
        if sel is None:
            continue
        m[piv_r], m[sel] = m[sel], m[piv_r]
        lead_inv = field.inv(m[piv_r][col])
        m[piv_r] = [field.mul(v, lead_inv) for v in m[piv_r]]
        for i in range(len(m)):
            if i != piv_r and m[i][col] != 0:
                factor = m[i][col]
                m[i] = [field.sub(a, field.mul(factor, b)) for a, b in zip(m[i], m[piv_r])]
        pivots.append(col)
        piv_r += 1
    return m[:piv_r], pivots


@dataclass(frozen=True)
class Matrix:
    """
    A rows x cols matrix over a field.

    Linear maps act on column vectors: a map V_p -> V_q is a
    dim(V_q) x dim(V_p) matrix.
    """
    rows: int
    cols: int
    entries: Tuple[Row, ...]
    field: Field = RATIONALS

    def __post_init__(self):
        if len(self.entries) != self.rows or any(len(r) != self.cols for r in self.entries):
            raise UsageError(f"entry grid does not match shape {self.rows}x{self.cols}")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int, field: Field) -> "Matrix":
        entries = tuple(tuple(field.coerce(v) for v in r) for r in rows)
        return cls(len(entries), cols, entries, field)

    @classmethod
    def zeros(cls, rows: int, cols: int, field: Field) -> "Matrix":
        return cls(rows, cols, tuple((field.zero,) * cols for _ in range(rows)), field)

    @classmethod
    def identity(cls, n: int, field: Field) -> "Matrix":
        return cls(n, n, tuple(tuple(field.one if i == j else field.zero for j in range(n)) for i in range(n)), field)

    def __matmul__(self, other: "Matrix") -> "Matrix":
        if self.cols != other.rows:
            raise UsageError(f"cannot compose {self.rows}x{self.cols} with {other.rows}x{other.cols}")
        f = self.field
        out = []
        for i in range(self.rows):
            row = []
            for j in range(other.cols):
                acc = f.zero
                for k in range(self.cols):
                    a = self.entries[i][k]
                    if a != 0:
                        acc = f.add(acc, f.mul(a, other.entries[k][j]))
                row.append(acc)
            out.append(tuple(row))
        return Matrix(self.rows, other.cols, tuple(out), f)

    def __add__(self, other: "Matrix") -> "Matrix":
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise UsageError("cannot add matrices of different shapes")
        f = self.field
        return Matrix(self.rows, self.cols,
                      tuple(tuple(f.add(a, b) for a, b in zip(r, s)) for r, s in zip(self.entries, other.entries)), f)

    def scale(self, c: Scalar) -> "Matrix":
        f = self.field
        return Matrix(self.rows, self.cols, tuple(tuple(f.mul(c, a) for a in r) for r in self.entries), f)

    def transpose(self) -> "Matrix":
        return Matrix(self.cols, self.rows,
                      tuple(tuple(self.entries[i][j] for i in range(self.rows)) for j in range(self.cols)), self.field)

    def apply(self, vector: Sequence[Scalar]) -> Row:
        f = self.field
        out = []
        for r in self.entries:
            acc = f.zero
            for a, v in zip(r, vector):
                if a != 0 and v != 0:
                    acc = f.add(acc, f.mul(a, v))
            out.append(acc)
        return tuple(out)

    def is_zero(self) -> bool:
        return all(v == 0 for r in self.entries for v in r)

    def to_lists(self) -> List[List[str]]:
        return [[self.field.render(v) for v in r] for r in self.entries]


@dataclass(frozen=True)
class Subspace:
    """A subspace of field^ambient_dim stored by its reduced row-echelon basis"""
    ambient_dim: int
    basis: Tuple[Row, ...]
    field: Field = RATIONALS

    @classmethod
    def span(cls, vectors: Iterable[Sequence[Scalar]], ambient_dim: int, field: Field) -> "Subspace":
        rows = [[field.coerce(x) for x in v] for v in vectors]
        for v in rows:
            if len(v) != ambient_dim:
                raise UsageError(f"vector of length {len(v)} in ambient dimension {ambient_dim}")
        reduced, _ = row_reduce(rows, ambient_dim, field)
        return cls(ambient_dim, tuple(tuple(r) for r in reduced), field)

    @classmethod
    def zero(cls, ambient_dim: int, field: Field) -> "Subspace":
        return cls(ambient_dim, (), field)

    @classmethod
    def full(cls, ambient_dim: int, field: Field) -> "Subspace":
        return cls(ambient_dim, Matrix.identity(ambient_dim, field).entries, field)

    @property
    def dim(self) -> int:
        return len(self.basis)

    def is_zero(self) -> bool:
        return not self.basis

    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def contains_vector(self, v: Sequence[Scalar]) -> bool:
        return Subspace.span(list(self.basis) + [list(v)], self.ambient_dim, self.field).dim == self.dim

    def __le__(self, other: "Subspace") -> bool:
        _check_ambient(self, other)
        if self.dim > other.dim:
            return False
        return subspace_sum(self, other).dim == other.dim

    def __str__(self) -> str:
        rows = ", ".join("(" + ",".join(str(v) for v in r) + ")" for r in self.basis)
        return f"span{{{rows}}}"


def _check_ambient(a: Subspace, b: Subspace):
    if a.ambient_dim != b.ambient_dim:
        raise UsageError(f"ambient dimensions differ: {a.ambient_dim} vs {b.ambient_dim}")
    if a.field != b.field:
        raise UsageError(f"fields differ: {a.field} vs {b.field}")


def rank(m: Matrix) -> int:
    return len(row_reduce(m.entries, m.cols, m.field)[0])


def kernel_basis(m: Matrix) -> Subspace:
    """Null space {v : m v = 0} as a subspace of the domain"""
    f = m.field
    reduced, pivots = row_reduce(m.entries, m.cols, f)
    free = [c for c in range(m.cols) if c not in pivots]
    vectors = []
    for fc in free:
        v = [f.zero] * m.cols
        v[fc] = f.one
        for r, pc in enumerate(pivots):
            v[pc] = f.neg(reduced[r][fc])
        vectors.append(v)
    return Subspace.span(vectors, m.cols, f)


def image_basis(m: Matrix) -> Subspace:
    return Subspace.span(m.transpose().entries, m.rows, m.field)


def subspace_sum(a: Subspace, b: Subspace) -> Subspace:
    _check_ambient(a, b)
    if a.is_zero():
        return b
    if b.is_zero():
        return a
    return Subspace.span(list(a.basis) + list(b.basis), a.ambient_dim, a.field)


def annihilator(s: Subspace) -> Subspace:
    """{c : c . w = 0 for all w in s}; applying it twice gives s back"""
    if s.is_zero():
        return Subspace.full(s.ambient_dim, s.field)
    return kernel_basis(Matrix(s.dim, s.ambient_dim, s.basis, s.field))


def subspace_intersect(a: Subspace, b: Subspace) -> Subspace:
    _check_ambient(a, b)
    if a.is_zero() or b.is_zero():
        return Subspace.zero(a.ambient_dim, a.field)
    equations = list(annihilator(a).basis) + list(annihilator(b).basis)
    if not equations:
        return Subspace.full(a.ambient_dim, a.field)
    return kernel_basis(Matrix(len(equations), a.ambient_dim, tuple(equations), a.field))


def push(m: Matrix, s: Subspace) -> Subspace:
    """Image m(s) in the codomain of m"""
    if s.ambient_dim != m.cols:
        raise UsageError(f"subspace of dimension {s.ambient_dim} pushed along a map with domain {m.cols}")
    return Subspace.span((m.apply(v) for v in s.basis), m.rows, m.field)


def preimage(m: Matrix, s: Subspace) -> Subspace:
    """{v : m v in s} in the domain of m"""
    if s.ambient_dim != m.rows:
        raise UsageError(f"subspace of dimension {s.ambient_dim} pulled back along a map with codomain {m.rows}")
    equations = annihilator(s)
    if equations.is_zero():
        return Subspace.full(m.cols, m.field)
    c = Matrix(equations.dim, m.rows, equations.basis, m.field)
    return kernel_basis(c @ m)


def complement_basis(s: Subspace) -> List[Row]:
    """Standard basis vectors completing the echelon basis of s to the ambient space"""
    pivots = {next(i for i, v in enumerate(r) if v != 0) for r in s.basis}
    f = s.field
    return [tuple(f.one if i == c else f.zero for i in range(s.ambient_dim))
            for c in range(s.ambient_dim) if c not in pivots]


def quotient_coordinates(s: Subspace) -> Tuple[Matrix, Matrix]:
    """
    Coordinates on the quotient ambient / s.

    Returns:
        (proj, lift): proj sends the ambient space onto field^(ambient - dim s)
        with kernel s, lift sends quotient coordinates to the standard
        vectors at the non-pivot columns, and proj @ lift is the identity.
    """
    f = s.field
    pivot_of_row = [next(i for i, v in enumerate(r) if v != 0) for r in s.basis]
    row_of_pivot = {c: k for k, c in enumerate(pivot_of_row)}
    free = [c for c in range(s.ambient_dim) if c not in row_of_pivot]
    proj_rows = []
    for c in free:
        row = []
        for j in range(s.ambient_dim):
            if j in row_of_pivot:
                row.append(f.neg(s.basis[row_of_pivot[j]][c]))
            else:
                row.append(f.one if j == c else f.zero)
        proj_rows.append(tuple(row))
    proj = Matrix(len(free), s.ambient_dim, tuple(proj_rows), f)
    lift = Matrix(len(free), s.ambient_dim, tuple(complement_basis(s)), f).transpose()
    return proj, lift


def gaussian_binomial(n: int, k: int, q: int) -> int:
    if k < 0 or k > n:
        return 0
    num, den = 1, 1
    for i in range(k):
        num *= q ** (n - i) - 1
        den *= q ** (i + 1) - 1
    return num // den


@lru_cache(maxsize=None)
def _echelon_subspaces(ambient_dim: int, p: int) -> Tuple[Subspace, ...]:
    field = Field(p)
    out = []
    for k in range(ambient_dim + 1):
        for pivots in itertools.combinations(range(ambient_dim), k):
            free_slots = [(r, c) for r, pc in enumerate(pivots)
                          for c in range(pc + 1, ambient_dim) if c not in pivots]
            for values in itertools.product(range(p), repeat=len(free_slots)):
                rows = [[0] * ambient_dim for _ in range(k)]
                for r, pc in enumerate(pivots):
                    rows[r][pc] = 1
                for (r, c), v in zip(free_slots, values):
                    rows[r][c] = v
                out.append(Subspace(ambient_dim, tuple(tuple(r) for r in rows), field))
    return tuple(out)


def enumerate_subspaces(ambient_dim: int, field: Field, budget: int = SUBSPACE_ENUMERATION_BUDGET) -> Tuple[Subspace, ...]:
    """
    Every subspace of field^ambient_dim exactly once, in echelon form.

    Refuses when q^ambient_dim exceeds the enumeration budget.
    """
    if not field.is_finite:
        raise UsageError("subspace enumeration needs a finite field; reduce modulo a prime first")
    if field.order ** ambient_dim > budget:
        raise BudgetExceeded(
            f"enumerating subspaces of {field}^{ambient_dim} exceeds the budget of {budget} vectors")
    return _echelon_subspaces(ambient_dim, field.characteristic)


def subspaces_containing(base: Subspace, budget: int = SUBSPACE_ENUMERATION_BUDGET) -> List[Subspace]:
    return [s for s in enumerate_subspaces(base.ambient_dim, base.field, budget) if base <= s]
