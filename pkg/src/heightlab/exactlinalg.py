"""Exact vectors, matrices, characteristic polynomials, kernels, and Plücker
coordinates over Q and quadratic fields, plus content-stripped matrix powers.

Everything is computed in exact field arithmetic.  Plücker coordinates use
minors in lexicographic column-subset order; over Q the cached representative
is primitive (content 1) and sign-normalized.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterator, Sequence

from .errors import ParseError, ResourceBudgetError
from .numutil import content_gcd
from .numberfield import Field, Scalar

DEFAULT_BITS_BUDGET = 10**7
_BITS_ENV = "HEIGHTLAB_BITS_BUDGET"


def bits_budget_default() -> int:
    raw = os.environ.get(_BITS_ENV)
    if raw:
        try:
            return int(raw)
        except ValueError:
            pass
    return DEFAULT_BITS_BUDGET


@dataclass(frozen=True)
class VectorK:
    field: Field
    entries: tuple[Scalar, ...]

    def __post_init__(self):
        if not self.entries:
            raise ValueError("empty vector")
        for x in self.entries:
            if x.field != self.field:
                raise ValueError("entry field mismatch")

    @classmethod
    def of(cls, field: Field, values: Sequence) -> "VectorK":
        return cls(field, tuple(_as_scalar(field, v) for v in values))

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def is_zero(self) -> bool:
        return all(x.is_zero for x in self.entries)

    def __getitem__(self, i: int) -> Scalar:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def __add__(self, other: "VectorK") -> "VectorK":
        return VectorK(self.field, tuple(x + y for x, y in zip(self.entries, other.entries)))

    def __sub__(self, other: "VectorK") -> "VectorK":
        return VectorK(self.field, tuple(x - y for x, y in zip(self.entries, other.entries)))

    def scale(self, c) -> "VectorK":
        c = _as_scalar(self.field, c)
        return VectorK(self.field, tuple(c * x for x in self.entries))

    def dot(self, other: "VectorK") -> Scalar:
        acc = self.field.zero()
        for x, y in zip(self.entries, other.entries):
            acc = acc + x * y
        return acc

    def __str__(self) -> str:
        return "[" + ",".join(str(x) for x in self.entries) + "]"


@dataclass(frozen=True)
class MatrixK:
    field: Field
    rows: tuple[tuple[Scalar, ...], ...]

    def __post_init__(self):
        n = len(self.rows)
        if n == 0 or any(len(r) != n for r in self.rows):
            raise ValueError("matrix must be square and nonempty")

    @classmethod
    def of(cls, field: Field, rows: Sequence[Sequence]) -> "MatrixK":
        return cls(field, tuple(tuple(_as_scalar(field, v) for v in row) for row in rows))

    @classmethod
    def identity(cls, field: Field, n: int) -> "MatrixK":
        return cls.of(field, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, field: Field, n: int) -> "MatrixK":
        return cls.of(field, [[0] * n for _ in range(n)])

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def is_zero(self) -> bool:
        return all(x.is_zero for row in self.rows for x in row)

    def entry(self, i: int, j: int) -> Scalar:
        return self.rows[i][j]

    def row(self, i: int) -> VectorK:
        return VectorK(self.field, self.rows[i])

    def column(self, j: int) -> VectorK:
        return VectorK(self.field, tuple(r[j] for r in self.rows))

    def transpose(self) -> "MatrixK":
        return MatrixK(self.field, tuple(zip(*self.rows)))

    def conjugate_transpose(self) -> "MatrixK":
        return MatrixK(self.field, tuple(tuple(x.conjugate() for x in col) for col in zip(*self.rows)))

    def __add__(self, other: "MatrixK") -> "MatrixK":
        return MatrixK(self.field, tuple(tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.rows, other.rows)))

    def __sub__(self, other: "MatrixK") -> "MatrixK":
        return MatrixK(self.field, tuple(tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.rows, other.rows)))

    def scale(self, c) -> "MatrixK":
        c = _as_scalar(self.field, c)
        return MatrixK(self.field, tuple(tuple(c * x for x in row) for row in self.rows))

    def __matmul__(self, other: "MatrixK") -> "MatrixK":
        cols = other.transpose().rows
        return MatrixK(
            self.field,
            tuple(tuple(_dot(row, col, self.field) for col in cols) for row in self.rows),
        )

    def apply(self, v: VectorK) -> VectorK:
        return VectorK(self.field, tuple(_dot(row, v.entries, self.field) for row in self.rows))

    def trace(self) -> Scalar:
        acc = self.field.zero()
        for i in range(self.n):
            acc = acc + self.rows[i][i]
        return acc

    def pow_plain(self, k: int) -> "MatrixK":
        """T^k by repeated squaring, no content stripping (small k only)."""
        if k < 0:
            raise ValueError("negative matrix power")
        out = MatrixK.identity(self.field, self.n)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base if k > 1 else base
            k >>= 1
        return out

    def max_entry_bits(self) -> int:
        bits = 0
        for row in self.rows:
            for x in row:
                for q in (x.a, x.b):
                    bits = max(bits, q.numerator.bit_length() + q.denominator.bit_length())
        return bits

    def __str__(self) -> str:
        return "[" + ",".join("[" + ",".join(str(x) for x in row) + "]" for row in self.rows) + "]"


def _as_scalar(field: Field, v) -> Scalar:
    if isinstance(v, Scalar):
        if v.field != field:
            raise ValueError("scalar from a different field")
        return v
    if isinstance(v, str):
        return field.parse_scalar(v)
    return field.scalar(Fraction(v))


def _dot(xs: Sequence[Scalar], ys: Sequence[Scalar], field: Field) -> Scalar:
    acc = field.zero()
    for x, y in zip(xs, ys):
        acc = acc + x * y
    return acc


@dataclass(frozen=True)
class CharPoly:
    """Monic characteristic polynomial det(xI - T), coefficients ascending."""

    field: Field
    coeffs: tuple[Scalar, ...]  # a_0 .. a_n with a_n = 1

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @classmethod
    def from_roots(cls, field: Field, roots: Sequence) -> "CharPoly":
        coeffs = [field.one()]
        for r in roots:
            r = _as_scalar(field, r)
            nxt = [field.zero()] * (len(coeffs) + 1)
            for i, c in enumerate(coeffs):
                nxt[i + 1] = nxt[i + 1] + c
                nxt[i] = nxt[i] - r * c
            coeffs = nxt
        return cls(field, tuple(coeffs))

    @property
    def is_power_of_x(self) -> bool:
        return all(c.is_zero for c in self.coeffs[:-1])

    def zero_root_multiplicity(self) -> int:
        for i, c in enumerate(self.coeffs):
            if not c.is_zero:
                return i
        return self.degree

    def __str__(self) -> str:
        return " + ".join(f"({c})*x^{i}" for i, c in enumerate(self.coeffs) if not c.is_zero)


def char_poly(T: MatrixK) -> CharPoly:
    """det(xI - T) via the Faddeev-LeVerrier recurrence (exact, O(n^4))."""
    n = T.n
    field = T.field
    coeffs: list[Scalar] = [field.zero()] * (n + 1)
    coeffs[n] = field.one()
    M = MatrixK.identity(field, n)
    for k in range(1, n + 1):
        M = T @ M
        c = -(M.trace() / k)
        coeffs[n - k] = c
        M = M + MatrixK.identity(field, n).scale(c)
    return CharPoly(field, tuple(coeffs))


def _rref(rows: list[list[Scalar]], field: Field) -> tuple[list[list[Scalar]], list[int]]:
    """Reduced row echelon form; returns (rows, pivot column indices)."""
    rows = [list(r) for r in rows]
    n_rows = len(rows)
    n_cols = len(rows[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(n_cols):
        pivot = next((i for i in range(r, n_rows) if not rows[i][c].is_zero), None)
        if pivot is None:
            continue
        rows[r], rows[pivot] = rows[pivot], rows[r]
        inv = rows[r][c].inverse()
        rows[r] = [inv * x for x in rows[r]]
        for i in range(n_rows):
            if i != r and not rows[i][c].is_zero:
                f = rows[i][c]
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == n_rows:
            break
    return rows, pivots


def rank(T: MatrixK) -> int:
    _, pivots = _rref([list(r) for r in T.rows], T.field)
    return len(pivots)


class Subspace:
    """A subspace of K^n given by an exact basis, with lazy Plücker coordinates."""

    def __init__(self, field: Field, ambient: int, basis: Sequence[VectorK]):
        basis = tuple(basis)
        if any(v.n != ambient for v in basis):
            raise ValueError("basis vector of wrong length")
        if basis:
            _, pivots = _rref([list(v.entries) for v in basis], field)
            if len(pivots) != len(basis):
                raise ValueError("basis rows are not linearly independent")
        self.field = field
        self.ambient = ambient
        self.basis = basis
        self._plucker: VectorK | None = None

    @classmethod
    def full(cls, field: Field, n: int) -> "Subspace":
        return cls(field, n, [VectorK.of(field, [1 if i == j else 0 for j in range(n)]) for i in range(n)])

    @classmethod
    def zero(cls, field: Field, n: int) -> "Subspace":
        return cls(field, n, [])

    @property
    def dim(self) -> int:
        return len(self.basis)

    def contains(self, y: VectorK) -> bool:
        if y.is_zero:
            return True
        if self.dim == 0:
            return False
        rows = [list(v.entries) for v in self.basis] + [list(y.entries)]
        _, pivots = _rref(rows, self.field)
        return len(pivots) == self.dim

    def with_vector(self, y: VectorK) -> "Subspace":
        if self.contains(y):
            raise ValueError("vector already lies in the subspace")
        return Subspace(self.field, self.ambient, self.basis + (y,))

    def plucker(self) -> VectorK:
        """Primitive Plücker coordinate vector (lexicographic minor order)."""
        if self.dim == 0:
            raise ValueError("Plücker coordinates need dimension >= 1")
        if self._plucker is None:
            raw = wedge_coordinates(self.basis)
            self._plucker = primitive_vector(raw)
        return self._plucker

    def equals(self, other: "Subspace") -> bool:
        if self.ambient != other.ambient or self.dim != other.dim:
            return False
        if self.dim == 0:
            return True
        rows = [list(v.entries) for v in self.basis] + [list(v.entries) for v in other.basis]
        _, pivots = _rref(rows, self.field)
        return len(pivots) == self.dim

    def __repr__(self) -> str:
        return f"Subspace(dim {self.dim} of K^{self.ambient})"


def determinant(rows: list[list[Scalar]], field: Field) -> Scalar:
    """Exact determinant by fraction-based elimination with pivoting."""
    n = len(rows)
    rows = [list(r) for r in rows]
    det = field.one()
    for c in range(n):
        pivot = next((i for i in range(c, n) if not rows[i][c].is_zero), None)
        if pivot is None:
            return field.zero()
        if pivot != c:
            rows[c], rows[pivot] = rows[pivot], rows[c]
            det = -det
        det = det * rows[c][c]
        inv = rows[c][c].inverse()
        for i in range(c + 1, n):
            if not rows[i][c].is_zero:
                f = rows[i][c] * inv
                rows[i] = [x - f * y for x, y in zip(rows[i], rows[c])]
    return det


def wedge_coordinates(vectors: Sequence[VectorK]) -> VectorK:
    """All l x l minors of the stacked rows, lexicographic on column subsets."""
    vectors = tuple(vectors)
    ell = len(vectors)
    if ell == 0:
        raise ValueError("wedge of zero vectors")
    field = vectors[0].field
    n = vectors[0].n
    out = []
    for cols in combinations(range(n), ell):
        sub = [[v.entries[c] for c in cols] for v in vectors]
        out.append(determinant(sub, field))
    return VectorK(field, tuple(out))


def rational_content(values: Iterator[Fraction]) -> Fraction:
    """gcd of numerators / lcm of denominators over the nonzero values (0 if none)."""
    num = 0
    den = 1
    for q in values:
        if q == 0:
            continue
        num = math.gcd(num, q.numerator)
        den = den * q.denominator // math.gcd(den, q.denominator)
    return Fraction(num, den)


def vector_content(v: VectorK) -> Fraction:
    return rational_content(q for x in v.entries for q in (x.a, x.b))


def matrix_content(T: MatrixK) -> Fraction:
    return rational_content(q for row in T.rows for x in row for q in (x.a, x.b))


def primitive_vector(v: VectorK) -> VectorK:
    """Strip the rational content; over Q also normalize the sign.

    Over Q the result is the integer vector with content 1 whose first
    nonzero entry is positive.  Over quadratic fields only rational content
    is removed (unit normalization is out of reach), plus a rational sign.
    """
    c = vector_content(v)
    if c == 0:
        return v
    out = v.scale(Fraction(1) / c)
    lead = next((x for x in out.entries if not x.is_zero), None)
    if lead is not None:
        key = lead.a if lead.a != 0 else lead.b
        if key < 0:
            out = out.scale(-1)
    return out


def strip_matrix(T: MatrixK) -> tuple[MatrixK, Fraction]:
    """(T / content, content); the zero matrix is returned unchanged with 1."""
    c = matrix_content(T)
    if c == 0:
        return T, Fraction(1)
    return T.scale(Fraction(1) / c), c


def kernel(T: MatrixK) -> Subspace:
    """Exact kernel basis; dimension 0 when T is invertible."""
    field = T.field
    n = T.n
    rows, pivots = _rref([list(r) for r in T.rows], field)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        vec = [field.zero()] * n
        vec[fc] = field.one()
        for r, pc in enumerate(pivots):
            vec[pc] = -rows[r][fc]
        basis.append(VectorK(field, tuple(vec)))
    return Subspace(field, n, basis)


def stable_kernel(T: MatrixK) -> Subspace:
    """kernel(T^n), which equals kernel(T^k) for every k >= n."""
    return kernel(T.pow_plain(T.n))


def power_stripped(T: MatrixK, k: int, bits_budget: int | None = None) -> tuple[MatrixK, Fraction]:
    """T^k by repeated squaring with rational-content stripping.

    Returns (M, c) with c * M = T^k exactly; M has rational content 1.
    Raises ResourceBudgetError when an intermediate matrix exceeds the entry
    bit-size budget (env HEIGHTLAB_BITS_BUDGET, default 10^7 bits).
    """
    if k < 1:
        raise ValueError("power_stripped needs k >= 1")
    budget = bits_budget if bits_budget is not None else bits_budget_default()
    if T.is_zero:
        return T, Fraction(1)
    base, base_c = strip_matrix(T)
    result: MatrixK | None = None
    result_c = Fraction(1)
    while True:
        if k & 1:
            if result is None:
                result, result_c = base, base_c
            else:
                result, c = strip_matrix(result @ base)
                result_c = result_c * base_c * c
        k >>= 1
        if not k:
            break
        sq, c = strip_matrix(base @ base)
        base, base_c = sq, base_c * base_c * c
        if base.max_entry_bits() > budget:
            raise ResourceBudgetError(f"matrix entries exceeded {budget} bits during exponentiation")
    assert result is not None
    if result.max_entry_bits() > budget:
        raise ResourceBudgetError(f"matrix entries exceeded {budget} bits during exponentiation")
    return result, result_c


def iter_stripped_squarings(
    T: MatrixK, jmax: int, bits_budget: int | None = None
) -> Iterator[tuple[int, int, MatrixK, Fraction]]:
    """Yield (j, 2^j, M_j, c_j) with c_j * M_j = T^(2^j), content-stripped."""
    budget = bits_budget if bits_budget is not None else bits_budget_default()
    cur, c = strip_matrix(T)
    yield 0, 1, cur, c
    for j in range(1, jmax + 1):
        sq = cur @ cur
        cur, extra = strip_matrix(sq)
        c = c * c * extra
        if cur.max_entry_bits() > budget:
            raise ResourceBudgetError(f"matrix entries exceeded {budget} bits at k = 2^{j}")
        yield j, 1 << j, cur, c


# ---------------------------------------------------------------------------
# text formats: nested bracket lists with scalar entry syntax, plus the JSON
# equivalent with string-encoded rationals

def _split_top_level(body: str) -> list[str]:
    parts = []
    depth = 0
    start = 0
    for i, ch in enumerate(body):
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth < 0:
                raise ParseError("unbalanced brackets", i)
        elif ch == "," and depth == 0:
            parts.append(body[start:i])
            start = i + 1
    if depth != 0:
        raise ParseError("unbalanced brackets")
    parts.append(body[start:])
    return parts


def parse_vector(text: str, field: Field) -> VectorK:
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError(f"vector must be bracketed: {text!r}")
    items = _split_top_level(s[1:-1])
    if items == [""]:
        raise ParseError("empty vector")
    return VectorK(field, tuple(field.parse_scalar(t) for t in items))


def parse_matrix(text: str, field: Field) -> MatrixK:
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        raise ParseError(f"matrix must be bracketed: {text!r}")
    rows = _split_top_level(s[1:-1])
    parsed = [parse_vector(r, field) for r in rows]
    n = len(parsed)
    if any(v.n != n for v in parsed):
        raise ParseError("matrix must be square")
    return MatrixK(field, tuple(v.entries for v in parsed))
