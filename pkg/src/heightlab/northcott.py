"""Bounded-height enumeration over Q: projective points, invertible
endomorphism classes, and rank-one classes with a kernel-height cap.

Projective classes are represented by primitive sign-normalized integer
vectors/matrices (content 1, first nonzero entry positive), which are unique,
so deduplication is by construction.  Height-bound membership is decided
exactly: for a primitive integer matrix the finite part of H is 1 and
H(T) = sigma_max(T), and sigma_max <= B is the exact rational statement that
all derivatives of det(xI - T^t T) are nonnegative at B^2.

The middle ranks (1 < rank < n) carry no certified enumeration; a best-effort
scan reports candidates with an explicit non-certified flag.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

from .numutil import as_fraction, content_gcd, iter_primitive_vectors
from .numberfield import Field
from .exactlinalg import MatrixK, Subspace, VectorK, char_poly, kernel, rank
from .heights import OperatorHeightResult, height_matrix, height_operator, height_subspace, height_vector
from .values import HeightValue

_QQ = Field.rational()


@dataclass(frozen=True)
class ProjectivePoint:
    """A projective class over Q: primitive sign-normalized integer vector."""

    coords: tuple[int, ...]
    norm_sq: int  # exact squared Euclidean norm of the representative

    @classmethod
    def of(cls, coords: tuple[int, ...]) -> "ProjectivePoint":
        return cls(coords, sum(c * c for c in coords))

    @property
    def height(self) -> HeightValue:
        # primitive integer vector: finite part is exactly 1
        return HeightValue.from_parts({}, 0.5 * math.log(self.norm_sq))

    def vector(self) -> VectorK:
        return VectorK.of(_QQ, self.coords)

    def __str__(self) -> str:
        return "(" + ",".join(str(c) for c in self.coords) + ")"


@dataclass(frozen=True)
class EndoClass:
    """A projective endomorphism class over Q with its operator height data."""

    entries: tuple[tuple[int, ...], ...]
    rank: int
    op_height: OperatorHeightResult
    kernel_height: HeightValue | None = None
    certified: bool = True

    def matrix(self) -> MatrixK:
        return MatrixK.of(_QQ, self.entries)

    def key(self) -> tuple:
        return self.entries

    def __str__(self) -> str:
        return "[" + ";".join(",".join(str(x) for x in row) for row in self.entries) + "]"


def enum_projective_points(n: int, bound) -> list[ProjectivePoint]:
    """All projective classes of K^n (K = Q) with height <= bound, exactly.

    A class's height is the Euclidean norm of its primitive representative
    (finite part 1), so membership is the exact test sum x_i^2 <= bound^2.
    """
    b = as_fraction(bound)
    if b < 1:
        return []
    pts = [ProjectivePoint.of(t) for t in iter_primitive_vectors(n, b * b)]
    pts.sort(key=lambda p: p.coords)
    return pts


def max_eigenvalue_at_most(G: MatrixK, beta: Fraction) -> bool:
    """Exact test lambda_max(G) <= beta for a symmetric PSD rational matrix.

    det(xI - G) has only real roots; they all lie at or below beta iff every
    derivative of the characteristic polynomial is nonnegative at beta
    (Taylor expansion at beta has no room for a larger root otherwise).
    """
    coeffs = [c.a for c in char_poly(G).coeffs]  # ascending, exact rationals
    while coeffs:
        val = Fraction(0)
        for c in reversed(coeffs):
            val = val * beta + c
        if val < 0:
            return False
        coeffs = [i * c for i, c in enumerate(coeffs)][1:]  # derivative
    return True


def _matrix_height_at_most(rows: tuple[tuple[int, ...], ...], bound_sq: Fraction) -> bool:
    T = MatrixK.of(_QQ, rows)
    gram = T.transpose() @ T
    return max_eigenvalue_at_most(gram, bound_sq)


def _scan_matrices(n: int, box: int, first_range: tuple[int, ...], row_norm_sq_cap: Fraction | None = None):
    """DFS over primitive sign-normalized integer matrices.

    When a cap is given, rows whose squared norm exceeds it are pruned during
    the scan (sound for height bounds: sigma_max dominates every row norm).
    """
    total = n * n
    flat = [0] * total

    def rec(i: int, started: bool, row_sq: int):
        if i == total:
            if started and content_gcd(abs(x) for x in flat) == 1:
                yield tuple(tuple(flat[r * n : (r + 1) * n]) for r in range(n))
            return
        if i % n == 0:
            row_sq = 0
        rng = first_range if i == 0 else range(0 if not started else -box, box + 1)
        for val in rng:
            sq = row_sq + val * val
            if row_norm_sq_cap is not None and sq > row_norm_sq_cap:
                if val > 0:
                    break
                continue
            flat[i] = val
            yield from rec(i + 1, started or val > 0, sq)
            flat[i] = 0

    yield from rec(0, False, 0)


def _invertible_chunk(args) -> list[tuple[tuple[int, ...], ...]]:
    """Scan the sign-normalized box restricted to the given first-entry values."""
    n, box, bound_sq_str, firsts = args
    bound_sq = Fraction(bound_sq_str)
    out = []
    for rows in _scan_matrices(n, box, tuple(firsts), bound_sq):
        T = MatrixK.of(_QQ, rows)
        if kernel(T).dim != 0:
            continue
        if _matrix_height_at_most(rows, bound_sq):
            out.append(rows)
    return out


def enum_invertible_endos(n: int, bound, workers: int = 1) -> list[EndoClass]:
    """All invertible projective classes with H(T) <= bound, exactly.

    Completeness: a primitive integer matrix has finite height factor 1 and
    sigma_max >= max |t_ij|, so H(T) <= B confines every entry to [-B, B].
    The scan partitions by the leading entry when workers > 1; the merged
    result is sorted, so the output is identical for any worker count.
    """
    b = as_fraction(bound)
    if b < 1:
        return []
    box = int(b)
    bound_sq = b * b
    firsts = list(range(0, box + 1))  # sign normalization: first entry >= 0
    if workers > 1:
        chunks = [(n, box, str(bound_sq), [f]) for f in firsts]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            found = [rows for chunk in pool.map(_invertible_chunk, chunks) for rows in chunk]
    else:
        found = _invertible_chunk((n, box, str(bound_sq), firsts))
    found.sort()
    return [
        EndoClass(entries=rows, rank=n, op_height=height_operator(MatrixK.of(_QQ, rows)))
        for rows in found
    ]


def enum_rank1_endos(n: int, bound, kernel_bound) -> list[EndoClass]:
    """All rank-one classes u w^t with H(image line) <= bound and
    H(ker) <= kernel_bound, via hyperplane duality H(w-perp) = H(w)."""
    b = as_fraction(bound)
    c = as_fraction(kernel_bound)
    if b < 1 or c < 1:
        return []
    us = enum_projective_points(n, b)
    ws = enum_projective_points(n, c)
    out = []
    for u in us:
        for w in ws:
            rows = tuple(tuple(ui * wj for wj in w.coords) for ui in u.coords)
            T = MatrixK.of(_QQ, rows)
            ker = kernel(T)
            out.append(
                EndoClass(
                    entries=rows,
                    rank=1,
                    op_height=OperatorHeightResult(kind="exact", rank=1, value=u.height, kernel=ker),
                    kernel_height=w.height,  # duality: H(w-perp) = H(w) over Q
                )
            )
    out.sort(key=lambda e: e.entries)
    return out


@dataclass(frozen=True)
class Rank1DemoRow:
    index: int
    entries: tuple[tuple[int, ...], ...]
    op_height: HeightValue
    kernel_height: HeightValue
    kernel_norm_sq: int


def rank1_unbounded_demo(count: int) -> list[Rank1DemoRow]:
    """Pairwise non-homothetic rank-one maps with identical operator height
    sqrt(2) but kernel heights growing without bound: the reason the rank-one
    stratum needs a kernel cap."""
    rows = []
    for idx in range(1, count + 1):
        T = MatrixK.of(_QQ, [[1, idx], [1, idx]])
        res = height_operator(T)
        ker = res.kernel
        rows.append(
            Rank1DemoRow(
                index=idx,
                entries=((1, idx), (1, idx)),
                op_height=res.value,
                kernel_height=height_subspace(ker),
                kernel_norm_sq=idx * idx + 1,
            )
        )
    return rows


def scan_midrank_candidates(n: int, bound, box: int | None = None) -> list[EndoClass]:
    """Best-effort scan of classes with 1 < rank < n whose rigorous upper
    bound H(T) is <= bound.  Membership in {H^op <= bound} is NOT certified
    (the middle-rank operator height has no closed form); every returned
    class is flagged accordingly."""
    b = as_fraction(bound)
    box = box if box is not None else int(b)
    out = []
    for rows in _scan_matrices(n, box, tuple(range(0, box + 1)), b * b):
        T = MatrixK.of(_QQ, rows)
        r = rank(T)
        if not 1 < r < n:
            continue
        if not _matrix_height_at_most(rows, b * b):
            continue
        res = height_operator(T, search_bound=b)
        out.append(EndoClass(entries=rows, rank=r, op_height=res, certified=False))
    out.sort(key=lambda e: e.entries)
    return out
