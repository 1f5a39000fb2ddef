"""Global height functions assembled from local data.

Heights are products over all places of local norms raised to d_v.  The
finite support is detected exactly: after stripping rational content, a prime
can contribute only if it divides every entry's relative norm, so supports
come from factoring a single gcd.  Finite parts are exact prime-power
products; archimedean factors are floats carried in log space.

Adelic norms other than the standard one are represented by finite twist
sets: a map from finitely many places to invertible matrices, standard norm
elsewhere.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import DegenerateInputError
from .numutil import as_fraction, content_gcd, is_prime, iter_primitive_vectors, prime_divisors
from .numberfield import Field, Place, Scalar, scalar_support
from .exactlinalg import (
    MatrixK,
    Subspace,
    VectorK,
    char_poly,
    kernel,
    primitive_vector,
    rank,
    strip_matrix,
    wedge_coordinates,
)
from .localanalysis import (
    operator_norm_arch,
    operator_norm_finite,
    spectral_radius_arch,
    spectral_radius_of_poly,
    vector_norm,
)
from .values import HeightValue

DEFAULT_SEARCH_BOUND = Fraction(10)
DEFAULT_COMPARISON_CONSTANT = 1e3


@dataclass(frozen=True)
class TwistSpec:
    """An adelic norm given by finitely many twisted places.

    At each listed place v the local norm is x -> ||A_v x||_v with A_v
    invertible; everywhere else the standard norm applies.
    """

    twists: tuple[tuple[Place, MatrixK], ...] = ()

    def __post_init__(self):
        for place, mat in self.twists:
            if rank(mat) != mat.n:
                raise ValueError(f"twist matrix at {place} is singular")
            if mat.field != place.field:
                raise ValueError("twist matrix field does not match its place")

    @classmethod
    def identity(cls) -> "TwistSpec":
        return cls()

    @classmethod
    def at(cls, *pairs: tuple[Place, MatrixK]) -> "TwistSpec":
        return cls(tuple(pairs))

    def matrix_at(self, v: Place) -> MatrixK | None:
        for place, mat in self.twists:
            if place == v:
                return mat
        return None

    def finite_primes(self) -> tuple[int, ...]:
        return tuple(sorted({p.p for p, _ in self.twists if p.is_finite}))


def _collection_support(entries: tuple[Scalar, ...], field: Field) -> tuple[int, ...]:
    """Primes where the sup of the (content-stripped) entries can differ from 1.

    Entries must have integral parts with joint rational content 1.  The sup
    norm at v | p is below 1 only if every entry has positive valuation,
    which forces p to divide every relative norm; primes show up in the gcd.
    """
    if field.kind == "rational":
        return ()  # a primitive integer vector is a unit vector at every p
    g = content_gcd(abs(x.relative_norm().numerator) for x in entries if not x.is_zero)
    return prime_divisors(g) if g not in (0, 1) else ()


def height_vector(x: VectorK, twist: TwistSpec | None = None) -> HeightValue:
    """Height of a vector for the standard (or twisted) adelic norm; H(0) = 1."""
    if x.is_zero:
        return HeightValue.one()
    field = x.field
    xs = primitive_vector(x)
    support = set(_collection_support(xs.entries, field))
    if twist is not None:
        support.update(twist.finite_primes())
    finite: dict[int, Fraction] = {}
    for p in sorted(support):
        for v in field.places_above(p):
            vec = xs
            if twist is not None:
                mat = twist.matrix_at(v)
                if mat is not None:
                    vec = mat.apply(xs)
            mag = vector_norm(vec, v)
            if mag.exponent:
                finite[p] = finite.get(p, Fraction(0)) + mag.exponent * v.d_v
    log_arch = 0.0
    err = 0.0
    for v in field.archimedean_places():
        vec = xs
        if twist is not None:
            mat = twist.matrix_at(v)
            if mat is not None:
                vec = mat.apply(xs)
        mag = vector_norm(vec, v)
        log_arch += float(v.d_v) * mag.log_value
        err += float(v.d_v) * mag.rel_err
    return HeightValue.from_parts(finite, log_arch, err)


def height_matrix(T: MatrixK, tol: float = 1e-9) -> HeightValue:
    """H(T): sup of entry magnitudes at finite places, largest singular value
    at archimedean ones; H(0) = 1."""
    if T.is_zero:
        return HeightValue.one()
    field = T.field
    Ts, _ = strip_matrix(T)
    entries = tuple(x for row in Ts.rows for x in row)
    finite: dict[int, Fraction] = {}
    for p in _collection_support(entries, field):
        for v in field.places_above(p):
            mag = operator_norm_finite(Ts, v)
            if mag.exponent:
                finite[p] = finite.get(p, Fraction(0)) + mag.exponent * v.d_v
    log_arch = 0.0
    err = 0.0
    for v in field.archimedean_places():
        mag = operator_norm_arch(Ts, v, tol)
        log_arch += float(v.d_v) * mag.log_value
        err += float(v.d_v) * mag.rel_err
    return HeightValue.from_parts(finite, log_arch, err)


def height_spectral(T: MatrixK, tol: float = 1e-9) -> HeightValue:
    """Spectral height: product of local spectral radii; 1 for nilpotent T."""
    Ts, _ = strip_matrix(T)
    f = char_poly(Ts)
    if f.is_power_of_x:
        return HeightValue.one()
    field = T.field
    support: set[int] = set()
    for c in f.coeffs[:-1]:
        support.update(scalar_support(c))
    finite: dict[int, Fraction] = {}
    for p in sorted(support):
        for v in field.places_above(p):
            mag = spectral_radius_of_poly(f, v)
            if mag.exponent:
                finite[p] = finite.get(p, Fraction(0)) + mag.exponent * v.d_v
    log_arch = 0.0
    err = 0.0
    for v in field.archimedean_places():
        mag = spectral_radius_arch(Ts, v, tol)
        log_arch += float(v.d_v) * mag.log_value
        err += float(v.d_v) * mag.rel_err
    return HeightValue.from_parts(finite, log_arch, err)


def height_subspace(X: Subspace) -> HeightValue:
    """H(X) = height of the Plücker coordinate vector; H({0}) = H(K^n) = 1."""
    if X.dim == 0:
        return HeightValue.one()
    return height_vector(X.plucker())


def distance(y: VectorK, X: Subspace) -> HeightValue:
    """d_X(y): product over places of local distances from y to X.

    Computed as H(wedge(basis, y)) / H(wedge(basis)), which multiplies the
    per-place seminorm ratios and is independent of the chosen basis.  For
    the zero subspace this is just H(y).
    """
    if X.dim == 0:
        return height_vector(y)
    if X.contains(y):
        raise DegenerateInputError("vector lies in the subspace; distance is 0")
    num = wedge_coordinates(X.basis + (y,))
    den = wedge_coordinates(X.basis)
    return height_vector(num) / height_vector(den)


@dataclass(frozen=True)
class OperatorHeightResult:
    """Operator height across the rank trichotomy.

    kind "exact": value holds H^op (invertible: H(T); rank one: height of the
    image line).  kind "bounded": rigorous upper bound H(T), a lower bound
    H(T) / (c_hat * H(ker T)) whose constant c_hat is an empirical stand-in
    (not rigorous), and an enumerated empirical lower bound with witness.
    """

    kind: str  # "exact" | "bounded"
    rank: int
    value: HeightValue | None = None
    lower: HeightValue | None = None
    upper: HeightValue | None = None
    empirical_lower: HeightValue | None = None
    witness: VectorK | None = None
    constant_assumed: float | None = None
    kernel: Subspace | None = None

    @property
    def certified(self) -> bool:
        return self.kind == "exact"

    def best_value(self) -> HeightValue:
        return self.value if self.value is not None else self.empirical_lower

    def to_json(self) -> dict:
        out = {"kind": self.kind, "rank": self.rank, "certified": self.certified}
        if self.value is not None:
            out["value"] = self.value.to_json()
        if self.upper is not None:
            out["upper"] = self.upper.to_json()
            out["lower"] = self.lower.to_json()
            out["lowerConstantAssumed"] = self.constant_assumed
            out["empiricalLower"] = self.empirical_lower.to_json()
            out["witness"] = str(self.witness)
        return out


def _first_nonzero_column(T: MatrixK) -> VectorK:
    for j in range(T.n):
        col = T.column(j)
        if not col.is_zero:
            return col
    raise ValueError("zero matrix has no nonzero column")


def height_operator(
    T: MatrixK,
    search_bound=None,
    c_hat: float = DEFAULT_COMPARISON_CONSTANT,
    tol: float = 1e-9,
) -> OperatorHeightResult:
    """H^op(T) = sup H(Tx)/H(x): exact for invertible and rank-one maps,
    a bounded bracket with an enumerated empirical lower bound otherwise."""
    n = T.n
    ker = kernel(T)
    r = n - ker.dim
    if r == n:
        return OperatorHeightResult(kind="exact", rank=r, value=height_matrix(T, tol), kernel=ker)
    if r == 0:
        return OperatorHeightResult(kind="exact", rank=0, value=HeightValue.one(), kernel=ker)
    if r == 1:
        image = _first_nonzero_column(T)
        return OperatorHeightResult(kind="exact", rank=1, value=height_vector(image), kernel=ker)
    upper = height_matrix(T, tol)
    ker_height = height_subspace(ker)
    lower = HeightValue.from_parts(
        {}, upper.log_value - ker_height.log_value - math.log(c_hat), upper.arch_err + ker_height.arch_err
    )
    bound = as_fraction(search_bound if search_bound is not None else DEFAULT_SEARCH_BOUND)
    best: HeightValue | None = None
    best_y: VectorK | None = None
    for pt in iter_primitive_vectors(n, bound * bound):
        y = VectorK.of(T.field, pt)
        if ker.contains(y):
            continue
        ratio = height_vector(T.apply(y)) / height_vector(y)
        if best is None or ratio.log_value > best.log_value:
            best, best_y = ratio, y
    return OperatorHeightResult(
        kind="bounded",
        rank=r,
        lower=lower,
        upper=upper,
        empirical_lower=best,
        witness=best_y,
        constant_assumed=c_hat,
        kernel=ker,
    )


def prop31_sup(T: MatrixK, bound) -> tuple[HeightValue, VectorK]:
    """Empirical sup of H(T y) / d_X(y) over projective points of height <= bound,
    X = ker T.  The true sup equals H(T); enumerated values never exceed it."""
    if T.is_zero:
        raise ValueError("needs a nonzero matrix")
    bound = as_fraction(bound)
    X = kernel(T)
    best: HeightValue | None = None
    best_y: VectorK | None = None
    for pt in iter_primitive_vectors(T.n, bound * bound):
        y = VectorK.of(T.field, pt)
        if X.contains(y):
            continue
        val = height_vector(T.apply(y)) / distance(y, X)
        if best is None or val.log_value > best.log_value:
            best, best_y = val, y
    if best is None:
        raise ValueError("no admissible points below the bound")
    return best, best_y


@dataclass(frozen=True)
class RemarkDemo:
    """Evaluation of the non-adelic norm family N_p(x1, x2) = max(|x1|_p, |p x2|_p)
    at (q, 1): its pseudo-height collapses to 1 while the l2 height grows."""

    q: int
    pseudo_finite: Fraction
    pseudo_arch: Fraction
    pseudo_height: Fraction
    weil: HeightValue
    ratio: float
    ratio_squared: Fraction


def _pseudo_norm_finite(x1: Fraction, x2: Fraction, p: int) -> Fraction:
    from .numutil import fraction_valuation

    best: Fraction | None = None
    if x1 != 0:
        best = Fraction(p) ** (-fraction_valuation(x1, p))
    if x2 != 0:
        cand = Fraction(p) ** (-(1 + fraction_valuation(x2, p)))
        best = cand if best is None or cand > best else best
    return best if best is not None else Fraction(0)


def remark_demo(q: int) -> RemarkDemo:
    """Exact evaluation of the pseudo-height at (q, 1) for a prime q."""
    if not is_prime(q):
        raise ValueError(f"{q} is not prime")
    x1, x2 = Fraction(q), Fraction(1)
    support: set[int] = set()
    for val in (x1, x2):
        support.update(prime_divisors(val.numerator))
        support.update(prime_divisors(val.denominator))
    fin = Fraction(1)
    for p in sorted(support):
        fin *= _pseudo_norm_finite(x1, x2, p)
    arch = max(abs(x1), abs(x2))
    pseudo = fin * arch
    field = Field.rational()
    weil = height_vector(VectorK.of(field, [q, 1]))
    ratio = weil.value / float(pseudo)
    return RemarkDemo(
        q=q,
        pseudo_finite=fin,
        pseudo_arch=arch,
        pseudo_height=pseudo,
        weil=weil,
        ratio=ratio,
        ratio_squared=Fraction(q) ** 2 + 1,
    )


def comparison_constant(
    twist: TwistSpec,
    sample_count: int = 200,
    seed: int = 0,
    field: Field | None = None,
    dim: int | None = None,
) -> tuple[float, float]:
    """Sampled (min, max) of H_twisted(x) / H(x) over random primitive vectors.

    The max is a lower witness for the true norm-equivalence constant of the
    twisted adelic norm against the standard one.
    """
    import random

    if twist.twists:
        field = twist.twists[0][1].field
        dim = twist.twists[0][1].n
    if field is None or dim is None:
        raise ValueError("identity twist needs explicit field and dim")
    rng = random.Random(seed)
    lo, hi = math.inf, -math.inf
    produced = 0
    while produced < sample_count:
        coords = []
        for _ in range(dim):
            a = rng.randint(-20, 20)
            b = rng.randint(-20, 20) if field.kind == "quadratic" else 0
            coords.append(field.scalar(a, b))
        x = VectorK(field, tuple(coords))
        if x.is_zero:
            continue
        produced += 1
        diff = (height_vector(x, twist) / height_vector(x)).log_value
        lo, hi = min(lo, diff), max(hi, diff)
    return math.exp(lo), math.exp(hi)


def siegel_ratio(X: Subspace, y: VectorK, coeff_bound: int = 3) -> tuple[float, VectorK]:
    """Observed inf_x H(y - x) / (d_X(y) H(X)) over small integer combinations
    of the basis.  Reported for inspection only; no bound is asserted."""
    if X.contains(y):
        raise DegenerateInputError("vector lies in the subspace")
    best: HeightValue | None = None
    best_x: VectorK | None = None

    def combos(i: int, acc: VectorK):
        nonlocal best, best_x
        if i == X.dim:
            h = height_vector(y - acc)
            if best is None or h.log_value < best.log_value:
                best, best_x = h, acc
            return
        for c in range(-coeff_bound, coeff_bound + 1):
            combos(i + 1, acc + X.basis[i].scale(c))

    zero = VectorK.of(X.field, [0] * X.ambient)
    combos(0, zero)
    denom = distance(y, X) * height_subspace(X)
    return math.exp(best.log_value - denom.log_value), best_x
