"""Fields Q and Q(sqrt m): elements, places, and normalized absolute values.

Finite absolute values are normalized by |p|_v = p^{-1}; archimedean ones
restrict to the standard absolute value on Q.  Local degrees n_v and weights
d_v = n_v/d follow the usual splitting of rational primes in a quadratic
field.  All finite-place magnitudes are exact (p, rational exponent) pairs;
archimedean magnitudes are floats kept in log space.

Valuations over quadratic fields come from the relative norm at inert and
ramified places, and from Hensel-lifted root branches of X^2 - m at split
places, with precision raised adaptively until the valuation is resolved.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field as dc_field
from fractions import Fraction
from functools import lru_cache

from .errors import ParseError
from .numutil import (
    LN2,
    fraction_log,
    fraction_scaled_float,
    fraction_valuation,
    is_prime,
    prime_divisors,
    sqrt_mod_prime,
)
from .values import HeightValue, LocalMagnitude

_FIELD_RE = re.compile(r"^Q(?:\((i|sqrt(-?\d+))\))?$")


def _squarefree(n: int) -> bool:
    n = abs(n)
    d = 2
    while d * d <= n:
        if n % (d * d) == 0:
            return False
        d += 1
    return True


@dataclass(frozen=True)
class Field:
    """Q or a quadratic field Q(sqrt m), m squarefree and not 0 or 1."""

    kind: str  # "rational" | "quadratic"
    m: int = 0

    def __post_init__(self):
        if self.kind not in ("rational", "quadratic"):
            raise ValueError(f"unknown field kind {self.kind!r}")
        if self.kind == "quadratic":
            if self.m in (0, 1) or not _squarefree(self.m):
                raise ValueError(f"m = {self.m} is not a valid quadratic discriminant base")
        elif self.m != 0:
            raise ValueError("rational field takes no m")

    @staticmethod
    def rational() -> "Field":
        return Field("rational")

    @staticmethod
    def quadratic(m: int) -> "Field":
        return Field("quadratic", m)

    @staticmethod
    def parse(text: str) -> "Field":
        """Parse "Q", "Q(i)", "Q(sqrt2)", "Q(sqrt-5)"."""
        mobj = _FIELD_RE.match(text.strip())
        if not mobj:
            raise ParseError(f"cannot parse field {text!r}")
        if mobj.group(1) is None:
            return Field.rational()
        if mobj.group(1) == "i":
            return Field.quadratic(-1)
        return Field.quadratic(int(mobj.group(2)))

    @property
    def degree(self) -> int:
        return 1 if self.kind == "rational" else 2

    @property
    def discriminant(self) -> int | None:
        if self.kind == "rational":
            return None
        return self.m if self.m % 4 == 1 else 4 * self.m

    @property
    def label(self) -> str:
        if self.kind == "rational":
            return "Q"
        if self.m == -1:
            return "Q(i)"
        return f"Q(sqrt{self.m})"

    def scalar(self, a, b=0) -> "Scalar":
        if self.kind == "rational" and b != 0:
            raise ValueError("rational field scalars have no sqrt part")
        return Scalar(self, Fraction(a), Fraction(b))

    def zero(self) -> "Scalar":
        return self.scalar(0)

    def one(self) -> "Scalar":
        return self.scalar(1)

    def parse_scalar(self, text: str) -> "Scalar":
        return _parse_scalar(self, text)

    def archimedean_places(self) -> tuple["Place", ...]:
        return _archimedean_places(self)

    def places_above(self, p: int) -> tuple["Place", ...]:
        return _places_above(self, p)

    def __str__(self) -> str:
        return self.label


QQ = Field.rational()


@dataclass(frozen=True)
class Scalar:
    """An exact element a + b*sqrt(m) of the field (b = 0 over Q)."""

    field: Field
    a: Fraction
    b: Fraction = dc_field(default_factory=lambda: Fraction(0))

    def _check(self, other: "Scalar"):
        if self.field != other.field:
            raise ValueError("scalars from different fields")

    @property
    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    @property
    def is_rational(self) -> bool:
        return self.b == 0

    def __bool__(self) -> bool:
        return not self.is_zero

    def _coerce(self, x) -> "Scalar":
        if isinstance(x, Scalar):
            self._check(x)
            return x
        return Scalar(self.field, Fraction(x), Fraction(0))

    def __add__(self, other) -> "Scalar":
        o = self._coerce(other)
        return Scalar(self.field, self.a + o.a, self.b + o.b)

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        return Scalar(self.field, -self.a, -self.b)

    def __sub__(self, other) -> "Scalar":
        return self + (-self._coerce(other))

    def __rsub__(self, other) -> "Scalar":
        return self._coerce(other) - self

    def __mul__(self, other) -> "Scalar":
        o = self._coerce(other)
        if self.field.kind == "rational":
            return Scalar(self.field, self.a * o.a, Fraction(0))
        m = self.field.m
        return Scalar(self.field, self.a * o.a + m * self.b * o.b, self.a * o.b + self.b * o.a)

    __rmul__ = __mul__

    def conjugate(self) -> "Scalar":
        return Scalar(self.field, self.a, -self.b)

    def relative_norm(self) -> Fraction:
        """N(a + b sqrt m) = a^2 - m b^2 (just a over Q)."""
        if self.field.kind == "rational":
            return self.a
        return self.a * self.a - self.field.m * self.b * self.b

    def inverse(self) -> "Scalar":
        if self.is_zero:
            raise ZeroDivisionError("scalar inverse of 0")
        if self.field.kind == "rational":
            return Scalar(self.field, 1 / self.a, Fraction(0))
        n = self.relative_norm()
        return Scalar(self.field, self.a / n, -self.b / n)

    def __truediv__(self, other) -> "Scalar":
        return self * self._coerce(other).inverse()

    def __rtruediv__(self, other) -> "Scalar":
        return self._coerce(other) / self

    def __pow__(self, k: int) -> "Scalar":
        if k < 0:
            return self.inverse() ** (-k)
        out = self.field.one()
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __str__(self) -> str:
        if self.b == 0:
            return str(self.a)
        bt = f"{abs(self.b)}*r" if abs(self.b) != 1 else "r"
        sign = "+" if self.b > 0 else "-"
        if self.a == 0:
            return bt if self.b > 0 else f"-{bt}"
        return f"{self.a}{sign}{bt}"


_TERM_RE = re.compile(r"^(?:(?P<num>-?\d+)(?:/(?P<den>\d+))?)?(?P<r>\*?r)?$")


def _parse_scalar(field: Field, text: str) -> Scalar:
    """Parse "a/b" or "a/b+c/d*r" (r = sqrt m), with optional signs."""
    s = text.replace(" ", "")
    if not s:
        raise ParseError("empty scalar")
    # split into signed terms
    terms: list[str] = []
    start = 0
    for i in range(1, len(s)):
        if s[i] in "+-" and s[i - 1] not in "+-*/":
            terms.append(s[start:i])
            start = i
    terms.append(s[start:])
    a = Fraction(0)
    b = Fraction(0)
    seen_rat = seen_r = False
    for term in terms:
        sign = 1
        body = term
        if body and body[0] in "+-":
            sign = -1 if body[0] == "-" else 1
            body = body[1:]
        mobj = _TERM_RE.match(body)
        if not mobj or (mobj.group("num") is None and mobj.group("r") is None):
            raise ParseError(f"cannot parse scalar term {term!r} in {text!r}")
        num = mobj.group("num")
        coef = Fraction(int(num) if num else 1, int(mobj.group("den") or 1))
        if mobj.group("r"):
            if field.kind == "rational":
                raise ParseError(f"sqrt term {term!r} needs a quadratic field")
            if seen_r:
                raise ParseError(f"repeated sqrt term in {text!r}")
            seen_r = True
            b = sign * coef
        else:
            if seen_rat:
                raise ParseError(f"repeated rational term in {text!r}")
            seen_rat = True
            a = sign * coef
    return Scalar(field, a, b)


@dataclass(frozen=True)
class Place:
    """One equivalence class of absolute values, with local degree data.

    Finite places carry (p, e, f) and, when p splits, the residue seed of the
    chosen p-adic root branch of X^2 - m.  Archimedean places carry the
    embedding sign of sqrt(m) (real quadratic) or a single complex pair.
    """

    field: Field
    kind: str  # "finite" | "arch"
    p: int = 0
    e: int = 1
    f: int = 1
    branch: int = 0  # split places: canonical root seed (mod p, or mod 4 for p = 2)
    emb: int = 0  # arch: 0 -> sqrt(m) |-> +sqrt(m); 1 -> -sqrt(m)
    complex_pair: bool = False

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def n_v(self) -> int:
        if self.kind == "finite":
            return self.e * self.f
        return 2 if self.complex_pair else 1

    @property
    def d_v(self) -> Fraction:
        return Fraction(self.n_v, self.field.degree)

    @property
    def is_split(self) -> bool:
        return self.is_finite and self.field.degree == 2 and self.e == 1 and self.f == 1

    @property
    def label(self) -> str:
        if self.kind == "arch":
            if self.complex_pair or self.field.kind == "rational":
                return "inf"
            return "inf+" if self.emb == 0 else "inf-"
        if not self.is_split:
            return str(self.p)
        siblings = self.field.places_above(self.p)
        return f"{self.p}{'a' if self == siblings[0] else 'b'}"

    def __str__(self) -> str:
        return f"{self.field.label}:{self.label}"


@lru_cache(maxsize=None)
def _archimedean_places(field: Field) -> tuple[Place, ...]:
    if field.kind == "rational":
        return (Place(field, "arch"),)
    if field.m > 0:
        return (Place(field, "arch", emb=0), Place(field, "arch", emb=1))
    return (Place(field, "arch", complex_pair=True),)


@lru_cache(maxsize=None)
def _places_above(field: Field, p: int) -> tuple[Place, ...]:
    if not is_prime(p):
        raise ValueError(f"{p} is not prime")
    if field.kind == "rational":
        return (Place(field, "finite", p=p),)
    m = field.m
    if p == 2:
        r = m % 8
        if r == 1:
            # split; branches tagged by the root class mod 4
            return (
                Place(field, "finite", p=2, branch=1),
                Place(field, "finite", p=2, branch=3),
            )
        if r == 5:
            return (Place(field, "finite", p=2, f=2),)
        return (Place(field, "finite", p=2, e=2),)
    if m % p == 0:
        return (Place(field, "finite", p=p, e=2),)
    r = sqrt_mod_prime(m, p)
    if r is None:
        return (Place(field, "finite", p=p, f=2),)
    r = min(r, p - r)
    return (
        Place(field, "finite", p=p, branch=r),
        Place(field, "finite", p=p, branch=p - r),
    )


def archimedean_places(field: Field) -> tuple[Place, ...]:
    return field.archimedean_places()


def places_above(field: Field, p: int) -> tuple[Place, ...]:
    return field.places_above(p)


@lru_cache(maxsize=4096)
def _sqrt_mod_prime_power(m: int, p: int, seed: int, k: int) -> int:
    """Root r of X^2 = m mod p^k on the branch tagged by `seed`.

    Odd p: r = seed (mod p).  p = 2 (m = 1 mod 8): r = seed (mod 4), defined
    for k >= 3.
    """
    if p != 2:
        r = seed % p
        pk = p
        while pk < p**k:
            # Newton lift: r <- r - (r^2 - m) / (2r) mod pk^2
            pk2 = pk * pk
            r = (r - (r * r - m) * pow(2 * r, -1, pk2)) % pk2
            pk = pk2
        return r % p**k
    k = max(k, 3)
    # invariant: r^2 = m mod 2^t; any odd r works at t = 3 since m = 1 mod 8
    r, t = 1, 3
    while t < k:
        if (r * r - m) % (1 << (t + 1)):
            r += 1 << (t - 1)
        t += 1
    r %= 1 << k
    # the adjustments leave r mod 4 fixed; flip r -> -r to select the branch
    if r % 4 != seed % 4:
        r = (1 << k) - r
    assert (r * r - m) % (1 << k) == 0 and r % 4 == seed % 4
    return r


def _split_valuation(x: Scalar, place: Place) -> Fraction:
    """w(a + b sqrt m) at a split place, w(p) = 1, via the branch root of X^2 - m."""
    p, m = place.p, place.field.m
    a, b = x.a, x.b
    if b == 0:
        return Fraction(fraction_valuation(a, p))
    if a == 0:
        return Fraction(fraction_valuation(b, p))
    ta, tb = fraction_valuation(a, p), fraction_valuation(b, p)
    t = min(ta, tb)
    if ta != tb:
        return Fraction(t)
    scale = Fraction(p) ** (-t)
    a, b = a * scale, b * scale  # now both are p-adic units
    k = 8
    while True:
        pk = p**k
        r = _sqrt_mod_prime_power(m, p, place.branch, k)
        na = a.numerator * pow(a.denominator, -1, pk) % pk
        nb = b.numerator * pow(b.denominator, -1, pk) % pk
        val = (na + nb * r) % pk
        # mod 2^k roots only pin the 2-adic root mod 2^(k-1); keep a margin
        margin = k - 1 if p == 2 else k
        if val:
            w = 0
            while val % p == 0:
                val //= p
                w += 1
            if w < margin:
                return Fraction(t + w)
        k *= 2


def finite_valuation(x: Scalar, place: Place) -> Fraction:
    """Normalized valuation w(x) with w(p) = 1; x must be nonzero.

    Value group is (1/e)Z: integers at unramified places, half-integers at
    ramified ones.
    """
    if x.is_zero:
        raise ValueError("valuation of 0 is undefined")
    p = place.p
    if x.field.kind == "rational":
        return Fraction(fraction_valuation(x.a, p))
    if place.is_split:
        return _split_valuation(x, place)
    # inert or ramified: the place is Galois-stable, so w(x) = v_p(N(x)) / 2
    return Fraction(fraction_valuation(x.relative_norm(), p), 2)


def _sqrt_m_log(m: int) -> float:
    return 0.5 * math.log(abs(m))


def arch_abs_log(x: Scalar, place: Place) -> float:
    """log |sigma(x)| at an archimedean place; -inf for 0.  Cancellation-safe."""
    if x.is_zero:
        return float("-inf")
    if x.field.kind == "rational":
        return fraction_log(abs(x.a))
    m = x.field.m
    if place.complex_pair:
        # |a + b sqrt(m)|^2 = a^2 + |m| b^2 = N(x) exactly (m < 0)
        return 0.5 * fraction_log(x.relative_norm())
    sign = 1 if place.emb == 0 else -1
    return _real_abs_log(x.a, x.b, m, sign)


def _real_abs_log(a: Fraction, b: Fraction, m: int, sign: int) -> float:
    """log |a + sign*b*sqrt(m)| for m > 0, avoiding catastrophic cancellation."""
    if b == 0:
        return fraction_log(abs(a))
    if a == 0:
        return fraction_log(abs(b)) + _sqrt_m_log(m)
    la = fraction_log(abs(a))
    lb = fraction_log(abs(b)) + _sqrt_m_log(m)
    if abs(la - lb) > 45:
        return max(la, lb)
    opposing = (a > 0) != (sign * b > 0)
    if opposing:
        # |a + t| = |a^2 - m b^2| / |a - t|, and the denominator cannot cancel
        return fraction_log(abs(a * a - m * b * b)) - _real_abs_log(a, b, m, -sign)
    shift = int(max(la, lb) / LN2)
    va = fraction_scaled_float(a, shift)
    vb = fraction_scaled_float(b, shift) * math.sqrt(m) * sign
    return math.log(abs(va + vb)) + shift * LN2


def embed_scaled(x: Scalar, place: Place, shift: int = 0):
    """sigma(x) / 2**shift as float (real place) or complex (complex place)."""
    if place.kind != "arch":
        raise ValueError("embed_scaled needs an archimedean place")
    if x.field.kind == "rational":
        return fraction_scaled_float(x.a, shift)
    m = x.field.m
    if place.complex_pair:
        re = fraction_scaled_float(x.a, shift)
        im = fraction_scaled_float(x.b, shift) * math.sqrt(-m)
        return complex(re, im)
    sign = 1 if place.emb == 0 else -1
    if x.is_zero:
        return 0.0
    log_abs = _real_abs_log(x.a, x.b, m, sign)
    # exact sign of a + sign*b*sqrt(m)
    if x.a == 0:
        s = 1 if sign * x.b > 0 else -1
    elif (x.a > 0) == (sign * x.b >= 0):
        s = 1 if x.a > 0 else -1
    else:
        s = (1 if x.a > 0 else -1) if x.a * x.a > m * x.b * x.b else (1 if sign * x.b > 0 else -1)
    e = log_abs - shift * LN2
    return s * (math.exp(e) if e < 700 else math.inf)


def abs_value(x: Scalar, place: Place) -> LocalMagnitude:
    """|x|_v, exact at finite places, float (log space) at archimedean ones."""
    if x.is_zero:
        return LocalMagnitude.exact_zero()
    if place.is_finite:
        return LocalMagnitude.finite(place.p, -finite_valuation(x, place))
    return LocalMagnitude.arch(arch_abs_log(x, place), 4e-16)


def scalar_support(x: Scalar) -> tuple[int, ...]:
    """Primes p that can carry |x|_v != 1 for some v | p; exact superset."""
    if x.is_zero:
        return ()
    primes: set[int] = set()
    for q in (x.a, x.b):
        if q != 0:
            primes.update(prime_divisors(q.numerator))
            primes.update(prime_divisors(q.denominator))
    if x.field.kind == "quadratic":
        n = x.relative_norm()
        primes.update(prime_divisors(n.numerator))
        primes.update(prime_divisors(n.denominator))
    return tuple(sorted(primes))


def product_formula_check(x: Scalar) -> HeightValue:
    """prod_v |x|_v^{d_v} over all places; equals 1, with the finite part exact.

    The residual is |log_value| of the returned height: the finite part is an
    exact prime-power product and the archimedean factor must cancel it to
    within float tolerance.
    """
    if x.is_zero:
        raise ValueError("product formula needs a nonzero scalar")
    finite: dict[int, Fraction] = {}
    for p in scalar_support(x):
        for v in x.field.places_above(p):
            finite[p] = finite.get(p, Fraction(0)) - finite_valuation(x, v) * v.d_v
    log_arch = 0.0
    err = 0.0
    for v in x.field.archimedean_places():
        log_arch += float(v.d_v) * arch_abs_log(x, v)
        err += 4e-16 * float(v.d_v)
    return HeightValue.from_parts(finite, log_arch, err)
