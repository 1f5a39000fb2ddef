"""Split exact/float magnitude representations.

A local magnitude at a finite place is an exact power p**q with rational
exponent q (or an exact zero); at an archimedean place it is a float kept in
log space with an error bound.  A height value is the product over places:
an exact prime-power product (the finite part) times one archimedean float
factor, again kept in log space so that heights of 2^12-th matrix powers do
not overflow.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .numutil import int_log

_NEG_INF = float("-inf")


@dataclass(frozen=True)
class LocalMagnitude:
    """|x|_v at a single place.

    Finite places carry the exact pair (p, exponent) with value p**exponent,
    or an exact zero.  Archimedean places carry only log_value/rel_err.
    """

    log_value: float
    rel_err: float = 0.0
    p: int | None = None
    exponent: Fraction | None = None
    zero: bool = False

    @classmethod
    def exact_zero(cls) -> "LocalMagnitude":
        return cls(log_value=_NEG_INF, zero=True)

    @classmethod
    def finite(cls, p: int, exponent: Fraction) -> "LocalMagnitude":
        exponent = Fraction(exponent)
        return cls(log_value=float(exponent) * math.log(p), p=p, exponent=exponent)

    @classmethod
    def arch(cls, log_value: float, rel_err: float = 0.0) -> "LocalMagnitude":
        return cls(log_value=log_value, rel_err=rel_err)

    @property
    def is_exact(self) -> bool:
        return self.zero or self.exponent is not None

    @property
    def value(self) -> float:
        if self.zero:
            return 0.0
        return math.exp(self.log_value) if self.log_value < 700 else math.inf

    def __str__(self) -> str:
        if self.zero:
            return "0"
        if self.exponent is not None:
            return f"{self.p}^{self.exponent}"
        return f"{self.value:.12g}"


def finite_sup(mags: list[LocalMagnitude]) -> LocalMagnitude:
    """Exact sup of finite-place magnitudes (zero is the smallest)."""
    best: LocalMagnitude | None = None
    for m in mags:
        if m.zero:
            continue
        if best is None or m.exponent > best.exponent:
            best = m
    return best if best is not None else LocalMagnitude.exact_zero()


@dataclass(frozen=True)
class HeightValue:
    """A height: exact finite part prod p^e times archimedean factor exp(log_arch).

    `finite` is a sorted tuple of (prime, exponent) pairs with nonzero
    rational exponents; `arch_err` bounds the absolute error of `log_arch`
    (which is the relative error of the archimedean factor).
    """

    finite: tuple[tuple[int, Fraction], ...] = ()
    log_arch: float = 0.0
    arch_err: float = 0.0

    @classmethod
    def one(cls) -> "HeightValue":
        return cls()

    @classmethod
    def from_parts(cls, finite: dict[int, Fraction], log_arch: float, arch_err: float = 0.0) -> "HeightValue":
        items = tuple(sorted((p, Fraction(e)) for p, e in finite.items() if e != 0))
        return cls(finite=items, log_arch=log_arch, arch_err=arch_err)

    @property
    def finite_exponents(self) -> dict[int, Fraction]:
        return dict(self.finite)

    @property
    def finite_log(self) -> float:
        return sum(float(e) * int_log(p) for p, e in self.finite)

    @property
    def log_value(self) -> float:
        return self.finite_log + self.log_arch

    @property
    def value(self) -> float:
        lv = self.log_value
        return math.exp(lv) if lv < 700 else math.inf

    @property
    def arch(self) -> float:
        return math.exp(self.log_arch) if self.log_arch < 700 else math.inf

    @property
    def finite_rational(self) -> Fraction | None:
        """The finite part as an exact rational, or None if an exponent is fractional."""
        out = Fraction(1)
        for p, e in self.finite:
            if e.denominator != 1:
                return None
            out *= Fraction(p) ** e
        return out

    @property
    def finite_str(self) -> str:
        if not self.finite:
            return "1"
        return " * ".join(f"{p}^{e}" for p, e in self.finite)

    def __mul__(self, other: "HeightValue") -> "HeightValue":
        merged = self.finite_exponents
        for p, e in other.finite:
            merged[p] = merged.get(p, 0) + e
        return HeightValue.from_parts(merged, self.log_arch + other.log_arch, self.arch_err + other.arch_err)

    def __truediv__(self, other: "HeightValue") -> "HeightValue":
        merged = self.finite_exponents
        for p, e in other.finite:
            merged[p] = merged.get(p, 0) - e
        return HeightValue.from_parts(merged, self.log_arch - other.log_arch, self.arch_err + other.arch_err)

    def pow(self, k) -> "HeightValue":
        k = Fraction(k)
        scaled = {p: e * k for p, e in self.finite}
        return HeightValue.from_parts(scaled, self.log_arch * float(k), self.arch_err * abs(float(k)))

    def same_finite(self, other: "HeightValue") -> bool:
        return self.finite == other.finite

    def log_close(self, other: "HeightValue", tol: float) -> bool:
        return abs(self.log_value - other.log_value) <= tol

    def to_json(self) -> dict:
        fr = self.finite_rational
        return {
            "finite": self.finite_str,
            "finiteRational": None if fr is None else f"{fr.numerator}/{fr.denominator}",
            "arch": self.arch if self.log_arch < 700 else None,
            "log": self.log_value,
            "relErr": self.arch_err,
        }

    def __str__(self) -> str:
        return f"{self.value:.12g} (finite {self.finite_str}, arch {self.arch:.12g})"
