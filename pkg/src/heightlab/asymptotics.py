"""Gelfand-Beurling limit harness: power sequences H(T^(2^j))^(1/2^j) against
the spectral height, globally and per place.

Powers are sampled at k = 2^j via repeated squaring with rational-content
stripping (heights are insensitive to scalar factors, so the stripped matrix
carries the height; the exact scalar ledger re-enters only in per-place
norms).  All archimedean accumulation happens in log space; finite-place
entries are exact rational exponents of p.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import ResourceBudgetError
from .numutil import fraction_log, fraction_valuation, prime_divisors
from .numberfield import Place, scalar_support
from .exactlinalg import MatrixK, iter_stripped_squarings, rank, strip_matrix
from .heights import height_matrix, height_spectral, height_vector
from .localanalysis import operator_norm_arch, operator_norm_finite, spectral_radius_arch, spectral_radius_finite


@dataclass(frozen=True)
class TraceEntry:
    k: int
    log_value: float
    exponent: Fraction | None = None  # finite places: entry is p**exponent, exact
    exact_op: bool = False  # H^op(T^k) is exactly known at this k
    hop_log: float | None = None  # log H^op(T^k)^(1/k) when rank(T^k) <= 1
    breakdown: tuple[tuple[str, float], ...] | None = None  # (place, d_v-weighted log)


@dataclass(frozen=True)
class ConvergenceTrace:
    kind: str  # "global" | "local"
    target_log: float
    entries: tuple[TraceEntry, ...]
    target_exponent: Fraction | None = None
    place_label: str | None = None
    truncated: bool = False  # resource budget hit before jmax

    @property
    def residuals(self) -> tuple[float, ...]:
        return tuple(abs(e.log_value - self.target_log) for e in self.entries)

    def to_csv(self) -> str:
        lines = ["k,log_height_over_k,target,residual,exact_flag"]
        for e in self.entries:
            lines.append(
                f"{e.k},{e.log_value!r},{self.target_log!r},{abs(e.log_value - self.target_log)!r},{int(e.exact_op)}"
            )
        return "\n".join(lines) + "\n"


def _ledger_support(c: Fraction) -> tuple[int, ...]:
    primes = set(prime_divisors(c.numerator))
    primes.update(prime_divisors(c.denominator))
    return tuple(sorted(primes))


def gelfand_sequence(
    T: MatrixK,
    jmax: int = 12,
    include_breakdown: bool = False,
    bits_budget: int | None = None,
    tol: float = 1e-9,
) -> ConvergenceTrace:
    """Trace of H(T^(2^j))^(1/2^j) for j = 0..jmax against log H_s(T).

    For invertible T the entries are exactly H^op(T^k)^(1/k); for rank-one T
    the exact H^op values are carried alongside in hop_log.  A resource
    budget abort yields the partial trace with truncated=True.
    """
    if T.is_zero:
        raise ValueError("needs a nonzero matrix")
    field = T.field
    target = height_spectral(T, tol)
    entries: list[TraceEntry] = []
    truncated = False
    breakdown_primes: set[int] = set()
    if include_breakdown:
        stripped, _ = strip_matrix(T)
        for row in stripped.rows:
            for x in row:
                breakdown_primes.update(scalar_support(x))
    try:
        for j, k, M, c in iter_stripped_squarings(T, jmax, bits_budget):
            if M.is_zero:  # nilpotent: H(0) = 1 from here on
                entries.append(TraceEntry(k=k, log_value=0.0, exact_op=True, hop_log=0.0))
                continue
            h = height_matrix(M, tol)
            r = rank(M)
            hop_log = None
            if r <= 1:
                col = next((M.column(jj) for jj in range(M.n) if not M.column(jj).is_zero), None)
                hop_log = 0.0 if col is None else height_vector(col).log_value / k
            breakdown = None
            if include_breakdown:
                breakdown_primes.update(_ledger_support(c))
                rows_bd: list[tuple[str, float]] = []
                for p in sorted(breakdown_primes):
                    for v in field.places_above(p):
                        mag = operator_norm_finite(M, v)
                        lg = mag.log_value - fraction_valuation(c, p) * math.log(p)
                        rows_bd.append((v.label, float(v.d_v) * lg / k))
                for v in field.archimedean_places():
                    lg = operator_norm_arch(M, v, tol).log_value
                    if c != 1:
                        lg += fraction_log(abs(c))
                    rows_bd.append((v.label, float(v.d_v) * lg / k))
                breakdown = tuple(rows_bd)
            entries.append(
                TraceEntry(
                    k=k,
                    log_value=h.log_value / k,
                    exact_op=(r == M.n or r <= 1),
                    hop_log=hop_log,
                    breakdown=breakdown,
                )
            )
    except ResourceBudgetError:
        truncated = True
    return ConvergenceTrace(
        kind="global",
        target_log=target.log_value,
        entries=tuple(entries),
        truncated=truncated,
    )


def local_gelfand_sequence(
    T: MatrixK,
    v: Place,
    jmax: int = 12,
    bits_budget: int | None = None,
    tol: float = 1e-9,
) -> ConvergenceTrace:
    """Trace of ||T^(2^j)||_v^(1/2^j) against rho_v(T).

    At finite places every entry is an exact rational exponent of p and the
    target is the exact Newton-polygon exponent; at archimedean places both
    are floats.
    """
    if T.is_zero:
        raise ValueError("needs a nonzero matrix")
    entries: list[TraceEntry] = []
    truncated = False
    if v.is_finite:
        target_mag = spectral_radius_finite(T, v)
        target_exp = target_mag.exponent  # None when T is nilpotent
        target_log = target_mag.log_value
    else:
        target_mag = spectral_radius_arch(T, v, tol)
        target_exp = None
        target_log = target_mag.log_value
    try:
        for j, k, M, c in iter_stripped_squarings(T, jmax, bits_budget):
            if M.is_zero:
                entries.append(TraceEntry(k=k, log_value=float("-inf")))
                continue
            if v.is_finite:
                mag = operator_norm_finite(M, v)
                # |c|_v = p^(-v_p(c)) for the rational ledger at any place above p
                q = mag.exponent - Fraction(fraction_valuation(c, v.p))
                exponent = q / k
                entries.append(TraceEntry(k=k, log_value=float(exponent) * math.log(v.p), exponent=exponent))
            else:
                lg = operator_norm_arch(M, v, tol).log_value
                if c != 1:
                    lg += fraction_log(abs(c))
                entries.append(TraceEntry(k=k, log_value=lg / k))
    except ResourceBudgetError:
        truncated = True
    return ConvergenceTrace(
        kind="local",
        target_log=target_log,
        entries=tuple(entries),
        target_exponent=target_exp,
        place_label=v.label,
        truncated=truncated,
    )
