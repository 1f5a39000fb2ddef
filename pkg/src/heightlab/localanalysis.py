"""Per-place analysis: local vector and operator norms, finite-place spectral
radii via Newton polygons, archimedean spectral radii and singular values,
and local subspace seminorms.

Finite-place results are exact prime powers with rational exponents; the
exponent denominators can exceed the ramification index when characteristic
roots live in extensions of K_v.  Archimedean results are floats validated
against exact coefficient bounds and a norm-power cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np

from .errors import DegenerateInputError, NumericError
from .numutil import LN2, fraction_log
from .numberfield import Place, abs_value, arch_abs_log, embed_scaled, finite_valuation
from .exactlinalg import CharPoly, MatrixK, Subspace, VectorK, char_poly, wedge_coordinates
from .values import LocalMagnitude, finite_sup

DEFAULT_TOL = 1e-9


@dataclass(frozen=True)
class NewtonPolygon:
    """Lower convex hull of coefficient valuations of a polynomial.

    A hull segment of slope s (run length r) carries r roots of valuation -s,
    so the largest root magnitude is p**(max slope).  Roots equal to zero are
    excluded from the polygon and counted separately.
    """

    points: tuple[tuple[int, Fraction], ...]
    hull: tuple[tuple[int, Fraction], ...]
    slopes: tuple[tuple[Fraction, int], ...]  # (slope, multiplicity), nondecreasing
    zero_root_multiplicity: int

    @property
    def max_slope(self) -> Fraction | None:
        return self.slopes[-1][0] if self.slopes else None


@dataclass(frozen=True)
class LocalNormReport:
    place: Place
    magnitude: LocalMagnitude
    kind: str  # vector-norm | operator-norm | spectral-radius | subspace-seminorm


def _lower_hull(points: list[tuple[int, Fraction]]) -> list[tuple[int, Fraction]]:
    hull: list[tuple[int, Fraction]] = []
    for pt in points:
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            # pop while the middle point is not strictly below the chord
            if (x2 - x1) * (pt[1] - y1) - (y2 - y1) * (pt[0] - x1) <= 0:
                hull.pop()
            else:
                break
        hull.append(pt)
    return hull


def newton_polygon(f: CharPoly, v: Place) -> NewtonPolygon:
    """Polygon of (i, w(a_i)) over the nonzero coefficients, w(p) = 1."""
    if not v.is_finite:
        raise ValueError("newton_polygon needs a finite place")
    t = f.zero_root_multiplicity()
    pts: list[tuple[int, Fraction]] = []
    for i in range(t, f.degree + 1):
        c = f.coeffs[i]
        if not c.is_zero:
            pts.append((i, finite_valuation(c, v)))
    if not pts:  # f = x^n: all roots zero
        return NewtonPolygon((), (), (), t)
    hull = _lower_hull(pts)
    slopes: list[tuple[Fraction, int]] = []
    for (x1, y1), (x2, y2) in zip(hull, hull[1:]):
        slopes.append((Fraction(y2 - y1, x2 - x1), x2 - x1))
    return NewtonPolygon(tuple(pts), tuple(hull), tuple(slopes), t)


def spectral_radius_of_poly(f: CharPoly, v: Place) -> LocalMagnitude:
    """Largest |root|_v of a monic polynomial at a finite place, exact."""
    if f.is_power_of_x:
        return LocalMagnitude.exact_zero()
    poly = newton_polygon(f, v)
    return LocalMagnitude.finite(v.p, poly.max_slope)


def spectral_radius_finite(T: MatrixK, v: Place) -> LocalMagnitude:
    """p**(max Newton slope) of the characteristic polynomial; 0 for nilpotent T."""
    return spectral_radius_of_poly(char_poly(T), v)


def vector_norm(x: VectorK, v: Place) -> LocalMagnitude:
    """sup of entry magnitudes at finite places, l2 norm of the embedding at
    archimedean ones."""
    if v.is_finite:
        return finite_sup([abs_value(e, v) for e in x.entries])
    logs = [arch_abs_log(e, v) for e in x.entries if not e.is_zero]
    if not logs:
        return LocalMagnitude.exact_zero()
    # log sqrt(sum exp(2 l_i)), accumulated stably around the max
    top = max(logs)
    s = sum(math.exp(2.0 * (l - top)) for l in logs)
    return LocalMagnitude.arch(top + 0.5 * math.log(s), 1e-14)


def operator_norm_finite(T: MatrixK, v: Place) -> LocalMagnitude:
    """sup of entry magnitudes (the operator norm for the local sup norm)."""
    if not v.is_finite:
        raise ValueError("operator_norm_finite needs a finite place")
    return finite_sup([abs_value(x, v) for row in T.rows for x in row])


def _embed_matrix_scaled(T: MatrixK, v: Place) -> tuple[np.ndarray, int]:
    """Float image of T at an archimedean place, scaled by 2^-shift."""
    bits = T.max_entry_bits()
    shift = max(0, bits - 128)
    rows = [[embed_scaled(x, v, shift) for x in row] for row in T.rows]
    dtype = complex if v.complex_pair else float
    return np.array(rows, dtype=dtype), shift


def operator_norm_arch(T: MatrixK, v: Place, tol: float = DEFAULT_TOL) -> LocalMagnitude:
    """Largest singular value of the embedded matrix.

    The Gram matrix T*T is formed exactly in K and only then embedded, so the
    float eigensolve sees a clean Hermitian input.  The result is checked
    against the exact corridor max diag(G) <= lambda_max <= trace(G).
    """
    if not v.is_finite and v.kind != "arch":
        raise ValueError("bad place")
    if v.is_finite:
        raise ValueError("operator_norm_arch needs an archimedean place")
    if T.is_zero:
        return LocalMagnitude.exact_zero()
    gram = T.conjugate_transpose() @ T
    arr, shift = _embed_matrix_scaled(gram, v)
    arr = (arr + arr.conj().T) / 2.0
    lam = float(np.linalg.eigvalsh(arr)[-1])
    if lam <= 0:
        raise NumericError("nonpositive top eigenvalue of a nonzero Gram matrix")
    log_norm = 0.5 * (math.log(lam) + shift * LN2)
    # exact corridor: lambda_max is between the largest diagonal Gram entry
    # and the trace (all eigenvalues are nonnegative)
    diag_logs = [arch_abs_log(gram.entry(i, i), v) for i in range(gram.n) if not gram.entry(i, i).is_zero]
    lo = max(diag_logs)
    hi = lo + math.log(gram.n)  # trace <= n * max diag
    slack = max(tol, 1e-10)
    if not (lo - slack <= 2.0 * log_norm <= hi + slack):
        raise NumericError(f"singular value {2*log_norm} outside exact corridor [{lo}, {hi}]")
    return LocalMagnitude.arch(log_norm, max(1e-13, tol * 1e-3))


def _mp_embed(c, v: Place):
    """Embed a scalar at an archimedean place at mpmath working precision."""
    a = mpmath.mpf(c.a.numerator) / c.a.denominator
    if c.b == 0:
        return mpmath.mpc(a) if v.complex_pair else a
    b = mpmath.mpf(c.b.numerator) / c.b.denominator
    m = c.field.m
    if v.complex_pair:
        return mpmath.mpc(a, b * mpmath.sqrt(-m))
    sign = 1 if v.emb == 0 else -1
    return a + sign * b * mpmath.sqrt(m)


def spectral_radius_arch(T: MatrixK, v: Place, tol: float = DEFAULT_TOL) -> LocalMagnitude:
    """Max modulus of the characteristic roots at an archimedean place.

    Roots come from an extended-precision polynomial solver; the value is
    validated against exact coefficient bounds (Fujiwara above, elementary
    symmetric functions below) and the norm-power upper bound
    ||T^(2^j)||^(1/2^j) >= rho.
    """
    if v.is_finite:
        raise ValueError("spectral_radius_arch needs an archimedean place")
    f = char_poly(T)
    if f.is_power_of_x:
        return LocalMagnitude.exact_zero()
    n = f.degree
    with mpmath.workdps(50):
        coeffs = [_mp_embed(c, v) for c in reversed(f.coeffs)]
        try:
            roots, err = mpmath.polyroots(coeffs, maxsteps=200, extraprec=80, error=True)
        except mpmath.libmp.NoConvergence as exc:  # pragma: no cover
            raise NumericError(f"root finder did not converge: {exc}") from exc
        rho = max(abs(r) for r in roots)
        rho_log = float(mpmath.log(rho)) if rho > 0 else -math.inf
        rel = float(err / rho) if rho > 0 else 0.0
    if rho_log == -math.inf:
        return LocalMagnitude.exact_zero()
    # Fujiwara upper bound: rho <= 2 max_k |a_{n-k}|^(1/k) (last term halved)
    fuji_logs = []
    for kk in range(1, n + 1):
        c = f.coeffs[n - kk]
        if c.is_zero:
            continue
        la = arch_abs_log(c, v)
        if kk == n:
            la -= LN2
        fuji_logs.append(la / kk)
    upper_log = LN2 + max(fuji_logs)
    # lower bound: |e_k| <= C(n,k) rho^k for elementary symmetric functions
    lower_log = max(
        (arch_abs_log(f.coeffs[n - kk], v) - math.log(math.comb(n, kk))) / kk
        for kk in range(1, n + 1)
        if not f.coeffs[n - kk].is_zero
    )
    slack = max(tol, 1e-9)
    if rho_log > upper_log + slack or rho_log < lower_log - slack:
        raise NumericError(f"spectral radius {rho_log} violates coefficient bounds [{lower_log}, {upper_log}]")
    power_log = _gelfand_power_upper(T, v)
    if rho_log > power_log + slack:
        raise NumericError(f"spectral radius {rho_log} exceeds norm-power bound {power_log}")
    return LocalMagnitude.arch(rho_log, max(rel, 1e-14))


def _gelfand_power_upper(T: MatrixK, v: Place, rounds: int = 8) -> float:
    """min over j <= rounds of (1/2^j) log ||T^(2^j)||_v, an upper bound for
    log rho_v(T) at every j."""
    arr, shift = _embed_matrix_scaled(T, v)
    c = shift * LN2  # T^(2^j) = arr * exp(c), maintained across squarings
    best = math.inf
    k = 1
    for j in range(rounds + 1):
        norm = float(np.linalg.norm(arr, 2))
        if norm == 0.0 or not math.isfinite(norm):
            break
        best = min(best, (c + math.log(norm)) / k)
        if j == rounds:
            break
        scaled = arr / norm
        arr = scaled @ scaled
        c = 2.0 * (c + math.log(norm))
        k *= 2
    return best


def subspace_seminorm(y: VectorK, X: Subspace, v: Place) -> LocalMagnitude:
    """Local distance from y to X: ||wedge(basis, y)||_v / ||wedge(basis)||_v.

    Exact at finite places; the archimedean value is the Gram orthogonal
    distance.  The ratio does not depend on the choice of basis.
    """
    if X.dim == 0:
        return vector_norm(y, v)
    if X.contains(y):
        raise DegenerateInputError("vector lies in the subspace")
    num = wedge_coordinates(X.basis + (y,))
    den = wedge_coordinates(X.basis)
    nm, dm = vector_norm(num, v), vector_norm(den, v)
    if v.is_finite:
        return LocalMagnitude.finite(v.p, nm.exponent - dm.exponent)
    return LocalMagnitude.arch(nm.log_value - dm.log_value, nm.rel_err + dm.rel_err)
