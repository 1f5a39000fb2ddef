"""Integer arithmetic, factoring, and float-scaling helpers.

Everything here is exact except the explicitly float-returning functions,
which are safe for operands far beyond float range (heights of k-th matrix
powers need logarithms of integers with tens of thousands of bits).
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache, reduce
from typing import Iterator

LN2 = math.log(2.0)

# Deterministic Miller-Rabin witness set, valid for all n < 3.3e24.
_MR_WITNESSES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37)


@lru_cache(maxsize=1)
def small_primes(limit: int = 1 << 12) -> tuple[int, ...]:
    sieve = bytearray([1]) * limit
    sieve[0] = sieve[1] = 0
    for i in range(2, math.isqrt(limit) + 1):
        if sieve[i]:
            sieve[i * i :: i] = bytearray(len(sieve[i * i :: i]))
    return tuple(i for i in range(limit) if sieve[i])


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if n % p == 0:
            return n == p
    d = n - 1
    r = 0
    while d % 2 == 0:
        d //= 2
        r += 1
    for a in _MR_WITNESSES:
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(r - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_rho(n: int) -> int:
    """A nontrivial factor of composite odd n."""
    if n % 2 == 0:
        return 2
    seed = 1
    while True:
        seed += 1
        x = y = 2
        c = seed
        d = 1
        while d == 1:
            x = (x * x + c) % n
            y = (y * y + c) % n
            y = (y * y + c) % n
            d = math.gcd(abs(x - y), n)
        if d != n:
            return d


def factorize(n: int) -> dict[int, int]:
    """Prime factorization of |n| as {prime: multiplicity}; n must be nonzero."""
    if n == 0:
        raise ValueError("cannot factor 0")
    n = abs(n)
    out: dict[int, int] = {}
    for p in small_primes():
        if p * p > n:
            break
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if m == 1:
            continue
        if is_prime(m):
            v = 1
            out[m] = out.get(m, 0) + v
            continue
        d = _pollard_rho(m)
        stack.append(d)
        stack.append(m // d)
    return out


def prime_divisors(n: int) -> tuple[int, ...]:
    """Sorted distinct prime divisors of a nonzero integer (empty for +-1)."""
    if n in (1, -1):
        return ()
    return tuple(sorted(factorize(n)))


def valuation(n: int, p: int) -> int:
    """p-adic valuation of a nonzero integer, fast for very large valuations."""
    n = abs(n)
    if n == 0:
        raise ValueError("valuation of 0 is undefined")
    v = 0
    chunk, e = p, 1
    while True:
        quot, rem = divmod(n, chunk)
        if rem:
            break
        n = quot
        v += e
        if chunk * chunk <= n:
            chunk, e = chunk * chunk, 2 * e
    while n % p == 0:
        n //= p
        v += 1
    return v


def fraction_valuation(q: Fraction, p: int) -> int:
    """p-adic valuation of a nonzero rational."""
    return valuation(q.numerator, p) - valuation(q.denominator, p)


def int_log(n: int) -> float:
    """Natural log of a positive integer of any size."""
    if n <= 0:
        raise ValueError("int_log needs a positive integer")
    bl = n.bit_length()
    if bl <= 900:
        return math.log(n)
    drop = bl - 64
    return math.log(n >> drop) + drop * LN2


def fraction_log(q: Fraction) -> float:
    """Natural log of a positive rational of any size."""
    if q <= 0:
        raise ValueError("fraction_log needs a positive rational")
    return int_log(q.numerator) - int_log(q.denominator)


def scaled_int_float(n: int, shift: int) -> float:
    """n / 2**shift as a float, safe for huge |n| (relative error ~2^-63)."""
    if n == 0:
        return 0.0
    sign = -1.0 if n < 0 else 1.0
    n = abs(n)
    bl = n.bit_length()
    if bl <= 64:
        return sign * math.ldexp(float(n), -shift)
    drop = bl - 64
    return sign * math.ldexp(float(n >> drop), drop - shift)


def fraction_scaled_float(q: Fraction, shift: int) -> float:
    """q / 2**shift as a float, safe for huge numerator/denominator."""
    num, den = q.numerator, q.denominator
    if num == 0:
        return 0.0
    dn = max(0, den.bit_length() - 64)
    return scaled_int_float(num, shift + dn) / scaled_int_float(den, dn)


def sqrt_mod_prime(a: int, p: int) -> int | None:
    """A square root of a mod an odd prime p (Tonelli-Shanks), or None."""
    a %= p
    if a == 0:
        return 0
    if pow(a, (p - 1) // 2, p) != 1:
        return None
    if p % 4 == 3:
        return pow(a, (p + 1) // 4, p)
    q, s = p - 1, 0
    while q % 2 == 0:
        q //= 2
        s += 1
    z = 2
    while pow(z, (p - 1) // 2, p) != p - 1:
        z += 1
    m, c, t, r = s, pow(z, q, p), pow(a, q, p), pow(a, (q + 1) // 2, p)
    while t != 1:
        i, t2i = 0, t
        while t2i != 1:
            t2i = t2i * t2i % p
            i += 1
        b = pow(c, 1 << (m - i - 1), p)
        r = r * b % p
        c = b * b % p
        t = t * c % p
        m = i
    return r


def as_fraction(x) -> Fraction:
    """Coerce int/str/Fraction/float to an exact Fraction (floats via repr)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(str(x))
    return Fraction(x)


def content_gcd(values: Iterator[int]) -> int:
    return reduce(math.gcd, values, 0)


def iter_primitive_vectors(n: int, norm_sq_bound: Fraction) -> Iterator[tuple[int, ...]]:
    """All sign-normalized primitive integer n-tuples with squared norm <= bound.

    Sign normalization: first nonzero coordinate positive.  Each projective
    class over Q with squared Euclidean norm of the primitive representative
    at most `norm_sq_bound` appears exactly once.
    """
    cap = int(norm_sq_bound)  # x_i integral, so sum x_i^2 <= floor(bound)
    if cap < 1:
        return

    def rec(prefix: list[int], rem: int, started: bool) -> Iterator[tuple[int, ...]]:
        i = len(prefix)
        if i == n:
            if started and content_gcd(abs(c) for c in prefix) == 1:
                yield tuple(prefix)
            return
        r = math.isqrt(rem)
        lo = 0 if not started else -r
        for c in range(lo, r + 1):
            prefix.append(c)
            yield from rec(prefix, rem - c * c, started or c > 0)
            prefix.pop()

    yield from rec([], cap, False)
