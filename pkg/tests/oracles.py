"""Slow reference implementations that share no code with the package."""

from __future__ import annotations

from decimal import Decimal, getcontext
from math import gcd


def poly_mul(a, b, n):
    out = [0] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j, y in enumerate(b[: n - i]):
                out[i + j] += x * y
    return out


def poly_inverse(a, n):
    """Power-series inverse of ``a`` (``a[0] = 1``) to ``n`` terms."""
    assert a[0] == 1
    inv = [0] * n
    inv[0] = 1
    for k in range(1, n):
        inv[k] = -sum(a[i] * inv[k - i] for i in range(1, min(k, len(a) - 1) + 1))
    return inv


def pochhammer_poly(sign, a, b, count, n):
    """``prod_{k<count} (1 - sign*q^(a+kb))`` as a list of ``n`` coefficients."""
    out = [1] + [0] * (n - 1)
    for k in range(count):
        e = a + k * b
        factor = [0] * n
        factor[0] = 1
        if e < n:
            factor[e] = -sign
        out = poly_mul(out, factor, n)
    return out


def eulerian_sum(exponent, start, factors, n):
    """``sum_k q^(c0 + c1 k + c2 k^2) prod (factor_k)^power`` by direct term-by-term evaluation.

    ``factors`` is a list of ``(sign, a, b, offset, power)`` giving
    ``(sign*q^a; q^b)_{k+offset}^power``.
    """
    c0, c1, c2 = exponent
    total = [0] * n
    k = start
    while True:
        e = c0 + c1 * k + c2 * k * k
        if e >= n:
            break
        term = [0] * n
        term[e] = 1
        for sign, a, b, offset, power in factors:
            poch = pochhammer_poly(sign, a, b, k + offset, n)
            if power < 0:
                poch = poly_inverse(poch, n)
            for _ in range(abs(power)):
                term = poly_mul(term, poch, n)
        total = [x + y for x, y in zip(total, term)]
        k += 1
    return total


def partition_numbers(n):
    """``p(0..n-1)`` by the counting recurrence over largest part."""
    table = [1] + [0] * (n - 1)
    for part in range(1, n):
        for total in range(part, n):
            table[total] += table[total - part]
    return table


def jacobi_naive(a, n):
    """Jacobi symbol from Euler's criterion on each prime factor of ``n``."""
    result = 1
    m = n
    p = 3
    factors = []
    while m > 1:
        if m % p == 0:
            factors.append(p)
            m //= p
        else:
            p += 2
    for p in factors:
        r = pow(a % p, (p - 1) // 2, p)
        if r == 0:
            return 0
        result *= 1 if r == 1 else -1
    return result


def hecke_naive(coeffs, p, lam, chi, mod=None):
    """``T(p^2)`` on ``coeffs[0..]`` (val 0), returning the certain window."""
    out_len = (len(coeffs) - 1) // (p * p) + 1
    out = []
    sign = -1 if lam % 2 else 1
    for n in range(out_len):
        v = coeffs[p * p * n]
        v += jacobi_naive(sign * n, p) * chi * p ** (lam - 1) * coeffs[n]
        if n % (p * p) == 0:
            v += p ** (2 * lam - 1) * coeffs[n // (p * p)]
        out.append(v if mod is None else v % mod)
    return out


def gamma0_cosets(N):
    """``|P^1(Z/N)|`` by enumerating pairs ``(c, d)`` and dividing by unit scalings."""
    pairs = sum(1 for c in range(N) for d in range(N) if gcd(gcd(c, d), N) == 1)
    units = sum(1 for u in range(N) if gcd(u, N) == 1)
    return pairs // units


def dim_cusp_forms_naive(k, N):
    """``dim S_k(Gamma_0(N))``, even ``k >= 4``, from counted elliptic points and cusps."""
    mu = gamma0_cosets(N)
    e2 = sum(1 for x in range(N) if (x * x + 1) % N == 0)
    e3 = sum(1 for x in range(N) if (x * x + x + 1) % N == 0)
    cusps = 0
    for d in range(1, N + 1):
        if N % d == 0:
            g = gcd(d, N // d)
            cusps += sum(1 for u in range(g) if gcd(u, g) == 1) if g > 1 else 1
    genus12 = 12 + mu - 3 * e2 - 4 * e3 - 6 * cusps
    assert genus12 % 12 == 0
    g = genus12 // 12
    return (k - 1) * (g - 1) + (k // 2 - 1) * cusps + e2 * (k // 4) + e3 * (k // 3)


def grh_bound_decimal(B, L, digits=80):
    getcontext().prec = digits
    value = 280 * Decimal(B) ** 2 * (Decimal(B).ln() + Decimal(L).ln()) ** 2
    return int(value.to_integral_value(rounding="ROUND_CEILING"))
