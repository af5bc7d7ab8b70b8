"""Quadratic characters and coefficient-level twists.

The twist by ``psi_Q = (./Q)`` multiplies the coefficient of ``q^n`` by the
Legendre symbol ``(n/Q)``.  The hat filter keeps exactly the coefficients with
``(-n/Q) = -1``; it annihilates every exponent ``-delta*m^2`` once ``Q`` is
chosen with ``(delta/Q) = 1``, which is how the nonholomorphic support of a
mock theta function is removed.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd
from typing import Iterable, Optional

import numpy as np
import sympy

from mockcong.qseries import ModulusMismatch, TruncatedSeries, series_scale, series_sub

__all__ = [
    "TwistParams",
    "jacobi_symbol",
    "kronecker_symbol",
    "legendre_table",
    "twist_coefficients",
    "hat_filter",
    "hat_filter_direct",
    "hat_filter_composite",
    "select_twist_prime",
    "twisted_level",
    "level_after_double_twist",
    "NoTwistPrime",
    "forbidden_twist_primes",
    "kronecker_character",
    "check_twist_prime",
]


class NoTwistPrime(RuntimeError):
    """No admissible twist prime exists below the search cap."""


def jacobi_symbol(a: int, n: int) -> int:
    """Jacobi symbol ``(a/n)`` for odd ``n >= 1`` by binary reciprocity."""
    if n <= 0 or n % 2 == 0:
        raise ValueError(f"Jacobi symbol needs an odd positive modulus, got {n}")
    a %= n
    result = 1
    while a:
        while a % 2 == 0:
            a //= 2
            if n % 8 in (3, 5):
                result = -result
        a, n = n, a
        if a % 4 == 3 and n % 4 == 3:
            result = -result
        a %= n
    return result if n == 1 else 0


def kronecker_symbol(d: int, p: int) -> int:
    """``(d/p)`` for a prime ``p``, with the Kronecker convention at ``p = 2``."""
    if p == 2:
        if d % 2 == 0:
            return 0
        return 1 if d % 8 in (1, 7) else -1
    return jacobi_symbol(d, p)


def legendre_table(q: int, scale: int = 1) -> np.ndarray:
    """``table[r] = ((scale*r)/q)`` for residues ``0 <= r < q``."""
    return np.array([jacobi_symbol(scale * r, q) for r in range(q)], dtype=np.int64)


@dataclass(frozen=True)
class TwistParams:
    """A twist by the quadratic character mod ``Q`` moving level ``level_in`` to ``level_out``."""

    Q: int
    level_in: int
    level_out: int

    def __post_init__(self):
        if self.Q % 2 == 0 or not sympy.isprime(self.Q):
            raise ValueError(f"Q must be an odd prime, got {self.Q}")
        if self.level_out != twisted_level(self.level_in, self.Q):
            raise ValueError("level_out must equal lcm(level_in*Q, Q^2)")

    @classmethod
    def for_level(cls, Q: int, level_in: int) -> "TwistParams":
        return cls(Q, level_in, twisted_level(level_in, Q))


def _character_column(s: TruncatedSeries, table: np.ndarray) -> np.ndarray:
    q = len(table)
    exps = np.arange(s.val, s.trunc, dtype=np.int64)
    return table[exps % q]


def _apply_column(s: TruncatedSeries, column: np.ndarray) -> TruncatedSeries:
    work = s.work()
    if work.dtype == object:
        work = work * column.astype(object)
    else:
        work *= column
    if s.modulus is not None:
        work %= s.modulus
    return TruncatedSeries._trusted(s.val, work, s.modulus)


def twist_coefficients(s: TruncatedSeries, Q: int) -> TruncatedSeries:
    """Multiply the coefficient of ``q^n`` by ``(n/Q)``."""
    return _apply_column(s, _character_column(s, legendre_table(Q)))


def hat_filter_direct(s: TruncatedSeries, Q: int) -> TruncatedSeries:
    """Keep the coefficients with ``(-n/Q) = -1`` and zero the rest."""
    keep = (legendre_table(Q, scale=-1) == -1).astype(np.int64)
    return _apply_column(s, _character_column(s, keep))


def hat_filter_composite(s: TruncatedSeries, Q: int) -> TruncatedSeries:
    """The same filter built from two twists: ``-1/2 (-1/Q) (s - (-1/Q) s(x)psi) (x) psi``."""
    eps = jacobi_symbol(-1, Q)
    tilde = series_sub(s, series_scale(twist_coefficients(s, Q), eps))
    doubled = series_scale(twist_coefficients(tilde, Q), -eps)
    if s.modulus is None:
        work = doubled.work()
        if any(int(c) % 2 for c in work):
            raise ArithmeticError("composite hat filter produced an odd coefficient")
        return TruncatedSeries._trusted(s.val, work // 2, None)
    if s.modulus % 2 == 0:
        raise ModulusMismatch("composite hat filter needs an odd modulus (it divides by 2)")
    return series_scale(doubled, pow(2, -1, s.modulus))


def hat_filter(s: TruncatedSeries, Q: int, path: str = "direct") -> TruncatedSeries:
    """Hat filter by ``Q`` via the ``"direct"`` mask or the ``"composite"`` double twist."""
    if path == "direct":
        return hat_filter_direct(s, Q)
    if path == "composite":
        return hat_filter_composite(s, Q)
    raise ValueError(f"unknown hat filter path {path!r}")


def select_twist_prime(
    shadow_deltas: Iterable[int],
    forbidden: Iterable[int] = (),
    start: int = 3,
    cap: int = 10**6,
) -> int:
    """Smallest odd prime ``Q >= start`` outside ``forbidden`` with ``(delta/Q) = 1`` for all deltas."""
    deltas = list(shadow_deltas)
    if not deltas:
        raise ValueError("shadow_deltas must be nonempty")
    for d in deltas:
        if d < 1 or any(e > 1 for e in sympy.factorint(d).values()):
            raise ValueError(f"shadow delta {d} is not a squarefree positive integer")
    banned = set(forbidden)
    Q = sympy.nextprime(max(start, 3) - 1)
    while Q <= cap:
        if Q not in banned and all(jacobi_symbol(d, Q) == 1 for d in deltas):
            return int(Q)
        Q = sympy.nextprime(Q)
    raise NoTwistPrime(f"no twist prime below {cap} for deltas {deltas}")


def twisted_level(N: int, M: int) -> int:
    """Level ``lcm(N*M, M^2)`` reached by twisting a level-``N`` form by a character mod ``M``."""
    if N < 1 or M < 1:
        raise ValueError("levels must be positive")
    a, b = N * M, M * M
    return a * b // gcd(a, b)


def level_after_double_twist(level: int, Q: int) -> int:
    """Level after the two successive twists of the hat filter (``4N -> 4N Q^3``)."""
    return twisted_level(twisted_level(level, Q), Q)


def forbidden_twist_primes(level: int, ell: int, allow_q_equals_ell: bool = False) -> list[int]:
    """Primes dividing ``level * ell``; ``ell`` itself may be released by the override."""
    banned = set(sympy.primefactors(level * ell))
    if allow_q_equals_ell:
        banned.discard(ell)
    return sorted(banned)


def kronecker_character(discriminant: int):
    """The map ``p -> (discriminant/p)`` on primes."""

    def chi(p: int, _d: int = discriminant) -> int:
        return kronecker_symbol(_d, p)

    chi.discriminant = discriminant
    return chi


def check_twist_prime(Q: int, shadow_deltas: Iterable[int], forbidden: Optional[Iterable[int]] = None) -> None:
    """Raise unless ``Q`` is admissible for ``shadow_deltas``."""
    if Q % 2 == 0 or not sympy.isprime(Q):
        raise ValueError(f"twist prime must be an odd prime, got {Q}")
    for d in shadow_deltas:
        if jacobi_symbol(d, Q) != 1:
            raise ValueError(f"({d}/{Q}) != 1; Q does not annihilate the shadow support")
    if forbidden is not None and Q in set(forbidden):
        raise ValueError(f"twist prime {Q} is excluded")
