"""Half-integral weight Hecke operators, Treneer projection and Sturm bounds."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import ceil, gcd
from typing import Optional, Union

import numpy as np
import sympy

from mockcong.qseries import (
    ModulusMismatch,
    TruncatedSeries,
    WindowError,
    _is_machine,
    reduce_mod,
    restrict,
)
from mockcong.twist import jacobi_symbol

__all__ = [
    "HeckeContext",
    "AlphaBeta",
    "AnnihilationResult",
    "prime_power_base",
    "hecke_t_p2",
    "treneer_projection",
    "alpha_beta",
    "gamma0_index",
    "sturm_bound",
    "sturm_bound_weight",
    "annihilation_check",
]


def prime_power_base(q: int) -> tuple[int, int]:
    """``(ell, j)`` with ``q = ell**j``; raises if ``q`` is not a prime power."""
    if q < 2:
        raise ValueError(f"{q} is not a prime power")
    factors = sympy.factorint(q)
    if len(factors) != 1:
        raise ValueError(f"{q} is not a prime power")
    (ell, j), = factors.items()
    return int(ell), int(j)


@dataclass(frozen=True)
class HeckeContext:
    """Data for ``T(p^2)`` on weight ``lam + 1/2`` forms of level ``level``.

    ``ell_pow`` is the prime power the annihilation is tested against; it may be
    left out when the operator is only applied, never checked.
    """

    p: int
    lam: int
    chi_p: int
    ell_pow: Optional[int] = None
    level: int = 4

    def __post_init__(self):
        if not sympy.isprime(self.p):
            raise ValueError(f"p={self.p} is not prime")
        if gcd(self.p, 4 * self.level) != 1:
            raise ValueError(f"p={self.p} must be coprime to 4*level={4 * self.level}")
        if self.lam < 1:
            raise ValueError("lambda must be >= 1 (weight 1/2 is not supported)")
        if self.chi_p not in (-1, 0, 1):
            raise ValueError("chi(p) must be -1, 0 or 1")
        if self.ell_pow is not None:
            ell, _ = prime_power_base(self.ell_pow)
            if ell == self.p:
                raise ValueError(f"p={self.p} must be coprime to ell={ell}")

    @property
    def ell(self) -> int:
        return prime_power_base(self.ell_pow)[0]

    @property
    def weight(self) -> Fraction:
        return Fraction(2 * self.lam + 1, 2)


@dataclass(frozen=True)
class AlphaBeta:
    alpha: int
    beta: int


@dataclass(frozen=True)
class AnnihilationResult:
    """Outcome of checking ``g | T(p^2) = 0 (mod ell^j)`` up to ``bound``."""

    annihilated: bool
    witness: Optional[int]
    p: int
    bound: int
    window: int
    modulus: int
    sturm_bound: Optional[int] = None

    @property
    def sturm_certified(self) -> bool:
        return self.annihilated and self.sturm_bound is not None and self.bound >= self.sturm_bound

    def __bool__(self) -> bool:
        return self.annihilated


def hecke_t_p2(s: TruncatedSeries, ctx: HeckeContext) -> TruncatedSeries:
    """Apply ``T(p^2)``; the result is certain for exponents ``n`` with ``p^2 n < s.trunc``.

    ``a(p^2 n) + ((-1)^lam n / p) chi(p) p^(lam-1) a(n) + p^(2 lam - 1) a(n/p^2)``
    """
    if s.val < 0:
        raise ValueError("T(p^2) needs a series without a principal part (val >= 0)")
    p, p2 = ctx.p, ctx.p * ctx.p
    m = s.modulus
    trunc_out = (s.trunc - 1) // p2 + 1
    if s.trunc <= 0:
        return TruncatedSeries._trusted(0, s.work()[:0], m)
    a = restrict(s, 0, s.trunc).work()
    mid = ctx.chi_p * p ** (ctx.lam - 1)
    top = p ** (2 * ctx.lam - 1)
    if m is not None:
        mid %= m
        top %= m
    sign = -1 if ctx.lam % 2 else 1
    sym = np.array([jacobi_symbol(sign * r, p) for r in range(p)], dtype=np.int64)
    column = sym[np.arange(trunc_out, dtype=np.int64) % p]

    if _is_machine(m):
        out = a[::p2][:trunc_out].copy()
        out += (column * a[:trunc_out]) % m * mid % m
        out %= m
        k = len(out[::p2])
        out[::p2] += a[:k] * top % m
        out %= m
    else:
        out = a[::p2][:trunc_out].copy()
        out += column.astype(object) * a[:trunc_out] * mid
        k = len(out[::p2])
        out[::p2] += a[:k] * top
        if m is not None:
            out %= m
    return TruncatedSeries._trusted(0, out, m)


def treneer_projection(s: TruncatedSeries, ell: int, alpha: int) -> TruncatedSeries:
    """``sum_{ell not dividing n} a(ell^alpha n) q^n``."""
    if alpha < 0:
        raise ValueError("alpha must be nonnegative")
    if not sympy.isprime(ell):
        raise ValueError(f"ell={ell} is not prime")
    step = ell**alpha
    val = -((-s.val) // step)
    trunc = (s.trunc - 1) // step + 1
    if trunc <= val:
        return TruncatedSeries._trusted(trunc, s.work()[:0], s.modulus)
    picked = s.work()[step * val - s.val :: step][: trunc - val].copy()
    exps = np.arange(val, trunc, dtype=np.int64)
    picked[exps % ell == 0] = 0
    return TruncatedSeries._trusted(val, picked, s.modulus)


def alpha_beta(min_ord_div: int, min_ord_nondiv: int, ell: int) -> AlphaBeta:
    """Smallest ``alpha, beta >= 0`` with ``-ell^alpha < 4*min_ord_div`` and ``-ell^beta < min_ord_nondiv``."""
    def smallest(bound: int) -> int:
        e = 0
        while -(ell**e) >= bound:
            e += 1
        return e

    return AlphaBeta(smallest(4 * min_ord_div), smallest(min_ord_nondiv))


def gamma0_index(N: int) -> int:
    """``[SL_2(Z) : Gamma_0(N)] = N prod_{p | N} (1 + 1/p)``."""
    if N < 1:
        raise ValueError("level must be positive")
    index = N
    for p in sympy.primefactors(N):
        index = index // p * (p + 1)
    return index


def sturm_bound_weight(k: Union[int, Fraction], N: int) -> tuple[Fraction, int]:
    """``(k/12) [SL_2(Z) : Gamma_0(N)]`` for any positive weight, with its ceiling."""
    s = Fraction(k) / 12 * gamma0_index(N)
    return s, ceil(s)


def sturm_bound(k: int, N: int) -> tuple[Fraction, int]:
    """Sturm bound for weight ``k`` (even, >= 2) on ``Gamma_0(N)``: exact value and ceiling."""
    if k < 2 or k % 2:
        raise ValueError(f"weight must be an even integer >= 2, got {k}")
    return sturm_bound_weight(k, N)


def annihilation_check(
    s: TruncatedSeries,
    ctx: HeckeContext,
    bound: int,
    sturm: Optional[int] = None,
) -> AnnihilationResult:
    """Test whether every coefficient of ``s | T(p^2)`` with exponent ``<= bound`` vanishes mod ``ell^j``.

    ``sturm`` is the Sturm bound of the ambient space; the result only counts as
    a proof when ``bound`` reaches it.
    """
    if ctx.ell_pow is None:
        raise ValueError("annihilation_check needs ctx.ell_pow")
    m = ctx.ell_pow
    if s.modulus != m:
        if s.modulus is not None and s.modulus % m:
            raise ModulusMismatch(f"series mod {s.modulus} cannot be read mod {m}")
        s = reduce_mod(s, m)
    image = hecke_t_p2(s, ctx)
    if bound >= image.trunc:
        raise WindowError(
            f"bound {bound} exceeds the certain window of T({ctx.p}^2): need trunc > {ctx.p ** 2 * bound}, have {s.trunc}"
        )
    head = np.asarray(image.coeffs[: bound + 1])
    nz = np.nonzero(head != 0)[0]
    witness = int(nz[0]) if len(nz) else None
    return AnnihilationResult(
        annihilated=witness is None,
        witness=witness,
        p=ctx.p,
        bound=bound,
        window=image.trunc,
        modulus=m,
        sturm_bound=sturm,
    )
