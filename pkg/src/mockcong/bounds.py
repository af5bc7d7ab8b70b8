"""Effective bounds on the smallest annihilating prime.

``B`` is astronomically large for any realistic space, so reports carry it in
exponent form ``ell**B_exponent`` and evaluate the integer only below a size
cap.  The constant ``A1`` of the unconditional bound is never evaluated; the
bound is reported as ``log2`` of the quantity that ``A1`` exponentiates.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

import mpmath
import sympy

from mockcong.hecke import gamma0_index, sturm_bound

__all__ = [
    "BoundReport",
    "dim_cusp_forms",
    "B_exponent",
    "compute_B",
    "compute_B_general",
    "compute_L",
    "grh_bound",
    "unconditional_bound_log",
    "pessimistic_v",
    "pipeline_bound_report",
]

A1_SYMBOL = "A1"
DEFAULT_MAX_B_BITS = 1 << 16


def _kronecker_prime(d: int, p: int) -> int:
    return int(sympy.kronecker_symbol(d, p))


def dim_cusp_forms(k: int, N: int) -> int:
    """``dim S_k(Gamma_0(N))`` for even ``k >= 4`` (trivial character)."""
    if k % 2 or k < 4:
        raise ValueError(f"weight must be even and >= 4, got {k}")
    if N < 1:
        raise ValueError("level must be positive")
    primes = sympy.primefactors(N)
    mu = gamma0_index(N)
    e2 = 0 if N % 4 == 0 else math.prod(1 + _kronecker_prime(-4, p) for p in primes)
    e3 = 0 if N % 9 == 0 else math.prod(1 + _kronecker_prime(-3, p) for p in primes)
    cusps = sum(sympy.totient(math.gcd(d, N // d)) for d in sympy.divisors(N))
    genus = 1 + Fraction(mu, 12) - Fraction(e2, 4) - Fraction(e3, 3) - Fraction(cusps, 2)
    assert genus.denominator == 1
    g = int(genus)
    return int((k - 1) * (g - 1) + (k // 2 - 1) * cusps + e2 * (k // 4) + e3 * (k // 3))


def B_exponent(j: int, d: int, r: int, v: int) -> int:
    return 4 * d * r * (d * v + j)


def compute_B(ell: int, j: int, d: int, r: int, v: int) -> int:
    """``ell^(4dr(dv+j))``, the rational-coefficient case."""
    if j < 1 or d < 1 or r < 1 or v < 0:
        raise ValueError("need j, d, r >= 1 and v >= 0")
    return ell ** B_exponent(j, d, r, v)


def compute_B_general(ell: int, d: int, places: Iterable[tuple[int, int, int]]) -> int:
    """``prod_m ell^(4 d r_m (d v_m + alpha_m))`` over ``places = [(r_m, v_m, alpha_m), ...]``.

    ``alpha_m`` is taken as given; no definition of it is assumed here.
    """
    return ell ** sum(4 * d * r * (d * v + a) for r, v, a in places)


def compute_L(ell: int, N: int) -> int:
    """``ell`` times the product of the primes dividing ``N``."""
    if N < 1:
        raise ValueError("level must be positive")
    return ell * math.prod(sympy.primefactors(N))


def _check_int_args(**kwargs) -> None:
    for name, x in kwargs.items():
        if isinstance(x, bool) or not isinstance(x, int):
            raise TypeError(f"{name} must be an integer, got {x!r}")
        if x < 2:
            raise ValueError(f"{name} must be >= 2, got {x}")


def grh_bound(B: int, L: int) -> int:
    """``ceil(280 B^2 (ln B + ln L)^2)``."""
    _check_int_args(B=B, L=L)
    bits = 2 * B.bit_length() + 2 * (B.bit_length() + L.bit_length()).bit_length() + 80
    with mpmath.workprec(bits):
        value = 280 * mpmath.mpf(B) ** 2 * (mpmath.log(B) + mpmath.log(L)) ** 2
        return int(mpmath.ceil(value))


def unconditional_bound_log(B: int, L: int) -> mpmath.mpf:
    """``log2(2 L^(B-1) B^B) = 1 + (B-1) log2 L + B log2 B``; the bound is ``2^(A1 * this)``-sized."""
    _check_int_args(B=B, L=L)
    with mpmath.workdps(30):
        return mpmath.mpf(1) + (B - 1) * mpmath.log(L, 2) + B * mpmath.log(B, 2)


def _unconditional_log_from_exponent(ell: int, exponent: int, L: int) -> mpmath.mpf:
    with mpmath.workdps(30):
        B = mpmath.mpf(ell) ** exponent
        return 1 + (B - 1) * mpmath.log(L, 2) + B * exponent * mpmath.log(ell, 2)


def _log2_grh_from_exponent(ell: int, exponent: int, L: int) -> float:
    with mpmath.workdps(30):
        lnB = exponent * mpmath.log(ell)
        return float(mpmath.log(280, 2) + 2 * lnB / mpmath.log(2) + 2 * mpmath.log(lnB + mpmath.log(L), 2))


def pessimistic_v(ell: int, k: int, sturm: int) -> int:
    """Upper bound on the ell-adic valuation of a nonzero integer coefficient ``a(n)``, ``n <= sturm``.

    Uses ``|a(n)| <= d(n) n^((k-1)/2) <= 2 n^(k/2)``; only meaningful for
    eigenforms with rational coefficients.
    """
    return int(math.floor(math.log(2, ell) + (k / 2) * math.log(max(sturm, 1), ell)))


@dataclass
class BoundReport:
    ell: int
    j: int
    weight: int
    level: int
    d: int
    s: int
    v: int
    r: int
    B_exponent: int
    L: int
    log2_B: float
    log2_unconditional: str
    log2_grh: float
    B: Optional[int] = None
    grh_bound: Optional[int] = None
    A1: str = A1_SYMBOL
    notes: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        out = asdict(self)
        for key in ("B", "grh_bound"):
            if out[key] is not None:
                out[key] = str(out[key])
        return out

    def to_text(self) -> str:
        lines = []
        for key, value in self.to_dict().items():
            if key == "notes":
                for note in value:
                    lines.append(f"note: {note}")
                continue
            lines.append(f"{key}: {'' if value is None else value}")
        return "\n".join(lines) + "\n"


def pipeline_bound_report(
    N: int,
    Q: int,
    ell: int,
    j: int,
    beta: int = 0,
    v: Optional[int] = 0,
    r: int = 1,
    max_B_bits: int = DEFAULT_MAX_B_BITS,
) -> BoundReport:
    """Bounds for ``S = S_{ell^beta (ell^2-1)}(Gamma_0(2 N Q^3 ell^2))``.

    ``N`` is the level of the harmonic Maass form divided by 4.  Pass
    ``v=None`` for the pessimistic valuation estimate.
    """
    if ell % 2 == 0 or not sympy.isprime(ell):
        raise ValueError(f"ell must be an odd prime, got {ell}")
    if math.gcd(4 * N, ell) != 1:
        raise ValueError(f"ell={ell} must be coprime to 4N={4 * N}")
    if Q % 2 == 0 or not sympy.isprime(Q):
        raise ValueError(f"Q must be an odd prime, got {Q}")
    if j < 1 or beta < 0 or r < 1:
        raise ValueError("need j >= 1, beta >= 0, r >= 1")
    k = ell**beta * (ell * ell - 1)
    level = 2 * N * Q**3 * ell**2
    d = dim_cusp_forms(k, level)
    _, s = sturm_bound(k, level)
    notes = []
    if v is None:
        v = pessimistic_v(ell, k, s)
        notes.append("v from the pessimistic coefficient-size estimate")
    exponent = B_exponent(j, d, r, v)
    L = compute_L(ell, level)
    log2_B = exponent * math.log2(ell)
    report = BoundReport(
        ell=ell,
        j=j,
        weight=k,
        level=level,
        d=d,
        s=s,
        v=v,
        r=r,
        B_exponent=exponent,
        L=L,
        log2_B=log2_B,
        log2_unconditional=mpmath.nstr(_unconditional_log_from_exponent(ell, exponent, L), 15),
        log2_grh=_log2_grh_from_exponent(ell, exponent, L),
        notes=notes,
    )
    if log2_B <= max_B_bits:
        report.B = ell**exponent
        report.grh_bound = grh_bound(report.B, L)
    else:
        report.notes.append(f"B has about {int(log2_B)} bits; kept in exponent form")
    return report
