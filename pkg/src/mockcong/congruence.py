"""Progression verification, scans, congruence assembly and the prime hunt.

A certificate records one progression ``c(A n + B) = 0 (mod m)`` together with
how far it was checked and where the data came from.  Certificates are value
objects: re-running :func:`verify_progression` on the same series reproduces
them exactly.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from math import gcd
from typing import Callable, Iterable, Optional, Union

import numpy as np
import sympy

from mockcong import __version__
from mockcong.hecke import (
    HeckeContext,
    annihilation_check,
    hecke_t_p2,
    prime_power_base,
)
from mockcong.qseries import ModulusMismatch, TruncatedSeries, WindowError, reduce_mod
from mockcong.twist import jacobi_symbol

__all__ = [
    "Status",
    "CongruenceCertificate",
    "Assembly",
    "HuntResult",
    "NoAdmissibleA",
    "verify_progression",
    "recheck_counterexample",
    "scan_progressions",
    "assemble_congruence",
    "m_progression",
    "hunt_annihilating_prime",
    "candidate_primes",
]


class Status(str, Enum):
    VERIFIED_TO_HORIZON = "VERIFIED_TO_HORIZON"
    COUNTEREXAMPLE = "COUNTEREXAMPLE"
    STURM_CERTIFIED = "STURM_CERTIFIED"


class NoAdmissibleA(ValueError):
    """No admissible ``A`` below the search cap."""


@dataclass
class CongruenceCertificate:
    series_id: str
    A: int
    B: int
    modulus: int
    horizon: int
    status: Status
    counterexample_n: Optional[int] = None
    provenance: list = field(default_factory=list)
    version: str = __version__
    checksum: Optional[str] = None

    def __post_init__(self):
        self.status = Status(self.status)
        if (self.status is Status.COUNTEREXAMPLE) != (self.counterexample_n is not None):
            raise ValueError("counterexample_n must be present exactly when status is COUNTEREXAMPLE")

    @property
    def verified(self) -> bool:
        return self.status is not Status.COUNTEREXAMPLE

    def to_dict(self) -> dict:
        out = asdict(self)
        out["status"] = self.status.value
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "CongruenceCertificate":
        return cls(**data)

    @classmethod
    def from_json(cls, text: str) -> "CongruenceCertificate":
        return cls.from_dict(json.loads(text))


def _readable_mod(s: TruncatedSeries, m: int) -> None:
    if m < 2:
        raise ValueError(f"modulus must be >= 2, got {m}")
    if s.modulus is not None and s.modulus % m:
        raise ModulusMismatch(f"series mod {s.modulus} cannot be read mod {m}")


def _progression_residues(s: TruncatedSeries, A: int, B: int, horizon: int, m: int) -> np.ndarray:
    # strided view into the stored block, so memmapped caches are read lazily
    picked = s.coeffs[B - s.val :: A][: horizon + 1]
    if picked.dtype == object:
        return np.array([int(c) % m for c in picked], dtype=object)
    if s.modulus == m:
        return picked
    return picked.astype(np.uint64) % np.uint64(m)


def verify_progression(
    s: TruncatedSeries,
    A: int,
    B: int,
    m: int,
    horizon: int,
    series_id: str = "",
    provenance: Optional[list] = None,
    checksum: Optional[str] = None,
) -> CongruenceCertificate:
    """Check ``c(A n + B) = 0 (mod m)`` for ``n = 0..horizon``."""
    if A < 1:
        raise ValueError(f"A must be positive, got {A}")
    if horizon < 0:
        raise ValueError(f"horizon must be nonnegative, got {horizon}")
    if B < s.val:
        raise ValueError(f"offset B={B} lies below the lowest stored exponent {s.val}")
    _readable_mod(s, m)
    last = A * horizon + B
    if last >= s.trunc:
        need = (s.trunc - 1 - B) // A
        raise WindowError(
            f"progression {A}n+{B} to n={horizon} reaches exponent {last} but trunc is {s.trunc}"
            + (f"; largest feasible horizon is {need}" if need >= 0 else "")
        )
    residues = _progression_residues(s, A, B, horizon, m)
    nz = np.flatnonzero(residues != 0)
    bad = int(nz[0]) if len(nz) else None
    return CongruenceCertificate(
        series_id=series_id,
        A=A,
        B=B,
        modulus=m,
        horizon=horizon,
        status=Status.VERIFIED_TO_HORIZON if bad is None else Status.COUNTEREXAMPLE,
        counterexample_n=bad,
        provenance=list(provenance or []),
        checksum=checksum,
    )


def recheck_counterexample(s: TruncatedSeries, cert: CongruenceCertificate) -> bool:
    """True when the recorded counterexample index really fails on ``s``."""
    if cert.counterexample_n is None:
        return False
    return int(s.coefficient(cert.A * cert.counterexample_n + cert.B)) % cert.modulus != 0


def scan_progressions(
    s: TruncatedSeries,
    m: int,
    A_set: Iterable[int],
    horizon: int,
    series_id: str = "",
    threads: int = 1,
    checksum: Optional[str] = None,
) -> list[CongruenceCertificate]:
    """Every ``(A, B)`` with ``0 <= B < A`` that survives to ``horizon``, ordered by ``A`` then ``B``."""
    A_list = sorted(set(A_set))
    for A in A_list:
        if A < 1:
            raise ValueError(f"A must be positive, got {A}")
        if A * horizon + A - 1 >= s.trunc:
            raise WindowError(f"scan of A={A} to horizon {horizon} needs trunc > {A * horizon + A - 1}, have {s.trunc}")
    _readable_mod(s, m)
    jobs = [(A, B) for A in A_list for B in range(max(s.val, 0), A)]

    def run(job):
        A, B = job
        return verify_progression(s, A, B, m, horizon, series_id=series_id, checksum=checksum)

    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            certs = list(pool.map(run, jobs))
    else:
        certs = [run(job) for job in jobs]
    return [c for c in certs if c.status is Status.VERIFIED_TO_HORIZON]


@dataclass(frozen=True)
class Assembly:
    """Progression data ``b(A_mod n + B) = 0`` on ``F`` and its image on ``M``.

    ``form`` is ``"proof"`` (modulus ``p^4 ell^(m+1) Q``) or ``"q_equals_ell"``
    (modulus ``p^4 ell``).  ``statement_modulus`` is the shorter ``p^4 ell^m Q``
    form, kept alongside for provenance.
    """

    p: int
    ell: int
    m: int
    Q: int
    A: int
    A_mod: int
    B: int
    B_prime: Fraction
    delta: int
    tau: int
    form: str
    statement_modulus: int
    cap: int

    @property
    def B_prime_integral(self) -> bool:
        return self.B_prime.denominator == 1

    def to_dict(self) -> dict:
        out = asdict(self)
        out["B_prime"] = str(self.B_prime)
        return out


def _delta_tau(spec) -> tuple[int, int]:
    if isinstance(spec, tuple):
        return int(spec[0]), int(spec[1])
    return spec.delta, spec.tau


def assemble_congruence(
    p: int,
    ell: int,
    m: int,
    Q: int,
    spec,
    allow_q_equals_ell: bool = False,
    cap: Optional[int] = None,
) -> Assembly:
    """Find the smallest admissible ``A`` and the resulting progression.

    ``spec`` is a :class:`~mockcong.catalog.MockThetaSpec` or a ``(delta, tau)`` pair.
    """
    delta, tau = _delta_tau(spec)
    for name, x in (("p", p), ("ell", ell), ("Q", Q)):
        if not sympy.isprime(x):
            raise ValueError(f"{name}={x} is not prime")
    if Q == 2:
        raise ValueError("Q must be odd")
    if m < 0:
        raise ValueError("m must be nonnegative")
    if p in (ell, Q):
        raise ValueError(f"p={p} must be coprime to ell*Q={ell * Q}")
    q_is_ell = Q == ell
    if q_is_ell:
        if not allow_q_equals_ell:
            raise ValueError("Q = ell needs the explicit override")
        if m != 0:
            raise ValueError("the Q = ell form only applies with alpha = 0")
    if cap is None:
        cap = 4 * Q * delta * ell
    base = p**3 * ell**m
    congruence_class = None
    if gcd(delta, p * Q * ell) == 1 and delta > 1:
        congruence_class = tau * pow(base, -1, delta) % delta
    for A in range(1, cap + 1):
        if gcd(A, p * ell) != 1:
            continue
        if jacobi_symbol(-base * A, Q) != -1:
            continue
        if congruence_class is not None and A % delta != congruence_class:
            continue
        break
    else:
        raise NoAdmissibleA(f"no admissible A <= {cap} for p={p}, ell={ell}, m={m}, Q={Q}")
    B = base * A
    A_mod = p**4 * ell if q_is_ell else p**4 * ell ** (m + 1) * Q
    return Assembly(
        p=p,
        ell=ell,
        m=m,
        Q=Q,
        A=A,
        A_mod=A_mod,
        B=B,
        B_prime=Fraction(B - tau, delta),
        delta=delta,
        tau=tau,
        form="q_equals_ell" if q_is_ell else "proof",
        statement_modulus=p**4 * ell**m * Q,
        cap=cap,
    )


def m_progression(A_mod: int, B: int, delta: int, tau: int) -> Optional[tuple[int, int]]:
    """The progression on ``M`` hit by ``F``-exponents ``A_mod n + B``, where ``F = q^tau M(q^delta)``.

    Returns ``(A', B')`` with ``(A_mod n + B - tau)/delta`` running over ``A' k + B'``,
    or ``None`` when no term of the progression is ``= tau (mod delta)``.
    """
    g = gcd(A_mod, delta)
    if (B - tau) % g:
        return None
    step = delta // g
    # smallest n >= 0 with A_mod n + B = tau (mod delta)
    n0 = ((tau - B) // g) * pow(A_mod // g, -1, step) % step if step > 1 else 0
    first = A_mod * n0 + B
    return A_mod // g, (first - tau) // delta


@dataclass
class HuntResult:
    """Outcome of an annihilating-prime search.

    ``attempts`` lists ``(p, witness)`` for every prime tried; a witness of
    ``None`` marks the successful prime.
    """

    p: Optional[int]
    certificate: Optional[CongruenceCertificate]
    attempts: list = field(default_factory=list)
    skipped: list = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.p is not None


def candidate_primes(
    level: int,
    ell_pow: int,
    p_max: int,
    restrict_class: bool = True,
    exclude: Iterable[int] = (),
    start: int = 3,
) -> list[int]:
    """Admissible primes ``p <= p_max``: coprime to ``level * ell``, optionally ``p = -1 (mod level * ell_pow)``."""
    ell, _ = prime_power_base(ell_pow)
    banned = set(exclude)
    class_mod = level * ell_pow
    out = []
    for p in sympy.primerange(max(start, 3), p_max + 1):
        if p in banned or gcd(p, 2 * level * ell) != 1:
            continue
        if restrict_class and (p + 1) % class_mod:
            continue
        out.append(int(p))
    return out


ChiRule = Union[int, Callable[[int], int]]


def hunt_annihilating_prime(
    s_hat: TruncatedSeries,
    ell_pow: int,
    alpha: int,
    lam: int,
    chi_p_rule: ChiRule,
    level: int,
    p_max: int,
    bound: Optional[int] = None,
    restrict_class: bool = True,
    exclude: Iterable[int] = (),
    sturm: Optional[int] = None,
    min_bound: int = 1,
    series_id: str = "",
    threads: int = 1,
) -> HuntResult:
    """First prime ``p`` with ``s_hat | T(p^2) = 0 (mod ell_pow)`` up to the bound.

    With ``bound=None`` every prime is checked on its full certain window, which
    must reach ``min_bound``.  Primes whose window is too small are skipped and
    listed; if every candidate is skipped a :class:`WindowError` reports the
    smallest truncation that would admit the first one.
    """
    if s_hat.modulus is not None and s_hat.modulus % ell_pow:
        raise ModulusMismatch(f"series mod {s_hat.modulus} cannot be read mod {ell_pow}")
    s =s_hat if s_hat.modulus == ell_pow else reduce_mod(s_hat, ell_pow)
    primes = candidate_primes(level, ell_pow, p_max, restrict_class, exclude)
    chi = chi_p_rule if callable(chi_p_rule) else (lambda p, _c=chi_p_rule: _c)
    result = HuntResult(None, None)
    if not primes:
        return result

    def bound_for(p: int) -> Optional[int]:
        window = (s.trunc - 1) // (p * p)  # largest certain exponent
        b = window if bound is None else bound
        if b > window or b < min_bound:
            return None
        return b

    usable = [(p, bound_for(p)) for p in primes]
    if all(b is None for _, b in usable):
        need = primes[0] ** 2 * (bound if bound is not None else min_bound) + 1
        raise WindowError(f"window too small for every candidate prime; need trunc >= {need}, have {s.trunc}")
    result.skipped = [p for p, b in usable if b is None]
    todo = [(p, b) for p, b in usable if b is not None]

    def check(item):
        p, b = item
        ctx = HeckeContext(p, lam, int(chi(p)), ell_pow, level)
        return annihilation_check(s, ctx, b, sturm=sturm), ctx

    def record(outcome):
        res, ctx = outcome
        result.attempts.append((res.p, res.witness))
        if not res.annihilated:
            return False
        status = Status.STURM_CERTIFIED if res.sturm_certified else Status.VERIFIED_TO_HORIZON
        result.p = res.p
        result.certificate = CongruenceCertificate(
            series_id=f"{series_id}|T({res.p}^2)" if series_id else f"T({res.p}^2)",
            A=1,
            B=0,
            modulus=ell_pow,
            horizon=res.bound,
            status=status,
            provenance=[
                {
                    "step": "hecke",
                    "p": res.p,
                    "lambda": ctx.lam,
                    "chi_p": ctx.chi_p,
                    "alpha": alpha,
                    "level": level,
                    "bound": res.bound,
                    "window": res.window,
                    "sturm_bound": sturm,
                    "sturm_reached": res.sturm_certified,
                }
            ],
        )
        return True

    if threads > 1:
        # evaluate in batches but accept in prime order, so the answer never depends on scheduling
        with ThreadPoolExecutor(max_workers=threads) as pool:
            for i in range(0, len(todo), threads):
                for outcome in pool.map(check, todo[i : i + threads]):
                    if record(outcome):
                        return result
    else:
        for item in todo:
            if record(check(item)):
                return result
    return result


def hecke_image(s: TruncatedSeries, p: int, lam: int, chi_p: int, level: int) -> TruncatedSeries:
    """``s | T(p^2)`` for re-checking a hunt certificate."""
    return hecke_t_p2(s, HeckeContext(p, lam, chi_p, None, level))
