"""Generators for the partition function and Ramanujan's mock theta functions.

Each Eulerian series is described by a :class:`TermRule`: the n-th summand is
``q^e(n)`` over (or times) a few Pochhammer symbols whose lengths grow with n.
Expansion keeps the Pochhammer part of the summand as a running power series
and updates it by one factor per step, so a summand costs one linear pass
instead of a fresh product.
"""

from __future__ import annotations

import re
import shlex
from dataclasses import dataclass
from importlib import resources
from math import gcd
from pathlib import Path
from typing import Optional, Union

import numpy as np
import sympy

from mockcong import _kernels
from mockcong.qseries import (
    TruncatedSeries,
    _is_machine,
    divide_inplace,
    multiply_inplace,
    one,
    zero,
)

__all__ = [
    "Factor",
    "TermRule",
    "MockThetaSpec",
    "CatalogError",
    "SupportError",
    "expand_term_rule",
    "partition_series",
    "expand_f",
    "expand_psi",
    "expand_omega",
    "expand_omega_paper",
    "expand_omega_std",
    "expand_series",
    "reindex_to_F",
    "reindex_from_F",
    "load_catalog",
    "get_spec",
]


class CatalogError(ValueError):
    pass


class SupportError(ValueError):
    """A series has a nonzero coefficient off the progression ``delta*Z + tau``."""

    def __init__(self, exponent: int, delta: int, tau: int):
        super().__init__(f"exponent {exponent} is not congruent to {tau} mod {delta}")
        self.exponent = exponent


_FACTOR_RE = re.compile(
    r"^\((?P<neg>-?)q(?:\^(?P<a>\d+))?;q(?:\^(?P<b>\d+))?\)_"
    r"(?:n|\{n(?P<c>[+-]\d+)?\})(?:\^(?P<power>-?\d+))?$"
)


@dataclass(frozen=True)
class Factor:
    """``(q^a; q^b)_{n+offset}^power``, or ``(-q^a; q^b)`` when ``plus`` is set."""

    plus: bool
    a: int
    b: int
    offset: int
    power: int

    @classmethod
    def parse(cls, text: str) -> "Factor":
        m = _FACTOR_RE.match(text.strip())
        if not m:
            raise CatalogError(f"cannot parse Pochhammer factor {text!r}")
        return cls(
            plus=m["neg"] == "-",
            a=int(m["a"] or 1),
            b=int(m["b"] or 1),
            offset=int(m["c"] or 0),
            power=int(m["power"] or 1),
        )

    def __str__(self) -> str:
        a = "q" if self.a == 1 else f"q^{self.a}"
        b = "q" if self.b == 1 else f"q^{self.b}"
        n = "n" if self.offset == 0 else f"{{n{self.offset:+d}}}"
        return f"({'-' if self.plus else ''}{a};{b})_{n}^{self.power}"

    def element(self, k: int) -> int:
        """Exponent of the k-th factor ``1 -+ q^(a + k*b)``."""
        return self.a + k * self.b


@dataclass(frozen=True)
class TermRule:
    """Summands ``(+-1)^n q^(c0 + c1 n + c2 n^2) * prod(factors)`` for ``n >= start``."""

    exponent: tuple[int, int, int]
    start: int
    factors: tuple[Factor, ...]
    alternating: bool = False

    def __post_init__(self):
        c0, c1, c2 = self.exponent
        if c2 < 0 or (c2 == 0 and c1 <= 0):
            raise CatalogError("summand exponent must grow without bound")
        for f in self.factors:
            if self.start + f.offset < 0:
                raise CatalogError(f"factor {f} has negative length at n={self.start}")
        if self.lowest_exponent(self.start) < 0:
            raise CatalogError("summand exponents must be nonnegative")

    @classmethod
    def parse(cls, exponent: str, start: int, factors: str, alternating: bool = False) -> "TermRule":
        coeffs = tuple(int(x) for x in exponent.split(","))
        if len(coeffs) != 3:
            raise CatalogError(f"exponent needs three coefficients, got {exponent!r}")
        parts = tuple(Factor.parse(x) for x in factors.split("*") if x.strip())
        return cls(coeffs, int(start), parts, alternating)

    def e(self, n: int) -> int:
        c0, c1, c2 = self.exponent
        return c0 + c1 * n + c2 * n * n

    def lowest_exponent(self, n: int) -> int:
        """``min e(k)`` over integers ``k >= n``."""
        c0, c1, c2 = self.exponent
        candidates = [n]
        if c2 > 0:
            v = -c1 // (2 * c2)
            candidates += [k for k in (v, v + 1) if k > n]
        return min(self.e(k) for k in candidates)


def expand_term_rule(rule: TermRule, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """Sum the summands of ``rule`` up to ``q^(trunc-1)``."""
    if trunc < 1:
        raise ValueError("trunc must be >= 1")
    out = zero(trunc, 0, modulus).work()
    machine = _is_machine(modulus)
    n = rule.start
    length = trunc - rule.lowest_exponent(n)
    if length <= 0:
        return TruncatedSeries._trusted(0, out, modulus)
    pochhammer_part = one(length, modulus).work()

    def apply(f: Factor, k: int, buf, size):
        e = f.element(k)
        for _ in range(abs(f.power)):
            if f.power < 0:
                divide_inplace(buf, size, e, f.plus, modulus)
            else:
                multiply_inplace(buf, size, e, f.plus, modulus)

    for f in rule.factors:
        for k in range(n + f.offset):
            apply(f, k, pochhammer_part, length)

    while True:
        e = rule.e(n)
        if e < trunc:
            size = trunc - e
            negate = rule.alternating and n % 2 == 1
            if machine:
                _kernels.accumulate_mod(out, e, pochhammer_part, size, negate, modulus)
            else:
                if negate:
                    out[e:] -= pochhammer_part[:size]
                else:
                    out[e:] += pochhammer_part[:size]
                if modulus is not None:
                    out[e:] %= modulus
        n += 1
        length = trunc - rule.lowest_exponent(n)
        if length <= 0:
            break
        for f in rule.factors:
            apply(f, n + f.offset - 1, pochhammer_part, length)
    return TruncatedSeries._trusted(0, out, modulus)


def _pentagonal_exact(trunc: int) -> list[int]:
    p = [0] * trunc
    p[0] = 1
    for n in range(1, trunc):
        acc = 0
        k = 1
        while True:
            g = k * (3 * k - 1) // 2
            if g > n:
                break
            s = p[n - g]
            if g + k <= n:
                s += p[n - g - k]
            acc = acc + s if k & 1 else acc - s
            k += 1
        p[n] = acc
    return p


def partition_series(trunc: int, modulus: Optional[int] = None, method: str = "pentagonal") -> TruncatedSeries:
    """``p(0), ..., p(trunc-1)`` by Euler's pentagonal recurrence or by dividing out ``prod(1 - q^n)``."""
    if trunc < 1:
        raise ValueError("trunc must be >= 1")
    if method == "product":
        work = one(trunc, modulus).work()
        for m in range(1, trunc):
            divide_inplace(work, trunc, m, False, modulus)
        return TruncatedSeries._trusted(0, work, modulus)
    if method != "pentagonal":
        raise ValueError(f"unknown method {method!r}")
    if _is_machine(modulus):
        return TruncatedSeries._trusted(0, _kernels.partition_pentagonal_mod(trunc, modulus), modulus)
    values = _pentagonal_exact(trunc)
    if modulus is not None:
        values = [v % modulus for v in values]
    return TruncatedSeries._trusted(0, np.array(values, dtype=object), modulus)


F_RULE = TermRule.parse("0,0,1", 0, "(-q;q)_n^-2")
PSI_RULE = TermRule.parse("0,0,1", 1, "(q;q^2)_n^-1")
OMEGA_PAPER_RULE = TermRule.parse("0,2,2", 0, "(q;q^2)_n^-2")
OMEGA_STD_RULE = TermRule.parse("0,2,2", 0, "(q;q^2)_{n+1}^-2")
PARTITION_RULE = TermRule.parse("0,0,1", 0, "(q;q)_n^-2")


def expand_f(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """Third-order ``f(q) = 1 + sum q^(n^2) / (-q;q)_n^2``."""
    return expand_term_rule(F_RULE, trunc, modulus)


def expand_psi(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """Third-order ``psi(q) = sum_{n>=1} q^(n^2) / (q;q^2)_n``."""
    return expand_term_rule(PSI_RULE, trunc, modulus)


def expand_omega_paper(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """``sum q^(2n^2+2n) / (q;q^2)_n^2``, the formula exactly as printed."""
    return expand_term_rule(OMEGA_PAPER_RULE, trunc, modulus)


def expand_omega_std(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """``sum q^(2n^2+2n) / (q;q^2)_{n+1}^2``, Watson's third-order omega."""
    return expand_term_rule(OMEGA_STD_RULE, trunc, modulus)


def expand_omega(trunc: int, modulus: Optional[int] = None, variant: str = "std") -> TruncatedSeries:
    if variant == "paper":
        return expand_omega_paper(trunc, modulus)
    if variant == "std":
        return expand_omega_std(trunc, modulus)
    raise ValueError(f"unknown omega variant {variant!r}")


@dataclass(frozen=True)
class MockThetaSpec:
    """Catalog entry: a series and the data placing ``F = q^tau M(q^delta)`` in a space of forms."""

    name: str
    term_rule: TermRule
    delta: int
    tau: int
    level: int
    shadow_deltas: tuple[int, ...]
    character: int = 1
    weight_twice: int = 1
    source: str = ""

    def __post_init__(self):
        if self.delta < 1:
            raise CatalogError(f"{self.name}: delta must be positive")
        if gcd(self.delta, self.tau) != 1:
            raise CatalogError(f"{self.name}: delta={self.delta} and tau={self.tau} are not coprime")
        if self.level < 1 or self.level % 4:
            raise CatalogError(f"{self.name}: level {self.level} is not a positive multiple of 4")
        if not self.shadow_deltas:
            raise CatalogError(f"{self.name}: shadow_deltas must be nonempty")
        for d in self.shadow_deltas:
            if d < 1 or any(e > 1 for e in sympy.factorint(d).values()):
                raise CatalogError(f"{self.name}: shadow delta {d} is not squarefree")

    def to_record(self) -> str:
        r = self.term_rule
        fields = {
            "name": self.name,
            "exp": ",".join(str(c) for c in r.exponent),
            "start": r.start,
            "factors": "*".join(str(f) for f in r.factors),
            "alt": int(r.alternating),
            "delta": self.delta,
            "tau": self.tau,
            "level": self.level,
            "shadow": ",".join(str(d) for d in self.shadow_deltas),
            "character": self.character,
            "weight2": self.weight_twice,
            "source": self.source,
        }
        return " ".join(f"{k}={v}" for k, v in fields.items() if v != "")


_REQUIRED = ("name", "exp", "start", "factors", "delta", "tau", "level", "shadow")


def parse_record(line: str) -> MockThetaSpec:
    fields = {}
    for token in shlex.split(line):
        key, sep, value = token.partition("=")
        if not sep:
            raise CatalogError(f"malformed field {token!r}")
        fields[key] = value
    missing = [k for k in _REQUIRED if k not in fields]
    if missing:
        raise CatalogError(f"record is missing {', '.join(missing)}: {line!r}")
    rule = TermRule.parse(fields["exp"], int(fields["start"]), fields["factors"], fields.get("alt", "0") == "1")
    return MockThetaSpec(
        name=fields["name"],
        term_rule=rule,
        delta=int(fields["delta"]),
        tau=int(fields["tau"]),
        level=int(fields["level"]),
        shadow_deltas=tuple(int(x) for x in fields["shadow"].split(",")),
        character=int(fields.get("character", 1)),
        weight_twice=int(fields.get("weight2", 1)),
        source=fields.get("source", ""),
    )


def load_catalog(path: Union[str, Path, None] = None) -> dict[str, MockThetaSpec]:
    """Read a catalog file (the shipped one by default)."""
    if path is None:
        text = resources.files("mockcong").joinpath("data/catalog.txt").read_text()
    else:
        text = Path(path).read_text()
    specs = {}
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        spec = parse_record(line)
        if spec.name in specs:
            raise CatalogError(f"duplicate catalog entry {spec.name!r}")
        specs[spec.name] = spec
    return specs


def get_spec(name: str, catalog: Optional[dict[str, MockThetaSpec]] = None) -> MockThetaSpec:
    catalog = catalog if catalog is not None else load_catalog()
    try:
        return catalog[name]
    except KeyError:
        raise CatalogError(f"unknown series {name!r}; known: {', '.join(sorted(catalog))}") from None


def expand_series(spec: Union[str, MockThetaSpec], trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """Expand a catalog entry; the partition function uses the pentagonal recurrence."""
    if isinstance(spec, str):
        spec = get_spec(spec)
    if spec.name == "partition":
        return partition_series(trunc, modulus)
    return expand_term_rule(spec.term_rule, trunc, modulus)


def _delta_tau(spec) -> tuple[int, int]:
    if isinstance(spec, MockThetaSpec):
        return spec.delta, spec.tau
    delta, tau = spec
    return int(delta), int(tau)


def reindex_to_F(s: TruncatedSeries, spec) -> TruncatedSeries:
    """``q^tau M(q^delta)``: the coefficient ``c(n)`` moves to exponent ``delta*n + tau``."""
    delta, tau = _delta_tau(spec)
    val = delta * s.val + tau
    trunc = delta * s.trunc + tau
    if delta == 1:
        return TruncatedSeries._trusted(val, s.coeffs.copy(), s.modulus)
    if _is_machine(s.modulus):
        work = np.zeros(trunc - val, np.int64)
    else:
        work = np.array([0] * (trunc - val), dtype=object)
    work[::delta] = s.work()
    return TruncatedSeries._trusted(val, work, s.modulus)


def reindex_from_F(s: TruncatedSeries, spec) -> TruncatedSeries:
    """Inverse of :func:`reindex_to_F`; refuses series supported off ``delta*Z + tau``."""
    delta, tau = _delta_tau(spec)
    exps = s.nonzero_exponents()
    bad = exps[(exps - tau) % delta != 0]
    if len(bad):
        raise SupportError(int(bad[0]), delta, tau)
    val = -((tau - s.val) // delta)  # ceil((s.val - tau) / delta)
    trunc = -((tau - s.trunc) // delta)
    if trunc <= val:
        return TruncatedSeries._trusted(val, s.work()[:0], s.modulus)
    first = delta * val + tau - s.val
    work = s.work()[first::delta][: trunc - val]
    return TruncatedSeries._trusted(val, work.copy(), s.modulus)
