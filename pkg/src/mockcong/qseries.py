"""Truncated q-series over the integers and over Z/mZ.

A :class:`TruncatedSeries` stores the coefficients of ``q^val .. q^(trunc-1)``;
everything at or above ``trunc`` is unknown.  Operations only ever return the
window on which their result is provably exact.

Residues mod ``m`` live in the smallest unsigned numpy cell that holds
``m**2``.  Exact series (and moduli too large for a 64-bit product) use object
arrays of Python integers.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from mockcong import _kernels

__all__ = [
    "ModulusMismatch",
    "WindowError",
    "TruncatedSeries",
    "cell_dtype",
    "series",
    "zero",
    "one",
    "monomial",
    "series_add",
    "series_sub",
    "series_neg",
    "series_scale",
    "series_mul",
    "schoolbook_mul",
    "geometric_divide",
    "geometric_multiply",
    "pochhammer",
    "reduce_mod",
    "shift",
    "restrict",
    "common_window",
]

_INT64_SAFE = 2**63


class ModulusMismatch(ValueError):
    """Raised when two series with different coefficient rings are combined."""


class WindowError(ValueError):
    """Raised when a request reaches beyond the certain window of a series."""


def cell_dtype(modulus: Optional[int]):
    """Storage dtype for residues mod ``modulus`` (object for exact series)."""
    if modulus is None:
        return np.dtype(object)
    square = modulus * modulus
    for dt in (np.uint8, np.uint16, np.uint32, np.uint64):
        if square <= np.iinfo(dt).max and square < _INT64_SAFE:
            return np.dtype(dt)
    return np.dtype(object)


def _is_machine(modulus: Optional[int]) -> bool:
    return modulus is not None and modulus * modulus < _INT64_SAFE


def _to_storage(values, modulus: Optional[int]) -> np.ndarray:
    if modulus is None:
        arr = np.asarray(values)
        if arr.dtype != object:
            arr = np.array([int(x) for x in arr.ravel()], dtype=object)
        else:
            arr = arr.copy()
        return arr
    if _is_machine(modulus):
        arr = np.asarray(values)
        if arr.dtype == object:
            arr = np.array([int(x) % modulus for x in arr], dtype=np.int64)
        else:
            arr = np.mod(arr.astype(np.int64, copy=False), modulus)
        return arr.astype(cell_dtype(modulus))
    arr = np.array([int(x) % modulus for x in np.asarray(values, dtype=object)], dtype=object)
    return arr


@dataclass(frozen=True, eq=False)
class TruncatedSeries:
    """Coefficients of ``q^val, ..., q^(trunc-1)``, exact or mod ``modulus``."""

    val: int
    coeffs: np.ndarray
    modulus: Optional[int] = None

    def __post_init__(self):
        if self.modulus is not None and self.modulus < 2:
            raise ValueError(f"modulus must be >= 2, got {self.modulus}")
        coeffs = _to_storage(self.coeffs, self.modulus)
        coeffs.flags.writeable = False
        object.__setattr__(self, "val", int(self.val))
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def _trusted(cls, val: int, coeffs: np.ndarray, modulus: Optional[int]) -> "TruncatedSeries":
        # skips reduction; coeffs must already be reduced
        if _is_machine(modulus) and coeffs.dtype != cell_dtype(modulus):
            coeffs = coeffs.astype(cell_dtype(modulus))
        if coeffs.flags.writeable:
            coeffs.flags.writeable = False
        obj = object.__new__(cls)
        object.__setattr__(obj, "val", int(val))
        object.__setattr__(obj, "coeffs", coeffs)
        object.__setattr__(obj, "modulus", modulus)
        return obj

    @property
    def trunc(self) -> int:
        return self.val + len(self.coeffs)

    @property
    def is_exact(self) -> bool:
        return self.modulus is None

    def __len__(self) -> int:
        return len(self.coeffs)

    def coefficient(self, n: int) -> int:
        """Coefficient of q^n; zero below ``val``, an error at or above ``trunc``."""
        if n >= self.trunc:
            raise WindowError(f"exponent {n} is outside the certain window (trunc={self.trunc})")
        if n < self.val:
            return 0
        return int(self.coeffs[n - self.val])

    __getitem__ = coefficient

    def to_list(self) -> list[int]:
        return [int(x) for x in self.coeffs]

    def signed(self) -> list[int]:
        """Coefficients with residues mapped to the symmetric range."""
        if self.modulus is None:
            return self.to_list()
        m = self.modulus
        return [c - m if c > m // 2 else c for c in self.to_list()]

    def nonzero_exponents(self) -> np.ndarray:
        return np.nonzero(self.coeffs != 0)[0] + self.val

    def is_zero(self) -> bool:
        return not np.any(self.coeffs != 0)

    def work(self) -> np.ndarray:
        """A fresh mutable copy in the arithmetic dtype (int64 or object)."""
        if _is_machine(self.modulus):
            return self.coeffs.astype(np.int64)
        return self.coeffs.astype(object).copy()

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (
            self.modulus == other.modulus
            and self.val == other.val
            and len(self.coeffs) == len(other.coeffs)
            and bool(np.all(self.coeffs == other.coeffs))
        )

    __hash__ = None

    def __add__(self, other):
        return series_add(self, other)

    def __sub__(self, other):
        return series_sub(self, other)

    def __mul__(self, other):
        if isinstance(other, TruncatedSeries):
            return series_mul(self, other)
        return series_scale(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return series_neg(self)

    def __repr__(self) -> str:
        terms = []
        for e, c in zip(range(self.val, self.trunc), self.signed()):
            if c:
                terms.append(f"{c}*q^{e}")
            if len(terms) == 8:
                terms.append("...")
                break
        body = " + ".join(terms) if terms else "0"
        mod = f" mod {self.modulus}" if self.modulus else ""
        return f"<TruncatedSeries {body} + O(q^{self.trunc}){mod}>"


def series(
    coeffs: Iterable[int],
    val: int = 0,
    modulus: Optional[int] = None,
    trunc: Optional[int] = None,
) -> TruncatedSeries:
    """Build a series from ``coeffs`` starting at ``q^val``, zero-padded to ``trunc``."""
    values = list(coeffs)
    if trunc is not None:
        if trunc < val + len(values):
            values = values[: max(trunc - val, 0)]
        else:
            values = values + [0] * (trunc - val - len(values))
    return TruncatedSeries(val, np.array(values, dtype=object), modulus)


def zero(trunc: int, val: int = 0, modulus: Optional[int] = None) -> TruncatedSeries:
    length = max(trunc - val, 0)
    if _is_machine(modulus):
        return TruncatedSeries._trusted(val, np.zeros(length, np.int64), modulus)
    return TruncatedSeries._trusted(val, np.array([0] * length, dtype=object), modulus)


def one(trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    return monomial(0, trunc, 1, modulus)


def monomial(exponent: int, trunc: int, coeff: int = 1, modulus: Optional[int] = None) -> TruncatedSeries:
    """``coeff * q^exponent`` known up to ``trunc`` (the window starts at ``exponent``)."""
    if trunc <= exponent:
        return zero(trunc, trunc, modulus)
    return series([coeff], exponent, modulus, trunc)


def _check_compatible(s: TruncatedSeries, t: TruncatedSeries) -> Optional[int]:
    if s.modulus != t.modulus:
        raise ModulusMismatch(f"modulus {s.modulus} vs {t.modulus}")
    return s.modulus


def _finish(work: np.ndarray, modulus: Optional[int]) -> np.ndarray:
    if modulus is not None:
        work %= modulus
    return work


def _empty_work(length: int, modulus: Optional[int]) -> np.ndarray:
    if _is_machine(modulus):
        return np.zeros(length, np.int64)
    return np.array([0] * length, dtype=object)


def series_add(s: TruncatedSeries, t: TruncatedSeries) -> TruncatedSeries:
    modulus = _check_compatible(s, t)
    val = min(s.val, t.val)
    trunc = min(s.trunc, t.trunc)
    if trunc <= val:
        return zero(trunc, trunc, modulus)
    out = _empty_work(trunc - val, modulus)
    for part in (s, t):
        hi = trunc - part.val
        if hi > 0:
            out[part.val - val : trunc - val] += part.work()[:hi]
    return TruncatedSeries._trusted(val, _finish(out, modulus), modulus)


def series_neg(s: TruncatedSeries) -> TruncatedSeries:
    return series_scale(s, -1)


def series_sub(s: TruncatedSeries, t: TruncatedSeries) -> TruncatedSeries:
    return series_add(s, series_neg(t))


def series_scale(s: TruncatedSeries, c: int) -> TruncatedSeries:
    """Multiply every coefficient by the integer ``c``."""
    c = int(c)
    if s.modulus is not None:
        c %= s.modulus
    return TruncatedSeries._trusted(s.val, _finish(s.work() * c, s.modulus), s.modulus)


def series_mul(s: TruncatedSeries, t: TruncatedSeries) -> TruncatedSeries:
    """Cauchy product on the largest window where it is exact."""
    modulus = _check_compatible(s, t)
    val = s.val + t.val
    trunc = min(s.trunc + t.val, t.trunc + s.val)
    length = trunc - val
    if length <= 0:
        raise WindowError("product window is empty")
    a = s.work()[:length]
    b = t.work()[:length]
    if _is_machine(modulus):
        out = _kernels.convolve_mod(a, b, length, modulus)
    else:
        out = _finish(np.convolve(a, b)[:length].astype(object), modulus)
    return TruncatedSeries._trusted(val, out, modulus)


def schoolbook_mul(s: TruncatedSeries, t: TruncatedSeries) -> TruncatedSeries:
    """Reference O(T^2) product in plain Python integers."""
    modulus = _check_compatible(s, t)
    val = s.val + t.val
    length = min(s.trunc + t.val, t.trunc + s.val) - val
    if length <= 0:
        raise WindowError("product window is empty")
    a, b = s.to_list(), t.to_list()
    out = [0] * length
    for i in range(length):
        for k in range(length - i):
            out[i + k] += a[i] * b[k]
    return series(out, val, modulus)


def _divide_object(a: np.ndarray, length: int, m: int, plus: bool, modulus: Optional[int]) -> None:
    rows = -(-length // m)
    block = np.array([0] * (rows * m), dtype=object)
    block[:length] = a[:length]
    block = block.reshape(rows, m)
    if plus:
        signs = np.array([1 - 2 * (r & 1) for r in range(rows)], dtype=object)[:, None]
        block = np.cumsum(block * signs, axis=0) * signs
    else:
        block = np.cumsum(block, axis=0)
    flat = block.reshape(-1)[:length]
    if modulus is not None:
        flat %= modulus
    a[:length] = flat


def _multiply_object(a: np.ndarray, length: int, m: int, plus: bool, modulus: Optional[int]) -> None:
    if m >= length:
        return
    head = a[: length - m].copy()
    if plus:
        a[m:length] += head
    else:
        a[m:length] -= head
    if modulus is not None:
        a[:length] %= modulus


def divide_inplace(a: np.ndarray, length: int, m: int, plus: bool, modulus: Optional[int]) -> None:
    """Divide the work buffer prefix ``a[:length]`` by ``1 - q^m`` (``1 + q^m`` if ``plus``)."""
    if m >= length:
        return
    if a.dtype == np.int64:
        _kernels.geometric_divide_mod(a, length, m, plus, modulus)
    else:
        _divide_object(a, length, m, plus, modulus)


def multiply_inplace(a: np.ndarray, length: int, m: int, plus: bool, modulus: Optional[int]) -> None:
    """Multiply the work buffer prefix ``a[:length]`` by ``1 - q^m`` (``1 + q^m`` if ``plus``)."""
    if m >= length:
        return
    if a.dtype == np.int64:
        _kernels.geometric_multiply_mod(a, length, m, plus, modulus)
    else:
        _multiply_object(a, length, m, plus, modulus)


def geometric_divide(s: TruncatedSeries, m: int, *, plus: bool = False) -> TruncatedSeries:
    """Return ``s / (1 - q^m)`` (or ``s / (1 + q^m)``) on the same window."""
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    a = s.work()
    divide_inplace(a, len(a), m, plus, s.modulus)
    return TruncatedSeries._trusted(s.val, a, s.modulus)


def geometric_multiply(s: TruncatedSeries, m: int, *, plus: bool = False) -> TruncatedSeries:
    """Return ``s * (1 - q^m)`` (or ``s * (1 + q^m)``) on the same window."""
    if m <= 0:
        raise ValueError(f"m must be positive, got {m}")
    a = s.work()
    multiply_inplace(a, len(a), m, plus, s.modulus)
    return TruncatedSeries._trusted(s.val, a, s.modulus)


def pochhammer(sign: int, a: int, b: int, n: int, trunc: int, modulus: Optional[int] = None) -> TruncatedSeries:
    """``(sign * q^a; q^b)_n``, i.e. the product of ``1 - sign*q^(a+k*b)`` for k < n."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if a < 1 or b < 1 or n < 0:
        raise ValueError("need a >= 1, b >= 1, n >= 0")
    work = one(trunc, modulus).work()
    for k in range(n):
        e = a + k * b
        if e >= trunc:
            break
        multiply_inplace(work, trunc, e, sign == -1, modulus)
    return TruncatedSeries._trusted(0, work, modulus)


def reduce_mod(s: TruncatedSeries, m: int) -> TruncatedSeries:
    """Reduce coefficients into [0, m)."""
    if m < 2:
        raise ValueError("modulus must be >= 2")
    if s.modulus is not None and s.modulus % m:
        raise ModulusMismatch(f"cannot reduce a series mod {s.modulus} to mod {m}")
    if s.modulus is None:
        work = s.coeffs.astype(object) % m
        if _is_machine(m):
            work = work.astype(np.int64)
        return TruncatedSeries._trusted(s.val, work, m)
    if _is_machine(m):
        return TruncatedSeries._trusted(s.val, s.coeffs.astype(np.int64) % m, m)
    return TruncatedSeries._trusted(s.val, s.coeffs.astype(object) % m, m)


def shift(s: TruncatedSeries, k: int) -> TruncatedSeries:
    """Multiply by ``q^k``; the window moves with the series."""
    return TruncatedSeries._trusted(s.val + k, s.coeffs.copy(), s.modulus)


def restrict(s: TruncatedSeries, lo: int, hi: int) -> TruncatedSeries:
    """The sub-window ``[lo, hi)``; zero-extended below ``val``, never above ``trunc``."""
    if hi > s.trunc:
        raise WindowError(f"cannot extend window to {hi} (trunc={s.trunc})")
    if hi <= lo:
        return zero(hi, hi, s.modulus)
    out = _empty_work(hi - lo, s.modulus)
    start = max(lo, s.val)
    if start < hi:
        out[start - lo :] = s.work()[start - s.val : hi - s.val]
    return TruncatedSeries._trusted(lo, out, s.modulus)


def common_window(*items: TruncatedSeries) -> Sequence[TruncatedSeries]:
    """Restrict all series to the window shared by every one of them."""
    lo = min(x.val for x in items)
    hi = min(x.trunc for x in items)
    return [restrict(x, lo, hi) for x in items]
